//! Open-boundary spectra, edge-state detection and Laughlin pumping.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::bloch::{hofstadter_bloch, rational_approx, BlochModel};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::lattice::{assemble_hamiltonian, insert_vacancy_flux, LatticeGraph};
use crate::linalg::{eigh, CMatrix, CVector, C64};
use crate::models::{AnnulusLattice, AnnulusParams, hofstadter_annulus};

/// Eigen-decomposition with per-state localization data.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// Column `i` belongs to `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
    /// Internal dimension per site.
    pub dim: usize,
    /// `sum_i p_i^2` over site probabilities.
    pub ipr: Vec<f64>,
    /// Edge weight per state; empty until [`SpectrumResult::annotate`].
    pub edge_weight: Vec<f64>,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn state(&self, i: usize) -> CVector {
        self.eigenvectors.column(i).into_owned()
    }

    pub fn site_probabilities(&self, i: usize) -> Vec<f64> {
        site_probabilities(self.eigenvectors.column(i).iter().copied(), self.dim)
    }

    /// Fills `edge_weight` using the given geometry.
    pub fn annotate(&mut self, geom: &EdgeGeometry, edge_depth: usize) {
        self.edge_weight = (0..self.len())
            .map(|i| geom.edge_weight(&self.site_probabilities(i), edge_depth))
            .collect();
    }
}

pub fn site_probabilities(amps: impl IntoIterator<Item = C64>, dim: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    for (k, z) in amps.into_iter().enumerate() {
        acc += z.norm_sqr();
        if (k + 1) % dim == 0 {
            out.push(acc);
            acc = 0.0;
        }
    }
    out
}

/// Dense eigensolve of `h`, whose sites carry `dim` components each.
pub fn diagonalize(h: &CMatrix, dim: usize) -> Result<SpectrumResult> {
    if dim == 0 || !h.nrows().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: h.nrows() });
    }
    let e = eigh(h)?;
    let ipr = (0..e.len())
        .map(|i| {
            site_probabilities(e.vectors.column(i).iter().copied(), dim)
                .iter()
                .map(|p| p * p)
                .sum()
        })
        .collect();
    Ok(SpectrumResult {
        eigenvalues: e.values,
        eigenvectors: e.vectors,
        dim,
        ipr,
        edge_weight: vec![],
    })
}

pub fn diagonalize_graph(g: &LatticeGraph) -> Result<SpectrumResult> {
    diagonalize(&assemble_hamiltonian(g)?, g.dim())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTag {
    Outer,
    Inner,
    Left,
    Right,
    Bulk,
}

impl EdgeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeTag::Outer => "outer",
            EdgeTag::Inner => "inner",
            EdgeTag::Left => "left",
            EdgeTag::Right => "right",
            EdgeTag::Bulk => "bulk",
        }
    }
}

/// Named boundaries of a lattice with graph distances of every site to each
/// of them.
#[derive(Clone, Debug)]
pub struct EdgeGeometry {
    pub tags: Vec<EdgeTag>,
    /// `depth[b][i]`: hops from site `i` to boundary `b`.
    pub depth: Vec<Vec<usize>>,
    /// Positions, for envelope fits.
    pub positions: Vec<[f64; 2]>,
    pub boundary_sites: Vec<Vec<usize>>,
}

impl EdgeGeometry {
    pub fn new(graph: &LatticeGraph, boundaries: Vec<(EdgeTag, Vec<usize>)>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::Geometry("no boundary given".into()));
        }
        let adj = graph.neighbours();
        let n = graph.n_sites();
        let mut tags = Vec::new();
        let mut depth = Vec::new();
        let mut boundary_sites = Vec::new();
        for (tag, sites) in boundaries {
            if sites.is_empty() {
                return Err(Error::Geometry(format!("{} boundary is empty", tag.as_str())));
            }
            let mut dist = vec![usize::MAX; n];
            let mut queue = VecDeque::new();
            for &s in &sites {
                if s >= n {
                    return Err(Error::Geometry(format!("boundary site {s} does not exist")));
                }
                dist[s] = 0;
                queue.push_back(s);
            }
            while let Some(i) = queue.pop_front() {
                for &j in &adj[i] {
                    if dist[j] == usize::MAX {
                        dist[j] = dist[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
            tags.push(tag);
            depth.push(dist);
            boundary_sites.push(sites);
        }
        Ok(EdgeGeometry {
            tags,
            depth,
            positions: graph.sites().iter().map(|s| s.position).collect(),
            boundary_sites,
        })
    }

    /// First and last site of a chain.
    pub fn chain(graph: &LatticeGraph) -> Result<Self> {
        let n = graph.n_sites();
        if n < 2 {
            return Err(Error::Geometry("chain needs at least two sites".into()));
        }
        Self::new(graph, vec![(EdgeTag::Left, vec![0]), (EdgeTag::Right, vec![n - 1])])
    }

    pub fn annulus(a: &AnnulusLattice) -> Result<Self> {
        Self::new(&a.graph, vec![(EdgeTag::Outer, a.outer.clone()), (EdgeTag::Inner, a.inner.clone())])
    }

    /// Sites on the bounding box of the site positions.
    pub fn perimeter(graph: &LatticeGraph) -> Result<Self> {
        let pos: Vec<[f64; 2]> = graph.sites().iter().map(|s| s.position).collect();
        let lo = |c: usize| pos.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
        let hi = |c: usize| pos.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max);
        let (x0, x1, y0, y1) = (lo(0), hi(0), lo(1), hi(1));
        let on = |p: &[f64; 2]| {
            (p[0] - x0).abs() < 1e-9 || (p[0] - x1).abs() < 1e-9 || (p[1] - y0).abs() < 1e-9 || (p[1] - y1).abs() < 1e-9
        };
        let sites = (0..pos.len()).filter(|&i| on(&pos[i])).collect();
        Self::new(graph, vec![(EdgeTag::Outer, sites)])
    }

    pub fn n_sites(&self) -> usize {
        self.positions.len()
    }

    fn min_depth(&self, i: usize) -> usize {
        self.depth.iter().map(|d| d[i]).min().unwrap()
    }

    /// Probability within `edge_depth` site layers of any boundary
    /// (`edge_depth = 1` counts the boundary sites only).
    pub fn edge_weight(&self, probs: &[f64], edge_depth: usize) -> f64 {
        (0..probs.len()).filter(|&i| self.min_depth(i) < edge_depth).map(|i| probs[i]).sum()
    }

    /// Probability within `edge_depth` layers of boundary `b`.
    pub fn weight_near(&self, probs: &[f64], b: usize, edge_depth: usize) -> f64 {
        (0..probs.len()).filter(|&i| self.depth[b][i] < edge_depth).map(|i| probs[i]).sum()
    }

    /// Probability on the sites closer to boundary `b` than to any other;
    /// ties are split evenly.
    pub fn weight_closest(&self, probs: &[f64], b: usize) -> f64 {
        let mut w = 0.0;
        for (i, p) in probs.iter().enumerate() {
            let m = self.min_depth(i);
            if self.depth[b][i] == m {
                let ties = self.depth.iter().filter(|d| d[i] == m).count();
                w += p / ties as f64;
            }
        }
        w
    }

    /// Index of the boundary holding most of the probability.
    pub fn dominant(&self, probs: &[f64]) -> usize {
        (0..self.tags.len())
            .max_by(|&a, &b| self.weight_closest(probs, a).total_cmp(&self.weight_closest(probs, b)))
            .unwrap()
    }

    /// Signed side coordinate in `[-1, 1]`: `+1` on boundary 0, `-1` on
    /// boundary 1. Zero when there is a single boundary.
    fn side(&self, i: usize) -> f64 {
        if self.tags.len() < 2 {
            return 0.0;
        }
        let (a, b) = (self.depth[0][i] as f64, self.depth[1][i] as f64);
        if a + b == 0.0 {
            0.0
        } else {
            (b - a) / (a + b)
        }
    }
}

/// An in-gap state localized at a boundary.
#[derive(Clone, Debug)]
pub struct EdgeMode {
    /// Energy expectation value.
    pub energy: f64,
    /// Eigenstates mixed into this mode.
    pub states: Vec<usize>,
    pub edge_weight: f64,
    pub tag: EdgeTag,
    pub amplitudes: CVector,
}

/// Options for [`detect_edge_modes`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeModeOptions {
    pub edge_depth: usize,
    pub weight_threshold: f64,
    /// Eigenvalues closer than this are treated as one degenerate cluster
    /// and rotated into boundary-localized combinations.
    pub degeneracy_tol: f64,
}

impl Default for EdgeModeOptions {
    fn default() -> Self {
        EdgeModeOptions { edge_depth: 1, weight_threshold: 0.5, degeneracy_tol: 1e-3 }
    }
}

/// States with energy in `window` whose edge weight reaches the threshold.
pub fn detect_edge_modes(
    s: &SpectrumResult,
    geom: &EdgeGeometry,
    window: (f64, f64),
    opts: &EdgeModeOptions,
) -> Result<Vec<EdgeMode>> {
    if geom.n_sites() * s.dim != s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), got: geom.n_sites() * s.dim });
    }
    let (lo, hi) = window;
    if !(lo < hi) || s.is_empty() || hi < s.eigenvalues[0] || lo > *s.eigenvalues.last().unwrap() {
        return Err(Error::param("gap_window", "window must be ordered and inside the spectrum"));
    }
    let cand: Vec<usize> = (0..s.len()).filter(|&i| s.eigenvalues[i] > lo && s.eigenvalues[i] < hi).collect();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &cand {
        match clusters.last_mut() {
            Some(c) if s.eigenvalues[i] - s.eigenvalues[*c.last().unwrap()] < opts.degeneracy_tol => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let mut modes = Vec::new();
    for cl in clusters {
        for (v, energy) in rotate_cluster(s, geom, &cl) {
            let probs = site_probabilities(v.iter().copied(), s.dim);
            let w = geom.edge_weight(&probs, opts.edge_depth);
            if w >= opts.weight_threshold {
                modes.push(EdgeMode {
                    energy,
                    states: cl.clone(),
                    edge_weight: w,
                    tag: geom.tags[geom.dominant(&probs)],
                    amplitudes: v,
                });
            }
        }
    }
    Ok(modes)
}

/// Diagonalizes the side coordinate inside a degenerate cluster, so that
/// hybridized end states separate into one state per boundary.
fn rotate_cluster(s: &SpectrumResult, geom: &EdgeGeometry, cl: &[usize]) -> Vec<(CVector, f64)> {
    if cl.len() == 1 || geom.tags.len() < 2 {
        return cl.iter().map(|&i| (s.state(i), s.eigenvalues[i])).collect();
    }
    let m = cl.len();
    let d = s.dim;
    let mut x = CMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let mut acc = C64::default();
            for r in 0..s.eigenvectors.nrows() {
                acc += s.eigenvectors[(r, cl[a])].conj() * geom.side(r / d) * s.eigenvectors[(r, cl[b])];
            }
            x[(a, b)] = acc;
        }
    }
    let rot = crate::linalg::eigh_unchecked(&x);
    (0..m)
        .map(|k| {
            let coeffs = rot.vectors.column(k);
            let mut v = CVector::zeros(s.eigenvectors.nrows());
            let mut e = 0.0;
            for a in 0..m {
                v += s.eigenvectors.column(cl[a]) * coeffs[a];
                e += coeffs[a].norm_sqr() * s.eigenvalues[cl[a]];
            }
            (v, e)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub ipr: f64,
    pub edge_weight: f64,
    pub dominant: EdgeTag,
    /// Exponential decay length of the envelope away from the dominant
    /// boundary, in lattice units; `None` if the envelope does not decay.
    pub decay_length: Option<f64>,
}

pub fn localization_metrics(state: &CVector, dim: usize, geom: &EdgeGeometry, edge_depth: usize) -> Result<Localization> {
    let norm = state.norm();
    if !(norm > 0.0) {
        return Err(Error::param("state", "zero vector"));
    }
    if state.len() != geom.n_sites() * dim {
        return Err(Error::DimensionMismatch { expected: geom.n_sites() * dim, got: state.len() });
    }
    let probs: Vec<f64> = site_probabilities(state.iter().copied(), dim).iter().map(|p| p / (norm * norm)).collect();
    let b = geom.dominant(&probs);
    Ok(Localization {
        ipr: probs.iter().map(|p| p * p).sum(),
        edge_weight: geom.edge_weight(&probs, edge_depth),
        dominant: geom.tags[b],
        decay_length: decay_length(&probs, geom, b),
    })
}

/// Fits `ln max|psi| = a - r / xi` over unit-width distance bins from
/// boundary `b`, using the bins out to half the largest distance.
fn decay_length(probs: &[f64], geom: &EdgeGeometry, b: usize) -> Option<f64> {
    let bpos: Vec<[f64; 2]> = geom.boundary_sites[b].iter().map(|&i| geom.positions[i]).collect();
    let dist: Vec<f64> = geom
        .positions
        .iter()
        .map(|p| bpos.iter().map(|q| (p[0] - q[0]).hypot(p[1] - q[1])).fold(f64::INFINITY, f64::min))
        .collect();
    let rmax = dist.iter().cloned().fold(0.0, f64::max);
    let nbins = (rmax / 2.0).floor() as usize + 1;
    let mut env = vec![0.0f64; nbins];
    for (i, &r) in dist.iter().enumerate() {
        let k = (r + 1e-9).floor() as usize;
        if k < nbins {
            env[k] = env[k].max(probs[i].sqrt());
        }
    }
    let peak = env.iter().cloned().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = env
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 1e-10 * peak)
        .map(|(k, &a)| (k as f64, a.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if slope < 0.0 {
        Some(-1.0 / slope)
    } else {
        None
    }
}

/// Bulk band edges of a periodic model on an `nk x nk` grid.
pub fn band_extents(model: &dyn BlochModel, nk: usize, exec: Execution) -> Vec<(f64, f64)> {
    let nb = model.n_bands();
    let step = TAU / nk as f64;
    let all = exec::map_range(exec, nk * nk, |idx| {
        let k = [(idx / nk) as f64 * step, (idx % nk) as f64 * step];
        crate::linalg::eigh_unchecked(&model.hamiltonian(k)).values
    });
    (0..nb)
        .map(|b| {
            all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, v| (acc.0.min(v[b]), acc.1.max(v[b])))
        })
        .collect()
}

/// A bulk gap between bands `h` and `h + 1` (1-based `h`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapWindow {
    pub h: usize,
    pub lo: f64,
    pub hi: f64,
}

impl GapWindow {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Gaps of the bulk Hofstadter spectrum at flux `phi` per plaquette.
/// Touching bands yield no window for that gap.
pub fn hofstadter_gaps(phi: f64, hopping: f64, exec: Execution) -> Result<Vec<GapWindow>> {
    let frac = (phi / TAU).rem_euclid(1.0);
    let (p, q) = rational_approx(frac, 64, 1e-9)
        .ok_or_else(|| Error::param("phi", "flux per plaquette must be 2 pi p/q with q <= 64"))?;
    if q == 1 || p == 0 {
        return Ok(vec![]);
    }
    let model = hofstadter_bloch(p, q, hopping)?;
    let ext = band_extents(&model, 48, exec);
    Ok((1..q as usize)
        .filter(|&h| ext[h].0 - ext[h - 1].1 > 1e-6)
        .map(|h| GapWindow { h, lo: ext[h - 1].1, hi: ext[h].0 })
        .collect())
}

/// Spectra of an annulus over a grid of threaded fluxes.
#[derive(Clone, Debug)]
pub struct PumpSweep {
    /// The annulus at `alpha = 0`.
    pub lattice: AnnulusLattice,
    pub geometry: EdgeGeometry,
    pub alphas: Vec<f64>,
    pub spectra: Vec<SpectrumResult>,
    /// Per `alpha`, per state.
    pub tags: Vec<Vec<EdgeTag>>,
    pub gaps: Vec<GapWindow>,
    pub edge_depth: usize,
    pub weight_threshold: f64,
    pub exec: Execution,
}

/// Hamiltonian of the annulus with flux `alpha` in the vacancy.
pub fn annulus_hamiltonian(lattice: &AnnulusLattice, alpha: f64) -> Result<CMatrix> {
    let mut flux = lattice.flux.clone();
    flux.alpha = alpha - lattice.flux.alpha;
    assemble_hamiltonian(&insert_vacancy_flux(&lattice.graph, &flux)?)
}

/// Options for [`laughlin_pump_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpOptions {
    pub edge_depth: usize,
    pub weight_threshold: f64,
}

impl Default for PumpOptions {
    fn default() -> Self {
        PumpOptions { edge_depth: 1, weight_threshold: 0.25 }
    }
}

pub fn laughlin_pump_sweep(params: &AnnulusParams, alphas: &[f64], opts: &PumpOptions, exec: Execution) -> Result<PumpSweep> {
    if alphas.len() < 2
        || alphas[0].abs() > 1e-12
        || (alphas[alphas.len() - 1] - TAU).abs() > 1e-9
        || alphas.windows(2).any(|w| !(w[1] > w[0]))
    {
        return Err(Error::param("alphas", "grid must increase from 0 to 2 pi"));
    }
    let mut p0 = params.clone();
    p0.alpha = 0.0;
    let lattice = hofstadter_annulus(&p0)?;
    let geometry = EdgeGeometry::annulus(&lattice)?;
    let spectra = exec::try_map(exec, alphas, |&a| diagonalize(&annulus_hamiltonian(&lattice, a)?, 1))?;
    let tags = spectra
        .iter()
        .map(|s| {
            (0..s.len())
                .map(|i| tag_state(&geometry, &s.site_probabilities(i), opts.edge_depth, opts.weight_threshold))
                .collect()
        })
        .collect();
    let gaps = hofstadter_gaps(params.phi, params.hopping, exec)?;
    Ok(PumpSweep {
        lattice,
        geometry,
        alphas: alphas.to_vec(),
        spectra,
        tags,
        gaps,
        edge_depth: opts.edge_depth,
        weight_threshold: opts.weight_threshold,
        exec,
    })
}

fn tag_state(geom: &EdgeGeometry, probs: &[f64], edge_depth: usize, threshold: f64) -> EdgeTag {
    let mut best = (EdgeTag::Bulk, threshold);
    for b in 0..geom.tags.len() {
        let w = geom.weight_near(probs, b, edge_depth);
        if w >= best.1 {
            best = (geom.tags[b], w);
        }
    }
    best.0
}

/// A tracked branch passing through an energy level between two flux
/// values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub alpha: f64,
    /// `+1` upward, `-1` downward.
    pub direction: i64,
    /// Boundary holding most of the crossing state.
    pub tag: EdgeTag,
    /// Difference between the weights on the two sides of the annulus;
    /// small values mark inner/outer hybrids.
    pub purity: f64,
}

/// Result of a spectral-flow count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlow {
    pub energy: f64,
    pub crossings: Vec<Crossing>,
    /// Flux intervals that could not be tracked above the overlap
    /// threshold even after refinement.
    pub unresolved: usize,
}

impl SpectralFlow {
    /// Smallest crossing purity, 1 when there are no crossings.
    pub fn min_purity(&self) -> f64 {
        self.crossings.iter().map(|c| c.purity).fold(1.0, f64::min)
    }

    /// Net number of branches with this tag moving down through the energy
    /// per period. Downward flow of outer-edge branches under increasing
    /// `alpha` is counted as positive, which makes the outer count equal to
    /// the edge winding `w_h` of the gap.
    pub fn count(&self, tag: EdgeTag) -> i64 {
        -self.crossings.iter().filter(|c| c.tag == tag).map(|c| c.direction).sum::<i64>()
    }
}

pub const OVERLAP_MIN: f64 = 0.7;
const MAX_REFINE: usize = 10;

struct Snap {
    alpha: f64,
    values: Vec<f64>,
    vectors: CMatrix,
}

impl PumpSweep {
    fn snap(&self, i: usize) -> Snap {
        Snap {
            alpha: self.alphas[i],
            values: self.spectra[i].eigenvalues.clone(),
            vectors: self.spectra[i].eigenvectors.clone(),
        }
    }

    fn snap_at(&self, alpha: f64) -> Result<Snap> {
        let e = eigh(&annulus_hamiltonian(&self.lattice, alpha)?)?;
        Ok(Snap { alpha, values: e.values, vectors: e.vectors })
    }

    pub fn gap(&self, h: usize) -> Result<GapWindow> {
        self.gaps
            .iter()
            .copied()
            .find(|g| g.h == h)
            .ok_or_else(|| Error::GapClosing(format!("gap {h} is closed or absent in the bulk spectrum")))
    }

    /// Maximum difference between the spectra at the two ends of the grid.
    pub fn periodicity_error(&self) -> f64 {
        let (a, b) = (&self.spectra[0].eigenvalues, &self.spectra[self.spectra.len() - 1].eigenvalues);
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Tracked spectral flow through gap `h`.
    ///
    /// Overlap tracking follows adiabatic branches, so an inner/outer
    /// avoided crossing sitting on the reference level removes one outer and
    /// one inner crossing of opposite sign, and can only lower the count.
    /// The flow is therefore evaluated on nine levels across the central part
    /// of the gap and the level with the largest net edge flow is kept,
    /// preferring levels near the midline on ties.
    pub fn spectral_flow(&self, h: usize) -> Result<SpectralFlow> {
        let g = self.gap(h)?;
        let mut best: Option<(i64, SpectralFlow)> = None;
        for f in [0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65, 0.3, 0.7] {
            let e = g.lo + f * g.width();
            let half = 0.45 * g.width() * (1.0 - 2.0 * (f - 0.5f64).abs());
            let flow = self.spectral_flow_at(e, half)?;
            let score: i64 = self.geometry.tags.iter().map(|&t| flow.count(t).abs()).sum();
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, flow));
            }
        }
        Ok(best.unwrap().1)
    }

    /// Tracked spectral flow through `energy`; states within `half_width`
    /// of it are followed by eigenvector overlap.
    pub fn spectral_flow_at(&self, energy: f64, half_width: f64) -> Result<SpectralFlow> {
        if !(half_width > 0.0) {
            return Err(Error::param("half_width", "must be positive"));
        }
        let steps: Vec<usize> = (0..self.alphas.len() - 1).collect();
        let parts = exec::try_map(self.exec, &steps, |&i| {
            let mut out = (Vec::new(), 0usize);
            self.track(&self.snap(i), &self.snap(i + 1), energy, half_width, 0, &mut out)?;
            Ok::<_, Error>(out)
        })?;
        let mut flow = SpectralFlow { energy, crossings: vec![], unresolved: 0 };
        for (c, u) in parts {
            flow.crossings.extend(c);
            flow.unresolved += u;
        }
        Ok(flow)
    }

    pub fn count_spectral_flow(&self, h: usize, tag: EdgeTag) -> Result<i64> {
        Ok(self.spectral_flow(h)?.count(tag))
    }

    fn track(
        &self,
        a: &Snap,
        b: &Snap,
        e0: f64,
        half: f64,
        depth: usize,
        out: &mut (Vec<Crossing>, usize),
    ) -> Result<()> {
        let win = |s: &Snap| -> Vec<usize> { (0..s.values.len()).filter(|&i| (s.values[i] - e0).abs() < half).collect() };
        let (wa, wb) = (win(a), win(b));
        if wa.is_empty() && wb.is_empty() {
            return Ok(());
        }
        let mut pairs = Vec::new();
        for &i in &wa {
            for &j in &wb {
                let ov = a.vectors.column(i).dotc(&b.vectors.column(j)).norm();
                pairs.push((ov, i, j));
            }
        }
        pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut used_a = vec![false; a.values.len()];
        let mut used_b = vec![false; b.values.len()];
        let mut matched = Vec::new();
        for (ov, i, j) in pairs {
            if !used_a[i] && !used_b[j] {
                used_a[i] = true;
                used_b[j] = true;
                matched.push((ov, i, j));
            }
        }
        let core = |e: f64| (e - e0).abs() < 0.5 * half;
        let poor = matched.iter().any(|&(ov, i, j)| ov < OVERLAP_MIN && (core(a.values[i]) || core(b.values[j])))
            || wa.iter().any(|&i| !used_a[i] && core(a.values[i]))
            || wb.iter().any(|&j| !used_b[j] && core(b.values[j]));
        if poor && depth < MAX_REFINE {
            let m = self.snap_at(0.5 * (a.alpha + b.alpha))?;
            self.track(a, &m, e0, half, depth + 1, out)?;
            return self.track(&m, b, e0, half, depth + 1, out);
        }
        if poor {
            out.1 += 1;
        }
        for (_, i, j) in matched {
            let (ea, eb) = (a.values[i] - e0, b.values[j] - e0);
            let direction = if ea < 0.0 && eb >= 0.0 {
                1
            } else if ea >= 0.0 && eb < 0.0 {
                -1
            } else {
                continue;
            };
            let pa = site_probabilities(a.vectors.column(i).iter().copied(), 1);
            let pb = site_probabilities(b.vectors.column(j).iter().copied(), 1);
            let probs: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| 0.5 * (x + y)).collect();
            let t = ea.abs() / (ea.abs() + eb.abs());
            let w: Vec<f64> = (0..self.geometry.tags.len()).map(|k| self.geometry.weight_closest(&probs, k)).collect();
            let top = self.geometry.dominant(&probs);
            let second = (0..w.len()).filter(|&k| k != top).map(|k| w[k]).fold(0.0, f64::max);
            out.0.push(Crossing {
                alpha: a.alpha + t * (b.alpha - a.alpha),
                direction,
                tag: self.geometry.tags[top],
                purity: w[top] - second,
            });
        }
        Ok(())
    }

    /// Branch label for every `(alpha, level)`, continued between
    /// neighbouring flux values by greedy overlap matching.
    pub fn branch_ids(&self) -> Vec<Vec<usize>> {
        let n = self.spectra[0].len();
        let mut ids = vec![(0..n).collect::<Vec<usize>>()];
        for w in self.spectra.windows(2) {
            let ov = w[0].eigenvectors.adjoint() * &w[1].eigenvectors;
            let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    pairs.push((ov[(i, j)].norm(), i, j));
                }
            }
            pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            let prev = ids.last().unwrap();
            let mut next = vec![usize::MAX; n];
            let mut used = vec![false; n];
            for (_, i, j) in pairs {
                if !used[i] && next[j] == usize::MAX {
                    used[i] = true;
                    next[j] = prev[i];
                }
            }
            ids.push(next);
        }
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Link;

    #[test]
    fn pauli_x_spectrum() {
        let mut g = LatticeGraph::new(1).unwrap();
        g.add_site(None, [0.0, 0.0]);
        g.add_site(None, [1.0, 0.0]);
        g.add_link(Link::scalar(0, 1, 1.0, 0.0)).unwrap();
        let s = diagonalize_graph(&g).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14 && (s.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!((s.ipr[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn ipr_limits() {
        let mut g = LatticeGraph::new(1).unwrap();
        for i in 0..5 {
            g.add_site(None, [i as f64, 0.0]);
        }
        let geom = EdgeGeometry::new(&g, vec![(EdgeTag::Left, vec![0])]).unwrap();
        let uniform = CVector::from_element(5, C64::new(1.0 / 5f64.sqrt(), 0.0));
        assert!((localization_metrics(&uniform, 1, &geom, 1).unwrap().ipr - 0.2).abs() < 1e-14);
        let mut delta = CVector::zeros(5);
        delta[2] = C64::new(1.0, 0.0);
        assert!((localization_metrics(&delta, 1, &geom, 1).unwrap().ipr - 1.0).abs() < 1e-14);
        assert!(localization_metrics(&CVector::zeros(5), 1, &geom, 1).is_err());
    }

    #[test]
    fn empty_boundary_rejected() {
        let mut g = LatticeGraph::new(1).unwrap();
        g.add_site(None, [0.0, 0.0]);
        assert!(matches!(EdgeGeometry::new(&g, vec![(EdgeTag::Outer, vec![])]), Err(Error::Geometry(_))));
    }
}

//! Lattice graphs with link variables, Peierls phases and flux bookkeeping.
//!
//! A [`Link`] from site `a` to site `b` with amplitude `J`, phase `theta` and
//! matrix `U` contributes the hopping term `J e^{i theta} U` for a particle
//! moving from `a` to `b`, i.e. the block `H[b, a]`, together with its
//! Hermitian conjugate in `H[a, b]`. Transporting along a path multiplies the
//! link factors with later hops on the left.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, cis, hermitian_deviation, matrix_from_pairs, matrix_to_pairs, max_abs, unitarity_deviation, CMatrix,
    CsrMatrix, Triplet, C64,
};

/// Tolerance on `U^dagger U = 1` for gauge links.
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteId {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub id: SiteId,
    pub position: [f64; 2],
    /// `d x d` Hermitian onsite block.
    pub onsite: CMatrix,
    /// Single-particle decay rate `kappa >= 0`.
    pub loss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    /// `U` is a unitary link variable of the gauge group.
    #[default]
    Gauge,
    /// `U` is an arbitrary hopping block (spin-orbit or orbital mixing);
    /// only its shape is checked.
    Block,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub amplitude: f64,
    pub phase: f64,
    pub matrix: CMatrix,
    pub kind: LinkKind,
}

impl Link {
    /// Scalar link with `U = 1`.
    pub fn scalar(from: usize, to: usize, amplitude: f64, phase: f64) -> Self {
        Link::gauge(from, to, amplitude, phase, CMatrix::identity(1, 1))
    }

    /// Real hopping of either sign; negative values become phase `pi`.
    pub fn real(from: usize, to: usize, value: f64) -> Self {
        if value < 0.0 {
            Link::scalar(from, to, -value, std::f64::consts::PI)
        } else {
            Link::scalar(from, to, value, 0.0)
        }
    }

    pub fn gauge(from: usize, to: usize, amplitude: f64, phase: f64, matrix: CMatrix) -> Self {
        Link {
            from,
            to,
            amplitude,
            phase,
            matrix,
            kind: LinkKind::Gauge,
        }
    }

    /// General hopping block `B`, entering as `H[to, from] = B`.
    pub fn block(from: usize, to: usize, matrix: CMatrix) -> Self {
        Link {
            from,
            to,
            amplitude: 1.0,
            phase: 0.0,
            matrix,
            kind: LinkKind::Block,
        }
    }

    /// `J e^{i theta} U`, the amplitude for a hop `from -> to`.
    pub fn hop(&self) -> CMatrix {
        &self.matrix * (cis(self.phase) * self.amplitude)
    }

    fn validate(&self, dim: usize, n_sites: usize) -> Result<()> {
        if self.from >= n_sites || self.to >= n_sites {
            return Err(Error::param(
                "link",
                format!("link {} -> {} refers to a missing site", self.from, self.to),
            ));
        }
        if self.from == self.to {
            return Err(Error::param("link", format!("self-link on site {}", self.from)));
        }
        if self.matrix.nrows() != dim || self.matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.matrix.nrows(),
            });
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0 && self.phase.is_finite()) {
            return Err(Error::param(
                "link",
                format!("link {} -> {}: amplitude must be finite and >= 0", self.from, self.to),
            ));
        }
        if self.kind == LinkKind::Gauge {
            let dev = unitarity_deviation(&self.matrix);
            if dev > UNITARY_TOL {
                return Err(Error::NonUnitaryLink {
                    from: self.from,
                    to: self.to,
                    deviation: dev,
                });
            }
        }
        Ok(())
    }
}

/// Sites, links and the internal dimension `d` of every site.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeGraph {
    dim: usize,
    sites: Vec<Site>,
    links: Vec<Link>,
    lookup: HashMap<(usize, usize), usize>,
}

impl LatticeGraph {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "internal dimension must be >= 1"));
        }
        Ok(LatticeGraph {
            dim,
            sites: Vec::new(),
            links: Vec::new(),
            lookup: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Size of the single-particle Hilbert space, `n_sites * d`.
    pub fn hilbert_dim(&self) -> usize {
        self.sites.len() * self.dim
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn site(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    /// Adds a site with zero onsite energy and no loss.
    pub fn add_site(&mut self, label: Option<&str>, position: [f64; 2]) -> usize {
        let index = self.sites.len();
        self.sites.push(Site {
            id: SiteId {
                index,
                label: label.map(str::to_owned),
            },
            position,
            onsite: CMatrix::zeros(self.dim, self.dim),
            loss: 0.0,
        });
        index
    }

    pub fn set_onsite(&mut self, site: usize, onsite: CMatrix) -> Result<()> {
        self.check_site(site)?;
        if onsite.nrows() != self.dim || onsite.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: onsite.nrows(),
            });
        }
        let dev = hermitian_deviation(&onsite);
        if dev > 1e-12 * max_abs(&onsite).max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        self.sites[site].onsite = onsite;
        Ok(())
    }

    /// Onsite `e * 1`.
    pub fn set_onsite_scalar(&mut self, site: usize, e: f64) -> Result<()> {
        let m = CMatrix::identity(self.dim, self.dim) * c(e, 0.0);
        self.set_onsite(site, m)
    }

    pub fn set_loss(&mut self, site: usize, kappa: f64) -> Result<()> {
        self.check_site(site)?;
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::param("loss", "decay rate must be finite and >= 0"));
        }
        self.sites[site].loss = kappa;
        Ok(())
    }

    pub fn add_link(&mut self, link: Link) -> Result<()> {
        link.validate(self.dim, self.sites.len())?;
        let key = (link.from.min(link.to), link.from.max(link.to));
        if self.lookup.contains_key(&key) {
            return Err(Error::param(
                "link",
                format!("duplicate link between sites {} and {}", key.0, key.1),
            ));
        }
        self.lookup.insert(key, self.links.len());
        self.links.push(link);
        Ok(())
    }

    /// The link joining `a` and `b` in either orientation.
    pub fn link_between(&self, a: usize, b: usize) -> Option<&Link> {
        self.lookup.get(&(a.min(b), a.max(b))).map(|&i| &self.links[i])
    }

    fn link_between_mut(&mut self, a: usize, b: usize) -> Option<&mut Link> {
        match self.lookup.get(&(a.min(b), a.max(b))) {
            Some(&i) => Some(&mut self.links[i]),
            None => None,
        }
    }

    /// Site indices adjacent to `i`.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.sites.len()];
        for l in &self.links {
            adj[l.from].push(l.to);
            adj[l.to].push(l.from);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Per-component decay rates, ordered like the Hilbert space.
    pub fn loss_vector(&self) -> Vec<f64> {
        self.sites
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.loss, self.dim))
            .collect()
    }

    pub fn has_loss(&self) -> bool {
        self.sites.iter().any(|s| s.loss > 0.0)
    }

    fn check_site(&self, i: usize) -> Result<()> {
        if i >= self.sites.len() {
            return Err(Error::param("site", format!("site {i} does not exist")));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for l in &self.links {
            l.validate(self.dim, self.sites.len())?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&GraphDoc::from(self)).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDoc = serde_json::from_str(text)?;
        doc.build()
    }
}

/// Serialized form of a graph. Complex matrices are row-major `[re, im]`
/// pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub dim: usize,
    pub sites: Vec<SiteDoc>,
    pub links: Vec<LinkDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDoc {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub position: [f64; 2],
    pub onsite: Vec<[f64; 2]>,
    #[serde(default)]
    pub loss: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub from: usize,
    pub to: usize,
    pub amplitude: f64,
    pub phase: f64,
    pub matrix: Vec<[f64; 2]>,
    #[serde(default)]
    pub kind: LinkKind,
}

impl From<&LatticeGraph> for GraphDoc {
    fn from(g: &LatticeGraph) -> Self {
        GraphDoc {
            dim: g.dim,
            sites: g
                .sites
                .iter()
                .map(|s| SiteDoc {
                    index: s.id.index,
                    label: s.id.label.clone(),
                    position: s.position,
                    onsite: matrix_to_pairs(&s.onsite),
                    loss: s.loss,
                })
                .collect(),
            links: g
                .links
                .iter()
                .map(|l| LinkDoc {
                    from: l.from,
                    to: l.to,
                    amplitude: l.amplitude,
                    phase: l.phase,
                    matrix: matrix_to_pairs(&l.matrix),
                    kind: l.kind,
                })
                .collect(),
        }
    }
}

impl GraphDoc {
    pub fn build(&self) -> Result<LatticeGraph> {
        let mut g = LatticeGraph::new(self.dim)?;
        for (i, s) in self.sites.iter().enumerate() {
            if s.index != i {
                return Err(Error::param("sites", format!("site {i} has index {}", s.index)));
            }
            let idx = g.add_site(s.label.as_deref(), s.position);
            g.set_onsite(idx, matrix_from_pairs(self.dim, &s.onsite)?)?;
            g.set_loss(idx, s.loss)?;
        }
        for l in &self.links {
            g.add_link(Link {
                from: l.from,
                to: l.to,
                amplitude: l.amplitude,
                phase: l.phase,
                matrix: matrix_from_pairs(self.dim, &l.matrix)?,
                kind: l.kind,
            })?;
        }
        Ok(g)
    }
}

/// Dense Hermitian Hamiltonian of size `n_sites * d`. Site `i`, component
/// `a` maps to row `i * d + a`.
pub fn assemble_hamiltonian(graph: &LatticeGraph) -> Result<CMatrix> {
    graph.validate()?;
    let d = graph.dim;
    let n = graph.hilbert_dim();
    let mut h = CMatrix::zeros(n, n);
    for (i, s) in graph.sites.iter().enumerate() {
        h.view_mut((i * d, i * d), (d, d)).copy_from(&s.onsite);
    }
    for l in &graph.links {
        let b = l.hop();
        let mut blk = h.view_mut((l.to * d, l.from * d), (d, d));
        blk += &b;
        let mut blk = h.view_mut((l.from * d, l.to * d), (d, d));
        blk += b.adjoint();
    }
    let dev = hermitian_deviation(&h);
    if dev > 1e-12 * max_abs(&h).max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(h)
}

/// Nonzero entries of the Hamiltonian, row-major.
pub fn hamiltonian_triplets(graph: &LatticeGraph) -> Result<Vec<Triplet>> {
    graph.validate()?;
    let d = graph.dim;
    let mut out = Vec::new();
    let mut push = |row: usize, col: usize, z: C64| {
        if z != C64::default() {
            out.push(Triplet {
                row,
                col,
                re: z.re,
                im: z.im,
            });
        }
    };
    for (i, s) in graph.sites.iter().enumerate() {
        for a in 0..d {
            for b in 0..d {
                push(i * d + a, i * d + b, s.onsite[(a, b)]);
            }
        }
    }
    for l in &graph.links {
        let blk = l.hop();
        for a in 0..d {
            for b in 0..d {
                push(l.to * d + a, l.from * d + b, blk[(a, b)]);
                push(l.from * d + b, l.to * d + a, blk[(a, b)].conj());
            }
        }
    }
    out.sort_by_key(|t| (t.row, t.col));
    Ok(out)
}

pub fn sparse_hamiltonian(graph: &LatticeGraph) -> Result<CsrMatrix> {
    Ok(CsrMatrix::from_triplets(graph.hilbert_dim(), &hamiltonian_triplets(graph)?))
}

/// Landau gauge `A = (0, phi * x, 0)`: flux `phi` per unit area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandauGauge {
    pub phi: f64,
}

/// Line integral of the Landau-gauge vector potential along a path of
/// axis-aligned segments.
pub fn peierls_phase(path: &[[f64; 2]], gauge: &LandauGauge) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::param("path", "needs at least two points"));
    }
    let mut theta = 0.0;
    for w in path.windows(2) {
        let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
        if dx.abs() > 1e-12 && dy.abs() > 1e-12 {
            return Err(Error::param("path", "segments must be axis-aligned"));
        }
        if dx.abs() <= 1e-12 {
            theta += gauge.phi * w[0][0] * dy;
        }
    }
    Ok(theta)
}

/// Accumulated phase and ordered matrix product along a site path.
#[derive(Clone, Debug)]
pub struct Transport {
    /// Sum of link phases, not reduced mod 2 pi.
    pub phase: f64,
    /// Product of the link matrices, later hops on the left.
    pub matrix: CMatrix,
    /// Product of amplitudes.
    pub amplitude: f64,
}

impl Transport {
    pub fn phase_mod_2pi(&self) -> f64 {
        wrap_2pi(self.phase)
    }

    /// Full transport operator `prod J e^{i theta} U`.
    pub fn operator(&self) -> CMatrix {
        &self.matrix * (cis(self.phase) * self.amplitude)
    }
}

/// Reduces an angle to `[0, 2 pi)`.
pub fn wrap_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if TAU - r < 1e-12 {
        0.0
    } else {
        r
    }
}

pub fn path_transport(graph: &LatticeGraph, path: &[usize]) -> Result<Transport> {
    let d = graph.dim;
    let mut t = Transport {
        phase: 0.0,
        matrix: CMatrix::identity(d, d),
        amplitude: 1.0,
    };
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let l = graph.link_between(a, b).ok_or(Error::MissingLink(a, b))?;
        let (ph, m) = if l.from == a {
            (l.phase, l.matrix.clone())
        } else {
            (-l.phase, l.matrix.adjoint())
        };
        t.phase += ph;
        t.matrix = m * &t.matrix;
        t.amplitude *= l.amplitude;
    }
    Ok(t)
}

/// Gauge-invariant content of a closed loop.
#[derive(Clone, Debug)]
pub struct Holonomy {
    /// Abelian flux in `[0, 2 pi)`.
    pub flux: f64,
    /// Wilson-loop matrix; the identity for scalar lattices.
    pub matrix: CMatrix,
}

/// Flux through a cycle given as its site sequence, without repeating the
/// first site.
pub fn plaquette_flux(graph: &LatticeGraph, cycle: &[usize]) -> Result<Holonomy> {
    if cycle.len() < 3 {
        return Err(Error::param("cycle", "a plaquette needs at least three sites"));
    }
    let mut closed = cycle.to_vec();
    closed.push(cycle[0]);
    let t = path_transport(graph, &closed)?;
    Ok(Holonomy {
        flux: wrap_2pi(t.phase),
        matrix: t.matrix,
    })
}

/// Uniform flux `phi` per plaquette plus an extra `alpha` threaded through a
/// vacancy. `branch_cut` lists oriented site pairs `(a, b)`; hopping `a -> b`
/// acquires `+alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxSpec {
    pub phi: f64,
    pub alpha: f64,
    pub branch_cut: Vec<(usize, usize)>,
}

/// Adds `alpha` to every link of the branch cut.
pub fn insert_vacancy_flux(graph: &LatticeGraph, flux: &FluxSpec) -> Result<LatticeGraph> {
    let mut g = graph.clone();
    let mut seen = std::collections::HashSet::new();
    for &(a, b) in &flux.branch_cut {
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::param("branch_cut", format!("link {a}-{b} listed twice")));
        }
        let l = g.link_between_mut(a, b).ok_or(Error::MissingLink(a, b))?;
        if l.from == a {
            l.phase += flux.alpha;
        } else {
            l.phase -= flux.alpha;
        }
    }
    Ok(g)
}

/// Gaussian onsite and hopping noise plus an optional strong local defect.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    #[serde(default)]
    pub sigma_onsite: f64,
    #[serde(default)]
    pub sigma_hopping: f64,
    #[serde(default)]
    pub defect_sites: Vec<usize>,
    #[serde(default)]
    pub defect_strength: f64,
    pub seed: u64,
}

/// Samples are drawn from a ChaCha8 stream: one per site in index order for
/// the onsite shift, then one per link for the amplitude.
pub fn apply_disorder(graph: &LatticeGraph, spec: &DisorderSpec) -> Result<LatticeGraph> {
    if !(spec.sigma_onsite >= 0.0 && spec.sigma_hopping >= 0.0) {
        return Err(Error::param("disorder", "standard deviations must be >= 0"));
    }
    let mut g = graph.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = g.dim;
    if spec.sigma_onsite > 0.0 {
        let dist = Normal::new(0.0, spec.sigma_onsite).expect("valid sigma");
        for s in &mut g.sites {
            let delta = dist.sample(&mut rng);
            s.onsite += CMatrix::identity(d, d) * c(delta, 0.0);
        }
    }
    if spec.sigma_hopping > 0.0 {
        let dist = Normal::new(0.0, spec.sigma_hopping).expect("valid sigma");
        for l in &mut g.links {
            l.amplitude += dist.sample(&mut rng);
            if l.amplitude < 0.0 {
                l.amplitude = -l.amplitude;
                l.phase += std::f64::consts::PI;
            }
        }
    }
    for &i in &spec.defect_sites {
        g.check_site(i)?;
        g.sites[i].onsite += CMatrix::identity(d, d) * c(spec.defect_strength, 0.0);
    }
    Ok(g)
}

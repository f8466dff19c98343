//! Constructors for the lattices studied in the crate.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{peierls_phase, FluxSpec, LandauGauge, LatticeGraph, Link, insert_vacancy_flux};
use crate::linalg::{c, cis, pauli_x, pauli_z, CMatrix, I};

fn require(cond: bool, field: &str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::param(field, reason))
    }
}

fn finite(xs: &[(&str, f64)]) -> Result<()> {
    for (name, x) in xs {
        require(x.is_finite(), name, "must be finite")?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Su-Schrieffer-Heeger chain with intracell coupling `g_a` and intercell
/// coupling `g_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SshParams {
    pub n_cells: usize,
    pub g_a: f64,
    pub g_b: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

/// Sites are ordered `A_0, B_0, A_1, B_1, ...`.
pub fn ssh_chain(p: &SshParams) -> Result<LatticeGraph> {
    require(p.n_cells >= 1, "n_cells", "must be >= 1")?;
    finite(&[("g_a", p.g_a), ("g_b", p.g_b)])?;
    if p.boundary == Boundary::Periodic {
        require(p.n_cells >= 2, "n_cells", "periodic chains need at least two cells")?;
    }
    let mut g = LatticeGraph::new(1)?;
    for n in 0..p.n_cells {
        g.add_site(Some("A"), [n as f64, 0.0]);
        g.add_site(Some("B"), [n as f64 + 0.5, 0.0]);
    }
    for n in 0..p.n_cells {
        g.add_link(Link::real(2 * n, 2 * n + 1, p.g_a))?;
        if n + 1 < p.n_cells {
            g.add_link(Link::real(2 * n + 1, 2 * n + 2, p.g_b))?;
        }
    }
    if p.boundary == Boundary::Periodic {
        g.add_link(Link::real(2 * p.n_cells - 1, 0, p.g_b))?;
    }
    Ok(g)
}

/// Bloch vector `d(k) = (g_a + g_b cos k, g_b sin k, 0)`.
pub fn ssh_bloch(k: f64, g_a: f64, g_b: f64) -> [f64; 3] {
    [g_a + g_b * k.cos(), g_b * k.sin(), 0.0]
}

/// Three sites on a loop with equal decay `kappa`. `theta_ij` is the phase
/// of the `a_i^+ a_j` term, i.e. of the hop `j -> i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NecklaceParams {
    pub coupling: f64,
    pub theta12: f64,
    pub theta23: f64,
    pub theta31: f64,
    #[serde(default)]
    pub kappa: f64,
}

impl NecklaceParams {
    /// Total synthetic flux through the loop.
    pub fn theta_sum(&self) -> f64 {
        self.theta12 + self.theta23 + self.theta31
    }
}

pub fn necklace3(p: &NecklaceParams) -> Result<LatticeGraph> {
    finite(&[
        ("coupling", p.coupling),
        ("theta12", p.theta12),
        ("theta23", p.theta23),
        ("theta31", p.theta31),
        ("kappa", p.kappa),
    ])?;
    require(p.coupling >= 0.0, "coupling", "must be >= 0")?;
    let mut g = LatticeGraph::new(1)?;
    for i in 0..3 {
        let a = TAU * i as f64 / 3.0;
        g.add_site(Some(&format!("Q{}", i + 1)), [a.cos(), a.sin()]);
        g.set_loss(i, p.kappa)?;
    }
    g.add_link(Link::scalar(1, 0, p.coupling, p.theta12))?;
    g.add_link(Link::scalar(2, 1, p.coupling, p.theta23))?;
    g.add_link(Link::scalar(0, 2, p.coupling, p.theta31))?;
    Ok(g)
}

/// Square-lattice Hofstadter model on an `nx x ny` rectangle with a
/// centered `hole_nx x hole_ny` vacancy threaded by an extra flux `alpha`.
/// Bonds carry `-hopping` times their Peierls factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusParams {
    pub nx: usize,
    pub ny: usize,
    pub hole_nx: usize,
    pub hole_ny: usize,
    /// Flux per plaquette.
    pub phi: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "one")]
    pub hopping: f64,
}

fn one() -> f64 {
    1.0
}

/// An annulus together with its coordinate bookkeeping.
#[derive(Clone, Debug)]
pub struct AnnulusLattice {
    pub params: AnnulusParams,
    pub graph: LatticeGraph,
    /// Integer coordinates of every site.
    pub coords: Vec<(i64, i64)>,
    pub index_of: HashMap<(i64, i64), usize>,
    pub flux: FluxSpec,
    /// Sites on the outer rim.
    pub outer: Vec<usize>,
    /// Sites bordering the vacancy (including diagonal neighbours).
    pub inner: Vec<usize>,
    /// Lower-left corner of the vacancy.
    pub hole_origin: (i64, i64),
}

impl AnnulusLattice {
    /// Geometric center of the annulus.
    pub fn center(&self) -> [f64; 2] {
        [(self.params.nx as f64 - 1.0) / 2.0, (self.params.ny as f64 - 1.0) / 2.0]
    }

    /// Counterclockwise site loop just inside the outer rim.
    pub fn outer_loop(&self) -> Vec<usize> {
        let (nx, ny) = (self.params.nx as i64, self.params.ny as i64);
        rect_loop(0, 0, nx - 1, ny - 1).iter().map(|p| self.index_of[p]).collect()
    }

    /// Counterclockwise site loop around the vacancy.
    pub fn inner_loop(&self) -> Vec<usize> {
        let (x0, y0) = self.hole_origin;
        let (hx, hy) = (self.params.hole_nx as i64, self.params.hole_ny as i64);
        rect_loop(x0 - 1, y0 - 1, x0 + hx, y0 + hy).iter().map(|p| self.index_of[p]).collect()
    }

    /// All elementary square plaquettes, counterclockwise from the lower
    /// left corner.
    pub fn plaquettes(&self) -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for y in 0..self.params.ny as i64 - 1 {
            for x in 0..self.params.nx as i64 - 1 {
                let corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)];
                if corners.iter().all(|p| self.index_of.contains_key(p)) {
                    out.push(corners.map(|p| self.index_of[&p]));
                }
            }
        }
        out
    }
}

fn rect_loop(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<(i64, i64)> {
    let mut v = Vec::new();
    for x in x0..x1 {
        v.push((x, y0));
    }
    for y in y0..y1 {
        v.push((x1, y));
    }
    for x in (x0 + 1..=x1).rev() {
        v.push((x, y1));
    }
    for y in (y0 + 1..=y1).rev() {
        v.push((x0, y));
    }
    v
}

/// Vertical links crossed by a horizontal ray from the vacancy to the right
/// rim, oriented upward so that a counterclockwise loop around the vacancy
/// picks up `+alpha`.
fn annulus_branch_cut(p: &AnnulusParams, hole: (i64, i64), index_of: &HashMap<(i64, i64), usize>) -> Vec<(usize, usize)> {
    let (x0, y0) = hole;
    let yc = if p.hole_ny >= 2 { y0 + p.hole_ny as i64 / 2 - 1 } else { y0 };
    (x0 + p.hole_nx as i64..p.nx as i64)
        .map(|x| (index_of[&(x, yc)], index_of[&(x, yc + 1)]))
        .collect()
}

pub fn hofstadter_annulus(p: &AnnulusParams) -> Result<AnnulusLattice> {
    finite(&[("phi", p.phi), ("alpha", p.alpha), ("hopping", p.hopping)])?;
    require(p.hopping >= 0.0, "hopping", "must be >= 0")?;
    require(p.hole_nx >= 1 && p.hole_ny >= 1, "hole", "vacancy must be at least 1x1")?;
    require(
        p.nx >= p.hole_nx + 2 && (p.nx - p.hole_nx).is_multiple_of(2),
        "hole_nx",
        "vacancy must be strictly interior and centered (nx - hole_nx even, >= 2)",
    )?;
    require(
        p.ny >= p.hole_ny + 2 && (p.ny - p.hole_ny).is_multiple_of(2),
        "hole_ny",
        "vacancy must be strictly interior and centered (ny - hole_ny even, >= 2)",
    )?;
    let x0 = ((p.nx - p.hole_nx) / 2) as i64;
    let y0 = ((p.ny - p.hole_ny) / 2) as i64;
    let in_hole = |x: i64, y: i64| {
        x >= x0 && x < x0 + p.hole_nx as i64 && y >= y0 && y < y0 + p.hole_ny as i64
    };
    let mut g = LatticeGraph::new(1)?;
    let mut coords = Vec::new();
    let mut index_of = HashMap::new();
    for y in 0..p.ny as i64 {
        for x in 0..p.nx as i64 {
            if in_hole(x, y) {
                continue;
            }
            let i = g.add_site(None, [x as f64, y as f64]);
            coords.push((x, y));
            index_of.insert((x, y), i);
        }
    }
    let gauge = LandauGauge { phi: p.phi };
    for (i, &(x, y)) in coords.iter().enumerate() {
        if let Some(&j) = index_of.get(&(x + 1, y)) {
            g.add_link(Link::scalar(i, j, p.hopping, PI))?;
        }
        if let Some(&j) = index_of.get(&(x, y + 1)) {
            let th = peierls_phase(&[[x as f64, y as f64], [x as f64, y as f64 + 1.0]], &gauge)?;
            g.add_link(Link::scalar(i, j, p.hopping, th + PI))?;
        }
    }
    let cut = annulus_branch_cut(p, (x0, y0), &index_of);
    let flux = FluxSpec {
        phi: p.phi,
        alpha: p.alpha,
        branch_cut: cut,
    };
    let graph = insert_vacancy_flux(&g, &flux)?;
    let (nx, ny) = (p.nx as i64, p.ny as i64);
    let outer = coords
        .iter()
        .enumerate()
        .filter(|(_, &(x, y))| x == 0 || y == 0 || x == nx - 1 || y == ny - 1)
        .map(|(i, _)| i)
        .collect();
    let inner = coords
        .iter()
        .enumerate()
        .filter(|(_, &(x, y))| {
            (-1..=1).any(|dx| (-1..=1).any(|dy| in_hole(x + dx, y + dy)))
        })
        .map(|(i, _)| i)
        .collect();
    Ok(AnnulusLattice {
        params: p.clone(),
        graph,
        coords,
        index_of,
        flux,
        outer,
        inner,
        hole_origin: (x0, y0),
    })
}

/// Rhombic chain with link variables `U1..U4` on the four bonds of each
/// rhombus: `A_{n+1} -> B_n` (U1), `B_n -> A_n` (U2), `A_{n+1} -> C_n` (U3),
/// `C_n -> A_n` (U4). Transport from `A_{n+1}` to `A_n` is then
/// proportional to `U2 U1 + U4 U3`.
#[derive(Clone, Debug, PartialEq)]
pub struct CageConfig {
    pub n_cells: usize,
    pub coupling: f64,
    pub links: [CMatrix; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
    C,
}

/// Rhombic lattice with site index `3 * cell + {0, 1, 2}` for `A, B, C`.
#[derive(Clone, Debug)]
pub struct RhombicCage {
    pub config: CageConfig,
    pub graph: LatticeGraph,
}

impl RhombicCage {
    pub fn site(&self, cell: usize, sub: Sublattice) -> usize {
        3 * cell
            + match sub {
                Sublattice::A => 0,
                Sublattice::B => 1,
                Sublattice::C => 2,
            }
    }

    pub fn cell_of(&self, site: usize) -> usize {
        site / 3
    }

    /// Averaged two-path transport `A_{n+1} -> A_n`, `(U2 U1 + U4 U3) / 2`.
    pub fn leftward_transport(&self) -> CMatrix {
        let [u1, u2, u3, u4] = &self.config.links;
        (u2 * u1 + u4 * u3) * c(0.5, 0.0)
    }
}

pub fn rhombic_abcage(cfg: &CageConfig) -> Result<RhombicCage> {
    require(cfg.n_cells >= 1, "n_cells", "must be >= 1")?;
    finite(&[("coupling", cfg.coupling)])?;
    let d = cfg.links[0].nrows();
    let mut g = LatticeGraph::new(d)?;
    for n in 0..cfg.n_cells {
        let x = n as f64;
        g.add_site(Some("A"), [x, 0.0]);
        g.add_site(Some("B"), [x + 0.5, 0.5]);
        g.add_site(Some("C"), [x + 0.5, -0.5]);
    }
    // Hopping -J, written as amplitude J with phase pi.
    let (j, ph) = (cfg.coupling.abs(), if cfg.coupling >= 0.0 { PI } else { 0.0 });
    let [u1, u2, u3, u4] = &cfg.links;
    for n in 0..cfg.n_cells {
        let (a, b, cc) = (3 * n, 3 * n + 1, 3 * n + 2);
        g.add_link(Link::gauge(b, a, j, ph, u2.clone()))?;
        g.add_link(Link::gauge(cc, a, j, ph, u4.clone()))?;
        if n + 1 < cfg.n_cells {
            let an = 3 * (n + 1);
            g.add_link(Link::gauge(an, b, j, ph, u1.clone()))?;
            g.add_link(Link::gauge(an, cc, j, ph, u3.clone()))?;
        }
    }
    Ok(RhombicCage {
        config: cfg.clone(),
        graph: g,
    })
}

/// U(2) cage with `U1 = U4 = 1`, `U2 = sigma_x`, `U3 = i sigma_y`, whose
/// leftward transport is the nilpotent `[[0, 1], [0, 0]]`.
pub fn non_abelian_cage(n_cells: usize, coupling: f64) -> CageConfig {
    let id = CMatrix::identity(2, 2);
    let u3 = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(-1., 0.), c(0., 0.)]);
    CageConfig {
        n_cells,
        coupling,
        links: [id.clone(), pauli_x(), u3, id],
    }
}

/// Scalar cage with flux `pi` per rhombus.
pub fn abelian_pi_cage(n_cells: usize, coupling: f64) -> CageConfig {
    let one = CMatrix::identity(1, 1);
    CageConfig {
        n_cells,
        coupling,
        links: [one.clone(), one.clone(), -one.clone(), one],
    }
}

/// Two coupled chains (legs `A` and `B`) with flux `phi` per plaquette.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderParams {
    pub n_rungs: usize,
    pub t0: f64,
    pub phi: f64,
}

/// Sites `A_j = 2j` on the lower leg and `B_j = 2j + 1` on the upper leg.
/// The leg hops `j+1 -> j` carry `+phi/2` on `A` and `-phi/2` on `B`, so the
/// loop `A_j -> B_j -> B_{j+1} -> A_{j+1}` encloses `phi`.
pub fn two_leg_ladder(p: &LadderParams) -> Result<LatticeGraph> {
    require(p.n_rungs >= 2, "n_rungs", "must be >= 2")?;
    finite(&[("t0", p.t0), ("phi", p.phi)])?;
    require(p.t0 >= 0.0, "t0", "must be >= 0")?;
    let mut g = LatticeGraph::new(1)?;
    for j in 0..p.n_rungs {
        g.add_site(Some("A"), [j as f64, 0.0]);
        g.add_site(Some("B"), [j as f64, 1.0]);
    }
    for j in 0..p.n_rungs {
        g.add_link(Link::scalar(2 * j + 1, 2 * j, p.t0, 0.0))?;
        if j + 1 < p.n_rungs {
            g.add_link(Link::scalar(2 * (j + 1), 2 * j, p.t0, p.phi / 2.0))?;
            g.add_link(Link::scalar(2 * (j + 1) + 1, 2 * j + 1, p.t0, -p.phi / 2.0))?;
        }
    }
    Ok(g)
}

/// Two-orbital chain with spin-orbit coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SocChainParams {
    pub n_cells: usize,
    pub t_z: f64,
    pub h_z: f64,
    pub delta0: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl SocChainParams {
    /// `h(k) = (2 t_z cos k + h_z) sigma_z + 2 delta0 sin k sigma_x`
    pub fn bloch_vector(&self, k: f64) -> [f64; 3] {
        [2.0 * self.delta0 * k.sin(), 0.0, 2.0 * self.t_z * k.cos() + self.h_z]
    }

    /// Hopping block `H[l, l+1]`.
    pub fn hop_block(&self) -> CMatrix {
        let s = -I * self.delta0;
        CMatrix::from_row_slice(2, 2, &[c(self.t_z, 0.0), s, s, c(-self.t_z, 0.0)])
    }

    pub fn onsite(&self) -> CMatrix {
        pauli_z() * c(self.h_z, 0.0)
    }
}

pub fn soc_chain(p: &SocChainParams) -> Result<LatticeGraph> {
    require(p.n_cells >= 2, "n_cells", "must be >= 2")?;
    finite(&[("t_z", p.t_z), ("h_z", p.h_z), ("delta0", p.delta0)])?;
    let mut g = chain_from_blocks(p.n_cells, &p.onsite(), &p.hop_block())?;
    if p.boundary == Boundary::Periodic {
        require(p.n_cells >= 3, "n_cells", "periodic chains need at least three cells")?;
        g.add_link(Link::block(0, p.n_cells - 1, p.hop_block()))?;
    }
    Ok(g)
}

fn chain_from_blocks(n: usize, onsite: &CMatrix, hop: &CMatrix) -> Result<LatticeGraph> {
    let mut g = LatticeGraph::new(onsite.nrows())?;
    for l in 0..n {
        g.add_site(None, [l as f64, 0.0]);
        g.set_onsite(l, onsite.clone())?;
    }
    for l in 0..n.saturating_sub(1) {
        g.add_link(Link::block(l + 1, l, hop.clone()))?;
    }
    Ok(g)
}

/// Chain whose hopping block `i t0' (sigma_z + i sigma_y)` and onsite mass
/// `m' sigma_z` realise a nodal-line semimetal slice. `m'` follows from the
/// transverse momenta through `m' = m + 2 d (cos ky + cos kz)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodalParams {
    pub n_cells: usize,
    pub t0p: f64,
    pub m: f64,
    pub d: f64,
    #[serde(default)]
    pub ky: f64,
    #[serde(default)]
    pub kz: f64,
}

impl NodalParams {
    pub fn m_eff(&self) -> f64 {
        nodal_mass(self.m, self.d, self.ky, self.kz)
    }

    /// `d(k) = (0, -2 t0' cos k, m' - 2 t0' sin k)`
    pub fn bloch_vector(&self, k: f64) -> [f64; 3] {
        nodal_bloch(self.t0p, self.m_eff(), k)
    }

    pub fn hop_block(&self) -> CMatrix {
        let t = I * self.t0p;
        CMatrix::from_row_slice(2, 2, &[t, t, -t, -t])
    }
}

pub fn nodal_mass(m: f64, d: f64, ky: f64, kz: f64) -> f64 {
    m + 2.0 * d * (ky.cos() + kz.cos())
}

pub fn nodal_bloch(t0p: f64, m_eff: f64, k: f64) -> [f64; 3] {
    [0.0, -2.0 * t0p * k.cos(), m_eff - 2.0 * t0p * k.sin()]
}

pub fn nodal_loop_chain(p: &NodalParams) -> Result<LatticeGraph> {
    require(p.n_cells >= 1, "n_cells", "must be >= 1")?;
    finite(&[("t0p", p.t0p), ("m", p.m), ("d", p.d), ("ky", p.ky), ("kz", p.kz)])?;
    let onsite = pauli_z() * c(p.m_eff(), 0.0);
    chain_from_blocks(p.n_cells, &onsite, &p.hop_block())
}

/// Spinful square lattice with an SU(2) gauge field: spin-dependent flux
/// `+-2 pi j` per plaquette from the x links, spin mixing `2 pi k` on the y
/// links and a row-staggered potential `(-1)^n chi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QshParams {
    pub nx: usize,
    pub ny: usize,
    pub t0: f64,
    pub j_flux: f64,
    pub k_mix: f64,
    pub chi: f64,
}

impl QshParams {
    pub fn x_link(&self, n: i64) -> CMatrix {
        let th = TAU * self.j_flux * n as f64;
        CMatrix::from_row_slice(2, 2, &[cis(th), c(0., 0.), c(0., 0.), cis(-th)])
    }

    pub fn y_link(&self) -> CMatrix {
        let a = TAU * self.k_mix;
        CMatrix::identity(2, 2) * c(a.cos(), 0.0) + pauli_x() * (I * a.sin())
    }

    pub fn onsite(&self, n: i64) -> f64 {
        if n.rem_euclid(2) == 0 {
            self.chi
        } else {
            -self.chi
        }
    }
}

/// Site `(m, n)` has index `n * nx + m`.
pub fn qsh_lattice(p: &QshParams) -> Result<LatticeGraph> {
    require(p.nx >= 2 && p.ny >= 2, "size", "nx and ny must be >= 2")?;
    finite(&[("t0", p.t0), ("j_flux", p.j_flux), ("k_mix", p.k_mix), ("chi", p.chi)])?;
    require(p.t0 >= 0.0, "t0", "must be >= 0")?;
    let mut g = LatticeGraph::new(2)?;
    for n in 0..p.ny {
        for m in 0..p.nx {
            let i = g.add_site(None, [m as f64, n as f64]);
            g.set_onsite_scalar(i, p.onsite(n as i64))?;
        }
    }
    let idx = |m: usize, n: usize| n * p.nx + m;
    for n in 0..p.ny {
        for m in 0..p.nx {
            if m + 1 < p.nx {
                g.add_link(Link::gauge(idx(m, n), idx(m + 1, n), p.t0, PI, p.x_link(n as i64)))?;
            }
            if n + 1 < p.ny {
                g.add_link(Link::gauge(idx(m, n), idx(m, n + 1), p.t0, PI, p.y_link()))?;
            }
        }
    }
    Ok(g)
}

/// Jaynes-Cummings parameters: resonator frequency, qubit-resonator
/// detuning and coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JcParams {
    pub omega_r: f64,
    pub delta: f64,
    pub g: f64,
}

/// Dressed doublet of the `n`-excitation manifold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JcLevels {
    pub e_minus: f64,
    pub e_plus: f64,
    /// `alpha_n` with `tan(2 alpha_n) = 2 g sqrt(n) / delta`.
    pub mixing_angle: f64,
}

pub fn jc_dressed_energies(n: u32, p: &JcParams) -> Result<JcLevels> {
    require(n >= 1, "n", "manifold index must be >= 1")?;
    finite(&[("omega_r", p.omega_r), ("delta", p.delta), ("g", p.g)])?;
    require(p.g >= 0.0, "g", "must be >= 0")?;
    let nf = n as f64;
    let root = (p.delta * p.delta + 4.0 * nf * p.g * p.g).sqrt();
    Ok(JcLevels {
        e_minus: nf * p.omega_r + (p.delta - root) / 2.0,
        e_plus: nf * p.omega_r + (p.delta + root) / 2.0,
        mixing_angle: 0.5 * (2.0 * p.g * nf.sqrt()).atan2(p.delta),
    })
}

//! Time evolution: closed, lossy, driven and parametrically modulated
//! systems, and the observables extracted from them.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{Dyn, Matrix, OMatrix, Owned, Vector, U5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{try_map, Execution};
use crate::lattice::{assemble_hamiltonian, sparse_hamiltonian, LatticeGraph};
use crate::linalg::{c, cis, eigh, CMatrix, CVector, CsrMatrix, C64, I};
use crate::models::{two_leg_ladder, LadderParams, RhombicCage, Sublattice};
use crate::ode::{integrate, StepControl};
use crate::special::bessel_j;
use crate::spectra::{site_probabilities, EdgeGeometry, EdgeTag};

/// Tolerance on the norm of initial states.
pub const NORM_TOL: f64 = 1e-8;

/// Population below which a site counts as unreached in caging runs.
pub const CAGE_THRESHOLD: f64 = 1e-6;

/// State vectors on a time grid plus named real observables.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
    /// Components per site.
    pub site_dim: usize,
    /// Always contains `"norm"`.
    pub observables: BTreeMap<String, Vec<f64>>,
}

impl Trajectory {
    fn new(times: &[f64], states: Vec<Vec<C64>>, site_dim: usize) -> Self {
        let norm = states
            .iter()
            .map(|s| s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        let mut observables = BTreeMap::new();
        observables.insert("norm".to_string(), norm);
        Trajectory {
            times: times.to_vec(),
            states,
            site_dim,
            observables,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.states.first().map_or(0, |s| s.len() / self.site_dim)
    }

    pub fn norm(&self) -> &[f64] {
        &self.observables["norm"]
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.get(name).map(|v| v.as_slice())
    }

    pub fn insert_observable(&mut self, name: &str, values: Vec<f64>) {
        self.observables.insert(name.to_string(), values);
    }

    /// Site populations, indexed `[time][site]`.
    pub fn populations(&self) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|s| site_probabilities(s.iter().copied(), self.site_dim))
            .collect()
    }

    /// Population of one site over time.
    pub fn site_population(&self, site: usize) -> Vec<f64> {
        let d = self.site_dim;
        self.states
            .iter()
            .map(|s| s[site * d..(site + 1) * d].iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Population of a single Hilbert-space component over time.
    pub fn component_population(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[index].norm_sqr()).collect()
    }
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::param("t_grid", "must not be empty"));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("t_grid", "times must be finite and non-decreasing"));
    }
    Ok(())
}

fn check_state(n: usize, psi0: &[C64]) -> Result<()> {
    if psi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi0.len(),
        });
    }
    let norm = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::param("psi0", format!("must be normalized (norm {norm})")));
    }
    Ok(())
}

fn check_square(h: &CMatrix) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    Ok(())
}

/// Basis vector with a single excitation at Hilbert index `index`.
pub fn basis_state(n: usize, index: usize) -> Result<Vec<C64>> {
    if index >= n {
        return Err(Error::param("initial", format!("index {index} outside a space of size {n}")));
    }
    let mut v = vec![C64::default(); n];
    v[index] = c(1.0, 0.0);
    Ok(v)
}

fn expectation(h: &CMatrix, psi: &[C64]) -> f64 {
    let v = CVector::from_column_slice(psi);
    v.dotc(&(h * &v)).re
}

/// `psi(t) = exp(-i H (t - t0)) psi0` through the eigendecomposition of the
/// static Hermitian `h`. Records `"energy"` alongside the norm.
pub fn evolve_closed(h: &CMatrix, psi0: &[C64], times: &[f64]) -> Result<Trajectory> {
    check_square(h)?;
    check_grid(times)?;
    check_state(h.nrows(), psi0)?;
    let e = eigh(h)?;
    let coeff = e.vectors.adjoint() * CVector::from_column_slice(psi0);
    let t0 = times[0];
    let states: Vec<Vec<C64>> = times
        .iter()
        .map(|&t| {
            let mut w = coeff.clone();
            for (j, z) in w.iter_mut().enumerate() {
                *z *= cis(-e.values[j] * (t - t0));
            }
            (&e.vectors * w).as_slice().to_vec()
        })
        .collect();
    let energy = states.iter().map(|s| expectation(h, s)).collect();
    let mut tr = Trajectory::new(times, states, 1);
    tr.insert_observable("energy", energy);
    Ok(tr)
}

/// Single-excitation evolution under `H - (i/2) diag(kappa)`. The norm
/// squared is the probability that no photon has been lost yet.
pub fn evolve_lossy(h: &CMatrix, kappa: &[f64], psi0: &[C64], times: &[f64]) -> Result<Trajectory> {
    check_square(h)?;
    check_grid(times)?;
    let n = h.nrows();
    check_state(n, psi0)?;
    if kappa.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: kappa.len(),
        });
    }
    if kappa.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
        return Err(Error::param("kappa", "decay rates must be finite and >= 0"));
    }
    if kappa.iter().all(|&k| k == 0.0) {
        return evolve_closed(h, psi0, times);
    }
    let mut heff = h.clone();
    for (i, k) in kappa.iter().enumerate() {
        heff[(i, i)] -= I * (0.5 * k);
    }
    let step = |dt: f64| (&heff * (-I * dt)).exp();
    let uniform = times.len() > 2 && {
        let dt = times[1] - times[0];
        times.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-12 * dt.abs().max(1.0))
    };
    let fixed = if uniform { Some(step(times[1] - times[0])) } else { None };
    let mut psi = CVector::from_column_slice(psi0);
    let mut states = vec![psi0.to_vec()];
    for w in times.windows(2) {
        psi = match &fixed {
            Some(u) => u * &psi,
            None => step(w[1] - w[0]) * &psi,
        };
        states.push(psi.as_slice().to_vec());
    }
    Ok(Trajectory::new(times, states, 1))
}

/// Closed or lossy evolution of a graph depending on its decay rates.
pub fn evolve_graph(graph: &LatticeGraph, psi0: &[C64], times: &[f64]) -> Result<Trajectory> {
    let h = assemble_hamiltonian(graph)?;
    let mut tr = if graph.has_loss() {
        evolve_lossy(&h, &graph.loss_vector(), psi0, times)?
    } else {
        evolve_closed(&h, psi0, times)?
    };
    tr.site_dim = graph.dim();
    Ok(tr)
}

/// A Hamiltonian known through its action `out = H(t) psi`.
pub trait TimeDependent: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);
}

impl TimeDependent for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(psi).map(|(a, b)| a * b).sum();
        }
    }
}

impl TimeDependent for CsrMatrix {
    fn dim(&self) -> usize {
        CsrMatrix::dim(self)
    }

    fn apply(&self, _t: f64, psi: &[C64], out: &mut [C64]) {
        self.mul_vec(psi, out);
    }
}

/// Adaptive Runge-Kutta propagation of `i dpsi/dt = H(t) psi`.
pub fn evolve_timedep(h: &dyn TimeDependent, psi0: &[C64], times: &[f64], ctrl: &StepControl) -> Result<Trajectory> {
    check_grid(times)?;
    check_state(h.dim(), psi0)?;
    let states = integrate(
        |t, y, dy| {
            h.apply(t, y, dy);
            for z in dy.iter_mut() {
                *z *= -I;
            }
        },
        psi0,
        times,
        ctrl,
    )?;
    Ok(Trajectory::new(times, states, 1))
}

/// One modulation tone `epsilon * sin(nu t + phi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    pub epsilon: f64,
    pub nu: f64,
    #[serde(default)]
    pub phi: f64,
}

impl Tone {
    /// Modulation index `epsilon / nu`.
    pub fn eta(&self) -> f64 {
        self.epsilon / self.nu
    }

    pub fn value(&self, t: f64) -> f64 {
        self.epsilon * (self.nu * t + self.phi).sin()
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.phi.is_finite()) {
            return Err(Error::param("tone", "amplitude and phase must be finite"));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::param("nu", "modulation frequency must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulationTarget {
    /// Modulates the on-site energy of every component of a site.
    Site(usize),
    /// Adds `value(t) (e^{i theta} U + h.c.)` on the link between two sites.
    Link(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSpec {
    pub tones: Vec<Tone>,
    pub target: ModulationTarget,
}

impl ModulationSpec {
    pub fn value(&self, t: f64) -> f64 {
        self.tones.iter().map(|x| x.value(t)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        self.tones.iter().try_for_each(Tone::validate)
    }
}

/// Static graph Hamiltonian plus modulated site and link terms.
#[derive(Clone, Debug)]
pub struct ModulatedHamiltonian {
    base: CsrMatrix,
    terms: Vec<(Vec<(usize, usize, C64)>, ModulationSpec)>,
}

impl ModulatedHamiltonian {
    pub fn new(graph: &LatticeGraph, specs: &[ModulationSpec]) -> Result<Self> {
        let d = graph.dim();
        let mut terms = Vec::new();
        for (k, spec) in specs.iter().enumerate() {
            spec.validate()?;
            if specs[..k].iter().any(|s| s.target == spec.target) {
                return Err(Error::param("modulation", "one spec per target"));
            }
            let entries = match spec.target {
                ModulationTarget::Site(i) => {
                    if i >= graph.n_sites() {
                        return Err(Error::param("modulation", format!("site {i} does not exist")));
                    }
                    (0..d).map(|a| (i * d + a, i * d + a, c(1.0, 0.0))).collect()
                }
                ModulationTarget::Link(a, b) => {
                    let l = graph.link_between(a, b).ok_or(Error::MissingLink(a, b))?;
                    let blk = &l.matrix * cis(l.phase);
                    let mut e = Vec::new();
                    for r in 0..d {
                        for s in 0..d {
                            e.push((l.to * d + r, l.from * d + s, blk[(r, s)]));
                            e.push((l.from * d + s, l.to * d + r, blk[(r, s)].conj()));
                        }
                    }
                    e
                }
            };
            terms.push((entries, spec.clone()));
        }
        Ok(ModulatedHamiltonian {
            base: sparse_hamiltonian(graph)?,
            terms,
        })
    }
}

impl TimeDependent for ModulatedHamiltonian {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        self.base.mul_vec(psi, out);
        for (entries, spec) in &self.terms {
            let f = spec.value(t);
            for &(r, s, z) in entries {
                out[r] += z * f * psi[s];
            }
        }
    }
}

/// Effective exchange coupling between neighbours `j-1` and `j` of a chain
/// whose site frequencies are modulated with the given tones. `prev_eta`
/// is the modulation index of site `j-1` and is required for `j > 1`.
pub fn effective_coupling_bessel(g: f64, tone: &Tone, j: usize, prev_eta: Option<f64>) -> Result<C64> {
    tone.validate()?;
    if j == 0 {
        return Err(Error::param("j", "bond index starts at 1"));
    }
    let amp = g * bessel_j(1, tone.eta());
    if j == 1 {
        return Ok(cis(tone.phi + FRAC_PI_2) * amp);
    }
    let prev = prev_eta.ok_or_else(|| Error::param("prev_eta", "needed for j > 1"))?;
    let amp = amp * bessel_j(0, prev);
    Ok(if j.is_multiple_of(2) {
        cis(-(tone.phi - FRAC_PI_2)) * amp
    } else {
        cis(tone.phi + FRAC_PI_2) * amp
    })
}

/// Two bosonic modes with a coupler `g(t) (a1^+ + a1)(a2^+ + a2)` modulated
/// as `g(t) = 2 J cos((omega1 - omega2 + detuning) t - theta)`, in the
/// interaction picture of the bare modes. Each mode is truncated at
/// `n_max` photons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModeParametric {
    pub omega1: f64,
    pub omega2: f64,
    pub j_eff: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub detuning: f64,
    pub n_max: usize,
}

impl TwoModeParametric {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("j_eff", self.j_eff),
            ("theta", self.theta),
            ("detuning", self.detuning),
        ] {
            if !x.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.n_max < 1 {
            return Err(Error::param("n_max", "must be >= 1"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 1)
    }

    /// Basis index of `|n1, n2>`.
    pub fn index(&self, n1: usize, n2: usize) -> usize {
        n1 * (self.n_max + 1) + n2
    }

    /// `J (e^{i theta} a1^+ a2 + h.c.)` on the same truncated basis.
    pub fn effective_hamiltonian(&self) -> CMatrix {
        let n = self.dim();
        let mut h = CMatrix::zeros(n, n);
        for n1 in 0..self.n_max {
            for n2 in 1..=self.n_max {
                let amp = self.j_eff * (((n1 + 1) * n2) as f64).sqrt();
                let (r, s) = (self.index(n1 + 1, n2 - 1), self.index(n1, n2));
                h[(r, s)] += cis(self.theta) * amp;
                h[(s, r)] += cis(-self.theta) * amp;
            }
        }
        h
    }

    /// Entries `(row, col, value, frequency)` of the interaction-picture
    /// coupler operator.
    fn coupler_entries(&self) -> Vec<(usize, usize, f64, f64)> {
        let m = self.n_max as i64;
        let mut out = Vec::new();
        for n1 in 0..=m {
            for n2 in 0..=m {
                for d1 in [-1i64, 1] {
                    for d2 in [-1i64, 1] {
                        let (m1, m2) = (n1 + d1, n2 + d2);
                        if m1 < 0 || m2 < 0 || m1 > m || m2 > m {
                            continue;
                        }
                        let v = (n1.max(m1) as f64).sqrt() * (n2.max(m2) as f64).sqrt();
                        let freq = d1 as f64 * self.omega1 + d2 as f64 * self.omega2;
                        out.push((
                            self.index(m1 as usize, m2 as usize),
                            self.index(n1 as usize, n2 as usize),
                            v,
                            freq,
                        ));
                    }
                }
            }
        }
        out
    }

    pub fn full_hamiltonian(&self) -> Result<ParametricCoupler> {
        self.validate()?;
        Ok(ParametricCoupler {
            dim: self.dim(),
            entries: self.coupler_entries(),
            j_eff: self.j_eff,
            nu: self.omega1 - self.omega2 + self.detuning,
            theta: self.theta,
        })
    }
}

/// Interaction-picture Hamiltonian of [`TwoModeParametric`] without the
/// rotating-wave approximation.
#[derive(Clone, Debug)]
pub struct ParametricCoupler {
    dim: usize,
    entries: Vec<(usize, usize, f64, f64)>,
    j_eff: f64,
    nu: f64,
    theta: f64,
}

impl TimeDependent for ParametricCoupler {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.fill(C64::default());
        let g = 2.0 * self.j_eff * (self.nu * t - self.theta).cos();
        for &(r, s, v, f) in &self.entries {
            out[r] += cis(f * t) * (g * v) * psi[s];
        }
    }
}

/// Full versus rotating-wave propagation from `|1, 0>`.
#[derive(Clone, Debug)]
pub struct RwaComparison {
    pub times: Vec<f64>,
    /// `1 - |<psi_rwa|psi_full>|^2`.
    pub infidelity: Vec<f64>,
    pub max_infidelity: f64,
    /// Population of `|0, 1>` under the full model.
    pub transfer_full: Vec<f64>,
    pub transfer_rwa: Vec<f64>,
    pub max_transfer_full: f64,
}

pub fn rwa_validation(model: &TwoModeParametric, times: &[f64], ctrl: &StepControl) -> Result<RwaComparison> {
    let full = model.full_hamiltonian()?;
    let psi0 = basis_state(model.dim(), model.index(1, 0))?;
    let tf = evolve_timedep(&full, &psi0, times, ctrl)?;
    let te = evolve_closed(&model.effective_hamiltonian(), &psi0, times)?;
    let infidelity: Vec<f64> = tf
        .states
        .iter()
        .zip(&te.states)
        .map(|(a, b)| {
            let ov: C64 = b.iter().zip(a).map(|(x, y)| x.conj() * y).sum();
            (1.0 - ov.norm_sqr()).max(0.0)
        })
        .collect();
    let k = model.index(0, 1);
    let transfer_full = tf.component_population(k);
    Ok(RwaComparison {
        times: times.to_vec(),
        max_infidelity: infidelity.iter().cloned().fold(0.0, f64::max),
        infidelity,
        max_transfer_full: transfer_full.iter().cloned().fold(0.0, f64::max),
        transfer_full,
        transfer_rwa: te.component_population(k),
    })
}

/// Largest distance between the full-model states at cutoffs `model.n_max`
/// and `n_hi`, compared on the smaller basis.
pub fn fock_truncation_error(model: &TwoModeParametric, n_hi: usize, times: &[f64], ctrl: &StepControl) -> Result<f64> {
    if n_hi <= model.n_max {
        return Err(Error::param("n_hi", "must exceed n_max"));
    }
    let hi = TwoModeParametric {
        n_max: n_hi,
        ..model.clone()
    };
    let run = |m: &TwoModeParametric| -> Result<Trajectory> {
        let psi0 = basis_state(m.dim(), m.index(1, 0))?;
        evolve_timedep(&m.full_hamiltonian()?, &psi0, times, ctrl)
    };
    let (lo_t, hi_t) = (run(model)?, run(&hi)?);
    let mut worst: f64 = 0.0;
    for (a, b) in lo_t.states.iter().zip(&hi_t.states) {
        let mut d2 = 0.0;
        for n1 in 0..=n_hi {
            for n2 in 0..=n_hi {
                let zb = b[hi.index(n1, n2)];
                let za = if n1 <= model.n_max && n2 <= model.n_max {
                    a[model.index(n1, n2)]
                } else {
                    C64::default()
                };
                d2 += (za - zb).norm_sqr();
            }
        }
        worst = worst.max(d2.sqrt());
    }
    Ok(worst)
}

/// Two qubits in the single-excitation sector: `Q0` at zero frequency,
/// `Q1` detuned by `delta` and modulated as `epsilon sin(nu t + phi)`,
/// exchange coupling `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChevronSetup {
    pub g: f64,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub phi: f64,
}

impl ChevronSetup {
    pub fn model(&self, nu: f64) -> Result<ModulatedHamiltonian> {
        for (name, x) in [("g", self.g), ("delta", self.delta), ("epsilon", self.epsilon), ("phi", self.phi)] {
            if !x.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        let mut graph = LatticeGraph::new(1)?;
        graph.add_site(Some("Q0"), [0.0, 0.0]);
        graph.add_site(Some("Q1"), [1.0, 0.0]);
        graph.set_onsite_scalar(1, self.delta)?;
        graph.add_link(crate::lattice::Link::real(0, 1, self.g))?;
        let spec = ModulationSpec {
            tones: vec![Tone {
                epsilon: self.epsilon,
                nu,
                phi: self.phi,
            }],
            target: ModulationTarget::Site(1),
        };
        ModulatedHamiltonian::new(&graph, &[spec])
    }

    /// Excited-state population of `Q1` with `Q0` initially excited.
    pub fn excited_population(&self, nu: f64, times: &[f64], ctrl: &StepControl) -> Result<Vec<f64>> {
        let h = self.model(nu)?;
        let tr = evolve_timedep(&h, &basis_state(2, 0)?, times, ctrl)?;
        Ok(tr.component_population(1))
    }
}

/// Population map `P[nu][t]` of the modulated qubit.
pub fn chevron_map(
    setup: &ChevronSetup,
    nus: &[f64],
    times: &[f64],
    ctrl: &StepControl,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    try_map(exec, nus, |&nu| setup.excited_population(nu, times, ctrl))
}

/// `amplitude cos(omega t + phase) exp(-decay_rate t) + offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampedCosine {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub decay_rate: f64,
    pub offset: f64,
    /// Root-mean-square residual of the fit.
    pub rms: f64,
}

impl DampedCosine {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.omega * t + self.phase).cos() * (-self.decay_rate * t).exp() + self.offset
    }
}

struct CosineFit<'a> {
    t: &'a [f64],
    y: &'a [f64],
    p: Vector<f64, U5, Owned<f64, U5>>,
}

impl LeastSquaresProblem<f64, Dyn, U5> for CosineFit<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U5>;
    type ParameterStorage = Owned<f64, U5>;

    fn set_params(&mut self, x: &Vector<f64, U5, Self::ParameterStorage>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> Vector<f64, U5, Self::ParameterStorage> {
        self.p
    }

    fn residuals(&self) -> Option<Vector<f64, Dyn, Self::ResidualStorage>> {
        let (a, w, ph, g, c0) = (self.p[0], self.p[1], self.p[2], self.p[3], self.p[4]);
        Some(Vector::<f64, Dyn, _>::from_iterator(
            self.t.len(),
            self.t
                .iter()
                .zip(self.y)
                .map(|(&t, &y)| a * (w * t + ph).cos() * (-g * t).exp() + c0 - y),
        ))
    }

    fn jacobian(&self) -> Option<Matrix<f64, Dyn, U5, Self::JacobianStorage>> {
        let (a, w, ph, g) = (self.p[0], self.p[1], self.p[2], self.p[3]);
        let mut jac = OMatrix::<f64, Dyn, U5>::zeros(self.t.len());
        for (i, &t) in self.t.iter().enumerate() {
            let e = (-g * t).exp();
            let (cs, sn) = ((w * t + ph).cos(), (w * t + ph).sin());
            jac[(i, 0)] = cs * e;
            jac[(i, 1)] = -a * t * sn * e;
            jac[(i, 2)] = -a * sn * e;
            jac[(i, 3)] = -a * t * cs * e;
            jac[(i, 4)] = 1.0;
        }
        Some(jac)
    }
}

/// Least-squares damped-cosine fit. The starting frequency comes from the
/// number of mean crossings, so the series must contain at least one full
/// oscillation.
pub fn fit_damped_cosine(times: &[f64], values: &[f64]) -> Result<DampedCosine> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(Error::FitFailed("need at least 8 samples of equal length".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let crossings = values
        .windows(2)
        .filter(|w| (w[0] - mean) * (w[1] - mean) < 0.0)
        .count();
    if crossings < 2 {
        return Err(Error::FitFailed("less than one oscillation in the window".into()));
    }
    let span = times[times.len() - 1] - times[0];
    let omega0 = PI * crossings as f64 / span;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let amp0 = 0.5 * (hi - lo);
    let mut best: Option<DampedCosine> = None;
    for ph0 in [0.0, FRAC_PI_2, PI, -FRAC_PI_2] {
        let problem = CosineFit {
            t: times,
            y: values,
            p: Vector::<f64, U5, _>::from([amp0, omega0, ph0, 0.0, mean]),
        };
        let (done, report) = LevenbergMarquardt::new().minimize(problem);
        if !report.termination.was_successful() {
            continue;
        }
        let p = done.p;
        let rms = (2.0 * report.objective_function / n).sqrt();
        let mut fit = DampedCosine {
            amplitude: p[0],
            omega: p[1],
            phase: p[2],
            decay_rate: p[3],
            offset: p[4],
            rms,
        };
        if fit.omega < 0.0 {
            fit.omega = -fit.omega;
            fit.phase = -fit.phase;
        }
        if fit.amplitude < 0.0 {
            fit.amplitude = -fit.amplitude;
            fit.phase += PI;
        }
        fit.phase = crate::lattice::wrap_2pi(fit.phase);
        if best.is_none_or(|b| fit.rms < b.rms) {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::FitFailed("no starting point converged".into()))
}

/// Chevron map and the coupling extracted at resonance.
#[derive(Clone, Debug)]
pub struct Chevron {
    pub nus: Vec<f64>,
    pub times: Vec<f64>,
    /// `population[i][k]` at `nus[i]`, `times[k]`.
    pub population: Vec<Vec<f64>>,
    /// Modulation frequency of the full-contrast oscillation.
    pub resonance: f64,
    pub fit: DampedCosine,
    /// Half the fitted oscillation frequency at resonance.
    pub g_prime: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Scans `nus`, takes the slice with the strongest transfer and refines the
/// resonance by golden-section search for the slowest fitted oscillation
/// (the detuned Rabi frequency `sqrt(4 g'^2 + delta^2)` is smallest on
/// resonance).
pub fn chevron_scan(
    setup: &ChevronSetup,
    nus: &[f64],
    times: &[f64],
    ctrl: &StepControl,
    exec: Execution,
) -> Result<Chevron> {
    if nus.len() < 3 || nus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("nu_grid", "need at least 3 increasing frequencies"));
    }
    let population = chevron_map(setup, nus, times, ctrl, exec)?;
    let peak: Vec<f64> = population
        .iter()
        .map(|p| p.iter().cloned().fold(0.0, f64::max))
        .collect();
    let k = (0..nus.len()).max_by(|&a, &b| peak[a].total_cmp(&peak[b])).unwrap();
    if peak[k] < 0.5 || k == 0 || k == nus.len() - 1 {
        return Err(Error::NoResonance);
    }
    let omega_at = |nu: f64| -> Result<DampedCosine> {
        let p = setup.excited_population(nu, times, ctrl)?;
        fit_damped_cosine(times, &p)
    };
    let (mut a, mut b) = (nus[k - 1], nus[k + 1]);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = omega_at(x1)?;
    let mut f2 = omega_at(x2)?;
    while b - a > 1e-7 * nus[k].abs().max(1.0) {
        if f1.omega < f2.omega {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = omega_at(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = omega_at(x2)?;
        }
    }
    let (resonance, fit) = if f1.omega < f2.omega { (x1, f1) } else { (x2, f2) };
    Ok(Chevron {
        nus: nus.to_vec(),
        times: times.to_vec(),
        population,
        resonance,
        g_prime: 0.5 * fit.omega,
        fit,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Envelope {
    #[default]
    Constant,
    /// Linear ramp to full amplitude over `duration`.
    Ramp { duration: f64 },
}

/// Coherent pump `f e^{-i Omega t}` on one site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveProtocol {
    pub pump_site: usize,
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

impl DriveProtocol {
    fn strength(&self, t: f64) -> f64 {
        match self.envelope {
            Envelope::Constant => self.amplitude,
            Envelope::Ramp { duration } => self.amplitude * (t / duration).clamp(0.0, 1.0),
        }
    }

    fn validate(&self, n_sites: usize) -> Result<()> {
        if self.pump_site >= n_sites {
            return Err(Error::param("pump_site", "site does not exist"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::param("amplitude", "must be finite and >= 0"));
        }
        if !self.frequency.is_finite() {
            return Err(Error::param("frequency", "must be finite"));
        }
        if let Envelope::Ramp { duration } = self.envelope {
            if !(duration.is_finite() && duration > 0.0) {
                return Err(Error::param("envelope.duration", "must be positive"));
            }
        }
        Ok(())
    }
}

/// Driven-dissipative field snapshots and the sense of the edge flow.
#[derive(Clone, Debug)]
pub struct DrivenFlow {
    pub times: Vec<f64>,
    /// Site intensities `|psi_i|^2`, indexed `[time][site]`.
    pub intensities: Vec<Vec<f64>>,
    /// Unwrapped polar angle of the edge intensity centroid.
    pub centroid_angle: Vec<f64>,
    /// Time-averaged angular velocity of the centroid, each interval
    /// weighted by the centroid radius.
    pub angular_velocity: f64,
    /// `+1` counterclockwise, `-1` clockwise, `0` if no motion.
    pub circulation: i32,
}

/// Integrates `i dpsi/dt = (H - i kappa/2) psi + f(t) e^{-i Omega t} e_pump`
/// from the empty lattice in the frame rotating at `Omega`, and measures
/// the circulation on the sites of boundary `tag`.
pub fn driven_steady_flow(
    graph: &LatticeGraph,
    geometry: &EdgeGeometry,
    tag: EdgeTag,
    drive: &DriveProtocol,
    times: &[f64],
    ctrl: &StepControl,
) -> Result<DrivenFlow> {
    check_grid(times)?;
    drive.validate(graph.n_sites())?;
    if geometry.n_sites() != graph.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: graph.n_sites(),
            got: geometry.n_sites(),
        });
    }
    let b = geometry
        .tags
        .iter()
        .position(|&t| t == tag)
        .ok_or_else(|| Error::Geometry(format!("no {} boundary", tag.as_str())))?;
    let h = sparse_hamiltonian(graph)?;
    let kappa = graph.loss_vector();
    let d = graph.dim();
    let pump = drive.pump_site * d;
    let omega = drive.frequency;
    let psi0 = vec![C64::default(); h.dim()];
    let states = integrate(
        |t, y, dy| {
            h.mul_vec(y, dy);
            for (i, z) in dy.iter_mut().enumerate() {
                *z -= y[i] * c(omega, 0.5 * kappa[i]);
            }
            dy[pump] += drive.strength(t);
            for z in dy.iter_mut() {
                *z *= -I;
            }
        },
        &psi0,
        times,
        ctrl,
    )?;
    let intensities: Vec<Vec<f64>> = states.iter().map(|s| site_probabilities(s.iter().copied(), d)).collect();

    let n = geometry.n_sites() as f64;
    let center = geometry
        .positions
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
    let edge = &geometry.boundary_sites[b];
    let centroid: Vec<Option<(f64, f64)>> = intensities
        .iter()
        .map(|inten| {
            let w: f64 = edge.iter().map(|&i| inten[i]).sum();
            if w <= 0.0 {
                return None;
            }
            let (mut x, mut y) = (0.0, 0.0);
            for &i in edge {
                x += inten[i] * (geometry.positions[i][0] - center[0]);
                y += inten[i] * (geometry.positions[i][1] - center[1]);
            }
            let (x, y) = (x / w, y / w);
            Some((y.atan2(x), x.hypot(y)))
        })
        .collect();
    let mut centroid_angle = Vec::with_capacity(times.len());
    let (mut num, mut den) = (0.0, 0.0);
    let mut prev: Option<(f64, f64)> = None;
    let mut unwrapped = 0.0;
    for (k, cpt) in centroid.iter().enumerate() {
        if let Some((ang, r)) = *cpt {
            if let Some((pa, pr)) = prev {
                let mut da = ang - pa;
                da -= (da / (2.0 * PI)).round() * 2.0 * PI;
                unwrapped += da;
                let w = r * pr;
                num += w * da;
                den += w * (times[k] - times[k - 1]);
            } else {
                unwrapped = ang;
            }
            prev = Some((ang, r));
        } else {
            prev = None;
        }
        centroid_angle.push(unwrapped);
    }
    let angular_velocity = if den > 0.0 { num / den } else { 0.0 };
    let circulation = if angular_velocity.abs() < 1e-12 {
        0
    } else {
        angular_velocity.signum() as i32
    };
    Ok(DrivenFlow {
        times: times.to_vec(),
        intensities,
        centroid_angle,
        angular_velocity,
        circulation,
    })
}

/// Caging run from a single component of one site.
#[derive(Clone, Debug)]
pub struct CagingResult {
    pub trajectory: Trajectory,
    pub start: (usize, Sublattice, usize),
    /// Largest `|cell - start cell|` of an `A` site whose population
    /// exceeded [`CAGE_THRESHOLD`] at some time.
    pub max_radius: usize,
}

impl CagingResult {
    /// Largest population over time of the `(cell, sublattice, component)`
    /// modes selected by `pred`.
    pub fn max_population<F>(&self, cage: &RhombicCage, pred: F) -> f64
    where
        F: Fn(usize, Sublattice, usize) -> bool,
    {
        let d = self.trajectory.site_dim;
        let mut idx = Vec::new();
        for cell in 0..cage.config.n_cells {
            for sub in [Sublattice::A, Sublattice::B, Sublattice::C] {
                for comp in 0..d {
                    if pred(cell, sub, comp) {
                        idx.push(cage.site(cell, sub) * d + comp);
                    }
                }
            }
        }
        self.trajectory
            .states
            .iter()
            .map(|s| idx.iter().map(|&i| s[i].norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn ab_caging_dynamics(
    cage: &RhombicCage,
    initial: (usize, Sublattice, usize),
    times: &[f64],
) -> Result<CagingResult> {
    let (cell, sub, comp) = initial;
    let d = cage.graph.dim();
    if cell >= cage.config.n_cells || comp >= d {
        return Err(Error::param("initial", "cell or component out of range"));
    }
    let psi0 = basis_state(cage.graph.hilbert_dim(), cage.site(cell, sub) * d + comp)?;
    let trajectory = evolve_graph(&cage.graph, &psi0, times)?;
    let pops = trajectory.populations();
    let mut max_radius = 0;
    for p in &pops {
        for n in 0..cage.config.n_cells {
            if p[cage.site(n, Sublattice::A)] > CAGE_THRESHOLD {
                max_radius = max_radius.max(n.abs_diff(cell));
            }
        }
    }
    Ok(CagingResult {
        trajectory,
        start: initial,
        max_radius,
    })
}

/// Chiral displacement series of a two-sublattice chain.
#[derive(Clone, Debug)]
pub struct ChiralDisplacement {
    pub times: Vec<f64>,
    pub series: Vec<f64>,
    pub window: (f64, f64),
    pub time_average: f64,
    /// Twice the window average.
    pub winding_estimate: f64,
    /// Range of the series inside the window.
    pub band: (f64, f64),
}

/// Averaging window for the chiral displacement: skip `4 / g_min`, then
/// average over eight intercell oscillation periods `pi / g_min`.
pub fn displacement_window(g_min: f64) -> Result<(f64, f64)> {
    if !(g_min.is_finite() && g_min > 0.0) {
        return Err(Error::param("g_min", "must be positive"));
    }
    let t0 = 4.0 / g_min;
    Ok((t0, t0 + 8.0 * PI / g_min))
}

/// `P_d(t) = sum_m (m - m0) (P_{A,m} - P_{B,m})` for a chain ordered
/// `A_0, B_0, A_1, ...`, with `m0` the cell of the largest initial
/// amplitude. The window average uses the trapezoid rule on the samples of
/// `times` inside `window`.
pub fn chiral_displacement_series(
    chain: &LatticeGraph,
    psi0: &[C64],
    times: &[f64],
    window: (f64, f64),
) -> Result<ChiralDisplacement> {
    if chain.dim() != 1 {
        return Err(Error::param("chain", "expects scalar sites"));
    }
    let n = chain.n_sites();
    if !n.is_multiple_of(2) {
        return Err(Error::param("chain", "two-site unit cells need an even site count"));
    }
    if !(window.0 < window.1) {
        return Err(Error::param("window", "must be a non-empty interval"));
    }
    let tr = evolve_graph(chain, psi0, times)?;
    let start = (0..n)
        .max_by(|&a, &b| psi0[a].norm_sqr().total_cmp(&psi0[b].norm_sqr()))
        .unwrap_or(0);
    let m0 = (start / 2) as f64;
    let chirality = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let series: Vec<f64> = tr
        .populations()
        .iter()
        .map(|p| (0..n).map(|i| ((i / 2) as f64 - m0) * chirality(i) * p[i]).sum())
        .collect();
    let inside: Vec<usize> = (0..times.len()).filter(|&k| times[k] >= window.0 && times[k] <= window.1).collect();
    if inside.len() < 2 {
        return Err(Error::param("window", "fewer than two samples inside the window"));
    }
    let (mut area, mut span) = (0.0, 0.0);
    for w in inside.windows(2) {
        let dt = times[w[1]] - times[w[0]];
        area += 0.5 * dt * (series[w[0]] + series[w[1]]);
        span += dt;
    }
    let time_average = if span > 0.0 { area / span } else { series[inside[0]] };
    let band = inside
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &k| (a.min(series[k]), b.max(series[k])));
    Ok(ChiralDisplacement {
        times: times.to_vec(),
        series,
        window,
        time_average,
        winding_estimate: 2.0 * time_average,
        band,
    })
}

/// Expectation value of the probability current on one bond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondCurrent {
    pub from: usize,
    pub to: usize,
    /// Flow `from -> to`, `2 Im(psi_to^+ B psi_from)` with `B` the hopping
    /// block `H[to, from]`.
    pub current: f64,
}

pub fn bond_current_map(graph: &LatticeGraph, state: &[C64]) -> Result<Vec<BondCurrent>> {
    let d = graph.dim();
    if state.len() != graph.hilbert_dim() {
        return Err(Error::DimensionMismatch {
            expected: graph.hilbert_dim(),
            got: state.len(),
        });
    }
    Ok(graph
        .links()
        .iter()
        .map(|l| {
            let b = l.hop();
            let mut z = C64::default();
            for r in 0..d {
                for s in 0..d {
                    z += state[l.to * d + r].conj() * b[(r, s)] * state[l.from * d + s];
                }
            }
            BondCurrent {
                from: l.from,
                to: l.to,
                current: 2.0 * z.im,
            }
        })
        .collect())
}

/// Net current into every site; zero for stationary states.
pub fn kirchhoff_residual(n_sites: usize, currents: &[BondCurrent]) -> Vec<f64> {
    let mut net = vec![0.0; n_sites];
    for b in currents {
        net[b.to] += b.current;
        net[b.from] -= b.current;
    }
    net
}

/// Ground-state chiral current of the flux ladder.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiralCurrent {
    pub phi: f64,
    pub value: f64,
    /// Set when the two lowest levels are degenerate; `values` then holds
    /// the current of both.
    pub degenerate: bool,
    pub values: Vec<f64>,
}

const DEGENERACY_TOL: f64 = 1e-9;

/// `(1/N) sum_j (I^A_{j -> j+1} - I^B_{j -> j+1})`, the rightward current on
/// leg `A` minus that on leg `B`, for a state of [`two_leg_ladder`].
pub fn chiral_current_of_state(p: &LadderParams, state: &[C64]) -> Result<f64> {
    let g = two_leg_ladder(p)?;
    let currents = bond_current_map(&g, state)?;
    let mut total = 0.0;
    for b in &currents {
        if b.from % 2 != b.to % 2 {
            continue;
        }
        let rightward = if b.to > b.from { b.current } else { -b.current };
        total += if b.from % 2 == 0 { rightward } else { -rightward };
    }
    Ok(total / p.n_rungs as f64)
}

pub fn chiral_current_ground_state(p: &LadderParams) -> Result<ChiralCurrent> {
    let g = two_leg_ladder(p)?;
    let e = eigh(&assemble_hamiltonian(&g)?)?;
    let degenerate = e.values[1] - e.values[0] < DEGENERACY_TOL;
    let n_states = if degenerate { 2 } else { 1 };
    let values = (0..n_states)
        .map(|k| chiral_current_of_state(p, e.vector(k).as_slice()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ChiralCurrent {
        phi: p.phi,
        value: values[0],
        degenerate,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{necklace3, NecklaceParams};

    fn grid(t1: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t1 * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let h = CMatrix::zeros(3, 3);
        let psi0 = vec![c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)];
        let tr = evolve_closed(&h, &psi0, &grid(5.0, 11)).unwrap();
        for s in &tr.states {
            for (a, b) in s.iter().zip(&psi0) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn two_site_rabi() {
        let h = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let times = grid(3.0, 31);
        let tr = evolve_closed(&h, &basis_state(2, 0).unwrap(), &times).unwrap();
        for (k, &t) in times.iter().enumerate() {
            assert!((tr.site_population(0)[k] - t.cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = CMatrix::zeros(2, 2);
        assert!(matches!(
            evolve_closed(&h, &[c(1., 0.)], &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(evolve_closed(&h, &[c(2., 0.), c(0., 0.)], &[0.0]).is_err());
        assert!(evolve_lossy(&h, &[-1.0, 0.0], &basis_state(2, 0).unwrap(), &[0.0]).is_err());
    }

    #[test]
    fn uniform_loss_decays_exponentially() {
        let h = CMatrix::zeros(2, 2);
        let times = grid(4.0, 9);
        let tr = evolve_lossy(&h, &[0.3, 0.3], &basis_state(2, 1).unwrap(), &times).unwrap();
        for (k, &t) in times.iter().enumerate() {
            assert!((tr.norm()[k].powi(2) - (-0.3 * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn static_timedep_matches_closed() {
        let g = necklace3(&NecklaceParams {
            coupling: 1.0,
            theta12: 0.3,
            theta23: 0.1,
            theta31: -0.7,
            kappa: 0.0,
        })
        .unwrap();
        let h = assemble_hamiltonian(&g).unwrap();
        let times = grid(6.0, 13);
        let psi0 = basis_state(3, 0).unwrap();
        let a = evolve_closed(&h, &psi0, &times).unwrap();
        let b = evolve_timedep(&h, &psi0, &times, &StepControl::default()).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for (p, q) in x.iter().zip(y) {
                assert!((p - q).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn bessel_coupling_phases() {
        let tone = Tone {
            epsilon: 0.0,
            nu: 1.0,
            phi: 0.0,
        };
        assert_eq!(effective_coupling_bessel(1.0, &tone, 1, None).unwrap().norm(), 0.0);
        let tone = Tone {
            epsilon: 1.0,
            nu: 1.0,
            phi: 0.0,
        };
        let g = effective_coupling_bessel(2.0, &tone, 1, None).unwrap();
        assert!((g.arg() - FRAC_PI_2).abs() < 1e-12);
        assert!((g.norm() - 2.0 * bessel_j(1, 1.0)).abs() < 1e-12);
        assert!(effective_coupling_bessel(1.0, &tone, 2, None).is_err());
        let bad = Tone { nu: 0.0, ..tone };
        assert!(effective_coupling_bessel(1.0, &bad, 1, None).is_err());
    }

    #[test]
    fn damped_cosine_fit_recovers_parameters() {
        let t = grid(20.0, 400);
        let y: Vec<f64> = t.iter().map(|&s| 0.4 * (1.3 * s + 0.7).cos() * (-0.05 * s).exp() + 0.5).collect();
        let f = fit_damped_cosine(&t, &y).unwrap();
        assert!((f.omega - 1.3).abs() < 1e-8);
        assert!((f.amplitude - 0.4).abs() < 1e-8);
        assert!((f.decay_rate - 0.05).abs() < 1e-8);
        assert!((f.phase - 0.7).abs() < 1e-8);
    }

    #[test]
    fn bond_currents_conserve_on_eigenstates() {
        let p = LadderParams {
            n_rungs: 6,
            t0: 1.0,
            phi: 1.1,
        };
        let g = two_leg_ladder(&p).unwrap();
        let e = eigh(&assemble_hamiltonian(&g).unwrap()).unwrap();
        for k in 0..e.len() {
            let cur = bond_current_map(&g, e.vector(k).as_slice()).unwrap();
            for r in kirchhoff_residual(g.n_sites(), &cur) {
                assert!(r.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fock_coupler_is_hermitian() {
        let m = TwoModeParametric {
            omega1: 5.0,
            omega2: 3.0,
            j_eff: 0.2,
            theta: 0.4,
            detuning: 0.0,
            n_max: 2,
        };
        let h = m.full_hamiltonian().unwrap();
        let n = m.dim();
        for &t in &[0.0, 0.37, 2.1] {
            let mut mat = CMatrix::zeros(n, n);
            for j in 0..n {
                let mut col = vec![C64::default(); n];
                h.apply(t, &basis_state(n, j).unwrap(), &mut col);
                for i in 0..n {
                    mat[(i, j)] = col[i];
                }
            }
            assert!(crate::linalg::hermitian_deviation(&mat) < 1e-12);
        }
        assert!(crate::linalg::hermitian_deviation(&m.effective_hamiltonian()) < 1e-15);
    }
}

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use gauge_lattice::dynamics::*;
use gauge_lattice::lattice::{apply_disorder, assemble_hamiltonian, DisorderSpec, LatticeGraph, Link};
use gauge_lattice::linalg::{c, eigh, CMatrix, C64};
use gauge_lattice::models::*;
use gauge_lattice::ode::StepControl;
use gauge_lattice::spectra::{EdgeGeometry, EdgeTag};
use gauge_lattice::{Error, Execution};
use proptest::prelude::*;

fn grid(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

fn necklace(theta_sum: f64, kappa: f64) -> LatticeGraph {
    let t = theta_sum / 3.0;
    necklace3(&NecklaceParams { coupling: 1.0, theta12: t, theta23: t, theta31: t, kappa }).unwrap()
}

/// Time of the first local maximum of `p` above `floor`.
fn first_peak(times: &[f64], p: &[f64], floor: f64) -> f64 {
    (1..p.len() - 1)
        .find(|&k| p[k] > floor && p[k] >= p[k - 1] && p[k] >= p[k + 1])
        .map(|k| times[k])
        .unwrap()
}

fn random_hermitian(vals: &[f64], n: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    let mut it = vals.iter().copied().cycle();
    for i in 0..n {
        h[(i, i)] = c(it.next().unwrap(), 0.0);
        for j in 0..i {
            let z = c(it.next().unwrap(), it.next().unwrap());
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_evolution_conserves_norm_and_energy(vals in prop::collection::vec(-1.0f64..1.0, 30), start in 0usize..5) {
        let h = random_hermitian(&vals, 5);
        let tr = evolve_closed(&h, &basis_state(5, start).unwrap(), &grid(20.0, 200)).unwrap();
        let e0 = tr.observable("energy").unwrap()[0];
        for (n, e) in tr.norm().iter().zip(tr.observable("energy").unwrap()) {
            prop_assert!((n - 1.0).abs() < NORM_TOL);
            prop_assert!((e - e0).abs() < 1e-10);
        }
    }

    #[test]
    fn adaptive_integrator_matches_exact_propagation(vals in prop::collection::vec(-1.0f64..1.0, 30)) {
        let h = random_hermitian(&vals, 5);
        let psi0 = basis_state(5, 0).unwrap();
        let times = grid(10.0, 50);
        let exact = evolve_closed(&h, &psi0, &times).unwrap();
        let rk = evolve_timedep(&h, &psi0, &times, &StepControl::default()).unwrap();
        for (a, b) in exact.states.iter().zip(&rk.states) {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(d < 1e-7);
        }
    }

    #[test]
    fn lossy_norm_never_grows(kappa in prop::collection::vec(0.0f64..0.5, 3), theta in 0.0f64..TAU) {
        let mut g = necklace(theta, 0.0);
        for (i, &k) in kappa.iter().enumerate() {
            g.set_loss(i, k).unwrap();
        }
        let tr = evolve_graph(&g, &basis_state(3, 0).unwrap(), &grid(30.0, 300)).unwrap();
        for w in tr.norm().windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }
}

#[test]
fn uniform_loss_decays_exponentially() {
    let kappa = 0.3;
    let g = necklace(FRAC_PI_2, kappa);
    let times = grid(10.0, 100);
    let tr = evolve_graph(&g, &basis_state(3, 1).unwrap(), &times).unwrap();
    for (t, n) in times.iter().zip(tr.norm()) {
        assert!((n * n - (-kappa * t).exp()).abs() < 1e-10);
    }
}

#[test]
fn necklace_chirality_follows_the_flux() {
    let times = grid(6.0, 1200);
    let peaks = |theta: f64| {
        let tr = evolve_graph(&necklace(theta, 0.0125), &basis_state(3, 0).unwrap(), &times).unwrap();
        (
            first_peak(&times, &tr.site_population(1), 0.5),
            first_peak(&times, &tr.site_population(2), 0.5),
        )
    };
    let (t2, t3) = peaks(FRAC_PI_2);
    assert!(t2 < t3, "{t2} {t3}");
    let (t2, t3) = peaks(3.0 * FRAC_PI_2);
    assert!(t3 < t2, "{t2} {t3}");

    let tr = evolve_graph(&necklace(PI, 0.0125), &basis_state(3, 0).unwrap(), &times).unwrap();
    let (p2, p3) = (tr.site_population(1), tr.site_population(2));
    let dev = p2.iter().zip(&p3).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-8);
}

#[test]
fn necklace_quarter_flux_transfers_perfectly() {
    // For theta_sum = pi/2 the three eigenphases are equally spaced, so the
    // excitation hops site to site with period 2 pi / (3 sqrt 3).
    let tr = evolve_graph(&necklace(FRAC_PI_2, 0.0), &basis_state(3, 0).unwrap(), &[0.0, TAU / (3.0 * 3f64.sqrt())]).unwrap();
    assert!((tr.site_population(1)[1] - 1.0).abs() < 1e-12);
}

#[test]
fn non_abelian_cage_reach_is_one_sided() {
    let cage = rhombic_abcage(&non_abelian_cage(9, 1.0)).unwrap();
    let times = grid(50.0, 500);
    let right = ab_caging_dynamics(&cage, (4, Sublattice::A, 0), &times).unwrap();
    assert!(right.max_population(&cage, |n, s, _| s == Sublattice::A && !(4..=5).contains(&n)) < 1e-10);
    assert!(right.max_population(&cage, |n, s, k| n == 5 && s == Sublattice::A && k == 1) > 0.1);
    assert!(right.max_population(&cage, |n, s, k| n == 5 && s == Sublattice::A && k == 0) < 1e-10);

    let left = ab_caging_dynamics(&cage, (4, Sublattice::A, 1), &times).unwrap();
    assert!(left.max_population(&cage, |n, s, _| s == Sublattice::A && !(3..=4).contains(&n)) < 1e-10);
    assert!(left.max_population(&cage, |n, s, k| n == 3 && s == Sublattice::A && k == 0) > 0.1);
    assert_eq!(right.max_radius, 1);
    assert_eq!(left.max_radius, 1);
}

#[test]
fn abelian_cage_confines_and_zero_flux_spreads() {
    let times = grid(50.0, 500);
    let cage = rhombic_abcage(&abelian_pi_cage(9, 1.0)).unwrap();
    let r = ab_caging_dynamics(&cage, (4, Sublattice::A, 0), &times).unwrap();
    assert_eq!(r.max_radius, 0);
    assert!(r.max_population(&cage, |n, _, _| !(3..=5).contains(&n)) < 1e-10);

    let one = CMatrix::identity(1, 1);
    let free = CageConfig { n_cells: 9, coupling: 1.0, links: [one.clone(), one.clone(), one.clone(), one] };
    let free = rhombic_abcage(&free).unwrap();
    let r = ab_caging_dynamics(&free, (4, Sublattice::A, 0), &times).unwrap();
    assert_eq!(r.max_radius, 4);
}

#[test]
fn chiral_displacement_tracks_the_winding_on_a_long_chain() {
    // Bulk-dominated regime: the wave front does not reach the ends within
    // the averaging window.
    let run = |g_a: f64, g_b: f64| {
        let n_cells = 80;
        let chain = ssh_chain(&SshParams { n_cells, g_a, g_b, boundary: Boundary::Open }).unwrap();
        let window = displacement_window(g_a.min(g_b)).unwrap();
        let times = grid(window.1, 4000);
        let psi0 = basis_state(2 * n_cells, 2 * (n_cells / 2)).unwrap();
        chiral_displacement_series(&chain, &psi0, &times, window).unwrap()
    };
    let top = run(1.0, 5.0);
    let triv = run(5.0, 1.0);
    assert!((top.winding_estimate - 1.0).abs() < 0.1, "{}", top.winding_estimate);
    assert!(triv.winding_estimate.abs() < 0.1, "{}", triv.winding_estimate);
}

#[test]
fn chiral_displacement_rejects_bad_input() {
    let mut odd = LatticeGraph::new(1).unwrap();
    for i in 0..3 {
        odd.add_site(None, [i as f64, 0.0]);
    }
    odd.add_link(Link::real(0, 1, 1.0)).unwrap();
    assert!(chiral_displacement_series(&odd, &basis_state(3, 0).unwrap(), &grid(1.0, 10), (0.1, 0.9)).is_err());
    assert!(displacement_window(0.0).is_err());
}

#[test]
fn ladder_chiral_current_symmetries() {
    let j = |phi: f64| chiral_current_ground_state(&LadderParams { n_rungs: 50, t0: 1.0, phi }).unwrap();
    assert!(j(0.0).value.abs() < 1e-12);
    for k in 1..10 {
        let phi = PI * k as f64 / 10.0;
        let (a, b) = (j(phi), j(-phi));
        assert!((a.value + b.value).abs() < 1e-10, "phi = {phi}");
        assert!(a.value > 0.0);
    }
}

#[test]
fn stationary_states_obey_kirchhoff() {
    let p = LadderParams { n_rungs: 12, t0: 1.0, phi: 1.1 };
    let g = two_leg_ladder(&p).unwrap();
    let e = eigh(&assemble_hamiltonian(&g).unwrap()).unwrap();
    for k in [0, 5, 23] {
        let v = e.vector(k);
        let currents = bond_current_map(&g, v.as_slice()).unwrap();
        assert!(kirchhoff_residual(g.n_sites(), &currents).iter().all(|r| r.abs() < 1e-12));
    }
    let mut psi = vec![C64::default(); 24];
    psi[0] = c(1.0, 0.0);
    psi[2] = c(0.0, 1.0);
    let cur = bond_current_map(&g, &psi).unwrap();
    assert!(cur.iter().any(|b| b.current.abs() > 0.1));
}

#[test]
fn bessel_coupling_magnitude_and_phase() {
    // Power series of J_1 as an independent oracle.
    let j1 = |x: f64| {
        let mut term = x / 2.0;
        let mut sum = term;
        for k in 1..30 {
            term *= -(x * x / 4.0) / (k as f64 * (k + 1) as f64);
            sum += term;
        }
        sum
    };
    for eta in [0.2, 0.7, 1.5, 2.4] {
        let tone = Tone { epsilon: eta * 10.0, nu: 10.0, phi: 0.3 };
        let z = effective_coupling_bessel(2.0, &tone, 1, None).unwrap();
        assert!((z.norm() - 2.0 * j1(eta).abs()).abs() < 1e-12);
        assert!((z.arg() - (0.3 + FRAC_PI_2)).abs() < 1e-12 || j1(eta) < 0.0);
    }
    let tone = Tone { epsilon: 5.0, nu: 10.0, phi: 0.0 };
    assert!(effective_coupling_bessel(1.0, &tone, 2, None).is_err());
    assert!(effective_coupling_bessel(1.0, &tone, 0, None).is_err());
    assert!(effective_coupling_bessel(1.0, &Tone { nu: 0.0, ..tone }, 1, None).is_err());
}

#[test]
fn chevron_resonant_coupling_follows_bessel() {
    let setup = ChevronSetup { g: 1.0, delta: 40.0, epsilon: 40.0, phi: 0.0 };
    let nus: Vec<f64> = (0..=20).map(|k| 39.0 + 0.1 * k as f64).collect();
    let times = grid(80.0, 800);
    let ch = chevron_scan(&setup, &nus, &times, &StepControl::default(), Execution::Parallel).unwrap();
    let expect = gauge_lattice::special::bessel_j(1, 40.0 / ch.resonance);
    assert!(((ch.g_prime - expect) / expect).abs() < 0.03, "{} vs {expect}", ch.g_prime);
}

#[test]
fn unmodulated_chevron_has_no_resonance() {
    let setup = ChevronSetup { g: 1.0, delta: 40.0, epsilon: 0.0, phi: 0.0 };
    let nus: Vec<f64> = (0..=10).map(|k| 39.0 + 0.2 * k as f64).collect();
    let r = chevron_scan(&setup, &nus, &grid(20.0, 200), &StepControl::default(), Execution::Sequential);
    assert!(matches!(r, Err(Error::NoResonance)));
}

#[test]
fn rwa_error_shrinks_with_the_coupling() {
    let run = |j: f64| {
        let m = TwoModeParametric { omega1: 100.0, omega2: 60.0, j_eff: j, theta: 0.0, detuning: 0.0, n_max: 2 };
        rwa_validation(&m, &grid(PI / j, 200), &StepControl::default()).unwrap()
    };
    let (a, b) = (run(1.0), run(0.5));
    assert!(a.max_infidelity < 1e-2);
    assert!(b.max_infidelity < a.max_infidelity / 3.0);
    assert!(a.max_transfer_full > 0.95);
}

#[test]
fn detuned_coupler_does_not_transfer() {
    let m = TwoModeParametric { omega1: 100.0, omega2: 60.0, j_eff: 1.0, theta: 0.0, detuning: 10.0, n_max: 2 };
    let r = rwa_validation(&m, &grid(PI, 200), &StepControl::default()).unwrap();
    assert!(r.max_transfer_full < 0.1);
}

#[test]
fn parametric_effective_hamiltonian_is_hermitian() {
    let m = TwoModeParametric { omega1: 5.0, omega2: 3.0, j_eff: 0.7, theta: 1.2, detuning: 0.0, n_max: 3 };
    let h = m.effective_hamiltonian();
    assert!((&h - h.adjoint()).norm() < 1e-14);
    assert!(TwoModeParametric { n_max: 0, ..m }.full_hamiltonian().is_err());
}

fn annulus_flow(phi: f64, pump: (i64, i64), tag: EdgeTag, omega: f64, disorder: bool) -> i32 {
    let a = hofstadter_annulus(&AnnulusParams { nx: 24, ny: 24, hole_nx: 6, hole_ny: 6, phi, alpha: 0.0, hopping: 1.0 }).unwrap();
    let geom = EdgeGeometry::annulus(&a).unwrap();
    let mut g = a.graph.clone();
    for i in 0..g.n_sites() {
        g.set_loss(i, 0.02).unwrap();
    }
    if disorder {
        let defect = [(11, 22), (12, 22), (11, 23), (12, 23)].iter().map(|p| a.index_of[p]).collect();
        let spec = DisorderSpec { sigma_onsite: 0.05, sigma_hopping: 0.05, defect_sites: defect, defect_strength: 30.0, seed: 7 };
        g = apply_disorder(&g, &spec).unwrap();
    }
    let drive = DriveProtocol { pump_site: a.index_of[&pump], amplitude: 0.1, frequency: omega, envelope: Envelope::Constant };
    let ctrl = StepControl { rtol: 1e-7, atol: 1e-9, ..Default::default() };
    driven_steady_flow(&g, &geom, tag, &drive, &grid(60.0, 120), &ctrl).unwrap().circulation
}

#[test]
fn driven_edge_flow_relative_senses() {
    let q = FRAC_PI_2;
    let outer1 = annulus_flow(q, (0, 12), EdgeTag::Outer, -1.76, false);
    let outer3 = annulus_flow(q, (0, 12), EdgeTag::Outer, 1.47, false);
    let inner1 = annulus_flow(q, (8, 12), EdgeTag::Inner, -1.97, false);
    let inner3 = annulus_flow(q, (8, 12), EdgeTag::Inner, 1.97, false);
    assert_ne!(outer1, 0);
    assert_eq!(outer3, -outer1);
    assert_eq!(inner1, -outer1);
    assert_eq!(inner3, outer1);
    assert_eq!(annulus_flow(q, (0, 12), EdgeTag::Outer, -1.75, true), outer1);
    assert_eq!(annulus_flow(-q, (0, 12), EdgeTag::Outer, -1.76, false), -outer1);
}

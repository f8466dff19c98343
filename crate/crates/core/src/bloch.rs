//! Translation-invariant models described by a Bloch Hamiltonian `h(k)`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::{c, cis, d_dot_sigma, CMatrix};
use crate::models::{NodalParams, QshParams, SocChainParams};

/// A model with a `k`-dependent Hermitian Bloch Hamiltonian on the torus
/// `k in [0, 2 pi)^2`. One-dimensional models ignore `k[1]`.
pub trait BlochModel: Sync {
    fn n_bands(&self) -> usize;
    fn hamiltonian(&self, k: [f64; 2]) -> CMatrix;
}

/// Two-band model `h(k) = -d(k) . sigma`.
pub struct TwoBand<F> {
    pub d: F,
}

impl<F: Fn([f64; 2]) -> [f64; 3] + Sync> BlochModel for TwoBand<F> {
    fn n_bands(&self) -> usize {
        2
    }

    fn hamiltonian(&self, k: [f64; 2]) -> CMatrix {
        -d_dot_sigma((self.d)(k))
    }
}

/// A hop from orbital `from` in cell `R` to orbital `to` in cell
/// `R + shift`, carrying the block `block`.
#[derive(Clone, Debug)]
pub struct PeriodicHop {
    pub from: usize,
    pub to: usize,
    pub shift: [i64; 2],
    pub block: CMatrix,
}

/// Tight-binding model on a periodic supercell, with orbitals of internal
/// dimension `d`.
#[derive(Clone, Debug)]
pub struct PeriodicModel {
    pub n_orbitals: usize,
    pub d: usize,
    pub onsite: Vec<CMatrix>,
    pub hops: Vec<PeriodicHop>,
}

impl BlochModel for PeriodicModel {
    fn n_bands(&self) -> usize {
        self.n_orbitals * self.d
    }

    fn hamiltonian(&self, k: [f64; 2]) -> CMatrix {
        let d = self.d;
        let n = self.n_bands();
        let mut h = CMatrix::zeros(n, n);
        for (i, e) in self.onsite.iter().enumerate() {
            let mut blk = h.view_mut((i * d, i * d), (d, d));
            blk += e;
        }
        for hop in &self.hops {
            let ph = cis(-(k[0] * hop.shift[0] as f64 + k[1] * hop.shift[1] as f64));
            let b = &hop.block * ph;
            let mut blk = h.view_mut((hop.to * d, hop.from * d), (d, d));
            blk += &b;
            let mut blk = h.view_mut((hop.from * d, hop.to * d), (d, d));
            blk += b.adjoint();
        }
        h
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub fn check_coprime(p: i64, q: i64) -> Result<()> {
    if q < 2 || p <= 0 || p >= q || gcd(p, q) != 1 {
        return Err(Error::NotCoprime { p, q });
    }
    Ok(())
}

/// Hofstadter model with flux `2 pi p / q` per plaquette on a `q x 1`
/// magnetic cell in the Landau gauge used by the annulus builder, with
/// bond amplitude `-hopping`.
pub fn hofstadter_bloch(p: i64, q: i64, hopping: f64) -> Result<PeriodicModel> {
    check_coprime(p, q)?;
    let q_us = q as usize;
    let phi = TAU * p as f64 / q as f64;
    let one = |z: f64| CMatrix::identity(1, 1) * c(z, 0.0);
    let mut hops = Vec::new();
    for x in 0..q_us {
        let (to, shift) = if x + 1 < q_us { (x + 1, [0, 0]) } else { (0, [1, 0]) };
        hops.push(PeriodicHop { from: x, to, shift, block: one(-hopping) });
        hops.push(PeriodicHop {
            from: x,
            to: x,
            shift: [0, 1],
            block: CMatrix::identity(1, 1) * (cis(phi * x as f64) * -hopping),
        });
    }
    Ok(PeriodicModel {
        n_orbitals: q_us,
        d: 1,
        onsite: vec![CMatrix::zeros(1, 1); q_us],
        hops,
    })
}

/// Best rational approximation `p / q` of `x` with `q <= max_q`, if it is
/// within `tol`.
pub fn rational_approx(x: f64, max_q: i64, tol: f64) -> Option<(i64, i64)> {
    let mut best: Option<(i64, i64, f64)> = None;
    for q in 1..=max_q {
        let p = (x * q as f64).round() as i64;
        let err = (x - p as f64 / q as f64).abs();
        if err <= tol && best.is_none_or(|b| err < b.2 - 1e-15) {
            best = Some((p, q, err));
        }
    }
    best.map(|(p, q, _)| (p, q))
}

fn chain_model(onsite: CMatrix, hop_left: CMatrix) -> PeriodicModel {
    // `hop_left` is H[l, l+1]: a hop from cell l+1 into cell l.
    PeriodicModel {
        n_orbitals: 1,
        d: onsite.nrows(),
        onsite: vec![onsite],
        hops: vec![PeriodicHop { from: 0, to: 0, shift: [-1, 0], block: hop_left }],
    }
}

pub fn soc_bloch(p: &SocChainParams) -> PeriodicModel {
    chain_model(p.onsite(), p.hop_block())
}

pub fn nodal_bloch_model(p: &NodalParams) -> PeriodicModel {
    chain_model(crate::linalg::pauli_z() * c(p.m_eff(), 0.0), p.hop_block())
}

/// Spinful lattice on a `1 x L` supercell, `L = lcm(q, 2)` where
/// `j_flux = p / q`.
pub fn qsh_bloch(p: &QshParams, max_q: i64) -> Result<PeriodicModel> {
    let (_, q) = rational_approx(p.j_flux.rem_euclid(1.0), max_q, 1e-12)
        .ok_or_else(|| Error::param("j_flux", "must be rational with a small denominator"))?;
    let l = (q * 2 / gcd(q, 2)) as usize;
    let minus = c(-p.t0, 0.0);
    let mut hops = Vec::new();
    for n in 0..l {
        hops.push(PeriodicHop { from: n, to: n, shift: [1, 0], block: p.x_link(n as i64) * minus });
        let (to, shift) = if n + 1 < l { (n + 1, [0, 0]) } else { (0, [0, 1]) };
        hops.push(PeriodicHop { from: n, to, shift, block: p.y_link() * minus });
    }
    Ok(PeriodicModel {
        n_orbitals: l,
        d: 2,
        onsite: (0..l).map(|n| CMatrix::identity(2, 2) * c(p.onsite(n as i64), 0.0)).collect(),
        hops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, max_abs};

    #[test]
    fn soc_bloch_matches_closed_form() {
        let p = SocChainParams { n_cells: 2, t_z: 0.7, h_z: 0.3, delta0: 0.4, boundary: Default::default() };
        let m = soc_bloch(&p);
        for i in 0..16 {
            let k = TAU * i as f64 / 16.0;
            let h = m.hamiltonian([k, 0.0]);
            let expect = d_dot_sigma(p.bloch_vector(k));
            assert!(max_abs(&(h - expect)) < 1e-14);
        }
    }

    #[test]
    fn nodal_bloch_matches_closed_form() {
        let p = NodalParams { n_cells: 1, t0p: 1.0, m: 0.4, d: 0.0, ky: 0.0, kz: 0.0 };
        let m = nodal_bloch_model(&p);
        for i in 0..16 {
            let k = TAU * i as f64 / 16.0;
            let expect = d_dot_sigma(p.bloch_vector(k));
            assert!(max_abs(&(m.hamiltonian([k, 0.0]) - expect)) < 1e-14);
        }
    }

    #[test]
    fn hofstadter_bandwidth_at_zero_flux_limit() {
        // p/q = 1/2: bands +-2 sqrt(cos^2 kx + cos^2 ky) type spectrum, max 2 sqrt 2.
        let m = hofstadter_bloch(1, 2, 1.0).unwrap();
        let mut top: f64 = 0.0;
        for i in 0..32 {
            for j in 0..32 {
                let k = [TAU * i as f64 / 32.0, TAU * j as f64 / 32.0];
                top = top.max(*eigh(&m.hamiltonian(k)).unwrap().values.last().unwrap());
            }
        }
        assert!((top - 2.0 * 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_coprime() {
        assert!(matches!(hofstadter_bloch(2, 4, 1.0), Err(Error::NotCoprime { p: 2, q: 4 })));
    }

    #[test]
    fn rational() {
        assert_eq!(rational_approx(0.25, 20, 1e-12), Some((1, 4)));
        assert_eq!(rational_approx(0.4, 20, 1e-12), Some((2, 5)));
        assert_eq!(rational_approx(std::f64::consts::FRAC_1_SQRT_2, 20, 1e-12), None);
    }
}

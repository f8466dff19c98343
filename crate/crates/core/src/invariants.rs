//! Topological invariants: loop windings, Chern numbers, Diophantine edge
//! windings and nodal-loop maps.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::bloch::{check_coprime, BlochModel};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{eigh_unchecked, CMatrix, C64};
use crate::models::{nodal_bloch, nodal_mass};

/// Below this norm the Bloch vector counts as vanishing.
pub const GAP_GUARD: f64 = 1e-12;

/// Residual above which a winding or Chern number counts as unresolved.
pub const INTEGER_TOL: f64 = 0.01;

/// Closed loop of Bloch vectors sampled on a uniform grid of `k`
/// (the endpoint `2 pi` is not repeated).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DLoop {
    pub samples: Vec<[f64; 3]>,
}

impl DLoop {
    pub fn sample(n: usize, d: impl Fn(f64) -> [f64; 3]) -> Self {
        DLoop {
            samples: (0..n).map(|i| d(TAU * i as f64 / n as f64)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    pub value: i64,
    /// Distance of the raw winding from `value`.
    pub residual: f64,
}

/// Winding of the loop around the origin of the plane spanned by its two
/// largest components.
pub fn winding_number(l: &DLoop) -> Result<Winding> {
    if l.samples.len() < 3 {
        return Err(Error::param("loop", "needs at least three samples"));
    }
    let mut weight = [0.0; 3];
    for d in &l.samples {
        let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if !(norm >= GAP_GUARD) {
            return Err(Error::GapClosing(format!(
                "|d| = {norm:.3e} on the loop (critical point)"
            )));
        }
        for c in 0..3 {
            weight[c] += d[c] * d[c];
        }
    }
    let drop = (0..3).min_by(|&a, &b| weight[a].total_cmp(&weight[b])).unwrap();
    let (a, b) = match drop {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let angle = |d: &[f64; 3]| {
        if d[a].hypot(d[b]) < GAP_GUARD {
            None
        } else {
            Some(d[b].atan2(d[a]))
        }
    };
    let mut total = 0.0;
    let n = l.samples.len();
    for i in 0..n {
        let (p, q) = (&l.samples[i], &l.samples[(i + 1) % n]);
        let (ap, aq) = match (angle(p), angle(q)) {
            (Some(x), Some(y)) => (x, y),
            _ => {
                return Err(Error::GapClosing(
                    "loop passes through the origin of its plane".into(),
                ))
            }
        };
        let mut da = aq - ap;
        while da > PI {
            da -= TAU;
        }
        while da <= -PI {
            da += TAU;
        }
        total += da;
    }
    let raw = total / TAU;
    let value = raw.round();
    let residual = (raw - value).abs();
    if residual >= INTEGER_TOL {
        return Err(Error::GapClosing(format!("winding {raw:.4} not integer; refine the loop")));
    }
    Ok(Winding {
        value: value as i64,
        residual,
    })
}

/// Winding of the SSH Bloch vector on 256 points.
pub fn ssh_winding(g_a: f64, g_b: f64) -> Result<i64> {
    if (g_a.abs() - g_b.abs()).abs() <= GAP_GUARD * g_a.abs().max(g_b.abs()).max(1.0) {
        return Err(Error::GapClosing(format!("|g_a| = |g_b| = {}", g_a.abs())));
    }
    let l = DLoop::sample(256, |k| crate::models::ssh_bloch(k, g_a, g_b));
    Ok(winding_number(&l)?.value)
}

/// Berry curvature of the lower band of `h(k) = -d(k) . sigma` on an
/// `nk x nk` grid of the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerryGrid {
    pub nk: usize,
    /// Plaquette curvature `F(k)` at the plaquette centers, row-major in
    /// `(k1, k2)`.
    pub curvature: Vec<f64>,
    /// `sum F dA / 2 pi`, not rounded.
    pub chern: f64,
}

/// Signed solid angle of the spherical triangle `(a, b, c)`.
fn solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cross = [
        b[1] * c[2] - b[2] * c[1],
        b[2] * c[0] - b[0] * c[2],
        b[0] * c[1] - b[1] * c[0],
    ];
    let num = dot(a, cross);
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

/// Curvature `F = n . (d1 n x d2 n) / 2` of the lower band, integrated
/// exactly over each plaquette as half the solid angle swept by the unit
/// vector `n = d / |d|`. The total is then an integer up to rounding.
pub fn berry_curvature_two_band<F>(d: F, nk: usize, exec: Execution) -> Result<BerryGrid>
where
    F: Fn([f64; 2]) -> [f64; 3] + Sync,
{
    if nk < 4 {
        return Err(Error::param("nk", "grid must be at least 4x4"));
    }
    let step = TAU / nk as f64;
    let normals = exec::map_range(exec, nk * nk, |idx| {
        let (i, j) = (idx / nk, idx % nk);
        let v = d([i as f64 * step, j as f64 * step]);
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r < GAP_GUARD {
            None
        } else {
            Some([v[0] / r, v[1] / r, v[2] / r])
        }
    });
    let mut n = Vec::with_capacity(nk * nk);
    for (idx, v) in normals.into_iter().enumerate() {
        n.push(v.ok_or_else(|| {
            Error::GapClosing(format!("d(k) vanishes at grid point {:?}", (idx / nk, idx % nk)))
        })?);
    }
    let at = |i: usize, j: usize| n[(i % nk) * nk + (j % nk)];
    let area = step * step;
    let mut curvature = Vec::with_capacity(nk * nk);
    let mut total = 0.0;
    for i in 0..nk {
        for j in 0..nk {
            let (a, b, c, e) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            let omega = solid_angle(a, b, c) + solid_angle(a, c, e);
            curvature.push(0.5 * omega / area);
            total += omega;
        }
    }
    Ok(BerryGrid {
        nk,
        curvature,
        chern: total / (2.0 * TAU),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernResult {
    pub chern: i64,
    /// `|C_raw - C|`
    pub residual: f64,
    /// Smallest direct gap between the band group and the other bands.
    pub min_gap: f64,
}

/// Chern number of a single band (0-based, ascending energy).
pub fn chern_number(model: &dyn BlochModel, band: usize, nk: usize, exec: Execution) -> Result<ChernResult> {
    chern_number_of_bands(model, band..band + 1, nk, exec)
}

/// Total Chern number of a contiguous band group, by the lattice
/// link-variable method with `det` overlaps. The group must stay separated
/// from the remaining bands on every grid point.
pub fn chern_number_of_bands(
    model: &dyn BlochModel,
    bands: std::ops::Range<usize>,
    nk: usize,
    exec: Execution,
) -> Result<ChernResult> {
    let nb = model.n_bands();
    if bands.is_empty() || bands.end > nb {
        return Err(Error::param("band", format!("band range {bands:?} outside 0..{nb}")));
    }
    if nk < 4 {
        return Err(Error::param("nk", "grid must be at least 4x4"));
    }
    let step = TAU / nk as f64;
    let frames: Vec<(CMatrix, f64)> = exec::map_range(exec, nk * nk, |idx| {
        let (i, j) = (idx / nk, idx % nk);
        let e = eigh_unchecked(&model.hamiltonian([i as f64 * step, j as f64 * step]));
        let mut gap = f64::INFINITY;
        if bands.start > 0 {
            gap = gap.min(e.values[bands.start] - e.values[bands.start - 1]);
        }
        if bands.end < nb {
            gap = gap.min(e.values[bands.end] - e.values[bands.end - 1]);
        }
        (e.vectors.columns(bands.start, bands.len()).into_owned(), gap)
    });
    let min_gap = frames.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    if min_gap < 1e-8 {
        return Err(Error::BandTouching { band: bands.start, gap: min_gap });
    }
    let at = |i: usize, j: usize| &frames[(i % nk) * nk + (j % nk)].0;
    let link = |a: &CMatrix, b: &CMatrix| -> C64 {
        let det = (a.adjoint() * b).determinant();
        det / det.norm()
    };
    let fluxes = exec::map_range(exec, nk * nk, |idx| {
        let (i, j) = (idx / nk, idx % nk);
        let u1 = link(at(i, j), at(i + 1, j));
        let u2 = link(at(i + 1, j), at(i + 1, j + 1));
        let u3 = link(at(i + 1, j + 1), at(i, j + 1));
        let u4 = link(at(i, j + 1), at(i, j));
        (u1 * u2 * u3 * u4).arg()
    });
    // Orientation chosen so that the result agrees with the two-band
    // curvature `n . (d1 n x d2 n) / 2` and with `C_h = w_h - w_{h-1}`.
    let raw = fluxes.iter().sum::<f64>() / TAU;
    let chern = raw.round();
    Ok(ChernResult {
        chern: chern as i64,
        residual: (raw - chern).abs(),
        min_gap,
    })
}

/// Solutions `(w_h, s_h)` of `h = s_h q + w_h p` with `|w_h| <= q / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapWinding {
    pub h: i64,
    /// One solution, or two when `|w_h| = q / 2`.
    pub solutions: Vec<(i64, i64)>,
}

impl GapWinding {
    pub fn is_ambiguous(&self) -> bool {
        self.solutions.len() != 1
    }

    pub fn winding(&self) -> Option<i64> {
        match self.solutions.as_slice() {
            [(w, _)] => Some(*w),
            _ => None,
        }
    }
}

/// Edge windings of the Hofstadter gaps at flux `2 pi p / q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineResult {
    pub p: i64,
    pub q: i64,
    /// Gaps `h = 1..q-1` in order.
    pub gaps: Vec<GapWinding>,
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    let (mut r0, mut r1) = (m, a.rem_euclid(m));
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let qt = r0 / r1;
        (r0, r1) = (r1, r0 - qt * r1);
        (t0, t1) = (t1, t0 - qt * t1);
    }
    t0.rem_euclid(m)
}

/// Solves `h = s q + w p` with `|w| <= q / 2` for every gap `h = 1..q-1`.
pub fn diophantine_windings(p: i64, q: i64) -> Result<DiophantineResult> {
    check_coprime(p, q)?;
    let pinv = mod_inverse(p, q);
    let gaps = (1..q)
        .map(|h| {
            let w0 = (h * pinv).rem_euclid(q);
            let solutions = [w0, w0 - q]
                .into_iter()
                .filter(|w| 2 * w.abs() <= q)
                .map(|w| (w, (h - w * p) / q))
                .collect();
            GapWinding { h, solutions }
        })
        .collect();
    Ok(DiophantineResult { p, q, gaps })
}

impl DiophantineResult {
    /// Winding of gap `h`, or an error if it is ambiguous.
    pub fn gap(&self, h: usize) -> Result<i64> {
        if h == 0 || h as i64 >= self.q {
            return Err(Error::param("gap", format!("gap {h} outside 1..{}", self.q - 1)));
        }
        self.gaps[h - 1].winding().ok_or(Error::AmbiguousWinding { gap: h, w: self.q / 2 })
    }

    /// Picks one of the two solutions of an ambiguous gap.
    pub fn resolve(&mut self, h: usize, w: i64) -> Result<()> {
        if h == 0 || h as i64 >= self.q {
            return Err(Error::param("gap", format!("gap {h} outside 1..{}", self.q - 1)));
        }
        let g = &mut self.gaps[h - 1];
        let sol = g
            .solutions
            .iter()
            .copied()
            .find(|s| s.0 == w)
            .ok_or_else(|| Error::param("w", format!("{w} does not solve gap {h}")))?;
        g.solutions = vec![sol];
        Ok(())
    }

    /// Band Chern numbers `C_h = w_h - w_{h-1}` with `w_0 = w_q = 0`.
    /// Bands next to an ambiguous gap are `None`.
    pub fn band_cherns(&self) -> Vec<Option<i64>> {
        let q = self.q as usize;
        let w = |h: usize| -> Option<i64> {
            if h == 0 || h == q {
                Some(0)
            } else {
                self.gaps[h - 1].winding()
            }
        };
        (1..=q).map(|h| Some(w(h)? - w(h - 1)?)).collect()
    }
}

/// Band Chern numbers from the edge windings, failing on any unresolved
/// ambiguous gap.
pub fn chern_from_windings(d: &DiophantineResult) -> Result<Vec<i64>> {
    for g in &d.gaps {
        if g.is_ambiguous() {
            return Err(Error::AmbiguousWinding { gap: g.h as usize, w: d.q / 2 });
        }
    }
    Ok(d.band_cherns().into_iter().map(|c| c.unwrap()).collect())
}

/// Winding of the nodal chain over a transverse `(ky, kz)` grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodalMap {
    pub n: usize,
    /// Entry `[iy * n + iz]`; `None` on the nodal set.
    pub winding: Vec<Option<i64>>,
    /// Number of connected nodal loops on the torus.
    pub loops: usize,
}

/// The slice at `(ky, kz)` is nodal where `|m'| = 2 |t0'|`. Points whose
/// gap `|2|t0'| - |m'||` is below half the local grid resolution of `m'`
/// are marked nodal; the remaining points carry winding 1 inside the
/// nodal loop and 0 outside.
pub fn nodal_winding_map(t0p: f64, m: f64, d: f64, n: usize, exec: Execution) -> Result<NodalMap> {
    if n < 4 {
        return Err(Error::param("n", "grid must be at least 4x4"));
    }
    if !(t0p != 0.0 && t0p.is_finite() && m.is_finite() && d.is_finite()) {
        return Err(Error::param("t0p", "must be finite and nonzero"));
    }
    let step = TAU / n as f64;
    let res = exec::map_range(exec, n * n, |idx| -> Result<Option<i64>> {
        let (ky, kz) = ((idx / n) as f64 * step, (idx % n) as f64 * step);
        let mp = nodal_mass(m, d, ky, kz);
        let slope = 2.0 * d.abs() * (ky.sin().abs() + kz.sin().abs()) + 2.0 * d.abs() * step;
        let gap = (2.0 * t0p.abs() - mp.abs()).abs();
        if gap <= 0.5 * slope * step + GAP_GUARD {
            return Ok(None);
        }
        let l = DLoop::sample(256, |k| nodal_bloch(t0p, mp, k));
        Ok(Some(winding_number(&l)?.value))
    });
    let winding: Vec<Option<i64>> = res.into_iter().collect::<Result<_>>()?;
    let loops = count_components(&winding, n);
    Ok(NodalMap { n, winding, loops })
}

/// 8-connected components of the `None` cells on an `n x n` torus.
fn count_components(cells: &[Option<i64>], n: usize) -> usize {
    let mut seen = vec![false; n * n];
    let mut count = 0;
    for start in 0..n * n {
        if cells[start].is_some() || seen[start] {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(c) = stack.pop() {
            let (i, j) = ((c / n) as i64, (c % n) as i64);
            for di in -1..=1 {
                for dj in -1..=1 {
                    let ni = (i + di).rem_euclid(n as i64) as usize;
                    let nj = (j + dj).rem_euclid(n as i64) as usize;
                    let nb = ni * n + nj;
                    if cells[nb].is_none() && !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_windings() {
        let w = |m: f64| {
            winding_number(&DLoop::sample(200, |k| [(m * k).cos(), (m * k).sin(), 0.0]))
                .unwrap()
                .value
        };
        assert_eq!(w(1.0), 1);
        assert_eq!(w(2.0), 2);
        assert_eq!(w(-1.0), -1);
        let off = DLoop::sample(100, |k| [3.0 + k.cos(), k.sin(), 0.0]);
        assert_eq!(winding_number(&off).unwrap().value, 0);
    }

    #[test]
    fn ssh_phases() {
        assert_eq!(ssh_winding(1.0, 5.0).unwrap(), 1);
        assert_eq!(ssh_winding(5.0, 1.0).unwrap(), 0);
        assert!(matches!(ssh_winding(2.0, 2.0), Err(Error::GapClosing(_))));
    }

    #[test]
    fn mod_inverse_small() {
        assert_eq!(mod_inverse(2, 5), 3);
        assert_eq!(mod_inverse(3, 7), 5);
    }

    #[test]
    fn diophantine_q5() {
        let d = diophantine_windings(1, 5).unwrap();
        let w: Vec<_> = d.gaps.iter().map(|g| g.winding()).collect();
        assert_eq!(w, vec![Some(1), Some(2), Some(-2), Some(-1)]);
        for g in &d.gaps {
            let (w, s) = g.solutions[0];
            assert_eq!(g.h, s * 5 + w);
        }
        assert_eq!(chern_from_windings(&d).unwrap(), vec![1, 1, -4, 1, 1]);
    }

    #[test]
    fn diophantine_q4_ambiguous() {
        let mut d = diophantine_windings(1, 4).unwrap();
        let w: Vec<_> = d.gaps.iter().map(|g| g.winding()).collect();
        assert_eq!(w, vec![Some(1), None, Some(-1)]);
        assert!(matches!(d.gap(2), Err(Error::AmbiguousWinding { gap: 2, w: 2 })));
        assert_eq!(d.band_cherns(), vec![Some(1), None, None, Some(1)]);
        assert!(chern_from_windings(&d).is_err());
        d.resolve(2, -2).unwrap();
        assert_eq!(chern_from_windings(&d).unwrap(), vec![1, -3, 1, 1]);
    }

    #[test]
    fn nodal_components_on_torus() {
        let n = 6;
        let mut cells = vec![Some(0); n * n];
        for j in 0..n {
            cells[j] = None; // a row wrapping around the torus
        }
        cells[3 * n + 3] = None;
        assert_eq!(count_components(&cells, n), 2);
    }
}

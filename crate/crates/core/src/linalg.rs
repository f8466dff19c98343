//! Dense and sparse complex linear algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `r e^{i theta}`
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Largest entry of `|M - M^dagger|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Largest entry of `|U^dagger U - 1|`.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let p = u.adjoint() * u;
    let n = u.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((p[(i, j)] - target).norm());
        }
    }
    dev
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// Eigenpairs of a Hermitian matrix, ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector of `values[i]`.
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }
}

/// Hermitian eigendecomposition. The input is checked for Hermiticity
/// relative to its largest entry.
pub fn eigh(m: &CMatrix) -> Result<Eigh> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let dev = hermitian_deviation(m);
    if dev > 1e-10 * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(eigh_unchecked(m))
}

pub(crate) fn eigh_unchecked(m: &CMatrix) -> Eigh {
    let n = m.nrows();
    if n == 0 {
        return Eigh {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    // Symmetrize so tiny asymmetries do not leak into the solver.
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let se = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = se.eigenvectors.column(src);
        // Fix the gauge: largest component real and positive.
        let mut pivot = 0;
        let mut best = -1.0;
        for (k, z) in col.iter().enumerate() {
            if z.norm() > best + 1e-12 {
                best = z.norm();
                pivot = k;
            }
        }
        let phase = if best > 0.0 {
            col[pivot].conj() / best
        } else {
            c(1.0, 0.0)
        };
        for k in 0..n {
            vectors[(k, dst)] = col[k] * phase;
        }
    }
    Eigh { values, vectors }
}

/// One nonzero entry of a sparse matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

/// Compressed sparse row matrix, used for matrix-vector products in the
/// time integrators on large lattices.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[Triplet]) -> Self {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for t in triplets {
            rows[t.row].push((t.col, c(t.re, t.im)));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (j, v) in r {
                if last == Some(j) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                if z != C64::new(0.0, 0.0) {
                    t.push(Triplet {
                        row: i,
                        col: j,
                        re: z.re,
                        im: z.im,
                    });
                }
            }
        }
        Self::from_triplets(m.nrows(), &t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[C64], y: &mut [C64]) {
        for i in 0..self.n {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    /// Dense copy.
    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] += self.vals[k];
            }
        }
        m
    }
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// `d . sigma`
pub fn d_dot_sigma(d: [f64; 3]) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[c(d[2], 0.), c(d[0], -d[1]), c(d[0], d[1]), c(-d[2], 0.)],
    )
}

/// Row-major `[re, im]` pairs.
pub fn matrix_to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

pub fn matrix_from_pairs(dim: usize, pairs: &[[f64; 2]]) -> Result<CMatrix> {
    if pairs.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: pairs.len(),
        });
    }
    Ok(CMatrix::from_row_iterator(
        dim,
        dim,
        pairs.iter().map(|p| c(p[0], p[1])),
    ))
}

/// `exp(-i H t)` for Hermitian `H` through its eigendecomposition.
pub fn unitary_propagator(e: &Eigh, t: f64) -> CMatrix {
    let n = e.len();
    let mut scaled = e.vectors.clone();
    for j in 0..n {
        let ph = cis(-e.values[j] * t);
        for i in 0..n {
            scaled[(i, j)] *= ph;
        }
    }
    scaled * e.vectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigh_sorted_and_orthonormal() {
        let h = d_dot_sigma([0.3, -0.4, 1.2]);
        let e = eigh(&h).unwrap();
        let r = (0.09f64 + 0.16 + 1.44).sqrt();
        assert_relative_eq!(e.values[0], -r, epsilon = 1e-12);
        assert_relative_eq!(e.values[1], r, epsilon = 1e-12);
        assert!(unitarity_deviation(&e.vectors) < 1e-12);
        let back = &e.vectors
            * CMatrix::from_diagonal(&DVector::from_iterator(2, e.values.iter().map(|&v| c(v, 0.))))
            * e.vectors.adjoint();
        assert!(max_abs(&(back - h)) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(eigh(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn csr_matches_dense() {
        let h = d_dot_sigma([1.0, 2.0, -0.5]);
        let s = CsrMatrix::from_dense(&h);
        let x = [c(1.0, 0.5), c(-0.25, 2.0)];
        let mut y = [C64::default(); 2];
        s.mul_vec(&x, &mut y);
        let yd = &h * CVector::from_column_slice(&x);
        for i in 0..2 {
            assert!((y[i] - yd[i]).norm() < 1e-14);
        }
        assert!(max_abs(&(s.to_dense() - h)) == 0.0);
    }

    #[test]
    fn propagator_is_unitary() {
        let h = d_dot_sigma([0.7, 0.1, -0.2]);
        let u = unitary_propagator(&eigh(&h).unwrap(), 3.3);
        assert!(unitarity_deviation(&u) < 1e-12);
        let direct = (h * c(0.0, -3.3)).exp();
        assert!(max_abs(&(u - direct)) < 1e-10);
    }
}

//! Positive semidefinite cone in scaled lower-triangular vectorization.
//!
//! `svec(T)` lists the lower triangle column by column with off-diagonal
//! entries multiplied by `sqrt 2`, so `<W, T> = svec(W)' svec(T)`.

use super::ConeError;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::f64::consts::SQRT_2;

/// Side `n` of a matrix whose svec has length `len`.
pub fn psd_side(len: usize) -> Result<usize, ConeError> {
    let n = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    for cand in [n, n + 1] {
        if cand * (cand + 1) / 2 == len {
            return Ok(cand);
        }
    }
    Err(ConeError::NonTriangularLength(len))
}

/// Position of entry `(i, j)` with `i >= j` in svec order.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i >= j && i < n);
    j * n - j * (j + 1) / 2 + i
}

pub fn svec(t: &DMatrix<f64>) -> Result<Vec<f64>, ConeError> {
    let n = t.nrows();
    if t.ncols() != n {
        return Err(ConeError::DimensionMismatch {
            expected: n,
            got: t.ncols(),
        });
    }
    let mut asym: f64 = 0.0;
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        out.push(t[(j, j)]);
        for i in j + 1..n {
            asym = asym.max((t[(i, j)] - t[(j, i)]).abs());
            out.push(SQRT_2 * t[(i, j)]);
        }
    }
    if asym > 1e-12 {
        return Err(ConeError::AsymmetricMatrix(asym));
    }
    Ok(out)
}

pub fn smat(v: &[f64]) -> Result<DMatrix<f64>, ConeError> {
    let n = psd_side(v.len())?;
    Ok(smat_unchecked(n, v))
}

fn smat_unchecked(n: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = v[k];
        k += 1;
        for i in j + 1..n {
            let x = v[k] / SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

fn svec_unchecked(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        out.push(m[(j, j)]);
        for i in j + 1..n {
            out.push(SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    out
}

/// Eigenvalues and orthonormal eigenvectors (as columns) of a symmetric
/// matrix.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(m.clone());
    (e.eigenvalues, e.eigenvectors)
}

fn outer_svec(v: &[f64], scale: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        out.push(scale * v[j] * v[j]);
        for i in j + 1..n {
            out.push(SQRT_2 * scale * v[i] * v[j]);
        }
    }
    out
}

pub(super) fn violation(y: &[f64]) -> Result<f64, ConeError> {
    let m = smat(y)?;
    let (vals, _) = sym_eigen(&m);
    Ok((-vals.min()).max(0.0))
}

pub(super) fn project(n: usize, y: &[f64]) -> Vec<f64> {
    let (vals, vecs) = sym_eigen(&smat_unchecked(n, y));
    let clamped = DMatrix::from_diagonal(&vals.map(|l| l.max(0.0)));
    svec_unchecked(&(&vecs * clamped * vecs.transpose()))
}

pub(super) fn initial_rays(n: usize) -> Vec<Vec<f64>> {
    let dim = n * (n + 1) / 2;
    let mut rays = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut z = vec![0.0; dim];
        z[svec_index(n, i, i)] = 1.0;
        rays.push(z);
    }
    for j in 0..n {
        for i in j + 1..n {
            for sign in [1.0, -1.0] {
                let mut z = vec![0.0; dim];
                z[svec_index(n, i, i)] = 1.0;
                z[svec_index(n, j, j)] = 1.0;
                z[svec_index(n, i, j)] = sign * SQRT_2;
                rays.push(z);
            }
        }
    }
    rays
}

pub(super) fn disaggregate(n: usize, z: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (vals, vecs) = sym_eigen(&smat_unchecked(n, z));
    let cutoff = 1e-12 * vals.amax();
    let mut rays = Vec::new();
    for (k, &l) in vals.iter().enumerate() {
        if l > cutoff {
            let v: Vec<f64> = vecs.column(k).iter().copied().collect();
            rays.push(outer_svec(&v, l));
        }
    }
    (rays, vec![0.0; z.len()])
}

pub(super) fn separate(n: usize, y: &[f64], tol: f64) -> Vec<Vec<f64>> {
    let (vals, vecs) = sym_eigen(&smat_unchecked(n, y));
    vals.iter()
        .enumerate()
        .filter(|(_, l)| **l < -tol)
        .map(|(k, _)| {
            let v: Vec<f64> = vecs.column(k).iter().copied().collect();
            outer_svec(&v, 1.0)
        })
        .collect()
}

/// A rotated second-order constraint `(f1'svec(T), f2'svec(T), f3'svec(T))`
/// in `K_R^3` implied by `T` PSD. With `omega_bar` equal to `omega` with
/// entry `i` zeroed, the triple is `(T_ii, omega_bar' T omega_bar,
/// sqrt2 omega_bar' T e_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthenedRsocConstraint {
    /// Pinned row/column index (0-based).
    pub i: usize,
    pub omega: Vec<f64>,
    /// svec coefficient vectors of the three linear functionals.
    pub coefficients: [Vec<f64>; 3],
}

impl StrengthenedRsocConstraint {
    /// Evaluates the triple on `svec(T)`.
    pub fn evaluate(&self, t: &[f64]) -> [f64; 3] {
        let f = |c: &Vec<f64>| c.iter().zip(t).map(|(a, b)| a * b).sum::<f64>();
        [
            f(&self.coefficients[0]),
            f(&self.coefficients[1]),
            f(&self.coefficients[2]),
        ]
    }

    /// Violation of `2 a b >= c^2, a, b >= 0` at `svec(T)`.
    pub fn violation(&self, t: &[f64]) -> f64 {
        let v = self.evaluate(t);
        super::PrimitiveCone::RotatedSecondOrder(3)
            .violation(&v)
            .unwrap_or(f64::INFINITY)
    }
}

/// Builds the rotated second-order strengthening of the rank-one cut
/// `omega' T omega >= 0` pinned at index `i` (0-based).
pub fn strengthen_psd_cut(omega: &[f64], i: usize) -> Result<StrengthenedRsocConstraint, ConeError> {
    let n = omega.len();
    if i >= n {
        return Err(ConeError::IndexOutOfRange { index: i, side: n });
    }
    if omega.iter().all(|w| *w == 0.0) {
        return Err(ConeError::ZeroOmega);
    }
    let dim = n * (n + 1) / 2;
    let mut f1 = vec![0.0; dim];
    f1[svec_index(n, i, i)] = 1.0;
    let mut bar = omega.to_vec();
    bar[i] = 0.0;
    let f2 = outer_svec(&bar, 1.0);
    let mut f3 = vec![0.0; dim];
    for (j, &w) in bar.iter().enumerate() {
        if j != i {
            let (a, b) = if j > i { (j, i) } else { (i, j) };
            // svec coefficient sqrt2 * (w_j / sqrt2)
            f3[svec_index(n, a, b)] = w;
        }
    }
    Ok(StrengthenedRsocConstraint {
        i,
        omega: omega.to_vec(),
        coefficients: [f1, f2, f3],
    })
}

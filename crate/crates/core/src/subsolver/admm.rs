//! Operator splitting on the homogeneous self-dual embedding of
//! `min c'x : A x + s = b, s in K` and its dual `max -b'y : A'y + c = 0,
//! y in K*`.

use crate::cones::{ConeProduct, PrimitiveCone};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

const ALPHA: f64 = 1.5;
const RUIZ_PASSES: usize = 25;
const SCALE_MIN: f64 = 1e-4;
const SCALE_MAX: f64 = 1e4;
/// Iterations between classification attempts.
pub(crate) const CHECK_EVERY: usize = 10;

/// Current embedding iterate mapped back to the unscaled problem. Nothing
/// is divided by `tau`.
#[derive(Debug, Clone)]
pub(crate) struct Iterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub tau: f64,
    pub kappa: f64,
}

pub(crate) struct Admm<'a> {
    cones: &'a ConeProduct,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    d: Vec<f64>,
    e: Vec<f64>,
    sb: f64,
    sc: f64,
    chol: Cholesky<f64, Dyn>,
    /// `M^{-1} h` with `h = (c, b)`.
    g: DVector<f64>,
    hg: f64,
}

impl<'a> Admm<'a> {
    pub fn new(a: &[Vec<f64>], b: &[f64], c: &[f64], cones: &'a ConeProduct) -> Self {
        let m = b.len();
        let n = c.len();
        let (d, e) = equilibrate(a, m, n, cones);
        let mut am = DMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                am[(i, j)] = d[i] * a[i][j] * e[j];
            }
        }
        let db = DVector::from_iterator(m, (0..m).map(|i| d[i] * b[i]));
        let ec = DVector::from_iterator(n, (0..n).map(|j| e[j] * c[j]));
        let nb = db.norm();
        let nc = ec.norm();
        let sb = if nb > 1e-12 { nb } else { 1.0 };
        let sc = if nc > 1e-12 { nc } else { 1.0 };
        let bs = db / sb;
        let cs = ec / sc;
        let k = DMatrix::identity(n, n) + am.transpose() * &am;
        let chol = Cholesky::new(k).expect("I + A'A is positive definite");
        let mut admm = Admm {
            cones,
            a: am,
            b: bs,
            c: cs,
            d,
            e,
            sb,
            sc,
            chol,
            g: DVector::zeros(n + m),
            hg: 0.0,
        };
        let h = admm.h();
        admm.g = admm.solve_m(&h);
        admm.hg = h.dot(&admm.g);
        admm
    }

    fn h(&self) -> DVector<f64> {
        let (n, m) = (self.c.len(), self.b.len());
        let mut h = DVector::zeros(n + m);
        h.rows_mut(0, n).copy_from(&self.c);
        h.rows_mut(n, m).copy_from(&self.b);
        h
    }

    /// Solves `[[I, A'], [-A, I]] p = r`.
    fn solve_m(&self, r: &DVector<f64>) -> DVector<f64> {
        let (n, m) = (self.c.len(), self.b.len());
        let r1 = r.rows(0, n);
        let r2 = r.rows(n, m);
        let p1 = self.chol.solve(&(r1 - self.a.transpose() * r2));
        let p2 = r2 + &self.a * &p1;
        let mut p = DVector::zeros(n + m);
        p.rows_mut(0, n).copy_from(&p1);
        p.rows_mut(n, m).copy_from(&p2);
        p
    }

    /// Solves `(I + Q) w = rhs`.
    fn solve_iq(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let k = rhs.len() - 1;
        let w = self.solve_m(&rhs.rows(0, k).into_owned());
        let h = self.h();
        let tau = (rhs[k] + h.dot(&w)) / (1.0 + self.hg);
        let mut out = DVector::zeros(k + 1);
        out.rows_mut(0, k).copy_from(&(w - &self.g * tau));
        out[k] = tau;
        out
    }

    fn unscale(&self, u: &DVector<f64>, v: &DVector<f64>) -> Iterate {
        let (n, m) = (self.c.len(), self.b.len());
        Iterate {
            x: (0..n).map(|j| self.sb * self.e[j] * u[j]).collect(),
            y: (0..m).map(|i| self.sc * self.d[i] * u[n + i]).collect(),
            tau: u[n + m],
            kappa: v[n + m],
        }
    }

    /// Iterates until `accept` returns a value or `max_iters` is reached.
    pub fn run<T>(&self, max_iters: usize, mut accept: impl FnMut(&Iterate) -> Option<T>) -> Option<T> {
        let (n, m) = (self.c.len(), self.b.len());
        let len = n + m + 1;
        let mut u = DVector::zeros(len);
        let mut v = DVector::zeros(len);
        u[len - 1] = 1.0;
        v[len - 1] = 1.0;
        for it in 1..=max_iters {
            let ut = self.solve_iq(&(&u + &v));
            let ubar = &ut * ALPHA + &u * (1.0 - ALPHA);
            let mut un = &ubar - &v;
            let yproj = self.cones.project_dual(un.rows(n, m).as_slice());
            un.rows_mut(n, m).copy_from_slice(&yproj);
            un[len - 1] = un[len - 1].max(0.0);
            v = &v - &ubar + &un;
            u = un;
            if it % CHECK_EVERY == 0 || it == max_iters {
                if let Some(t) = accept(&self.unscale(&u, &v)) {
                    return Some(t);
                }
            }
        }
        None
    }
}

/// Ruiz scaling of rows and columns, uniform on each nonpolyhedral block.
fn equilibrate(a: &[Vec<f64>], m: usize, n: usize, cones: &ConeProduct) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![1.0; m];
    let mut e = vec![1.0; n];
    for _ in 0..RUIZ_PASSES {
        let mut rn = vec![0.0f64; m];
        let mut cn = vec![0.0f64; n];
        for i in 0..m {
            for j in 0..n {
                let v = (d[i] * a[i][j] * e[j]).abs();
                rn[i] = rn[i].max(v);
                cn[j] = cn[j].max(v);
            }
        }
        for (_, cone, r) in cones.blocks() {
            if !uniform_block(cone) {
                continue;
            }
            let big = r.clone().map(|i| rn[i]).fold(0.0, f64::max);
            for i in r {
                rn[i] = big;
            }
        }
        for i in 0..m {
            if rn[i] > 1e-12 {
                d[i] = (d[i] / rn[i].sqrt()).clamp(SCALE_MIN, SCALE_MAX);
            }
        }
        for j in 0..n {
            if cn[j] > 1e-12 {
                e[j] = (e[j] / cn[j].sqrt()).clamp(SCALE_MIN, SCALE_MAX);
            }
        }
    }
    (d, e)
}

fn uniform_block(cone: &PrimitiveCone) -> bool {
    !matches!(
        cone,
        PrimitiveCone::Zero(_) | PrimitiveCone::Free(_) | PrimitiveCone::NonNeg(_) | PrimitiveCone::NonPos(_)
    )
}

//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `min c'x` subject to `a_i' x <= beta_i` and per-column bounds
//! (possibly infinite). Columns are shifted or split so every internal
//! variable is nonnegative.

use super::LpError;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum SimplexOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    /// `ray` is an improving direction: feasible for the homogeneous system
    /// with `c' ray < 0`.
    Unbounded { ray: Vec<f64> },
}

/// How an original column maps to internal nonnegative variables.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// `x = lo + y`
    Shift(usize, f64),
    /// `x = hi - y`
    Flip(usize, f64),
    /// `x = p - q`
    Split(usize, usize),
}

struct Tableau {
    m: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.width + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * (self.width + 1) + self.width]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.width + 1;
        &mut self.data[i * w..(i + 1) * w]
    }

    /// Pivots on `(r, e)`; row `m` is the objective row.
    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width + 1;
        let p = self.at(r, e);
        for v in self.row_mut(r) {
            *v /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[e];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(prow.iter()) {
                    *a -= f * b;
                }
                row[e] = 0.0;
            }
        };
        for row in before.chunks_mut(w) {
            eliminate(row);
        }
        for row in after.chunks_mut(w) {
            eliminate(row);
        }
        self.basis[r] = e;
    }

    /// Bland's rule pass on the objective in row `m`. Columns `>= allowed`
    /// never enter.
    fn run(&mut self, allowed: usize, iters: &mut usize, cap: usize) -> Result<Option<usize>, LpError> {
        loop {
            let m = self.m;
            let entering = (0..allowed).find(|&j| self.at(m, j) < -COST_TOL);
            let Some(e) = entering else {
                return Ok(None);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.at(i, e);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie || tie && self.basis[i] < self.basis[k] {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Some(e));
            };
            *iters += 1;
            if *iters > cap {
                return Err(LpError::IterationLimit(cap));
            }
            self.pivot(r, e);
        }
    }
}

/// Solves the LP. `rows` are `(sparse coefficients, beta)`, `bounds` are
/// `(lower, upper)` with infinities allowed.
pub fn solve(
    c: &[f64],
    rows: &[(Vec<(usize, f64)>, f64)],
    bounds: &[(f64, f64)],
) -> Result<SimplexOutcome, LpError> {
    let n = c.len();
    assert_eq!(bounds.len(), n);

    let mut maps = Vec::with_capacity(n);
    let mut ny = 0;
    for &(lo, hi) in bounds {
        if lo > hi {
            return Ok(SimplexOutcome::Infeasible);
        }
        maps.push(if lo.is_finite() {
            ny += 1;
            ColMap::Shift(ny - 1, lo)
        } else if hi.is_finite() {
            ny += 1;
            ColMap::Flip(ny - 1, hi)
        } else {
            ny += 2;
            ColMap::Split(ny - 2, ny - 1)
        });
    }

    // internal rows: a' y <= beta'
    let mut irows: Vec<(Vec<(usize, f64)>, f64)> = Vec::with_capacity(rows.len() + n);
    let mut scale_b: f64 = 1.0;
    for (coefs, beta) in rows {
        let mut out = Vec::with_capacity(coefs.len() + 1);
        let mut rhs = *beta;
        for &(j, a) in coefs {
            match maps[j] {
                ColMap::Shift(y, lo) => {
                    rhs -= a * lo;
                    out.push((y, a));
                }
                ColMap::Flip(y, hi) => {
                    rhs -= a * hi;
                    out.push((y, -a));
                }
                ColMap::Split(p, q) => {
                    out.push((p, a));
                    out.push((q, -a));
                }
            }
        }
        let big = out.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        if big <= 1e-12 {
            // constant row 0 <= rhs
            if rhs < -1e-9 * (1.0 + beta.abs()) {
                return Ok(SimplexOutcome::Infeasible);
            }
            continue;
        }
        for (_, v) in out.iter_mut() {
            *v /= big;
        }
        rhs /= big;
        scale_b = scale_b.max(rhs.abs());
        irows.push((out, rhs));
    }
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        if let ColMap::Shift(y, _) = maps[j] {
            if hi.is_finite() {
                irows.push((vec![(y, 1.0)], hi - lo));
                scale_b = scale_b.max((hi - lo).abs());
            }
        }
    }

    let m = irows.len();
    let art_rows: Vec<usize> = (0..m).filter(|&i| irows[i].1 < 0.0).collect();
    let na = art_rows.len();
    let width = ny + m + na;
    let mut t = Tableau {
        m,
        width,
        data: vec![0.0; (m + 1) * (width + 1)],
        basis: vec![0; m],
    };
    let mut art_of_row = vec![usize::MAX; m];
    for (k, &i) in art_rows.iter().enumerate() {
        art_of_row[i] = ny + m + k;
    }
    for (i, (coefs, rhs)) in irows.iter().enumerate() {
        let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
        let row = t.row_mut(i);
        for &(j, a) in coefs {
            row[j] += sign * a;
        }
        row[ny + i] = sign;
        row[width] = sign * rhs;
        if sign < 0.0 {
            row[art_of_row[i]] = 1.0;
        }
        t.basis[i] = if sign < 0.0 { art_of_row[i] } else { ny + i };
    }

    let cap = 50 * (m + width).max(1);
    let mut iters = 0;

    // phase one: minimize the sum of artificials
    if na > 0 {
        for &i in &art_rows {
            for j in 0..=width {
                let v = t.at(i, j);
                t.data[m * (width + 1) + j] -= v;
            }
        }
        for k in 0..na {
            t.data[m * (width + 1) + ny + m + k] = 0.0;
        }
        t.run(width, &mut iters, cap)?;
        let infeas = -t.rhs(m);
        if infeas > 1e-9 * scale_b.max(1.0) {
            return Ok(SimplexOutcome::Infeasible);
        }
        // drive artificials out of the basis where possible
        for i in 0..m {
            if t.basis[i] >= ny + m {
                if let Some(j) = (0..ny + m).find(|&j| t.at(i, j).abs() > PIVOT_TOL) {
                    t.pivot(i, j);
                }
            }
        }
    }

    // phase two objective row
    let mut cy = vec![0.0; width];
    for (j, map) in maps.iter().enumerate() {
        match *map {
            ColMap::Shift(y, _) => cy[y] = c[j],
            ColMap::Flip(y, _) => cy[y] = -c[j],
            ColMap::Split(p, q) => {
                cy[p] = c[j];
                cy[q] = -c[j];
            }
        }
    }
    {
        let w = width + 1;
        let mut obj = vec![0.0; w];
        obj[..width].copy_from_slice(&cy);
        for i in 0..m {
            let cb = cy[t.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    obj[j] -= cb * t.data[i * w + j];
                }
            }
        }
        t.data[m * w..].copy_from_slice(&obj);
    }
    let unbounded = t.run(ny + m, &mut iters, cap)?;

    let mut y = vec![0.0; width];
    for i in 0..m {
        y[t.basis[i]] = t.rhs(i).max(0.0);
    }
    let to_x = |y: &[f64], homogeneous: bool| -> Vec<f64> {
        maps.iter()
            .map(|map| match *map {
                ColMap::Shift(k, lo) => y[k] + if homogeneous { 0.0 } else { lo },
                ColMap::Flip(k, hi) => (if homogeneous { 0.0 } else { hi }) - y[k],
                ColMap::Split(p, q) => y[p] - y[q],
            })
            .collect()
    };
    if let Some(e) = unbounded {
        let mut d = vec![0.0; width];
        d[e] = 1.0;
        for i in 0..m {
            d[t.basis[i]] = -t.at(i, e);
        }
        return Ok(SimplexOutcome::Unbounded { ray: to_x(&d, true) });
    }
    let x = to_x(&y, false);
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(SimplexOutcome::Optimal { x, objective })
}

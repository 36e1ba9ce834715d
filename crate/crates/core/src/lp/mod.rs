//! The polyhedral outer approximation: K* cut rows over the problem's
//! columns (plus extended formulation auxiliaries), integer column bounds,
//! and an explicit feasibility tolerance `delta`.
//!
//! A ray `z` on block `k` with multiplier `gamma` is stored as the unit row
//! `u = z / ||z||` with weight `sigma = gamma ||z||` and imposed as
//! `u'(b_k - A_k x) >= -delta / sigma`, which is exactly what an LP solver
//! with absolute row tolerance `delta` may return for the row
//! `gamma z'(b_k - A_k x) >= 0`. Integer bounds are imposed exactly.

mod simplex;

pub use simplex::SimplexOutcome;

use crate::cones::{self, ConeError, ConeProduct, KStarRay, PrimitiveCone};
use crate::model::{MiConicProblem, SparseMatrix};
use thiserror::Error;

/// Cosine above which two rows on the same block are the same cut.
pub const DEDUP_COSINE: f64 = 1.0 - 1e-12;
/// Relative dual-membership tolerance checked on insertion.
pub const INSERT_DUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("simplex iteration cap {0} reached")]
    IterationLimit(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ray is not in the dual cone of block {block} (violation {violation:.3e})")]
    DualInfeasibleRay { block: usize, violation: f64 },
    #[error("block index {0} out of range")]
    BadBlock(usize),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    /// `x` has the problem's columns only; auxiliaries are dropped.
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded { ray: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub delta: f64,
    pub use_soc_ef: bool,
    pub use_initial_cuts: bool,
    pub soc_full_diamond_limit: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            delta: 1e-8,
            use_soc_ef: true,
            use_initial_cuts: true,
            soc_full_diamond_limit: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sub {
    Plain,
    EfTriple(usize),
    EfRow,
    /// One row over every block, keyed under bucket `cones.len()`.
    Aggregate,
}

#[derive(Debug, Clone)]
struct Row {
    block: usize,
    sub: Sub,
    dir: Vec<f64>,
    coefs: Vec<(usize, f64)>,
    rhs0: f64,
    sigma: f64,
}

#[derive(Debug, Clone)]
struct EfBlock {
    /// First auxiliary column; `pi_i` is column `aux + i`.
    aux: usize,
    n: usize,
}

#[derive(Debug, Clone)]
pub struct LpModel {
    a: SparseMatrix,
    b: Vec<f64>,
    cones: ConeProduct,
    n: usize,
    int_count: usize,
    c: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
    by_block: Vec<Vec<usize>>,
    ef: Vec<Option<EfBlock>>,
    delta: f64,
}

impl LpModel {
    /// Builds the model with the linear blocks as rows and, if enabled, the
    /// initial fixed cuts of every nonpolyhedral block. Integer bounds are
    /// taken from the problem (infinite where unknown).
    pub fn new(p: &MiConicProblem, opts: &LpOptions) -> Self {
        let n = p.num_vars();
        let mut ef = vec![None; p.cones.len()];
        let mut ncols = n;
        if opts.use_soc_ef {
            for (k, cone, _) in p.cones.blocks() {
                if let PrimitiveCone::SecondOrder(d) = cone {
                    if *d >= 3 {
                        ef[k] = Some(EfBlock { aux: ncols, n: d - 1 });
                        ncols += d - 1;
                    }
                }
            }
        }
        let mut c = p.c.clone();
        c.resize(ncols, 0.0);
        let mut lower = vec![f64::NEG_INFINITY; ncols];
        let mut upper = vec![f64::INFINITY; ncols];
        for j in 0..p.int_count {
            if let Some(l) = p.int_lower[j] {
                lower[j] = l as f64;
            }
            if let Some(u) = p.int_upper[j] {
                upper[j] = u as f64;
            }
        }
        let mut model = LpModel {
            a: p.a.clone(),
            b: p.b.clone(),
            cones: p.cones.clone(),
            n,
            int_count: p.int_count,
            c,
            lower,
            upper,
            rows: Vec::new(),
            by_block: vec![Vec::new(); p.cones.len() + 1],
            ef,
            delta: opts.delta,
        };
        for (k, cone, _) in p.cones.clone().blocks() {
            let d = cone.dim();
            let unit = |i: usize, s: f64| {
                let mut e = vec![0.0; d];
                e[i] = s;
                e
            };
            match cone {
                PrimitiveCone::NonNeg(_) => (0..d).for_each(|i| {
                    model.insert_plain(k, &unit(i, 1.0), 1.0);
                }),
                PrimitiveCone::NonPos(_) => (0..d).for_each(|i| {
                    model.insert_plain(k, &unit(i, -1.0), 1.0);
                }),
                PrimitiveCone::Zero(_) => (0..d).for_each(|i| {
                    model.insert_plain(k, &unit(i, 1.0), 1.0);
                    model.insert_plain(k, &unit(i, -1.0), 1.0);
                }),
                PrimitiveCone::Free(_) => {}
                _ => {}
            }
            if let Some(efb) = model.ef[k].clone() {
                model.insert_ef_row(k, 1.0);
                if opts.use_initial_cuts {
                    for lc in cones::ef_initial_rays(efb.n) {
                        model.insert_triple(k, lc.index, &lc.ray, 1.0);
                    }
                }
            } else if opts.use_initial_cuts {
                for z in cones::initial_fixed_rays(cone, opts.soc_full_diamond_limit) {
                    model.insert_plain(k, &z, 1.0);
                }
            }
        }
        model
    }

    pub fn num_cols(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn set_delta(&mut self, delta: f64) {
        assert!(delta >= 0.0);
        self.delta = delta;
    }

    /// Replaces the bounds of the integer columns.
    pub fn set_int_bounds(&mut self, l: &[i64], u: &[i64]) -> Result<(), LpError> {
        for v in [l.len(), u.len()] {
            if v != self.int_count {
                return Err(LpError::DimensionMismatch {
                    expected: self.int_count,
                    got: v,
                });
            }
        }
        for j in 0..self.int_count {
            self.lower[j] = l[j] as f64;
            self.upper[j] = u[j] as f64;
        }
        Ok(())
    }

    /// Sets the objective on the problem's columns.
    pub fn set_objective(&mut self, c: &[f64]) {
        assert_eq!(c.len(), self.n);
        self.c[..self.n].copy_from_slice(c);
    }

    /// Adds the cut `scale * z'(b_k - A_k x) >= 0` (relaxed by `delta`),
    /// lifting it through the extended formulation for second-order blocks
    /// that use one. Returns the ids of the rows that now carry it.
    pub fn add_cut(&mut self, ray: &KStarRay) -> Result<Vec<usize>, LpError> {
        let k = ray.block;
        if k >= self.cones.len() {
            return Err(LpError::BadBlock(k));
        }
        let cone = *self.cones.cone(k);
        if ray.values.len() != cone.dim() {
            return Err(LpError::DimensionMismatch {
                expected: cone.dim(),
                got: ray.values.len(),
            });
        }
        let z = &ray.values;
        let scale = 1.0 + cones::norm_inf(z);
        let violation = cone.dual_violation(z)?;
        if violation > INSERT_DUAL_TOL * scale {
            return Err(LpError::DualInfeasibleRay { block: k, violation });
        }
        if z.iter().all(|v| *v == 0.0) {
            return Ok(Vec::new());
        }
        let Some(efb) = self.ef[k].clone() else {
            return Ok(vec![self.insert_plain(k, z, ray.scale)]);
        };
        // second-order block with extended formulation
        let u = z[0];
        let w = &z[1..];
        let nw = cones::norm2(w);
        let mult = 2.0 * efb.n as f64 * ray.scale;
        let mut ids = Vec::new();
        if nw > 1e-12 * u.max(1.0) {
            for lc in cones::lift_soc_cut(nw, w)? {
                ids.push(self.insert_triple(k, lc.index, &lc.ray, mult));
            }
            ids.push(self.insert_ef_row(k, ray.scale * nw));
        }
        if u - nw > 1e-12 * u.max(1.0) || ids.is_empty() {
            // the (1, 0, ..) part: r >= 2 sum pi >= 0
            for i in 0..efb.n {
                ids.push(self.insert_triple(k, i, &[0.0, 1.0, 0.0], mult));
            }
            ids.push(self.insert_ef_row(k, ray.scale * (u - nw).max(0.0)));
        }
        ids.sort_unstable();
        ids.dedup();
        Ok(ids)
    }

    /// Adds the single cut `scale * z'(b - A x) >= 0` over all rows, without
    /// splitting by block or lifting. Returns `None` for `z = 0`.
    pub fn add_aggregate_cut(&mut self, z: &[f64], scale: f64) -> Result<Option<usize>, LpError> {
        let m = self.cones.total_dim();
        if z.len() != m {
            return Err(LpError::DimensionMismatch { expected: m, got: z.len() });
        }
        assert!(scale > 0.0);
        for (k, cone, r) in self.cones.blocks() {
            let zk = &z[r];
            let violation = cone.dual_violation(zk)?;
            if violation > INSERT_DUAL_TOL * (1.0 + cones::norm_inf(zk)) {
                return Err(LpError::DualInfeasibleRay { block: k, violation });
            }
        }
        if z.iter().all(|v| *v == 0.0) {
            return Ok(None);
        }
        let row = self.a.combine_rows(0, z);
        let coefs = row.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect();
        let rhs0 = cones::dot(z, &self.b);
        let bucket = self.cones.len();
        Ok(Some(self.insert(bucket, Sub::Aggregate, z, scale, coefs, rhs0)))
    }

    fn insert(&mut self, block: usize, sub: Sub, v: &[f64], mult: f64, coefs: Vec<(usize, f64)>, rhs0: f64) -> usize {
        let norm = cones::norm2(v);
        let dir: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let sigma = mult * norm;
        for &id in &self.by_block[block] {
            let r = &mut self.rows[id];
            if r.sub == sub && cones::dot(&r.dir, &dir) > DEDUP_COSINE {
                r.sigma = r.sigma.max(sigma);
                return id;
            }
        }
        let coefs = coefs.into_iter().map(|(j, a)| (j, a / norm)).collect();
        self.rows.push(Row {
            block,
            sub,
            dir,
            coefs,
            rhs0: rhs0 / norm,
            sigma,
        });
        let id = self.rows.len() - 1;
        self.by_block[block].push(id);
        id
    }

    /// Row `z'(b_k - A_k x) >= 0` as `(z'A_k) x <= z'b_k`.
    fn insert_plain(&mut self, k: usize, z: &[f64], mult: f64) -> usize {
        let r = self.cones.range(k);
        let row = self.a.combine_rows(r.start, z);
        let coefs = row.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect();
        let rhs0 = cones::dot(z, &self.b[r]);
        self.insert(k, Sub::Plain, z, mult, coefs, rhs0)
    }

    /// Rotated cut `rho` on the triple `(r, pi_i, t_i)`.
    fn insert_triple(&mut self, k: usize, i: usize, rho: &[f64], mult: f64) -> usize {
        let efb = self.ef[k].as_ref().expect("extended block");
        let aux = efb.aux + i;
        let start = self.cones.range(k).start;
        let mut z = vec![0.0; self.cones.cone(k).dim()];
        z[0] = rho[0];
        z[i + 1] = rho[2];
        let mut row = self.a.combine_rows(start, &z);
        row.resize(self.c.len(), 0.0);
        row[aux] -= rho[1];
        let coefs = row.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect();
        let rhs0 = rho[0] * self.b[start] + rho[2] * self.b[start + i + 1];
        self.insert(k, Sub::EfTriple(i), rho, mult, coefs, rhs0)
    }

    /// Linear row `r - 2 sum pi >= 0` with multiplier at least `mult`.
    fn insert_ef_row(&mut self, k: usize, mult: f64) -> usize {
        let efb = self.ef[k].clone().expect("extended block");
        let start = self.cones.range(k).start;
        let mut key = vec![-2.0; efb.n + 1];
        key[0] = 1.0;
        let mut row = vec![0.0; self.c.len()];
        for (j, v) in self.a.row(start) {
            row[j] += v;
        }
        for i in 0..efb.n {
            row[efb.aux + i] += 2.0;
        }
        let coefs = row.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect();
        self.insert(k, Sub::EfRow, &key, mult.max(f64::MIN_POSITIVE), coefs, self.b[start])
    }

    /// Solves the current model.
    pub fn solve(&self) -> Result<LpOutcome, LpError> {
        let rows: Vec<(Vec<(usize, f64)>, f64)> = self
            .rows
            .iter()
            .map(|r| {
                let relax = if self.delta > 0.0 { self.delta / r.sigma } else { 0.0 };
                (r.coefs.clone(), r.rhs0 + relax)
            })
            .collect();
        let bounds: Vec<(f64, f64)> = self.lower.iter().copied().zip(self.upper.iter().copied()).collect();
        Ok(match simplex::solve(&self.c, &rows, &bounds)? {
            SimplexOutcome::Optimal { mut x, .. } => {
                x.truncate(self.n);
                let objective = cones::dot(&self.c[..self.n], &x);
                LpOutcome::Optimal { x, objective }
            }
            SimplexOutcome::Infeasible => LpOutcome::Infeasible,
            SimplexOutcome::Unbounded { mut ray } => {
                ray.truncate(self.n);
                LpOutcome::Unbounded { ray }
            }
        })
    }

    /// Largest violation of any row by `x` (auxiliaries set optimally is
    /// not attempted; only rows without auxiliaries are checked).
    pub fn max_plain_row_violation(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.sub == Sub::Plain)
            .map(|r| {
                let lhs: f64 = r.coefs.iter().map(|&(j, a)| a * x[j]).sum();
                lhs - r.rhs0
            })
            .fold(0.0, f64::max)
    }

    /// Block indices and unit directions of all plain rows (for tests and
    /// diagnostics).
    pub fn plain_rows(&self) -> Vec<(usize, Vec<f64>, f64)> {
        self.rows
            .iter()
            .filter(|r| r.sub == Sub::Plain)
            .map(|r| (r.block, r.dir.clone(), r.sigma))
            .collect()
    }
}

/// Solves `model` (free function form).
pub fn lp_solve(model: &LpModel) -> Result<LpOutcome, LpError> {
    model.solve()
}

/// Adds a K* cut (free function form).
pub fn lp_add_cut(model: &mut LpModel, ray: &KStarRay) -> Result<Vec<usize>, LpError> {
    model.add_cut(ray)
}

/// Sets integer bounds (free function form).
pub fn lp_set_int_bounds(model: &mut LpModel, l: &[i64], u: &[i64]) -> Result<(), LpError> {
    model.set_int_bounds(l, u)
}

//! Outer-approximation drivers and the cut manager.
//!
//! Both drivers refine one LP model with K* cuts: certificate cuts from
//! conic subproblem solves (scaled and disaggregated), and separation cuts
//! at points that violate a nonpolyhedral cone.

mod bb;
mod brute;
mod iterative;

pub use bb::solve_bb;
pub use brute::brute_force_solve;
pub use iterative::solve_iterative;

use crate::cones::{self, KStarRay, PrimitiveCone};
use crate::lp::{LpError, LpModel, LpOptions};
use crate::model::{MiConicProblem, SolveResult};
use crate::subsolver::{self, ConicCertificate};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::time::Instant;

/// Integrality tolerance for LP and subproblem solutions.
pub const INT_TOL: f64 = 1e-9;
/// Certificate tolerance for the brute-force oracle.
pub const DEFAULT_BRUTE_TOL: f64 = subsolver::DEFAULT_CERT_TOL;
/// Separation rounds allowed at one node or outer iteration before giving up.
pub const MAX_SEPARATION_ROUNDS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    BranchAndBound,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchingRule {
    /// Largest distance to the nearest integer, ties to the lowest index.
    MostFractional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeSelection {
    /// Smallest lower bound, ties first-in first-out.
    BestBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OaOptions {
    pub method: Method,
    /// Relative gap tolerance `epsilon`.
    pub rel_gap: f64,
    /// Gap constant `theta`.
    pub gap_theta: f64,
    /// LP feasibility tolerance `delta`.
    pub delta: f64,
    pub use_disaggregation: bool,
    pub use_initial_cuts: bool,
    pub use_separation: bool,
    pub use_scaling: bool,
    pub use_soc_ef: bool,
    /// Off gives the separation-only variant: no conic subproblem is solved.
    pub use_certificate_cuts: bool,
    /// Solve the conic subproblem at fractional LP solutions too.
    pub solve_fractional_subproblems: bool,
    pub soc_full_diamond_limit: usize,
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    pub iteration_limit: Option<usize>,
    pub branching: BranchingRule,
    pub node_selection: NodeSelection,
    pub tol_linear: f64,
    pub tol_soc_exp: f64,
    pub tol_psd: f64,
    pub cert_tol: f64,
    pub subsolver_max_iters: usize,
    /// Test hook: every conic subproblem solve returns `Failure`.
    pub force_subsolver_failure: bool,
}

impl Default for OaOptions {
    fn default() -> Self {
        OaOptions {
            method: Method::BranchAndBound,
            rel_gap: 1e-5,
            gap_theta: 1e-5,
            delta: 1e-8,
            use_disaggregation: true,
            use_initial_cuts: true,
            use_separation: true,
            use_scaling: true,
            use_soc_ef: true,
            use_certificate_cuts: true,
            solve_fractional_subproblems: false,
            soc_full_diamond_limit: 10,
            time_limit: None,
            node_limit: None,
            iteration_limit: Some(1000),
            branching: BranchingRule::MostFractional,
            node_selection: NodeSelection::BestBound,
            tol_linear: 1e-6,
            tol_soc_exp: 1e-5,
            tol_psd: 1e-4,
            cert_tol: subsolver::DEFAULT_CERT_TOL,
            subsolver_max_iters: subsolver::DEFAULT_MAX_ITERS,
            force_subsolver_failure: false,
        }
    }
}

impl OaOptions {
    /// Cut-type variants: `c` (certificate cuts only), `cs` (plus
    /// separation), `ics` (plus initial fixed cuts, the default) and `is`
    /// (initial fixed and separation cuts, no subproblem solves).
    pub fn variant(name: &str) -> Option<OaOptions> {
        let base = OaOptions::default();
        let (i, c, s) = match name {
            "c" => (false, true, false),
            "cs" => (false, true, true),
            "ics" => (true, true, true),
            "is" => (true, false, true),
            _ => return None,
        };
        Some(OaOptions {
            use_initial_cuts: i,
            use_certificate_cuts: c,
            use_separation: s,
            ..base
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.rel_gap > 0.0) {
            return Err("rel_gap must be positive".into());
        }
        if !(self.gap_theta > 0.0) {
            return Err("gap_theta must be positive".into());
        }
        if !(self.delta >= 0.0) {
            return Err("delta must be nonnegative".into());
        }
        if !(self.cert_tol > 0.0) {
            return Err("cert_tol must be positive".into());
        }
        Ok(())
    }

    pub fn lp_options(&self) -> LpOptions {
        LpOptions {
            delta: self.delta,
            use_soc_ef: self.use_soc_ef,
            use_initial_cuts: self.use_initial_cuts,
            soc_full_diamond_limit: self.soc_full_diamond_limit,
        }
    }

    /// Feasibility tolerance for one primitive cone.
    pub fn cone_tolerance(&self, cone: &PrimitiveCone) -> f64 {
        match cone {
            PrimitiveCone::PsdSvec(_) => self.tol_psd,
            c if c.is_polyhedral() => self.tol_linear,
            _ => self.tol_soc_exp,
        }
    }

    /// `L >= U - epsilon (|U| + theta)`.
    pub fn fathoms(&self, lower: f64, upper: f64) -> bool {
        if upper == f64::INFINITY {
            return false;
        }
        lower >= upper - self.rel_gap * (upper.abs() + self.gap_theta)
    }
}

/// Runs the driver selected by `opts.method`.
pub fn solve(p: &MiConicProblem, opts: &OaOptions) -> SolveResult {
    match opts.method {
        Method::BranchAndBound => solve_bb(p, opts),
        Method::Iterative => solve_iterative(p, opts),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutSource {
    Certificate,
    Separation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledCut {
    pub source: CutSource,
    /// `None` for a cut over all blocks.
    pub block: Option<usize>,
    pub values: Vec<f64>,
    pub scale: f64,
    pub rows: Vec<usize>,
}

/// K* points added during a solve, plus the certificate memo keyed by
/// integer sub-solution.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    pub cuts: Vec<PooledCut>,
    memo: HashMap<Vec<i64>, Vec<usize>>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, source: CutSource) -> usize {
        self.cuts.iter().filter(|c| c.source == source).count()
    }

    /// Cut indices derived for `key`, if it was seen before.
    pub fn memo(&self, key: &[i64]) -> Option<&[usize]> {
        self.memo.get(key).map(|v| v.as_slice())
    }

    pub fn remember(&mut self, key: Vec<i64>, cuts: Vec<usize>) {
        self.memo.entry(key).or_default().extend(cuts);
    }

    fn push(&mut self, cut: PooledCut) -> usize {
        self.cuts.push(cut);
        self.cuts.len() - 1
    }
}

/// Multiplier for a dual improving ray cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayScale {
    /// `2 delta / d`; zero means no scaling is needed (`delta = 0`).
    pub gamma: f64,
    /// `d <= cert_tol`: the ray is too weak to scale and is used unscaled.
    pub weak: bool,
}

/// `gamma = 2 delta / d` with `d = -b'z - l'mu - u'nu`.
pub fn scale_infeasibility_ray(d: f64, delta: f64, cert_tol: f64) -> RayScale {
    if delta == 0.0 {
        return RayScale { gamma: 0.0, weak: false };
    }
    if d <= cert_tol {
        return RayScale { gamma: 1.0, weak: true };
    }
    RayScale {
        gamma: 2.0 * delta / d,
        weak: false,
    }
}

/// `max(1, delta / (epsilon (|L| + theta)))`.
pub fn scale_optimality_point(delta: f64, eps: f64, theta: f64, lower: f64) -> f64 {
    if delta == 0.0 {
        return 1.0;
    }
    (delta / (eps * (lower.abs() + theta))).max(1.0)
}

/// Adds the cuts of a dual improving ray or complementary pair. Returns the
/// pool indices of the new cuts.
pub fn add_certificate_cuts(
    pool: &mut CutPool,
    lp: &mut LpModel,
    cert: &ConicCertificate,
    p: &MiConicProblem,
    l: &[i64],
    u: &[i64],
    opts: &OaOptions,
) -> Result<Vec<usize>, LpError> {
    let (z, gamma) = match cert {
        ConicCertificate::DualImprovingRay { z, mu, nu } => {
            let gamma = if opts.use_scaling {
                let d = subsolver::dual_ray_value(p, l, u, z, mu, nu);
                let s = scale_infeasibility_ray(d, opts.delta, opts.cert_tol);
                if s.weak {
                    log::warn!("dual improving ray value {d:.3e} too small to scale; adding it unscaled");
                }
                s.gamma.max(1.0)
            } else {
                1.0
            };
            (z, gamma)
        }
        ConicCertificate::ComplementaryPair { x, z, .. } => {
            let gamma = if opts.use_scaling {
                scale_optimality_point(opts.delta, opts.rel_gap, opts.gap_theta, p.objective(x))
            } else {
                1.0
            };
            (z, gamma)
        }
        _ => return Ok(Vec::new()),
    };
    if !opts.use_disaggregation {
        let Some(row) = lp.add_aggregate_cut(z, gamma)? else {
            return Ok(Vec::new());
        };
        let id = pool.push(PooledCut {
            source: CutSource::Certificate,
            block: None,
            values: z.clone(),
            scale: gamma,
            rows: vec![row],
        });
        return Ok(vec![id]);
    }
    let mut rays = Vec::new();
    for (k, cone, r) in p.cones.blocks() {
        let zk = &z[r];
        if matches!(cone, PrimitiveCone::Free(_)) || zk.iter().all(|v| *v == 0.0) {
            continue;
        }
        let dis = cones::disaggregate(cone, zk)?;
        let floor = 1e-12 * (1.0 + cones::norm_inf(zk));
        rays.extend(dis.rays.into_iter().map(|v| (k, v)));
        if cones::norm_inf(&dis.residual) > floor {
            rays.push((k, dis.residual));
        }
    }
    let mult = if opts.use_scaling { gamma * rays.len() as f64 } else { 1.0 };
    let mut ids = Vec::with_capacity(rays.len());
    for (k, v) in rays {
        let ray = KStarRay::new(k, v).with_scale(mult);
        let rows = lp.add_cut(&ray)?;
        ids.push(pool.push(PooledCut {
            source: CutSource::Certificate,
            block: Some(k),
            values: ray.values,
            scale: mult,
            rows,
        }));
    }
    Ok(ids)
}

/// True iff every block of `b - A x` is within its cone tolerance.
pub fn conic_feasible(p: &MiConicProblem, x: &[f64], opts: &OaOptions) -> bool {
    let s = p.slack(x);
    p.cones.blocks().all(|(_, cone, r)| {
        cone.violation(&s[r])
            .map(|v| v <= opts.cone_tolerance(cone))
            .unwrap_or(false)
    })
}

/// Separation rays for the nonpolyhedral blocks violated beyond tolerance.
pub fn separation_rays(p: &MiConicProblem, x: &[f64], opts: &OaOptions) -> Vec<KStarRay> {
    let s = p.slack(x);
    let mut out = Vec::new();
    for (k, cone, r) in p.cones.blocks() {
        if cone.is_polyhedral() {
            continue;
        }
        if let Ok(rays) = cones::separate(cone, &s[r], opts.cone_tolerance(cone)) {
            out.extend(rays.into_iter().map(|v| KStarRay::new(k, v)));
        }
    }
    out
}

/// Cuts excluding an unbounded LP direction `ray` where `-A ray` leaves a
/// nonpolyhedral cone.
pub fn direction_rays(p: &MiConicProblem, ray: &[f64]) -> Vec<KStarRay> {
    let y: Vec<f64> = p.a.mul_vec(ray).iter().map(|v| -v).collect();
    let scale = cones::norm_inf(&y);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (k, cone, r) in p.cones.blocks() {
        if cone.is_polyhedral() {
            continue;
        }
        let yk: Vec<f64> = y[r].iter().map(|v| v / scale).collect();
        if let Ok(rays) = cones::separate(cone, &yk, 1e-9) {
            out.extend(rays.into_iter().map(|v| KStarRay::new(k, v)));
        }
    }
    out
}

/// Adds separation cuts; returns how many were added.
pub fn add_separation_cuts(pool: &mut CutPool, lp: &mut LpModel, rays: Vec<KStarRay>) -> Result<usize, LpError> {
    let n = rays.len();
    for ray in rays {
        let rows = lp.add_cut(&ray)?;
        pool.push(PooledCut {
            source: CutSource::Separation,
            block: Some(ray.block),
            values: ray.values,
            scale: ray.scale,
            rows,
        });
    }
    Ok(n)
}

pub(crate) fn is_integral(x: &[f64], ni: usize) -> bool {
    x[..ni].iter().all(|v| (v - v.round()).abs() <= INT_TOL)
}

/// Rounds integer columns within `INT_TOL` and clamps them to the box.
pub(crate) fn clean_point(x: &mut [f64], l: &[i64], u: &[i64]) {
    for i in 0..l.len() {
        let v = x[i].clamp(l[i] as f64, u[i] as f64);
        x[i] = if (v - v.round()).abs() <= INT_TOL { v.round() } else { v };
    }
}

pub(crate) fn int_key(x: &[f64], ni: usize) -> Vec<i64> {
    x[..ni].iter().map(|v| v.round() as i64).collect()
}

/// Most fractional integer column, ties to the lowest index.
pub(crate) fn branch_index(x: &[f64], ni: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in x[..ni].iter().enumerate() {
        let f = (v - v.round()).abs();
        if f > INT_TOL && best.map_or(true, |(_, b)| f > b) {
            best = Some((i, f));
        }
    }
    best.map(|(i, _)| i)
}

pub(crate) struct Clock {
    start: Instant,
    limit: Option<f64>,
}

impl Clock {
    pub fn new(limit: Option<f64>) -> Self {
        Clock {
            start: Instant::now(),
            limit,
        }
    }

    pub fn expired(&self) -> bool {
        self.limit.is_some_and(|t| self.start.elapsed().as_secs_f64() >= t)
    }
}

/// Runs the conic subproblem unless disabled by the test hook.
pub(crate) fn subproblem(p: &MiConicProblem, l: &[i64], u: &[i64], opts: &OaOptions) -> ConicCertificate {
    if opts.force_subsolver_failure {
        return ConicCertificate::Failure("forced by test hook".into());
    }
    subsolver::conic_solve(p, l, u, opts.cert_tol, opts.subsolver_max_iters)
}

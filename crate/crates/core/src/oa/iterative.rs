//! Iterative OA: solve the OA MILP, then either solve the conic subproblem
//! at a new integer sub-solution or separate at a repeated one.

use super::{
    add_certificate_cuts, add_separation_cuts, branch_index, clean_point, conic_feasible, int_key, is_integral,
    separation_rays, subproblem, Clock, CutPool, OaOptions,
};
use crate::lp::{LpModel, LpOutcome};
use crate::model::{rel_gap, MiConicProblem, SolveResult, SolveStatus};
use crate::subsolver::ConicCertificate;

const MILP_NODE_CAP: usize = 200_000;

pub(crate) enum Milp {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// Best-bound branch and bound over the LP model alone. Returns the
/// optimal point and objective (without offset) and the node count.
pub(crate) fn milp_solve(lp: &mut LpModel, l0: &[i64], u0: &[i64], ni: usize) -> Result<(Milp, usize), String> {
    struct N {
        l: Vec<i64>,
        u: Vec<i64>,
        bound: f64,
        seq: usize,
    }
    let mut open = vec![N {
        l: l0.to_vec(),
        u: u0.to_vec(),
        bound: f64::NEG_INFINITY,
        seq: 0,
    }];
    let mut seq = 1;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut nodes = 0;
    let prune = |b: f64, best: &Option<(Vec<f64>, f64)>| best.as_ref().is_some_and(|(_, v)| b >= v - 1e-9 * (1.0 + v.abs()));
    while let Some(k) = (0..open.len()).min_by(|&a, &b| open[a].bound.total_cmp(&open[b].bound).then(open[a].seq.cmp(&open[b].seq))) {
        let node = open.remove(k);
        nodes += 1;
        if nodes > MILP_NODE_CAP {
            return Err(format!("OA MILP node cap {MILP_NODE_CAP} reached"));
        }
        if prune(node.bound, &best) {
            continue;
        }
        lp.set_int_bounds(&node.l, &node.u).map_err(|e| e.to_string())?;
        match lp.solve().map_err(|e| format!("LP: {e}"))? {
            LpOutcome::Infeasible => {}
            LpOutcome::Unbounded { .. } => return Ok((Milp::Unbounded, nodes)),
            LpOutcome::Optimal { mut x, objective } => {
                if prune(objective, &best) {
                    continue;
                }
                clean_point(&mut x, &node.l, &node.u);
                match branch_index(&x, ni) {
                    None => best = Some((x, objective)),
                    Some(i) => {
                        let mut down = node.u.clone();
                        down[i] = x[i].floor() as i64;
                        let mut up = node.l.clone();
                        up[i] = x[i].ceil() as i64;
                        for (l, u) in [(node.l.clone(), down), (up, node.u.clone())] {
                            if l[i] <= u[i] {
                                open.push(N { l, u, bound: objective, seq });
                                seq += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    lp.set_int_bounds(l0, u0).map_err(|e| e.to_string())?;
    Ok((
        match best {
            Some((x, objective)) => Milp::Optimal { x, objective },
            None => Milp::Infeasible,
        },
        nodes,
    ))
}

/// The iterative OA method.
pub fn solve_iterative(p: &MiConicProblem, opts: &OaOptions) -> SolveResult {
    let clock = Clock::new(opts.time_limit);
    let mut r = SolveResult::new(SolveStatus::Error);
    if let Err(e) = opts.validate() {
        r.message = Some(e);
        return r;
    }
    let Some((l0, u0)) = p.int_bounds() else {
        r.message = Some("integer columns need finite bounds".into());
        return r;
    };
    if l0.iter().zip(&u0).any(|(a, b)| a > b) {
        return SolveResult::new(SolveStatus::Infeasible);
    }
    let ni = p.int_count;
    let mut lp = LpModel::new(p, &opts.lp_options());
    let mut pool = CutPool::new();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut incumbent: Option<Vec<f64>> = None;
    let offer = |x: &[f64], upper: &mut f64, inc: &mut Option<Vec<f64>>| {
        let v = p.objective(x);
        if v < *upper {
            *upper = v;
            *inc = Some(x.to_vec());
        }
    };

    let done = |r: &mut SolveResult, status: SolveStatus, lower: f64, upper: f64, inc: &Option<Vec<f64>>| {
        r.status = status;
        r.lower_bound = lower;
        r.upper_bound = upper;
        r.incumbent = inc.clone();
    };

    // continuous relaxation over the initial box
    if opts.use_certificate_cuts {
        r.subproblem_count += 1;
        let cert = subproblem(p, &l0, &u0, opts);
        match &cert {
            ConicCertificate::DualImprovingRay { .. } => {
                done(&mut r, SolveStatus::Infeasible, f64::INFINITY, f64::INFINITY, &None);
                return r;
            }
            ConicCertificate::ComplementaryPair { x, .. } => {
                if let Err(e) = add_certificate_cuts(&mut pool, &mut lp, &cert, p, &l0, &u0, opts) {
                    log::warn!("relaxation cuts rejected: {e}");
                }
                let mut x = x.clone();
                clean_point(&mut x, &l0, &u0);
                lower = p.objective(&x);
                if is_integral(&x, ni) {
                    offer(&x, &mut upper, &mut incumbent);
                }
            }
            ConicCertificate::PrimalImprovingRay { point, .. } => {
                let mut x = point.clone();
                clean_point(&mut x, &l0, &u0);
                if is_integral(&x, ni) {
                    done(&mut r, SolveStatus::Unbounded, f64::NEG_INFINITY, f64::NEG_INFINITY, &Some(x));
                    return r;
                }
            }
            ConicCertificate::Failure(why) => log::debug!("relaxation failed: {why}"),
        }
        if upper < f64::INFINITY && rel_gap(upper, lower, opts.gap_theta) <= opts.rel_gap {
            done(&mut r, SolveStatus::Optimal, lower, upper, &incumbent);
            return r;
        }
    }

    loop {
        if clock.expired() {
            r.message = Some("time limit reached".into());
            done(&mut r, SolveStatus::TimeLimit, lower, upper, &incumbent);
            return r;
        }
        if opts.iteration_limit.is_some_and(|n| r.iteration_count >= n) {
            r.message = Some("iteration limit reached".into());
            done(&mut r, SolveStatus::IterationLimit, lower, upper, &incumbent);
            return r;
        }
        r.iteration_count += 1;
        let (milp, nodes) = match milp_solve(&mut lp, &l0, &u0, ni) {
            Ok(v) => v,
            Err(e) => {
                r.message = Some(e);
                done(&mut r, SolveStatus::Error, lower, upper, &incumbent);
                return r;
            }
        };
        r.node_count += nodes;
        let (x, objective) = match milp {
            Milp::Infeasible => {
                // every incumbent satisfies the cuts up to tolerance
                let status = if upper < f64::INFINITY {
                    lower = upper;
                    SolveStatus::Optimal
                } else {
                    lower = f64::INFINITY;
                    SolveStatus::Infeasible
                };
                r.bound_history.push(lower);
                done(&mut r, status, lower, upper, &incumbent);
                return r;
            }
            Milp::Unbounded => {
                r.message = Some("OA fail: the OA model is unbounded".into());
                done(&mut r, SolveStatus::Error, lower, upper, &incumbent);
                return r;
            }
            Milp::Optimal { x, objective } => (x, objective + p.obj_offset),
        };
        lower = lower.max(objective).min(upper);
        r.bound_history.push(lower);
        if rel_gap(upper, lower, opts.gap_theta) <= opts.rel_gap {
            done(&mut r, SolveStatus::Optimal, lower, upper, &incumbent);
            return r;
        }

        let key = int_key(&x, ni);
        let repeated = pool.memo(&key).is_some();
        let mut separate = repeated || !opts.use_certificate_cuts;
        if !separate {
            r.subproblem_count += 1;
            let cert = subproblem(p, &key, &key, opts);
            let ids = match &cert {
                ConicCertificate::Failure(why) => {
                    log::debug!("subproblem failure ({why}); separating");
                    separate = true;
                    Vec::new()
                }
                ConicCertificate::PrimalImprovingRay { point, .. } => {
                    done(&mut r, SolveStatus::Unbounded, f64::NEG_INFINITY, f64::NEG_INFINITY, &Some(point.clone()));
                    return r;
                }
                _ => match add_certificate_cuts(&mut pool, &mut lp, &cert, p, &key, &key, opts) {
                    Ok(ids) => ids,
                    Err(e) => {
                        log::warn!("certificate cuts rejected: {e}");
                        separate = true;
                        Vec::new()
                    }
                },
            };
            pool.remember(key.clone(), ids);
            if let ConicCertificate::ComplementaryPair { x: xs, .. } = &cert {
                let mut xs = xs.clone();
                clean_point(&mut xs, &key, &key);
                offer(&xs, &mut upper, &mut incumbent);
                if rel_gap(upper, lower, opts.gap_theta) <= opts.rel_gap {
                    done(&mut r, SolveStatus::Optimal, lower, upper, &incumbent);
                    return r;
                }
            }
        }
        if separate {
            if conic_feasible(p, &x, opts) {
                offer(&x, &mut upper, &mut incumbent);
                lower = lower.min(upper);
                done(&mut r, SolveStatus::Optimal, lower, upper, &incumbent);
                return r;
            }
            let rays = separation_rays(p, &x, opts);
            let added = match add_separation_cuts(&mut pool, &mut lp, rays) {
                Ok(n) => n,
                Err(e) => {
                    r.message = Some(e.to_string());
                    done(&mut r, SolveStatus::Error, lower, upper, &incumbent);
                    return r;
                }
            };
            if added == 0 {
                r.message = Some("no progress: OA solution infeasible and not separable".into());
                done(&mut r, SolveStatus::Error, lower, upper, &incumbent);
                return r;
            }
        }
    }
}

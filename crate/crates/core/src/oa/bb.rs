//! Branch and bound over the LP outer approximation, calling the conic
//! subproblem solver at integral LP solutions.

use super::{
    add_certificate_cuts, add_separation_cuts, branch_index, clean_point, conic_feasible, direction_rays,
    is_integral, separation_rays, subproblem, Clock, CutPool, OaOptions, MAX_SEPARATION_ROUNDS,
};
use crate::lp::{LpModel, LpOutcome};
use crate::model::{MiConicProblem, SolveResult, SolveStatus};
use crate::subsolver::ConicCertificate;

#[derive(Debug, Clone)]
struct Node {
    l: Vec<i64>,
    u: Vec<i64>,
    bound: f64,
    seq: usize,
}

enum Outcome {
    Closed,
    /// Fathomed by bound with this lower bound.
    Bounded(f64),
    Branch(Vec<f64>, f64),
    Unbounded(Vec<f64>),
    /// Separation stalled; the node's lower bound is kept.
    Stalled(f64, String),
}

struct Search<'a> {
    p: &'a MiConicProblem,
    opts: &'a OaOptions,
    lp: LpModel,
    pool: CutPool,
    upper: f64,
    incumbent: Option<Vec<f64>>,
    subproblems: usize,
    lp_solves: usize,
}

impl Search<'_> {
    fn offer(&mut self, x: &[f64]) -> f64 {
        let v = self.p.objective(x);
        if v < self.upper {
            self.upper = v;
            self.incumbent = Some(x.to_vec());
        }
        v
    }

    fn process(&mut self, node: &Node) -> Result<Outcome, String> {
        let (p, opts) = (self.p, self.opts);
        let ni = p.int_count;
        self.lp.set_int_bounds(&node.l, &node.u).map_err(|e| e.to_string())?;
        let mut bound = node.bound;
        let mut rounds = 0;
        loop {
            self.lp_solves += 1;
            let lp_out = self.lp.solve().map_err(|e| format!("LP: {e}"))?;
            let (lp_x, lp_ray) = match lp_out {
                LpOutcome::Infeasible => return Ok(Outcome::Closed),
                LpOutcome::Optimal { mut x, objective } => {
                    bound = bound.max(objective + p.obj_offset);
                    if opts.fathoms(bound, self.upper) {
                        return Ok(Outcome::Bounded(bound));
                    }
                    clean_point(&mut x, &node.l, &node.u);
                    if !is_integral(&x, ni) && !opts.solve_fractional_subproblems {
                        if opts.use_separation && rounds < MAX_SEPARATION_ROUNDS {
                            let rays = separation_rays(p, &x, opts);
                            if !rays.is_empty() {
                                add_separation_cuts(&mut self.pool, &mut self.lp, rays).map_err(|e| e.to_string())?;
                                rounds += 1;
                                continue;
                            }
                        }
                        return Ok(Outcome::Branch(x, bound));
                    }
                    (Some(x), None)
                }
                LpOutcome::Unbounded { ray } => (None, Some(ray)),
            };

            let cert = if opts.use_certificate_cuts {
                self.subproblems += 1;
                subproblem(p, &node.l, &node.u, opts)
            } else {
                ConicCertificate::Failure("certificate cuts disabled".into())
            };
            match &cert {
                ConicCertificate::DualImprovingRay { .. } => {
                    add_certificate_cuts(&mut self.pool, &mut self.lp, &cert, p, &node.l, &node.u, opts)
                        .map_err(|e| e.to_string())?;
                    return Ok(Outcome::Closed);
                }
                ConicCertificate::PrimalImprovingRay { point, .. } => {
                    let mut x = point.clone();
                    clean_point(&mut x, &node.l, &node.u);
                    if is_integral(&x, ni) {
                        return Ok(Outcome::Unbounded(x));
                    }
                    return Ok(Outcome::Branch(x, bound));
                }
                ConicCertificate::ComplementaryPair { x, .. } => {
                    add_certificate_cuts(&mut self.pool, &mut self.lp, &cert, p, &node.l, &node.u, opts)
                        .map_err(|e| e.to_string())?;
                    let mut x = x.clone();
                    clean_point(&mut x, &node.l, &node.u);
                    bound = bound.max(p.objective(&x));
                    if opts.fathoms(bound, self.upper) {
                        return Ok(Outcome::Bounded(bound));
                    }
                    if is_integral(&x, ni) {
                        self.offer(&x);
                        return Ok(Outcome::Closed);
                    }
                    return Ok(Outcome::Branch(x, bound));
                }
                ConicCertificate::Failure(reason) => {
                    log::debug!("subproblem failure ({reason}); separating");
                }
            }

            // separation fallback
            if rounds >= MAX_SEPARATION_ROUNDS {
                return Ok(Outcome::Stalled(bound, "separation round cap reached".into()));
            }
            match (lp_x, lp_ray) {
                (Some(x), _) => {
                    if !is_integral(&x, ni) {
                        return Ok(Outcome::Branch(x, bound));
                    }
                    if conic_feasible(p, &x, opts) {
                        let v = self.offer(&x);
                        return Ok(Outcome::Bounded(bound.max(v).min(self.upper)));
                    }
                    let rays = separation_rays(p, &x, opts);
                    if rays.is_empty() {
                        return Ok(Outcome::Stalled(bound, "no separating cut at an infeasible point".into()));
                    }
                    add_separation_cuts(&mut self.pool, &mut self.lp, rays).map_err(|e| e.to_string())?;
                }
                (None, Some(ray)) => {
                    let rays = direction_rays(p, &ray);
                    if rays.is_empty() {
                        return Err("OA fail: unbounded LP and no certificate".into());
                    }
                    add_separation_cuts(&mut self.pool, &mut self.lp, rays).map_err(|e| e.to_string())?;
                }
                (None, None) => unreachable!(),
            }
            rounds += 1;
        }
    }
}

/// Conic-certificate-based branch and bound.
pub fn solve_bb(p: &MiConicProblem, opts: &OaOptions) -> SolveResult {
    let clock = Clock::new(opts.time_limit);
    if let Err(e) = opts.validate() {
        return error(e);
    }
    let Some((l0, u0)) = p.int_bounds() else {
        return error("integer columns need finite bounds".into());
    };
    if l0.iter().zip(&u0).any(|(a, b)| a > b) {
        return SolveResult::new(SolveStatus::Infeasible);
    }
    let mut s = Search {
        p,
        opts,
        lp: LpModel::new(p, &opts.lp_options()),
        pool: CutPool::new(),
        upper: f64::INFINITY,
        incumbent: None,
        subproblems: 0,
        lp_solves: 0,
    };
    let mut open = vec![Node {
        l: l0,
        u: u0,
        bound: f64::NEG_INFINITY,
        seq: 0,
    }];
    let mut seq = 1;
    let mut closed_bound = f64::INFINITY;
    let mut nodes = 0;
    let mut stop: Option<(SolveStatus, String)> = None;
    let mut stalled: Vec<String> = Vec::new();

    while let Some(k) = pick(&open) {
        if clock.expired() {
            stop = Some((SolveStatus::TimeLimit, "time limit reached".into()));
            break;
        }
        if opts.node_limit.is_some_and(|n| nodes >= n) {
            stop = Some((SolveStatus::IterationLimit, "node limit reached".into()));
            break;
        }
        let node = open.remove(k);
        nodes += 1;
        if opts.fathoms(node.bound, s.upper) {
            closed_bound = closed_bound.min(node.bound);
            continue;
        }
        match s.process(&node) {
            Err(e) => {
                stop = Some((SolveStatus::Error, e));
                break;
            }
            Ok(Outcome::Closed) => {}
            Ok(Outcome::Bounded(b)) => closed_bound = closed_bound.min(b),
            Ok(Outcome::Stalled(b, why)) => {
                closed_bound = closed_bound.min(b);
                stalled.push(why);
            }
            Ok(Outcome::Unbounded(x)) => {
                let mut r = finish(&s, nodes, SolveStatus::Unbounded);
                r.incumbent = Some(x);
                r.upper_bound = f64::NEG_INFINITY;
                r.lower_bound = f64::NEG_INFINITY;
                return r;
            }
            Ok(Outcome::Branch(x, bound)) => {
                let Some(i) = branch_index(&x, p.int_count) else {
                    stop = Some((SolveStatus::Error, "branching on an integral point".into()));
                    break;
                };
                let mut down = node.u.clone();
                down[i] = x[i].floor() as i64;
                let mut up = node.l.clone();
                up[i] = x[i].ceil() as i64;
                for (l, u) in [(node.l.clone(), down), (up, node.u.clone())] {
                    if l[i] <= u[i] {
                        open.push(Node { l, u, bound, seq });
                        seq += 1;
                    }
                }
            }
        }
    }

    let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let lower = closed_bound.min(open_bound).min(s.upper);
    let status = match &stop {
        Some((st, _)) => *st,
        None if !stalled.is_empty() => SolveStatus::Error,
        None if s.upper == f64::INFINITY => SolveStatus::Infeasible,
        None => SolveStatus::Optimal,
    };
    let mut r = finish(&s, nodes, status);
    r.lower_bound = if status == SolveStatus::Infeasible { f64::INFINITY } else { lower };
    r.message = stop.map(|(_, m)| m).or_else(|| stalled.first().map(|m| format!("{} node(s) stalled: {m}", stalled.len())));
    r
}

fn pick(open: &[Node]) -> Option<usize> {
    (0..open.len()).min_by(|&a, &b| {
        open[a]
            .bound
            .total_cmp(&open[b].bound)
            .then(open[a].seq.cmp(&open[b].seq))
    })
}

fn finish(s: &Search, nodes: usize, status: SolveStatus) -> SolveResult {
    let mut r = SolveResult::new(status);
    r.incumbent = s.incumbent.clone();
    r.upper_bound = s.upper;
    r.node_count = nodes;
    r.subproblem_count = s.subproblems;
    r.iteration_count = s.lp_solves;
    r
}

fn error(msg: String) -> SolveResult {
    let mut r = SolveResult::new(SolveStatus::Error);
    r.message = Some(msg);
    r
}

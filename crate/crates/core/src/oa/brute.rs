//! Exhaustive oracle: solve the continuous problem at every integer
//! assignment in the box.

use super::{clean_point, DEFAULT_BRUTE_TOL};
use crate::model::{MiConicProblem, SolveResult, SolveStatus};
use crate::subsolver::{self, ConicCertificate};

/// Enumerates all integer assignments, up to `max_assignments`.
pub fn brute_force_solve(p: &MiConicProblem, max_assignments: usize) -> SolveResult {
    let mut r = SolveResult::new(SolveStatus::Error);
    let Some((l0, u0)) = p.int_bounds() else {
        r.message = Some("integer columns need finite bounds".into());
        return r;
    };
    let mut total: usize = 1;
    for (a, b) in l0.iter().zip(&u0) {
        if a > b {
            return SolveResult::new(SolveStatus::Infeasible);
        }
        total = match total.checked_mul((b - a + 1) as usize) {
            Some(t) if t <= max_assignments => t,
            _ => {
                r.message = Some(format!("more than {max_assignments} integer assignments"));
                return r;
            }
        };
    }
    let mut key = l0.clone();
    let mut best = f64::INFINITY;
    let mut incumbent = None;
    for _ in 0..total {
        r.subproblem_count += 1;
        match subsolver::conic_solve(p, &key, &key, DEFAULT_BRUTE_TOL, subsolver::DEFAULT_MAX_ITERS) {
            ConicCertificate::ComplementaryPair { mut x, .. } => {
                clean_point(&mut x, &key, &key);
                let v = p.objective(&x);
                if v < best {
                    best = v;
                    incumbent = Some(x);
                }
            }
            ConicCertificate::DualImprovingRay { .. } => {}
            ConicCertificate::PrimalImprovingRay { point, .. } => {
                r.status = SolveStatus::Unbounded;
                r.incumbent = Some(point);
                r.upper_bound = f64::NEG_INFINITY;
                r.lower_bound = f64::NEG_INFINITY;
                return r;
            }
            ConicCertificate::Failure(why) => {
                r.message = Some(format!("subproblem at {key:?} failed: {why}"));
                return r;
            }
        }
        // odometer increment
        for i in 0..key.len() {
            if key[i] < u0[i] {
                key[i] += 1;
                break;
            }
            key[i] = l0[i];
        }
    }
    r.node_count = total;
    r.incumbent = incumbent;
    r.upper_bound = best;
    if best.is_finite() {
        r.status = SolveStatus::Optimal;
        r.lower_bound = best;
    } else {
        r.status = SolveStatus::Infeasible;
        r.lower_bound = f64::INFINITY;
    }
    r
}

mod common;

use common::guarantees;
use common::*;
use conicert::cones::{ConeProduct, PrimitiveCone};
use conicert::model::{MiConicProblem, SolveResult, SolveStatus, SparseMatrix};
use conicert::oa::{brute_force_solve, solve, solve_bb, solve_iterative, Method, OaOptions, INT_TOL};

fn both() -> [OaOptions; 2] {
    [
        OaOptions { method: Method::BranchAndBound, ..OaOptions::default() },
        OaOptions { method: Method::Iterative, ..OaOptions::default() },
    ]
}

fn problem(c: Vec<f64>, rows: &[Vec<f64>], b: Vec<f64>, cones: Vec<PrimitiveCone>, ints: usize) -> MiConicProblem {
    let n = c.len();
    MiConicProblem::new(c, SparseMatrix::from_dense(rows, n), b, ConeProduct::new(cones).unwrap(), ints).unwrap()
}

#[test]
fn soc_example_objective_two() {
    let p = soc_example();
    let br = brute_force_solve(&p, 1000);
    assert_eq!(br.status, SolveStatus::Optimal);
    assert_eq!(br.subproblem_count, 25);
    assert!((br.upper_bound + 2.0).abs() < 1e-6);
    for opts in both() {
        let r = solve(&p, &opts);
        assert_eq!(r.status, SolveStatus::Optimal, "{:?}", opts.method);
        assert!((r.upper_bound + 2.0).abs() <= opts.rel_gap * (2.0 + opts.gap_theta));
        let x = r.incumbent.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9, "{x:?}");
    }
}

#[test]
fn conflicting_cuts_infeasible() {
    // x >= 1 and x <= 0, plus a cone so the subsolver has work
    let p = problem(
        vec![1.0, 0.0],
        &[vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, -1.0]],
        vec![-1.0, 0.0, 1.0, 0.0],
        vec![PrimitiveCone::NonNeg(2), PrimitiveCone::SecondOrder(2)],
        1,
    )
    .with_int_bounds(&[-3], &[3]);
    for opts in both() {
        let r = solve(&p, &opts);
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert_eq!(r.upper_bound, f64::INFINITY);
        assert!(r.incumbent.is_none());
    }
    assert_eq!(brute_force_solve(&p, 100).status, SolveStatus::Infeasible);
}

/// min -y with (t, y) in SOC(2), (1 + x, t) in SOC(2), x in {0, 1}: the
/// direction (0, 1, 1) improves forever.
fn unbounded_instance() -> MiConicProblem {
    problem(
        vec![0.0, -1.0, 0.0],
        &[vec![0.0, 0.0, -1.0], vec![0.0, -1.0, 0.0], vec![-1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]],
        vec![0.0, 0.0, 1.0, 0.5],
        vec![PrimitiveCone::SecondOrder(2), PrimitiveCone::SecondOrder(2)],
        1,
    )
    .with_int_bounds(&[0], &[1])
}

#[test]
fn improving_ray_gives_unbounded() {
    let p = unbounded_instance();
    let r = solve_bb(&p, &OaOptions::default());
    assert_eq!(r.status, SolveStatus::Unbounded, "{:?}", r.message);
    assert_eq!(r.upper_bound, f64::NEG_INFINITY);
    let x = r.incumbent.unwrap();
    assert!((x[0] - x[0].round()).abs() <= INT_TOL);
    assert!(p.cone_violations(&x).iter().all(|v| *v <= 1e-6));
    assert_eq!(brute_force_solve(&p, 10).status, SolveStatus::Unbounded);
    let r = solve_iterative(&p, &OaOptions::default());
    assert!(
        r.status == SolveStatus::Unbounded
            || (r.status == SolveStatus::Error && r.message.as_deref().unwrap_or("").contains("OA fail")),
        "{r:?}"
    );
}

#[test]
fn unbounded_oa_model_is_oa_fail() {
    // certificates disabled and no separation possible along the LP ray:
    // min -y with y free and only a linear block touching x
    let p = problem(vec![0.0, -1.0], &[vec![-1.0, 0.0]], vec![0.0], vec![PrimitiveCone::NonNeg(1)], 1)
        .with_int_bounds(&[0], &[1]);
    for method in [Method::BranchAndBound, Method::Iterative] {
        let mut opts = OaOptions::variant("is").unwrap();
        opts.method = method;
        let r = solve(&p, &opts);
        assert_eq!(r.status, SolveStatus::Error, "{method:?}");
        assert!(r.message.unwrap().contains("OA fail"));
    }
}

#[test]
fn forced_failure_converges_by_separation() {
    for (name, p) in suite(6) {
        let br = brute_force_solve(&p, 1000);
        let mut is = OaOptions::variant("is").unwrap();
        is.method = Method::Iterative;
        let oracle = solve(&p, &is);
        let forced = solve(&p, &OaOptions { method: Method::Iterative, force_subsolver_failure: true, ..OaOptions::default() });
        for r in [&oracle, &forced] {
            assert_eq!(r.status, br.status, "{name}: {r:?}");
            if br.status == SolveStatus::Optimal {
                assert!(rel_diff(r.upper_bound, br.upper_bound) <= 1e-4, "{name}");
            }
        }
        assert_eq!(oracle.subproblem_count, 0);
    }
}

#[test]
fn integral_relaxation_terminates_at_once() {
    // min x + t with (t, 1) in SOC(2): relaxation optimum x = 0, t = 1
    let p = problem(
        vec![1.0, 1.0],
        &[vec![0.0, -1.0], vec![0.0, 0.0]],
        vec![0.0, 1.0],
        vec![PrimitiveCone::SecondOrder(2)],
        1,
    )
    .with_int_bounds(&[0], &[3]);
    let r = solve_iterative(&p, &OaOptions::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!(r.iteration_count <= 1, "{} iterations", r.iteration_count);
    assert!((r.upper_bound - 1.0).abs() < 1e-6);
}

#[test]
fn brute_force_edges() {
    // no integers: one solve of min x s.t. x >= |2|
    let p = problem(vec![1.0], &[vec![-1.0], vec![0.0]], vec![0.0, 2.0], vec![PrimitiveCone::SecondOrder(2)], 0);
    let r = brute_force_solve(&p, 1);
    assert_eq!((r.status, r.subproblem_count), (SolveStatus::Optimal, 1));
    assert!((r.upper_bound - 2.0).abs() < 1e-6);
    // budget
    let p = soc_example();
    let r = brute_force_solve(&p, 24);
    assert_eq!(r.status, SolveStatus::Error);
    assert_eq!(r.subproblem_count, 0);
}

fn check_invariants(name: &str, p: &MiConicProblem, r: &SolveResult, opts: &OaOptions) {
    if let Some(x) = &r.incumbent {
        for v in &x[..p.int_count] {
            assert!((v - v.round()).abs() <= INT_TOL, "{name}: fractional incumbent {x:?}");
        }
        let s = p.slack(x);
        for (_, cone, rg) in p.cones.blocks() {
            let v = cone.violation(&s[rg]).unwrap();
            assert!(v <= opts.cone_tolerance(cone), "{name}: {cone:?} violated by {v:.3e}");
        }
    }
    if r.status == SolveStatus::Optimal {
        assert!(r.incumbent.is_some());
        assert!(r.rel_gap(opts.gap_theta) <= opts.rel_gap, "{name}: gap {}", r.rel_gap(opts.gap_theta));
    }
    if r.status == SolveStatus::Infeasible {
        assert!(r.incumbent.is_none() && r.upper_bound == f64::INFINITY);
    }
}

#[test]
fn driver_invariants_on_suite() {
    for (name, p) in suite(10) {
        let (l, u) = p.int_bounds().unwrap();
        let boxes: usize = l.iter().zip(&u).map(|(a, b)| (b - a + 1) as usize).product();
        let br = brute_force_solve(&p, 1000);
        for opts in both() {
            let r = solve(&p, &opts);
            check_invariants(&name, &p, &r, &opts);
            assert_eq!(r.status, br.status, "{name} {:?}", opts.method);
            if br.status == SolveStatus::Optimal {
                let eps = opts.rel_gap * (br.upper_bound.abs() + opts.gap_theta);
                assert!((r.upper_bound - br.upper_bound).abs() <= eps.max(1e-6), "{name} {:?}", opts.method);
            }
            match opts.method {
                Method::BranchAndBound => assert!(r.node_count <= 2 * boxes, "{name}: {} nodes", r.node_count),
                Method::Iterative => {
                    assert!(r.bound_history.windows(2).all(|w| w[1] >= w[0]), "{name}: {:?}", r.bound_history)
                }
            }
        }
    }
}

#[test]
fn limits_stop_early() {
    let p = instance(Family::Mixed, 3);
    let r = solve(&p, &OaOptions { node_limit: Some(0), ..OaOptions::default() });
    assert_eq!(r.status, SolveStatus::IterationLimit);
    let r = solve(&p, &OaOptions { method: Method::Iterative, iteration_limit: Some(0), ..OaOptions::default() });
    assert!(matches!(r.status, SolveStatus::IterationLimit | SolveStatus::Optimal | SolveStatus::Infeasible));
    let r = solve(&p, &OaOptions { time_limit: Some(0.0), ..OaOptions::default() });
    assert_eq!(r.status, SolveStatus::TimeLimit);
    let r = solve(&p, &OaOptions { rel_gap: 0.0, ..OaOptions::default() });
    assert_eq!(r.status, SolveStatus::Error);
}

#[test]
fn infeasibility_guarantee() {
    for delta in [0.0, 1e-6] {
        for disagg in [true, false] {
            let rep = guarantees::infeasibility(delta, disagg);
            assert!(rep.passed(), "delta {delta} disagg {disagg}: {:?}", &rep.failures[..rep.failures.len().min(5)]);
        }
    }
}

#[test]
fn objective_guarantee() {
    for delta in [0.0, 1e-6] {
        for disagg in [true, false] {
            let rep = guarantees::objective(delta, disagg);
            assert!(rep.passed(), "delta {delta} disagg {disagg}: {:?}", &rep.failures[..rep.failures.len().min(5)]);
        }
    }
}

#[test]
fn scaling_is_needed() {
    let (unscaled, scaled) = guarantees::unscaled_violation(1e-6, 1e-6);
    assert!(!unscaled, "unscaled cut should leave the LP feasible");
    assert!(scaled);
    // exact LP needs no scaling
    assert_eq!(guarantees::unscaled_violation(1e-6, 0.0), (true, true));
}

//! Certificate-cut guarantee checks over constructed node boxes.

use super::{instance, FAMILIES};
use conicert::cones::{ConeProduct, PrimitiveCone};
use conicert::lp::{LpModel, LpOutcome};
use conicert::model::{MiConicProblem, SparseMatrix};
use conicert::oa::{add_certificate_cuts, CutPool, OaOptions};
use conicert::subsolver::{conic_solve, dual_ray_value, ConicCertificate, DEFAULT_CERT_TOL, DEFAULT_MAX_ITERS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CASES: usize = 50;

pub struct Node {
    pub name: String,
    pub p: MiConicProblem,
    pub l: Vec<i64>,
    pub u: Vec<i64>,
    pub cert: ConicCertificate,
}

#[derive(Debug, Default)]
pub struct Report {
    pub nodes: usize,
    pub child_boxes: usize,
    pub failures: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.nodes >= CASES && self.failures.is_empty()
    }
}

fn sub_box(rng: &mut ChaCha8Rng, l: &[i64], u: &[i64]) -> (Vec<i64>, Vec<i64>) {
    l.iter()
        .zip(u)
        .map(|(&a, &b)| {
            let x = rng.gen_range(a..=b);
            let y = rng.gen_range(a..=b);
            (x.min(y), x.max(y))
        })
        .unzip()
}

/// `CASES` node boxes whose subproblem gives a certificate of the wanted
/// kind (`infeasible` selects dual improving rays, else complementary pairs).
pub fn nodes(infeasible: bool) -> Vec<Node> {
    let mut rng = ChaCha8Rng::seed_from_u64(if infeasible { 17 } else { 19 });
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < CASES {
        let fam = FAMILIES[(seed % 4) as usize];
        let p = instance(fam, 500 + seed);
        seed += 1;
        let (l0, u0) = p.int_bounds().unwrap();
        for _ in 0..4 {
            let (l, u) = sub_box(&mut rng, &l0, &u0);
            let cert = conic_solve(&p, &l, &u, DEFAULT_CERT_TOL, DEFAULT_MAX_ITERS);
            let want = match cert {
                ConicCertificate::DualImprovingRay { .. } => infeasible,
                ConicCertificate::ComplementaryPair { .. } => !infeasible,
                _ => false,
            };
            if want {
                out.push(Node { name: format!("{fam:?}-{} {l:?}..{u:?}", 500 + seed - 1), p: p.clone(), l, u, cert });
                break;
            }
        }
    }
    out
}

/// The node box itself, every fixed assignment in it (up to 20), and a few
/// random sub-boxes.
fn child_boxes(rng: &mut ChaCha8Rng, l: &[i64], u: &[i64]) -> Vec<(Vec<i64>, Vec<i64>)> {
    let mut out = vec![(l.to_vec(), u.to_vec())];
    let mut x = l.to_vec();
    'enumerate: for _ in 0..20 {
        out.push((x.clone(), x.clone()));
        for k in 0..x.len() {
            if x[k] < u[k] {
                x[k] += 1;
                continue 'enumerate;
            }
            x[k] = l[k];
        }
        break;
    }
    for _ in 0..5 {
        out.push(sub_box(rng, l, u));
    }
    out
}

fn options(delta: f64, disaggregate: bool) -> OaOptions {
    OaOptions {
        delta,
        use_disaggregation: disaggregate,
        use_initial_cuts: false,
        ..OaOptions::default()
    }
}

fn cut_model(n: &Node, opts: &OaOptions) -> Result<LpModel, String> {
    let mut lp = LpModel::new(&n.p, &opts.lp_options());
    add_certificate_cuts(&mut CutPool::new(), &mut lp, &n.cert, &n.p, &n.l, &n.u, opts).map_err(|e| e.to_string())?;
    Ok(lp)
}

/// After the cuts of a dual improving ray, the LP over every child box is
/// infeasible.
pub fn infeasibility(delta: f64, disaggregate: bool) -> Report {
    let opts = options(delta, disaggregate);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut rep = Report::default();
    for n in nodes(true) {
        rep.nodes += 1;
        let mut lp = match cut_model(&n, &opts) {
            Ok(lp) => lp,
            Err(e) => {
                rep.failures.push(format!("{}: {e}", n.name));
                continue;
            }
        };
        for (l, u) in child_boxes(&mut rng, &n.l, &n.u) {
            rep.child_boxes += 1;
            lp.set_int_bounds(&l, &u).unwrap();
            match lp.solve() {
                Ok(LpOutcome::Infeasible) => {}
                other => rep.failures.push(format!("{} child {l:?}..{u:?}: {other:?}", n.name)),
            }
        }
    }
    rep
}

/// After the cuts of a complementary pair, the LP optimum `x` over every
/// child box satisfies `c'x - r'x >= D - eps (|L| + theta)`, where `D` is
/// the certificate's dual objective and `r = c + A'z + mu' + nu'` its dual
/// residual (zero for an exact certificate, making this the plain bound
/// `c'x >= L - eps (|L| + theta)`).
pub fn objective(delta: f64, disaggregate: bool) -> Report {
    let opts = options(delta, disaggregate);
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut rep = Report::default();
    for n in nodes(false) {
        rep.nodes += 1;
        let ConicCertificate::ComplementaryPair { x: xh, z, mu, nu } = &n.cert else { unreachable!() };
        let lower = n.p.objective(xh);
        let dual = dual_ray_value(&n.p, &n.l, &n.u, z, mu, nu);
        let mut r = n.p.a.tmul_vec(z);
        for (j, v) in r.iter_mut().enumerate() {
            *v += n.p.c[j];
            if j < n.p.int_count {
                *v += mu[j] + nu[j];
            }
        }
        let slack = opts.rel_gap * (lower.abs() + opts.gap_theta);
        let mut lp = match cut_model(&n, &opts) {
            Ok(lp) => lp,
            Err(e) => {
                rep.failures.push(format!("{}: {e}", n.name));
                continue;
            }
        };
        for (l, u) in child_boxes(&mut rng, &n.l, &n.u) {
            rep.child_boxes += 1;
            lp.set_int_bounds(&l, &u).unwrap();
            match lp.solve() {
                Ok(LpOutcome::Optimal { x, objective }) => {
                    let rx: f64 = r.iter().zip(&x).map(|(a, b)| a * b).sum();
                    if objective - rx < dual - slack - 1e-9 * (1.0 + dual.abs()) {
                        rep.failures.push(format!(
                            "{} child {l:?}..{u:?}: {objective} - {rx:.3e} < {dual} - {slack:.3e}",
                            n.name
                        ));
                    }
                }
                Ok(LpOutcome::Infeasible) => {}
                other => rep.failures.push(format!("{} child {l:?}..{u:?}: {other:?}", n.name)),
            }
        }
    }
    rep
}

/// `(1, x + eta)` in SOC(2) with `x` fixed at 1: infeasible by `eta`. The
/// dual ray `(1, -1)/sqrt2` has value `eta/sqrt2 < delta`. Returns whether
/// the LP over the node is (unscaled, scaled) infeasible.
pub fn unscaled_violation(eta: f64, delta: f64) -> (bool, bool) {
    let p = MiConicProblem::new(
        vec![0.0],
        SparseMatrix::from_dense(&[vec![0.0], vec![-1.0]], 1),
        vec![1.0, eta],
        ConeProduct::new(vec![PrimitiveCone::SecondOrder(2)]).unwrap(),
        1,
    )
    .unwrap()
    .with_int_bounds(&[1], &[1]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let node = Node {
        name: "eta".into(),
        p,
        l: vec![1],
        u: vec![1],
        cert: ConicCertificate::DualImprovingRay { z: vec![h, -h], mu: vec![-h], nu: vec![0.0] },
    };
    let infeasible = |scaling: bool| {
        let opts = OaOptions { use_scaling: scaling, ..options(delta, true) };
        let lp = cut_model(&node, &opts).unwrap();
        matches!(lp.solve(), Ok(LpOutcome::Infeasible))
    };
    (infeasible(false), infeasible(true))
}

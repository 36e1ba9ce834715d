//! Continuous conic subproblem `CONIC(l, u)`: the problem with integer
//! columns relaxed to the box `[l, u]`. Returns a verified certificate or
//! `Failure`.
//!
//! Columns with `l_i = u_i` are substituted out before solving; the
//! remaining integer columns get the bound rows `l_i - x_i in R-` and
//! `u_i - x_i in R+`. Bound multipliers `mu <= 0`, `nu >= 0` are recomputed
//! exactly from the dual residual on the integer columns.

mod admm;

use crate::cones::{self, ConeProduct, PrimitiveCone};
use crate::model::MiConicProblem;
use admm::{Admm, Iterate};

pub const DEFAULT_CERT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITERS: usize = 20000;
/// Integer columns within this distance of an integer are snapped.
pub const SNAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum ConicCertificate {
    /// `z` on the rows of `K`; `mu`, `nu` on the integer bounds.
    DualImprovingRay { z: Vec<f64>, mu: Vec<f64>, nu: Vec<f64> },
    PrimalImprovingRay { ray: Vec<f64>, point: Vec<f64> },
    ComplementaryPair {
        x: Vec<f64>,
        z: Vec<f64>,
        mu: Vec<f64>,
        nu: Vec<f64>,
    },
    Failure(String),
}

impl ConicCertificate {
    pub fn kind(&self) -> &'static str {
        match self {
            ConicCertificate::DualImprovingRay { .. } => "dual improving ray",
            ConicCertificate::PrimalImprovingRay { .. } => "primal improving ray",
            ConicCertificate::ComplementaryPair { .. } => "complementary pair",
            ConicCertificate::Failure(_) => "failure",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, ConicCertificate::Failure(_))
    }
}

/// `-b'z - l'mu - u'nu`.
pub fn dual_ray_value(p: &MiConicProblem, l: &[i64], u: &[i64], z: &[f64], mu: &[f64], nu: &[f64]) -> f64 {
    -cones::dot(&p.b, z) - int_dot(l, mu) - int_dot(u, nu)
}

fn int_dot(v: &[i64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| *a as f64 * b).sum()
}

/// Solves `CONIC(l, u)` and verifies the resulting certificate.
pub fn conic_solve(p: &MiConicProblem, l: &[i64], u: &[i64], cert_tol: f64, max_iters: usize) -> ConicCertificate {
    assert_eq!(l.len(), p.int_count);
    assert_eq!(u.len(), p.int_count);
    if let Some(i) = (0..p.int_count).find(|&i| l[i] > u[i]) {
        return ConicCertificate::Failure(format!("empty box on integer column {i}"));
    }
    let red = Reduced::new(p, l, u);
    let cert = red.solve(cert_tol, max_iters);
    match cert {
        ConicCertificate::PrimalImprovingRay { ray, .. } => {
            let mut q = p.clone();
            q.c = vec![0.0; p.num_vars()];
            match conic_solve(&q, l, u, cert_tol, max_iters) {
                ConicCertificate::ComplementaryPair { x, .. } => {
                    let cert = ConicCertificate::PrimalImprovingRay { ray, point: x };
                    match verify_certificate(p, l, u, &cert, cert_tol) {
                        Ok(()) => cert,
                        Err(e) => ConicCertificate::Failure(format!("verification: {e}")),
                    }
                }
                ConicCertificate::DualImprovingRay { .. } => {
                    ConicCertificate::Failure("primal and dual both infeasible".into())
                }
                other => ConicCertificate::Failure(format!("no feasible point for improving ray ({})", other.kind())),
            }
        }
        other => other,
    }
}

/// Checks a certificate against its defining conditions.
pub fn verify_certificate(
    p: &MiConicProblem,
    l: &[i64],
    u: &[i64],
    cert: &ConicCertificate,
    tol: f64,
) -> Result<(), String> {
    let ni = p.int_count;
    match cert {
        ConicCertificate::Failure(r) => Err(format!("failure: {r}")),
        ConicCertificate::DualImprovingRay { z, mu, nu } => {
            check_dual_parts(p, z, mu, nu, tol)?;
            let mut r = p.a.tmul_vec(z);
            for i in 0..ni {
                r[i] += mu[i] + nu[i];
            }
            let res = cones::norm_inf(&r);
            let zn = cones::norm_inf(z).max(1.0);
            if res > tol * zn {
                return Err(format!("ray residual {res:.3e}"));
            }
            let d = dual_ray_value(p, l, u, z, mu, nu);
            if d <= 0.0 {
                return Err(format!("ray value {d:.3e} is not positive"));
            }
            Ok(())
        }
        ConicCertificate::PrimalImprovingRay { ray, point } => {
            if ray.len() != p.num_vars() {
                return Err("ray length".into());
            }
            if ray[..ni].iter().any(|v| *v != 0.0) {
                return Err("ray moves an integer column".into());
            }
            let cr = cones::dot(&p.c, ray);
            if cr >= -tol * cones::norm_inf(ray) {
                return Err(format!("ray objective {cr:.3e} is not negative"));
            }
            let ar: Vec<f64> = p.a.mul_vec(ray).iter().map(|v| -v).collect();
            let scale = 1.0 + cones::norm_inf(&ar);
            let worst = max_violation(&p.cones, &ar)?;
            if worst > tol * scale {
                return Err(format!("ray cone violation {worst:.3e}"));
            }
            check_primal(p, l, u, point, tol)
        }
        ConicCertificate::ComplementaryPair { x, z, mu, nu } => {
            check_primal(p, l, u, x, tol)?;
            check_dual_parts(p, z, mu, nu, tol)?;
            let mut r = p.a.tmul_vec(z);
            for (j, v) in r.iter_mut().enumerate() {
                *v += p.c[j];
            }
            for i in 0..ni {
                r[i] += mu[i] + nu[i];
            }
            let res = cones::norm_inf(&r);
            if res > tol * (1.0 + cones::norm_inf(&p.c)) {
                return Err(format!("dual residual {res:.3e}"));
            }
            let cx = cones::dot(&p.c, x);
            let gap = cx - dual_ray_value(p, l, u, z, mu, nu);
            if gap.abs() > tol * (1.0 + cx.abs()) {
                return Err(format!("duality gap {gap:.3e}"));
            }
            Ok(())
        }
    }
}

fn max_violation(k: &ConeProduct, y: &[f64]) -> Result<f64, String> {
    Ok(k.violations(y).map_err(|e| e.to_string())?.into_iter().fold(0.0, f64::max))
}

fn check_primal(p: &MiConicProblem, l: &[i64], u: &[i64], x: &[f64], tol: f64) -> Result<(), String> {
    if x.len() != p.num_vars() {
        return Err("point length".into());
    }
    for i in 0..p.int_count {
        if x[i] < l[i] as f64 - tol || x[i] > u[i] as f64 + tol {
            return Err(format!("integer column {i} outside its bounds"));
        }
    }
    let s = p.slack(x);
    let worst = max_violation(&p.cones, &s)?;
    if worst > tol * (1.0 + cones::norm_inf(&p.b)) {
        return Err(format!("primal cone violation {worst:.3e}"));
    }
    Ok(())
}

fn check_dual_parts(p: &MiConicProblem, z: &[f64], mu: &[f64], nu: &[f64], tol: f64) -> Result<(), String> {
    if z.len() != p.num_rows() || mu.len() != p.int_count || nu.len() != p.int_count {
        return Err("dual lengths".into());
    }
    if mu.iter().any(|v| *v > 0.0) || nu.iter().any(|v| *v < 0.0) {
        return Err("bound multiplier sign".into());
    }
    let worst = p
        .cones
        .dual_violations(z)
        .map_err(|e| e.to_string())?
        .into_iter()
        .fold(0.0, f64::max);
    if worst > tol * (1.0 + cones::norm_inf(z)) {
        return Err(format!("dual cone violation {worst:.3e}"));
    }
    Ok(())
}

/// `CONIC(l, u)` with fixed integer columns substituted out.
struct Reduced<'a> {
    p: &'a MiConicProblem,
    l: &'a [i64],
    u: &'a [i64],
    /// Original column of each reduced column.
    keep: Vec<usize>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    cones: ConeProduct,
}

impl<'a> Reduced<'a> {
    fn new(p: &'a MiConicProblem, l: &'a [i64], u: &'a [i64]) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let fixed = |j: usize| j < p.int_count && l[j] == u[j];
        let keep: Vec<usize> = (0..n).filter(|&j| !fixed(j)).collect();
        let mut pos = vec![usize::MAX; n];
        for (k, &j) in keep.iter().enumerate() {
            pos[j] = k;
        }
        let mut a = vec![vec![0.0; keep.len()]; m];
        let mut b = p.b.clone();
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in p.a.row(i) {
                if fixed(j) {
                    b[i] -= v * l[j] as f64;
                } else {
                    row[pos[j]] = v;
                }
            }
        }
        let free_int: Vec<usize> = (0..p.int_count).filter(|&j| !fixed(j)).collect();
        let mut cones = p.cones.cones().to_vec();
        if !free_int.is_empty() {
            for (bound, _) in [(l, 0), (u, 1)] {
                for &j in &free_int {
                    let mut row = vec![0.0; keep.len()];
                    row[pos[j]] = 1.0;
                    a.push(row);
                    b.push(bound[j] as f64);
                }
            }
            cones.push(PrimitiveCone::NonPos(free_int.len()));
            cones.push(PrimitiveCone::NonNeg(free_int.len()));
        }
        let c = keep.iter().map(|&j| p.c[j]).collect();
        Reduced {
            p,
            l,
            u,
            keep,
            a,
            b,
            c,
            cones: ConeProduct::new(cones).expect("valid cones"),
        }
    }

    fn expand(&self, xr: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.p.num_vars()];
        for j in 0..self.p.int_count {
            x[j] = self.l[j] as f64;
        }
        for (k, &j) in self.keep.iter().enumerate() {
            x[j] = xr[k];
        }
        x
    }

    /// Bound multipliers making the integer part of `base + A'z` vanish.
    fn bound_multipliers(&self, z: &[f64], with_c: bool) -> (Vec<f64>, Vec<f64>) {
        let g = self.p.a.tmul_vec(z);
        let ni = self.p.int_count;
        let mut mu = vec![0.0; ni];
        let mut nu = vec![0.0; ni];
        for i in 0..ni {
            let gi = g[i] + if with_c { self.p.c[i] } else { 0.0 };
            mu[i] = (-gi).min(0.0);
            nu[i] = (-gi).max(0.0);
        }
        (mu, nu)
    }

    fn solve(&self, tol: f64, max_iters: usize) -> ConicCertificate {
        if self.keep.is_empty() {
            return self.solve_constant(tol);
        }
        let admm = Admm::new(&self.a, &self.b, &self.c, &self.cones);
        let m = self.p.num_rows();
        let mut last_err = String::from("no classification");
        let out = admm.run(max_iters, |it: &Iterate| {
            let attempt = if it.tau > 10.0 * it.kappa && it.tau > 1e-6 {
                self.try_solution(it, tol)
            } else if it.kappa > 10.0 * it.tau {
                match self.try_dual_ray(it, m, tol) {
                    Ok(c) => Ok(c),
                    Err(e) => self.try_primal_ray(it, tol).map_err(|f| format!("{e}; {f}")),
                }
            } else {
                Err("tau and kappa undecided".into())
            };
            match attempt {
                Ok(c) => Some(c),
                Err(e) => {
                    last_err = e;
                    None
                }
            }
        });
        out.unwrap_or_else(|| ConicCertificate::Failure(format!("max_iters {max_iters} reached ({last_err})")))
    }

    fn try_solution(&self, it: &Iterate, tol: f64) -> Result<ConicCertificate, String> {
        let xr: Vec<f64> = it.x.iter().map(|v| v / it.tau).collect();
        let m = self.p.num_rows();
        let z: Vec<f64> = it.y[..m].iter().map(|v| v / it.tau).collect();
        let (mu, nu) = self.bound_multipliers(&z, true);
        let raw = self.expand(&xr);
        let mut snapped = raw.clone();
        for j in 0..self.p.int_count {
            let r = snapped[j].round();
            if (snapped[j] - r).abs() <= SNAP_TOL {
                snapped[j] = r;
            }
            snapped[j] = snapped[j].clamp(self.l[j] as f64, self.u[j] as f64);
        }
        let mut first_err = None;
        for x in [snapped, raw] {
            let cert = ConicCertificate::ComplementaryPair {
                x,
                z: z.clone(),
                mu: mu.clone(),
                nu: nu.clone(),
            };
            match verify_certificate(self.p, self.l, self.u, &cert, tol) {
                Ok(()) => return Ok(cert),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        Err(first_err.unwrap_or_default())
    }

    fn try_dual_ray(&self, it: &Iterate, m: usize, tol: f64) -> Result<ConicCertificate, String> {
        let by: f64 = cones::dot(&self.b, &it.y);
        if by >= 0.0 {
            return Err("b'y is not negative".into());
        }
        let nz = cones::norm2(&it.y[..m]);
        if nz <= 1e-300 {
            return Err("zero dual ray on the cone rows".into());
        }
        let z: Vec<f64> = it.y[..m].iter().map(|v| v / nz).collect();
        let (mu, nu) = self.bound_multipliers(&z, false);
        let cert = ConicCertificate::DualImprovingRay { z, mu, nu };
        verify_certificate(self.p, self.l, self.u, &cert, tol).map(|_| cert)
    }

    /// Checks only the ray part; the feasible point comes from a second solve.
    fn try_primal_ray(&self, it: &Iterate, tol: f64) -> Result<ConicCertificate, String> {
        let mut ray = self.expand(&it.x);
        for v in &mut ray[..self.p.int_count] {
            *v = 0.0;
        }
        let nr = cones::norm2(&ray);
        if nr <= 1e-300 {
            return Err("zero primal ray".into());
        }
        ray.iter_mut().for_each(|v| *v /= nr);
        let cr = cones::dot(&self.p.c, &ray);
        if cr >= -tol {
            return Err(format!("ray objective {cr:.3e}"));
        }
        let ar: Vec<f64> = self.p.a.mul_vec(&ray).iter().map(|v| -v).collect();
        let worst = max_violation(&self.p.cones, &ar)?;
        if worst > tol * (1.0 + cones::norm_inf(&ar)) {
            return Err(format!("ray cone violation {worst:.3e}"));
        }
        Ok(ConicCertificate::PrimalImprovingRay { ray, point: Vec::new() })
    }

    /// Every column is fixed: the subproblem is a membership test of `b`.
    fn solve_constant(&self, tol: f64) -> ConicCertificate {
        let x = self.expand(&[]);
        let m = self.p.num_rows();
        let s = &self.b[..m];
        let mut z = vec![0.0; m];
        let mut separated = false;
        for (_, cone, r) in self.p.cones.blocks() {
            let rays = cones::separate(cone, &s[r.clone()], tol * (1.0 + cones::norm_inf(&self.p.b)));
            if let Some(ray) = rays.ok().and_then(|v| v.into_iter().next()) {
                z[r].copy_from_slice(&ray);
                separated = true;
                break;
            }
        }
        let cert = if separated {
            let nz = cones::norm2(&z);
            z.iter_mut().for_each(|v| *v /= nz);
            let (mu, nu) = self.bound_multipliers(&z, false);
            ConicCertificate::DualImprovingRay { z, mu, nu }
        } else {
            let (mu, nu) = self.bound_multipliers(&z, true);
            ConicCertificate::ComplementaryPair { x, z, mu, nu }
        };
        match verify_certificate(self.p, self.l, self.u, &cert, tol) {
            Ok(()) => cert,
            Err(e) => ConicCertificate::Failure(format!("verification: {e}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SparseMatrix;

    fn problem(c: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>, cones: Vec<PrimitiveCone>, ni: usize) -> MiConicProblem {
        let n = c.len();
        MiConicProblem::new(c, SparseMatrix::from_dense(&a, n), b, ConeProduct::new(cones).unwrap(), ni).unwrap()
    }

    #[test]
    fn nonneg_minimum_at_zero() {
        // min x s.t. x >= 0
        let p = problem(vec![1.0], vec![vec![-1.0]], vec![0.0], vec![PrimitiveCone::NonNeg(1)], 0);
        match conic_solve(&p, &[], &[], 1e-7, 20000) {
            ConicCertificate::ComplementaryPair { x, .. } => assert!(x[0].abs() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn farkas_pair() {
        // x >= 1 and -x >= 0
        let p = problem(
            vec![0.0],
            vec![vec![-1.0], vec![1.0]],
            vec![-1.0, 0.0],
            vec![PrimitiveCone::NonNeg(2)],
            0,
        );
        let cert = conic_solve(&p, &[], &[], 1e-7, 20000);
        let ConicCertificate::DualImprovingRay { z, mu, nu } = &cert else { panic!("{cert:?}") };
        assert!(dual_ray_value(&p, &[], &[], z, mu, nu) > 0.0);
        assert!((z[0] - z[1]).abs() < 1e-6);
    }

    #[test]
    fn unbounded_direction() {
        // min -x2 s.t. x2 >= 0, x1 integer in [0, 1]
        let p = problem(
            vec![0.0, -1.0],
            vec![vec![0.0, -1.0]],
            vec![0.0],
            vec![PrimitiveCone::NonNeg(1)],
            1,
        );
        let cert = conic_solve(&p, &[0], &[1], 1e-7, 20000);
        let ConicCertificate::PrimalImprovingRay { ray, point } = &cert else { panic!("{cert:?}") };
        assert_eq!(ray[0], 0.0);
        assert!(ray[1] > 0.0);
        assert_eq!(point.len(), 2);
    }

    #[test]
    fn soc_with_bounds() {
        // max x1 + x2 s.t. (1.5, x1, x2) in SOC, x1 in [-2, 2] integer
        let p = problem(
            vec![-1.0, -1.0],
            vec![vec![0.0, 0.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.5, 0.0, 0.0],
            vec![PrimitiveCone::SecondOrder(3)],
            1,
        );
        let cert = conic_solve(&p, &[1], &[1], 1e-7, 20000);
        let ConicCertificate::ComplementaryPair { x, .. } = &cert else { panic!("{cert:?}") };
        assert_eq!(x[0], 1.0);
        assert!((x[1] - 1.25f64.sqrt()).abs() < 1e-5);
        let cert = conic_solve(&p, &[-2], &[2], 1e-7, 20000);
        let ConicCertificate::ComplementaryPair { x, .. } = &cert else { panic!("{cert:?}") };
        let want = 1.5 / 2f64.sqrt();
        assert!((x[0] - want).abs() < 1e-5 && (x[1] - want).abs() < 1e-5);
        // fixed to an infeasible value
        let cert = conic_solve(&p, &[2], &[2], 1e-7, 20000);
        assert!(matches!(cert, ConicCertificate::DualImprovingRay { .. }), "{cert:?}");
    }

    #[test]
    fn all_fixed_membership() {
        let p = problem(
            vec![1.0],
            vec![vec![0.0], vec![-1.0], vec![0.0]],
            vec![1.0, 0.0, 0.5],
            vec![PrimitiveCone::SecondOrder(3)],
            1,
        );
        assert!(matches!(
            conic_solve(&p, &[0], &[0], 1e-7, 100),
            ConicCertificate::ComplementaryPair { .. }
        ));
        assert!(matches!(
            conic_solve(&p, &[1], &[1], 1e-7, 100),
            ConicCertificate::DualImprovingRay { .. }
        ));
    }
}

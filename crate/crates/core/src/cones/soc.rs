//! Second-order and rotated second-order cones, plus the extended
//! formulation lifting of second-order K* cuts.

use super::{norm2, ConeError};
use std::f64::consts::SQRT_2;

pub(super) fn violation(y: &[f64]) -> f64 {
    (norm2(&y[1..]) - y[0]).max(0.0)
}

/// Orthogonal involution mapping rotated coordinates `(r, s, t)` to standard
/// second-order coordinates `((r+s)/sqrt2, (r-s)/sqrt2, t)`; it is its own
/// inverse.
pub(super) fn to_soc_coords(y: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    out[0] = (y[0] + y[1]) / SQRT_2;
    out[1] = (y[0] - y[1]) / SQRT_2;
    out
}

pub(super) fn from_soc_coords(x: &[f64]) -> Vec<f64> {
    to_soc_coords(x)
}

pub(super) fn rotated_violation(y: &[f64]) -> f64 {
    violation(&to_soc_coords(y))
}

pub(super) fn project(y: &[f64]) -> Vec<f64> {
    let r = y[0];
    let nt = norm2(&y[1..]);
    if nt <= r {
        return y.to_vec();
    }
    if nt <= -r {
        return vec![0.0; y.len()];
    }
    let a = 0.5 * (r + nt);
    let mut out = Vec::with_capacity(y.len());
    out.push(a);
    out.extend(y[1..].iter().map(|v| a * v / nt));
    out
}

pub(super) fn project_rotated(y: &[f64]) -> Vec<f64> {
    from_soc_coords(&project(&to_soc_coords(y)))
}

/// The `2n` box rays `(1, +-e_i)` and, for `n <= limit`, the `2^n` diamond
/// rays `(1, sigma / sqrt n)`.
pub(super) fn initial_rays(n: usize, limit: usize) -> Vec<Vec<f64>> {
    let mut rays = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut z = vec![0.0; n + 1];
            z[0] = 1.0;
            z[i + 1] = sign;
            rays.push(z);
        }
    }
    if n >= 2 && n <= limit && n < 31 {
        let h = 1.0 / (n as f64).sqrt();
        for mask in 0u32..(1 << n) {
            let mut z = vec![1.0; n + 1];
            for i in 0..n {
                z[i + 1] = if mask >> i & 1 == 1 { -h } else { h };
            }
            rays.push(z);
        }
    }
    rays
}

pub(super) fn disaggregate(z: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let nw = norm2(&z[1..]);
    let mut residual = vec![0.0; z.len()];
    if nw == 0.0 {
        residual[0] = z[0];
        return (Vec::new(), residual);
    }
    let mut ray = z.to_vec();
    ray[0] = nw;
    residual[0] = (z[0] - nw).max(0.0);
    (vec![ray], residual)
}

pub(super) fn separate(y: &[f64]) -> Vec<Vec<f64>> {
    let nt = norm2(&y[1..]);
    let mut z = vec![0.0; y.len()];
    z[0] = 1.0;
    if nt > 0.0 {
        for (zi, yi) in z[1..].iter_mut().zip(&y[1..]) {
            *zi = -yi / nt;
        }
    }
    vec![z]
}

/// One lifted cut: a rotated second-order K* ray `ray` acting on the
/// extended formulation triple `(r, pi_index, t_index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedCut {
    pub index: usize,
    pub ray: [f64; 3],
}

/// Lifts the second-order K* extreme ray `(u, w)` into `n` rotated cuts
/// `(w_i^2 / 2u, u, w_i)` on the triples `(r, pi_i, t_i)`. Together with
/// `(u/2) (r - sum 2 pi_i) >= 0` they imply `u r + w't >= 0`.
pub fn lift_soc_cut(u: f64, w: &[f64]) -> Result<Vec<LiftedCut>, ConeError> {
    if !(u > 0.0) || !u.is_finite() {
        return Err(ConeError::InvalidLift(format!("u = {u} must be positive")));
    }
    let nw = norm2(w);
    if nw == 0.0 {
        return Err(ConeError::InvalidLift("w must be nonzero".into()));
    }
    if (u - nw).abs() > 1e-8 * u.max(1.0) {
        return Err(ConeError::InvalidLift(format!(
            "u = {u} differs from ||w|| = {nw}"
        )));
    }
    Ok(w.iter()
        .enumerate()
        .map(|(i, &wi)| LiftedCut {
            index: i,
            ray: [wi * wi / (2.0 * u), u, wi],
        })
        .collect())
}

/// Initial rotated cuts of the extended formulation for a cone of `1 + n`
/// dimensions: `5n` rays, five per triple `(r, pi_i, t_i)`. They are the
/// lifts of the box and diamond rays.
pub fn ef_initial_rays(n: usize) -> Vec<LiftedCut> {
    let h = 1.0 / (n as f64).sqrt();
    let d = 1.0 / (2.0 * n as f64);
    let mut out = Vec::with_capacity(5 * n);
    for i in 0..n {
        for ray in [
            [0.0, 1.0, 0.0],
            [0.5, 1.0, 1.0],
            [0.5, 1.0, -1.0],
            [d, 1.0, h],
            [d, 1.0, -h],
        ] {
            out.push(LiftedCut { index: i, ray });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn projection_example() {
        let p = project(&[0.0, 3.0, 4.0]);
        assert_abs_diff_eq!(p.as_slice(), [2.5, 1.5, 2.0].as_slice(), epsilon = 1e-14);
    }

    #[test]
    fn rotated_roundtrip() {
        let y = [1.0, 2.0, 3.0, -1.0];
        let back = from_soc_coords(&to_soc_coords(&y));
        assert_abs_diff_eq!(back.as_slice(), y.as_slice(), epsilon = 1e-14);
        assert_eq!(rotated_violation(&[1.0, 0.5, 1.0]), 0.0);
        assert!(rotated_violation(&[1.0, 0.4, 1.0]) > 0.0);
    }

    #[test]
    fn initial_rays_counts() {
        assert_eq!(initial_rays(2, 10).len(), 8);
        assert_eq!(initial_rays(5, 4).len(), 10);
        assert_eq!(initial_rays(3, 3).len(), 14);
    }

    #[test]
    fn disaggregation_examples() {
        let (rays, res) = disaggregate(&[7.0, 3.0, 4.0]);
        assert_eq!(rays, vec![vec![5.0, 3.0, 4.0]]);
        assert_eq!(res, vec![2.0, 0.0, 0.0]);
        let (rays, _) = disaggregate(&[1.0, 0.0, 0.0]);
        assert!(rays.is_empty());
    }

    #[test]
    fn lift_examples() {
        let cuts = lift_soc_cut(SQRT_2, &[1.0, 1.0]).unwrap();
        assert_eq!(cuts.len(), 2);
        for c in &cuts {
            assert_abs_diff_eq!(c.ray[0], 1.0 / (2.0 * SQRT_2), epsilon = 1e-15);
            assert_abs_diff_eq!(c.ray[1], SQRT_2, epsilon = 1e-15);
            assert_abs_diff_eq!(c.ray[2], 1.0, epsilon = 1e-15);
        }
        let cuts = lift_soc_cut(1.0, &[1.0, 0.0]).unwrap();
        assert_eq!(cuts[0].ray, [0.5, 1.0, 1.0]);
        assert_eq!(cuts[1].ray, [0.0, 1.0, 0.0]);
        assert!(lift_soc_cut(0.0, &[1.0]).is_err());
        assert!(lift_soc_cut(2.0, &[1.0]).is_err());
        assert!(lift_soc_cut(1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn ef_rays_are_lifts() {
        assert_eq!(ef_initial_rays(3).len(), 15);
        for c in ef_initial_rays(4) {
            let [a, b, t] = c.ray;
            assert!(2.0 * a * b >= t * t - 1e-15);
        }
    }
}

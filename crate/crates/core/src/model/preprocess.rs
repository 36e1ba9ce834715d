use super::{MiConicProblem, ModelError};
use crate::cones::{ConeProduct, PrimitiveCone};
use std::f64::consts::SQRT_2;

/// Slack used when rounding bounds inward, so `x >= 2 - 1e-12` gives 2.
pub const INT_ROUND_TOL: f64 = 1e-9;

/// Rewrites rotated second-order blocks as second-order blocks and fixes
/// finite integer bounds from singleton linear rows (or `default_big_m`).
pub fn preprocess(p: &MiConicProblem, default_big_m: Option<i64>) -> Result<MiConicProblem, ModelError> {
    p.validate()?;
    let mut q = p.clone();
    rotated_to_standard(&mut q)?;
    tighten_int_bounds(&mut q);
    for j in 0..q.int_count {
        if q.int_lower[j].is_none() {
            let m = default_big_m.ok_or(ModelError::UnboundedInteger(q.var_order[j], "lower"))?;
            q.int_lower[j] = Some(-m);
        }
        if q.int_upper[j].is_none() {
            let m = default_big_m.ok_or(ModelError::UnboundedInteger(q.var_order[j], "upper"))?;
            q.int_upper[j] = Some(m);
        }
        let (l, u) = (q.int_lower[j].unwrap(), q.int_upper[j].unwrap());
        if l > u {
            return Err(ModelError::InfeasibleBounds {
                var: q.var_order[j],
                lower: l,
                upper: u,
            });
        }
    }
    Ok(q)
}

/// `(r, s, t)` rows become `(r + s, r - s, sqrt2 t)`.
fn rotated_to_standard(p: &mut MiConicProblem) -> Result<(), ModelError> {
    let mut cones = p.cones.cones().to_vec();
    for (k, cone, range) in p.cones.clone().blocks() {
        let PrimitiveCone::RotatedSecondOrder(d) = *cone else {
            continue;
        };
        let start = range.start;
        let rows: Vec<Vec<(usize, f64)>> = range.map(|i| p.a.row(i).collect()).collect();
        let combine = |fb: f64| -> Vec<(usize, f64)> {
            let mut v = rows[0].clone();
            v.extend(rows[1].iter().map(|&(j, x)| (j, fb * x)));
            v
        };
        let mut new_rows = vec![combine(1.0), combine(-1.0)];
        for row in &rows[2..] {
            new_rows.push(row.iter().map(|&(j, x)| (j, SQRT_2 * x)).collect());
        }
        p.a = p.a.with_rows_replaced(start, d, &new_rows);
        let (br, bs) = (p.b[start], p.b[start + 1]);
        p.b[start] = br + bs;
        p.b[start + 1] = br - bs;
        for v in &mut p.b[start + 2..start + d] {
            *v *= SQRT_2;
        }
        cones[k] = PrimitiveCone::SecondOrder(d);
    }
    p.cones = ConeProduct::new(cones)?;
    Ok(())
}

fn tighten_int_bounds(p: &mut MiConicProblem) {
    let mut lower: Vec<Option<f64>> = vec![None; p.int_count];
    let mut upper: Vec<Option<f64>> = vec![None; p.int_count];
    let mut tighten = |j: usize, lo: Option<f64>, hi: Option<f64>| {
        if let Some(v) = lo {
            lower[j] = Some(lower[j].map_or(v, |w: f64| w.max(v)));
        }
        if let Some(v) = hi {
            upper[j] = Some(upper[j].map_or(v, |w: f64| w.min(v)));
        }
    };
    for (_, cone, range) in p.cones.blocks() {
        let (ge, le) = match cone {
            // b - a x >= 0
            PrimitiveCone::NonNeg(_) => (false, true),
            PrimitiveCone::NonPos(_) => (true, false),
            PrimitiveCone::Zero(_) => (true, true),
            _ => continue,
        };
        for i in range {
            if p.a.row_nnz(i) != 1 {
                continue;
            }
            let (j, a) = p.a.row(i).next().expect("one nonzero");
            if j >= p.int_count {
                continue;
            }
            let v = p.b[i] / a;
            // `a x <= b` when `le`, `a x >= b` when `ge`
            if le {
                if a > 0.0 {
                    tighten(j, None, Some(v));
                } else {
                    tighten(j, Some(v), None);
                }
            }
            if ge {
                if a > 0.0 {
                    tighten(j, Some(v), None);
                } else {
                    tighten(j, None, Some(v));
                }
            }
        }
    }
    for j in 0..p.int_count {
        if let Some(v) = lower[j] {
            let v = (v - INT_ROUND_TOL).ceil() as i64;
            p.int_lower[j] = Some(p.int_lower[j].map_or(v, |w| w.max(v)));
        }
        if let Some(v) = upper[j] {
            let v = (v + INT_ROUND_TOL).floor() as i64;
            p.int_upper[j] = Some(p.int_upper[j].map_or(v, |w| w.min(v)));
        }
    }
}

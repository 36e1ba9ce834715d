//! Exponential cone in `(r, s, t)` order: the closure of
//! `{s > 0, r >= s exp(t / s)}`.

use super::norm2;

/// Values `w < 0` generating the initial rays `(1, w - w ln(-w), w)`.
pub const EXP_INITIAL_GRID: [f64; 5] = [-4.0, -2.0, -1.0, -0.5, -0.25];

const RHO_CLIP: f64 = 200.0;
const NORMALIZE_RHO: f64 = 50.0;

fn functional_violation(y: &[f64]) -> f64 {
    let (r, s, t) = (y[0], y[1], y[2]);
    if s > 0.0 {
        (s * (t / s).exp() - r).max(0.0)
    } else {
        (-s).max(-r).max(t).max(0.0)
    }
}

pub(super) fn violation(y: &[f64]) -> f64 {
    let f = functional_violation(y);
    if f <= 0.0 {
        return 0.0;
    }
    let p = project(y);
    let d = norm2(&[y[0] - p[0], y[1] - p[1], y[2] - p[2]]);
    f.min(d)
}

/// Closed form: `{(u, v, 0): u, v >= 0}` union
/// `{u > 0, w < 0, v >= w - w ln(-w / u)}`.
fn dual_functional_violation(z: &[f64]) -> f64 {
    let (u, v, w) = (z[0], z[1], z[2]);
    if w < 0.0 && u > 0.0 {
        (w - w * (-w / u).ln() - v).max(0.0)
    } else if w == 0.0 {
        (-u).max(-v).max(0.0)
    } else {
        f64::INFINITY
    }
}

pub(super) fn dual_violation(z: &[f64]) -> f64 {
    let f = dual_functional_violation(z);
    if f <= 0.0 {
        return 0.0;
    }
    // distance to K* is the norm of P_K(-z)
    let p = project(&[-z[0], -z[1], -z[2]]);
    f.min(norm2(&p))
}

/// Euclidean projection onto the exponential cone.
pub(super) fn project(y: &[f64]) -> [f64; 3] {
    let (r, s, t) = (y[0], y[1], y[2]);
    if functional_violation(y) == 0.0 {
        return [r, s, t];
    }
    if dual_functional_violation(&[-r, -s, -t]) == 0.0 {
        return [0.0; 3];
    }
    let mut best = [0.0; 3];
    let mut best_d = dist(y, &best);
    let face = [r.max(0.0), 0.0, t.min(0.0)];
    let fd = dist(y, &face);
    if fd < best_d {
        best = face;
        best_d = fd;
    }
    if s > 0.0 {
        let lift = [s * (t / s).exp(), s, t];
        let d = dist(y, &lift);
        if d < best_d {
            best = lift;
            best_d = d;
        }
    }
    if let Some(p) = boundary_candidate(r, s, t) {
        let d = dist(y, &p);
        if d < best_d {
            best = p;
        }
    }
    best
}

fn dist(y: &[f64], p: &[f64; 3]) -> f64 {
    norm2(&[y[0] - p[0], y[1] - p[1], y[2] - p[2]])
}

/// Projection onto the smooth part of the boundary, `y_c (e^rho, 1, rho)`,
/// found from the scalar optimality condition in `rho`.
fn boundary_candidate(r0: f64, s0: f64, t0: f64) -> Option<[f64; 3]> {
    let coef = |rho: f64| ((rho - 1.0) * t0 + s0, t0 - rho * s0);
    let h = |rho: f64| {
        let (a, b) = coef(rho);
        a * rho.exp() - b * (-rho).exp() - r0 * (rho * rho - rho + 1.0)
    };
    let dh = |rho: f64| {
        let (a, b) = coef(rho);
        (t0 + a) * rho.exp() + (s0 + b) * (-rho).exp() - r0 * (2.0 * rho - 1.0)
    };

    // interval on which both coefficients are positive
    let (mut lo, mut hi) = (-RHO_CLIP, RHO_CLIP);
    if t0 > 0.0 {
        lo = lo.max(1.0 - s0 / t0);
    } else if t0 < 0.0 {
        hi = hi.min(1.0 - s0 / t0);
    } else if s0 <= 0.0 {
        return None;
    }
    if s0 > 0.0 {
        hi = hi.min(t0 / s0);
    } else if s0 < 0.0 {
        lo = lo.max(t0 / s0);
    } else if t0 <= 0.0 {
        return None;
    }
    if !(lo < hi) {
        return None;
    }

    let (mut a, mut b) = (lo, hi);
    let (mut ha, hb) = (h(a), h(b));
    if ha.signum() == hb.signum() {
        const SAMPLES: usize = 64;
        let mut found = false;
        let mut prev = (a, ha);
        for k in 1..=SAMPLES {
            let x = lo + (hi - lo) * k as f64 / SAMPLES as f64;
            let hx = h(x);
            if hx.signum() != prev.1.signum() {
                a = prev.0;
                ha = prev.1;
                b = x;
                found = true;
                break;
            }
            prev = (x, hx);
        }
        if !found {
            return None;
        }
    }

    // safeguarded Newton on the bracket [a, b]
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let hx = h(x);
        if hx == 0.0 {
            break;
        }
        if hx.signum() == ha.signum() {
            a = x;
            ha = hx;
        } else {
            b = x;
        }
        let d = dh(x);
        let newton = x - hx / d;
        let next = if d.is_finite() && d != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || (b - a) <= 1e-15 * (1.0 + x.abs()) {
            x = next;
            break;
        }
        x = next;
    }
    // projection onto the ray at rho keeps p orthogonal to p - y
    let v = [x.exp(), 1.0, x];
    let yc = (r0 * v[0] + s0 + t0 * x) / (v[0] * v[0] + 1.0 + x * x);
    if !(yc > 0.0) || !yc.is_finite() {
        return None;
    }
    let p = [yc * v[0], yc, yc * x];
    p.iter().all(|v| v.is_finite()).then_some(p)
}

pub(super) fn initial_rays(grid: &[f64]) -> Vec<Vec<f64>> {
    let mut rays = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
    for &w in grid {
        debug_assert!(w < 0.0);
        rays.push(vec![1.0, w - w * (-w).ln(), w]);
    }
    rays
}

pub(super) fn disaggregate(z: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (u, v, w) = (z[0], z[1], z[2]);
    if w < 0.0 {
        let vb = if u > 0.0 { w - w * (-w / u).ln() } else { f64::INFINITY };
        if vb <= v {
            (vec![vec![u, vb, w]], vec![0.0, v - vb, 0.0])
        } else {
            // u at or below underflow: boundary ray through (v, w)
            (vec![vec![u.max(-w * (v / w - 1.0).exp()), v, w]], vec![0.0; 3])
        }
    } else if u > 0.0 {
        (vec![vec![u, 0.0, 0.0]], vec![0.0, v.max(0.0), 0.0])
    } else {
        (Vec::new(), vec![0.0, v.max(0.0), 0.0])
    }
}

pub(super) fn separate(y: &[f64], tol: f64) -> Vec<Vec<f64>> {
    let (r, s, t) = (y[0], y[1], y[2]);
    let mut rays = Vec::new();
    if s > 0.0 {
        let rho = t / s;
        if rho > NORMALIZE_RHO {
            rays.push(vec![(-rho).exp(), rho - 1.0, -1.0]);
        } else {
            let e = rho.exp();
            rays.push(vec![1.0, (rho - 1.0) * e, -e]);
        }
    } else {
        if s < -tol {
            rays.push(vec![0.0, 1.0, 0.0]);
        }
        if r < -tol {
            rays.push(vec![1.0, 0.0, 0.0]);
        }
        if t > tol && r > 0.0 {
            rays.push(vec![t / r, -2.0 + 2.0 * (2.0 * r / t).ln(), -2.0]);
        }
    }
    rays
}

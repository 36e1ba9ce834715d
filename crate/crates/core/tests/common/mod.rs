//! Seeded generator of small mixed-integer conic instances.
#![allow(dead_code)]

pub mod cbf_cases;
pub mod guarantees;

use conicert::cones::{psd_svec_index, ConeProduct, PrimitiveCone};
use conicert::model::{MiConicProblem, SparseMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Soc,
    Exp,
    Psd,
    Mixed,
}

pub const FAMILIES: [Family; 4] = [Family::Soc, Family::Exp, Family::Psd, Family::Mixed];

/// Bound on continuous columns.
const BOX: f64 = 4.0;

struct Builder {
    n: usize,
    rows: Vec<Vec<f64>>,
    b: Vec<f64>,
    cones: Vec<PrimitiveCone>,
}

impl Builder {
    /// Appends a block with rows `b_i - a_i' x`.
    fn block(&mut self, cone: PrimitiveCone, rows: Vec<(f64, Vec<f64>)>) {
        assert_eq!(rows.len(), cone.dim());
        for (bi, ai) in rows {
            self.b.push(bi);
            self.rows.push(ai);
        }
        self.cones.push(cone);
    }

    /// Affine expression `b0 + sum coef x_j` as a row of `b - A x`.
    fn expr(&self, b0: f64, terms: &[(usize, f64)]) -> (f64, Vec<f64>) {
        let mut a = vec![0.0; self.n];
        for &(j, v) in terms {
            a[j] -= v;
        }
        (b0, a)
    }
}

fn small(rng: &mut ChaCha8Rng) -> f64 {
    [-1.0, -0.5, 0.5, 1.0][rng.gen_range(0..4)]
}

fn random_terms(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<(usize, f64)> {
    (0..k).map(|_| (rng.gen_range(0..n), small(rng))).collect()
}

fn soc_block(rng: &mut ChaCha8Rng, bld: &mut Builder) {
    let d = rng.gen_range(3..=4);
    let b0 = rng.gen_range(1.0..4.0);
    let t0 = random_terms(rng, bld.n, 1);
    let mut rows = vec![bld.expr(b0, &t0)];
    for _ in 1..d {
        let k = rng.gen_range(1..=2);
        let t = random_terms(rng, bld.n, k);
        rows.push(bld.expr(rng.gen_range(-1.0..1.0), &t));
    }
    bld.block(PrimitiveCone::SecondOrder(d), rows);
}

fn exp_block(rng: &mut ChaCha8Rng, bld: &mut Builder) {
    // r >= s exp(t / s) with s a positive constant
    let r0 = rng.gen_range(1.0..5.0);
    let rt = random_terms(rng, bld.n, 1);
    let r = bld.expr(r0, &rt);
    let s = bld.expr(rng.gen_range(0.5..2.0), &[]);
    let t0 = rng.gen_range(-1.0..1.0);
    let k = rng.gen_range(1..=2);
    let tt = random_terms(rng, bld.n, k);
    let t = bld.expr(t0, &tt);
    bld.block(PrimitiveCone::Exponential, vec![r, s, t]);
}

fn psd_block(rng: &mut ChaCha8Rng, bld: &mut Builder) {
    let side = rng.gen_range(2..=3);
    let dim = side * (side + 1) / 2;
    let mut rows = vec![(0.0, vec![0.0; bld.n]); dim];
    for j in 0..side {
        for i in j..side {
            let k = psd_svec_index(side, i, j);
            let terms = random_terms(rng, bld.n, 1);
            rows[k] = if i == j {
                bld.expr(rng.gen_range(1.0..3.0), &terms)
            } else {
                let (b0, mut a) = bld.expr(rng.gen_range(-0.5..0.5), &terms);
                a.iter_mut().for_each(|v| *v *= std::f64::consts::SQRT_2);
                (b0 * std::f64::consts::SQRT_2, a)
            };
        }
    }
    bld.block(PrimitiveCone::PsdSvec(side), rows);
}

/// Instance number `seed` of `family`. Integer ranges have at most 5 values
/// and at most 200 assignments; continuous columns are boxed, so every
/// instance is either optimal or infeasible.
pub fn instance(family: Family, seed: u64) -> MiConicProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9) ^ family as u64);
    let ni = rng.gen_range(1..=3);
    let nc = rng.gen_range(1..=3);
    let n = ni + nc;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut count = 1;
    for _ in 0..ni {
        let width = loop {
            let w = rng.gen_range(1..=4);
            if count * (w + 1) <= 200 {
                break w;
            }
        };
        count *= width + 1;
        let l = rng.gen_range(-2..=0);
        lower.push(l);
        upper.push(l + width as i64);
    }
    let mut bld = Builder {
        n,
        rows: Vec::new(),
        b: Vec::new(),
        cones: Vec::new(),
    };
    let mut boxes = Vec::new();
    for j in ni..n {
        boxes.push(bld.expr(BOX, &[(j, -1.0)]));
        boxes.push(bld.expr(BOX, &[(j, 1.0)]));
    }
    bld.block(PrimitiveCone::NonNeg(boxes.len()), boxes);
    let kinds: Vec<Family> = match family {
        Family::Mixed => vec![Family::Soc, Family::Exp, Family::Psd],
        f => vec![f; rng.gen_range(1..=2)],
    };
    for k in kinds {
        match k {
            Family::Soc => soc_block(&mut rng, &mut bld),
            Family::Exp => exp_block(&mut rng, &mut bld),
            Family::Psd => psd_block(&mut rng, &mut bld),
            Family::Mixed => unreachable!(),
        }
    }
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
    let a = SparseMatrix::from_dense(&bld.rows, n);
    MiConicProblem::new(c, a, bld.b, ConeProduct::new(bld.cones).unwrap(), ni)
        .unwrap()
        .with_int_bounds(&lower, &upper)
}

/// The oracle suite: `per_family` instances of each family.
pub fn suite(per_family: u64) -> Vec<(String, MiConicProblem)> {
    let mut out = Vec::new();
    for f in FAMILIES {
        for s in 0..per_family {
            out.push((format!("{f:?}-{s}"), instance(f, s)));
        }
    }
    out
}

/// The example instance: max x1 + x2 s.t. (1.5, x1, x2) in SOC, x in
/// {-2, .., 2}^2.
pub fn soc_example() -> MiConicProblem {
    let a = SparseMatrix::from_dense(&[vec![0.0, 0.0], vec![-1.0, 0.0], vec![0.0, -1.0]], 2);
    MiConicProblem::new(
        vec![-1.0, -1.0],
        a,
        vec![1.5, 0.0, 0.0],
        ConeProduct::new(vec![PrimitiveCone::SecondOrder(3)]).unwrap(),
        2,
    )
    .unwrap()
    .with_int_bounds(&[-2, -2], &[2, 2])
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

//! Cone calculus for the primitive cones recognized by the solver.
//!
//! Every primitive cone supports membership and dual membership tests,
//! Euclidean projection, the initial fixed K* rays used to seed an outer
//! approximation, disaggregation of a K* point into extreme rays, and
//! separation of an infeasible point. Dual points are always expressed in
//! the same coordinates as the primal cone, so a K* point `z` induces the
//! linear inequality `z' y >= 0` on `y` in the cone.

mod exp;
mod psd;
mod soc;

use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

pub use exp::EXP_INITIAL_GRID;
pub use psd::{
    psd_side, smat, strengthen_psd_cut, svec, svec_index as psd_svec_index, sym_eigen,
    StrengthenedRsocConstraint,
};
pub use soc::{ef_initial_rays, lift_soc_cut, LiftedCut};

/// Relative distance below which a slightly dual-infeasible point is
/// repaired by projection instead of rejected.
pub const DUAL_REPAIR_TOL: f64 = 1e-7;

/// Errors raised by cone operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("dimension mismatch: cone has dimension {expected}, vector has length {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid cone: {0}")]
    InvalidCone(String),
    #[error("point is at distance {distance:.3e} from the dual cone and cannot be repaired")]
    NotRepairable { distance: f64 },
    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    AsymmetricMatrix(f64),
    #[error("vector length {0} is not a triangular number")]
    NonTriangularLength(usize),
    #[error("invalid second-order cut for lifting: {0}")]
    InvalidLift(String),
    #[error("index {index} out of range for side {side}")]
    IndexOutOfRange { index: usize, side: usize },
    #[error("omega must be nonzero")]
    ZeroOmega,
}

/// A primitive closed convex cone. The payload is the dimension, except for
/// `PsdSvec` whose payload is the matrix side `n` (dimension `n(n+1)/2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrimitiveCone {
    Zero(usize),
    Free(usize),
    NonNeg(usize),
    NonPos(usize),
    /// `{(r, t) : r >= ||t||_2}`
    SecondOrder(usize),
    /// `{(r, s, t) : r, s >= 0, 2 r s >= ||t||_2^2}`
    RotatedSecondOrder(usize),
    /// Closure of `{(r, s, t) : s > 0, r >= s exp(t / s)}`.
    Exponential,
    /// Positive semidefinite matrices of the given side, in svec coordinates.
    PsdSvec(usize),
}

impl PrimitiveCone {
    pub fn dim(&self) -> usize {
        match *self {
            PrimitiveCone::Zero(d)
            | PrimitiveCone::Free(d)
            | PrimitiveCone::NonNeg(d)
            | PrimitiveCone::NonPos(d)
            | PrimitiveCone::SecondOrder(d)
            | PrimitiveCone::RotatedSecondOrder(d) => d,
            PrimitiveCone::Exponential => 3,
            PrimitiveCone::PsdSvec(n) => n * (n + 1) / 2,
        }
    }

    pub fn validate(&self) -> Result<(), ConeError> {
        let bad = |msg: &str| Err(ConeError::InvalidCone(format!("{self:?}: {msg}")));
        match *self {
            PrimitiveCone::Zero(d)
            | PrimitiveCone::Free(d)
            | PrimitiveCone::NonNeg(d)
            | PrimitiveCone::NonPos(d)
                if d == 0 =>
            {
                bad("dimension must be positive")
            }
            PrimitiveCone::SecondOrder(d) if d < 2 => bad("dimension must be at least 2"),
            PrimitiveCone::RotatedSecondOrder(d) if d < 3 => bad("dimension must be at least 3"),
            PrimitiveCone::PsdSvec(n) if n < 2 => bad("side must be at least 2"),
            _ => Ok(()),
        }
    }

    /// Linear cones are imposed exactly in the LP and never relaxed.
    pub fn is_polyhedral(&self) -> bool {
        matches!(
            self,
            PrimitiveCone::Zero(_)
                | PrimitiveCone::Free(_)
                | PrimitiveCone::NonNeg(_)
                | PrimitiveCone::NonPos(_)
        )
    }

    /// Short tag used in logs and error messages.
    pub fn tag(&self) -> &'static str {
        match self {
            PrimitiveCone::Zero(_) => "zero",
            PrimitiveCone::Free(_) => "free",
            PrimitiveCone::NonNeg(_) => "nonneg",
            PrimitiveCone::NonPos(_) => "nonpos",
            PrimitiveCone::SecondOrder(_) => "soc",
            PrimitiveCone::RotatedSecondOrder(_) => "rsoc",
            PrimitiveCone::Exponential => "exp",
            PrimitiveCone::PsdSvec(_) => "psd",
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<(), ConeError> {
        if v.len() != self.dim() {
            return Err(ConeError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Worst violation of the cone's defining inequalities (zero inside).
    pub fn violation(&self, y: &[f64]) -> Result<f64, ConeError> {
        self.check_len(y)?;
        Ok(match *self {
            PrimitiveCone::Zero(_) => y.iter().fold(0.0, |m, v| m.max(v.abs())),
            PrimitiveCone::Free(_) => 0.0,
            PrimitiveCone::NonNeg(_) => y.iter().fold(0.0, |m, v| m.max(-v)),
            PrimitiveCone::NonPos(_) => y.iter().fold(0.0, |m, v| m.max(*v)),
            PrimitiveCone::SecondOrder(_) => soc::violation(y),
            PrimitiveCone::RotatedSecondOrder(_) => soc::rotated_violation(y),
            PrimitiveCone::Exponential => exp::violation(y),
            PrimitiveCone::PsdSvec(_) => psd::violation(y)?,
        })
    }

    /// Worst violation of the dual cone's defining inequalities.
    pub fn dual_violation(&self, z: &[f64]) -> Result<f64, ConeError> {
        self.check_len(z)?;
        Ok(match *self {
            PrimitiveCone::Zero(_) => 0.0,
            PrimitiveCone::Free(_) => z.iter().fold(0.0, |m, v| m.max(v.abs())),
            PrimitiveCone::Exponential => exp::dual_violation(z),
            // the remaining cones are self-dual
            _ => self.violation(z)?,
        })
    }
}

/// True iff the worst violation of the cone's inequalities is at most `tol`.
pub fn member(cone: &PrimitiveCone, y: &[f64], tol: f64) -> Result<bool, ConeError> {
    Ok(cone.violation(y)? <= tol)
}

/// True iff `z` lies in the dual cone within `tol`.
pub fn dual_member(cone: &PrimitiveCone, z: &[f64], tol: f64) -> Result<bool, ConeError> {
    Ok(cone.dual_violation(z)? <= tol)
}

/// Euclidean projection onto the cone.
///
/// Panics if `y` does not have the cone's dimension.
pub fn project(cone: &PrimitiveCone, y: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), cone.dim(), "projection dimension mismatch");
    match *cone {
        PrimitiveCone::Zero(d) => vec![0.0; d],
        PrimitiveCone::Free(_) => y.to_vec(),
        PrimitiveCone::NonNeg(_) => y.iter().map(|v| v.max(0.0)).collect(),
        PrimitiveCone::NonPos(_) => y.iter().map(|v| v.min(0.0)).collect(),
        PrimitiveCone::SecondOrder(_) => soc::project(y),
        PrimitiveCone::RotatedSecondOrder(_) => soc::project_rotated(y),
        PrimitiveCone::Exponential => exp::project(y).to_vec(),
        PrimitiveCone::PsdSvec(n) => psd::project(n, y),
    }
}

/// Euclidean projection onto the dual cone, via `P_{K*}(z) = z + P_K(-z)`.
pub fn project_dual(cone: &PrimitiveCone, z: &[f64]) -> Vec<f64> {
    match *cone {
        PrimitiveCone::Zero(_) => z.to_vec(),
        PrimitiveCone::Free(d) => vec![0.0; d],
        PrimitiveCone::Exponential => {
            let neg: Vec<f64> = z.iter().map(|v| -v).collect();
            let p = exp::project(&neg);
            z.iter().zip(p.iter()).map(|(a, b)| a + b).collect()
        }
        _ => project(cone, z),
    }
}

/// Initial fixed K* rays for a nonpolyhedral cone. Polyhedral cones are
/// imposed exactly by the LP and return no rays here.
pub fn initial_fixed_rays(cone: &PrimitiveCone, soc_full_diamond_limit: usize) -> Vec<Vec<f64>> {
    match *cone {
        PrimitiveCone::SecondOrder(d) => soc::initial_rays(d - 1, soc_full_diamond_limit),
        PrimitiveCone::RotatedSecondOrder(d) => soc::initial_rays(d - 1, soc_full_diamond_limit)
            .iter()
            .map(|r| soc::from_soc_coords(r))
            .collect(),
        PrimitiveCone::Exponential => exp::initial_rays(&EXP_INITIAL_GRID),
        PrimitiveCone::PsdSvec(n) => psd::initial_rays(n),
        _ => Vec::new(),
    }
}

/// Result of splitting a K* point into extreme rays of the dual cone.
#[derive(Debug, Clone, PartialEq)]
pub struct Disaggregation {
    /// Extreme rays of the dual cone, none a positive scaling of another.
    pub rays: Vec<Vec<f64>>,
    /// `z - sum(rays)`: a nonnegative multiple of the cone's fixed direction
    /// (`(1, 0, ..)` for second-order, `(0, 1, 0)` for exponential, zero for
    /// PSD and linear cones). It is implied by the initial fixed cuts.
    pub residual: Vec<f64>,
    /// Euclidean distance moved by dual repair (zero if none was needed).
    pub repair_distance: f64,
}

/// Repairs a slightly dual-infeasible point by projecting it onto the dual
/// cone. Points farther than `DUAL_REPAIR_TOL * (1 + ||z||)` are rejected.
pub fn repair_dual(cone: &PrimitiveCone, z: &[f64]) -> Result<(Vec<f64>, f64), ConeError> {
    let scale = 1.0 + norm_inf(z);
    if cone.dual_violation(z)? <= 1e-12 * scale {
        return Ok((z.to_vec(), 0.0));
    }
    let p = project_dual(cone, z);
    let dist = dist2(z, &p);
    if dist > DUAL_REPAIR_TOL * scale {
        return Err(ConeError::NotRepairable { distance: dist });
    }
    Ok((p, dist))
}

/// Disaggregates a K* point into at most `dim` extreme rays of the dual cone.
pub fn disaggregate(cone: &PrimitiveCone, z: &[f64]) -> Result<Disaggregation, ConeError> {
    cone.check_len(z)?;
    let (z, repair_distance) = repair_dual(cone, z)?;
    let (rays, residual) = match *cone {
        PrimitiveCone::Zero(_) | PrimitiveCone::NonNeg(_) | PrimitiveCone::NonPos(_) => {
            let rays = z
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| unit_scaled(z.len(), i, *v))
                .collect();
            (rays, vec![0.0; z.len()])
        }
        PrimitiveCone::Free(d) => (Vec::new(), vec![0.0; d]),
        PrimitiveCone::SecondOrder(_) => soc::disaggregate(&z),
        PrimitiveCone::RotatedSecondOrder(_) => {
            let (rays, res) = soc::disaggregate(&soc::to_soc_coords(&z));
            (
                rays.iter().map(|r| soc::from_soc_coords(r)).collect(),
                soc::from_soc_coords(&res),
            )
        }
        PrimitiveCone::Exponential => exp::disaggregate(&z),
        PrimitiveCone::PsdSvec(n) => psd::disaggregate(n, &z),
    };
    Ok(Disaggregation {
        rays,
        residual,
        repair_distance,
    })
}

/// Separation K* rays for a point outside the cone. Returns an empty list iff
/// `member(cone, y, tol)`; otherwise each ray `z` satisfies `z' y < -tol`.
pub fn separate(cone: &PrimitiveCone, y: &[f64], tol: f64) -> Result<Vec<Vec<f64>>, ConeError> {
    let viol = cone.violation(y)?;
    if viol <= tol {
        return Ok(Vec::new());
    }
    let mut rays = match *cone {
        PrimitiveCone::Zero(d) => (0..d)
            .filter(|&i| y[i].abs() > tol)
            .map(|i| unit_scaled(d, i, -y[i].signum()))
            .collect(),
        PrimitiveCone::Free(_) => Vec::new(),
        PrimitiveCone::NonNeg(d) => (0..d)
            .filter(|&i| y[i] < -tol)
            .map(|i| unit_scaled(d, i, 1.0))
            .collect(),
        PrimitiveCone::NonPos(d) => (0..d)
            .filter(|&i| y[i] > tol)
            .map(|i| unit_scaled(d, i, -1.0))
            .collect(),
        PrimitiveCone::SecondOrder(_) => soc::separate(y),
        PrimitiveCone::RotatedSecondOrder(_) => soc::separate(&soc::to_soc_coords(y))
            .iter()
            .map(|r| soc::from_soc_coords(r))
            .collect(),
        PrimitiveCone::Exponential => exp::separate(y, tol),
        PrimitiveCone::PsdSvec(n) => psd::separate(n, y, tol),
    };
    // Rescale weak but valid directions so every returned cut is strict.
    let target = viol.max(2.0 * tol);
    rays.retain_mut(|z| {
        let val = dot(z, y);
        if val < 0.0 && val >= -tol {
            let f = target / -val;
            z.iter_mut().for_each(|v| *v *= f);
        }
        val < 0.0 && z.iter().all(|v| v.is_finite())
    });
    if rays.is_empty() {
        // Fallback: the normalized Moreau component always separates, scaled
        // so its cut value equals minus the violation.
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let z = project_dual(cone, &neg);
        let val = dot(&z, y);
        if val < 0.0 {
            let f = viol.max(tol * 2.0) / -val;
            rays.push(z.iter().map(|v| v * f).collect());
        }
    }
    Ok(rays)
}

/// A K* point attached to one block of a cone product, with the positive
/// multiplier applied when its cut is materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KStarRay {
    pub block: usize,
    pub values: Vec<f64>,
    pub scale: f64,
}

impl KStarRay {
    pub fn new(block: usize, values: Vec<f64>) -> Self {
        KStarRay {
            block,
            values,
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "ray scale must be positive");
        self.scale = scale;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Ordered Cartesian product of primitive cones. The order fixes the row
/// blocks of the constraint data.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConeProduct {
    cones: Vec<PrimitiveCone>,
    offsets: Vec<usize>,
    total_dim: usize,
}

impl ConeProduct {
    pub fn new(cones: Vec<PrimitiveCone>) -> Result<Self, ConeError> {
        let mut offsets = Vec::with_capacity(cones.len());
        let mut total_dim = 0;
        for c in &cones {
            c.validate()?;
            offsets.push(total_dim);
            total_dim += c.dim();
        }
        Ok(ConeProduct {
            cones,
            offsets,
            total_dim,
        })
    }

    pub fn cones(&self) -> &[PrimitiveCone] {
        &self.cones
    }

    pub fn len(&self) -> usize {
        self.cones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn cone(&self, block: usize) -> &PrimitiveCone {
        &self.cones[block]
    }

    pub fn range(&self, block: usize) -> Range<usize> {
        let o = self.offsets[block];
        o..o + self.cones[block].dim()
    }

    /// Iterates `(block index, cone, row range)`.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, &PrimitiveCone, Range<usize>)> + '_ {
        self.cones
            .iter()
            .enumerate()
            .map(move |(k, c)| (k, c, self.range(k)))
    }

    /// Per-block violation of `y` in the product cone.
    pub fn violations(&self, y: &[f64]) -> Result<Vec<f64>, ConeError> {
        if y.len() != self.total_dim {
            return Err(ConeError::DimensionMismatch {
                expected: self.total_dim,
                got: y.len(),
            });
        }
        self.blocks().map(|(_, c, r)| c.violation(&y[r])).collect()
    }

    pub fn dual_violations(&self, z: &[f64]) -> Result<Vec<f64>, ConeError> {
        if z.len() != self.total_dim {
            return Err(ConeError::DimensionMismatch {
                expected: self.total_dim,
                got: z.len(),
            });
        }
        self.blocks().map(|(_, c, r)| c.dual_violation(&z[r])).collect()
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(y.len());
        for (_, c, r) in self.blocks() {
            out.extend(project(c, &y[r]));
        }
        out
    }

    pub fn project_dual(&self, z: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(z.len());
        for (_, c, r) in self.blocks() {
            out.extend(project_dual(c, &z[r]));
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn unit_scaled(d: usize, i: usize, v: f64) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = v;
    e
}

//! Problem representation, CBF input, and preprocessing.
//!
//! A problem is `min c'x + offset` subject to `b - A x` in `K` and `x_i`
//! integer for `i < int_count`. Integer columns always come first; the
//! permutation back to the input order is kept in `var_order`.

mod cbf;
mod preprocess;
mod result;
mod sparse;

pub use cbf::{parse_cbf, write_cbf};
pub use preprocess::{preprocess, INT_ROUND_TOL};
pub use result::{rel_gap, SolveResult, SolveStatus};
pub use sparse::SparseMatrix;

use crate::cones::{ConeError, ConeProduct};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported CBF keyword {0}")]
    Unsupported(String),
    #[error("unknown cone tag {0}")]
    UnknownCone(String),
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("integer variable index {0} out of range")]
    IntIndexOutOfRange(usize),
    #[error("integer variable {0} has no finite {1} bound and no default big-M was given")]
    UnboundedInteger(usize, &'static str),
    #[error("integer variable {var} has empty bounds [{lower}, {upper}]")]
    InfeasibleBounds { var: usize, lower: i64, upper: i64 },
    #[error(transparent)]
    Cone(#[from] ConeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiConicProblem {
    pub c: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub cones: ConeProduct,
    pub int_count: usize,
    pub int_lower: Vec<Option<i64>>,
    pub int_upper: Vec<Option<i64>>,
    /// Constant added to the objective.
    pub obj_offset: f64,
    /// The input asked to maximize; `c` and `obj_offset` are already negated.
    pub maximize: bool,
    /// Column `k` is input variable `var_order[k]`.
    pub var_order: Vec<usize>,
}

impl MiConicProblem {
    pub fn new(
        c: Vec<f64>,
        a: SparseMatrix,
        b: Vec<f64>,
        cones: ConeProduct,
        int_count: usize,
    ) -> Result<Self, ModelError> {
        let p = MiConicProblem {
            var_order: (0..c.len()).collect(),
            int_lower: vec![None; int_count],
            int_upper: vec![None; int_count],
            c,
            a,
            b,
            cones,
            int_count,
            obj_offset: 0.0,
            maximize: false,
        };
        p.validate()?;
        Ok(p)
    }

    /// Sets finite bounds on all integer columns.
    pub fn with_int_bounds(mut self, lower: &[i64], upper: &[i64]) -> Self {
        assert_eq!(lower.len(), self.int_count);
        assert_eq!(upper.len(), self.int_count);
        self.int_lower = lower.iter().map(|v| Some(*v)).collect();
        self.int_upper = upper.iter().map(|v| Some(*v)).collect();
        self
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.c.len();
        let m = self.b.len();
        if self.a.ncols() != n || self.a.nrows() != m {
            return Err(ModelError::Dimension(format!(
                "A is {}x{}, expected {m}x{n}",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if self.cones.total_dim() != m {
            return Err(ModelError::Dimension(format!(
                "cones cover {} rows, b has {m}",
                self.cones.total_dim()
            )));
        }
        if self.int_count > n {
            return Err(ModelError::IntIndexOutOfRange(self.int_count - 1));
        }
        if self.int_lower.len() != self.int_count || self.int_upper.len() != self.int_count {
            return Err(ModelError::Dimension("integer bound vectors".into()));
        }
        if self.var_order.len() != n {
            return Err(ModelError::Dimension("variable order".into()));
        }
        Ok(())
    }

    /// Finite integer bounds, or `None` if any is missing.
    pub fn int_bounds(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let l: Option<Vec<i64>> = self.int_lower.iter().copied().collect();
        let u: Option<Vec<i64>> = self.int_upper.iter().copied().collect();
        Some((l?, u?))
    }

    /// Objective value in minimization form, including the offset.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.obj_offset
    }

    /// Objective in the sense of the input (undoing the max negation).
    pub fn original_objective(&self, min_form: f64) -> f64 {
        if self.maximize {
            -min_form
        } else {
            min_form
        }
    }

    /// `b - A x`.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.mul_vec(x);
        self.b.iter().zip(ax).map(|(b, v)| b - v).collect()
    }

    /// Per-block cone violations of `b - A x`.
    pub fn cone_violations(&self, x: &[f64]) -> Vec<f64> {
        self.cones
            .violations(&self.slack(x))
            .expect("slack has the cone dimension")
    }

    /// Reorders a solution into the input's variable order.
    pub fn to_input_order(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (k, &o) in self.var_order.iter().enumerate() {
            out[o] = x[k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::PrimitiveCone;

    #[test]
    fn validation_catches_dimension_errors() {
        let k = ConeProduct::new(vec![PrimitiveCone::NonNeg(2)]).unwrap();
        let a = SparseMatrix::zeros(2, 3);
        assert!(MiConicProblem::new(vec![0.0; 3], a.clone(), vec![0.0; 2], k.clone(), 1).is_ok());
        assert!(MiConicProblem::new(vec![0.0; 2], a.clone(), vec![0.0; 2], k.clone(), 0).is_err());
        assert!(MiConicProblem::new(vec![0.0; 3], a, vec![0.0; 3], k, 0).is_err());
    }
}

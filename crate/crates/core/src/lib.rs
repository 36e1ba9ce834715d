//! Mixed-integer conic optimization by LP outer approximation driven by
//! conic certificates.

pub mod cones;
pub mod model;
pub mod lp;
pub mod subsolver;
pub mod oa;

//! Golden CBF files and malformed inputs.

use conicert::cones::PrimitiveCone::{self, *};
use conicert::model::{parse_cbf, MiConicProblem, ModelError};

pub fn load(name: &str) -> MiConicProblem {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap();
    parse_cbf(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// (file, N, M, I, cones)
pub fn golden() -> Vec<(&'static str, usize, usize, usize, Vec<PrimitiveCone>)> {
    vec![
        ("soc_example.cbf", 2, 7, 2, vec![NonNeg(4), SecondOrder(3)]),
        ("minimal.cbf", 1, 0, 0, vec![]),
        ("var_cones.cbf", 3, 3, 0, vec![NonNeg(2), Zero(1)]),
        ("exp_epigraph.cbf", 3, 3, 0, vec![Exponential]),
        ("rotated.cbf", 3, 5, 1, vec![RotatedSecondOrder(3), NonNeg(2)]),
        ("psd2.cbf", 2, 3, 0, vec![PsdSvec(2)]),
        ("mixed.cbf", 4, 12, 2, vec![NonNeg(1), NonNeg(2), SecondOrder(3), Exponential, PsdSvec(2)]),
        ("version1_comments.cbf", 2, 2, 0, vec![NonPos(2)]),
        ("max_offset.cbf", 1, 2, 1, vec![NonNeg(1), NonNeg(1)]),
        ("interleaved_ints.cbf", 4, 5, 2, vec![NonNeg(4), NonPos(1)]),
    ]
}

/// Malformed texts with a predicate on the expected error class.
pub fn malformed() -> Vec<(&'static str, fn(&ModelError) -> bool)> {
    vec![
        ("VER\n3\nPSDVAR\n1\n2\n", |e| matches!(e, ModelError::Unsupported(k) if k == "PSDVAR")),
        ("VER\n3\nVAR\n1 1\nF 1\nCHANGE\n", |e| matches!(e, ModelError::Unsupported(_))),
        ("VER\n3\nVAR\n2 1\nPOW 2\n", |e| matches!(e, ModelError::UnknownCone(t) if t == "POW")),
        ("VER\n3\nVAR\n3 1\nF 3\nCON\n2 1\nQ 3\n", |e| matches!(e, ModelError::Dimension(_))),
        ("VER\n3\nVAR\n2 1\nF 2\nINT\n1\n7\n", |e| matches!(e, ModelError::IntIndexOutOfRange(7))),
        ("VER\n3\nVAR\n4 1\nF 4\nCON\n4 1\nEXP 4\n", |e| matches!(e, ModelError::Parse { .. })),
        ("VER\n3\nVAR\n1 1\nF 1\nCON\n1 1\nL+ 1\nACOORD\n1\n0 3 1.0\n", |e| matches!(e, ModelError::Parse { .. })),
        ("VER\n3\nVAR\n1 1\nF 1\nOBJACOORD\n1\n0 abc\n", |e| matches!(e, ModelError::Parse { line: 8, .. })),
        ("VER\n3\nVAR\n1 1\nF 1\nOBJACOORD\n2\n0 1\n", |e| matches!(e, ModelError::Parse { .. })),
        ("VAR\n1 1\nF 1\n", |e| matches!(e, ModelError::Parse { line: 1, .. })),
        ("VER\n7\nVAR\n1 1\nF 1\n", |e| matches!(e, ModelError::Parse { .. })),
        ("VER\n3\n", |e| matches!(e, ModelError::Parse { .. })),
    ]
}

//! Conic Benchmark Format (text, versions 1 to 3), restricted to scalar
//! variables, scalar cones, and PSD constraints.
//!
//! CBF states constraints as `A x + b in K`; here they become `b - (-A) x`.
//! Variable cones become rows with `-I` in `A`. Row order is: variable-cone
//! rows, then `CON` rows, then `PSDCON` blocks.

use super::{MiConicProblem, ModelError, SparseMatrix};
use crate::cones::{ConeProduct, PrimitiveCone};
use std::f64::consts::SQRT_2;
use std::fmt::Write as _;

/// The one place that maps CBF cone tags to primitive cones. The `EXP` slot
/// order of CBF (`x1 >= x2 exp(x3 / x2)`) coincides with `(r, s, t)`.
fn cone_from_tag(tag: &str, dim: usize, line: usize) -> Result<PrimitiveCone, ModelError> {
    let cone = match tag {
        "F" => PrimitiveCone::Free(dim),
        "L+" => PrimitiveCone::NonNeg(dim),
        "L-" => PrimitiveCone::NonPos(dim),
        "L=" => PrimitiveCone::Zero(dim),
        "Q" => PrimitiveCone::SecondOrder(dim),
        "QR" => PrimitiveCone::RotatedSecondOrder(dim),
        "EXP" => {
            if dim != 3 {
                return Err(ModelError::Parse {
                    line,
                    msg: format!("EXP cone must have dimension 3, got {dim}"),
                });
            }
            PrimitiveCone::Exponential
        }
        other => return Err(ModelError::UnknownCone(other.to_string())),
    };
    cone.validate()?;
    Ok(cone)
}

fn tag_of(cone: &PrimitiveCone) -> Option<&'static str> {
    Some(match cone {
        PrimitiveCone::Free(_) => "F",
        PrimitiveCone::NonNeg(_) => "L+",
        PrimitiveCone::NonPos(_) => "L-",
        PrimitiveCone::Zero(_) => "L=",
        PrimitiveCone::SecondOrder(_) => "Q",
        PrimitiveCone::RotatedSecondOrder(_) => "QR",
        PrimitiveCone::Exponential => "EXP",
        PrimitiveCone::PsdSvec(_) => return None,
    })
}

struct Lines<'a> {
    items: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("");
                let toks: Vec<&str> = l.split_whitespace().collect();
                (!toks.is_empty()).then_some((i + 1, toks))
            })
            .collect();
        Lines { items, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let it = self.items.get(self.pos).cloned();
        self.pos += 1;
        it
    }

    fn expect(&mut self, what: &str, prev_line: usize) -> Result<(usize, Vec<&'a str>), ModelError> {
        self.next().ok_or_else(|| ModelError::Parse {
            line: prev_line,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn num<T: std::str::FromStr>(tok: Option<&&str>, line: usize, what: &str) -> Result<T, ModelError> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| ModelError::Parse {
        line,
        msg: format!("expected {what}"),
    })
}

fn check_len(toks: &[&str], n: usize, line: usize) -> Result<(), ModelError> {
    if toks.len() != n {
        return Err(ModelError::Parse {
            line,
            msg: format!("expected {n} fields, found {}", toks.len()),
        });
    }
    Ok(())
}

fn out_of_range(line: usize, what: &str, idx: usize) -> ModelError {
    ModelError::Parse {
        line,
        msg: format!("{what} index {idx} out of range"),
    }
}

fn read_cone_list(
    lines: &mut Lines,
    line: usize,
) -> Result<(usize, Vec<PrimitiveCone>), ModelError> {
    let (l, t) = lines.expect("size header", line)?;
    check_len(&t, 2, l)?;
    let total: usize = num(t.first(), l, "count")?;
    let k: usize = num(t.get(1), l, "cone count")?;
    let mut cones = Vec::with_capacity(k);
    let mut sum = 0;
    for _ in 0..k {
        let (l2, t2) = lines.expect("cone", l)?;
        check_len(&t2, 2, l2)?;
        let dim: usize = num(t2.get(1), l2, "cone dimension")?;
        cones.push(cone_from_tag(t2[0], dim, l2)?);
        sum += dim;
    }
    if sum != total {
        return Err(ModelError::Dimension(format!(
            "cones on line {l} cover {sum} entries, header says {total}"
        )));
    }
    Ok((total, cones))
}

fn read_count(lines: &mut Lines, line: usize) -> Result<(usize, usize), ModelError> {
    let (l, t) = lines.expect("count", line)?;
    check_len(&t, 1, l)?;
    Ok((l, num(t.first(), l, "count")?))
}

pub fn parse_cbf(text: &str) -> Result<MiConicProblem, ModelError> {
    let mut lines = Lines::new(text);
    let mut version: Option<u32> = None;
    let mut maximize = false;
    let mut var: Option<(usize, Vec<PrimitiveCone>)> = None;
    let mut con: Option<(usize, Vec<PrimitiveCone>)> = None;
    let mut ints: Vec<(usize, usize)> = Vec::new();
    let mut psd: Vec<usize> = Vec::new();
    let mut obja: Vec<(usize, usize, f64)> = Vec::new();
    let mut objb = 0.0;
    let mut acoord: Vec<(usize, usize, usize, f64)> = Vec::new();
    let mut bcoord: Vec<(usize, usize, f64)> = Vec::new();
    let mut hcoord: Vec<(usize, [usize; 4], f64)> = Vec::new();
    let mut dcoord: Vec<(usize, [usize; 3], f64)> = Vec::new();

    while let Some((line, toks)) = lines.next() {
        check_len(&toks, 1, line)?;
        let kw = toks[0];
        if version.is_none() && kw != "VER" {
            return Err(ModelError::Parse {
                line,
                msg: "file must start with VER".into(),
            });
        }
        match kw {
            "VER" => {
                let (l, v) = read_count(&mut lines, line)?;
                if !(1..=3).contains(&v) {
                    return Err(ModelError::Parse {
                        line: l,
                        msg: format!("unsupported CBF version {v}"),
                    });
                }
                version = Some(v as u32);
            }
            "OBJSENSE" => {
                let (l, t) = lines.expect("MIN or MAX", line)?;
                check_len(&t, 1, l)?;
                maximize = match t[0] {
                    "MIN" => false,
                    "MAX" => true,
                    other => {
                        return Err(ModelError::Parse {
                            line: l,
                            msg: format!("unknown objective sense {other}"),
                        })
                    }
                };
            }
            "VAR" => var = Some(read_cone_list(&mut lines, line)?),
            "CON" => con = Some(read_cone_list(&mut lines, line)?),
            "INT" => {
                let (l, k) = read_count(&mut lines, line)?;
                for _ in 0..k {
                    let (l2, t) = lines.expect("integer index", l)?;
                    check_len(&t, 1, l2)?;
                    ints.push((l2, num(t.first(), l2, "index")?));
                }
            }
            "PSDCON" => {
                let (l, k) = read_count(&mut lines, line)?;
                for _ in 0..k {
                    let (l2, t) = lines.expect("PSD side", l)?;
                    check_len(&t, 1, l2)?;
                    let side: usize = num(t.first(), l2, "side")?;
                    PrimitiveCone::PsdSvec(side).validate()?;
                    psd.push(side);
                }
            }
            "OBJACOORD" => {
                let (l, k) = read_count(&mut lines, line)?;
                for _ in 0..k {
                    let (l2, t) = lines.expect("entry", l)?;
                    check_len(&t, 2, l2)?;
                    obja.push((l2, num(t.first(), l2, "index")?, num(t.get(1), l2, "value")?));
                }
            }
            "OBJBCOORD" => {
                let (l, t) = lines.expect("constant", line)?;
                check_len(&t, 1, l)?;
                objb = num(t.first(), l, "value")?;
            }
            "ACOORD" => {
                let (l, k) = read_count(&mut lines, line)?;
                for _ in 0..k {
                    let (l2, t) = lines.expect("entry", l)?;
                    check_len(&t, 3, l2)?;
                    acoord.push((
                        l2,
                        num(t.first(), l2, "row")?,
                        num(t.get(1), l2, "column")?,
                        num(t.get(2), l2, "value")?,
                    ));
                }
            }
            "BCOORD" => {
                let (l, k) = read_count(&mut lines, line)?;
                for _ in 0..k {
                    let (l2, t) = lines.expect("entry", l)?;
                    check_len(&t, 2, l2)?;
                    bcoord.push((l2, num(t.first(), l2, "row")?, num(t.get(1), l2, "value")?));
                }
            }
            "HCOORD" => {
                let (l, k) = read_count(&mut lines, line)?;
                for _ in 0..k {
                    let (l2, t) = lines.expect("entry", l)?;
                    check_len(&t, 5, l2)?;
                    let mut idx = [0usize; 4];
                    for (q, slot) in idx.iter_mut().enumerate() {
                        *slot = num(t.get(q), l2, "index")?;
                    }
                    hcoord.push((l2, idx, num(t.get(4), l2, "value")?));
                }
            }
            "DCOORD" => {
                let (l, k) = read_count(&mut lines, line)?;
                for _ in 0..k {
                    let (l2, t) = lines.expect("entry", l)?;
                    check_len(&t, 4, l2)?;
                    let mut idx = [0usize; 3];
                    for (q, slot) in idx.iter_mut().enumerate() {
                        *slot = num(t.get(q), l2, "index")?;
                    }
                    dcoord.push((l2, idx, num(t.get(3), l2, "value")?));
                }
            }
            other => return Err(ModelError::Unsupported(other.to_string())),
        }
    }

    let (n, var_cones) = var.ok_or_else(|| ModelError::Parse {
        line: 0,
        msg: "missing VAR section".into(),
    })?;
    let (m_con, con_cones) = con.unwrap_or((0, Vec::new()));

    // row layout
    let mut cones = Vec::new();
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut row = 0;
    let mut col = 0;
    for c in &var_cones {
        let d = c.dim();
        if !matches!(c, PrimitiveCone::Free(_)) {
            for k in 0..d {
                trip.push((row + k, col + k, -1.0));
            }
            cones.push(*c);
            row += d;
        }
        col += d;
    }
    let con_off = row;
    cones.extend(con_cones.iter().copied());
    row += m_con;
    let mut psd_off = Vec::with_capacity(psd.len());
    for &side in &psd {
        psd_off.push(row);
        cones.push(PrimitiveCone::PsdSvec(side));
        row += side * (side + 1) / 2;
    }
    let m = row;
    let mut b = vec![0.0; m];

    for &(l, i, j, v) in &acoord {
        if i >= m_con {
            return Err(out_of_range(l, "constraint", i));
        }
        if j >= n {
            return Err(out_of_range(l, "variable", j));
        }
        trip.push((con_off + i, j, -v));
    }
    for &(l, i, v) in &bcoord {
        if i >= m_con {
            return Err(out_of_range(l, "constraint", i));
        }
        b[con_off + i] += v;
    }
    let psd_row = |l: usize, p: usize, r: usize, c: usize| -> Result<(usize, f64), ModelError> {
        let side = *psd.get(p).ok_or_else(|| out_of_range(l, "PSD constraint", p))?;
        if r >= side || c >= side {
            return Err(out_of_range(l, "PSD entry", r.max(c)));
        }
        let (hi, lo) = if r >= c { (r, c) } else { (c, r) };
        let idx = crate::cones::psd_svec_index(side, hi, lo);
        Ok((psd_off[p] + idx, if hi == lo { 1.0 } else { SQRT_2 }))
    };
    for &(l, [p, j, r, c], v) in &hcoord {
        if j >= n {
            return Err(out_of_range(l, "variable", j));
        }
        let (rw, f) = psd_row(l, p, r, c)?;
        trip.push((rw, j, -f * v));
    }
    for &(l, [p, r, c], v) in &dcoord {
        let (rw, f) = psd_row(l, p, r, c)?;
        b[rw] += f * v;
    }

    let mut c = vec![0.0; n];
    for &(l, j, v) in &obja {
        if j >= n {
            return Err(out_of_range(l, "variable", j));
        }
        c[j] += v;
    }

    let mut is_int = vec![false; n];
    for &(_, j) in &ints {
        if j >= n {
            return Err(ModelError::IntIndexOutOfRange(j));
        }
        is_int[j] = true;
    }
    let mut order: Vec<usize> = (0..n).filter(|&j| is_int[j]).collect();
    let int_count = order.len();
    order.extend((0..n).filter(|&j| !is_int[j]));

    let a = SparseMatrix::from_triplets(m, n, &trip).permute_cols(&order);
    let mut c: Vec<f64> = order.iter().map(|&j| c[j]).collect();
    let mut obj_offset = objb;
    if maximize {
        c.iter_mut().for_each(|v| *v = -*v);
        obj_offset = -obj_offset;
    }
    let mut p = MiConicProblem::new(c, a, b, ConeProduct::new(cones)?, int_count)?;
    p.var_order = order;
    p.obj_offset = obj_offset;
    p.maximize = maximize;
    Ok(p)
}

/// Shortest decimal `y` with `parse(y) * f == x` when one exists nearby.
fn unscaled(x: f64, f: f64) -> f64 {
    let y = x / f;
    let mut cand = y;
    for _ in 0..4 {
        if cand * f == x {
            return cand;
        }
        cand = cand.next_up();
    }
    cand = y;
    for _ in 0..4 {
        if cand * f == x {
            return cand;
        }
        cand = cand.next_down();
    }
    y
}

/// Writes the problem as CBF version 3. PSD blocks must follow all scalar
/// blocks. Variables are written in the input order.
pub fn write_cbf(p: &MiConicProblem) -> Result<String, ModelError> {
    p.validate()?;
    let n = p.num_vars();
    let mut scalar = Vec::new();
    let mut psd = Vec::new();
    let mut m_scalar = 0;
    for (_, cone, r) in p.cones.blocks() {
        match tag_of(cone) {
            Some(tag) => {
                if !psd.is_empty() {
                    return Err(ModelError::Dimension(
                        "PSD blocks must come after all scalar blocks".into(),
                    ));
                }
                scalar.push((tag, cone.dim()));
                m_scalar = r.end;
            }
            None => {
                let PrimitiveCone::PsdSvec(side) = *cone else { unreachable!() };
                psd.push((side, r.start));
            }
        }
    }
    let sign = if p.maximize { -1.0 } else { 1.0 };
    let orig = |k: usize| p.var_order[k];

    let mut s = String::new();
    let _ = writeln!(s, "VER\n3\n");
    let _ = writeln!(s, "OBJSENSE\n{}\n", if p.maximize { "MAX" } else { "MIN" });
    let _ = writeln!(s, "VAR\n{n} 1\nF {n}\n");
    if p.int_count > 0 {
        let mut ints: Vec<usize> = (0..p.int_count).map(orig).collect();
        ints.sort_unstable();
        let _ = writeln!(s, "INT\n{}", ints.len());
        for j in ints {
            let _ = writeln!(s, "{j}");
        }
        s.push('\n');
    }
    if !scalar.is_empty() {
        let _ = writeln!(s, "CON\n{m_scalar} {}", scalar.len());
        for (tag, d) in &scalar {
            let _ = writeln!(s, "{tag} {d}");
        }
        s.push('\n');
    }
    if !psd.is_empty() {
        let _ = writeln!(s, "PSDCON\n{}", psd.len());
        for (side, _) in &psd {
            let _ = writeln!(s, "{side}");
        }
        s.push('\n');
    }
    let obj: Vec<(usize, f64)> = (0..n)
        .filter(|&k| p.c[k] != 0.0)
        .map(|k| (orig(k), sign * p.c[k]))
        .collect();
    if !obj.is_empty() {
        let _ = writeln!(s, "OBJACOORD\n{}", obj.len());
        for (j, v) in obj {
            let _ = writeln!(s, "{j} {v:?}");
        }
        s.push('\n');
    }
    if p.obj_offset != 0.0 {
        let _ = writeln!(s, "OBJBCOORD\n{:?}\n", sign * p.obj_offset);
    }

    let trip = p.a.triplets();
    let a_scalar: Vec<_> = trip.iter().filter(|t| t.0 < m_scalar).collect();
    if !a_scalar.is_empty() {
        let _ = writeln!(s, "ACOORD\n{}", a_scalar.len());
        for (i, k, v) in a_scalar {
            let _ = writeln!(s, "{i} {} {:?}", orig(*k), -v);
        }
        s.push('\n');
    }
    let b_scalar: Vec<_> = (0..m_scalar).filter(|&i| p.b[i] != 0.0).collect();
    if !b_scalar.is_empty() {
        let _ = writeln!(s, "BCOORD\n{}", b_scalar.len());
        for i in b_scalar {
            let _ = writeln!(s, "{i} {:?}", p.b[i]);
        }
        s.push('\n');
    }

    // PSD rows back to lower-triangular matrix entries
    let locate = |row: usize| -> (usize, usize, usize, f64) {
        let q = psd.iter().rposition(|(_, off)| *off <= row).expect("PSD row");
        let (side, off) = psd[q];
        let mut idx = row - off;
        for c in 0..side {
            let len = side - c;
            if idx < len {
                let r = c + idx;
                return (q, r, c, if r == c { 1.0 } else { SQRT_2 });
            }
            idx -= len;
        }
        unreachable!()
    };
    let h: Vec<_> = trip.iter().filter(|t| t.0 >= m_scalar).collect();
    if !h.is_empty() {
        let _ = writeln!(s, "HCOORD\n{}", h.len());
        for (i, k, v) in h {
            let (q, r, c, f) = locate(*i);
            let _ = writeln!(s, "{q} {} {r} {c} {:?}", orig(*k), unscaled(-v, f));
        }
        s.push('\n');
    }
    let d: Vec<_> = (m_scalar..p.num_rows()).filter(|&i| p.b[i] != 0.0).collect();
    if !d.is_empty() {
        let _ = writeln!(s, "DCOORD\n{}", d.len());
        for i in d {
            let (q, r, c, f) = locate(i);
            let _ = writeln!(s, "{q} {r} {c} {:?}", unscaled(p.b[i], f));
        }
    }
    Ok(s)
}

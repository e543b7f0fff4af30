//! CSV exports. Floats use the shortest round-trip representation, so equal
//! inputs give byte-identical files.

use std::fmt::Write;

use crate::geodesics::GeodesicTrace;
use crate::projective::ProjectiveSplit;
use crate::tensor::CurvatureReport;

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

fn push_row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let row: Vec<String> = cells.into_iter().collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Columns `x1..xn, y1..yn, K, Ric, Ric_11..Ric_nn, flags`; `K` is empty
/// when no flag edge was supplied and `flags` is `;`-separated.
pub fn curvature_csv(n: usize, rows: &[CurvatureReport]) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = indexed("x", n).chain(indexed("y", n)).collect();
    header.push("K".into());
    header.push("Ric".into());
    for i in 1..=n {
        for j in 1..=n {
            header.push(format!("Ric_{i}{j}"));
        }
    }
    header.push("flags".into());
    push_row(&mut out, header);
    for r in rows {
        let mut cells: Vec<String> = r.site.x.iter().chain(&r.site.y).copied().map(num).collect();
        cells.push(r.flag.map(num).unwrap_or_default());
        cells.push(num(r.ric_scalar));
        // row-major, whereas nalgebra iterates column-major
        for i in 0..n {
            for j in 0..n {
                cells.push(num(r.ric_tensor[(i, j)]));
            }
        }
        cells.push(r.flags.join(";"));
        push_row(&mut out, cells);
    }
    out
}

/// Columns `s, x1..xn, y1..yn, F`.
pub fn trace_csv(trace: &GeodesicTrace) -> String {
    let n = trace.dim();
    let mut out = String::new();
    push_row(
        &mut out,
        std::iter::once("s".to_string()).chain(indexed("x", n)).chain(indexed("y", n)).chain(["F".to_string()]),
    );
    for k in 0..trace.len() {
        let cells = std::iter::once(trace.s_grid[k])
            .chain(trace.xs[k].iter().copied())
            .chain(trace.ys[k].iter().copied())
            .chain([trace.f_along[k]])
            .map(num);
        push_row(&mut out, cells);
    }
    out
}

/// Columns `segment, s, p, Q`, with `s` measured along the whole trace.
pub fn projective_csv(split: &ProjectiveSplit) -> String {
    let mut out = String::new();
    out.push_str("segment,s,p,Q\n");
    for (i, seg) in split.segments.iter().enumerate() {
        for k in 0..seg.p_along.len() {
            let _ = writeln!(
                out,
                "{i},{},{},{}",
                num(seg.s_offset + seg.trace.s_grid[k]),
                num(seg.p_along[k]),
                num(seg.q_along[k])
            );
        }
    }
    out
}

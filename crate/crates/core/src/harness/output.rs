use std::fmt::Write;

use crate::elliptic::GridFunction;
use crate::grid::DomainGrid;
use crate::semigroup::{SectorialReport, SemigroupTrace};

// Floats use Rust's shortest round-trip formatting, so output is
// byte-stable and parses back to the same bits.

fn push_nodes(out: &mut String, grid: &DomainGrid, u: &GridFunction, prefix: &str) {
    for (n, v) in grid.interior_nodes().iter().zip(u.values()) {
        writeln!(out, "{prefix}{},{},{},0", n.x, n.y, v).unwrap();
    }
    let zeros = vec![0.0; grid.n_boundary()];
    let b = u.boundary().unwrap_or(&zeros);
    for (n, v) in grid.boundary_nodes().iter().zip(b) {
        writeln!(out, "{prefix}{},{},{},1", n.x, n.y, v).unwrap();
    }
}

/// Columns `x,y,u,is_boundary`; boundary rows carry the attached boundary
/// values, or zero.
pub fn field_csv(grid: &DomainGrid, u: &GridFunction) -> String {
    let mut out = String::from("x,y,u,is_boundary\n");
    push_nodes(&mut out, grid, u, "");
    out
}

/// Columns `re_lambda,im_lambda,norm,method`; failed samples have an empty
/// norm and method `failed`.
pub fn sweep_csv(rep: &SectorialReport) -> String {
    let mut out = String::from("re_lambda,im_lambda,norm,method\n");
    for s in &rep.samples {
        match (s.norm, s.method) {
            (Some(n), Some(m)) => {
                writeln!(out, "{},{},{},{}", s.lambda.re, s.lambda.im, n, m.name())
            }
            _ => writeln!(out, "{},{},,failed", s.lambda.re, s.lambda.im),
        }
        .unwrap();
    }
    out
}

/// Columns `t,x,y,u,is_boundary`, one block per snapshot.
pub fn trace_csv(grid: &DomainGrid, trace: &SemigroupTrace) -> String {
    let mut out = String::from("t,x,y,u,is_boundary\n");
    for (t, u) in trace.times.iter().zip(&trace.snapshots) {
        push_nodes(&mut out, grid, u, &format!("{t},"));
    }
    out
}

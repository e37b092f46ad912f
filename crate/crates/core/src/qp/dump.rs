//! Plain-text dump of a problem and, optionally, its solution.
//!
//! Format: a `# qp-dump v1` line, then blocks introduced by a tag line
//! `<name> <rows> <cols>` followed by `rows` lines of space-separated values
//! (vectors are written as a single row). Scalars are `<name> <value>` lines.

use std::fmt::Write;

use crate::linalg::Matrix;
use crate::qp::{QpProblem, QpSolution};

fn matrix_block(out: &mut String, name: &str, m: &Matrix) {
    let _ = writeln!(out, "{name} {} {}", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

fn vector_block(out: &mut String, name: &str, v: &[f64]) {
    let _ = writeln!(out, "{name} 1 {}", v.len());
    let row: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
    let _ = writeln!(out, "{}", row.join(" "));
}

pub fn dump(problem: &QpProblem, solution: Option<&QpSolution>) -> String {
    let mut out = String::from("# qp-dump v1\n");
    if let Some(layout) = &problem.layout {
        let _ = writeln!(out, "window {} {} {}", layout.start, layout.center, layout.end);
        let _ = writeln!(out, "bandwidth {}", layout.bandwidth);
        let _ = writeln!(out, "clipped {}", layout.clipped);
        let _ = writeln!(out, "target {:e}", layout.target);
        vector_block(&mut out, "knots", &layout.knots);
    }
    let _ = writeln!(out, "ridge {:e}", problem.ridge);
    matrix_block(&mut out, "D", &problem.hessian);
    vector_block(&mut out, "d", &problem.linear);
    matrix_block(&mut out, "A_eq", &problem.eq);
    vector_block(&mut out, "b_eq", &problem.eq_rhs);
    matrix_block(&mut out, "A_ineq", &problem.ineq);
    vector_block(&mut out, "b_ineq", &problem.ineq_rhs);
    if let Some(sol) = solution {
        vector_block(&mut out, "w", &sol.weights);
        vector_block(&mut out, "multipliers", &sol.multipliers);
        let active: Vec<String> = sol.active_set.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "active {}", active.join(" "));
        let _ = writeln!(out, "objective {:e}", sol.objective);
        let _ = writeln!(out, "kkt_residual {:e}", sol.kkt_residual);
        let _ = writeln!(out, "iterations {}", sol.iterations);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::solve;

    #[test]
    fn dump_lists_every_block() {
        let problem = QpProblem::new(
            Matrix::identity(2),
            vec![1.0, 0.5],
            Matrix::from_rows(&[vec![1.0, 1.0]]),
            vec![1.0],
            Matrix::from_rows(&[vec![1.0, 0.0]]),
            vec![0.0],
        )
        .unwrap();
        let sol = solve(&problem).unwrap();
        let text = dump(&problem, Some(&sol));
        for tag in ["# qp-dump v1", "D 2 2", "d 1 2", "A_eq 1 2", "b_eq 1 1", "A_ineq 1 2", "w 1 2", "objective"] {
            assert!(text.contains(tag), "missing {tag}:\n{text}");
        }
        // Values parse back.
        let d_line = text.lines().skip_while(|l| !l.starts_with("d ")).nth(1).unwrap();
        let parsed: Vec<f64> = d_line.split(' ').map(|v| v.parse().unwrap()).collect();
        assert_eq!(parsed, vec![1.0, 0.5]);
    }
}

//! Dual active-set solver (Goldfarb–Idnani) applied after eliminating the
//! equality constraints through their null space.
//!
//! Starting from the unconstrained minimiser, the most violated inequality is
//! added at each major step. Moving its multiplier upward traces the primal
//! direction `z` and the change `r` in the active multipliers from
//!
//! ```text
//! [ H   -N_A ] [z]   [n_p]
//! [ N_Aᵀ  0  ] [r] = [ 0 ]
//! ```
//!
//! A full step makes the constraint active; a partial step drops an active
//! constraint whose multiplier would turn negative. Each KKT system is solved
//! from scratch, which is cheap at the sizes used here.

use crate::linalg::{dot, lu_solve, norm_inf, Matrix};
use crate::qp::{reduce_feasible_set, QpProblem};
use crate::samples::WeightKernel;
use crate::{Result, SpinError};

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub weights: Vec<f64>,
    /// `½ wᵀ D w − dᵀ w` at the solution, without the ridge.
    pub objective: f64,
    /// Indices of inequality rows binding at the solution.
    pub active_set: Vec<usize>,
    /// One multiplier per inequality row (zero when inactive).
    pub multipliers: Vec<f64>,
    /// Scaled stationarity / complementarity / sign residual.
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl QpSolution {
    /// The weights as a kernel over the problem's window.
    pub fn kernel(&self, problem: &QpProblem) -> Result<WeightKernel> {
        let layout = problem
            .layout
            .as_ref()
            .ok_or_else(|| SpinError::InvalidConfig("problem has no kernel layout".into()))?;
        WeightKernel::new(layout.center, layout.start, self.weights.clone(), layout.bandwidth)
    }
}

/// Solves `problem`. Errors on inconsistent equalities, infeasible
/// inequalities, or exhausting the iteration cap.
pub fn solve(problem: &QpProblem) -> Result<QpSolution> {
    let set = reduce_feasible_set(problem)?;
    let m = problem.dim();
    let k = set.dimension();
    let z = &set.basis;
    let w0 = &set.particular;

    // Regularised Hessian and reduced quantities.
    let mut hess = problem.hessian.clone();
    for i in 0..m {
        hess[(i, i)] += problem.ridge;
    }
    let hz = hess.mul(z);
    let reduced_hess = z.transpose().mul(&hz);
    let hw0 = hess.mul_vec(w0);
    let grad0: Vec<f64> = problem.linear.iter().zip(&hw0).map(|(d, h)| d - h).collect();
    let reduced_lin = z.tr_mul_vec(&grad0);
    let reduced_ineq = problem.ineq.mul(z);
    let aw0 = problem.ineq.mul_vec(w0);
    let reduced_rhs: Vec<f64> = problem.ineq_rhs.iter().zip(&aw0).map(|(b, a)| b - a).collect();

    let (y, multipliers, active_set, iterations) = if k == 0 {
        (Vec::new(), vec![0.0; problem.ineq.rows()], Vec::new(), 0)
    } else {
        dual_active_set(&reduced_hess, &reduced_lin, &reduced_ineq, &reduced_rhs)?
    };

    let weights = set.point(&y);
    if k == 0 {
        let violation = problem.max_violation(&weights);
        if violation > 1e-9 {
            return Err(SpinError::Infeasible(format!(
                "unique equality solution violates inequalities by {violation:e}"
            )));
        }
    }

    // KKT residual in the full space. With orthonormal Z, ‖Zᵀ g‖ is the
    // distance of g = Hw − d − A_inᵀ μ from the row space of A_eq.
    let hw = hess.mul_vec(&weights);
    let a_mu = problem.ineq.tr_mul_vec(&multipliers);
    let g: Vec<f64> = hw
        .iter()
        .zip(&problem.linear)
        .zip(&a_mu)
        .map(|((h, d), a)| h - d - a)
        .collect();
    let scale = 1.0 + norm_inf(&problem.linear) + hess.max_abs() * norm_inf(&weights);
    let stationarity = norm_inf(&z.tr_mul_vec(&g)) / scale;
    let slack = problem.ineq.mul_vec(&weights);
    let complementarity = multipliers
        .iter()
        .zip(slack.iter().zip(&problem.ineq_rhs))
        .fold(0.0f64, |acc, (mu, (s, b))| acc.max((mu * (s - b)).abs()))
        / scale;
    let dual_sign = multipliers.iter().fold(0.0f64, |acc, mu| acc.max(-mu));

    Ok(QpSolution {
        objective: problem.objective(&weights),
        weights,
        active_set,
        multipliers,
        kkt_residual: stationarity.max(complementarity).max(dual_sign),
        iterations,
    })
}

type DualResult = (Vec<f64>, Vec<f64>, Vec<usize>, usize);

/// Minimises `½ yᵀ H y − cᵀ y` subject to `G y ≥ h` for positive-definite `H`.
fn dual_active_set(h_mat: &Matrix, c: &[f64], g_mat: &Matrix, h_rhs: &[f64]) -> Result<DualResult> {
    let k = c.len();
    let rows = g_mat.rows();
    let max_iter = 50 * (k + rows) + 100;

    let mut y = lu_solve(h_mat, c)
        .ok_or_else(|| SpinError::Infeasible("reduced Hessian is singular".into()))?;
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let row_norm: Vec<f64> = (0..rows).map(|j| norm_inf(g_mat.row(j)).max(1e-300)).collect();
    let tol = |j: usize, y: &[f64]| 1e-12 * (1.0 + h_rhs[j].abs() + row_norm[j] * norm_inf(y));

    let mut iterations = 0;
    loop {
        // Most violated inequality, measured relative to its row norm.
        let candidate = (0..rows)
            .filter(|j| !active.contains(j))
            .map(|j| (j, dot(g_mat.row(j), &y) - h_rhs[j]))
            .filter(|&(j, s)| s < -tol(j, &y))
            .min_by(|a, b| (a.1 / row_norm[a.0]).total_cmp(&(b.1 / row_norm[b.0])));
        let Some((p, _)) = candidate else {
            break;
        };
        let n_p = g_mat.row(p).to_vec();
        let mut t_p = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(SpinError::NotConverged(max_iter));
            }
            let (z, r) = step_direction(h_mat, g_mat, &active, &n_p)?;
            let curvature = dot(&n_p, &z);
            let slack = dot(&n_p, &y) - h_rhs[p];
            let full = if curvature > 1e-14 * norm_inf(&n_p).powi(2) {
                -slack / curvature
            } else {
                f64::INFINITY
            };
            let mut partial = f64::INFINITY;
            let mut drop = None;
            for (idx, (&uj, &rj)) in u.iter().zip(&r).enumerate() {
                if rj < 0.0 {
                    let t = -uj / rj;
                    if t < partial {
                        partial = t;
                        drop = Some(idx);
                    }
                }
            }
            if full.is_infinite() && partial.is_infinite() {
                return Err(SpinError::Infeasible(format!("inequality row {p} cannot be satisfied")));
            }
            if full <= partial {
                for (yi, zi) in y.iter_mut().zip(&z) {
                    *yi += full * zi;
                }
                for (uj, rj) in u.iter_mut().zip(&r) {
                    *uj += full * rj;
                }
                t_p += full;
                active.push(p);
                u.push(t_p);
                break;
            }
            for (yi, zi) in y.iter_mut().zip(&z) {
                *yi += partial * zi;
            }
            for (uj, rj) in u.iter_mut().zip(&r) {
                *uj += partial * rj;
            }
            t_p += partial;
            let idx = drop.expect("partial step has a blocking constraint");
            active.remove(idx);
            u.remove(idx);
        }
    }

    let mut multipliers = vec![0.0; rows];
    for (&j, &uj) in active.iter().zip(&u) {
        multipliers[j] = uj.max(0.0);
    }
    let mut active_set = active;
    active_set.sort_unstable();
    Ok((y, multipliers, active_set, iterations))
}

/// Solves the bordered system for the primal step `z` and the multiplier
/// change `r` of the active rows.
fn step_direction(h_mat: &Matrix, g_mat: &Matrix, active: &[usize], n_p: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = n_p.len();
    let a = active.len();
    let mut kkt = Matrix::zeros(k + a, k + a);
    for i in 0..k {
        for j in 0..k {
            kkt[(i, j)] = h_mat[(i, j)];
        }
    }
    for (col, &row) in active.iter().enumerate() {
        for i in 0..k {
            let v = g_mat[(row, i)];
            kkt[(i, k + col)] = -v;
            kkt[(k + col, i)] = v;
        }
    }
    let mut rhs = n_p.to_vec();
    rhs.resize(k + a, 0.0);
    match lu_solve(&kkt, &rhs) {
        Some(sol) => Ok((sol[..k].to_vec(), sol[k..].to_vec())),
        None => {
            // Dependent active normals: n_p lies in their span, so z = 0 and
            // r solves N_A r = -n_p in the least-squares sense.
            let (z, r) = dependent_direction(g_mat, active, n_p);
            Ok((z, r))
        }
    }
}

fn dependent_direction(g_mat: &Matrix, active: &[usize], n_p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = n_p.len();
    let a = active.len();
    // Normal equations (N_Aᵀ N_A) r = -N_Aᵀ n_p, regularised slightly.
    let mut gram = Matrix::zeros(a, a);
    let mut rhs = vec![0.0; a];
    for (ci, &ri) in active.iter().enumerate() {
        for (cj, &rj) in active.iter().enumerate() {
            gram[(ci, cj)] = dot(g_mat.row(ri), g_mat.row(rj));
        }
        gram[(ci, ci)] += 1e-14;
        rhs[ci] = -dot(g_mat.row(ri), n_p);
    }
    let r = lu_solve(&gram, &rhs).unwrap_or_else(|| vec![0.0; a]);
    (vec![0.0; k], r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn empty(m: usize) -> Matrix {
        Matrix::zeros(0, m)
    }

    #[test]
    fn unconstrained_closed_form() {
        let problem = QpProblem::new(
            Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]),
            vec![2.0, 4.0],
            empty(2),
            vec![],
            empty(2),
            vec![],
        )
        .unwrap();
        let sol = solve(&problem).unwrap();
        assert!((sol.weights[0] - 1.0).abs() < 1e-12 && (sol.weights[1] - 2.0).abs() < 1e-12);
        assert!(sol.kkt_residual < 1e-12);
    }

    #[test]
    fn sum_to_one_gives_uniform() {
        let m = 5;
        let mut d = Matrix::identity(m);
        for i in 0..m {
            d[(i, i)] = 2.0;
        }
        let problem = QpProblem::new(d, vec![0.0; m], Matrix::from_rows(&[vec![1.0; m]]), vec![1.0], empty(m), vec![])
            .unwrap();
        let sol = solve(&problem).unwrap();
        for w in &sol.weights {
            assert!((w - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_constraint_becomes_active() {
        // min (y1 - 1)² + (y2 + 1)² s.t. y2 ≥ 0  →  (1, 0), multiplier 2.
        let d = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let problem = QpProblem::new(
            d,
            vec![2.0, -2.0],
            empty(2),
            vec![],
            Matrix::from_rows(&[vec![0.0, 1.0]]),
            vec![0.0],
        )
        .unwrap();
        let sol = solve(&problem).unwrap();
        assert!((sol.weights[0] - 1.0).abs() < 1e-12 && sol.weights[1].abs() < 1e-12);
        assert_eq!(sol.active_set, vec![0]);
        assert!((sol.multipliers[0] - 2.0).abs() < 1e-12);
        assert!(sol.kkt_residual < 1e-12);
    }

    #[test]
    fn constraint_dropped_on_partial_step() {
        // min ½‖y − (−1, −1)‖² with y1 + y2 ≥ −1 and y1 ≥ 0: optimum (0, −1).
        let problem = QpProblem::new(
            Matrix::identity(2),
            vec![-1.0, -1.0],
            empty(2),
            vec![],
            Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.0]]),
            vec![-1.0, 0.0],
        )
        .unwrap();
        let sol = solve(&problem).unwrap();
        assert!(sol.weights[0].abs() < 1e-12 && (sol.weights[1] + 1.0).abs() < 1e-12, "{:?}", sol.weights);
        assert!(sol.kkt_residual < 1e-12);
        assert!(problem.max_violation(&sol.weights) < 1e-12);
    }

    #[test]
    fn infeasible_inequalities_reported() {
        let problem = QpProblem::new(
            Matrix::identity(1),
            vec![0.0],
            empty(1),
            vec![],
            Matrix::from_rows(&[vec![1.0], vec![-1.0]]),
            vec![1.0, 0.0],
        )
        .unwrap();
        assert!(matches!(solve(&problem), Err(SpinError::Infeasible(_))));
    }

    #[test]
    fn inconsistent_equalities_reported() {
        let problem = QpProblem::new(
            Matrix::identity(2),
            vec![0.0, 0.0],
            Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]),
            vec![1.0, 2.0],
            empty(2),
            vec![],
        )
        .unwrap();
        assert!(matches!(solve(&problem), Err(SpinError::Infeasible(_))));
    }
}

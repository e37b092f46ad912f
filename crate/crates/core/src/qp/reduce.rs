use crate::linalg::{affine_solution, Matrix};
use crate::qp::QpProblem;
use crate::{Result, SpinError};

/// Relative pivot tolerance for the equality rows.
const RANK_TOL: f64 = 1e-10;

/// The affine set `{w : A_eq w = b_eq}` as `particular + basis · y`.
///
/// For triangle-kernel problems the equality rows leave a single free
/// direction (trading peak height against slope), so `y` is usually
/// one-dimensional.
#[derive(Clone, Debug)]
pub struct FeasibleSet {
    pub particular: Vec<f64>,
    /// Orthonormal columns spanning the null space of `A_eq`, `m × k`.
    pub basis: Matrix,
    pub rank: usize,
}

impl FeasibleSet {
    pub fn dimension(&self) -> usize {
        self.basis.cols()
    }

    /// `particular + basis · y`.
    pub fn point(&self, y: &[f64]) -> Vec<f64> {
        let mut w = self.particular.clone();
        for (wi, zy) in w.iter_mut().zip(self.basis.mul_vec(y)) {
            *wi += zy;
        }
        w
    }
}

/// Null-space parameterisation of the equality constraints.
///
/// Fails with [`SpinError::Infeasible`] when the equality rows are
/// inconsistent. Dependent rows (for example from exactly tied values that
/// escaped separation) reduce the rank and enlarge the free space instead of
/// failing.
pub fn reduce_feasible_set(problem: &QpProblem) -> Result<FeasibleSet> {
    let m = problem.dim();
    if problem.eq.rows() == 0 {
        return Ok(FeasibleSet {
            particular: vec![0.0; m],
            basis: Matrix::identity(m),
            rank: 0,
        });
    }
    let sol = affine_solution(&problem.eq, &problem.eq_rhs, RANK_TOL)
        .map_err(|residual| SpinError::Infeasible(format!("equality rows inconsistent (residual {residual:e})")))?;
    Ok(FeasibleSet {
        basis: Matrix::from_columns(m, &sol.basis),
        particular: sol.particular,
        rank: sol.rank,
    })
}

//! Smooth constrained optimization and the direct transcription of the
//! trajectory problem.
//!
//! [`solve`] minimizes a smooth objective over a box subject to equality and
//! `≤ 0` inequality constraints with an augmented Lagrangian method whose
//! subproblems are solved by projected Newton iterations.

mod export;
mod solver;
mod transcription;

pub use export::{trajectory_csv, write_trajectory_csv};
pub use solver::{solve, KktResiduals, Solution, SolveStatus, SolverOptions};
pub use transcription::{
    check_collisions, full_nlp_transcribe, transcribe, TimeMode, Trajectory, Transcription,
    TranscriptionProblem,
};

use crate::bounds::BoxBounds;

/// Sparse matrix entries `(row, col, value)`; duplicates are summed.
pub type Triplets = Vec<(usize, usize, f64)>;

/// A smooth nonlinear program
/// `min f(z)  s.t.  c(z) = 0,  h(z) ≤ 0,  lower ≤ z ≤ upper`.
pub trait NlpProblem: Sync {
    fn num_vars(&self) -> usize;
    fn bounds(&self) -> BoxBounds;
    fn initial_point(&self) -> Vec<f64>;

    fn objective(&self, z: &[f64]) -> f64;
    fn gradient(&self, z: &[f64], grad: &mut [f64]);

    fn num_eq(&self) -> usize {
        0
    }
    fn eq_constraints(&self, _z: &[f64], _c: &mut [f64]) {}
    fn eq_jacobian(&self, _z: &[f64], _jac: &mut Triplets) {}

    fn num_ineq(&self) -> usize {
        0
    }
    fn ineq_constraints(&self, _z: &[f64], _h: &mut [f64]) {}
    fn ineq_jacobian(&self, _z: &[f64], _jac: &mut Triplets) {}

    /// Lower triangle (`row ≥ col`) of
    /// `obj_factor·∇²f + Σ eq_mult_i ∇²c_i + Σ ineq_mult_i ∇²h_i`.
    ///
    /// Returns `false` when not provided; the solver then falls back to a
    /// finite-difference approximation for small problems.
    fn lagrangian_hessian(
        &self,
        _z: &[f64],
        _obj_factor: f64,
        _eq_mult: &[f64],
        _ineq_mult: &[f64],
        _hess: &mut Triplets,
    ) -> bool {
        false
    }
}

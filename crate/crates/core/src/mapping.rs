//! Coupling between the two spaces: inverse mapping of waypoints to states,
//! recursive lifting of a waypoint sequence, and projection of colliding
//! trajectory points back to timestamped low-dimensional points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoxBounds;
use crate::dp::WaypointSequence;
use crate::error::ContractError;
use crate::geometry::CollisionSpec;
use crate::models::ProblemModel;
use crate::nlp::{self, NlpProblem, SolveStatus, SolverOptions, Trajectory, Triplets};

/// Lower bound of the margin variables.
const SIGMA_FLOOR: f64 = -1e6;
/// Accepted mapping residual on success.
pub const MAP_TOL: f64 = 1e-6;
/// Accepted collision value on success.
pub const COLLISION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error("waypoint {w:?} cannot be lifted: {reason}")]
    InfeasibleWaypoint { w: Vec<f64>, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingConfig {
    pub varrho1: f64,
    pub varrho2: f64,
    pub kkt_tol: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            varrho1: 1.0,
            varrho2: 1.0,
            kkt_tol: 1e-9,
        }
    }
}

impl MappingConfig {
    pub fn validate(&self) -> Result<(), ContractError> {
        if self.varrho1 < 0.0 || self.varrho2 < 0.0 || (self.varrho1 == 0.0 && self.varrho2 == 0.0) {
            return Err(ContractError::new("mapping weights must be nonnegative and not both zero"));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(ContractError::new("mapping tolerance must be positive"));
        }
        Ok(())
    }
}

/// `min ϱ1‖x − x_prev‖² + ϱ2⟨1, σ⟩  s.t.  Ω(x) = w,  g(x) ≤ σ ≤ 0,  x ∈ X`
/// with variables `(x, σ)`.
struct InverseMap<'a> {
    model: &'a ProblemModel,
    spec: &'a CollisionSpec,
    w: &'a [f64],
    x_prev: &'a [f64],
    start: Vec<f64>,
    cfg: &'a MappingConfig,
    ng: usize,
}

impl NlpProblem for InverseMap<'_> {
    fn num_vars(&self) -> usize {
        self.model.n_x() + self.ng
    }
    fn bounds(&self) -> BoxBounds {
        self.model
            .state_bounds
            .product(&BoxBounds::uniform(self.ng, SIGMA_FLOOR, 0.0).unwrap())
    }
    fn initial_point(&self) -> Vec<f64> {
        let mut z = self.start.clone();
        self.model.state_bounds.clamp_in_place(&mut z);
        let g = self.model.collision_values(&z, self.spec);
        z.extend(g.iter().map(|v| v.min(0.0).max(SIGMA_FLOOR)));
        z
    }
    fn objective(&self, z: &[f64]) -> f64 {
        let nx = self.model.n_x();
        let d: f64 = z[..nx].iter().zip(self.x_prev).map(|(a, b)| (a - b).powi(2)).sum();
        self.cfg.varrho1 * d + self.cfg.varrho2 * z[nx..].iter().sum::<f64>()
    }
    fn gradient(&self, z: &[f64], g: &mut [f64]) {
        let nx = self.model.n_x();
        for k in 0..nx {
            g[k] = 2.0 * self.cfg.varrho1 * (z[k] - self.x_prev[k]);
        }
        for v in &mut g[nx..] {
            *v = self.cfg.varrho2;
        }
    }
    fn num_eq(&self) -> usize {
        self.model.n_w()
    }
    fn eq_constraints(&self, z: &[f64], c: &mut [f64]) {
        let p = self.model.forward_map(&z[..self.model.n_x()]);
        for k in 0..p.len() {
            c[k] = p[k] - self.w[k];
        }
    }
    fn eq_jacobian(&self, z: &[f64], jac: &mut Triplets) {
        let nx = self.model.n_x();
        let j = self.model.forward_map_jacobian(&z[..nx]);
        for (i, v) in j.iter().enumerate() {
            if *v != 0.0 {
                jac.push((i / nx, i % nx, *v));
            }
        }
    }
    fn num_ineq(&self) -> usize {
        self.ng
    }
    fn ineq_constraints(&self, z: &[f64], h: &mut [f64]) {
        let nx = self.model.n_x();
        let g = self.model.collision_values(&z[..nx], self.spec);
        for k in 0..self.ng {
            h[k] = g[k] - z[nx + k];
        }
    }
    fn ineq_jacobian(&self, z: &[f64], jac: &mut Triplets) {
        let nx = self.model.n_x();
        let (_, j) = self.model.collision_values_and_jacobian(&z[..nx], self.spec);
        for (i, v) in j.iter().enumerate() {
            if *v != 0.0 {
                jac.push((i / nx, i % nx, *v));
            }
        }
        for k in 0..self.ng {
            jac.push((k, nx + k, -1.0));
        }
    }
    fn lagrangian_hessian(&self, z: &[f64], of: f64, eq: &[f64], _ineq: &[f64], hess: &mut Triplets) -> bool {
        let nx = self.model.n_x();
        let h = self.model.forward_map_weighted_hessian(&z[..nx], eq);
        for a in 0..nx {
            for b in 0..=a {
                let mut v = h[a * nx + b];
                if a == b {
                    v += of * 2.0 * self.cfg.varrho1;
                }
                if v != 0.0 {
                    hess.push((a, b, v));
                }
            }
        }
        true
    }
}

/// Collision-free state `x` with `Ω(x) = w`, closest to `x_prev` in the
/// weighted sense of the margin-rewarding problem.
pub fn inverse_map(
    model: &ProblemModel,
    spec: &CollisionSpec,
    w: &[f64],
    x_prev: &[f64],
    cfg: &MappingConfig,
) -> Result<Vec<f64>, MappingError> {
    crate::error::check_dim("waypoint", w.len(), model.n_w())?;
    crate::error::check_dim("previous state", x_prev.len(), model.n_x())?;
    cfg.validate()?;
    let mut prob = InverseMap {
        model,
        spec,
        w,
        x_prev,
        start: x_prev.to_vec(),
        cfg,
        ng: model.num_collision_values(spec),
    };
    let first = solve_from(&prob, cfg, SolverOptions::default().mu0);
    if first.is_ok() {
        return first;
    }
    // A distant previous state can leave the solver in a poor basin; retry
    // from the model's analytic guess with a stiff penalty that keeps the
    // iterates near the constraint manifold.
    let guess = model.state_guess(w);
    if guess == prob.start {
        return first;
    }
    prob.start = guess;
    solve_from(&prob, cfg, 1e4).or(first)
}

fn solve_from(prob: &InverseMap<'_>, cfg: &MappingConfig, mu0: f64) -> Result<Vec<f64>, MappingError> {
    let (model, spec, w) = (prob.model, prob.spec, prob.w);
    let opts = SolverOptions {
        tol: cfg.kkt_tol,
        max_iter: 5000,
        mu0,
        ..SolverOptions::default()
    };
    let sol = nlp::solve(prob, &opts);
    let x = sol.z[..model.n_x()].to_vec();
    let fail = |reason: String| MappingError::InfeasibleWaypoint { w: w.to_vec(), reason };
    // Singular boundary points (full reach) stall in stationarity; the
    // residual checks below decide acceptance.
    if matches!(sol.status, SolveStatus::Infeasible | SolveStatus::NumericFailure) {
        return Err(fail(format!("solver status {:?}", sol.status)));
    }
    let p = model.forward_map(&x);
    let err = p.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if err > MAP_TOL {
        return Err(fail(format!("mapping residual {err:.3e}")));
    }
    let worst = model.collision_values(&x, spec).into_iter().fold(f64::NEG_INFINITY, f64::max);
    if worst > COLLISION_TOL {
        return Err(fail(format!("collision value {worst:.3e}")));
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedState {
    pub index: usize,
    pub tau: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedLift {
    pub index: usize,
    pub tau: f64,
    pub w: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LiftResult {
    pub lifted: Vec<LiftedState>,
    pub failed: Vec<FailedLift>,
}

impl LiftResult {
    /// States for every waypoint when no lift failed.
    pub fn states(&self) -> Option<Vec<Vec<f64>>> {
        self.failed.is_empty().then(|| self.lifted.iter().map(|l| l.x.clone()).collect())
    }
}

/// Lifts `w_1…w_M` one by one, each starting from the last successful lift;
/// `x_0` is the given initial state.
pub fn lift_sequence(
    model: &ProblemModel,
    spec: &CollisionSpec,
    seq: &WaypointSequence,
    x0: &[f64],
    cfg: &MappingConfig,
) -> LiftResult {
    let mut out = LiftResult {
        lifted: vec![LiftedState { index: 0, tau: seq.times[0], x: x0.to_vec() }],
        failed: Vec::new(),
    };
    let mut prev = x0.to_vec();
    for j in 1..seq.points.len() {
        match inverse_map(model, spec, &seq.points[j], &prev, cfg) {
            Ok(x) => {
                prev = x.clone();
                out.lifted.push(LiftedState { index: j, tau: seq.times[j], x });
            }
            Err(e) => out.failed.push(FailedLift {
                index: j,
                tau: seq.times[j],
                w: seq.points[j].clone(),
                reason: e.to_string(),
            }),
        }
    }
    out
}

/// `(τ_M·t_k/T, Ω(x_k))` for each listed trajectory index.
pub fn project_collisions(
    model: &ProblemModel,
    traj: &Trajectory,
    indices: &[usize],
    tau_m: f64,
) -> Result<Vec<(f64, Vec<f64>)>, ContractError> {
    if !(traj.final_time > 0.0) {
        return Err(ContractError::new("trajectory final time must be positive"));
    }
    indices
        .iter()
        .map(|&k| {
            let x = traj
                .states
                .get(k)
                .ok_or_else(|| ContractError::new(format!("trajectory index {k} out of range")))?;
            Ok((tau_m * traj.times[k] / traj.final_time, model.forward_map(x)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexPolygon;

    #[test]
    fn point_mass_keeps_velocity() {
        let m = ProblemModel::point_mass([0.0, 0.0], [9.0, 9.0]);
        let spec = CollisionSpec::new(vec![ConvexPolygon::rectangle(4.0, 4.0, 6.0, 6.0).unwrap()], 0.01).unwrap();
        let x = inverse_map(&m, &spec, &[2.0, 3.0], &[1.0, 1.0, 0.2, -0.1], &MappingConfig::default()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-8 && (x[1] - 3.0).abs() < 1e-8);
        assert!((x[2] - 0.2).abs() < 1e-8 && (x[3] + 0.1).abs() < 1e-8);
        let e = inverse_map(&m, &spec, &[5.0, 5.0], &[1.0, 1.0, 0.0, 0.0], &MappingConfig::default());
        assert!(matches!(e, Err(MappingError::InfeasibleWaypoint { .. })));
    }

    #[test]
    fn arm_reach_examples() {
        let m = ProblemModel::planar_arm([0.3, 0.2, 0.1], [1.0, 1.0]);
        let spec = CollisionSpec::empty();
        let x = inverse_map(&m, &spec, &[2.5, 0.0], &[0.3, 0.2, 0.1, 0.0, 0.0, 0.0], &MappingConfig::default()).unwrap();
        assert!(x[..3].iter().all(|v| v.abs() < 1e-3), "{x:?}");
        let e = inverse_map(&m, &spec, &[3.0, 0.0], &[0.3, 0.2, 0.1, 0.0, 0.0, 0.0], &MappingConfig::default());
        assert!(matches!(e, Err(MappingError::InfeasibleWaypoint { .. })));
    }

    #[test]
    fn projection_times() {
        let m = ProblemModel::point_mass([0.0, 0.0], [9.0, 9.0]);
        let traj = Trajectory {
            times: vec![0.0, 5.0, 10.0],
            states: vec![vec![0.0; 4], vec![1.0, 2.0, 0.0, 0.0], vec![3.0; 4]],
            controls: vec![vec![0.0; 2]; 2],
            final_time: 10.0,
            kkt_residual: 0.0,
            objective_value: 0.0,
        };
        let p = project_collisions(&m, &traj, &[0, 1, 2], 20.0).unwrap();
        assert_eq!(p.iter().map(|q| q.0).collect::<Vec<_>>(), vec![0.0, 10.0, 20.0]);
        assert_eq!(p[1].1, vec![1.0, 2.0]);
        let mut bad = traj.clone();
        bad.final_time = 0.0;
        assert!(project_collisions(&m, &bad, &[0], 20.0).is_err());
    }
}

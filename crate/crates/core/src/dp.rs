//! Approximate dynamic programming on the per-stage grids: backward value
//! recursion with multilinear interpolation and forward waypoint extraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ContractError;
use crate::grid::{AdaptiveGrid, ControlGrid};
use crate::models::ProblemModel;

/// Low-dimensional dynamics and terminal cost seen by the recursion.
pub trait LowDimProblem: Sync {
    /// `f̄(w, v)` written into `out`.
    fn lowdim_dynamics(&self, w: &[f64], v: &[f64], out: &mut [f64]);
    /// `M(w)`.
    fn mayer(&self, w: &[f64]) -> f64;
}

impl LowDimProblem for ProblemModel {
    fn lowdim_dynamics(&self, _w: &[f64], v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }

    fn mayer(&self, w: &[f64]) -> f64 {
        self.goal_distance_term(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ObjectiveVariant {
    /// Stage cost `ρ·h·P̃(w)`.
    #[default]
    StepWeighted,
    /// Stage cost `ρ·P̃(w)`.
    Unweighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Number of stages `M`.
    pub num_steps: usize,
    pub objective_variant: ObjectiveVariant,
    pub control_grid: ControlGrid,
    pub clamp_out_of_bounds: bool,
    /// Penalty factor `ρ`.
    pub rho: f64,
}

impl DpConfig {
    pub fn validate(&self) -> Result<(), ContractError> {
        if self.num_steps == 0 {
            return Err(ContractError::new("number of DP stages must be positive"));
        }
        if self.control_grid.points.is_empty() || self.control_grid.step_sizes.is_empty() {
            return Err(ContractError::new("control grid is empty"));
        }
        if !(self.rho > 0.0) {
            return Err(ContractError::new("penalty factor must be positive"));
        }
        Ok(())
    }

    fn stage_cost(&self, h: f64, penalty: f64) -> f64 {
        match self.objective_variant {
            ObjectiveVariant::StepWeighted => self.rho * h * penalty,
            ObjectiveVariant::Unweighted => self.rho * penalty,
        }
    }
}

/// Timestamped waypoints produced by the forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointSequence {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    pub steps: Vec<f64>,
    /// `ϑ(τ_0, w_0)`.
    pub value: f64,
}

impl WaypointSequence {
    pub fn num_stages(&self) -> usize {
        self.steps.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Best `(cost, control index, step index)` of the stage expression at `w`
/// with stage penalty `penalty`, using the value table of `next`.
fn minimize_stage<P: LowDimProblem + ?Sized>(
    problem: &P,
    cfg: &DpConfig,
    next: &AdaptiveGrid,
    w: &[f64],
    penalty: f64,
) -> (f64, usize, usize) {
    let n = w.len();
    let mut fbar = vec![0.0; n];
    let mut succ = vec![0.0; n];
    let bounds = next.bounds();
    let mut best = (f64::INFINITY, 0, 0);
    for (ci, v) in cfg.control_grid.points.iter().enumerate() {
        problem.lowdim_dynamics(w, v, &mut fbar);
        for (si, &h) in cfg.control_grid.step_sizes.iter().enumerate() {
            for k in 0..n {
                succ[k] = w[k] + h * fbar[k];
            }
            if cfg.clamp_out_of_bounds {
                bounds.clamp_in_place(&mut succ);
            } else if !bounds.contains(&succ) {
                continue;
            }
            let cost = cfg.stage_cost(h, penalty) + next.interp_value(&succ);
            if cost < best.0 {
                best = (cost, ci, si);
            }
        }
    }
    best
}

/// Fills the value tables and per-vertex policies of all grids.
///
/// Every vertex must carry an evaluated base penalty.
pub fn backward_sweep<P: LowDimProblem + ?Sized>(
    grids: &mut [AdaptiveGrid],
    problem: &P,
    cfg: &DpConfig,
) -> Result<(), ContractError> {
    cfg.validate()?;
    if grids.len() != cfg.num_steps + 1 {
        return Err(ContractError::new(format!(
            "expected {} grids, got {}",
            cfg.num_steps + 1,
            grids.len()
        )));
    }
    for g in grids.iter() {
        if let Some(v) = g.vertices().iter().find(|v| !v.stage_penalty().is_finite()) {
            return Err(ContractError::new(format!(
                "penalty not evaluated at {:?} on grid {}",
                v.coords, g.time_index
            )));
        }
    }
    let m = cfg.num_steps;
    for v in grids[m].vertices_mut() {
        v.value = problem.mayer(&v.coords);
        v.policy = None;
    }
    for l in (0..m).rev() {
        let (head, tail) = grids.split_at_mut(l + 1);
        let (cur, next) = (&mut head[l], &tail[0]);
        let results: Vec<(f64, usize, usize)> = cur
            .vertices()
            .par_iter()
            .map(|v| minimize_stage(problem, cfg, next, &v.coords, v.stage_penalty()))
            .collect();
        for (v, (cost, ci, si)) in cur.vertices_mut().iter_mut().zip(results) {
            v.value = cost;
            v.policy = Some((ci, si));
        }
    }
    Ok(())
}

/// Interpolated `P̃` on `grid` at an off-vertex state.
pub fn interp_stage_penalty(grid: &AdaptiveGrid, w: &[f64]) -> f64 {
    let mut s = 0.0;
    grid.interp_with(w, |v, g| {
        if g != 0.0 {
            s += g * grid.vertex(v).stage_penalty();
        }
    });
    s
}

/// Forward pass from `w0`, re-minimizing each stage at the actual state.
pub fn extract_waypoints<P: LowDimProblem + ?Sized>(
    grids: &[AdaptiveGrid],
    problem: &P,
    cfg: &DpConfig,
    w0: &[f64],
) -> Result<WaypointSequence, ContractError> {
    cfg.validate()?;
    if grids.len() != cfg.num_steps + 1 {
        return Err(ContractError::new("grid count does not match the number of stages"));
    }
    let n = w0.len();
    let mut w = w0.to_vec();
    let mut seq = WaypointSequence {
        times: vec![0.0],
        points: vec![w.clone()],
        controls: Vec::new(),
        steps: Vec::new(),
        value: 0.0,
    };
    let mut fbar = vec![0.0; n];
    for l in 0..cfg.num_steps {
        let penalty = interp_stage_penalty(&grids[l], &w);
        let (cost, ci, si) = minimize_stage(problem, cfg, &grids[l + 1], &w, penalty);
        if l == 0 {
            seq.value = cost;
        }
        let v = &cfg.control_grid.points[ci];
        let h = cfg.control_grid.step_sizes[si];
        problem.lowdim_dynamics(&w, v, &mut fbar);
        for k in 0..n {
            w[k] += h * fbar[k];
        }
        grids[l + 1].bounds().clamp_in_place(&mut w);
        let t = seq.times[l] + h;
        seq.times.push(t);
        seq.points.push(w.clone());
        seq.controls.push(v.clone());
        seq.steps.push(h);
    }
    Ok(seq)
}

/// `true` when the DP value signals an unusable path.
pub fn infeasibility_check(seq: &WaypointSequence, threshold: f64) -> bool {
    seq.value >= threshold
}

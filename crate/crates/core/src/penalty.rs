//! Penalty landscape `P(w)`, Mayer term and penalty marks on grid vertices.
//!
//! `P(w) = min_{x∈X} ‖Ω(x) − w‖ + ‖max(0, g(x))‖` is evaluated in two
//! stages: a feasibility solve for `Ω(x) = w, g(x) ≤ 0` and, if that fails, a
//! smoothed version of the penalized problem started from its end point.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoxBounds;
use crate::error::ContractError;
use crate::geometry::CollisionSpec;
use crate::grid::{AdaptiveGrid, VertexId};
use crate::models::ProblemModel;
use crate::nlp::{self, NlpProblem, SolveStatus, SolverOptions, Triplets};

/// Smoothing of the two norms in the penalized problem.
const SMOOTHING: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyField {
    pub rho: f64,
    pub mark_value: f64,
}

impl PenaltyField {
    /// Field with the default mark `10·ρ`.
    pub fn new(rho: f64) -> Self {
        Self {
            rho,
            mark_value: 10.0 * rho,
        }
    }

    pub fn validate(&self) -> Result<(), ContractError> {
        if !(self.rho > 0.0) || !(self.mark_value > 0.0) {
            return Err(ContractError::new("rho and mark_value must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("penalty evaluation at {w:?} did not converge (best value {best})")]
pub struct PenaltyError {
    pub w: Vec<f64>,
    pub best: f64,
}

/// Exact objective of the penalized problem at `x`.
pub fn penalty_objective(model: &ProblemModel, spec: &CollisionSpec, w: &[f64], x: &[f64]) -> f64 {
    let p = model.forward_map(x);
    let map: f64 = p.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let col: f64 = model
        .collision_values(x, spec)
        .iter()
        .map(|g| g.max(0.0).powi(2))
        .sum::<f64>()
        .sqrt();
    map + col
}

/// `Ω(x) = w`, `g(x) ≤ 0` over `X` with zero objective.
struct Feasibility<'a> {
    model: &'a ProblemModel,
    spec: &'a CollisionSpec,
    w: &'a [f64],
    start: Vec<f64>,
}

impl NlpProblem for Feasibility<'_> {
    fn num_vars(&self) -> usize {
        self.model.n_x()
    }
    fn bounds(&self) -> BoxBounds {
        self.model.state_bounds.clone()
    }
    fn initial_point(&self) -> Vec<f64> {
        self.start.clone()
    }
    fn objective(&self, _z: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _z: &[f64], g: &mut [f64]) {
        g.fill(0.0);
    }
    fn num_eq(&self) -> usize {
        self.model.n_w()
    }
    fn eq_constraints(&self, z: &[f64], c: &mut [f64]) {
        for (k, p) in self.model.forward_map(z).into_iter().enumerate() {
            c[k] = p - self.w[k];
        }
    }
    fn eq_jacobian(&self, z: &[f64], jac: &mut Triplets) {
        push_dense(jac, &self.model.forward_map_jacobian(z), self.model.n_x(), 0, 0);
    }
    fn num_ineq(&self) -> usize {
        self.model.num_collision_values(self.spec)
    }
    fn ineq_constraints(&self, z: &[f64], h: &mut [f64]) {
        h.copy_from_slice(&self.model.collision_values(z, self.spec));
    }
    fn ineq_jacobian(&self, z: &[f64], jac: &mut Triplets) {
        let (_, j) = self.model.collision_values_and_jacobian(z, self.spec);
        push_dense(jac, &j, self.model.n_x(), 0, 0);
    }
    fn lagrangian_hessian(&self, z: &[f64], _of: f64, eq: &[f64], _in: &[f64], hess: &mut Triplets) -> bool {
        push_lower(hess, &self.model.forward_map_weighted_hessian(z, eq), self.model.n_x(), 0);
        true
    }
}

/// Smoothed `‖Ω(x) − w‖ + ‖g⁺(x)‖` over `X`.
struct Penalized<'a> {
    model: &'a ProblemModel,
    spec: &'a CollisionSpec,
    w: &'a [f64],
    start: Vec<f64>,
}

impl Penalized<'_> {
    fn parts(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let p = self.model.forward_map(z);
        let r: Vec<f64> = p.iter().zip(self.w).map(|(a, b)| a - b).collect();
        let jp = self.model.forward_map_jacobian(z);
        let (g, jg) = self.model.collision_values_and_jacobian(z, self.spec);
        let gp: Vec<f64> = g.iter().map(|v| v.max(0.0)).collect();
        (r, jp, gp, jg)
    }
}

fn smooth_norm(v: &[f64]) -> f64 {
    (v.iter().map(|a| a * a).sum::<f64>() + SMOOTHING * SMOOTHING).sqrt() - SMOOTHING
}

impl NlpProblem for Penalized<'_> {
    fn num_vars(&self) -> usize {
        self.model.n_x()
    }
    fn bounds(&self) -> BoxBounds {
        self.model.state_bounds.clone()
    }
    fn initial_point(&self) -> Vec<f64> {
        self.start.clone()
    }
    fn objective(&self, z: &[f64]) -> f64 {
        let (r, _, gp, _) = self.parts(z);
        smooth_norm(&r) + smooth_norm(&gp)
    }
    fn gradient(&self, z: &[f64], grad: &mut [f64]) {
        let n = self.model.n_x();
        let (r, jp, gp, jg) = self.parts(z);
        let nr = smooth_norm(&r) + SMOOTHING;
        let ng = smooth_norm(&gp) + SMOOTHING;
        grad.fill(0.0);
        for (k, rk) in r.iter().enumerate() {
            for c in 0..n {
                grad[c] += rk / nr * jp[k * n + c];
            }
        }
        for (k, gk) in gp.iter().enumerate() {
            if *gk > 0.0 {
                for c in 0..n {
                    grad[c] += gk / ng * jg[k * n + c];
                }
            }
        }
    }
}

fn push_dense(out: &mut Triplets, m: &[f64], ncols: usize, row0: usize, col0: usize) {
    for (i, v) in m.iter().enumerate() {
        if *v != 0.0 {
            out.push((row0 + i / ncols, col0 + i % ncols, *v));
        }
    }
}

fn push_lower(out: &mut Triplets, m: &[f64], n: usize, off: usize) {
    for a in 0..n {
        for b in 0..=a {
            let v = m[a * n + b];
            if v != 0.0 {
                out.push((off + a, off + b, v));
            }
        }
    }
}

fn inner_options() -> SolverOptions {
    SolverOptions {
        tol: 1e-9,
        max_iter: 500,
        ..SolverOptions::default()
    }
}

/// `P(w)` for one low-dimensional point.
pub fn evaluate_penalty(
    model: &ProblemModel,
    spec: &CollisionSpec,
    w: &[f64],
) -> Result<f64, PenaltyError> {
    let start = model.state_guess(w);
    let feas = Feasibility { model, spec, w, start };
    let sol = nlp::solve(&feas, &inner_options());
    if sol.status == SolveStatus::Optimal {
        return Ok(penalty_objective(model, spec, w, &sol.z));
    }
    // Keep the better of the starting guess and the feasibility end point.
    let from_guess = penalty_objective(model, spec, w, &feas.start);
    let from_feas = penalty_objective(model, spec, w, &sol.z);
    let start = if from_feas <= from_guess { sol.z } else { feas.start.clone() };
    let pen = Penalized { model, spec, w, start };
    let sol = nlp::solve(&pen, &inner_options());
    let value = penalty_objective(model, spec, w, &sol.z).min(from_guess.min(from_feas));
    match sol.status {
        SolveStatus::Optimal => Ok(value),
        _ => Err(PenaltyError { w: w.to_vec(), best: value }),
    }
}

/// `α·max(‖w − w_ref‖ − r, 0)`.
pub fn evaluate_mayer(model: &ProblemModel, w: &[f64]) -> f64 {
    model.goal_distance_term(w)
}

/// `P(w) + marks(w)` for a grid vertex with an evaluated base penalty.
pub fn total_stage_penalty(grid: &AdaptiveGrid, vertex: VertexId) -> f64 {
    grid.vertex(vertex).stage_penalty()
}

/// Adds `amount` to a vertex's penalty mark.
pub fn mark_vertex(grid: &mut AdaptiveGrid, vertex: VertexId, amount: f64) -> Result<(), ContractError> {
    if vertex >= grid.num_vertices() {
        return Err(ContractError::new(format!("unknown vertex {vertex}")));
    }
    grid.vertex_mut(vertex).mark += amount;
    Ok(())
}

/// Penalty values keyed by exact coordinates. `P` depends only on geometry,
/// so entries stay valid across grids and iterations.
#[derive(Debug, Default, Clone)]
pub struct PenaltyCache {
    values: HashMap<Vec<u64>, f64>,
    failures: usize,
}

impl PenaltyCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of evaluations that returned a best value without converging.
    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn get(&self, w: &[f64]) -> Option<f64> {
        self.values.get(&key(w)).copied()
    }

    /// Evaluates every vertex without a base penalty, in parallel over
    /// distinct coordinates. Returns the number of new evaluations.
    pub fn fill(&mut self, grids: &mut [AdaptiveGrid], model: &ProblemModel, spec: &CollisionSpec) -> usize {
        let mut todo: Vec<Vec<f64>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for g in grids.iter() {
            for v in g.vertices() {
                if v.base_penalty.is_nan() {
                    let k = key(&v.coords);
                    if !self.values.contains_key(&k) && seen.insert(k) {
                        todo.push(v.coords.clone());
                    }
                }
            }
        }
        let results: Vec<(Vec<f64>, Result<f64, PenaltyError>)> = todo
            .into_par_iter()
            .map(|w| {
                let r = evaluate_penalty(model, spec, &w);
                (w, r)
            })
            .collect();
        let added = results.len();
        for (w, r) in results {
            let v = match r {
                Ok(v) => v,
                Err(e) => {
                    self.failures += 1;
                    e.best
                }
            };
            self.values.insert(key(&w), v);
        }
        for g in grids.iter_mut() {
            for v in g.vertices_mut() {
                if v.base_penalty.is_nan() {
                    v.base_penalty = self.values[&key(&v.coords)];
                }
            }
        }
        added
    }
}

fn key(w: &[f64]) -> Vec<u64> {
    w.iter().map(|x| (x + 0.0).to_bits()).collect()
}

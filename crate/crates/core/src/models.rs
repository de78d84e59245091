//! Planar instantiations of the planning problem: a point mass and a
//! three-link arm, each with a two-dimensional planning space.
//!
//! Both models use double-integrator dynamics, so the dynamics Jacobians are
//! constant and the transcription's second derivatives only involve the
//! final-time coupling and the forward map.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bounds::BoxBounds;
use crate::error::{check_dim, ContractError};
use crate::geometry::{self, CollisionSpec, ConvexPolygon, Point2};

/// Link lengths of the three-link arm, in meters.
pub const ARM_LINKS: [f64; 3] = [1.0, 1.0, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    PointMass2D,
    PlanarArm3,
}

impl ModelKind {
    /// (n_x, n_u, n_w, n_v)
    pub fn dims(self) -> (usize, usize, usize, usize) {
        match self {
            ModelKind::PointMass2D => (4, 2, 2, 2),
            ModelKind::PlanarArm3 => (6, 3, 2, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemModel {
    pub kind: ModelKind,
    pub state_bounds: BoxBounds,
    pub control_bounds: BoxBounds,
    pub lowdim_state_bounds: BoxBounds,
    pub lowdim_control_bounds: BoxBounds,
    /// `[T_min, T_max]` in seconds.
    pub time_bounds: [f64; 2],
    pub initial_state: Vec<f64>,
    pub goal_center: Vec<f64>,
    pub goal_radius: f64,
    pub goal_scale: f64,
    pub body_radius: f64,
}

impl ProblemModel {
    /// Point mass on a 10 m workspace with the default boxes.
    pub fn point_mass(initial_position: [f64; 2], goal_center: [f64; 2]) -> Self {
        Self {
            kind: ModelKind::PointMass2D,
            state_bounds: BoxBounds::new(
                vec![-1.0, -1.0, -0.5, -0.5],
                vec![11.0, 11.0, 0.5, 0.5],
            )
            .unwrap(),
            control_bounds: BoxBounds::uniform(2, -1.2, 1.2).unwrap(),
            lowdim_state_bounds: BoxBounds::uniform(2, -1.0, 11.0).unwrap(),
            lowdim_control_bounds: BoxBounds::uniform(2, -0.5, 0.5).unwrap(),
            time_bounds: [0.0, 100.0],
            initial_state: vec![initial_position[0], initial_position[1], 0.0, 0.0],
            goal_center: goal_center.to_vec(),
            goal_radius: 1.0,
            goal_scale: 1e3,
            body_radius: 0.1,
        }
    }

    /// Three-link arm anchored at the origin with the default joint boxes.
    pub fn planar_arm(initial_angles: [f64; 3], goal_center: [f64; 2]) -> Self {
        let rate = PI / 10.0;
        Self {
            kind: ModelKind::PlanarArm3,
            state_bounds: BoxBounds::new(
                vec![-PI, -PI, -PI, -rate, -rate, -rate],
                vec![PI, PI, PI, rate, rate, rate],
            )
            .unwrap(),
            control_bounds: BoxBounds::uniform(3, -1.0, 1.0).unwrap(),
            lowdim_state_bounds: BoxBounds::uniform(2, -2.5, 2.5).unwrap(),
            lowdim_control_bounds: BoxBounds::uniform(2, -0.2, 0.2).unwrap(),
            time_bounds: [0.0, 100.0],
            initial_state: vec![
                initial_angles[0],
                initial_angles[1],
                initial_angles[2],
                0.0,
                0.0,
                0.0,
            ],
            goal_center: goal_center.to_vec(),
            goal_radius: 0.25,
            goal_scale: 1e3,
            body_radius: 0.05,
        }
    }

    pub fn n_x(&self) -> usize {
        self.kind.dims().0
    }
    pub fn n_u(&self) -> usize {
        self.kind.dims().1
    }
    pub fn n_w(&self) -> usize {
        self.kind.dims().2
    }
    pub fn n_v(&self) -> usize {
        self.kind.dims().3
    }

    /// Number of configuration coordinates (the rest of the state are their rates).
    pub fn n_q(&self) -> usize {
        self.n_x() / 2
    }

    pub fn validate(&self) -> Result<(), ContractError> {
        let (nx, nu, nw, nv) = self.kind.dims();
        check_dim("state bounds", self.state_bounds.dim(), nx)?;
        check_dim("control bounds", self.control_bounds.dim(), nu)?;
        check_dim("low-dimensional state bounds", self.lowdim_state_bounds.dim(), nw)?;
        check_dim("low-dimensional control bounds", self.lowdim_control_bounds.dim(), nv)?;
        check_dim("initial state", self.initial_state.len(), nx)?;
        check_dim("goal center", self.goal_center.len(), nw)?;
        for b in [
            &self.state_bounds,
            &self.control_bounds,
            &self.lowdim_state_bounds,
            &self.lowdim_control_bounds,
        ] {
            b.validate()?;
        }
        let [t0, t1] = self.time_bounds;
        if !(t0 >= 0.0 && t0 < t1) {
            return Err(ContractError::new(format!(
                "time bounds must satisfy 0 <= T_min < T_max, got [{t0}, {t1}]"
            )));
        }
        if !(self.goal_radius > 0.0) {
            return Err(ContractError::new("goal radius must be positive"));
        }
        if !(self.goal_scale > 0.0) {
            return Err(ContractError::new("goal scale must be positive"));
        }
        if !(self.body_radius > 0.0) {
            return Err(ContractError::new("body radius must be positive"));
        }
        if !self.state_bounds.contains(&self.initial_state) {
            return Err(ContractError::new(format!(
                "initial state {:?} is outside the state bounds",
                self.initial_state
            )));
        }
        Ok(())
    }

    /// `ẋ = f(x, u)`.
    pub fn dynamics(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, ContractError> {
        check_dim("state", x.len(), self.n_x())?;
        check_dim("control", u.len(), self.n_u())?;
        let mut out = vec![0.0; self.n_x()];
        self.dynamics_into(x, u, &mut out);
        Ok(out)
    }

    /// Unchecked `f(x, u)` written into `out`. Both models are double integrators.
    #[inline]
    pub fn dynamics_into(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        let nq = self.n_q();
        out[..nq].copy_from_slice(&x[nq..2 * nq]);
        out[nq..2 * nq].copy_from_slice(&u[..nq]);
    }

    /// Constant Jacobians `(∂f/∂x, ∂f/∂u)` as sparse entries `(row, col, value)`.
    pub fn dynamics_jacobian_entries(&self) -> (Vec<(usize, usize, f64)>, Vec<(usize, usize, f64)>) {
        let nq = self.n_q();
        let dx = (0..nq).map(|k| (k, nq + k, 1.0)).collect();
        let du = (0..nq).map(|k| (nq + k, k, 1.0)).collect();
        (dx, du)
    }

    /// `f̄(w, v) = v`.
    pub fn lowdim_dynamics(&self, w: &[f64], v: &[f64]) -> Result<Vec<f64>, ContractError> {
        check_dim("low-dimensional state", w.len(), self.n_w())?;
        check_dim("low-dimensional control", v.len(), self.n_v())?;
        Ok(v.to_vec())
    }

    /// Joint positions `j_0 = 0, j_1, j_2, j_3 = TCP` and cumulative angles.
    fn arm_chain(x: &[f64]) -> ([Point2; 4], [f64; 3]) {
        let mut joints = [[0.0; 2]; 4];
        let mut phi = [0.0; 3];
        let mut acc = 0.0;
        for k in 0..3 {
            acc += x[k];
            phi[k] = acc;
            joints[k + 1] = [
                joints[k][0] + ARM_LINKS[k] * acc.cos(),
                joints[k][1] + ARM_LINKS[k] * acc.sin(),
            ];
        }
        (joints, phi)
    }

    /// `Ω(x)`: position for the point mass, tool-center point for the arm.
    pub fn forward_map(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            ModelKind::PointMass2D => vec![x[0], x[1]],
            ModelKind::PlanarArm3 => {
                let (j, _) = Self::arm_chain(x);
                j[3].to_vec()
            }
        }
    }

    /// Dense `n_w × n_x` Jacobian of `Ω`, row-major.
    pub fn forward_map_jacobian(&self, x: &[f64]) -> Vec<f64> {
        let nx = self.n_x();
        let mut jac = vec![0.0; 2 * nx];
        match self.kind {
            ModelKind::PointMass2D => {
                jac[0] = 1.0;
                jac[nx + 1] = 1.0;
            }
            ModelKind::PlanarArm3 => {
                let (_, phi) = Self::arm_chain(x);
                // ∂TCP/∂θ_m = Σ_{k≥m} L_k (−sin φ_k, cos φ_k)
                for m in 0..3 {
                    let (mut sx, mut sy) = (0.0, 0.0);
                    for k in m..3 {
                        sx -= ARM_LINKS[k] * phi[k].sin();
                        sy += ARM_LINKS[k] * phi[k].cos();
                    }
                    jac[m] = sx;
                    jac[nx + m] = sy;
                }
            }
        }
        jac
    }

    /// Dense `n_x × n_x` matrix `Σ_k weights_k ∇²Ω_k`, row-major.
    pub fn forward_map_weighted_hessian(&self, x: &[f64], weights: &[f64]) -> Vec<f64> {
        let nx = self.n_x();
        let mut h = vec![0.0; nx * nx];
        if self.kind == ModelKind::PlanarArm3 {
            let (_, phi) = Self::arm_chain(x);
            // ∂²TCP/∂θ_a∂θ_b = Σ_{k≥max(a,b)} L_k (−cos φ_k, −sin φ_k)
            for a in 0..3 {
                for b in 0..3 {
                    let (mut hx, mut hy) = (0.0, 0.0);
                    for k in a.max(b)..3 {
                        hx -= ARM_LINKS[k] * phi[k].cos();
                        hy -= ARM_LINKS[k] * phi[k].sin();
                    }
                    h[a * nx + b] = weights[0] * hx + weights[1] * hy;
                }
            }
        }
        h
    }

    /// Geometry occupied by the system in configuration `x`.
    pub fn body_polygons(&self, x: &[f64]) -> Vec<ConvexPolygon> {
        let r = self.body_radius;
        match self.kind {
            ModelKind::PointMass2D => vec![ConvexPolygon::rectangle(
                x[0] - r,
                x[1] - r,
                x[0] + r,
                x[1] + r,
            )
            .expect("positive body radius gives a valid square")],
            ModelKind::PlanarArm3 => {
                let (j, _) = Self::arm_chain(x);
                (0..3)
                    .map(|k| {
                        geometry::link_polygon(j[k], j[k + 1], r)
                            .expect("links have positive length")
                    })
                    .collect()
            }
        }
    }

    /// Number of collision constraints `g(x)` for a given obstacle set.
    pub fn num_collision_values(&self, spec: &CollisionSpec) -> usize {
        let bodies = match self.kind {
            ModelKind::PointMass2D => 1,
            ModelKind::PlanarArm3 => 3,
        };
        bodies * spec.obstacles.len()
    }

    /// `g(x)` as in [`geometry::collision_values`].
    pub fn collision_values(&self, x: &[f64], spec: &CollisionSpec) -> Vec<f64> {
        geometry::collision_values(&self.body_polygons(x), spec)
    }

    /// `g(x)` together with its dense `n_g × n_x` Jacobian (row-major).
    ///
    /// The Jacobian is exact wherever the contact feature is unique and a
    /// one-sided derivative at feature switches.
    pub fn collision_values_and_jacobian(
        &self,
        x: &[f64],
        spec: &CollisionSpec,
    ) -> (Vec<f64>, Vec<f64>) {
        let nx = self.n_x();
        let bodies = self.body_polygons(x);
        let ng = bodies.len() * spec.obstacles.len();
        let mut values = Vec::with_capacity(ng);
        let mut jac = vec![0.0; ng * nx];
        let joints = match self.kind {
            ModelKind::PlanarArm3 => Some(Self::arm_chain(x).0),
            ModelKind::PointMass2D => None,
        };
        let mut row = 0;
        for (i, body) in bodies.iter().enumerate() {
            for obs in &spec.obstacles {
                let c = geometry::contact(body, obs);
                values.push(spec.safety_margin - c.distance);
                let r = &mut jac[row * nx..(row + 1) * nx];
                match joints {
                    None => {
                        r[0] = -c.normal[0];
                        r[1] = -c.normal[1];
                    }
                    Some(j) => {
                        // Link i moves rigidly with joints 0..=i; ∂p/∂θ_m = perp(p − j_m).
                        for (m, jm) in j.iter().enumerate().take(i + 1) {
                            let dx = c.point[0] - jm[0];
                            let dy = c.point[1] - jm[1];
                            r[m] = -(c.normal[0] * -dy + c.normal[1] * dx);
                        }
                    }
                }
                row += 1;
            }
        }
        (values, jac)
    }

    /// Rates part of the state (velocities / joint rates).
    pub fn velocity_part<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.n_q()..]
    }

    /// `b(x)`: scaled distance outside the goal ball, then the rates.
    pub fn final_condition(&self, x: &[f64]) -> Vec<f64> {
        let w = self.forward_map(x);
        let mut out = Vec::with_capacity(1 + self.n_q());
        out.push(self.goal_distance_term(&w));
        out.extend_from_slice(self.velocity_part(x));
        out
    }

    /// `α · max(‖w − w_ref‖ − r, 0)`.
    pub fn goal_distance_term(&self, w: &[f64]) -> f64 {
        let d = w
            .iter()
            .zip(&self.goal_center)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        self.goal_scale * (d - self.goal_radius).max(0.0)
    }

    /// Deterministic state with `Ω(x) ≈ w` and zero rates, used to seed inner
    /// solves that have no previous state.
    pub fn state_guess(&self, w: &[f64]) -> Vec<f64> {
        match self.kind {
            ModelKind::PointMass2D => {
                let mut x = vec![w[0], w[1], 0.0, 0.0];
                self.state_bounds.clamp_in_place(&mut x);
                x
            }
            ModelKind::PlanarArm3 => {
                // Two-link solution on the shoulder link and the combined
                // outer links, elbow-up branch. The outer links stay straight
                // unless the target is too close to the base for that.
                let l1 = ARM_LINKS[0];
                let (la, lb) = (ARM_LINKS[1], ARM_LINKS[2]);
                let r = w[0].hypot(w[1]).clamp(1e-6, l1 + la + lb);
                let wrist = if r >= (l1 - la - lb).abs() {
                    0.0
                } else {
                    // Outer links folded to the shoulder length.
                    ((l1 * l1 - la * la - lb * lb) / (2.0 * la * lb)).clamp(-1.0, 1.0).acos()
                };
                let l2 = (la * la + lb * lb + 2.0 * la * lb * wrist.cos()).sqrt();
                let offset = (lb * wrist.sin()).atan2(la + lb * wrist.cos());
                let base = w[1].atan2(w[0]);
                let cos_elbow = ((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
                let elbow = cos_elbow.acos();
                // Keep the guess away from the straight-arm singularity.
                let elbow = if elbow.abs() < 1e-3 { 1e-3 } else { elbow };
                let shoulder = base - (l2 * elbow.sin()).atan2(l1 + l2 * elbow.cos());
                let shoulder = shoulder.sin().atan2(shoulder.cos());
                let elbow = elbow - offset;
                let mut x = vec![shoulder, elbow, wrist, 0.0, 0.0, 0.0];
                self.state_bounds.clamp_in_place(&mut x);
                x
            }
        }
    }
}

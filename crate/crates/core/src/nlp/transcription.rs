use serde::{Deserialize, Serialize};

use super::{NlpProblem, Solution, Triplets};
use crate::bounds::BoxBounds;
use crate::dp::WaypointSequence;
use crate::error::{check_dim, ContractError};
use crate::geometry::CollisionSpec;
use crate::models::ProblemModel;

/// Nodes closer than this in normalized time are merged.
const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeMode {
    Free,
    Fixed(f64),
}

/// Time grid and variable layout of a transcription.
///
/// Variables are stored stage by stage as `[x_0, u_0, x_1, u_1, …, x_N, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcription {
    /// Normalized node times `s_0 = 0 < … < s_N = 1`.
    pub s: Vec<f64>,
    /// `(waypoint index j, node index i(j))` for every waypoint.
    pub waypoint_rows: Vec<(usize, usize)>,
    pub n_x: usize,
    pub n_u: usize,
}

impl Transcription {
    /// Union of the equidistant grid `i/n` and `marks`, with near-duplicates
    /// snapped onto the mark. Returns the grid and the node index per mark.
    pub fn normalized_grid(n: usize, marks: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let mut s: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        for &m in marks {
            let m = m.clamp(0.0, 1.0);
            match s.iter().position(|&v| (v - m).abs() <= MERGE_TOL) {
                Some(i) => s[i] = m,
                None => {
                    let at = s.partition_point(|&v| v < m);
                    s.insert(at, m);
                }
            }
        }
        let idx = marks
            .iter()
            .map(|&m| {
                let m = m.clamp(0.0, 1.0);
                s.iter().position(|&v| v == m).expect("mark was inserted")
            })
            .collect();
        (s, idx)
    }

    pub fn intervals(&self) -> usize {
        self.s.len() - 1
    }

    pub fn stride(&self) -> usize {
        self.n_x + self.n_u
    }

    pub fn x_offset(&self, i: usize) -> usize {
        i * self.stride()
    }

    pub fn u_offset(&self, i: usize) -> usize {
        i * self.stride() + self.n_x
    }

    pub fn t_index(&self) -> usize {
        self.intervals() * self.stride() + self.n_x
    }

    pub fn num_vars(&self) -> usize {
        self.t_index() + 1
    }

    pub fn state<'a>(&self, z: &'a [f64], i: usize) -> &'a [f64] {
        &z[self.x_offset(i)..self.x_offset(i) + self.n_x]
    }

    pub fn control<'a>(&self, z: &'a [f64], i: usize) -> &'a [f64] {
        &z[self.u_offset(i)..self.u_offset(i) + self.n_u]
    }
}

/// Discretized trajectory on the transcription nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Piecewise-constant controls, one per interval.
    pub controls: Vec<Vec<f64>>,
    pub final_time: f64,
    pub kkt_residual: f64,
    pub objective_value: f64,
}

/// Trapezoidal transcription of the trajectory problem.
///
/// Besides the waypoint problem, the same structure hosts the monolithic
/// baseline (collision inequalities, goal-ball and zero final velocity) and
/// fixed two-point problems used for verification.
#[derive(Debug, Clone)]
pub struct TranscriptionProblem {
    pub model: ProblemModel,
    pub layout: Transcription,
    pub x0: Vec<f64>,
    /// `(node, w)`: rows `Ω(x_node) − w = 0`.
    pub point_rows: Vec<(usize, Vec<f64>)>,
    /// Rows `x_N − x_f = 0`.
    pub terminal_state: Option<Vec<f64>>,
    /// Rows `rates(x_N) = 0`.
    pub zero_final_rates: bool,
    /// Row `‖Ω(x_N) − w_ref‖² − r² ≤ 0`.
    pub goal_ball: bool,
    /// Rows `g(x_i) ≤ 0` on every node.
    pub collisions: Option<CollisionSpec>,
    /// Minimum-effort objective; zero objective when false.
    pub effort: bool,
    pub time_bounds: [f64; 2],
    pub guess: Vec<f64>,
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn time_bounds(model: &ProblemModel, mode: TimeMode) -> [f64; 2] {
    match mode {
        TimeMode::Free => model.time_bounds,
        TimeMode::Fixed(t) => [t, t],
    }
}

impl TranscriptionProblem {
    /// Empty problem on `s` with initial-state rows and a given guess.
    fn base(model: &ProblemModel, s: Vec<f64>, mode: TimeMode, states: &[Vec<f64>], t0: f64) -> Self {
        let layout = Transcription {
            s,
            waypoint_rows: Vec::new(),
            n_x: model.n_x(),
            n_u: model.n_u(),
        };
        let tb = time_bounds(model, mode);
        let mut guess = vec![0.0; layout.num_vars()];
        for (i, x) in states.iter().enumerate() {
            let o = layout.x_offset(i);
            let mut x = x.clone();
            model.state_bounds.clamp_in_place(&mut x);
            guess[o..o + layout.n_x].copy_from_slice(&x);
        }
        for i in 0..layout.intervals() {
            let o = layout.u_offset(i);
            let u = model.control_bounds.clamped(&vec![0.0; layout.n_u]);
            guess[o..o + layout.n_u].copy_from_slice(&u);
        }
        guess[layout.t_index()] = t0.clamp(tb[0], tb[1]);
        Self {
            model: model.clone(),
            layout,
            x0: model.initial_state.clone(),
            point_rows: Vec::new(),
            terminal_state: None,
            zero_final_rates: false,
            goal_ball: false,
            collisions: None,
            effort: true,
            time_bounds: tb,
            guess,
        }
    }

    /// Two-point minimum-effort problem `x(0) = x0`, `x(T) = xf` on `n`
    /// equidistant intervals.
    pub fn two_point(model: &ProblemModel, xf: &[f64], n: usize, mode: TimeMode) -> Result<Self, ContractError> {
        check_dim("final state", xf.len(), model.n_x())?;
        if n == 0 {
            return Err(ContractError::new("at least one interval is required"));
        }
        let s: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let states: Vec<Vec<f64>> = s.iter().map(|&t| lerp(&model.initial_state, xf, t)).collect();
        let t0 = match mode {
            TimeMode::Fixed(t) => t,
            TimeMode::Free => 0.5 * (model.time_bounds[0] + model.time_bounds[1]),
        };
        let mut p = Self::base(model, s, mode, &states, t0);
        p.terminal_state = Some(xf.to_vec());
        Ok(p)
    }

    pub fn num_eq_rows(&self) -> usize {
        let nx = self.layout.n_x;
        nx + self.layout.intervals() * nx
            + self.point_rows.len() * self.model.n_w()
            + self.terminal_state.as_ref().map_or(0, |_| nx)
            + if self.zero_final_rates { self.model.n_q() } else { 0 }
    }

    fn num_collision_rows(&self) -> usize {
        self.collisions
            .as_ref()
            .map_or(0, |c| self.model.num_collision_values(c))
    }

    pub fn num_ineq_rows(&self) -> usize {
        self.layout.s.len() * self.num_collision_rows() + usize::from(self.goal_ball)
    }

    fn ds(&self, i: usize) -> f64 {
        self.layout.s[i + 1] - self.layout.s[i]
    }

    /// Trajectory represented by a solver point.
    pub fn trajectory(&self, sol: &Solution) -> Trajectory {
        let l = &self.layout;
        let z = &sol.z;
        let t = z[l.t_index()];
        Trajectory {
            times: l.s.iter().map(|s| s * t).collect(),
            states: (0..l.s.len()).map(|i| l.state(z, i).to_vec()).collect(),
            controls: (0..l.intervals()).map(|i| l.control(z, i).to_vec()).collect(),
            final_time: t,
            kkt_residual: sol.kkt.max(),
            objective_value: sol.objective,
        }
    }

    /// Largest `|Ω(x_i(j)) − w_j|` over the waypoint rows.
    pub fn max_waypoint_residual(&self, states: &[Vec<f64>]) -> f64 {
        self.point_rows
            .iter()
            .flat_map(|(i, w)| {
                let p = self.model.forward_map(&states[*i]);
                p.into_iter().zip(w).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Per-waypoint residual norms `‖Ω(x_i(j)) − w_j‖`.
    pub fn waypoint_residuals(&self, states: &[Vec<f64>]) -> Vec<f64> {
        self.point_rows
            .iter()
            .map(|(i, w)| {
                let p = self.model.forward_map(&states[*i]);
                p.iter().zip(w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .collect()
    }
}

/// Builds the waypoint-constrained trajectory problem on at least `n`
/// intervals. `lifted` are the states at the waypoints used for the initial
/// guess.
pub fn transcribe(
    model: &ProblemModel,
    seq: &WaypointSequence,
    lifted: &[Vec<f64>],
    n: usize,
    mode: TimeMode,
) -> Result<TranscriptionProblem, ContractError> {
    let m = seq.points.len().saturating_sub(1);
    if m == 0 || seq.times.len() != m + 1 {
        return Err(ContractError::new("waypoint sequence needs at least two timestamped points"));
    }
    if n < m {
        return Err(ContractError::new(format!("need N >= M, got N={n}, M={m}")));
    }
    check_dim("lifted states", lifted.len(), m + 1)?;
    let tau_m = seq.times[m];
    if !(tau_m > 0.0) {
        return Err(ContractError::new("waypoint horizon must be positive"));
    }
    let marks: Vec<f64> = seq.times.iter().map(|t| t / tau_m).collect();
    let (s, idx) = Transcription::normalized_grid(n, &marks);

    // Linear interpolation of lifted states between consecutive waypoints.
    let states: Vec<Vec<f64>> = s
        .iter()
        .map(|&si| {
            let j = (1..=m).find(|&j| si <= marks[j]).unwrap_or(m);
            let span = marks[j] - marks[j - 1];
            let t = if span > 0.0 { ((si - marks[j - 1]) / span).clamp(0.0, 1.0) } else { 1.0 };
            lerp(&lifted[j - 1], &lifted[j], t)
        })
        .collect();
    let mut p = TranscriptionProblem::base(model, s, mode, &states, seq.times[m]);
    // w_0 = Ω(x_0) holds through the fixed initial state.
    p.layout.waypoint_rows = idx.iter().copied().enumerate().collect();
    p.point_rows = idx
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, &i)| (i, seq.points[j].clone()))
        .collect();
    Ok(p)
}

/// Monolithic problem: collision inequalities on every node, goal ball and
/// zero final rates, zero objective and a straight-line guess towards the
/// goal center.
pub fn full_nlp_transcribe(
    model: &ProblemModel,
    spec: &CollisionSpec,
    n: usize,
) -> Result<TranscriptionProblem, ContractError> {
    if n == 0 {
        return Err(ContractError::new("at least one interval is required"));
    }
    let s: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let goal = model.state_guess(&model.goal_center);
    let states: Vec<Vec<f64>> = s.iter().map(|&t| lerp(&model.initial_state, &goal, t)).collect();
    let t0 = 0.5 * (model.time_bounds[0] + model.time_bounds[1]);
    let mut p = TranscriptionProblem::base(model, s, TimeMode::Free, &states, t0);
    p.collisions = Some(spec.clone());
    p.goal_ball = true;
    p.zero_final_rates = true;
    p.effort = false;
    Ok(p)
}

impl NlpProblem for TranscriptionProblem {
    fn num_vars(&self) -> usize {
        self.layout.num_vars()
    }

    fn bounds(&self) -> BoxBounds {
        let l = &self.layout;
        let mut lower = Vec::with_capacity(l.num_vars());
        let mut upper = Vec::with_capacity(l.num_vars());
        for i in 0..l.s.len() {
            lower.extend_from_slice(&self.model.state_bounds.lower);
            upper.extend_from_slice(&self.model.state_bounds.upper);
            if i < l.intervals() {
                lower.extend_from_slice(&self.model.control_bounds.lower);
                upper.extend_from_slice(&self.model.control_bounds.upper);
            }
        }
        lower.push(self.time_bounds[0]);
        upper.push(self.time_bounds[1]);
        BoxBounds { lower, upper }
    }

    fn initial_point(&self) -> Vec<f64> {
        self.guess.clone()
    }

    fn objective(&self, z: &[f64]) -> f64 {
        if !self.effort {
            return 0.0;
        }
        let l = &self.layout;
        let t = z[l.t_index()];
        (0..l.intervals())
            .map(|i| t * self.ds(i) * l.control(z, i).iter().map(|u| u * u).sum::<f64>())
            .sum()
    }

    fn gradient(&self, z: &[f64], g: &mut [f64]) {
        g.fill(0.0);
        if !self.effort {
            return;
        }
        let l = &self.layout;
        let ti = l.t_index();
        let t = z[ti];
        for i in 0..l.intervals() {
            let ds = self.ds(i);
            let o = l.u_offset(i);
            let mut sq = 0.0;
            for k in 0..l.n_u {
                let u = z[o + k];
                g[o + k] = 2.0 * t * ds * u;
                sq += u * u;
            }
            g[ti] += ds * sq;
        }
    }

    fn num_eq(&self) -> usize {
        self.num_eq_rows()
    }

    fn eq_constraints(&self, z: &[f64], c: &mut [f64]) {
        let l = &self.layout;
        let nx = l.n_x;
        let t = z[l.t_index()];
        let mut row = 0;
        for k in 0..nx {
            c[k] = z[k] - self.x0[k];
        }
        row += nx;
        let mut fa = vec![0.0; nx];
        let mut fb = vec![0.0; nx];
        for i in 0..l.intervals() {
            let (xa, u, xb) = (l.state(z, i), l.control(z, i), l.state(z, i + 1));
            self.model.dynamics_into(xa, u, &mut fa);
            self.model.dynamics_into(xb, u, &mut fb);
            let h = 0.5 * t * self.ds(i);
            for k in 0..nx {
                c[row + k] = xb[k] - xa[k] - h * (fa[k] + fb[k]);
            }
            row += nx;
        }
        for (i, w) in &self.point_rows {
            let p = self.model.forward_map(l.state(z, *i));
            for k in 0..w.len() {
                c[row + k] = p[k] - w[k];
            }
            row += w.len();
        }
        let xn = l.state(z, l.intervals());
        if let Some(xf) = &self.terminal_state {
            for k in 0..nx {
                c[row + k] = xn[k] - xf[k];
            }
            row += nx;
        }
        if self.zero_final_rates {
            for (k, v) in self.model.velocity_part(xn).iter().enumerate() {
                c[row + k] = *v;
            }
        }
    }

    fn eq_jacobian(&self, z: &[f64], jac: &mut Triplets) {
        let l = &self.layout;
        let nx = l.n_x;
        let ti = l.t_index();
        let t = z[ti];
        let (ax, bu) = self.model.dynamics_jacobian_entries();
        for k in 0..nx {
            jac.push((k, k, 1.0));
        }
        let mut row = nx;
        let mut fa = vec![0.0; nx];
        let mut fb = vec![0.0; nx];
        for i in 0..l.intervals() {
            let (oa, ou, ob) = (l.x_offset(i), l.u_offset(i), l.x_offset(i + 1));
            let ds = self.ds(i);
            let h = 0.5 * t * ds;
            for k in 0..nx {
                jac.push((row + k, oa + k, -1.0));
                jac.push((row + k, ob + k, 1.0));
            }
            for &(r, c, v) in &ax {
                jac.push((row + r, oa + c, -h * v));
                jac.push((row + r, ob + c, -h * v));
            }
            for &(r, c, v) in &bu {
                jac.push((row + r, ou + c, -2.0 * h * v));
            }
            let (xa, u, xb) = (l.state(z, i), l.control(z, i), l.state(z, i + 1));
            self.model.dynamics_into(xa, u, &mut fa);
            self.model.dynamics_into(xb, u, &mut fb);
            for k in 0..nx {
                jac.push((row + k, ti, -0.5 * ds * (fa[k] + fb[k])));
            }
            row += nx;
        }
        for (i, w) in &self.point_rows {
            let o = l.x_offset(*i);
            let j = self.model.forward_map_jacobian(l.state(z, *i));
            for k in 0..w.len() {
                for c in 0..nx {
                    let v = j[k * nx + c];
                    if v != 0.0 {
                        jac.push((row + k, o + c, v));
                    }
                }
            }
            row += w.len();
        }
        let on = l.x_offset(l.intervals());
        if self.terminal_state.is_some() {
            for k in 0..nx {
                jac.push((row + k, on + k, 1.0));
            }
            row += nx;
        }
        if self.zero_final_rates {
            let nq = self.model.n_q();
            for k in 0..nq {
                jac.push((row + k, on + nq + k, 1.0));
            }
        }
    }

    fn num_ineq(&self) -> usize {
        self.num_ineq_rows()
    }

    fn ineq_constraints(&self, z: &[f64], h: &mut [f64]) {
        let l = &self.layout;
        let mut row = 0;
        if let Some(spec) = &self.collisions {
            for i in 0..l.s.len() {
                let g = self.model.collision_values(l.state(z, i), spec);
                h[row..row + g.len()].copy_from_slice(&g);
                row += g.len();
            }
        }
        if self.goal_ball {
            let p = self.model.forward_map(l.state(z, l.intervals()));
            let d2: f64 = p.iter().zip(&self.model.goal_center).map(|(a, b)| (a - b).powi(2)).sum();
            h[row] = d2 - self.model.goal_radius.powi(2);
        }
    }

    fn ineq_jacobian(&self, z: &[f64], jac: &mut Triplets) {
        let l = &self.layout;
        let nx = l.n_x;
        let mut row = 0;
        if let Some(spec) = &self.collisions {
            for i in 0..l.s.len() {
                let o = l.x_offset(i);
                let (g, j) = self.model.collision_values_and_jacobian(l.state(z, i), spec);
                for r in 0..g.len() {
                    for c in 0..nx {
                        let v = j[r * nx + c];
                        if v != 0.0 {
                            jac.push((row + r, o + c, v));
                        }
                    }
                }
                row += g.len();
            }
        }
        if self.goal_ball {
            let xn = l.state(z, l.intervals());
            let o = l.x_offset(l.intervals());
            let p = self.model.forward_map(xn);
            let j = self.model.forward_map_jacobian(xn);
            for c in 0..nx {
                let v: f64 = (0..p.len())
                    .map(|k| 2.0 * (p[k] - self.model.goal_center[k]) * j[k * nx + c])
                    .sum();
                if v != 0.0 {
                    jac.push((row, o + c, v));
                }
            }
        }
    }

    fn lagrangian_hessian(
        &self,
        z: &[f64],
        obj_factor: f64,
        eq_mult: &[f64],
        ineq_mult: &[f64],
        hess: &mut Triplets,
    ) -> bool {
        let l = &self.layout;
        let nx = l.n_x;
        let ti = l.t_index();
        let t = z[ti];
        if self.effort {
            for i in 0..l.intervals() {
                let ds = self.ds(i);
                let o = l.u_offset(i);
                for k in 0..l.n_u {
                    hess.push((o + k, o + k, obj_factor * 2.0 * t * ds));
                    hess.push((ti, o + k, obj_factor * 2.0 * ds * z[o + k]));
                }
            }
        }
        let (ax, bu) = self.model.dynamics_jacobian_entries();
        let mut row = nx;
        for i in 0..l.intervals() {
            let (oa, ou, ob) = (l.x_offset(i), l.u_offset(i), l.x_offset(i + 1));
            let ds = self.ds(i);
            for &(r, c, v) in &ax {
                let lam = eq_mult[row + r];
                hess.push((ti, oa + c, -0.5 * ds * v * lam));
                hess.push((ti, ob + c, -0.5 * ds * v * lam));
            }
            for &(r, c, v) in &bu {
                hess.push((ti, ou + c, -ds * v * eq_mult[row + r]));
            }
            row += nx;
        }
        let add_block = |o: usize, h: &[f64], hess: &mut Triplets| {
            for a in 0..nx {
                for b in 0..=a {
                    let v = h[a * nx + b];
                    if v != 0.0 {
                        hess.push((o + a, o + b, v));
                    }
                }
            }
        };
        for (i, w) in &self.point_rows {
            let h = self
                .model
                .forward_map_weighted_hessian(l.state(z, *i), &eq_mult[row..row + w.len()]);
            add_block(l.x_offset(*i), &h, hess);
            row += w.len();
        }
        if self.goal_ball {
            let y = ineq_mult[ineq_mult.len() - 1];
            if y != 0.0 {
                let xn = l.state(z, l.intervals());
                let p = self.model.forward_map(xn);
                let j = self.model.forward_map_jacobian(xn);
                let wts: Vec<f64> = (0..p.len())
                    .map(|k| 2.0 * y * (p[k] - self.model.goal_center[k]))
                    .collect();
                let mut h = self.model.forward_map_weighted_hessian(xn, &wts);
                for a in 0..nx {
                    for b in 0..nx {
                        h[a * nx + b] += 2.0 * y * (0..p.len()).map(|k| j[k * nx + a] * j[k * nx + b]).sum::<f64>();
                    }
                }
                add_block(l.x_offset(l.intervals()), &h, hess);
            }
        }
        true
    }
}

/// Indices of trajectory states with any collision value strictly positive.
pub fn check_collisions(model: &ProblemModel, spec: &CollisionSpec, traj: &Trajectory) -> Vec<usize> {
    traj.states
        .iter()
        .enumerate()
        .filter(|(_, x)| model.collision_values(x, spec).iter().any(|&g| g > 0.0))
        .map(|(i, _)| i)
        .collect()
}

//! Outer loop alternating dynamic programming on the low-dimensional grids
//! with trajectory optimization in the full state space, plus the two
//! baselines (fixed grids with redistributed penalties, monolithic NLP).

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{self, DpConfig, WaypointSequence};
use crate::error::Error;
use crate::grid::{self, AdaptiveGrid, ControlGrid, SplitRecord};
use crate::mapping::{self, MappingConfig};
use crate::nlp::{self, SolveStatus, SolverOptions, TimeMode, Trajectory};
use crate::penalty::{PenaltyCache, PenaltyField};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Adaptive,
    FixedGrid,
    FullNlp,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Adaptive => "adaptive",
            Mode::FixedGrid => "fixed",
            Mode::FullNlp => "full-nlp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeStatus {
    Feasible,
    Infeasible,
    IterLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub max_outer_iters: usize,
    pub mode: Mode,
    pub dp: DpConfig,
    pub mapping: MappingConfig,
    pub penalty: PenaltyField,
    pub nlp_tol: f64,
    pub nlp_max_iter: usize,
    pub infeasibility_threshold: f64,
    pub divisions: Vec<usize>,
    pub intervals: usize,
    pub mark_on_failure: bool,
    pub full_nlp_budget: Duration,
}

impl SchemeConfig {
    pub fn from_scenario(s: &Scenario, mode: Mode) -> Result<Self, Error> {
        let p = &s.params;
        let m = &s.model;
        let control_grid = ControlGrid::lattice(
            &m.lowdim_control_bounds,
            &s.control_points(),
            m.time_bounds,
            p.num_steps,
            p.step_sizes,
        )?;
        Ok(Self {
            max_outer_iters: p.max_iters,
            mode,
            dp: DpConfig {
                num_steps: p.num_steps,
                objective_variant: p.objective_variant,
                control_grid,
                clamp_out_of_bounds: true,
                rho: p.rho,
            },
            mapping: MappingConfig {
                varrho1: p.varrho1,
                varrho2: p.varrho2,
                ..MappingConfig::default()
            },
            penalty: PenaltyField {
                rho: p.rho,
                mark_value: s.mark_value(),
            },
            nlp_tol: p.nlp_tol,
            nlp_max_iter: 3000,
            infeasibility_threshold: s.infeasibility_threshold(),
            divisions: s.divisions(),
            intervals: p.intervals,
            mark_on_failure: p.mark_on_failure,
            full_nlp_budget: Duration::from_secs_f64(p.full_nlp_budget),
        })
    }
}

/// A point sent to grid adaptation and the grids it affects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagRecord {
    pub tau: f64,
    pub w: Vec<f64>,
    pub grids: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub penalty: f64,
    pub dp: f64,
    pub lift: f64,
    pub nlp: f64,
    pub adapt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub dp_value: f64,
    pub waypoint_times: Vec<f64>,
    pub waypoints: Vec<Vec<f64>>,
    pub failed_lifts: usize,
    pub colliding_points: usize,
    pub nlp_status: Option<SolveStatus>,
    pub flagged: Vec<FlagRecord>,
    pub splits: Vec<SplitRecord>,
    pub refinement_errors: usize,
    /// New vertices per grid in this iteration.
    pub vertices_added: Vec<usize>,
    /// Vertex and leaf counts per grid after this iteration's adaptation.
    pub vertex_counts: Vec<usize>,
    pub leaf_counts: Vec<usize>,
    /// Sum of all penalty marks after this iteration.
    pub total_marks: f64,
    pub penalty_evaluations: usize,
    pub timings: Timings,
}

impl IterationRecord {
    pub fn total_vertices(&self) -> usize {
        self.vertex_counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub mode: Mode,
    pub status: OutcomeStatus,
    /// Collision-free trajectory when feasible, otherwise the best attempt.
    pub trajectory: Option<Trajectory>,
    pub iterations: Vec<IterationRecord>,
    pub wall_time: f64,
    pub message: Option<String>,
}

impl Outcome {
    pub fn final_time(&self) -> Option<f64> {
        self.trajectory.as_ref().map(|t| t.final_time)
    }

    pub fn objective(&self) -> Option<f64> {
        self.trajectory.as_ref().map(|t| t.objective_value)
    }
}

/// State handed to observers after every outer iteration.
pub struct Snapshot<'a> {
    pub scenario: &'a Scenario,
    pub record: &'a IterationRecord,
    pub grids: &'a [AdaptiveGrid],
    pub waypoints: &'a WaypointSequence,
    pub trajectory: Option<&'a Trajectory>,
}

pub type Observer<'a> = &'a mut dyn FnMut(&Snapshot);

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn total_penetration(s: &Scenario, traj: &Trajectory) -> f64 {
    traj.states
        .iter()
        .flat_map(|x| s.model.collision_values(x, &s.collision))
        .map(|g| g.max(0.0))
        .sum()
}

/// Runs the scheme selected by `cfg.mode`.
pub fn run(scenario: &Scenario, cfg: &SchemeConfig, observer: Option<Observer>) -> Result<Outcome, Error> {
    match cfg.mode {
        Mode::Adaptive | Mode::FixedGrid => run_idnp(scenario, cfg, observer),
        Mode::FullNlp => run_full_nlp(scenario, cfg),
    }
}

pub fn run_adaptive(scenario: &Scenario, cfg: &SchemeConfig) -> Result<Outcome, Error> {
    run_idnp(scenario, &SchemeConfig { mode: Mode::Adaptive, ..cfg.clone() }, None)
}

pub fn run_fixed_baseline(scenario: &Scenario, cfg: &SchemeConfig) -> Result<Outcome, Error> {
    run_idnp(scenario, &SchemeConfig { mode: Mode::FixedGrid, ..cfg.clone() }, None)
}

/// Adds `amount·γ` to the corners of the cell containing `w`.
fn distribute_mark(grid: &mut AdaptiveGrid, w: &[f64], amount: f64) {
    let weights = grid.interp(w);
    for (v, g) in weights {
        if g > 0.0 {
            grid.vertex_mut(v).mark += amount * g;
        }
    }
}

/// Marks the corner carrying the largest interpolation weight of `w`.
fn mark_nearest(grid: &mut AdaptiveGrid, w: &[f64], amount: f64) {
    let weights = grid.interp(w);
    if let Some(&(v, _)) = weights
        .iter()
        .fold(None, |best: Option<&(usize, f64)>, e| match best {
            Some(b) if b.1 >= e.1 => Some(b),
            _ => Some(e),
        })
    {
        grid.vertex_mut(v).mark += amount;
    }
}

fn run_idnp(scenario: &Scenario, cfg: &SchemeConfig, mut observer: Option<Observer>) -> Result<Outcome, Error> {
    let start = Instant::now();
    let model = &scenario.model;
    let spec = &scenario.collision;
    let m = cfg.dp.num_steps;
    let mut grids = (0..=m)
        .map(|j| AdaptiveGrid::build_uniform(j, &model.lowdim_state_bounds, &cfg.divisions))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cache = PenaltyCache::new();
    let w0 = model
        .lowdim_state_bounds
        .clamped(&model.forward_map(&model.initial_state));
    let mut records = Vec::new();
    let mut best: Option<(usize, f64, Trajectory)> = None;
    let opts = SolverOptions {
        tol: cfg.nlp_tol,
        max_iter: cfg.nlp_max_iter,
        stall_iters: 200,
        ..SolverOptions::default()
    };

    for iteration in 1..=cfg.max_outer_iters {
        let mut timings = Timings::default();
        let t = Instant::now();
        let evaluated = cache.fill(&mut grids, model, spec);
        timings.penalty = secs(t);

        let t = Instant::now();
        dp::backward_sweep(&mut grids, model, &cfg.dp)?;
        let seq = dp::extract_waypoints(&grids, model, &cfg.dp, &w0)?;
        timings.dp = secs(t);

        let mut record = IterationRecord {
            iteration,
            dp_value: seq.value,
            waypoint_times: seq.times.clone(),
            waypoints: seq.points.clone(),
            failed_lifts: 0,
            colliding_points: 0,
            nlp_status: None,
            flagged: Vec::new(),
            splits: Vec::new(),
            refinement_errors: 0,
            vertices_added: vec![0; m + 1],
            vertex_counts: Vec::new(),
            leaf_counts: Vec::new(),
            total_marks: 0.0,
            penalty_evaluations: evaluated,
            timings,
        };
        let finish_record = |record: &mut IterationRecord, grids: &[AdaptiveGrid]| {
            record.vertex_counts = grids.iter().map(AdaptiveGrid::num_vertices).collect();
            record.leaf_counts = grids.iter().map(AdaptiveGrid::num_leaves).collect();
            record.total_marks = grids.iter().flat_map(|g| g.vertices().iter().map(|v| v.mark)).sum();
        };

        if dp::infeasibility_check(&seq, cfg.infeasibility_threshold) {
            finish_record(&mut record, &grids);
            if let Some(obs) = observer.as_mut() {
                obs(&Snapshot { scenario, record: &record, grids: &grids, waypoints: &seq, trajectory: None });
            }
            records.push(record);
            return Ok(Outcome {
                mode: cfg.mode,
                status: OutcomeStatus::Infeasible,
                trajectory: best.map(|b| b.2),
                iterations: records,
                wall_time: secs(start),
                message: Some(format!("DP value {:.3e} exceeds the infeasibility threshold", seq.value)),
            });
        }

        let t = Instant::now();
        let lift = mapping::lift_sequence(model, spec, &seq, &model.initial_state, &cfg.mapping);
        record.timings.lift = secs(t);
        record.failed_lifts = lift.failed.len();

        let mut flagged: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut traj_for_snapshot = None;
        if let Some(states) = lift.states() {
            let t = Instant::now();
            let tp = nlp::transcribe(model, &seq, &states, cfg.intervals, TimeMode::Free)?;
            let sol = nlp::solve(&tp, &opts);
            let traj = tp.trajectory(&sol);
            record.timings.nlp = secs(t);
            record.nlp_status = Some(sol.status);
            let colliding = nlp::check_collisions(model, spec, &traj);
            record.colliding_points = colliding.len();
            if sol.status == SolveStatus::Optimal {
                if colliding.is_empty() {
                    finish_record(&mut record, &grids);
                    if let Some(obs) = observer.as_mut() {
                        obs(&Snapshot { scenario, record: &record, grids: &grids, waypoints: &seq, trajectory: Some(&traj) });
                    }
                    records.push(record);
                    return Ok(Outcome {
                        mode: cfg.mode,
                        status: OutcomeStatus::Feasible,
                        trajectory: Some(traj),
                        iterations: records,
                        wall_time: secs(start),
                        message: None,
                    });
                }
                let pen = total_penetration(scenario, &traj);
                let better = match &best {
                    None => true,
                    Some((c, p, _)) => colliding.len() < *c || (colliding.len() == *c && pen < *p),
                };
                if better {
                    best = Some((colliding.len(), pen, traj.clone()));
                }
            }
            if !colliding.is_empty() {
                flagged = mapping::project_collisions(model, &traj, &colliding, seq.horizon())?;
            } else {
                // No collisions but the waypoints could not be tracked: flag
                // the waypoints with the largest tracking error.
                let res = tp.waypoint_residuals(&traj.states);
                let worst = res.iter().cloned().fold(0.0, f64::max);
                for (j, r) in res.iter().enumerate() {
                    if *r >= 0.5 * worst {
                        let jj = j + 1;
                        flagged.push((seq.times[jj], seq.points[jj].clone()));
                    }
                }
            }
            traj_for_snapshot = Some(traj);
        } else {
            for f in &lift.failed {
                flagged.push((f.tau, f.w.clone()));
                if cfg.mark_on_failure {
                    mark_nearest(&mut grids[f.index], &f.w, cfg.penalty.mark_value);
                }
            }
        }

        let t = Instant::now();
        for (tau, w) in &flagged {
            record.flagged.push(FlagRecord {
                tau: *tau,
                w: w.clone(),
                grids: grid::affected_grids(&seq.times, *tau),
            });
        }
        match cfg.mode {
            Mode::Adaptive => {
                let report = grid::refine(&mut grids, &seq.times, &flagged, iteration)?;
                record.vertices_added = report.new_vertices.iter().map(Vec::len).collect();
                record.refinement_errors = report.errors.len();
                record.splits = report.splits;
            }
            Mode::FixedGrid => {
                for f in &record.flagged {
                    for &j in &f.grids {
                        distribute_mark(&mut grids[j], &f.w, cfg.penalty.mark_value);
                    }
                }
            }
            Mode::FullNlp => unreachable!("handled by run_full_nlp"),
        }
        record.timings.adapt = secs(t);
        finish_record(&mut record, &grids);
        if let Some(obs) = observer.as_mut() {
            obs(&Snapshot {
                scenario,
                record: &record,
                grids: &grids,
                waypoints: &seq,
                trajectory: traj_for_snapshot.as_ref(),
            });
        }
        records.push(record);
    }
    Ok(Outcome {
        mode: cfg.mode,
        status: OutcomeStatus::IterLimit,
        trajectory: best.map(|b| b.2),
        iterations: records,
        wall_time: secs(start),
        message: Some(format!("no collision-free trajectory after {} iterations", cfg.max_outer_iters)),
    })
}

/// Single transcription with collision inequalities and no waypoints.
pub fn run_full_nlp(scenario: &Scenario, cfg: &SchemeConfig) -> Result<Outcome, Error> {
    let start = Instant::now();
    let model = &scenario.model;
    let spec = &scenario.collision;
    let tp = nlp::full_nlp_transcribe(model, spec, cfg.intervals)?;
    let opts = SolverOptions {
        tol: cfg.nlp_tol,
        max_iter: usize::MAX,
        max_outer: 1000,
        time_limit: Some(cfg.full_nlp_budget),
        stall_iters: 2000,
        ..SolverOptions::default()
    };
    let sol = nlp::solve(&tp, &opts);
    let traj = tp.trajectory(&sol);
    let colliding = nlp::check_collisions(model, spec, &traj);
    let status = match sol.status {
        SolveStatus::Optimal if colliding.is_empty() => OutcomeStatus::Feasible,
        SolveStatus::Infeasible => OutcomeStatus::Infeasible,
        _ => OutcomeStatus::IterLimit,
    };
    Ok(Outcome {
        mode: Mode::FullNlp,
        status,
        trajectory: Some(traj),
        iterations: Vec::new(),
        wall_time: secs(start),
        message: sol.message,
    })
}

/// One row of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub seed: usize,
    pub start: Vec<f64>,
    pub mode: Mode,
    pub variant: dp::ObjectiveVariant,
    /// `None` when the start position could not be lifted.
    pub status: Option<OutcomeStatus>,
    pub iterations: usize,
    pub wall_time: f64,
    pub error: Option<String>,
}

/// Lifts `start` to an initial state with zero rates, or `None`.
pub fn lift_start(scenario: &Scenario, start: &[f64]) -> Option<Vec<f64>> {
    let model = &scenario.model;
    let guess = model.state_guess(start);
    mapping::inverse_map(model, &scenario.collision, start, &guess, &MappingConfig::default()).ok()
}

/// Runs every `(start, mode, variant)` combination. Seeds run in parallel on
/// the current rayon pool; failures of one seed do not affect the others.
pub fn run_campaign(
    scenario: &Scenario,
    starts: &[Vec<f64>],
    modes: &[Mode],
    variants: &[dp::ObjectiveVariant],
) -> Vec<CampaignRow> {
    let jobs: Vec<(usize, Mode, dp::ObjectiveVariant)> = (0..starts.len())
        .flat_map(|s| modes.iter().flat_map(move |&m| variants.iter().map(move |&v| (s, m, v))))
        .collect();
    let lifted: Vec<Option<Vec<f64>>> = starts.par_iter().map(|w| lift_start(scenario, w)).collect();
    jobs.par_iter()
        .map(|&(seed, mode, variant)| {
            let mut row = CampaignRow {
                seed,
                start: starts[seed].clone(),
                mode,
                variant,
                status: None,
                iterations: 0,
                wall_time: 0.0,
                error: None,
            };
            let Some(x0) = &lifted[seed] else {
                return row;
            };
            let mut s = scenario.with_initial_state(x0.clone());
            s.params.objective_variant = variant;
            let outcome = SchemeConfig::from_scenario(&s, mode).and_then(|cfg| run(&s, &cfg, None));
            match outcome {
                Ok(o) => {
                    row.status = Some(o.status);
                    row.iterations = o.iterations.len();
                    row.wall_time = o.wall_time;
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect()
}

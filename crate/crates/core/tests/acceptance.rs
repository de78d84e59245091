//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits nonzero if any of them fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dpnlp_core::dp::{self, LowDimProblem};
use dpnlp_core::grid::bracket_index;
use dpnlp_core::mapping::{inverse_map, MappingError};
use dpnlp_core::nlp::{self, NlpProblem, SolveStatus, SolverOptions, TimeMode, Trajectory, TranscriptionProblem};
use dpnlp_core::penalty::evaluate_penalty;
use dpnlp_core::scheme::{self, run_adaptive, run_fixed_baseline};
use dpnlp_core::{
    AdaptiveGrid, BoxBounds, CollisionSpec, ControlGrid, ConvexPolygon, DpConfig, MappingConfig, Mode,
    ObjectiveVariant, Outcome, OutcomeStatus, ProblemModel, Scenario, SchemeConfig,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn narrow_passage() -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/narrow_passage.json");
    Scenario::load(&path).expect("narrow passage scenario loads")
}

// ---------------------------------------------------------------- 1

fn refine_randomly(g: &mut AdaptiveGrid, rng: &mut ChaCha8Rng, max_depth: u32) {
    let b = g.bounds().clone();
    for _ in 0..6 {
        let target = rng.gen_range(0..=max_depth);
        let p: Vec<f64> = (0..b.dim()).map(|k| rng.gen_range(b.lower[k]..=b.upper[k])).collect();
        loop {
            let c = g.locate_cell(&p);
            if g.cell(c).depth >= target {
                break;
            }
            g.split_cell(c, 1).expect("split within resolution");
        }
    }
}

fn interpolation_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut depth_seen = [0usize; 5];
    let mut worst_sum: f64 = 0.0;
    let mut worst_affine: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=3);
        let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.5..5.0)).collect();
        let bounds = BoxBounds::new(lower.clone(), upper.clone()).unwrap();
        let divisions: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
        let mut g = AdaptiveGrid::build_uniform(0, &bounds, &divisions).unwrap();
        refine_randomly(&mut g, &mut rng, 4);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let c0 = rng.gen_range(-2.0..2.0);
        let affine = |x: &[f64]| c0 + x.iter().zip(&a).map(|(x, a)| x * a).sum::<f64>();
        for _ in 0..50 {
            let p: Vec<f64> = (0..n).map(|k| rng.gen_range(lower[k]..=upper[k])).collect();
            let depth = g.cell(g.locate_cell(&p)).depth as usize;
            depth_seen[depth.min(4)] += 1;
            let weights = g.interp(&p);
            ensure(weights.iter().all(|(_, w)| *w >= 0.0), || format!("negative weight at {p:?}"))?;
            let sum: f64 = weights.iter().map(|(_, w)| w).sum();
            worst_sum = worst_sum.max((sum - 1.0).abs());
            let value: f64 = weights.iter().map(|(v, w)| w * affine(&g.vertex(*v).coords)).sum();
            worst_affine = worst_affine.max((value - affine(&p)).abs());
        }
    }
    ensure(worst_sum <= 1e-12, || format!("weight sum off by {worst_sum:e}"))?;
    ensure(worst_affine <= 1e-10, || format!("affine error {worst_affine:e}"))?;
    ensure(depth_seen.iter().all(|&c| c > 0), || format!("depth coverage {depth_seen:?}"))?;
    Ok(format!(
        "10000 pairs, depth counts {depth_seen:?}, max |sum-1| {worst_sum:.1e}, max affine error {worst_affine:.1e}"
    ))
}

// ---------------------------------------------------------------- 2

struct Table {
    spacing: f64,
    terminal: Vec<f64>,
}

impl LowDimProblem for Table {
    fn lowdim_dynamics(&self, _w: &[f64], v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }
    fn mayer(&self, w: &[f64]) -> f64 {
        self.terminal[(w[0] / self.spacing).round() as usize]
    }
}

struct Instance {
    divisions: usize,
    stages: usize,
    /// Control moves in vertex units per half-second.
    moves: Vec<i64>,
    steps: Vec<f64>,
    penalties: Vec<Vec<f64>>,
    terminal: Vec<f64>,
    rho: f64,
    variant: ObjectiveVariant,
    start: usize,
}

fn enumerate(inst: &Instance, stage: usize, i: usize) -> f64 {
    if stage == inst.stages {
        return inst.terminal[i];
    }
    let mut best = f64::INFINITY;
    for &k in &inst.moves {
        for &h in &inst.steps {
            let units = (h / 0.5).round() as i64;
            let next = (i as i64 + k * units).clamp(0, inst.divisions as i64) as usize;
            let p = inst.penalties[stage][i];
            let stage_cost = match inst.variant {
                ObjectiveVariant::StepWeighted => inst.rho * h * p,
                ObjectiveVariant::Unweighted => inst.rho * p,
            };
            best = best.min(stage_cost + enumerate(inst, stage + 1, next));
        }
    }
    best
}

fn dp_value(inst: &Instance) -> (f64, f64) {
    let spacing = 1.0 / inst.divisions as f64;
    let bounds = BoxBounds::uniform(1, 0.0, 1.0).unwrap();
    let mut grids: Vec<AdaptiveGrid> = (0..=inst.stages)
        .map(|j| {
            let mut g = AdaptiveGrid::build_uniform(j, &bounds, &[inst.divisions]).unwrap();
            for v in g.vertices_mut() {
                let i = (v.coords[0] / spacing).round() as usize;
                v.base_penalty = if j < inst.stages { inst.penalties[j][i] } else { 0.0 };
            }
            g
        })
        .collect();
    let cfg = DpConfig {
        num_steps: inst.stages,
        objective_variant: inst.variant,
        control_grid: ControlGrid {
            points: inst.moves.iter().map(|&k| vec![k as f64 * spacing / 0.5]).collect(),
            step_sizes: inst.steps.clone(),
        },
        clamp_out_of_bounds: true,
        rho: inst.rho,
    };
    let problem = Table { spacing, terminal: inst.terminal.clone() };
    dp::backward_sweep(&mut grids, &problem, &cfg).unwrap();
    let w0 = [inst.start as f64 * spacing];
    let seq = dp::extract_waypoints(&grids, &problem, &cfg, &w0).unwrap();
    (grids[0].interp_value(&w0), seq.value)
}

fn dp_oracle() -> Check {
    // Grid {0, 0.5, 1}, controls {-0.5, 0, 0.5}, h = 0.5, two stages,
    // Mayer |w - 1|, zero penalty.
    let bounds = BoxBounds::uniform(1, 0.0, 1.0).unwrap();
    let mut grids: Vec<AdaptiveGrid> = (0..=2)
        .map(|j| {
            let mut g = AdaptiveGrid::build_uniform(j, &bounds, &[2]).unwrap();
            g.vertices_mut().iter_mut().for_each(|v| v.base_penalty = 0.0);
            g
        })
        .collect();
    struct Reach;
    impl LowDimProblem for Reach {
        fn lowdim_dynamics(&self, _w: &[f64], v: &[f64], out: &mut [f64]) {
            out.copy_from_slice(v);
        }
        fn mayer(&self, w: &[f64]) -> f64 {
            (w[0] - 1.0).abs()
        }
    }
    let cfg = DpConfig {
        num_steps: 2,
        objective_variant: ObjectiveVariant::StepWeighted,
        control_grid: ControlGrid { points: vec![vec![-0.5], vec![0.0], vec![0.5]], step_sizes: vec![0.5] },
        clamp_out_of_bounds: true,
        rho: 1.0,
    };
    dp::backward_sweep(&mut grids, &Reach, &cfg).unwrap();
    let worked = grids[0].interp_value(&[0.0]);
    ensure((worked - 0.5).abs() <= 1e-9, || format!("worked example gives {worked}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let divisions = rng.gen_range(2..=6);
        let stages = rng.gen_range(1..=3);
        let mut moves: Vec<i64> = (-2..=2).collect();
        while moves.len() > rng.gen_range(1..=3) {
            moves.remove(rng.gen_range(0..moves.len()));
        }
        let steps = match rng.gen_range(0..3) {
            0 => vec![0.5],
            1 => vec![1.0],
            _ => vec![0.5, 1.0],
        };
        let inst = Instance {
            divisions,
            stages,
            moves,
            steps,
            penalties: (0..stages).map(|_| (0..=divisions).map(|_| rng.gen_range(0.0..2.0)).collect()).collect(),
            terminal: (0..=divisions).map(|_| rng.gen_range(0.0..5.0)).collect(),
            rho: rng.gen_range(0.5..3.0),
            variant: if rng.gen_bool(0.5) { ObjectiveVariant::StepWeighted } else { ObjectiveVariant::Unweighted },
            start: rng.gen_range(0..=divisions),
        };
        let exact = enumerate(&inst, 0, inst.start);
        let (table, forward) = dp_value(&inst);
        let err = (table - exact).abs().max((forward - exact).abs());
        ensure(err <= 1e-9, || format!("case {case}: DP {table} / {forward}, enumeration {exact}"))?;
        worst = worst.max(err);
    }
    Ok(format!("worked example {worked}, 50 random instances, max error {worst:.1e}"))
}

// ---------------------------------------------------------------- 3

/// Signed distance between the axis-aligned squares `[c ± r]` and `[lo, hi]`.
fn box_distance(c: [f64; 2], r: f64, lo: [f64; 2], hi: [f64; 2]) -> f64 {
    let gap: Vec<f64> = (0..2).map(|k| (lo[k] - (c[k] + r)).max((c[k] - r) - hi[k])).collect();
    if gap[0] <= 0.0 && gap[1] <= 0.0 {
        gap[0].max(gap[1])
    } else {
        (gap[0].max(0.0).powi(2) + gap[1].max(0.0).powi(2)).sqrt()
    }
}

fn grid_search_penalty(w: [f64; 2], r: f64, eps: f64) -> f64 {
    let (lo, hi) = ([4.0, 4.0], [6.0, 6.0]);
    let f = |p: [f64; 2]| {
        let d = ((p[0] - w[0]).powi(2) + (p[1] - w[1]).powi(2)).sqrt();
        d + (eps - box_distance(p, r, lo, hi)).max(0.0)
    };
    let reach = (eps - box_distance(w, r, lo, hi)).max(0.0) + 0.05;
    let n = 100;
    let mut best = f64::INFINITY;
    for a in -n..=n {
        for b in -n..=n {
            let p = [w[0] + reach * a as f64 / n as f64, w[1] + reach * b as f64 / n as f64];
            if p.iter().all(|x| (-1.0..=11.0).contains(x)) {
                best = best.min(f(p));
            }
        }
    }
    best
}

fn penalty_oracle() -> Check {
    let eps = 0.01;
    let spec = CollisionSpec::new(vec![ConvexPolygon::rectangle(4.0, 4.0, 6.0, 6.0).unwrap()], eps).unwrap();
    let mut thin = ProblemModel::point_mass([0.0, 0.0], [9.0, 9.0]);
    thin.body_radius = 1e-9;
    let center = evaluate_penalty(&thin, &spec, &[5.0, 5.0]).map_err(|e| e.to_string())?;
    ensure((center - 1.01).abs() <= 1e-3, || format!("P(5,5) = {center}"))?;

    let model = ProblemModel::point_mass([0.0, 0.0], [9.0, 9.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut inside = 0;
    for i in 0..199 {
        let w = if i % 2 == 0 {
            [rng.gen_range(3.0..7.0), rng.gen_range(3.0..7.0)]
        } else {
            [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]
        };
        let oracle = grid_search_penalty(w, model.body_radius, eps);
        if oracle > 0.0 {
            inside += 1;
        }
        let p = evaluate_penalty(&model, &spec, &w).map_err(|e| e.to_string())?;
        let err = (p - oracle).abs();
        ensure(err <= 1e-3, || format!("w = {w:?}: P = {p}, oracle {oracle}"))?;
        worst = worst.max(err);
    }
    Ok(format!("P(5,5) = {center:.6}, 199 samples ({inside} penalized), max error {worst:.1e}"))
}

// ---------------------------------------------------------------- 4

fn dense_jacobian(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut j = vec![0.0; rows * cols];
    for &(r, c, v) in triplets {
        j[r * cols + c] += v;
    }
    j
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Largest relative gap between the analytic derivatives of `p` and
/// central differences at `z`.
fn fd_gap<P: NlpProblem>(p: &P, z: &[f64]) -> f64 {
    let n = p.num_vars();
    let (me, mi) = (p.num_eq(), p.num_ineq());
    let mut grad = vec![0.0; n];
    p.gradient(z, &mut grad);
    let mut trip = Vec::new();
    p.eq_jacobian(z, &mut trip);
    let je = dense_jacobian(me, n, &trip);
    trip.clear();
    p.ineq_jacobian(z, &mut trip);
    let ji = dense_jacobian(mi, n, &trip);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut zp = z.to_vec();
    let (mut cp, mut cm) = (vec![0.0; me], vec![0.0; me]);
    let (mut hp, mut hm) = (vec![0.0; mi], vec![0.0; mi]);
    for k in 0..n {
        zp[k] = z[k] + h;
        let fp = p.objective(&zp);
        p.eq_constraints(&zp, &mut cp);
        p.ineq_constraints(&zp, &mut hp);
        zp[k] = z[k] - h;
        let fm = p.objective(&zp);
        p.eq_constraints(&zp, &mut cm);
        p.ineq_constraints(&zp, &mut hm);
        zp[k] = z[k];
        worst = worst.max(relative_gap(grad[k], (fp - fm) / (2.0 * h)));
        for r in 0..me {
            worst = worst.max(relative_gap(je[r * n + k], (cp[r] - cm[r]) / (2.0 * h)));
        }
        for r in 0..mi {
            worst = worst.max(relative_gap(ji[r * n + k], (hp[r] - hm[r]) / (2.0 * h)));
        }
    }
    worst
}

fn random_point(p: &impl NlpProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let b = p.bounds();
    (0..b.dim()).map(|k| rng.gen_range(b.lower[k]..=b.upper[k])).collect()
}

fn nlp_correctness() -> Check {
    let mut model = ProblemModel::point_mass([0.0, 0.0], [1.0, 0.0]);
    model.state_bounds = BoxBounds::uniform(4, -10.0, 10.0).unwrap();
    model.control_bounds = BoxBounds::uniform(2, -20.0, 20.0).unwrap();
    let tp = TranscriptionProblem::two_point(&model, &[1.0, 0.0, 0.0, 0.0], 200, TimeMode::Fixed(1.0))
        .map_err(|e| e.to_string())?;
    let sol = nlp::solve(&tp, &SolverOptions::default());
    ensure(sol.status == SolveStatus::Optimal, || format!("two-point status {:?}", sol.status))?;
    let rel = (sol.objective - 12.0).abs() / 12.0;
    ensure(rel <= 5e-3, || format!("objective {} ({:.2}% off)", sol.objective, 100.0 * rel))?;
    ensure(sol.kkt.max() <= 1e-6, || format!("KKT residual {:e}", sol.kkt.max()))?;

    let obstacles = vec![
        ConvexPolygon::rectangle(4.0, 4.0, 6.0, 6.0).unwrap(),
        ConvexPolygon::rectangle(1.0, 6.0, 2.0, 9.0).unwrap(),
    ];
    let spec = CollisionSpec::new(obstacles, 0.01).unwrap();
    let mass = nlp::full_nlp_transcribe(&ProblemModel::point_mass([1.0, 1.0], [8.0, 8.0]), &spec, 8)
        .map_err(|e| e.to_string())?;
    let arm_spec = CollisionSpec::new(vec![ConvexPolygon::rectangle(1.5, 0.5, 2.0, 1.5).unwrap()], 0.01).unwrap();
    let arm = nlp::full_nlp_transcribe(&ProblemModel::planar_arm([0.1, 0.2, 0.3], [0.0, 2.0]), &arm_spec, 6)
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let gap = if i % 3 == 0 {
            fd_gap(&tp_small(&model), &random_point(&tp_small(&model), &mut rng))
        } else if i % 3 == 1 {
            fd_gap(&mass, &random_point(&mass, &mut rng))
        } else {
            fd_gap(&arm, &random_point(&arm, &mut rng))
        };
        ensure(gap <= 1e-5, || format!("point {i}: derivative gap {gap:e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!(
        "objective {:.5} ({:.3}% off), KKT {:.1e}, 100 derivative checks with max gap {worst:.1e}",
        sol.objective,
        100.0 * rel,
        sol.kkt.max()
    ))
}

fn tp_small(model: &ProblemModel) -> TranscriptionProblem {
    let mut m = model.clone();
    m.time_bounds = [0.5, 5.0];
    TranscriptionProblem::two_point(&m, &[1.0, 0.5, 0.0, 0.0], 6, TimeMode::Free).unwrap()
}

// ---------------------------------------------------------------- 5

fn collision_free(s: &Scenario, traj: &Trajectory) -> Result<f64, String> {
    let r = s.model.body_radius;
    let eps = s.params.safety_margin;
    let mut worst = f64::NEG_INFINITY;
    for (i, x) in traj.states.iter().enumerate() {
        for o in &s.obstacles {
            let g = eps - box_distance([x[0], x[1]], r, [o.xmin, o.ymin], [o.xmax, o.ymax]);
            ensure(g <= 1e-9, || format!("node {i} at ({:.3}, {:.3}) violates by {g:e}", x[0], x[1]))?;
            worst = worst.max(g);
        }
    }
    Ok(worst)
}

fn waypoint_residual(outcome: &Outcome, traj: &Trajectory) -> Result<f64, String> {
    let last = outcome.iterations.last().ok_or("no iterations")?;
    let horizon = *last.waypoint_times.last().unwrap();
    let mut worst: f64 = 0.0;
    for (tau, w) in last.waypoint_times.iter().zip(&last.waypoints) {
        let s = tau / horizon;
        let i = traj
            .times
            .iter()
            .map(|t| (t / traj.final_time - s).abs())
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        let x = &traj.states[i];
        worst = worst.max(((x[0] - w[0]).powi(2) + (x[1] - w[1]).powi(2)).sqrt());
    }
    ensure(worst <= 1e-6, || format!("waypoint residual {worst:e}"))?;
    Ok(worst)
}

fn check_narrow_layout(s: &Scenario) -> Result<(), String> {
    let p = &s.params;
    ensure(p.rho == 40.0 && p.num_steps == 20 && p.intervals == 200, || "scenario parameters differ".into())?;
    ensure(s.divisions() == vec![10, 10], || format!("divisions {:?}", s.divisions()))?;
    // The gap between the two walls must not contain an initial grid line.
    let (a, b) = (&s.obstacles[0], &s.obstacles[1]);
    let (lo, hi) = (a.xmax.min(b.xmax), a.xmin.max(b.xmin));
    ensure((hi - lo - 0.5).abs() < 1e-12, || format!("gap width {}", hi - lo))?;
    ensure(lo.ceil() > hi, || "initial grid line inside the gap".into())?;
    Ok(())
}

fn narrow_passage_run() -> (Scenario, Outcome) {
    let s = narrow_passage();
    let cfg = SchemeConfig::from_scenario(&s, Mode::Adaptive).unwrap();
    let outcome = run_adaptive(&s, &cfg).unwrap();
    (s, outcome)
}

fn narrow_passage_end_to_end() -> Check {
    let (s, adaptive) = narrow_passage_run();
    check_narrow_layout(&s)?;
    ensure(adaptive.status == OutcomeStatus::Feasible, || format!("adaptive status {:?}", adaptive.status))?;
    ensure(adaptive.iterations.len() <= 10, || format!("{} iterations", adaptive.iterations.len()))?;
    ensure(adaptive.wall_time <= 60.0, || format!("{:.1} s", adaptive.wall_time))?;
    let traj = adaptive.trajectory.as_ref().ok_or("no trajectory")?;
    let margin = collision_free(&s, traj)?;
    let residual = waypoint_residual(&adaptive, traj)?;

    let cfg = SchemeConfig::from_scenario(&s, Mode::FixedGrid).unwrap();
    let fixed = run_fixed_baseline(&s, &cfg).unwrap();
    ensure(fixed.status == OutcomeStatus::IterLimit, || format!("fixed status {:?}", fixed.status))?;
    ensure(fixed.iterations.len() == 15, || format!("fixed ran {} iterations", fixed.iterations.len()))?;
    Ok(format!(
        "adaptive Feasible in {} iterations / {:.1} s (max g {margin:.2e}, waypoint residual {residual:.1e}); fixed {:?} after {}",
        adaptive.iterations.len(),
        adaptive.wall_time,
        fixed.status,
        fixed.iterations.len()
    ))
}

// ---------------------------------------------------------------- 6

fn campaign_dominance() -> Check {
    let s = narrow_passage();
    let starts = s.sweep.as_ref().ok_or("scenario has no sweep")?.points();
    ensure(starts.len() >= 25, || format!("only {} seeds", starts.len()))?;
    let variants = [ObjectiveVariant::StepWeighted, ObjectiveVariant::Unweighted];
    let rows = scheme::run_campaign(&s, &starts, &[Mode::Adaptive, Mode::FixedGrid], &variants);
    if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
        return Err(format!("seed {} failed: {}", r.seed, r.error.as_deref().unwrap_or("")));
    }
    let solved = |mode: Mode, variant: ObjectiveVariant| -> Vec<usize> {
        rows.iter()
            .filter(|r| r.mode == mode && r.variant == variant && r.status == Some(OutcomeStatus::Feasible))
            .map(|r| r.seed)
            .collect()
    };
    let mut summary = Vec::new();
    for v in variants {
        let (a, f) = (solved(Mode::Adaptive, v), solved(Mode::FixedGrid, v));
        ensure(f.iter().all(|seed| a.contains(seed)), || format!("{v:?}: fixed solves a seed adaptive misses"))?;
        ensure(a.len() > f.len(), || format!("{v:?}: adaptive {} vs fixed {}", a.len(), f.len()))?;
        summary.push(format!("{v:?} adaptive {}/{} fixed {}/{}", a.len(), starts.len(), f.len(), starts.len()));
    }
    Ok(summary.join(", "))
}

// ---------------------------------------------------------------- 7

fn refinement_locality() -> Check {
    let (s, outcome) = narrow_passage_run();
    let d = s.divisions();
    let mut counts = vec![(d[0] + 1) * (d[1] + 1); s.params.num_steps + 1];
    let mut splits = 0;
    for rec in &outcome.iterations {
        let times = &rec.waypoint_times;
        let mut touched = vec![false; counts.len()];
        for f in &rec.flagged {
            let j = (1..times.len()).find(|&j| times[j - 1] < f.tau && f.tau <= times[j]);
            let expected = match j {
                Some(j) => vec![j - 1, j],
                None if f.tau <= times[0] => vec![0],
                None => vec![times.len() - 2, times.len() - 1],
            };
            ensure(expected.contains(&bracket_index(times, f.tau)), || "bracket index disagrees".into())?;
            ensure(f.grids == expected, || format!("flag at {:.3}: grids {:?}, expected {expected:?}", f.tau, f.grids))?;
            for &g in &f.grids {
                touched[g] = true;
            }
        }
        for sp in &rec.splits {
            let ok = sp.flags.iter().any(|&i| {
                let f = &rec.flagged[i];
                f.grids.contains(&sp.grid)
                    && f.w.iter().zip(sp.lower.iter().zip(&sp.upper)).all(|(x, (lo, hi))| lo <= x && x <= hi)
            });
            ensure(ok, || format!("iteration {}: split on grid {} has no flagged point", rec.iteration, sp.grid))?;
            splits += 1;
        }
        if rec.vertex_counts.is_empty() {
            continue;
        }
        for (g, (&before, &after)) in counts.iter().zip(&rec.vertex_counts).enumerate() {
            ensure(after >= before, || format!("grid {g} lost vertices"))?;
            ensure(after == before || touched[g], || format!("iteration {}: grid {g} grew without a flag", rec.iteration))?;
            ensure(after - before == rec.vertices_added[g], || format!("grid {g}: vertex bookkeeping mismatch"))?;
        }
        counts = rec.vertex_counts.clone();
    }
    ensure(splits > 0, || "no refinement happened".into())?;
    Ok(format!("{} iterations, {splits} splits, all local", outcome.iterations.len()))
}

// ---------------------------------------------------------------- 8

fn arm_round_trip() -> Check {
    let model = ProblemModel::planar_arm([0.0, 0.0, 0.0], [0.0, 2.0]);
    let spec = CollisionSpec::empty();
    let cfg = MappingConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let r = rng.gen_range(0.1..2.45);
        let phi = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let w = [r * phi.cos(), r * phi.sin()];
        // Half the targets start from an unrelated previous configuration.
        let prev = if i % 2 == 0 {
            model.state_guess(&w)
        } else {
            let mut x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.5..2.5)).collect();
            x.extend([0.0; 3]);
            x
        };
        let x = inverse_map(&model, &spec, &w, &prev, &cfg)
            .map_err(|e| format!("target {i} at radius {r:.3}: {e}"))?;
        let p = model.forward_map(&x);
        let err = ((p[0] - w[0]).powi(2) + (p[1] - w[1]).powi(2)).sqrt();
        ensure(err <= 1e-6, || format!("target {i}: error {err:e}"))?;
        worst = worst.max(err);
    }
    for i in 0..50 {
        let r = rng.gen_range(2.55..4.0);
        let phi = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let w = [r * phi.cos(), r * phi.sin()];
        match inverse_map(&model, &spec, &w, &model.state_guess(&w), &cfg) {
            Err(MappingError::InfeasibleWaypoint { .. }) => {}
            other => return Err(format!("unreachable target {i} at radius {r:.3}: {other:?}")),
        }
    }
    Ok(format!("100 reachable targets (max error {worst:.1e}), 50/50 unreachable rejected"))
}

// ----------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check, f64); 8] = [
        ("interpolation", interpolation_suite, 5.0),
        ("dp oracle", dp_oracle, 10.0),
        ("penalty oracle", penalty_oracle, 60.0),
        ("nlp correctness", nlp_correctness, 30.0),
        ("narrow passage", narrow_passage_end_to_end, 120.0),
        ("campaign dominance", campaign_dominance, 1800.0),
        ("refinement locality", refinement_locality, 60.0),
        ("arm round trip", arm_round_trip, 60.0),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, (name, check, budget)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(e.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let secs = t.elapsed().as_secs_f64();
        let result = result.and_then(|m| {
            if secs <= *budget {
                Ok(m)
            } else {
                Err(format!("took {secs:.1} s, budget {budget} s"))
            }
        });
        match result {
            Ok(m) => println!("criterion {} ({name}): PASS in {secs:.1} s: {m}", n + 1),
            Err(m) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL in {secs:.1} s: {m}", n + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

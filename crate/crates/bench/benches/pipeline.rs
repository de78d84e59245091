use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use dpnlp_bench::{evaluated_grids, scenario};
use dpnlp_core::geometry::signed_distance;
use dpnlp_core::nlp::{self, SolverOptions, TimeMode, TranscriptionProblem};
use dpnlp_core::penalty::evaluate_penalty;
use dpnlp_core::{dp, scheme, BoxBounds, ConvexPolygon, Mode, ProblemModel, SchemeConfig};

fn geometry(c: &mut Criterion) {
    let a = ConvexPolygon::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
    let b = ConvexPolygon::rectangle(1.5, 0.3, 3.0, 2.0).unwrap();
    c.bench_function("signed_distance", |bn| bn.iter(|| signed_distance(black_box(&a), black_box(&b))));

    let s = scenario("narrow_passage.json");
    c.bench_function("evaluate_penalty/inside_wall", |bn| {
        bn.iter(|| evaluate_penalty(&s.model, &s.collision, black_box(&[2.0, 5.0])))
    });
}

fn dynamic_programming(c: &mut Criterion) {
    let s = scenario("narrow_passage.json");
    let (cfg, grids) = evaluated_grids(&s);
    let w0 = s.model.forward_map(&s.model.initial_state);
    c.bench_function("dp/sweep_and_extract", |bn| {
        bn.iter_batched_ref(
            || grids.clone(),
            |g| {
                dp::backward_sweep(g, &s.model, &cfg.dp).unwrap();
                dp::extract_waypoints(g, &s.model, &cfg.dp, &w0).unwrap()
            },
            criterion::BatchSize::LargeInput,
        )
    });
}

fn trajectory(c: &mut Criterion) {
    let mut m = ProblemModel::point_mass([0.0, 0.0], [1.0, 0.0]);
    m.state_bounds = BoxBounds::uniform(4, -10.0, 10.0).unwrap();
    m.control_bounds = BoxBounds::uniform(2, -20.0, 20.0).unwrap();
    let tp = TranscriptionProblem::two_point(&m, &[1.0, 0.0, 0.0, 0.0], 200, TimeMode::Fixed(1.0)).unwrap();
    c.bench_function("nlp/two_point_n200", |bn| bn.iter(|| nlp::solve(&tp, &SolverOptions::default())));

    let s = scenario("open_field.json");
    let cfg = SchemeConfig::from_scenario(&s, Mode::Adaptive).unwrap();
    let mut group = c.benchmark_group("scheme");
    group.sample_size(10);
    group.bench_function("open_field", |bn| bn.iter(|| scheme::run_adaptive(&s, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, geometry, dynamic_programming, trajectory);
criterion_main!(benches);

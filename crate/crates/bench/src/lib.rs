//! Fixtures shared by the pipeline benchmarks.

use std::path::Path;

use dpnlp_core::penalty::PenaltyCache;
use dpnlp_core::{AdaptiveGrid, Mode, Scenario, SchemeConfig};

/// A scenario from the workspace `scenarios/` directory.
pub fn scenario(name: &str) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    Scenario::load(&path).expect("bundled scenario loads")
}

/// Uniform stage grids of `s` with every vertex penalty evaluated.
pub fn evaluated_grids(s: &Scenario) -> (SchemeConfig, Vec<AdaptiveGrid>) {
    let cfg = SchemeConfig::from_scenario(s, Mode::Adaptive).expect("valid scenario");
    let mut grids: Vec<AdaptiveGrid> = (0..=cfg.dp.num_steps)
        .map(|j| AdaptiveGrid::build_uniform(j, &s.model.lowdim_state_bounds, &cfg.divisions).unwrap())
        .collect();
    PenaltyCache::new().fill(&mut grids, &s.model, &s.collision);
    (cfg, grids)
}

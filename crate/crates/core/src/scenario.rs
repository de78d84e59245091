//! JSON scenario files.
//!
//! Units: positions and lengths in meters, velocities in m/s, times in
//! seconds, joint angles in radians. Omitted bounds fall back to the model
//! defaults, omitted parameters to [`Parameters::default`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoxBounds;
use crate::dp::ObjectiveVariant;
use crate::geometry::{CollisionSpec, ConvexPolygon};
use crate::models::{ModelKind, ProblemModel};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Axis-aligned rectangle `[xmin, xmax] × [ymin, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    /// `w_ref`.
    pub center: Vec<f64>,
    /// `r` in meters.
    #[serde(default)]
    pub radius: Option<f64>,
    /// `α`, dimensionless.
    #[serde(default)]
    pub scale: Option<f64>,
}

/// Lattice of initial low-dimensional positions for campaigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
}

impl SweepSpec {
    /// Lattice points with axis 0 varying fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let n = self.lower.len();
        let total: usize = self.counts.iter().product();
        let mut idx = vec![0usize; n];
        let mut out = Vec::with_capacity(total);
        for _ in 0..total {
            out.push(
                (0..n)
                    .map(|k| {
                        if self.counts[k] <= 1 {
                            0.5 * (self.lower[k] + self.upper[k])
                        } else {
                            self.lower[k]
                                + (self.upper[k] - self.lower[k]) * idx[k] as f64
                                    / (self.counts[k] - 1) as f64
                        }
                    })
                    .collect(),
            );
            for k in 0..n {
                idx[k] += 1;
                if idx[k] < self.counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Parameters {
    /// `ρ`.
    pub rho: f64,
    /// DP stages `M`.
    pub num_steps: usize,
    /// Transcription intervals `N`.
    pub intervals: usize,
    /// Collision margin `ε` in meters.
    pub safety_margin: f64,
    pub varrho1: f64,
    pub varrho2: f64,
    /// Root cells per axis of the initial state grids.
    pub divisions: Option<Vec<usize>>,
    /// Control-grid points per axis.
    pub control_points: Option<Vec<usize>>,
    /// Number of step sizes.
    pub step_sizes: usize,
    pub max_iters: usize,
    pub objective_variant: ObjectiveVariant,
    pub seed: u64,
    /// Penalty mark; `10·ρ` when omitted.
    pub mark_value: Option<f64>,
    pub mark_on_failure: bool,
    /// DP value at which the scheme reports infeasibility; `α·diam(W)` when omitted.
    pub infeasibility_threshold: Option<f64>,
    /// KKT tolerance of the trajectory solve.
    pub nlp_tol: f64,
    /// Wall-clock budget of the monolithic baseline, seconds.
    pub full_nlp_budget: f64,
}

impl Default for Parameters {
    fn default() -> Self {
        Self {
            rho: 40.0,
            num_steps: 20,
            intervals: 200,
            safety_margin: 0.01,
            varrho1: 1.0,
            varrho2: 1.0,
            divisions: None,
            control_points: None,
            step_sizes: 10,
            max_iters: 15,
            objective_variant: ObjectiveVariant::StepWeighted,
            seed: 0,
            mark_value: None,
            mark_on_failure: true,
            infeasibility_threshold: None,
            nlp_tol: 1e-6,
            full_nlp_budget: 300.0,
        }
    }
}

/// On-disk scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    pub model: ModelKind,
    #[serde(default)]
    pub state_bounds: Option<BoxBounds>,
    #[serde(default)]
    pub control_bounds: Option<BoxBounds>,
    #[serde(default)]
    pub lowdim_state_bounds: Option<BoxBounds>,
    #[serde(default)]
    pub lowdim_control_bounds: Option<BoxBounds>,
    #[serde(default)]
    pub time_bounds: Option<[f64; 2]>,
    #[serde(default)]
    pub body_radius: Option<f64>,
    pub initial_state: Vec<f64>,
    pub goal: GoalSpec,
    #[serde(default)]
    pub obstacles: Vec<RectSpec>,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

/// Validated scenario with all defaults resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub model: ProblemModel,
    pub obstacles: Vec<RectSpec>,
    pub collision: CollisionSpec,
    pub params: Parameters,
    pub sweep: Option<SweepSpec>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_file(f: ScenarioFile) -> Result<Self, ScenarioError> {
        let invalid = |m: String| ScenarioError::Invalid(m);
        let goal2 = |c: &[f64]| -> Result<[f64; 2], ScenarioError> {
            c.try_into()
                .map_err(|_| invalid(format!("goal center must have 2 components, got {}", c.len())))
        };
        let center = goal2(&f.goal.center)?;
        let mut model = match f.model {
            ModelKind::PointMass2D => ProblemModel::point_mass([0.0, 0.0], center),
            ModelKind::PlanarArm3 => ProblemModel::planar_arm([0.0; 3], center),
        };
        if let Some(b) = f.state_bounds {
            model.state_bounds = b;
        }
        if let Some(b) = f.control_bounds {
            model.control_bounds = b;
        }
        if let Some(b) = f.lowdim_state_bounds {
            model.lowdim_state_bounds = b;
        }
        if let Some(b) = f.lowdim_control_bounds {
            model.lowdim_control_bounds = b;
        }
        if let Some(t) = f.time_bounds {
            model.time_bounds = t;
        }
        if let Some(r) = f.body_radius {
            model.body_radius = r;
        }
        if let Some(r) = f.goal.radius {
            model.goal_radius = r;
        }
        if let Some(a) = f.goal.scale {
            model.goal_scale = a;
        }
        model.initial_state = f.initial_state;
        model.validate().map_err(|e| invalid(e.message))?;

        let p = &f.parameters;
        let nw = model.n_w();
        if !(p.rho > 0.0) {
            return Err(invalid("rho must be positive".into()));
        }
        if p.num_steps == 0 || p.intervals < p.num_steps {
            return Err(invalid("need num_steps >= 1 and intervals >= num_steps".into()));
        }
        if p.step_sizes == 0 || p.max_iters == 0 {
            return Err(invalid("step_sizes and max_iters must be positive".into()));
        }
        if !(p.nlp_tol > 0.0) || !(p.full_nlp_budget >= 0.0) {
            return Err(invalid("nlp_tol must be positive and full_nlp_budget nonnegative".into()));
        }
        for (what, v) in [("divisions", &p.divisions), ("control_points", &p.control_points)] {
            if let Some(v) = v {
                if v.len() != nw || v.contains(&0) {
                    return Err(invalid(format!("{what} needs {nw} positive entries")));
                }
            }
        }
        if p.mark_value.is_some_and(|m| !(m > 0.0)) {
            return Err(invalid("mark_value must be positive".into()));
        }
        if p.varrho1 < 0.0 || p.varrho2 < 0.0 || p.varrho1 + p.varrho2 == 0.0 {
            return Err(invalid("varrho weights must be nonnegative and not both zero".into()));
        }
        let polys = f
            .obstacles
            .iter()
            .map(|r| ConvexPolygon::rectangle(r.xmin, r.ymin, r.xmax, r.ymax))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid(e.to_string()))?;
        let collision = CollisionSpec::new(polys, p.safety_margin).map_err(|e| invalid(e.to_string()))?;
        if let Some(s) = &f.sweep {
            if s.lower.len() != nw || s.upper.len() != nw || s.counts.len() != nw || s.counts.contains(&0) {
                return Err(invalid(format!("sweep needs {nw}-dimensional lower, upper, counts")));
            }
        }
        Ok(Self {
            name: f.name.unwrap_or_else(|| "scenario".into()),
            model,
            obstacles: f.obstacles,
            collision,
            params: f.parameters,
            sweep: f.sweep,
        })
    }

    /// File representation with every default written out.
    pub fn to_file(&self) -> ScenarioFile {
        let m = &self.model;
        ScenarioFile {
            name: Some(self.name.clone()),
            model: m.kind,
            state_bounds: Some(m.state_bounds.clone()),
            control_bounds: Some(m.control_bounds.clone()),
            lowdim_state_bounds: Some(m.lowdim_state_bounds.clone()),
            lowdim_control_bounds: Some(m.lowdim_control_bounds.clone()),
            time_bounds: Some(m.time_bounds),
            body_radius: Some(m.body_radius),
            initial_state: m.initial_state.clone(),
            goal: GoalSpec {
                center: m.goal_center.clone(),
                radius: Some(m.goal_radius),
                scale: Some(m.goal_scale),
            },
            obstacles: self.obstacles.clone(),
            parameters: self.params.clone(),
            sweep: self.sweep.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }

    pub fn divisions(&self) -> Vec<usize> {
        self.params.divisions.clone().unwrap_or_else(|| vec![10; self.model.n_w()])
    }

    pub fn control_points(&self) -> Vec<usize> {
        self.params.control_points.clone().unwrap_or_else(|| vec![10; self.model.n_v()])
    }

    pub fn mark_value(&self) -> f64 {
        self.params.mark_value.unwrap_or(10.0 * self.params.rho)
    }

    pub fn infeasibility_threshold(&self) -> f64 {
        self.params
            .infeasibility_threshold
            .unwrap_or(self.model.goal_scale * self.model.lowdim_state_bounds.diameter())
    }

    /// Same scenario started from another initial state.
    pub fn with_initial_state(&self, x0: Vec<f64>) -> Self {
        let mut s = self.clone();
        s.model.initial_state = x0;
        s
    }
}

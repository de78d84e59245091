//! Per-stage adaptive grids over the low-dimensional state space.
//!
//! Each grid is a uniform lattice of root cells, any of which may be bisected
//! recursively at the midpoint of every axis. Grid points are the
//! deduplicated corners of all cells; hanging nodes are allowed and
//! interpolation always uses the containing leaf's own corners.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoxBounds;
use crate::error::{check_dim, ContractError};

pub type CellId = usize;
pub type VertexId = usize;

/// Smallest admissible child edge, relative to the grid extent on that axis.
pub const MIN_RELATIVE_EDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error("refinement limit reached on grid {grid} for cell {lower:?}..{upper:?}")]
    RefinementLimit {
        grid: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub depth: u32,
    /// Corner vertices in binary-counting order: bit `k` of the index selects
    /// the upper coordinate on axis `k`.
    pub corners: Vec<VertexId>,
    /// Children in the same binary-counting order, `None` for leaves.
    pub children: Option<Vec<CellId>>,
}

impl Cell {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        w.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *x >= *lo && *x <= *hi)
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }
}

/// Corner points of the box `[lower, upper]` in binary-counting order.
pub fn box_corners(lower: &[f64], upper: &[f64]) -> Vec<Vec<f64>> {
    let n = lower.len();
    (0..1usize << n)
        .map(|i| {
            (0..n)
                .map(|k| if i >> k & 1 == 1 { upper[k] } else { lower[k] })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub coords: Vec<f64>,
    /// Accumulated penalty marks.
    pub mark: f64,
    /// Cached `P(w)`; `NaN` until evaluated.
    pub base_penalty: f64,
    /// `ϑ(τ_j, w)`.
    pub value: f64,
    /// Minimizing `(control index, step index)` from the last sweep.
    pub policy: Option<(usize, usize)>,
    /// Outer iteration in which the vertex was created.
    pub created_iter: usize,
}

impl Vertex {
    /// `P̃ = P + marks`. Requires an evaluated base penalty.
    pub fn stage_penalty(&self) -> f64 {
        self.base_penalty + self.mark
    }
}

fn coord_key(p: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 must land on the same vertex.
    p.iter().map(|x| (x + 0.0).to_bits()).collect()
}

#[derive(Debug, Clone)]
pub struct AdaptiveGrid {
    pub time_index: usize,
    bounds: BoxBounds,
    divisions: Vec<usize>,
    /// Root lattice lines per axis.
    lines: Vec<Vec<f64>>,
    cells: Vec<Cell>,
    /// Root cells with axis 0 varying fastest.
    roots: Vec<CellId>,
    vertices: Vec<Vertex>,
    index: HashMap<Vec<u64>, VertexId>,
}

impl AdaptiveGrid {
    pub fn build_uniform(
        time_index: usize,
        bounds: &BoxBounds,
        divisions: &[usize],
    ) -> Result<Self, GridError> {
        bounds.validate()?;
        check_dim("divisions", divisions.len(), bounds.dim())?;
        if bounds.dim() == 0 {
            return Err(ContractError::new("grid dimension must be positive").into());
        }
        if divisions.iter().any(|&d| d == 0) {
            return Err(ContractError::new("divisions must be at least 1 per axis").into());
        }
        if !bounds.has_interior() {
            return Err(ContractError::new("grid bounds must have nonempty interior").into());
        }
        let n = bounds.dim();
        let lines: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let (lo, hi, d) = (bounds.lower[k], bounds.upper[k], divisions[k]);
                (0..=d)
                    .map(|i| {
                        if i == d {
                            hi
                        } else {
                            lo + (hi - lo) * i as f64 / d as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let mut grid = Self {
            time_index,
            bounds: bounds.clone(),
            divisions: divisions.to_vec(),
            lines,
            cells: Vec::new(),
            roots: Vec::new(),
            vertices: Vec::new(),
            index: HashMap::new(),
        };
        let total: usize = divisions.iter().product();
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let lower: Vec<f64> = (0..n).map(|k| grid.lines[k][idx[k]]).collect();
            let upper: Vec<f64> = (0..n).map(|k| grid.lines[k][idx[k] + 1]).collect();
            let corners = box_corners(&lower, &upper)
                .into_iter()
                .map(|p| grid.insert_vertex(p, 0.0, 0).0)
                .collect();
            grid.cells.push(Cell {
                lower,
                upper,
                depth: 0,
                corners,
                children: None,
            });
            grid.roots.push(grid.cells.len() - 1);
            for k in 0..n {
                idx[k] += 1;
                if idx[k] < divisions[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(grid)
    }

    fn insert_vertex(&mut self, coords: Vec<f64>, value: f64, iter: usize) -> (VertexId, bool) {
        let key = coord_key(&coords);
        if let Some(&id) = self.index.get(&key) {
            return (id, false);
        }
        let id = self.vertices.len();
        self.vertices.push(Vertex {
            coords,
            mark: 0.0,
            base_penalty: f64::NAN,
            value,
            policy: None,
            created_iter: iter,
        });
        self.index.insert(key, id);
        (id, true)
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    pub fn divisions(&self) -> &[usize] {
        &self.divisions
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertices_mut(&mut self) -> &mut [Vertex] {
        &mut self.vertices
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        &self.vertices[id]
    }

    pub fn vertex_mut(&mut self, id: VertexId) -> &mut Vertex {
        &mut self.vertices[id]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn find_vertex(&self, coords: &[f64]) -> Option<VertexId> {
        self.index.get(&coord_key(coords)).copied()
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id]
    }

    pub fn root_cells(&self) -> &[CellId] {
        &self.roots
    }

    pub fn leaves(&self) -> impl Iterator<Item = (CellId, &Cell)> {
        self.cells.iter().enumerate().filter(|(_, c)| c.is_leaf())
    }

    pub fn num_leaves(&self) -> usize {
        self.cells.iter().filter(|c| c.is_leaf()).count()
    }

    /// Leaf cell containing `w` (clamped to the bounds first).
    ///
    /// Shared faces resolve to the cell with larger coordinates, except on
    /// the global upper boundary.
    pub fn locate_cell(&self, w: &[f64]) -> CellId {
        let n = self.dim();
        let mut root = 0usize;
        let mut stride = 1usize;
        for k in 0..n {
            let x = w[k].clamp(self.bounds.lower[k], self.bounds.upper[k]);
            let d = self.divisions[k];
            let lines = &self.lines[k];
            let t = (x - lines[0]) / (lines[d] - lines[0]) * d as f64;
            let mut i = if t.is_finite() { (t.floor().max(0.0) as usize).min(d - 1) } else { 0 };
            while i > 0 && x < lines[i] {
                i -= 1;
            }
            while i + 1 < d && x >= lines[i + 1] {
                i += 1;
            }
            root += i * stride;
            stride *= d;
        }
        let mut id = self.roots[root];
        while let Some(children) = &self.cells[id].children {
            let c = &self.cells[id];
            let mut bits = 0usize;
            for k in 0..n {
                let x = w[k].clamp(self.bounds.lower[k], self.bounds.upper[k]);
                let mid = 0.5 * (c.lower[k] + c.upper[k]);
                if x >= mid {
                    bits |= 1 << k;
                }
            }
            id = children[bits];
        }
        id
    }

    /// Corner points of a leaf cell in binary-counting order.
    pub fn cell_vertices(&self, id: CellId) -> Result<Vec<Vec<f64>>, ContractError> {
        let c = self
            .cells
            .get(id)
            .ok_or_else(|| ContractError::new(format!("unknown cell {id}")))?;
        if !c.is_leaf() {
            return Err(ContractError::new("cell_vertices requires a leaf cell"));
        }
        Ok(box_corners(&c.lower, &c.upper))
    }

    /// Calls `f(vertex, weight)` for every corner of the leaf containing `w`
    /// with its multilinear interpolation weight.
    #[inline]
    pub fn interp_with(&self, w: &[f64], mut f: impl FnMut(VertexId, f64)) {
        let id = self.locate_cell(w);
        let c = &self.cells[id];
        let n = self.dim();
        let mut t = [0.0f64; 8];
        let mut tv;
        let ts: &mut [f64] = if n <= 8 {
            &mut t[..n]
        } else {
            tv = vec![0.0; n];
            &mut tv[..]
        };
        for k in 0..n {
            let x = w[k].clamp(self.bounds.lower[k], self.bounds.upper[k]);
            ts[k] = ((x - c.lower[k]) / (c.upper[k] - c.lower[k])).clamp(0.0, 1.0);
        }
        for (i, &v) in c.corners.iter().enumerate() {
            let mut g = 1.0;
            for (k, &tk) in ts.iter().enumerate() {
                g *= if i >> k & 1 == 1 { tk } else { 1.0 - tk };
            }
            f(v, g);
        }
    }

    /// Containing-leaf corners with multilinear weights.
    pub fn interp(&self, w: &[f64]) -> Vec<(VertexId, f64)> {
        let mut out = Vec::with_capacity(1 << self.dim());
        self.interp_with(w, |v, g| out.push((v, g)));
        out
    }

    /// Interpolated vertex value table at `w`.
    pub fn interp_value(&self, w: &[f64]) -> f64 {
        let mut s = 0.0;
        self.interp_with(w, |v, g| s += g * self.vertices[v].value);
        s
    }

    /// Bisects a leaf at its midpoint. Returns the vertices that did not exist
    /// before; their values are interpolated from the parent's corners.
    pub fn split_cell(&mut self, id: CellId, iteration: usize) -> Result<Vec<VertexId>, GridError> {
        let c = self
            .cells
            .get(id)
            .ok_or_else(|| ContractError::new(format!("unknown cell {id}")))?;
        if !c.is_leaf() {
            return Err(ContractError::new("only leaf cells can be split").into());
        }
        let n = self.dim();
        let (lower, upper, depth) = (c.lower.clone(), c.upper.clone(), c.depth);
        for k in 0..n {
            if (upper[k] - lower[k]) * 0.5 < MIN_RELATIVE_EDGE * self.bounds.extent(k) {
                return Err(GridError::RefinementLimit {
                    grid: self.time_index,
                    lower,
                    upper,
                });
            }
        }
        let mid: Vec<f64> = (0..n).map(|k| 0.5 * (lower[k] + upper[k])).collect();
        let mut created = Vec::new();
        let mut children = Vec::with_capacity(1 << n);
        for b in 0..1usize << n {
            let lo: Vec<f64> = (0..n)
                .map(|k| if b >> k & 1 == 1 { mid[k] } else { lower[k] })
                .collect();
            let hi: Vec<f64> = (0..n)
                .map(|k| if b >> k & 1 == 1 { upper[k] } else { mid[k] })
                .collect();
            let mut corners = Vec::with_capacity(1 << n);
            for p in box_corners(&lo, &hi) {
                let value = if self.find_vertex(&p).is_some() {
                    0.0
                } else {
                    self.interp_value(&p)
                };
                let (v, new) = self.insert_vertex(p, value, iteration);
                if new {
                    created.push(v);
                }
                corners.push(v);
            }
            self.cells.push(Cell {
                lower: lo,
                upper: hi,
                depth: depth + 1,
                corners,
                children: None,
            });
            children.push(self.cells.len() - 1);
        }
        self.cells[id].children = Some(children);
        Ok(created)
    }
}

/// Bracket index `j` with `τ_{j−1} < τ ≤ τ_j`; `0` for `τ ≤ τ_0`, last for `τ > τ_M`.
pub fn bracket_index(times: &[f64], tau: f64) -> usize {
    let m = times.len() - 1;
    if tau <= times[0] {
        return 0;
    }
    (1..=m).find(|&j| tau <= times[j]).unwrap_or(m)
}

/// Grids refined for a flag at `τ`: `{j−1, j} ∩ [0, M]`.
pub fn affected_grids(times: &[f64], tau: f64) -> Vec<usize> {
    let j = bracket_index(times, tau);
    if j == 0 {
        vec![0]
    } else {
        vec![j - 1, j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub grid: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Indices into the flagged list that put this cell into the splitting set.
    pub flags: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct RefineReport {
    /// New vertices per grid index.
    pub new_vertices: Vec<Vec<VertexId>>,
    pub splits: Vec<SplitRecord>,
    pub errors: Vec<GridError>,
}

impl RefineReport {
    pub fn total_new(&self) -> usize {
        self.new_vertices.iter().map(Vec::len).sum()
    }
}

/// Splits every cell that contains a flagged point on the grids determined by
/// the point's time bracket. Each cell is split at most once per call.
///
/// `times` are the waypoint times `τ_0…τ_M`, one per grid.
pub fn refine(
    grids: &mut [AdaptiveGrid],
    times: &[f64],
    flagged: &[(f64, Vec<f64>)],
    iteration: usize,
) -> Result<RefineReport, ContractError> {
    check_dim("waypoint times", times.len(), grids.len())?;
    let mut sets: Vec<BTreeSet<CellId>> = vec![BTreeSet::new(); grids.len()];
    let mut sources: HashMap<(usize, CellId), Vec<usize>> = HashMap::new();
    for (f, (tau, w)) in flagged.iter().enumerate() {
        for j in affected_grids(times, *tau) {
            check_dim("flagged point", w.len(), grids[j].dim())?;
            let c = grids[j].locate_cell(w);
            sets[j].insert(c);
            sources.entry((j, c)).or_default().push(f);
        }
    }
    let mut report = RefineReport {
        new_vertices: vec![Vec::new(); grids.len()],
        ..Default::default()
    };
    for (j, set) in sets.iter().enumerate() {
        for &c in set {
            let (lower, upper) = (grids[j].cell(c).lower.clone(), grids[j].cell(c).upper.clone());
            match grids[j].split_cell(c, iteration) {
                Ok(created) => {
                    report.new_vertices[j].extend(created);
                    report.splits.push(SplitRecord {
                        grid: j,
                        lower,
                        upper,
                        flags: sources.remove(&(j, c)).unwrap_or_default(),
                    });
                }
                Err(e) => report.errors.push(e),
            }
        }
    }
    Ok(report)
}

/// Discretized low-dimensional controls and step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    pub points: Vec<Vec<f64>>,
    pub step_sizes: Vec<f64>,
}

impl ControlGrid {
    /// Tensor lattice with `points_per_axis` values per axis spanning the box
    /// (axis 0 fastest) and `num_steps` step sizes evenly spaced in
    /// `[max(T_min/M, T_max/(M·num_steps)), T_max/M]`.
    pub fn lattice(
        controls: &BoxBounds,
        points_per_axis: &[usize],
        time_bounds: [f64; 2],
        num_stages: usize,
        num_steps: usize,
    ) -> Result<Self, ContractError> {
        controls.validate()?;
        check_dim("control points per axis", points_per_axis.len(), controls.dim())?;
        if points_per_axis.iter().any(|&p| p == 0) || num_steps == 0 || num_stages == 0 {
            return Err(ContractError::new(
                "control grid needs at least one point per axis, one step size and one stage",
            ));
        }
        let axes: Vec<Vec<f64>> = (0..controls.dim())
            .map(|k| linspace(controls.lower[k], controls.upper[k], points_per_axis[k]))
            .collect();
        let total: usize = points_per_axis.iter().product();
        let mut points = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            points.push(idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect());
            for k in 0..axes.len() {
                idx[k] += 1;
                if idx[k] < points_per_axis[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        let m = num_stages as f64;
        let hi = time_bounds[1] / m;
        let lo = (time_bounds[0] / m).max(hi / num_steps as f64);
        Ok(Self {
            points,
            step_sizes: linspace(lo, hi, num_steps),
        })
    }

    pub fn validate(
        &self,
        controls: &BoxBounds,
        time_bounds: [f64; 2],
        num_stages: usize,
    ) -> Result<(), ContractError> {
        if self.points.is_empty() || self.step_sizes.is_empty() {
            return Err(ContractError::new("control grid is empty"));
        }
        if let Some(p) = self.points.iter().find(|p| !controls.contains(p)) {
            return Err(ContractError::new(format!("control point {p:?} is outside V")));
        }
        let m = num_stages as f64;
        let (lo, hi) = (time_bounds[0] / m, time_bounds[1] / m);
        let tol = 1e-12 * hi.abs().max(1.0);
        if let Some(h) = self
            .step_sizes
            .iter()
            .find(|&&h| !(h > 0.0 && h >= lo - tol && h <= hi + tol))
        {
            return Err(ContractError::new(format!(
                "step size {h} is outside ({lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

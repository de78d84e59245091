//! SVG snapshots of the low-dimensional planning space: leaf cells and
//! vertices of every stage grid, obstacles, waypoints and the trajectory
//! image under `Ω`.

use std::fmt::Write as _;

use crate::scheme::Snapshot;

const SIZE: f64 = 800.0;
const PALETTE: [&str; 8] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
];

/// Renders a snapshot. Only the first two low-dimensional coordinates are drawn.
pub fn render(snap: &Snapshot) -> String {
    let b = snap.scenario.model.lowdim_state_bounds.clone();
    let (x0, y0) = (b.lower[0], b.lower.get(1).copied().unwrap_or(0.0));
    let sx = SIZE / b.extent(0);
    let sy = if b.dim() > 1 { SIZE / b.extent(1) } else { 1.0 };
    let px = |x: f64| (x - x0) * sx;
    let py = |y: f64| SIZE - (y - y0) * sy;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" data-iteration="{}">"##,
        snap.record.iteration
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"##);
    for o in &snap.scenario.obstacles {
        let _ = writeln!(
            out,
            r##"<rect class="obstacle" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#444"/>"##,
            px(o.xmin),
            py(o.ymax),
            (o.xmax - o.xmin) * sx,
            (o.ymax - o.ymin) * sy
        );
    }
    for g in snap.grids {
        let _ = writeln!(
            out,
            r##"<g class="grid" data-grid="{}" data-vertices="{}" data-leaves="{}">"##,
            g.time_index,
            g.num_vertices(),
            g.num_leaves()
        );
        for (_, c) in g.leaves() {
            let (cy0, cy1) = (c.lower.get(1).copied().unwrap_or(y0), c.upper.get(1).copied().unwrap_or(y0));
            let _ = writeln!(
                out,
                r##"<rect class="cell" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#bbb" stroke-width="0.5"/>"##,
                px(c.lower[0]),
                py(cy1),
                (c.upper[0] - c.lower[0]) * sx,
                (cy1 - cy0) * sy
            );
        }
        for v in g.vertices() {
            let color = PALETTE[v.created_iter % PALETTE.len()];
            let _ = writeln!(
                out,
                r##"<circle class="vertex" cx="{:.3}" cy="{:.3}" r="1.5" fill="{color}" data-iter="{}"/>"##,
                px(v.coords[0]),
                py(v.coords.get(1).copied().unwrap_or(y0)),
                v.created_iter
            );
        }
        let _ = writeln!(out, "</g>");
    }
    if let Some(traj) = snap.trajectory {
        let pts: Vec<String> = traj
            .states
            .iter()
            .map(|x| {
                let w = snap.scenario.model.forward_map(x);
                format!("{:.3},{:.3}", px(w[0]), py(w[1]))
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline class="trajectory" points="{}" fill="none" stroke="#2a9d8f" stroke-width="2"/>"##,
            pts.join(" ")
        );
    }
    for w in &snap.waypoints.points {
        let _ = writeln!(
            out,
            r##"<circle class="waypoint" cx="{:.3}" cy="{:.3}" r="4" fill="none" stroke="#d62828" stroke-width="1.5"/>"##,
            px(w[0]),
            py(w.get(1).copied().unwrap_or(y0))
        );
    }
    let goal = &snap.scenario.model.goal_center;
    let _ = writeln!(
        out,
        r##"<circle class="goal" cx="{:.3}" cy="{:.3}" r="{:.3}" fill="none" stroke="#2a9d8f" stroke-dasharray="4 3"/>"##,
        px(goal[0]),
        py(goal[1]),
        snap.scenario.model.goal_radius * sx
    );
    out.push_str("</svg>\n");
    out
}

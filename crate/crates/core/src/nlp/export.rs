use std::fmt::Write as _;
use std::io;
use std::path::Path;

use super::Trajectory;

/// CSV with header `t,x_1..x_n,u_1..u_m`; controls sit on the left node of
/// each interval and the last row leaves them blank.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let nx = traj.states.first().map_or(0, Vec::len);
    let nu = traj.controls.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for k in 1..=nx {
        let _ = write!(out, ",x_{k}");
    }
    for k in 1..=nu {
        let _ = write!(out, ",u_{k}");
    }
    out.push('\n');
    for (i, (t, x)) in traj.times.iter().zip(&traj.states).enumerate() {
        let _ = write!(out, "{t}");
        for v in x {
            let _ = write!(out, ",{v}");
        }
        match traj.controls.get(i) {
            Some(u) => {
                for v in u {
                    let _ = write!(out, ",{v}");
                }
            }
            None => out.push_str(&",".repeat(nu)),
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> io::Result<()> {
    std::fs::write(path, trajectory_csv(traj))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_blank_last_controls() {
        let traj = Trajectory {
            times: vec![0.0, 1.0],
            states: vec![vec![0.0, 1.0], vec![2.0, 3.0]],
            controls: vec![vec![0.5]],
            final_time: 1.0,
            kkt_residual: 0.0,
            objective_value: 0.0,
        };
        let csv = trajectory_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, vec!["t,x_1,x_2,u_1", "0,0,1,0.5", "1,2,3,"]);
    }
}

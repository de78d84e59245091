//! `dpnlp` command-line runner: single scenario runs, initial-condition
//! campaigns and scenario validation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dpnlp_core::nlp::write_trajectory_csv;
use dpnlp_core::scenario::SweepSpec;
use dpnlp_core::scheme::{self, CampaignRow, Snapshot};
use dpnlp_core::{svg, Mode, ObjectiveVariant, OutcomeStatus, Scenario, SchemeConfig};

#[derive(Parser)]
#[command(name = "dpnlp", version, about = "Grid-adaptive DP + NLP trajectory planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trajectory, log, summary and snapshots.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Adaptive)]
        mode: ModeArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the scenario's iteration cap.
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = Toggle::On)]
        svg: Toggle,
    },
    /// Run every sweep point of a scenario under the chosen modes.
    Campaign {
        #[arg(long)]
        scenario: PathBuf,
        /// `xlo,ylo:xhi,yhi:nx,ny`; defaults to the scenario's sweep.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "adaptive,fixed")]
        modes: Vec<ModeArg>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "step-weighted")]
        variants: Vec<VariantArg>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parse and validate a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Adaptive,
    Fixed,
    FullNlp,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Adaptive => Mode::Adaptive,
            ModeArg::Fixed => Mode::FixedGrid,
            ModeArg::FullNlp => Mode::FullNlp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    StepWeighted,
    Unweighted,
}

impl From<VariantArg> for ObjectiveVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::StepWeighted => ObjectiveVariant::StepWeighted,
            VariantArg::Unweighted => ObjectiveVariant::Unweighted,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    mode: &'a str,
    status: OutcomeStatus,
    iterations: usize,
    final_time: Option<f64>,
    objective: Option<f64>,
    wall_time: f64,
    message: Option<&'a str>,
}

fn exit_code(status: OutcomeStatus) -> u8 {
    match status {
        OutcomeStatus::Feasible => 0,
        OutcomeStatus::Infeasible => 2,
        OutcomeStatus::IterLimit => 3,
    }
}

fn load(path: &Path, max_iters: Option<usize>) -> Result<Scenario> {
    let mut s = Scenario::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(k) = max_iters {
        s.params.max_iters = k;
    }
    Ok(s)
}

fn install_pool(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker pool")?;
    }
    Ok(())
}

fn cmd_run(
    path: &Path,
    mode: Mode,
    out: &Path,
    max_iters: Option<usize>,
    workers: Option<usize>,
    svg_on: bool,
) -> Result<u8> {
    let scenario = load(path, max_iters)?;
    install_pool(workers)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cfg = SchemeConfig::from_scenario(&scenario, mode)?;

    let mut log = fs::File::create(out.join("log.jsonl"))?;
    let mut io_error: Option<std::io::Error> = None;
    let mut observer = |snap: &Snapshot| {
        let mut write = || -> std::io::Result<()> {
            serde_json::to_writer(&mut log, snap.record)?;
            log.write_all(b"\n")?;
            if svg_on {
                let file = out.join(format!("iter_{}.svg", snap.record.iteration));
                fs::write(file, svg::render(snap))?;
            }
            Ok(())
        };
        if let Err(e) = write() {
            io_error.get_or_insert(e);
        }
    };
    let outcome = scheme::run(&scenario, &cfg, Some(&mut observer))?;
    if let Some(e) = io_error {
        return Err(e).context("writing iteration artifacts");
    }
    if let Some(traj) = &outcome.trajectory {
        write_trajectory_csv(&out.join("trajectory.csv"), traj)?;
    }
    let summary = Summary {
        scenario: &scenario.name,
        mode: mode.label(),
        status: outcome.status,
        iterations: outcome.iterations.len(),
        final_time: outcome.final_time(),
        objective: outcome.objective(),
        wall_time: outcome.wall_time,
        message: outcome.message.as_deref(),
    };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    println!(
        "{}: {:?} after {} iterations in {:.2} s",
        mode.label(),
        outcome.status,
        outcome.iterations.len(),
        outcome.wall_time
    );
    Ok(exit_code(outcome.status))
}

fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("sweep must look like xlo,ylo:xhi,yhi:nx,ny");
    }
    let floats = |s: &str| -> Result<Vec<f64>> {
        s.split(',').map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number {v:?}"))).collect()
    };
    let lower = floats(parts[0])?;
    let upper = floats(parts[1])?;
    let counts = parts[2]
        .split(',')
        .map(|v| v.trim().parse::<usize>().with_context(|| format!("bad count {v:?}")))
        .collect::<Result<Vec<_>>>()?;
    if lower.len() != upper.len() || lower.len() != counts.len() || counts.iter().any(|&c| c == 0) {
        bail!("sweep bounds and counts must have matching lengths and positive counts");
    }
    Ok(SweepSpec { lower, upper, counts })
}

fn campaign_csv(rows: &[CampaignRow]) -> String {
    let mut s = String::from("seed,start,mode,variant,status,iterations,wall_time,error\n");
    for r in rows {
        let start = r.start.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ");
        let status = match r.status {
            Some(st) => format!("{st:?}"),
            None if r.error.is_some() => "Error".to_string(),
            None => "Skipped".to_string(),
        };
        let err = r.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        s.push_str(&format!(
            "{},{},{},{:?},{},{},{:.3},\"{}\"\n",
            r.seed,
            start,
            r.mode.label(),
            r.variant,
            status,
            r.iterations,
            r.wall_time,
            err
        ));
    }
    s
}

fn cmd_campaign(
    path: &Path,
    sweep: Option<&str>,
    modes: &[Mode],
    variants: &[ObjectiveVariant],
    out: &Path,
    max_iters: Option<usize>,
    workers: Option<usize>,
) -> Result<u8> {
    let scenario = load(path, max_iters)?;
    install_pool(workers)?;
    let sweep = match sweep {
        Some(text) => parse_sweep(text)?,
        None => scenario.sweep.clone().context("scenario has no sweep and none was given")?,
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let starts = sweep.points();
    let rows = scheme::run_campaign(&scenario, &starts, modes, variants);
    fs::write(out.join("campaign.csv"), campaign_csv(&rows))?;
    for &mode in modes {
        for &variant in variants {
            let sel: Vec<_> = rows.iter().filter(|r| r.mode == mode && r.variant == variant).collect();
            let ok = sel.iter().filter(|r| r.status == Some(OutcomeStatus::Feasible)).count();
            let skipped = sel.iter().filter(|r| r.status.is_none()).count();
            println!("{} {:?}: {ok}/{} feasible, {skipped} skipped", mode.label(), variant, sel.len());
        }
    }
    Ok(0)
}

fn cmd_validate(path: &Path) -> Result<u8> {
    let s = load(path, None)?;
    SchemeConfig::from_scenario(&s, Mode::Adaptive)?;
    println!(
        "{}: {:?}, {} obstacles, {} stages, {} intervals",
        s.name,
        s.model.kind,
        s.obstacles.len(),
        s.params.num_steps,
        s.params.intervals
    );
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, mode, out, max_iters, workers, svg } => {
            cmd_run(&scenario, mode.into(), &out, max_iters, workers, svg == Toggle::On)
        }
        Command::Campaign { scenario, sweep, modes, variants, out, max_iters, workers } => {
            let modes: Vec<Mode> = modes.into_iter().map(Into::into).collect();
            let variants: Vec<ObjectiveVariant> = variants.into_iter().map(Into::into).collect();
            cmd_campaign(&scenario, sweep.as_deref(), &modes, &variants, &out, max_iters, workers)
        }
        Command::Validate { scenario } => cmd_validate(&scenario),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front end: run simulations, coupling sweeps, perturbation
//! studies, pressure-model self-checks and energy audits of saved runs.
//!
//! Exit codes: 0 when every asserted criterion passes, 2 when a criterion is
//! violated, 1 on runtime errors (bad config, solver divergence, i/o).

use clap::{Parser, Subcommand, ValueEnum};
use nsk::diagnostics;
use nsk::harness::report;
use nsk::harness::{sweep_alpha, weak_strong_study, ExperimentConfig, InitProfile};
use nsk::solver::{container, run, SnapshotPlan, SystemKind};
use nsk::thermo;
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nsk",
    about = "1D relaxation laboratory for capillary two-phase flow"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Relaxed,
    Nsk,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write trajectory, CSV and plots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "relaxed")]
        system: SystemArg,
    },
    /// Sweep the coupling strength against a grid-converged reference.
    SweepAlpha {
        #[arg(long)]
        config: PathBuf,
    },
    /// Perturbation stability study.
    WeakStrong {
        #[arg(long)]
        config: PathBuf,
    },
    /// Verify the pressure-potential identities of a preset and print the
    /// report as JSON.
    ThermoCheck {
        #[arg(long)]
        preset: String,
    },
    /// Audit a saved trajectory: energy budget, order-parameter gap estimate
    /// and mean-of-c consistency; optionally against a reference trajectory.
    EnergyAudit {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<bool, Box<dyn std::error::Error>> {
    match cmd {
        Command::Simulate { config, system } => simulate(&config, system),
        Command::SweepAlpha { config } => sweep(&config),
        Command::WeakStrong { config } => weak_strong(&config),
        Command::ThermoCheck { preset } => thermo_check(&preset),
        Command::EnergyAudit {
            trajectory,
            reference,
        } => energy_audit(&trajectory, reference.as_deref()),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    Ok(ExperimentConfig::from_toml(&fs::read_to_string(path)?)?)
}

fn simulate(config: &Path, system: SystemArg) -> Result<bool, Box<dyn std::error::Error>> {
    let cfg = load_config(config)?;
    let params = cfg.params.build()?;
    let system = match system {
        SystemArg::Relaxed => SystemKind::Relaxed,
        SystemArg::Nsk => SystemKind::Nsk,
    };
    let init = InitProfile::new(cfg.init.clone()).state(params.grid);
    let traj = run(
        system,
        &params,
        &init,
        &SnapshotPlan::EveryNSteps(params.snapshot_every),
    )?;
    let outdir = PathBuf::from(&cfg.output.dir);
    report::emit_trajectory(&traj, &outdir)?;

    let budget = diagnostics::energy_budget_check(&traj, diagnostics::C_SCHEME_DEFAULT);
    let summary = json!({
        "system": match system { SystemKind::Relaxed => "relaxed", SystemKind::Nsk => "nsk" },
        "steps": traj.steps.len(),
        "snapshots": traj.snapshots.len(),
        "floor_events": traj.floor_events,
        "final_mass": traj.final_state().mass(),
        "energy_budget": budget,
    });
    fs::write(
        outdir.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(budget.pass)
}

fn sweep(config: &Path) -> Result<bool, Box<dyn std::error::Error>> {
    let cfg = load_config(config)?;
    let rep = sweep_alpha(&cfg)?;
    let outdir = PathBuf::from(&cfg.output.dir);
    report::emit_sweep(&rep, &outdir)?;
    println!("{}", report::to_json(&rep));
    Ok(!rep.reference_limited && rep.bound_satisfied)
}

fn weak_strong(config: &Path) -> Result<bool, Box<dyn std::error::Error>> {
    let cfg = load_config(config)?;
    let rep = weak_strong_study(&cfg)?;
    let outdir = PathBuf::from(&cfg.output.dir);
    report::emit_weak_strong(&rep, &outdir)?;
    println!("{}", report::to_json(&rep));
    Ok(rep.pass_spread && rep.pass_slope)
}

fn thermo_check(preset: &str) -> Result<bool, Box<dyn std::error::Error>> {
    let model = thermo::PressureModel::preset(preset)?;
    model.validate()?;
    let rep = thermo::verify_identities(&model, &thermo::logspace_samples())?;
    let spinodal = thermo::spinodal_interval(&model, 10.0)?;
    let out = json!({
        "preset": preset,
        "gamma": model.gamma(),
        "h_inf": model.h_inf(),
        "q_lipschitz": model.q_lipschitz(),
        "spinodal": spinodal,
        "identities": rep,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    let pass = out["identities"]["pass"].as_bool().unwrap_or(false);
    Ok(pass)
}

fn energy_audit(
    trajectory: &Path,
    reference: Option<&Path>,
) -> Result<bool, Box<dyn std::error::Error>> {
    let traj = container::read_trajectory(&mut fs::File::open(trajectory)?)?;
    let params = traj.params.clone();
    let budget = diagnostics::energy_budget_check(&traj, diagnostics::C_SCHEME_DEFAULT);
    let relaxed = traj.system == SystemKind::Relaxed;

    let reference_traj = reference
        .map(|p| -> Result<_, Box<dyn std::error::Error>> {
            Ok(container::read_trajectory(&mut fs::File::open(p)?)?)
        })
        .transpose()?;

    let poincare = if relaxed {
        Some(diagnostics::poincare_report(
            &traj,
            reference_traj.as_ref(),
            &params,
        )?)
    } else {
        None
    };
    let mean_c = relaxed.then(|| diagnostics::mean_c_report(&traj));
    let ws_mean = reference_traj
        .as_ref()
        .map(|r| diagnostics::ws_mean_check(&traj, r))
        .transpose()?;

    let mut pass = budget.pass;
    if let Some(p) = &poincare {
        pass &= p.pass;
    }
    if let Some(m) = &mean_c {
        pass &= m.pass;
    }
    if let Some(w) = &ws_mean {
        pass &= w.pass;
    }
    let out = json!({
        "budget": budget,
        "poincare": poincare,
        "mean_c": mean_c,
        "ws_mean": ws_mean,
        "pass": pass,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(pass)
}

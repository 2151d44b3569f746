//! Report emission: deterministic JSON, CSV tables and SVG plots.
//!
//! Identical inputs produce byte-identical files (field order is fixed by
//! the struct definitions, no timestamps or machine specifics are embedded),
//! which is what the determinism guarantee of the CLI rests on.

use super::config::HarnessError;
use super::experiments::{SweepReport, WeakStrongReport};
use super::svg::{line_plot, Series};
use crate::solver::{container, Trajectory};
use std::fs;
use std::path::Path;

/// Serialize any report as pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Names of the six bundle norms, in report order.
pub const NORM_NAMES: [&str; 6] = [
    "kinetic_sq",
    "density_sq",
    "coupling_sq",
    "order_parameter_h1_sq",
    "velocity_h1_time_sq",
    "c_rate_sq",
];

/// CSV table of a sweep: one row per coupling strength.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("alpha,beta,rate_s,bundle_sum,");
    out.push_str(&NORM_NAMES.join(","));
    out.push('\n');
    for m in &report.members {
        let norms = m.bundle.as_array();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            m.alpha,
            m.beta,
            m.bundle.rate_s,
            m.bundle_sum,
            norms[0],
            norms[1],
            norms[2],
            norms[3],
            norms[4],
            norms[5]
        ));
    }
    out
}

/// Log-log chart of the summed bundle and the individual norms vs alpha,
/// annotated with the fitted slope.
pub fn sweep_svg(report: &SweepReport) -> String {
    let mut series = vec![Series {
        label: "bundle sum".into(),
        points: report
            .members
            .iter()
            .map(|m| (m.alpha, m.bundle_sum))
            .collect(),
    }];
    for (i, name) in NORM_NAMES.iter().enumerate() {
        series.push(Series {
            label: (*name).into(),
            points: report
                .members
                .iter()
                .map(|m| (m.alpha, m.bundle.as_array()[i]))
                .collect(),
        });
    }
    let note = report
        .slope_sum
        .map(|f| format!("fitted slope {:.3} +/- {:.3}", f.slope, f.stderr));
    line_plot(
        "norm bundle vs coupling strength",
        "alpha",
        "squared norms",
        &series,
        true,
        true,
        note.as_deref(),
    )
}

/// CSV table of the perturbation study.
pub fn weak_strong_csv(report: &WeakStrongReport) -> String {
    let mut out =
        String::from("epsilon,initial_relative_energy,sup_relative_energy,growth_ratio\n");
    for m in &report.members {
        out.push_str(&format!(
            "{},{},{},{}\n",
            m.epsilon, m.initial_relative_energy, m.sup_relative_energy, m.growth_ratio
        ));
    }
    out
}

/// Log-log chart of the sup relative energy vs perturbation size.
pub fn weak_strong_svg(report: &WeakStrongReport) -> String {
    let series = [Series {
        label: "sup relative energy".into(),
        points: report
            .members
            .iter()
            .map(|m| (m.epsilon, m.sup_relative_energy))
            .collect(),
    }];
    let note = report
        .slope
        .map(|f| format!("fitted slope {:.3} (quadratic expected)", f.slope));
    line_plot(
        "relative energy vs perturbation size",
        "epsilon",
        "sup relative energy",
        &series,
        true,
        true,
        note.as_deref(),
    )
}

/// Energy trace of a run.
pub fn energy_svg(traj: &Trajectory) -> String {
    let energy = Series {
        label: "energy".into(),
        points: traj.steps.iter().map(|s| (s.t, s.energy)).collect(),
    };
    let budget = Series {
        label: "energy + cumulative dissipation".into(),
        points: {
            let mut acc = 0.0;
            traj.steps
                .iter()
                .map(|s| {
                    acc += s.dt * s.dissipation_rate;
                    (s.t, s.energy + acc)
                })
                .collect()
        },
    };
    line_plot(
        "energy budget",
        "t",
        "energy",
        &[energy, budget],
        false,
        false,
        None,
    )
}

/// Write every artifact of a sweep into `dir`.
pub fn emit_sweep(report: &SweepReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("sweep.json"), to_json(report))?;
    fs::write(dir.join("sweep.csv"), sweep_csv(report))?;
    fs::write(dir.join("norms_vs_alpha.svg"), sweep_svg(report))?;
    Ok(())
}

/// Write every artifact of a perturbation study into `dir`.
pub fn emit_weak_strong(report: &WeakStrongReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("weak_strong.json"), to_json(report))?;
    fs::write(dir.join("weak_strong.csv"), weak_strong_csv(report))?;
    fs::write(dir.join("rel_energy_vs_epsilon.svg"), weak_strong_svg(report))?;
    Ok(())
}

/// Write a plain run: binary trajectory, per-step CSV, final-state field
/// CSVs and the energy chart.
pub fn emit_trajectory(traj: &Trajectory, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut buf = Vec::new();
    container::write_trajectory(&mut buf, traj)?;
    fs::write(dir.join("trajectory.bin"), buf)?;
    fs::write(dir.join("steps.csv"), traj.steps_to_csv())?;
    let last = traj.final_state();
    fs::write(dir.join("final_rho.csv"), last.rho.to_csv())?;
    fs::write(dir.join("final_mom.csv"), last.mom.to_csv())?;
    fs::write(dir.join("final_c.csv"), last.c.to_csv())?;
    fs::write(dir.join("energy.svg"), energy_svg(traj))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::experiments::SweepReport;

    fn empty_sweep() -> SweepReport {
        SweepReport {
            members: Vec::new(),
            reference_error: 0.0,
            reference_order: None,
            reference_limited: false,
            slope_sum: None,
            slopes: vec![None; 6],
            k_fit: vec![0.0; 6],
            bound_satisfied: true,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn empty_sweep_emits_valid_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = empty_sweep();
        emit_sweep(&report, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert!(csv.starts_with("alpha,beta,rate_s,bundle_sum"));
        assert_eq!(csv.lines().count(), 1);
        let svg = fs::read_to_string(dir.path().join("norms_vs_alpha.svg")).unwrap();
        assert!(svg.contains("</svg>"));
        let json = fs::read_to_string(dir.path().join("sweep.json")).unwrap();
        let back: SweepReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn json_round_trip_preserves_report() {
        let mut report = empty_sweep();
        report.k_fit = vec![1.5, 2.0, 0.25, 0.125, 3.0, 0.75];
        report.warnings.push("note".into());
        let json = to_json(&report);
        let back: SweepReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}

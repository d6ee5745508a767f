//! Canned scenarios behind `periscope demo`.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::frobenius::{self, GnomonicChart, Point3, VectorField3};
use crate::grid::lattice;

use super::config::{Scenario, ScenarioConfig};
use super::{run, RunError, RunOutcome};

pub const DEMO_NAMES: [&str; 4] = [
    "spherical-bump",
    "reversed-affine",
    "frobenius-contact",
    "s3-pullback",
];

const SPHERICAL_BUMP: &str = include_str!("../../scenarios/spherical-bump.json");
const REVERSED_AFFINE: &str = include_str!("../../scenarios/reversed-affine.json");
const S3_PULLBACK: &str = include_str!("../../scenarios/s3-pullback.json");

/// Tolerance on the contact field's defect, which is exactly `-1`.
const CONTACT_TOL: f64 = 1e-8;
/// Constant added to the pulled-back field in the negative control.
const PERTURBATION: f64 = 0.3;

/// Bundled config of a periscope demo.
pub fn demo_config(name: &str) -> Option<ScenarioConfig> {
    let text = match name {
        "spherical-bump" => SPHERICAL_BUMP,
        "reversed-affine" => REVERSED_AFFINE,
        "s3-pullback" => S3_PULLBACK,
        _ => return None,
    };
    Some(ScenarioConfig::from_json(text).expect("bundled config is valid"))
}

fn unknown(name: &str) -> RunError {
    RunError::Config(format!(
        "unknown demo '{name}'; available: {}",
        DEMO_NAMES.join(", ")
    ))
}

fn io(e: std::io::Error) -> RunError {
    RunError::Io(e.to_string())
}

/// Runs demo `name`, writes its outputs under `out_dir` (default
/// `periscope-out/<name>`) and prints a short report. Returns the exit code.
pub fn demo(
    name: &str,
    out_dir: Option<&Path>,
    jobs: Option<usize>,
    out: &mut dyn Write,
) -> Result<i32, RunError> {
    if !DEMO_NAMES.contains(&name) {
        return Err(unknown(name));
    }
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("periscope-out").join(name));
    if name == "frobenius-contact" {
        return contact(&dir, out);
    }
    let config = demo_config(name).ok_or_else(|| unknown(name))?;
    let outcome = run(&config, Some(&dir), jobs)?;
    print_outcome(name, &outcome, out)?;
    if name == "s3-pullback" {
        let control = s3_negative_control(&config)?;
        writeln!(
            out,
            "  perturbed field (V + {PERTURBATION} e): max |defect| = {control:.3e} (must exceed 1e-2)"
        )
        .map_err(io)?;
        if !(control > 1e-2) {
            return Ok(2);
        }
    }
    Ok(outcome.exit_code())
}

fn print_outcome(name: &str, outcome: &RunOutcome, out: &mut dyn Write) -> Result<(), RunError> {
    let s = &outcome.summary;
    writeln!(out, "{name}: {} points", s.points).map_err(io)?;
    for (check, c) in &s.checks {
        writeln!(
            out,
            "  {check:<10} {}  max {:.3e}  tol {:.0e}  failed points {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.max,
            c.tolerance,
            c.failed
        )
        .map_err(io)?;
    }
    for path in [&outcome.csv_path, &outcome.summary_path]
        .into_iter()
        .flatten()
    {
        writeln!(out, "  wrote {}", path.display()).map_err(io)?;
    }
    Ok(())
}

/// Chart used by the negative control: centered on the patch, inscribed in it.
fn s3_chart(
    config: &ScenarioConfig,
) -> Result<(crate::spherical::SphericalPeriscopeSpec, GnomonicChart), RunError> {
    let Scenario::Spherical(spec) = config.build()? else {
        return Err(RunError::Config("s3-pullback must be spherical".into()));
    };
    let half_width = spec.patch.radius.tan() / 3f64.sqrt();
    let chart = GnomonicChart::new(spec.patch.center.clone(), half_width)
        .map_err(|e| RunError::Config(e.to_string()))?;
    Ok((spec, chart))
}

/// Largest defect of the pulled-back field plus a constant transverse to its curl.
pub fn s3_negative_control(config: &ScenarioConfig) -> Result<f64, RunError> {
    let (spec, chart) = s3_chart(config)?;
    let field = frobenius::periscope_field_pullback(&spec, &chart).map_err(RunError::Infeasible)?;
    let step = config.frobenius_step();
    let perturbed = transverse_perturbation(&field, step)?;
    let w = chart.half_width;
    let mut max = 0.0f64;
    for node in lattice(&config.grid, &[-w; 3], &[w; 3]) {
        let p = Point3::from_column_slice(&node.coords);
        let d = frobenius::frobenius_defect(&perturbed, &p, step).map_err(RunError::Infeasible)?;
        max = max.max(d.abs());
    }
    Ok(max)
}

/// `V + c` with `c` a constant of length 0.3 along `curl V` at the origin.
pub fn transverse_perturbation(field: &VectorField3, step: f64) -> Result<VectorField3, RunError> {
    let curl = frobenius::exterior_derivative(field, &Point3::zeros(), step)
        .map_err(RunError::Infeasible)?;
    let len = curl.norm();
    let dir = if len > 0.0 { curl / len } else { Point3::x() };
    Ok(field.plus_constant(dir * PERTURBATION))
}

/// Contact structure `(y, 0, 1)`, whose defect is `-1` everywhere.
pub fn contact_field() -> VectorField3 {
    VectorField3::analytic(|p| Point3::new(p.y, 0.0, 1.0))
}

fn contact(dir: &Path, out: &mut dyn Write) -> Result<i32, RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let field = contact_field();
    let path = dir.join(super::CSV_NAME);
    let csv_io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)
        .map_err(csv_io)?;
    w.write_record(["i", "j", "k", "x0", "x1", "x2", "frobenius_defect", "flag"])
        .map_err(csv_io)?;
    let mut worst = 0.0f64;
    let mut sum = 0.0;
    let nodes = lattice(&[3, 3, 3], &[-1.0; 3], &[1.0; 3]);
    let count = nodes.len();
    for node in nodes {
        let p = Point3::from_column_slice(&node.coords);
        let d = frobenius::frobenius_defect(&field, &p, frobenius::DEFAULT_STEP)
            .map_err(RunError::Infeasible)?;
        worst = worst.max((d + 1.0).abs());
        sum += d;
        let mut row: Vec<String> = node.index.iter().map(|i| i.to_string()).collect();
        row.extend(node.coords.iter().map(|c| format!("{c}")));
        row.push(format!("{d}"));
        row.push(String::new());
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush().map_err(|e| RunError::Io(e.to_string()))?;
    let pass = worst <= CONTACT_TOL;
    writeln!(out, "frobenius-contact: {count} points").map_err(io)?;
    writeln!(
        out,
        "  defect {:.6}  max deviation from -1 {worst:.3e}  {}",
        sum / count as f64,
        if pass { "PASS" } else { "FAIL" }
    )
    .map_err(io)?;
    writeln!(out, "  wrote {}", path.display()).map_err(io)?;
    Ok(if pass { 0 } else { 2 })
}

//! JSON-configured batch runs and canned demos.
//!
//! A run builds the mirror spec from a [`ScenarioConfig`], evaluates the
//! selected checks at every lattice node in parallel, and writes a per-point
//! CSV plus a JSON summary. Output is byte-identical for any thread count.

mod config;
mod demo;
mod report;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::error::Error;
use crate::frobenius::{self, FrobeniusReport, GnomonicChart, Point3, VectorField3};
use crate::geom::Vector;
use crate::grid::Node;
use crate::reversed::ReversedPeriscopeSpec;
use crate::spherical::{closed_form, SphericalPeriscopeSpec};
use crate::trace;

pub use config::{
    Check, DomainConfig, FamilyKind, FrobeniusConfig, MirrorConfig, OutputConfig, OutputFormat,
    PatchConfig, ResolvedTolerances, Scenario, ScenarioConfig, ScenarioKind, Tolerances,
    FROBENIUS_TOL, MAX_GRID_COUNT, SYNTHESIZE_TOL, TRACE_TOL_ANALYTIC, TRACE_TOL_FD,
};
pub use demo::{
    contact_field, demo, demo_config, s3_negative_control, transverse_perturbation, DEMO_NAMES,
};
pub use report::{CheckSummary, PointRecord, RunSummary};

/// Failures that stop a run before any check verdict.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Infeasible(Error),
}

impl RunError {
    /// Process exit code: 2 for an infeasible spec, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Infeasible(_) => 2,
            _ => 1,
        }
    }
}

/// Outcome of a completed run.
#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<PointRecord>,
    pub summary: RunSummary,
    pub csv_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.pass {
            0
        } else {
            2
        }
    }
}

pub const CSV_NAME: &str = "report.csv";
pub const SUMMARY_NAME: &str = "summary.json";

/// Evaluates every check and returns the records and summary without writing.
pub fn evaluate(config: &ScenarioConfig) -> Result<(Vec<PointRecord>, RunSummary), RunError> {
    let scenario = config.build()?;
    let checks = config.checks.clone();
    let step = config.frobenius_step();
    let records = match &scenario {
        Scenario::Spherical(spec) => {
            let nodes = spec
                .patch
                .grid(&config.grid)
                .map_err(|e| RunError::Config(e.to_string()))?;
            let field = if checks.contains(&Check::Frobenius) {
                let half_width = spec.patch.radius.tan() / 3f64.sqrt();
                let chart = GnomonicChart::new(spec.patch.center.clone(), half_width)
                    .map_err(|e| RunError::Config(e.to_string()))?;
                Some(
                    frobenius::periscope_field_pullback(spec, &chart)
                        .map(|f| (f, chart))
                        .map_err(|e| e.to_string()),
                )
            } else {
                None
            };
            nodes
                .into_par_iter()
                .map(|(node, x)| spherical_record(spec, &checks, field.as_ref(), step, node, x))
                .collect::<Vec<_>>()
        }
        Scenario::Reversed(spec) => {
            let nodes = spec
                .domain
                .grid(&config.grid)
                .map_err(|e| RunError::Config(e.to_string()))?;
            let field = checks
                .contains(&Check::Frobenius)
                .then(|| frobenius::reversed_displacement_field(spec).map_err(|e| e.to_string()));
            nodes
                .into_par_iter()
                .map(|(node, x)| reversed_record(spec, &checks, field.as_ref(), step, node, x))
                .collect::<Vec<_>>()
        }
    };
    let summary = RunSummary::build(config, &records);
    Ok((records, summary))
}

/// Runs a scenario and writes its outputs under `out_dir` (or the configured
/// output path when `out_dir` is `None`). `jobs` bounds the worker threads.
pub fn run(
    config: &ScenarioConfig,
    out_dir: Option<&Path>,
    jobs: Option<usize>,
) -> Result<RunOutcome, RunError> {
    let (records, summary) = with_pool(jobs, || evaluate(config))??;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| config.output.path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("periscope-out"));
    std::fs::create_dir_all(&dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let (csv, json) = match config.output.format {
        OutputFormat::CsvJson => (true, true),
        OutputFormat::Csv => (true, false),
        OutputFormat::Json => (false, true),
    };
    let csv_path = if csv {
        let path = dir.join(CSV_NAME);
        report::write_csv(&path, config, &records)?;
        Some(path)
    } else {
        None
    };
    let summary_path = if json {
        let path = dir.join(SUMMARY_NAME);
        let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        text.push('\n');
        std::fs::write(&path, text)
            .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        Some(path)
    } else {
        None
    };
    Ok(RunOutcome {
        records,
        summary,
        csv_path,
        summary_path,
    })
}

/// Runs `op` on a dedicated pool of `jobs` threads, or the global pool.
pub fn with_pool<T: Send>(
    jobs: Option<usize>,
    op: impl FnOnce() -> T + Send,
) -> Result<T, RunError> {
    match jobs {
        None => Ok(op()),
        Some(0) => Err(RunError::Config("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(op))
        }
    }
}

fn frobenius_at(
    field: Option<&Result<VectorField3, String>>,
    p: Point3,
    step: f64,
    flags: &mut Vec<String>,
) -> Option<FrobeniusReport> {
    match field? {
        Ok(field) => match frobenius::frobenius_report(field, &p, step) {
            Ok(r) => Some(r),
            Err(e) => {
                flags.push(format!("frobenius:{}", e.code()));
                None
            }
        },
        Err(_) => {
            flags.push("frobenius:field".into());
            None
        }
    }
}

fn spherical_record(
    spec: &SphericalPeriscopeSpec,
    checks: &[Check],
    field: Option<&Result<(VectorField3, GnomonicChart), String>>,
    step: f64,
    node: Node,
    x: Vector,
) -> PointRecord {
    let mut record = PointRecord::new(node.index, x.iter().copied().collect());
    match spec.synthesize(&x) {
        Ok(s) => {
            let a = s.grad_f.norm();
            let b = s.grad_g.norm();
            record.values = Some(vec![s.e_f, a, s.e_g, b, s.d, s.s]);
            if s.antipodal {
                record.flags.push("antipodal".into());
            }
            if checks.contains(&Check::Synthesize) {
                let s_g = closed_form::sine_rule_value(s.e_g, b);
                let mut defect = (s.s - s_g).abs();
                if a + b > 1e-12 {
                    defect = defect.max((s.s - closed_form::admissible_root(a, b, spec.c)).abs());
                }
                let quad = closed_form::perimeter_quadratic(s.e_f, s.e_g, a, b, spec.c);
                record.identity = Some(defect.max(quad.abs() / (spec.c * spec.c)));
            }
        }
        Err(e) => record.flags.push(format!("synthesize:{}", e.code())),
    }
    if checks.contains(&Check::Trace) {
        match trace::trace_spherical(spec, &x) {
            Ok(t) => record.residuals = Some(t.residuals),
            Err(e) => record.flags.push(format!("trace:{}", e.code())),
        }
    }
    if checks.contains(&Check::Frobenius) {
        let (field, p) = match field {
            Some(Ok((f, chart))) => (Some(Ok(f.clone())), chart.coords(&x)),
            Some(Err(e)) => (Some(Err(e.clone())), Point3::zeros()),
            None => (None, Point3::zeros()),
        };
        record.frobenius = frobenius_at(field.as_ref(), p, step, &mut record.flags);
    }
    record
}

fn reversed_record(
    spec: &ReversedPeriscopeSpec,
    checks: &[Check],
    field: Option<&Result<VectorField3, String>>,
    step: f64,
    node: Node,
    x: Vector,
) -> PointRecord {
    let mut record = PointRecord::new(node.index, x.iter().copied().collect());
    match spec.synthesize(&x) {
        Ok(s) => {
            let a = s.grad_f.norm();
            let b = s.grad_g.norm();
            record.values = Some(vec![s.f_val, a, s.g_val, b, s.u.norm(), s.path_length]);
            if checks.contains(&Check::Synthesize) {
                let path = (s.path_length - 2.0 * spec.c).abs() / spec.c.abs().max(1.0);
                record.identity = Some(path.max((a * b - 1.0).abs()));
            }
        }
        Err(e) => record.flags.push(format!("synthesize:{}", e.code())),
    }
    if checks.contains(&Check::Trace) {
        match trace::trace_reversed(spec, &x) {
            Ok(t) => record.residuals = Some(t.residuals),
            Err(e) => record.flags.push(format!("trace:{}", e.code())),
        }
    }
    if checks.contains(&Check::Frobenius) {
        let p = if x.len() == 3 {
            Point3::new(x[0], x[1], x[2])
        } else {
            Point3::zeros()
        };
        record.frobenius = frobenius_at(field, p, step, &mut record.flags);
    }
    record
}

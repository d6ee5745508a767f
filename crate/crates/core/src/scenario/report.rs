//! Per-point records, the CSV writer and the run summary.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::frobenius::FrobeniusReport;
use crate::trace::Residuals;

use super::config::{Check, ResolvedTolerances, ScenarioConfig, ScenarioKind};
use super::RunError;

pub const SPHERICAL_VALUES: [&str; 6] = [
    "e_f",
    "grad_f",
    "e_g",
    "grad_g",
    "geodesic_distance",
    "sine_rule",
];
pub const REVERSED_VALUES: [&str; 6] =
    ["f", "grad_f", "g", "grad_g", "displacement", "path_length"];

/// Everything computed at one lattice node.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub index: Vec<usize>,
    pub x: Vec<f64>,
    /// Synthesized values in the order of the scenario's value columns.
    pub values: Option<Vec<f64>>,
    /// Largest closed-form identity defect.
    pub identity: Option<f64>,
    pub residuals: Option<Residuals>,
    pub frobenius: Option<FrobeniusReport>,
    pub flags: Vec<String>,
}

impl PointRecord {
    pub fn new(index: Vec<usize>, x: Vec<f64>) -> Self {
        PointRecord {
            index,
            x,
            values: None,
            identity: None,
            residuals: None,
            frobenius: None,
            flags: Vec::new(),
        }
    }
}

fn index_name(k: usize) -> String {
    const LETTERS: [&str; 4] = ["i", "j", "k", "l"];
    LETTERS
        .get(k)
        .map_or_else(|| format!("i{k}"), |s| s.to_string())
}

fn header(config: &ScenarioConfig, axes: usize, coords: usize) -> Vec<String> {
    let mut cols: Vec<String> = (0..axes).map(index_name).collect();
    cols.extend((0..coords).map(|k| format!("x{k}")));
    let values = match config.scenario {
        ScenarioKind::Spherical => SPHERICAL_VALUES,
        ScenarioKind::Reversed => REVERSED_VALUES,
    };
    cols.extend(values.iter().map(|s| s.to_string()));
    if config.checks.contains(&Check::Synthesize) {
        cols.push("identity_defect".into());
    }
    if config.checks.contains(&Check::Trace) {
        cols.extend(Residuals::NAMES.iter().map(|s| s.to_string()));
    }
    if config.checks.contains(&Check::Frobenius) {
        cols.push("frobenius_defect".into());
        cols.push("frobenius_scaled".into());
    }
    cols.push("flag".into());
    cols
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v}"))
}

/// Writes one row per record, LF line endings, shortest round-trip floats.
pub fn write_csv(
    path: &Path,
    config: &ScenarioConfig,
    records: &[PointRecord],
) -> Result<(), RunError> {
    let io = |e: csv::Error| RunError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(io)?;
    let axes = config.grid.len();
    let coords = match config.scenario {
        ScenarioKind::Spherical => config.dimension,
        ScenarioKind::Reversed => config.dimension - 1,
    };
    let n_values = SPHERICAL_VALUES.len();
    w.write_record(header(config, axes, coords)).map_err(io)?;
    for r in records {
        let mut row: Vec<String> = r.index.iter().map(|i| i.to_string()).collect();
        row.extend(r.x.iter().map(|v| format!("{v}")));
        match &r.values {
            Some(vals) => row.extend(vals.iter().map(|v| format!("{v}"))),
            None => row.extend(std::iter::repeat_n(String::new(), n_values)),
        }
        if config.checks.contains(&Check::Synthesize) {
            row.push(cell(r.identity));
        }
        if config.checks.contains(&Check::Trace) {
            match &r.residuals {
                Some(res) => row.extend(res.values().iter().map(|v| format!("{v}"))),
                None => row.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        if config.checks.contains(&Check::Frobenius) {
            row.push(cell(r.frobenius.map(|f| f.defect)));
            row.push(cell(r.frobenius.map(|f| f.scale_invariant_defect)));
        }
        row.push(r.flags.join(";"));
        w.write_record(&row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Worst {
    pub index: Vec<usize>,
    pub x: Vec<f64>,
    pub quantity: String,
    pub value: f64,
}

/// Verdict and statistics of one check over the lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub pass: bool,
    pub tolerance: f64,
    pub evaluated: usize,
    pub failed: usize,
    pub max: f64,
    pub mean: f64,
    /// Per-residual maxima (trace only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_by_residual: Option<BTreeMap<&'static str, f64>>,
    pub worst: Option<Worst>,
}

impl CheckSummary {
    fn build<'a>(
        tolerance: f64,
        records: &[PointRecord],
        quantities: impl Fn(&PointRecord) -> Option<Vec<(&'a str, f64)>>,
    ) -> Self {
        let mut evaluated = 0;
        let mut failed = 0;
        let mut max = 0.0f64;
        let mut sum = 0.0;
        let mut worst: Option<Worst> = None;
        for r in records {
            let Some(qs) = quantities(r) else {
                failed += 1;
                continue;
            };
            evaluated += 1;
            let mut point_max = 0.0f64;
            for (name, v) in qs {
                let v = if v.is_nan() { f64::INFINITY } else { v };
                point_max = point_max.max(v);
                if worst.as_ref().is_none_or(|w| v > w.value) {
                    worst = Some(Worst {
                        index: r.index.clone(),
                        x: r.x.clone(),
                        quantity: name.to_string(),
                        value: v,
                    });
                }
            }
            max = max.max(point_max);
            sum += point_max;
        }
        CheckSummary {
            pass: failed == 0 && evaluated > 0 && max <= tolerance,
            tolerance,
            evaluated,
            failed,
            max,
            mean: if evaluated > 0 {
                sum / evaluated as f64
            } else {
                0.0
            },
            max_by_residual: None,
            worst,
        }
    }
}

/// Summary written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config: ScenarioConfig,
    pub points: usize,
    pub tolerances: ResolvedTolerances,
    pub checks: BTreeMap<&'static str, CheckSummary>,
    pub pass: bool,
}

impl RunSummary {
    pub fn build(config: &ScenarioConfig, records: &[PointRecord]) -> Self {
        let tol = config.tolerances();
        let mut checks = BTreeMap::new();
        for check in &config.checks {
            let (name, summary) = match check {
                Check::Synthesize => (
                    "synthesize",
                    CheckSummary::build(tol.synthesize, records, |r| {
                        r.identity.map(|v| vec![("identity_defect", v)])
                    }),
                ),
                Check::Trace => {
                    let mut s = CheckSummary::build(tol.trace, records, |r| {
                        r.residuals
                            .map(|res| Residuals::NAMES.into_iter().zip(res.values()).collect())
                    });
                    let mut by = BTreeMap::new();
                    for name in Residuals::NAMES {
                        by.insert(name, 0.0f64);
                    }
                    for res in records.iter().filter_map(|r| r.residuals) {
                        for (name, v) in Residuals::NAMES.into_iter().zip(res.values()) {
                            let e = by.get_mut(name).expect("seeded");
                            *e = e.max(v);
                        }
                    }
                    s.max_by_residual = Some(by);
                    ("trace", s)
                }
                Check::Frobenius => (
                    "frobenius",
                    CheckSummary::build(tol.frobenius, records, |r| {
                        r.frobenius
                            .map(|f| vec![("frobenius_defect", f.defect.abs())])
                    }),
                ),
            };
            checks.insert(name, summary);
        }
        let pass = checks.values().all(|c| c.pass);
        RunSummary {
            config: config.clone(),
            points: records.len(),
            tolerances: tol,
            checks,
            pass,
        }
    }
}

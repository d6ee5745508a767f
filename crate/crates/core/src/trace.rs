//! Physical ray tracing through synthesized mirror pairs.
//!
//! Each trace follows one ray through both reflections using only the
//! reflection law and the mirror normals, then measures how far the result is
//! from the periscope's return condition.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{angle_between, reflect_direction, Ray, Vector};
use crate::grid::Node;
use crate::numeric::{fd_gradient, ray_surface_intersect};
use crate::reversed::{graph_normal, InverseMap, ReversedPeriscopeSpec, ReversedSynthesis};
use crate::spherical::{SphericalPeriscopeSpec, SynthesisVariant};

/// Closure residuals of one traced ray. All values are unsigned distances
/// (length units) or angles (radians).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Residuals {
    /// Distance of the predicted second impact from the first reflected ray.
    pub colinearity: f64,
    /// Spherical: distance of `O` from the outgoing ray. Reversed: horizontal
    /// drift of the outgoing ray from `T(x)` over one chord length.
    pub return_to_source: f64,
    /// Angle between the outgoing direction and the ideal return direction.
    pub direction_match: f64,
    /// `|path length - 2C|`.
    pub path_defect: f64,
}

impl Residuals {
    pub const NAMES: [&'static str; 4] = [
        "colinearity",
        "return_to_source",
        "direction_match",
        "path_defect",
    ];

    pub fn values(&self) -> [f64; 4] {
        [
            self.colinearity,
            self.return_to_source,
            self.direction_match,
            self.path_defect,
        ]
    }

    pub fn max(&self) -> f64 {
        self.values().into_iter().fold(0.0, f64::max)
    }

    fn from_values(v: [f64; 4]) -> Self {
        Residuals {
            colinearity: v[0],
            return_to_source: v[1],
            direction_match: v[2],
            path_defect: v[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub p: Vector,
    pub q: Vector,
    pub out_ray: Ray,
    pub path_length: f64,
    pub residuals: Residuals,
}

/// Distance from `point` to the forward half of `ray`.
fn forward_distance(ray: &Ray, point: &Vector) -> f64 {
    let w = point - &ray.origin;
    let along = w.dot(&ray.direction);
    if along <= 0.0 {
        w.norm()
    } else {
        (w - &ray.direction * along).norm()
    }
}

pub fn trace_spherical(spec: &SphericalPeriscopeSpec, x: &Vector) -> Result<TraceResult> {
    trace_spherical_with(spec, x, SynthesisVariant::default())
}

/// Traces with a perturbed synthesis; residuals are still measured against the
/// nominal `C`.
pub fn trace_spherical_with(
    spec: &SphericalPeriscopeSpec,
    x: &Vector,
    variant: SynthesisVariant,
) -> Result<TraceResult> {
    let syn = spec.synthesize_with(x, variant)?;
    let p = syn.p();
    let q = syn.q();
    let first = Ray::new(p.clone(), reflect_direction(x, &syn.first_normal())?)?;
    let colinearity = forward_distance(&first, &q);

    let out_dir = reflect_direction(&first.direction, &syn.second_normal())?;
    let out_ray = Ray::new(q.clone(), out_dir)?;
    let direction_match = angle_between(&out_ray.direction, &-&syn.y);
    let return_to_source = forward_distance(&out_ray, &Vector::zeros(x.len()));

    let path_length = syn.e_f + (&q - &p).norm() + syn.e_g;
    Ok(TraceResult {
        p,
        q,
        out_ray,
        path_length,
        residuals: Residuals {
            colinearity,
            return_to_source,
            direction_match,
            path_defect: (path_length - 2.0 * spec.c).abs(),
        },
    })
}

/// Perturbations of the reversed synthesis, for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReversedVariant {
    pub c_offset: f64,
    /// Use `∇g ∥ +∇f` instead of the anti-parallel choice.
    pub flip_second_gradient: bool,
}

pub fn trace_reversed(spec: &ReversedPeriscopeSpec, x: &Vector) -> Result<TraceResult> {
    trace_reversed_with(spec, x, ReversedVariant::default())
}

pub fn trace_reversed_with(
    spec: &ReversedPeriscopeSpec,
    x: &Vector,
    variant: ReversedVariant,
) -> Result<TraceResult> {
    let syn = if variant.c_offset != 0.0 {
        let shifted = ReversedPeriscopeSpec {
            c: spec.c + variant.c_offset,
            ..spec.clone()
        };
        shifted.synthesize(x)?
    } else {
        spec.synthesize(x)?
    };
    let grad_g = if variant.flip_second_gradient {
        -&syn.grad_g
    } else {
        syn.grad_g.clone()
    };
    let q = syn.q();
    trace_reversed_to(spec, &syn, q, &grad_g)
}

fn trace_reversed_to(
    spec: &ReversedPeriscopeSpec,
    syn: &ReversedSynthesis,
    q: Vector,
    grad_g: &Vector,
) -> Result<TraceResult> {
    let n = syn.x.len() + 1;
    let mut up = Vector::zeros(n);
    up[n - 1] = 1.0;
    let p = syn.p();
    let first = Ray::new(
        p.clone(),
        reflect_direction(&up, &graph_normal(&syn.grad_f))?,
    )?;
    let colinearity = forward_distance(&first, &q);

    let out_dir = reflect_direction(&first.direction, &graph_normal(grad_g))?;
    let out_ray = Ray::new(q.clone(), out_dir)?;
    let direction_match = angle_between(&out_ray.direction, &-&up);

    let chord = (&q - &p).norm();
    let landing = out_ray.at(chord);
    let landing_defect = (landing.rows(0, n - 1) - &syn.y).norm();

    let g = q[n - 1];
    let path_length = syn.f_val + chord + g;
    Ok(TraceResult {
        p,
        q,
        out_ray,
        path_length,
        residuals: Residuals {
            colinearity,
            return_to_source: landing_defect,
            direction_match,
            path_defect: (path_length - 2.0 * spec.c).abs(),
        },
    })
}

/// Traces against the second mirror reconstructed on its own side: the first
/// reflected ray is intersected with the graph of `y ↦ g(y)` (inverse-map
/// evaluation), and the normal there comes from finite differences.
pub fn trace_reversed_surface(
    spec: &ReversedPeriscopeSpec,
    inverse: &InverseMap<'_>,
    x: &Vector,
) -> Result<TraceResult> {
    let syn = spec.synthesize(x)?;
    let m = x.len();
    let mut up = Vector::zeros(m + 1);
    up[m] = 1.0;
    let first = Ray::new(syn.p(), reflect_direction(&up, &graph_normal(&syn.grad_f))?)?;
    let predicted = (syn.q() - syn.p()).norm();

    let height = |h: &Vector| inverse.second_height_near(h, x).unwrap_or(f64::NAN);
    let surface = |p: &Vector| {
        let h = p.rows(0, m).into_owned();
        p[m] - height(&h)
    };
    let (_, q) = ray_surface_intersect(&first, &surface, (0.99 * predicted, 1.01 * predicted))?;
    let qh = q.rows(0, m).into_owned();
    let grad_g = fd_gradient(height, &qh, 1e-5);
    let mut traced = trace_reversed_to(spec, &syn, q, &grad_g)?;
    // The landing defect compares against the traced impact, not the prediction.
    let landing = traced.out_ray.at(predicted);
    traced.residuals.return_to_source = (landing.rows(0, m) - &qh).norm();
    Ok(traced)
}

/// Per-point outcome of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOutcome {
    pub index: Vec<usize>,
    pub x: Vector,
    pub result: Result<TraceResult, Error>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstPoint {
    pub index: Vec<usize>,
    pub x: Vec<f64>,
    pub residual: &'static str,
    pub value: f64,
}

/// Aggregate of a grid sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub traced: usize,
    pub failed: usize,
    pub max: Residuals,
    pub mean: Residuals,
    pub worst: Option<WorstPoint>,
}

impl ResidualSummary {
    /// Sequential reduction in sweep order.
    pub fn from_outcomes(points: &[PointOutcome]) -> Self {
        let mut max = [0.0f64; 4];
        let mut sum = [0.0f64; 4];
        let mut traced = 0;
        let mut worst: Option<WorstPoint> = None;
        for pt in points {
            let Ok(tr) = &pt.result else { continue };
            traced += 1;
            for (k, value) in tr.residuals.values().into_iter().enumerate() {
                sum[k] += value;
                max[k] = max[k].max(value);
                if worst.as_ref().is_none_or(|w| value > w.value) {
                    worst = Some(WorstPoint {
                        index: pt.index.clone(),
                        x: pt.x.iter().copied().collect(),
                        residual: Residuals::NAMES[k],
                        value,
                    });
                }
            }
        }
        let mean = if traced > 0 {
            sum.map(|s| s / traced as f64)
        } else {
            [0.0; 4]
        };
        ResidualSummary {
            traced,
            failed: points.len() - traced,
            max: Residuals::from_values(max),
            mean: Residuals::from_values(mean),
            worst,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub points: Vec<PointOutcome>,
    pub summary: ResidualSummary,
}

fn sweep<F>(nodes: Vec<(Node, Vector)>, trace: F) -> GridReport
where
    F: Fn(&Vector) -> Result<TraceResult> + Sync,
{
    let points: Vec<PointOutcome> = nodes
        .into_par_iter()
        .map(|(node, x)| {
            let result = trace(&x);
            PointOutcome {
                index: node.index,
                x,
                result,
            }
        })
        .collect();
    let summary = ResidualSummary::from_outcomes(&points);
    GridReport { points, summary }
}

/// Traces every node of the patch lattice. Per-point failures are recorded,
/// not propagated.
pub fn grid_verify_spherical(
    spec: &SphericalPeriscopeSpec,
    counts: &[usize],
) -> Result<GridReport> {
    let nodes = spec.patch.grid(counts)?;
    Ok(sweep(nodes, |x| trace_spherical(spec, x)))
}

pub fn grid_verify_reversed(spec: &ReversedPeriscopeSpec, counts: &[usize]) -> Result<GridReport> {
    let nodes = spec.domain.grid(counts)?;
    Ok(sweep(nodes, |x| trace_reversed(spec, x)))
}

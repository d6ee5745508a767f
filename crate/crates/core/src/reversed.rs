//! Reversed periscope: two mirrors, graphs over the horizontal hyperplane,
//! sending every upward vertical ray to a downward vertical ray.
//!
//! The last ambient coordinate is "up". The first mirror is the graph of `f`
//! over `x`; the ray enters going up, hits `P = (x, f(x))`, reflects to
//! `Q = (T(x), g)` and leaves going straight down.

use crate::error::{Error, Result};
use crate::geom::Vector;
use crate::grid::{lattice, Node};
use crate::numeric::newton_system;
use crate::scalar_field::ScalarField;

pub const SLOPE_FLOOR: f64 = 1e-9;
pub const VALIDATION_MARGIN: f64 = 1e-9;
pub const VALIDATION_SAMPLES: usize = 33;
const INVERSE_TOL: f64 = 1e-10;

/// Axis-aligned box in the horizontal chart.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoxDomain {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::InvalidInput(
                "domain bounds must have equal nonzero length".into(),
            ));
        }
        if min.iter().chain(&max).any(|v| !v.is_finite())
            || min.iter().zip(&max).any(|(a, b)| a > b)
        {
            return Err(Error::InvalidInput(
                "domain needs finite bounds with min <= max".into(),
            ));
        }
        Ok(BoxDomain { min, max })
    }

    pub fn dimension(&self) -> usize {
        self.min.len()
    }

    pub fn contains(&self, x: &Vector, slack: f64) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (lo, hi))| *v >= lo - slack && *v <= hi + slack)
    }

    pub fn grid(&self, counts: &[usize]) -> Result<Vec<(Node, Vector)>> {
        if counts.len() != self.dimension() {
            return Err(Error::Dimension {
                expected: self.dimension(),
                got: counts.len(),
            });
        }
        Ok(lattice(counts, &self.min, &self.max)
            .into_iter()
            .map(|node| {
                let x = Vector::from_column_slice(&node.coords);
                (node, x)
            })
            .collect())
    }

    fn extent(&self) -> f64 {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversedPeriscopeSpec {
    pub field: ScalarField,
    pub c: f64,
    pub domain: BoxDomain,
}

/// Closed-form data at one chart point `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversedSynthesis {
    pub x: Vector,
    pub y: Vector,
    pub f_val: f64,
    pub g_val: f64,
    pub grad_f: Vector,
    pub grad_g: Vector,
    /// Displacement `T(x) - x`.
    pub u: Vector,
    /// Angle between the vertical and the first normal.
    pub alpha: f64,
    /// `f + g + |PQ|`.
    pub path_length: f64,
}

impl ReversedSynthesis {
    pub fn p(&self) -> Vector {
        lift(&self.x, self.f_val)
    }

    pub fn q(&self) -> Vector {
        lift(&self.y, self.g_val)
    }
}

/// Appends a height to a chart point.
pub fn lift(x: &Vector, height: f64) -> Vector {
    let mut p = Vector::zeros(x.len() + 1);
    p.rows_mut(0, x.len()).copy_from(x);
    p[x.len()] = height;
    p
}

/// Graph normal `(-∇h, 1)`.
pub fn graph_normal(grad: &Vector) -> Vector {
    lift(&-grad, 1.0)
}

impl ReversedPeriscopeSpec {
    pub fn new(field: ScalarField, c: f64, domain: BoxDomain) -> Result<Self> {
        Self::with_validation(field, c, domain, VALIDATION_SAMPLES)
    }

    pub fn with_validation(
        field: ScalarField,
        c: f64,
        domain: BoxDomain,
        samples: usize,
    ) -> Result<Self> {
        field.validate(domain.dimension())?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::PathBudget { c, f: f64::NAN });
        }
        let spec = ReversedPeriscopeSpec { field, c, domain };
        let counts = vec![samples; spec.domain.dimension()];
        for (_, x) in spec.domain.grid(&counts)? {
            spec.local(&x, VALIDATION_MARGIN)?;
        }
        Ok(spec)
    }

    /// Dimension of the horizontal chart (`n - 1`).
    pub fn chart_dimension(&self) -> usize {
        self.domain.dimension()
    }

    fn local(&self, x: &Vector, margin: f64) -> Result<(f64, Vector, f64)> {
        if x.len() != self.chart_dimension() {
            return Err(Error::Dimension {
                expected: self.chart_dimension(),
                got: x.len(),
            });
        }
        let f = self.field.value(x);
        let grad = self.field.gradient(x);
        let a = grad.norm();
        if !f.is_finite() || !a.is_finite() {
            return Err(Error::NonFinite(x.iter().copied().collect()));
        }
        if a < SLOPE_FLOOR.max(margin) {
            return Err(Error::VerticalDegenerate { slope: a });
        }
        if a >= 1.0 - margin {
            return Err(Error::SlopeBound { slope: a });
        }
        if self.c <= f + margin {
            return Err(Error::PathBudget { c: self.c, f });
        }
        Ok((f, grad, a))
    }

    /// `g` at `T(x)`.
    pub fn second_height(&self, x: &Vector) -> Result<f64> {
        let (f, _, a) = self.local(x, 0.0)?;
        Ok(second_height_from(f, a, self.c))
    }

    /// `U(x) = T(x) - x = 2(C - f)/|∇f|² ∇f`.
    pub fn displacement(&self, x: &Vector) -> Result<Vector> {
        let (f, grad, a) = self.local(x, 0.0)?;
        Ok(grad * (2.0 * (self.c - f) / (a * a)))
    }

    pub fn periscope_map(&self, x: &Vector) -> Result<Vector> {
        Ok(x + self.displacement(x)?)
    }

    /// `∇g` at `T(x)`: magnitude `1/|∇f|`, anti-parallel to `∇f`.
    pub fn second_gradient(&self, x: &Vector) -> Result<Vector> {
        let (_, grad, a) = self.local(x, 0.0)?;
        Ok(grad * (-1.0 / (a * a)))
    }

    pub fn synthesize(&self, x: &Vector) -> Result<ReversedSynthesis> {
        let (f, grad, a) = self.local(x, 0.0)?;
        let g = second_height_from(f, a, self.c);
        let u = &grad * (2.0 * (self.c - f) / (a * a));
        let y = x + &u;
        let chord = (u.norm_squared() + (f - g).powi(2)).sqrt();
        Ok(ReversedSynthesis {
            x: x.clone(),
            y,
            f_val: f,
            g_val: g,
            grad_g: &grad * (-1.0 / (a * a)),
            grad_f: grad,
            u,
            alpha: a.atan(),
            path_length: f + g + chord,
        })
    }

    /// Inverse-map helper seeded on the default lattice.
    pub fn inverse_map(&self) -> InverseMap<'_> {
        let samples = if self.chart_dimension() <= 2 { 33 } else { 9 };
        InverseMap::new(self, samples)
    }

    /// `g(y)` for a point `y` on the second mirror's side, via `T(x*) = y`.
    pub fn second_height_at(&self, y: &Vector) -> Result<f64> {
        self.inverse_map().second_height_at(y)
    }
}

fn second_height_from(f: f64, a: f64, c: f64) -> f64 {
    let a2 = a * a;
    (f - c * (1.0 - a2)) / a2
}

/// Solves `T(x) = y` by Newton iteration, seeded from a lattice of forward images.
pub struct InverseMap<'a> {
    spec: &'a ReversedPeriscopeSpec,
    images: Vec<(Vector, Vector)>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl<'a> InverseMap<'a> {
    pub fn new(spec: &'a ReversedPeriscopeSpec, samples: usize) -> Self {
        let m = spec.chart_dimension();
        let counts = vec![samples.max(2); m];
        let images: Vec<(Vector, Vector)> = spec
            .domain
            .grid(&counts)
            .expect("counts match chart dimension")
            .into_iter()
            .filter_map(|(_, x)| spec.periscope_map(&x).ok().map(|y| (x, y)))
            .collect();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for (_, y) in &images {
            for k in 0..m {
                lo[k] = lo[k].min(y[k]);
                hi[k] = hi[k].max(y[k]);
            }
        }
        // Pad by 5% of each image extent.
        for k in 0..m {
            let pad = 0.05 * (hi[k] - lo[k]) + 1e-9;
            lo[k] -= pad;
            hi[k] += pad;
        }
        InverseMap {
            spec,
            images,
            lo,
            hi,
        }
    }

    /// `x*` with `T(x*) = y`, starting from `seed`.
    pub fn solve_seeded(&self, y: &Vector, seed: &Vector) -> Result<Vector> {
        let root = self.newton(y, seed)?;
        let spec = self.spec;
        if !spec
            .domain
            .contains(&root, 1e-9 * (1.0 + spec.domain.extent()))
        {
            return Err(Error::OutsideDomain("image of the domain"));
        }
        Ok(root)
    }

    fn newton(&self, y: &Vector, seed: &Vector) -> Result<Vector> {
        let spec = self.spec;
        let m = spec.chart_dimension();
        let residual = |x: &Vector| match spec.periscope_map(x) {
            Ok(t) => t - y,
            Err(_) => Vector::from_element(m, f64::NAN),
        };
        let sol = newton_system(residual, seed, INVERSE_TOL, 60).map_err(|e| match e {
            Error::NoConvergence {
                iterations,
                residual,
                ..
            } => Error::NoConvergence {
                what: "inverse map",
                iterations,
                residual,
            },
            other => other,
        })?;
        Ok(sol.root)
    }

    /// `x*` with `T(x*) = y`, seeded from the nearest lattice image.
    pub fn solve(&self, y: &Vector) -> Result<Vector> {
        if y.len() != self.spec.chart_dimension() {
            return Err(Error::Dimension {
                expected: self.spec.chart_dimension(),
                got: y.len(),
            });
        }
        let inside = y
            .iter()
            .enumerate()
            .all(|(k, v)| *v >= self.lo[k] && *v <= self.hi[k]);
        if !inside {
            return Err(Error::OutsideDomain("image of the domain"));
        }
        let seed = self
            .images
            .iter()
            .min_by(|a, b| (&a.1 - y).norm().total_cmp(&(&b.1 - y).norm()))
            .map(|(x, _)| x.clone())
            .ok_or(Error::OutsideDomain("image of the domain"))?;
        self.solve_seeded(y, &seed)
    }

    pub fn second_height_at(&self, y: &Vector) -> Result<f64> {
        self.spec.second_height(&self.solve(y)?)
    }

    pub fn second_height_at_seeded(&self, y: &Vector, seed: &Vector) -> Result<f64> {
        self.spec.second_height(&self.solve_seeded(y, seed)?)
    }

    /// Like [`Self::second_height_at_seeded`] but lets `x*` leave the domain box,
    /// for evaluating the second mirror just past the edge of its sampled image.
    pub fn second_height_near(&self, y: &Vector, seed: &Vector) -> Result<f64> {
        self.spec.second_height(&self.newton(y, seed)?)
    }
}

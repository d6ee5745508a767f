//! Numerical integrability test for the hyperplane distribution orthogonal to
//! a vector field on a 3-dimensional chart.
//!
//! With `α` the metric dual of `V`, `(α∧dα)(e₁,e₂,e₃) = V · curl V`. It
//! vanishes exactly when `V` is a functional multiple of a gradient.

use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{self, Vector};
use crate::reversed::ReversedPeriscopeSpec;
use crate::spherical::SphericalPeriscopeSpec;

pub type Point3 = Vector3<f64>;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    PeriscopePullback,
}

/// A vector field on an open set of ℝ³ (components of a 1-form in chart
/// coordinates, for pulled-back fields).
#[derive(Clone)]
pub struct VectorField3 {
    eval: Arc<dyn Fn(&Point3) -> Point3 + Send + Sync>,
    pub provenance: Provenance,
}

impl fmt::Debug for VectorField3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField3")
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

impl VectorField3 {
    pub fn analytic<F>(eval: F) -> Self
    where
        F: Fn(&Point3) -> Point3 + Send + Sync + 'static,
    {
        VectorField3 {
            eval: Arc::new(eval),
            provenance: Provenance::Analytic,
        }
    }

    pub fn eval(&self, p: &Point3) -> Point3 {
        (self.eval)(p)
    }

    fn eval_checked(&self, p: &Point3) -> Result<Point3> {
        let v = self.eval(p);
        if v.iter().all(|c| c.is_finite()) {
            Ok(v)
        } else {
            Err(Error::NonFinite(p.iter().copied().collect()))
        }
    }

    /// `V + c` for a constant vector `c`.
    pub fn plus_constant(&self, c: Point3) -> Self {
        let inner = self.eval.clone();
        VectorField3 {
            eval: Arc::new(move |p| inner(p) + c),
            provenance: self.provenance,
        }
    }

    /// `s · V` for a constant `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let inner = self.eval.clone();
        VectorField3 {
            eval: Arc::new(move |p| inner(p) * s),
            provenance: self.provenance,
        }
    }
}

/// `α_p(v) = V(p) · v`.
pub fn dual_one_form(field: &VectorField3, p: &Point3, v: &Point3) -> f64 {
    field.eval(p).dot(v)
}

/// Components `(dα(e₂,e₃), dα(e₃,e₁), dα(e₁,e₂))` by central differences.
pub fn exterior_derivative(field: &VectorField3, p: &Point3, h: f64) -> Result<Point3> {
    // jac[(i, j)] = ∂_i V_j
    let mut jac = nalgebra::Matrix3::zeros();
    for i in 0..3 {
        let mut step = Point3::zeros();
        step[i] = h;
        let plus = field.eval_checked(&(p + step))?;
        let minus = field.eval_checked(&(p - step))?;
        let d = (plus - minus) / (2.0 * h);
        for j in 0..3 {
            jac[(i, j)] = d[j];
        }
    }
    Ok(Point3::new(
        jac[(1, 2)] - jac[(2, 1)],
        jac[(2, 0)] - jac[(0, 2)],
        jac[(0, 1)] - jac[(1, 0)],
    ))
}

/// `(α∧dα)(e₁,e₂,e₃)` at `p`, derivatives by central differences with step `h`.
pub fn frobenius_defect(field: &VectorField3, p: &Point3, h: f64) -> Result<f64> {
    Ok(frobenius_report(field, p, h)?.defect)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrobeniusReport {
    pub point: [f64; 3],
    pub defect: f64,
    /// `defect / (|V| · max|dα| + 1e-300)`.
    pub scale_invariant_defect: f64,
}

pub fn frobenius_report(field: &VectorField3, p: &Point3, h: f64) -> Result<FrobeniusReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {h}"
        )));
    }
    let v = field.eval_checked(p)?;
    let d_alpha = exterior_derivative(field, p, h)?;
    let defect = v.dot(&d_alpha);
    let scale = v.norm() * d_alpha.amax() + 1e-300;
    Ok(FrobeniusReport {
        point: [p.x, p.y, p.z],
        defect,
        scale_invariant_defect: defect / scale,
    })
}

/// Defects at `h` and `h/2` and the convergence order they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RichardsonCheck {
    pub defect_h: f64,
    pub defect_half: f64,
    pub order: f64,
}

pub fn richardson_check(field: &VectorField3, p: &Point3, h: f64) -> Result<RichardsonCheck> {
    let defect_h = frobenius_defect(field, p, h)?;
    let defect_half = frobenius_defect(field, p, h / 2.0)?;
    Ok(RichardsonCheck {
        defect_h,
        defect_half,
        order: (defect_h.abs() / defect_half.abs()).log2(),
    })
}

/// Central (gnomonic) chart of `S³` around `center`:
/// `u ↦ (x₀ + E u) / |x₀ + E u|` with `E` an orthonormal basis of `x₀^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct GnomonicChart {
    pub center: Vector,
    pub basis: Vec<Vector>,
    /// Half-width of the coordinate cube `[-w, w]³` the chart is used on.
    pub half_width: f64,
}

impl GnomonicChart {
    pub fn new(center: Vector, half_width: f64) -> Result<Self> {
        if center.len() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                got: center.len(),
            });
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidInput(
                "chart half-width must be positive".into(),
            ));
        }
        let center = &center / center.norm();
        let basis = geom::tangent_basis(&center);
        Ok(GnomonicChart {
            center,
            basis,
            half_width,
        })
    }

    fn lift(&self, u: &Point3) -> Vector {
        &self.center + &self.basis[0] * u.x + &self.basis[1] * u.y + &self.basis[2] * u.z
    }

    /// Point of the sphere with chart coordinates `u`.
    pub fn point(&self, u: &Point3) -> Vector {
        let q = self.lift(u);
        let len = q.norm();
        q / len
    }

    /// Chart components of the 1-form `w ↦ ⟨v, w⟩` for `v` tangent at `point(u)`.
    pub fn pull_back_covector(&self, u: &Point3, v: &Vector) -> Point3 {
        let len = self.lift(u).norm();
        Point3::new(
            self.basis[0].dot(v),
            self.basis[1].dot(v),
            self.basis[2].dot(v),
        ) / len
    }

    /// Chart coordinates of a point in the open hemisphere around the center.
    pub fn coords(&self, x: &Vector) -> Point3 {
        let scale = 1.0 / self.center.dot(x);
        Point3::new(
            self.basis[0].dot(x),
            self.basis[1].dot(x),
            self.basis[2].dot(x),
        ) * scale
    }

    /// Largest angular distance from the center reached by the coordinate cube.
    pub fn angular_radius(&self) -> f64 {
        (self.half_width * 3f64.sqrt()).atan()
    }
}

/// `V_T` of an `S³` periscope as a 1-form in a gnomonic chart.
///
/// Points where `V_T` is undefined evaluate to NaN, which
/// [`frobenius_defect`] reports as an evaluation error.
pub fn periscope_field_pullback(
    spec: &SphericalPeriscopeSpec,
    chart: &GnomonicChart,
) -> Result<VectorField3> {
    if spec.dimension() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            got: spec.dimension(),
        });
    }
    let offset = geom::spherical_distance(&spec.patch.center, &chart.center);
    if offset + chart.angular_radius() > spec.patch.radius + 1e-12 {
        return Err(Error::OutsideDomain("patch"));
    }
    // V_T is undefined where the map is antipodal.
    spec.map_field(&chart.center).map_err(|e| match e {
        Error::NonUniqueGeodesic => Error::Antipodal,
        other => other,
    })?;
    let spec = spec.clone();
    let chart = chart.clone();
    Ok(VectorField3 {
        eval: Arc::new(move |u| match spec.map_field_unchecked(&chart.point(u)) {
            Ok(v) => chart.pull_back_covector(u, &v),
            Err(_) => Point3::repeat(f64::NAN),
        }),
        provenance: Provenance::PeriscopePullback,
    })
}

/// Displacement field `U = T - id` of a reversed periscope over a 3-dimensional chart.
pub fn reversed_displacement_field(spec: &ReversedPeriscopeSpec) -> Result<VectorField3> {
    if spec.chart_dimension() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            got: spec.chart_dimension(),
        });
    }
    let spec = spec.clone();
    Ok(VectorField3 {
        eval: Arc::new(move |p| {
            let x = Vector::from_column_slice(p.as_slice());
            match spec.displacement(&x) {
                Ok(u) => Point3::new(u[0], u[1], u[2]),
                Err(_) => Point3::repeat(f64::NAN),
            }
        }),
        provenance: Provenance::PeriscopePullback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reversed::BoxDomain;
    use crate::scalar_field::{Bump, ScalarField};
    use crate::spherical::Patch;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn contact() -> VectorField3 {
        VectorField3::analytic(|p| Point3::new(p.y, 0.0, 1.0))
    }

    fn quadratic_gradient() -> VectorField3 {
        // F = p1² + 2 p2 p3
        VectorField3::analytic(|p| Point3::new(2.0 * p.x, 2.0 * p.z, 2.0 * p.y))
    }

    fn swirl() -> VectorField3 {
        VectorField3::analytic(|p| Point3::new(p.y.sin() + p.z, p.x * p.z, (p.x - p.y).cos()))
    }

    #[test]
    fn one_form_examples() {
        let f = VectorField3::analytic(|_| Point3::new(1.0, 0.0, 0.0));
        let p = Point3::zeros();
        assert_eq!(dual_one_form(&f, &p, &Point3::new(1.0, 0.0, 0.0)), 1.0);
        assert_eq!(dual_one_form(&f, &p, &Point3::new(0.0, 2.0, -1.0)), 0.0);
        let g = swirl();
        let q = Point3::new(0.3, -0.2, 0.5);
        let (a, b) = (0.7, -1.3);
        let (v, w) = (Point3::new(1.0, 2.0, 3.0), Point3::new(-0.5, 0.1, 0.9));
        let lhs = dual_one_form(&g, &q, &(v * a + w * b));
        let rhs = a * dual_one_form(&g, &q, &v) + b * dual_one_form(&g, &q, &w);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn contact_field_has_unit_defect() {
        for &h in &[1e-4, 1e-3, 1e-2] {
            let d = frobenius_defect(&contact(), &Point3::new(0.3, -1.2, 2.0), h).unwrap();
            assert_abs_diff_eq!(d, -1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn exact_gradient_is_closed() {
        for p in [Point3::new(0.1, 0.2, 0.3), Point3::new(-1.0, 0.5, 2.0)] {
            assert!(
                frobenius_defect(&quadratic_gradient(), &p, 1e-4)
                    .unwrap()
                    .abs()
                    < 1e-8
            );
        }
    }

    #[test]
    fn scaled_gradient_is_integrable() {
        let f = VectorField3::analytic(|p| {
            let lambda = 1.0 + p.x * p.x;
            Point3::new(2.0 * p.x, 2.0 * p.z, 2.0 * p.y) * lambda
        });
        let d = frobenius_defect(&f, &Point3::new(0.4, -0.3, 0.8), 1e-4).unwrap();
        assert!(d.abs() < 1e-7);
    }

    #[test]
    fn report_scale_invariance() {
        let p = Point3::new(0.2, 0.1, -0.4);
        let r = frobenius_report(&contact(), &p, 1e-4).unwrap();
        let r3 = frobenius_report(&contact().scaled(3.0), &p, 1e-4).unwrap();
        assert_abs_diff_eq!(r3.defect, 9.0 * r.defect, epsilon = 1e-7);
        assert_abs_diff_eq!(
            r3.scale_invariant_defect,
            r.scale_invariant_defect,
            epsilon = 1e-9
        );
        let zero = VectorField3::analytic(|_| Point3::zeros());
        let rz = frobenius_report(&zero, &p, 1e-4).unwrap();
        assert_eq!((rz.defect, rz.scale_invariant_defect), (0.0, 0.0));
    }

    #[test]
    fn non_finite_values_are_errors() {
        let f = VectorField3::analytic(|p| Point3::new(1.0 / p.x, 0.0, 0.0));
        assert!(matches!(
            frobenius_defect(&f, &Point3::zeros(), 1e-4),
            Err(Error::NonFinite(_))
        ));
        assert!(frobenius_defect(&contact(), &Point3::zeros(), 0.0).is_err());
    }

    fn s3_spec(field: ScalarField) -> SphericalPeriscopeSpec {
        SphericalPeriscopeSpec::new(
            field,
            2.0,
            Patch::new(Vector::from_column_slice(&[0.0, 0.0, 0.0, 1.0]), 0.3).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn pullback_requires_s3_and_nonconstant_field() {
        let s2 = SphericalPeriscopeSpec::new(
            ScalarField::constant(0.0),
            2.0,
            Patch::new(Vector::from_column_slice(&[0.0, 0.0, 1.0]), 0.3).unwrap(),
        )
        .unwrap();
        let chart =
            GnomonicChart::new(Vector::from_column_slice(&[0.0, 0.0, 0.0, 1.0]), 0.1).unwrap();
        assert!(matches!(
            periscope_field_pullback(&s2, &chart),
            Err(Error::Dimension {
                expected: 4,
                got: 3
            })
        ));
        let flat = s3_spec(ScalarField::constant(0.2));
        assert_eq!(
            periscope_field_pullback(&flat, &chart).unwrap_err(),
            Error::Antipodal
        );
        let wide =
            GnomonicChart::new(Vector::from_column_slice(&[0.0, 0.0, 0.0, 1.0]), 0.5).unwrap();
        let bump = s3_spec(ScalarField::gaussian_bump(
            0.2,
            0.3,
            &[0.6, 0.0, 0.0, 0.8],
            0.5,
        ));
        assert_eq!(
            periscope_field_pullback(&bump, &wide).unwrap_err(),
            Error::OutsideDomain("patch")
        );
    }

    #[test]
    fn single_bump_pullback_is_integrable() {
        let spec = s3_spec(ScalarField::gaussian_bump(
            0.2,
            0.3,
            &[0.6, 0.0, 0.0, 0.8],
            0.5,
        ));
        let chart = GnomonicChart::new(spec.patch.center.clone(), 0.15).unwrap();
        let field = periscope_field_pullback(&spec, &chart).unwrap();
        for u in [Point3::zeros(), Point3::new(0.1, -0.05, 0.12)] {
            assert!(frobenius_defect(&field, &u, DEFAULT_STEP).unwrap().abs() < 1e-5);
        }
    }

    #[test]
    fn reversed_displacement_is_integrable() {
        let spec = ReversedPeriscopeSpec::new(
            ScalarField::sum_of_bumps(
                0.5,
                vec![
                    Bump {
                        amplitude: -0.4,
                        center: vec![0.0, 0.0, 0.0],
                        sigma: 1.0,
                    },
                    Bump {
                        amplitude: 0.2,
                        center: vec![2.0, 1.5, -1.0],
                        sigma: 0.8,
                    },
                ],
            ),
            3.0,
            BoxDomain::new(vec![1.0, 0.2, 0.2], vec![1.4, 0.6, 0.6]).unwrap(),
        )
        .unwrap();
        let field = reversed_displacement_field(&spec).unwrap();
        for (_, x) in spec.domain.grid(&[3, 3, 3]).unwrap() {
            let p = Point3::new(x[0], x[1], x[2]);
            assert!(frobenius_defect(&field, &p, DEFAULT_STEP).unwrap().abs() < 1e-5);
        }
    }

    proptest! {
        #[test]
        fn defect_is_even_in_the_field(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
            let p = Point3::new(x, y, z);
            let d = frobenius_defect(&swirl(), &p, 1e-4).unwrap();
            let d_neg = frobenius_defect(&swirl().scaled(-1.0), &p, 1e-4).unwrap();
            prop_assert!((d - d_neg).abs() < 1e-12);
        }

        #[test]
        fn contact_defect_is_constant(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
            let d = frobenius_defect(&contact(), &Point3::new(x, y, z), 1e-4).unwrap();
            prop_assert!((d + 1.0).abs() < 1e-8);
        }
    }
}

//! Spherical periscope: two mirrors returning every ray from the origin `O`
//! back to `O`.
//!
//! The first mirror is given by its radial log-function `f`, i.e. the mirror
//! point over the direction `x ∈ S^{n-1}` is `P(x) = e^{f(x)} x`. Given the
//! constant `C` (half the perimeter of every triangle `OPQ`), the second mirror
//! and the front map `T: x ↦ y` follow in closed form from `f`, `|∇f|` and `C`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::{
    self, geodesic_direction, sphere_exp, sphere_exp_coords, tangent_basis, tangential_gradient,
    Vector,
};
use crate::grid::{lattice, Node};
use crate::scalar_field::ScalarField;

/// Below this spherical gradient norm the front map is treated as antipodal.
pub const ZERO_GRADIENT: f64 = 1e-12;
/// Margin applied to feasibility checks of a spec.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;
/// Samples per axis used to validate a spec at construction.
pub const VALIDATION_SAMPLES: usize = 33;

/// Closed-form relations between the data `(e^f, |∇f|, C)` at `x` and the
/// second mirror at `y = T(x)`.
pub mod closed_form {
    use super::*;

    fn denominator(e_f: f64, grad_f: f64, c: f64) -> Result<f64> {
        let den = c * (1.0 + grad_f * grad_f) - e_f;
        if den <= 1e-12 {
            return Err(Error::Infeasible {
                invariant: "feasibility",
                detail: format!("C(1+|grad f|^2) - e^f = {den:e} <= 1e-12"),
            });
        }
        Ok(den)
    }

    /// `e^{2f} - 2Ce^f + C²(1+|∇f|²)`, evaluated as `(C - e^f)² + C²|∇f|²`.
    pub fn radicand(e_f: f64, grad_f: f64, c: f64) -> f64 {
        (c - e_f).powi(2) + (c * grad_f).powi(2)
    }

    /// `|∇g|` at `T(x)`.
    pub fn grad_g_magnitude(e_f: f64, grad_f: f64, c: f64) -> Result<f64> {
        Ok(e_f * grad_f / denominator(e_f, grad_f, c)?)
    }

    /// `e^{g}` at `T(x)`.
    pub fn second_radius(e_f: f64, grad_f: f64, c: f64) -> Result<f64> {
        Ok(radicand(e_f, grad_f, c) / denominator(e_f, grad_f, c)?)
    }

    /// Great-circle distance between `x` and `T(x)`.
    pub fn geodesic_distance(e_f: f64, grad_f: f64, c: f64) -> Result<f64> {
        let rad = radicand(e_f, grad_f, c);
        if !(rad > 0.0) {
            return Err(Error::Infeasible {
                invariant: "degenerate",
                detail: "C = e^f with vanishing gradient".into(),
            });
        }
        let arg = (c * grad_f / rad.sqrt()).min(1.0);
        Ok(PI - 2.0 * arg.asin())
    }

    /// Common value `e^f|∇f| / (1+|∇f|²)` of both mirrors' sine-rule expression.
    pub fn sine_rule_value(e: f64, grad: f64) -> f64 {
        e * grad / (1.0 + grad * grad)
    }

    /// The admissible root `C|∇f||∇g| / (|∇f|+|∇g|)` of the perimeter quadratic.
    pub fn admissible_root(grad_f: f64, grad_g: f64, c: f64) -> f64 {
        c * grad_f * grad_g / (grad_f + grad_g)
    }

    /// The extraneous root `C / (|∇f|+|∇g|)`, kept for regression tests.
    pub fn extraneous_root(grad_f: f64, grad_g: f64, c: f64) -> f64 {
        c / (grad_f + grad_g)
    }

    /// `1 - cos(2α + 2β)` expressed through the two gradient norms.
    pub fn one_minus_cos_double_sum(grad_f: f64, grad_g: f64) -> f64 {
        2.0 * (grad_f + grad_g).powi(2) / ((1.0 + grad_f * grad_f) * (1.0 + grad_g * grad_g))
    }

    /// Left side of the cosine-rule quadratic; zero on a consistent triangle.
    pub fn perimeter_quadratic(e_f: f64, e_g: f64, grad_f: f64, grad_g: f64, c: f64) -> f64 {
        e_f * e_g * one_minus_cos_double_sum(grad_f, grad_g) - 2.0 * c * (e_f + e_g) + 2.0 * c * c
    }
}

/// Spherical cap of directions around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub center: Vector,
    pub radius: f64,
}

impl Patch {
    pub fn new(center: Vector, radius: f64) -> Result<Self> {
        let norm = center.norm();
        if center.len() < 2 || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidInput(
                "patch center must be a nonzero vector".into(),
            ));
        }
        if !(radius > 0.0 && radius < PI) {
            return Err(Error::InvalidInput(format!(
                "patch radius must lie in (0, π), got {radius}"
            )));
        }
        Ok(Patch {
            center: center / norm,
            radius,
        })
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.center.len()
            && geom::spherical_distance(&self.center, x) <= self.radius + 1e-12
    }

    /// Normal-coordinate lattice inscribed in the cap: `counts[k]` points on each
    /// of the `n - 1` tangent axes, half-width `radius / √(n-1)`.
    pub fn grid(&self, counts: &[usize]) -> Result<Vec<(Node, Vector)>> {
        let axes = self.dimension() - 1;
        if counts.len() != axes {
            return Err(Error::Dimension {
                expected: axes,
                got: counts.len(),
            });
        }
        let half = self.radius / (axes as f64).sqrt();
        let basis = tangent_basis(&self.center);
        Ok(lattice(counts, &vec![-half; axes], &vec![half; axes])
            .into_iter()
            .map(|node| {
                let x = sphere_exp_coords(&self.center, &basis, &node.coords);
                (node, x)
            })
            .collect())
    }
}

/// First mirror, path constant and patch of a spherical periscope.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalPeriscopeSpec {
    pub field: ScalarField,
    pub c: f64,
    pub patch: Patch,
}

/// Image of `x` under the front map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapImage {
    pub point: Vector,
    /// Set when `∇f(x)` vanishes and the ray returns along `-x`.
    pub antipodal: bool,
}

/// Everything the closed form yields at one direction `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalSynthesis {
    pub x: Vector,
    pub y: Vector,
    pub e_f: f64,
    pub e_g: f64,
    pub grad_f: Vector,
    pub grad_g: Vector,
    /// Acute angle between `x` and the first normal.
    pub alpha: f64,
    /// Acute angle between `y` and the second normal.
    pub beta: f64,
    /// Common sine-rule value.
    pub s: f64,
    /// Great-circle distance from `x` to `y`.
    pub d: f64,
    pub antipodal: bool,
}

impl SphericalSynthesis {
    /// First impact point `P`.
    pub fn p(&self) -> Vector {
        &self.x * self.e_f
    }

    /// Second impact point `Q`.
    pub fn q(&self) -> Vector {
        &self.y * self.e_g
    }

    /// Normal of the second mirror at `Q`.
    pub fn second_normal(&self) -> Vector {
        &self.y - &self.grad_g
    }

    /// Normal of the first mirror at `P`.
    pub fn first_normal(&self) -> Vector {
        &self.x - &self.grad_f
    }
}

/// Deliberate departures from the nominal synthesis, used for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SynthesisVariant {
    /// Added to `C` before synthesizing.
    pub c_offset: f64,
    /// Move `x` along `-∇f` instead of `+∇f`.
    pub flip_map: bool,
    /// Point `∇g(y)` away from `x` instead of toward it.
    pub flip_second_gradient: bool,
}

impl SphericalPeriscopeSpec {
    /// Builds and validates a spec on the default sample lattice.
    pub fn new(field: ScalarField, c: f64, patch: Patch) -> Result<Self> {
        Self::with_validation(field, c, patch, VALIDATION_SAMPLES)
    }

    /// Builds a spec, checking feasibility on `samples` points per axis.
    pub fn with_validation(
        field: ScalarField,
        c: f64,
        patch: Patch,
        samples: usize,
    ) -> Result<Self> {
        let n = patch.dimension();
        field.validate(n)?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Infeasible {
                invariant: "path-budget",
                detail: format!("C = {c} must be positive"),
            });
        }
        let spec = SphericalPeriscopeSpec { field, c, patch };
        let counts = vec![samples; n - 1];
        for (_, x) in spec.patch.grid(&counts)? {
            spec.check_feasible(&x)?;
        }
        Ok(spec)
    }

    pub fn dimension(&self) -> usize {
        self.patch.dimension()
    }

    fn check_feasible(&self, x: &Vector) -> Result<()> {
        let e_f = self.field.value(x).exp();
        let a = self.grad_f(x).norm();
        if !(e_f < self.c - FEASIBILITY_MARGIN) {
            return Err(Error::Infeasible {
                invariant: "path-budget",
                detail: format!(
                    "e^f = {e_f} is not below C = {} at {:?}",
                    self.c,
                    x.as_slice()
                ),
            });
        }
        let den = self.c * (1.0 + a * a) - e_f;
        if !(den > FEASIBILITY_MARGIN) {
            return Err(Error::Infeasible {
                invariant: "feasibility",
                detail: format!("C(1+|grad f|^2) - e^f = {den:e} at {:?}", x.as_slice()),
            });
        }
        Ok(())
    }

    fn check_domain(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::Dimension {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        if !self.patch.contains(x) {
            return Err(Error::OutsideDomain("patch"));
        }
        Ok(())
    }

    /// Spherical gradient of `f` at `x`.
    pub fn grad_f(&self, x: &Vector) -> Vector {
        tangential_gradient(&self.field, x)
    }

    /// `P(x) = e^{f(x)} x`.
    pub fn mirror_point(&self, x: &Vector) -> Result<Vector> {
        self.check_domain(x)?;
        Ok(x * self.field.value(x).exp())
    }

    /// `N_x = x - ∇f(x)`, normal to the first mirror at `P(x)`.
    pub fn mirror_normal(&self, x: &Vector) -> Result<Vector> {
        self.check_domain(x)?;
        Ok(x - self.grad_f(x))
    }

    fn local_data(&self, x: &Vector) -> Result<(f64, Vector, f64)> {
        self.check_domain(x)?;
        let e_f = self.field.value(x).exp();
        let grad = self.grad_f(x);
        let a = grad.norm();
        Ok((e_f, grad, a))
    }

    pub fn grad_g_magnitude(&self, x: &Vector) -> Result<f64> {
        let (e_f, _, a) = self.local_data(x)?;
        closed_form::grad_g_magnitude(e_f, a, self.c)
    }

    /// `e^{g(T(x))}`.
    pub fn second_radius(&self, x: &Vector) -> Result<f64> {
        let (e_f, _, a) = self.local_data(x)?;
        closed_form::second_radius(e_f, a, self.c)
    }

    /// Great-circle distance from `x` to `T(x)`.
    pub fn geodesic_distance(&self, x: &Vector) -> Result<f64> {
        let (e_f, _, a) = self.local_data(x)?;
        closed_form::geodesic_distance(e_f, a, self.c)
    }

    pub fn periscope_map(&self, x: &Vector) -> Result<MapImage> {
        let s = self.synthesize(x)?;
        Ok(MapImage {
            point: s.y,
            antipodal: s.antipodal,
        })
    }

    /// `∇g` at `T(x)`: magnitude `|∇g|`, pointing along the arc from `T(x)` back to `x`.
    pub fn second_mirror_gradient(&self, x: &Vector) -> Result<Vector> {
        Ok(self.synthesize(x)?.grad_g)
    }

    /// `V_T(x)`, the unit tangent at `x` of the arc from `x` to `T(x)`.
    pub fn map_field(&self, x: &Vector) -> Result<Vector> {
        let s = self.synthesize(x)?;
        if s.antipodal {
            return Err(Error::NonUniqueGeodesic);
        }
        geodesic_direction(&s.x, &s.y)
    }

    pub fn synthesize(&self, x: &Vector) -> Result<SphericalSynthesis> {
        self.synthesize_with(x, SynthesisVariant::default())
    }

    pub fn synthesize_with(
        &self,
        x: &Vector,
        variant: SynthesisVariant,
    ) -> Result<SphericalSynthesis> {
        self.check_domain(x)?;
        self.synthesize_unchecked(x, variant)
    }

    /// `V_T` without the patch check, for difference stencils that poke just
    /// outside the cap.
    pub(crate) fn map_field_unchecked(&self, x: &Vector) -> Result<Vector> {
        let s = self.synthesize_unchecked(x, SynthesisVariant::default())?;
        if s.antipodal {
            return Err(Error::NonUniqueGeodesic);
        }
        geodesic_direction(&s.x, &s.y)
    }

    fn synthesize_unchecked(
        &self,
        x: &Vector,
        variant: SynthesisVariant,
    ) -> Result<SphericalSynthesis> {
        let e_f = self.field.value(x).exp();
        let grad_f = self.grad_f(x);
        let a = grad_f.norm();
        let c = self.c + variant.c_offset;
        let b = closed_form::grad_g_magnitude(e_f, a, c)?;
        let e_g = closed_form::second_radius(e_f, a, c)?;
        let d = closed_form::geodesic_distance(e_f, a, c)?;
        let antipodal = a < ZERO_GRADIENT;
        let (y, grad_g) = if antipodal {
            (-x, Vector::zeros(x.len()))
        } else {
            let sign = if variant.flip_map { -1.0 } else { 1.0 };
            let u = &grad_f * (sign / a);
            let y = sphere_exp(x, &u, d);
            let toward_x = geodesic_direction(&y, x)?;
            let sign = if variant.flip_second_gradient {
                -1.0
            } else {
                1.0
            };
            (y, toward_x * (sign * b))
        };
        Ok(SphericalSynthesis {
            x: x.clone(),
            y,
            e_f,
            e_g,
            grad_f,
            grad_g,
            alpha: a.atan(),
            beta: b.atan(),
            s: closed_form::sine_rule_value(e_f, a),
            d,
            antipodal,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::closed_form as cf;
    use super::*;
    use crate::geom::{angle_between, cross3, reflect_direction, sin_angle};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    fn cap(center: &[f64], radius: f64) -> Patch {
        Patch::new(v(center), radius).unwrap()
    }

    /// 2D mirror with e^f = 1 and |f'| = 0.5 at x = (1, 0), increasing counterclockwise.
    fn planar_case() -> SphericalPeriscopeSpec {
        SphericalPeriscopeSpec::new(
            ScalarField::affine(&[0.0, 0.5], 0.0),
            2.0,
            cap(&[1.0, 0.0], 0.2),
        )
        .unwrap()
    }

    fn bump_spec() -> SphericalPeriscopeSpec {
        let center = [1.0 / 2f64.sqrt(), 0.0, 1.0 / 2f64.sqrt()];
        SphericalPeriscopeSpec::new(
            ScalarField::gaussian_bump(0.0, 0.3, &center, 0.5),
            2.0,
            cap(&[0.0, 0.0, 1.0], 0.3),
        )
        .unwrap()
    }

    #[test]
    fn mirror_point_examples() {
        let patch = cap(&[1.0, 1.0, 1.0], 3.0);
        let s =
            SphericalPeriscopeSpec::new(ScalarField::constant(0.0), 2.0, patch.clone()).unwrap();
        assert_eq!(
            s.mirror_point(&v(&[1.0, 0.0, 0.0])).unwrap(),
            v(&[1.0, 0.0, 0.0])
        );
        let s = SphericalPeriscopeSpec::new(ScalarField::constant(2f64.ln()), 3.0, patch.clone())
            .unwrap();
        let p = s.mirror_point(&v(&[0.0, 1.0, 0.0])).unwrap();
        assert_abs_diff_eq!((p - v(&[0.0, 2.0, 0.0])).norm(), 0.0, epsilon = 1e-15);
        let s = SphericalPeriscopeSpec::new(ScalarField::affine(&[0.0, 0.0, 0.1], 0.0), 2.0, patch)
            .unwrap();
        let p = s.mirror_point(&v(&[0.0, 0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(p[2], 1.1051709180756477, epsilon = 1e-15);
    }

    #[test]
    fn outside_patch_is_a_domain_error() {
        let s = bump_spec();
        assert_eq!(
            s.mirror_point(&v(&[1.0, 0.0, 0.0])),
            Err(Error::OutsideDomain("patch"))
        );
    }

    #[test]
    fn mirror_normal_examples() {
        let patch = cap(&[1.0, 0.0, 0.0], 0.5);
        let s =
            SphericalPeriscopeSpec::new(ScalarField::constant(0.3), 2.0, patch.clone()).unwrap();
        let x = v(&[1.0, 0.0, 0.0]);
        assert_eq!(s.mirror_normal(&x).unwrap(), x);
        let s = SphericalPeriscopeSpec::new(ScalarField::affine(&[0.0, 0.0, 1.0], 0.0), 4.0, patch)
            .unwrap();
        assert_eq!(s.mirror_normal(&x).unwrap(), v(&[1.0, 0.0, -1.0]));

        let s = planar_case();
        let x = v(&[1.0, 0.0]);
        let n = s.mirror_normal(&x).unwrap();
        assert_abs_diff_eq!(angle_between(&n, &x), 0.5f64.atan(), epsilon = 1e-15);
    }

    #[test]
    fn normal_is_orthogonal_to_surface_velocities() {
        let s = bump_spec();
        for (_, x) in s.patch.grid(&[5, 5]).unwrap() {
            let n = s.mirror_normal(&x).unwrap();
            let grad = s.grad_f(&x);
            let e_f = s.field.value(&x).exp();
            for b in tangent_basis(&x) {
                let velocity = (&b + &x * b.dot(&grad)) * e_f;
                assert!(velocity.dot(&n).abs() < 1e-10);
                // Finite-difference velocity of P along the sphere agrees.
                let h = 1e-6;
                let plus = sphere_exp(&x, &b, h);
                let minus = sphere_exp(&x, &b, -h);
                let fd = (&plus * s.field.value(&plus).exp()
                    - &minus * s.field.value(&minus).exp())
                    / (2.0 * h);
                assert!((fd - velocity).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn closed_form_scalar_examples() {
        assert_eq!(cf::grad_g_magnitude(1.0, 0.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cf::grad_g_magnitude(1.0, 0.5, 2.0).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_eq!(cf::grad_g_magnitude(1.9, 0.0, 2.0).unwrap(), 0.0);

        assert_abs_diff_eq!(
            cf::second_radius(1.0, 0.0, 2.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            cf::second_radius(1.0, 0.5, 2.0).unwrap(),
            4.0 / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            cf::second_radius(1.0, 0.0, 1.5).unwrap(),
            0.5,
            epsilon = 1e-15
        );

        assert_abs_diff_eq!(
            cf::geodesic_distance(1.0, 0.0, 2.0).unwrap(),
            PI,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            cf::geodesic_distance(1.0, 0.5, 2.0).unwrap(),
            PI / 2.0,
            epsilon = 1e-15
        );

        // Second-mirror side: (4/3)(1/3)/(10/9) = 0.4.
        assert_abs_diff_eq!(
            cf::sine_rule_value(4.0 / 3.0, 1.0 / 3.0),
            0.4,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(cf::sine_rule_value(1.0, 0.5), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_errors() {
        assert!(matches!(
            cf::grad_g_magnitude(3.0, 0.1, 2.0),
            Err(Error::Infeasible {
                invariant: "feasibility",
                ..
            })
        ));
        assert!(matches!(
            cf::geodesic_distance(2.0, 0.0, 2.0),
            Err(Error::Infeasible {
                invariant: "degenerate",
                ..
            })
        ));
    }

    #[test]
    fn small_gradient_asymptotics() {
        let (e_f, c, a) = (1.0, 2.0, 1e-5);
        let d = cf::geodesic_distance(e_f, a, c).unwrap();
        let approx = PI - 2.0 * c * a / (c - e_f);
        assert!((d - approx).abs() < 1e-12);
    }

    #[test]
    fn radicand_matches_expanded_form() {
        for &(e_f, a, c) in &[(1.0, 0.5, 2.0), (0.3, 1.7, 0.9), (2.5, 0.01, 3.0)] {
            let expanded: f64 = e_f * e_f - 2.0 * c * e_f + c * c * (1.0 + a * a);
            assert_abs_diff_eq!(cf::radicand(e_f, a, c), expanded, epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_field_is_antipodal() {
        let s = SphericalPeriscopeSpec::new(
            ScalarField::constant(0.0),
            2.0,
            cap(&[0.0, 0.0, 1.0], 0.4),
        )
        .unwrap();
        let x = v(&[0.0, 0.0, 1.0]);
        let img = s.periscope_map(&x).unwrap();
        assert!(img.antipodal);
        assert_eq!(img.point, -&x);
        assert_eq!(s.second_mirror_gradient(&x).unwrap(), Vector::zeros(3));
        assert_eq!(s.map_field(&x), Err(Error::NonUniqueGeodesic));
    }

    #[test]
    fn planar_worked_case() {
        let s = planar_case();
        let x = v(&[1.0, 0.0]);
        let syn = s.synthesize(&x).unwrap();
        assert_abs_diff_eq!((syn.y - v(&[0.0, 1.0])).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            (s.map_field(&x).unwrap() - v(&[0.0, 1.0])).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            (syn.grad_g - v(&[1.0 / 3.0, 0.0])).norm(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn second_gradient_reflects_chord_into_return_ray() {
        let s = bump_spec();
        for (_, x) in s.patch.grid(&[7, 7]).unwrap() {
            let syn = s.synthesize(&x).unwrap();
            assert!(syn.grad_g.dot(&syn.y).abs() < 1e-12);
            let (p, q) = (syn.p(), syn.q());
            let chord = (&q - &p) / (&q - &p).norm();
            let out = reflect_direction(&chord, &syn.second_normal()).unwrap();
            assert!((out + &syn.y).norm() < 1e-10);
        }
    }

    #[test]
    fn map_field_is_parallel_to_gradient() {
        let s = bump_spec();
        for (_, x) in s.patch.grid(&[9, 9]).unwrap() {
            let vt = s.map_field(&x).unwrap();
            let g = s.grad_f(&x);
            assert!(vt.dot(&x).abs() < 1e-12);
            assert!(cross3(&vt, &g).norm() / g.norm() < 1e-10);
            assert!(sin_angle(&vt, &g) < 1e-10);
            let img = s.periscope_map(&x).unwrap();
            assert_abs_diff_eq!(
                x.dot(&img.point),
                s.geodesic_distance(&x).unwrap().cos(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn infeasible_specs_are_rejected_at_construction() {
        let err =
            SphericalPeriscopeSpec::new(ScalarField::constant(1.0), 2.0, cap(&[0.0, 1.0], 0.1))
                .unwrap_err();
        assert!(matches!(
            err,
            Error::Infeasible {
                invariant: "path-budget",
                ..
            }
        ));
        assert!(SphericalPeriscopeSpec::new(
            ScalarField::constant(0.0),
            -1.0,
            cap(&[0.0, 1.0], 0.1)
        )
        .is_err());
    }

    /// Feasible `(e^f, |∇f|, C)` triples with `e^f < C`.
    fn feasible() -> impl Strategy<Value = (f64, f64, f64)> {
        (0.05f64..3.0, 0.0f64..3.0, 0.01f64..3.0).prop_map(|(e_f, a, gap)| (e_f, a, e_f + gap))
    }

    proptest! {
        #[test]
        fn sine_rule_values_agree((e_f, a, c) in feasible()) {
            let b = cf::grad_g_magnitude(e_f, a, c).unwrap();
            let e_g = cf::second_radius(e_f, a, c).unwrap();
            let lhs = cf::sine_rule_value(e_f, a);
            let rhs = cf::sine_rule_value(e_g, b);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            if a + b > 0.0 {
                let root = cf::admissible_root(a, b, c);
                prop_assert!((lhs - root).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn perimeter_quadratic_closes((e_f, a, c) in feasible()) {
            let b = cf::grad_g_magnitude(e_f, a, c).unwrap();
            let e_g = cf::second_radius(e_f, a, c).unwrap();
            let q = cf::perimeter_quadratic(e_f, e_g, a, b, c);
            let scale = c * c + c * (e_f + e_g) + e_f * e_g;
            prop_assert!(q.abs() <= 1e-10 * scale.max(1.0));
        }

        #[test]
        fn arcsin_argument_is_a_sine((e_f, a, c) in feasible()) {
            let arg = c * a / cf::radicand(e_f, a, c).sqrt();
            prop_assert!((0.0..=1.0).contains(&arg));
            let d = cf::geodesic_distance(e_f, a, c).unwrap();
            prop_assert!(d > 0.0 && d <= PI);
        }
    }
}

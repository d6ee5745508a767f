//! Dimension-generic vectors, rays, mirror reflection and unit-sphere geodesics.
//!
//! Points of the unit sphere `S^{n-1}` are plain ambient vectors of norm one;
//! tangent vectors at `x` are ambient vectors orthogonal to `x`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar_field::ScalarField;

pub type Vector = DVector<f64>;

/// Tolerance on unit norms used by every contract in the crate.
pub const UNIT_TOL: f64 = 1e-12;

const MIN_NORMAL_NORM: f64 = 1e-14;
const GEODESIC_TOL: f64 = 1e-9;

/// Builds a vector, rejecting `n < 2` and non-finite components.
pub fn vector(components: &[f64]) -> Result<Vector> {
    if components.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "vectors need dimension >= 2, got {}",
            components.len()
        )));
    }
    if components.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite(components.to_vec()));
    }
    Ok(Vector::from_column_slice(components))
}

/// Builds a unit vector by normalizing `components`.
pub fn unit(components: &[f64]) -> Result<Vector> {
    let v = vector(components)?;
    let norm = v.norm();
    if norm < MIN_NORMAL_NORM {
        return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
    }
    Ok(v / norm)
}

/// An oriented line with unit direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub origin: Vector,
    pub direction: Vector,
}

impl Ray {
    /// The direction is re-normalized here, once.
    pub fn new(origin: Vector, direction: Vector) -> Result<Self> {
        if origin.len() != direction.len() {
            return Err(Error::Dimension {
                expected: origin.len(),
                got: direction.len(),
            });
        }
        let norm = direction.norm();
        if !(norm >= MIN_NORMAL_NORM) {
            return Err(Error::InvalidInput("ray direction is zero".into()));
        }
        Ok(Ray {
            origin,
            direction: direction / norm,
        })
    }

    pub fn at(&self, t: f64) -> Vector {
        &self.origin + &self.direction * t
    }

    /// Euclidean distance from `p` to the full line carrying the ray.
    pub fn line_distance(&self, p: &Vector) -> f64 {
        let w = p - &self.origin;
        let along = w.dot(&self.direction);
        (w - &self.direction * along).norm()
    }
}

/// Mirror reflection of the unit direction `d` in the hyperplane with normal `normal`.
pub fn reflect_direction(d: &Vector, normal: &Vector) -> Result<Vector> {
    let norm = normal.norm();
    if !(norm >= MIN_NORMAL_NORM) {
        return Err(Error::DegenerateNormal { norm });
    }
    let n = normal / norm;
    Ok(d - &n * (2.0 * d.dot(&n)))
}

/// Component of `v` orthogonal to the unit vector `x`.
pub fn project_tangent(v: &Vector, x: &Vector) -> Vector {
    v - x * x.dot(v)
}

/// Spherical gradient of an ambient field restricted to the unit sphere at `x`.
pub fn tangential_gradient(field: &ScalarField, x: &Vector) -> Vector {
    project_tangent(&field.gradient(x), x)
}

/// Point reached after arc length `t` along the great circle through `x` with
/// unit initial velocity `v`.
pub fn sphere_exp(x: &Vector, v: &Vector, t: f64) -> Vector {
    x * t.cos() + v * t.sin()
}

/// Great-circle distance between unit vectors, stable near `0` and `π`.
pub fn spherical_distance(x: &Vector, y: &Vector) -> f64 {
    let c = x.dot(y);
    let s = (y - x * c).norm();
    s.atan2(c)
}

/// Unit tangent at `x` of the shortest arc from `x` to `y`.
pub fn geodesic_direction(x: &Vector, y: &Vector) -> Result<Vector> {
    if (x + y).norm() < GEODESIC_TOL {
        return Err(Error::NonUniqueGeodesic);
    }
    if (x - y).norm() < GEODESIC_TOL {
        return Err(Error::ZeroDistance);
    }
    let w = project_tangent(y, x);
    Ok(&w / w.norm())
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `x0`.
///
/// Gram-Schmidt over the standard basis, skipping the axis most aligned with
/// `x0`, so the result is deterministic.
pub fn tangent_basis(x0: &Vector) -> Vec<Vector> {
    let n = x0.len();
    let skip = x0.iamax();
    let mut basis: Vec<Vector> = Vec::with_capacity(n - 1);
    for axis in (0..n).filter(|&i| i != skip) {
        let mut e = Vector::zeros(n);
        e[axis] = 1.0;
        e -= x0 * x0.dot(&e);
        for b in &basis {
            let c = b.dot(&e);
            e -= b * c;
        }
        let norm = e.norm();
        basis.push(e / norm);
    }
    basis
}

/// Maps normal coordinates `t` (one per tangent-basis vector) to the sphere.
pub fn sphere_exp_coords(x0: &Vector, basis: &[Vector], t: &[f64]) -> Vector {
    let mut v = Vector::zeros(x0.len());
    for (b, ti) in basis.iter().zip(t) {
        v += b * *ti;
    }
    let len = v.norm();
    if len == 0.0 {
        return x0.clone();
    }
    sphere_exp(x0, &(v / len), len)
}

/// Cross product for `n = 3` vectors.
pub fn cross3(a: &Vector, b: &Vector) -> Vector {
    Vector::from_column_slice(&[
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

/// Sine of the angle between two nonzero vectors, any dimension.
pub fn sin_angle(a: &Vector, b: &Vector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    let ua = a / na;
    let ub = b / nb;
    (&ub - &ua * ua.dot(&ub)).norm()
}

/// Angle between two nonzero vectors in `[0, π]`.
pub fn angle_between(a: &Vector, b: &Vector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    sin_angle(a, b).atan2(a.dot(b) / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    #[test]
    fn reflect_head_on_and_grazing() {
        let r = reflect_direction(&v(&[0.0, 0.0, 1.0]), &v(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(r, v(&[0.0, 0.0, -1.0]));
        let r = reflect_direction(&v(&[1.0, 0.0, 0.0]), &v(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(r, v(&[1.0, 0.0, 0.0]));
    }

    #[test]
    fn reflect_2d_oblique() {
        let d = v(&[1.0, 0.0]);
        let normal = v(&[1.0, -0.5]);
        let r = reflect_direction(&d, &normal).unwrap();
        assert_abs_diff_eq!(r[0], -0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.8, epsilon = 1e-15);
        // Incidence and reflection angles to the normal line agree.
        let n = &normal / normal.norm();
        assert_abs_diff_eq!(d.dot(&n).abs(), r.dot(&n).abs(), epsilon = 1e-15);
    }

    #[test]
    fn reflect_rejects_tiny_normal() {
        let err = reflect_direction(&v(&[1.0, 0.0]), &v(&[1e-15, 0.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateNormal { .. }));
    }

    #[test]
    fn exp_examples() {
        let x = v(&[1.0, 0.0, 0.0]);
        let e = v(&[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(
            (sphere_exp(&x, &e, PI / 2.0) - &e).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(sphere_exp(&x, &e, 0.0), x);
        assert_abs_diff_eq!((sphere_exp(&x, &e, PI) + &x).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn geodesic_direction_examples() {
        let x = v(&[1.0, 0.0, 0.0]);
        let e = v(&[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(
            (geodesic_direction(&x, &e).unwrap() - &e).norm(),
            0.0,
            epsilon = 1e-15
        );
        let y = v(&[0.3f64.cos(), 0.3f64.sin(), 0.0]);
        assert_abs_diff_eq!(
            (geodesic_direction(&x, &y).unwrap() - &e).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_eq!(geodesic_direction(&x, &-&x), Err(Error::NonUniqueGeodesic));
        assert_eq!(geodesic_direction(&x, &x), Err(Error::ZeroDistance));
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let x0 = unit(&[0.3, -0.2, 0.9, 0.1]).unwrap();
        let b = tangent_basis(&x0);
        assert_eq!(b.len(), 3);
        for (i, bi) in b.iter().enumerate() {
            assert_abs_diff_eq!(bi.dot(&x0), 0.0, epsilon = 1e-15);
            for (j, bj) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(bi.dot(bj), want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn vector_constructor_contract() {
        assert!(vector(&[1.0]).is_err());
        assert!(vector(&[1.0, f64::NAN]).is_err());
        assert!(unit(&[0.0, 0.0]).is_err());
        let r = Ray::new(v(&[0.0, 0.0]), v(&[3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(r.direction.norm(), 1.0, epsilon = UNIT_TOL);
    }

    fn unit3() -> impl Strategy<Value = Vector> {
        prop::array::uniform3(-1.0f64..1.0)
            .prop_filter("nonzero", |a| a.iter().map(|c| c * c).sum::<f64>() > 1e-4)
            .prop_map(|a| {
                let w = v(&a);
                &w / w.norm()
            })
    }

    proptest! {
        #[test]
        fn reflection_is_involutive_norm_preserving_and_coplanar(d in unit3(), n in unit3(), scale in 0.1f64..10.0) {
            let normal = &n * scale;
            let r = reflect_direction(&d, &normal).unwrap();
            let back = reflect_direction(&r, &normal).unwrap();
            prop_assert!((back - &d).norm() < 1e-12);
            prop_assert!((r.norm() - 1.0).abs() < 1e-12);
            let triple = cross3(&d, &normal).dot(&r) / scale;
            prop_assert!(triple.abs() < 1e-12);
        }

        #[test]
        fn exp_stays_on_sphere(x in unit3(), w in unit3(), t in -10.0f64..10.0) {
            let tangent = project_tangent(&w, &x);
            prop_assume!(tangent.norm() > 1e-3);
            let u = &tangent / tangent.norm();
            let p = sphere_exp(&x, &u, t);
            prop_assert!((p.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn geodesic_direction_reaches_target(x in unit3(), y in unit3()) {
            prop_assume!((&x + &y).norm() > 1e-3 && (&x - &y).norm() > 1e-3);
            let u = geodesic_direction(&x, &y).unwrap();
            prop_assert!(u.dot(&x).abs() < 1e-12);
            let reached = sphere_exp(&x, &u, x.dot(&y).clamp(-1.0, 1.0).acos());
            prop_assert!((reached - &y).norm() < 1e-7);
            let reached = sphere_exp(&x, &u, spherical_distance(&x, &y));
            prop_assert!((reached - &y).norm() < 1e-14);
        }
    }
}

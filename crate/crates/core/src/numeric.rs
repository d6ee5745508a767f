//! Finite differences and root finding.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geom::{Ray, Vector};

/// Central-difference gradient: component `i` is `(F(p + h eᵢ) - F(p - h eᵢ)) / 2h`.
pub fn fd_gradient<F>(f: F, p: &Vector, h: f64) -> Vector
where
    F: Fn(&Vector) -> f64,
{
    let mut q = p.clone();
    Vector::from_fn(p.len(), |i, _| {
        q[i] = p[i] + h;
        let fp = f(&q);
        q[i] = p[i] - h;
        let fm = f(&q);
        q[i] = p[i];
        (fp - fm) / (2.0 * h)
    })
}

/// Convergence order implied by errors measured at steps `h` and `h / 2`.
pub fn observed_order(err_h: f64, err_half: f64) -> f64 {
    (err_h / err_half).log2()
}

/// An implicitly defined hypersurface `s(p) = 0`.
pub trait ImplicitSurface {
    fn value(&self, p: &Vector) -> f64;

    /// Analytic gradient of `s`, when known.
    fn gradient(&self, _p: &Vector) -> Option<Vector> {
        None
    }
}

impl<F> ImplicitSurface for F
where
    F: Fn(&Vector) -> f64,
{
    fn value(&self, p: &Vector) -> f64 {
        self(p)
    }
}

/// Pairs an implicit function with its analytic gradient.
pub struct WithGradient<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> ImplicitSurface for WithGradient<F, G>
where
    F: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    fn value(&self, p: &Vector) -> f64 {
        (self.value)(p)
    }

    fn gradient(&self, p: &Vector) -> Option<Vector> {
        Some((self.gradient)(p))
    }
}

const BISECTION_WIDTH: f64 = 1e-6;
const NEWTON_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 100;
const SCAN_INTERVALS: usize = 64;

/// First crossing of `ray` with `surface` inside the parameter `bracket`.
///
/// The bracket is scanned on 64 sub-intervals for the first sign change;
/// bisection then shrinks that interval to width 1e-6, then safeguarded Newton
/// converges to `|s| <= 1e-12 (1 + |t|)`.
pub fn ray_surface_intersect<S>(
    ray: &Ray,
    surface: &S,
    bracket: (f64, f64),
) -> Result<(f64, Vector)>
where
    S: ImplicitSurface + ?Sized,
{
    let s = |t: f64| surface.value(&ray.at(t));
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    // Locate the first sub-interval with a sign change so that a bracket
    // holding several crossings still yields the nearest one.
    let mut s_lo = s(lo);
    if !s_lo.is_finite() {
        return Err(Error::NonFinite(vec![lo]));
    }
    if s_lo == 0.0 {
        return Ok((lo, ray.at(lo)));
    }
    let width = hi - lo;
    let mut found = None;
    for k in 1..=SCAN_INTERVALS {
        let t = if k == SCAN_INTERVALS {
            hi
        } else {
            lo + width * k as f64 / SCAN_INTERVALS as f64
        };
        let st = s(t);
        if !st.is_finite() {
            return Err(Error::NonFinite(vec![t]));
        }
        if st == 0.0 {
            return Ok((t, ray.at(t)));
        }
        if st.signum() != s_lo.signum() {
            found = Some(t);
            break;
        }
        lo = t;
        s_lo = st;
    }
    let Some(t_hi) = found else {
        return Err(Error::NoIntersection {
            lo: bracket.0.min(bracket.1),
            hi,
        });
    };
    hi = t_hi;

    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let s_mid = s(mid);
        if s_mid == 0.0 {
            return Ok((mid, ray.at(mid)));
        }
        if s_mid.signum() == s_lo.signum() {
            lo = mid;
            s_lo = s_mid;
        } else {
            hi = mid;
        }
    }

    let slope = |t: f64| -> f64 {
        let p = ray.at(t);
        match surface.gradient(&p) {
            Some(g) => g.dot(&ray.direction),
            None => {
                let h = 1e-7 * (1.0 + t.abs());
                (s(t + h) - s(t - h)) / (2.0 * h)
            }
        }
    };

    let mut t = 0.5 * (lo + hi);
    let mut value = s(t);
    for _ in 0..MAX_NEWTON {
        if value.abs() <= NEWTON_TOL * (1.0 + t.abs()) {
            return Ok((t, ray.at(t)));
        }
        if value.signum() == s_lo.signum() {
            lo = t;
        } else {
            hi = t;
        }
        let d = slope(t);
        let newton = t - value / d;
        t = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        value = s(t);
        if hi - lo <= f64::EPSILON * (1.0 + t.abs()) {
            break;
        }
    }
    if value.abs() <= NEWTON_TOL * (1.0 + t.abs()) {
        return Ok((t, ray.at(t)));
    }
    Err(Error::NoConvergence {
        what: "ray-surface Newton",
        iterations: MAX_NEWTON,
        residual: value.abs(),
    })
}

/// Outcome of [`newton_system`].
#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub root: Vector,
    pub residual: f64,
    pub iterations: usize,
}

/// Damped Newton for `F(x) = 0` with a forward-difference Jacobian.
///
/// Iterates until the residual drops below `tol` and then keeps polishing
/// while it still decreases, so the root is accurate to round-off.
pub fn newton_system<F>(f: F, seed: &Vector, tol: f64, max_iter: usize) -> Result<NewtonSolution>
where
    F: Fn(&Vector) -> Vector,
{
    let n = seed.len();
    let mut x = seed.clone();
    let mut fx = f(&x);
    let mut res = fx.norm();
    for iter in 0..max_iter {
        if !res.is_finite() {
            break;
        }
        let mut jac = DMatrix::zeros(fx.len(), n);
        for j in 0..n {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            let col = (f(&xp) - &fx) / h;
            jac.set_column(j, &col);
        }
        let Some(step) = jac.lu().solve(&(-&fx)) else {
            break;
        };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-6 {
            let trial = &x + &step * lambda;
            let ft = f(&trial);
            let rt = ft.norm();
            if rt.is_finite() && rt < res {
                x = trial;
                fx = ft;
                res = rt;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            // Stalled at round-off.
            if res < tol {
                return Ok(NewtonSolution {
                    root: x,
                    residual: res,
                    iterations: iter,
                });
            }
            break;
        }
        if res == 0.0 {
            return Ok(NewtonSolution {
                root: x,
                residual: res,
                iterations: iter + 1,
            });
        }
    }
    if res < tol {
        return Ok(NewtonSolution {
            root: x,
            residual: res,
            iterations: max_iter,
        });
    }
    Err(Error::NoConvergence {
        what: "inverse-map Newton",
        iterations: max_iter,
        residual: res,
    })
}

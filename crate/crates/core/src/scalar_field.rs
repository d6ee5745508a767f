//! Closed-form scalar fields used as mirror shape functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vector;
use crate::numeric::fd_gradient;

/// Isotropic gaussian `amplitude · exp(-|p - center|² / (2 sigma²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub sigma: f64,
}

impl Bump {
    fn value(&self, p: &Vector) -> f64 {
        self.amplitude * (-self.dist2(p) / (2.0 * self.sigma * self.sigma)).exp()
    }

    fn add_gradient(&self, p: &Vector, out: &mut Vector) {
        let s2 = self.sigma * self.sigma;
        let k = -self.amplitude * (-self.dist2(p) / (2.0 * s2)).exp() / s2;
        for (i, o) in out.iter_mut().enumerate() {
            *o += k * (p[i] - self.center[i]);
        }
    }

    fn dist2(&self, p: &Vector) -> f64 {
        p.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Constant {
        value: f64,
    },
    /// `coefficients · p + offset`
    Affine {
        coefficients: Vec<f64>,
        offset: f64,
    },
    /// `pᵀ A p + b · p + c`, `A` given row-major.
    Quadratic {
        matrix: Vec<Vec<f64>>,
        linear: Vec<f64>,
        offset: f64,
    },
    GaussianBump {
        offset: f64,
        bump: Bump,
    },
    SumOfBumps {
        offset: f64,
        bumps: Vec<Bump>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum GradientMode {
    #[default]
    Analytic,
    FiniteDifference {
        step: f64,
    },
}

/// A smooth function on ℝᵈ with a closed-form gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub family: Family,
    pub gradient_mode: GradientMode,
}

impl ScalarField {
    pub fn new(family: Family) -> Self {
        ScalarField {
            family,
            gradient_mode: GradientMode::Analytic,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Family::Constant { value })
    }

    pub fn affine(coefficients: &[f64], offset: f64) -> Self {
        Self::new(Family::Affine {
            coefficients: coefficients.to_vec(),
            offset,
        })
    }

    pub fn quadratic(matrix: Vec<Vec<f64>>, linear: &[f64], offset: f64) -> Self {
        Self::new(Family::Quadratic {
            matrix,
            linear: linear.to_vec(),
            offset,
        })
    }

    pub fn gaussian_bump(offset: f64, amplitude: f64, center: &[f64], sigma: f64) -> Self {
        Self::new(Family::GaussianBump {
            offset,
            bump: Bump {
                amplitude,
                center: center.to_vec(),
                sigma,
            },
        })
    }

    pub fn sum_of_bumps(offset: f64, bumps: Vec<Bump>) -> Self {
        Self::new(Family::SumOfBumps { offset, bumps })
    }

    pub fn with_gradient_mode(mut self, mode: GradientMode) -> Self {
        self.gradient_mode = mode;
        self
    }

    /// Ambient dimension fixed by the parameters, if any.
    pub fn dimension(&self) -> Option<usize> {
        match &self.family {
            Family::Constant { .. } => None,
            Family::Affine { coefficients, .. } => Some(coefficients.len()),
            Family::Quadratic { linear, .. } => Some(linear.len()),
            Family::GaussianBump { bump, .. } => Some(bump.center.len()),
            Family::SumOfBumps { bumps, .. } => bumps.first().map(|b| b.center.len()),
        }
    }

    /// Checks parameter shapes against `dim` and that every number is finite.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let check_len = |got: usize| {
            if got == dim {
                Ok(())
            } else {
                Err(Error::Dimension { expected: dim, got })
            }
        };
        let check_bump = |b: &Bump| -> Result<()> {
            check_len(b.center.len())?;
            if !(b.sigma > 0.0) || !b.amplitude.is_finite() || !finite(&b.center) {
                return Err(Error::InvalidInput(
                    "bump needs finite amplitude/center and sigma > 0".into(),
                ));
            }
            Ok(())
        };
        match &self.family {
            Family::Constant { value } if !value.is_finite() => {
                return Err(Error::InvalidInput("constant must be finite".into()))
            }
            Family::Constant { .. } => {}
            Family::Affine {
                coefficients,
                offset,
            } => {
                check_len(coefficients.len())?;
                if !finite(coefficients) || !offset.is_finite() {
                    return Err(Error::InvalidInput("affine params must be finite".into()));
                }
            }
            Family::Quadratic {
                matrix,
                linear,
                offset,
            } => {
                check_len(linear.len())?;
                check_len(matrix.len())?;
                for row in matrix {
                    check_len(row.len())?;
                    if !finite(row) {
                        return Err(Error::InvalidInput(
                            "quadratic matrix must be finite".into(),
                        ));
                    }
                }
                if !finite(linear) || !offset.is_finite() {
                    return Err(Error::InvalidInput(
                        "quadratic params must be finite".into(),
                    ));
                }
            }
            Family::GaussianBump { offset, bump } => {
                check_bump(bump)?;
                if !offset.is_finite() {
                    return Err(Error::InvalidInput("offset must be finite".into()));
                }
            }
            Family::SumOfBumps { offset, bumps } => {
                for b in bumps {
                    check_bump(b)?;
                }
                if !offset.is_finite() {
                    return Err(Error::InvalidInput("offset must be finite".into()));
                }
            }
        }
        if let GradientMode::FiniteDifference { step } = self.gradient_mode {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidInput(
                    "finite-difference step must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn value(&self, p: &Vector) -> f64 {
        match &self.family {
            Family::Constant { value } => *value,
            Family::Affine {
                coefficients,
                offset,
            } => dot(coefficients, p) + offset,
            Family::Quadratic {
                matrix,
                linear,
                offset,
            } => {
                let quad: f64 = matrix
                    .iter()
                    .enumerate()
                    .map(|(i, row)| p[i] * dot(row, p))
                    .sum();
                quad + dot(linear, p) + offset
            }
            Family::GaussianBump { offset, bump } => offset + bump.value(p),
            Family::SumOfBumps { offset, bumps } => {
                offset + bumps.iter().map(|b| b.value(p)).sum::<f64>()
            }
        }
    }

    /// Gradient according to the configured [`GradientMode`].
    pub fn gradient(&self, p: &Vector) -> Vector {
        match self.gradient_mode {
            GradientMode::Analytic => self.analytic_gradient(p),
            GradientMode::FiniteDifference { step } => fd_gradient(|q| self.value(q), p, step),
        }
    }

    pub fn analytic_gradient(&self, p: &Vector) -> Vector {
        let n = p.len();
        match &self.family {
            Family::Constant { .. } => Vector::zeros(n),
            Family::Affine { coefficients, .. } => Vector::from_column_slice(coefficients),
            Family::Quadratic { matrix, linear, .. } => {
                // (A + Aᵀ) p + b
                Vector::from_fn(n, |i, _| {
                    let mut g = linear[i];
                    for j in 0..n {
                        g += (matrix[i][j] + matrix[j][i]) * p[j];
                    }
                    g
                })
            }
            Family::GaussianBump { bump, .. } => {
                let mut g = Vector::zeros(n);
                bump.add_gradient(p, &mut g);
                g
            }
            Family::SumOfBumps { bumps, .. } => {
                let mut g = Vector::zeros(n);
                for b in bumps {
                    b.add_gradient(p, &mut g);
                }
                g
            }
        }
    }
}

fn dot(a: &[f64], p: &Vector) -> f64 {
    a.iter().zip(p.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn samples() -> Vec<ScalarField> {
        vec![
            ScalarField::constant(0.7),
            ScalarField::affine(&[0.3, -1.2, 0.5], 0.1),
            ScalarField::quadratic(
                vec![
                    vec![1.0, 0.5, 0.0],
                    vec![-0.2, 2.0, 0.3],
                    vec![0.0, 0.1, -0.7],
                ],
                &[0.1, 0.0, -0.4],
                2.0,
            ),
            ScalarField::gaussian_bump(0.2, 0.8, &[0.1, -0.3, 0.5], 0.6),
            ScalarField::sum_of_bumps(
                -0.1,
                vec![
                    Bump {
                        amplitude: 0.5,
                        center: vec![0.0, 0.4, 0.2],
                        sigma: 0.7,
                    },
                    Bump {
                        amplitude: -0.3,
                        center: vec![0.5, -0.2, 0.0],
                        sigma: 0.4,
                    },
                ],
            ),
        ]
    }

    #[test]
    fn quadratic_gradient_of_norm_squared() {
        let f = ScalarField::quadratic(vec![vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], 0.0);
        let g = f.analytic_gradient(&Vector::from_column_slice(&[1.0, 2.0]));
        assert_eq!(g, Vector::from_column_slice(&[2.0, 4.0]));
    }

    #[test]
    fn validate_catches_shape_errors() {
        let f = ScalarField::affine(&[1.0, 2.0], 0.0);
        assert!(f.validate(2).is_ok());
        assert_eq!(
            f.validate(3),
            Err(Error::Dimension {
                expected: 3,
                got: 2
            })
        );
        let bad = ScalarField::gaussian_bump(0.0, 1.0, &[0.0, 0.0], 0.0);
        assert!(bad.validate(2).is_err());
        let bad_step = ScalarField::constant(1.0)
            .with_gradient_mode(GradientMode::FiniteDifference { step: -1.0 });
        assert!(bad_step.validate(2).is_err());
    }

    #[test]
    fn gradient_mode_switches_route() {
        let f = ScalarField::gaussian_bump(0.0, 1.0, &[0.2, 0.1], 0.5);
        let p = Vector::from_column_slice(&[0.4, -0.3]);
        let fd = f
            .clone()
            .with_gradient_mode(GradientMode::FiniteDifference { step: 1e-6 });
        assert!((f.gradient(&p) - fd.gradient(&p)).norm() < 1e-9);
        assert_ne!(f.gradient(&p), fd.gradient(&p));
    }

    proptest! {
        #[test]
        fn analytic_gradient_matches_central_differences(
            p in prop::array::uniform3(-1.0f64..1.0),
        ) {
            let p = Vector::from_column_slice(&p);
            let h = 1e-4;
            for f in samples() {
                let a = f.analytic_gradient(&p);
                let fd = fd_gradient(|q| f.value(q), &p, h);
                // O(h²) truncation with bounded third derivatives, plus round-off.
                prop_assert!((a - fd).norm() < 1e-6, "{:?}", f.family);
            }
        }

        #[test]
        fn evaluation_is_deterministic(p in prop::array::uniform3(-2.0f64..2.0)) {
            let p = Vector::from_column_slice(&p);
            for f in samples() {
                prop_assert_eq!(f.value(&p).to_bits(), f.value(&p).to_bits());
                prop_assert_eq!(f.gradient(&p), f.gradient(&p));
            }
        }
    }
}

//! Target densities on R^d.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SamplerError};

/// An unnormalized log density, optionally with its gradient.
///
/// Implementations must be callable from several threads at once.
pub trait Target: Send + Sync {
    fn dim(&self) -> usize;
    fn log_density(&self, x: &[f64]) -> f64;
    fn grad_log_density(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Standard normal in `d` dimensions.
#[derive(Debug, Clone, Copy)]
pub struct StandardGaussian {
    pub d: usize,
}

impl Target for StandardGaussian {
    fn dim(&self) -> usize {
        self.d
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn grad_log_density(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(x.iter().map(|v| -v).collect())
    }
}

/// Independent normals with per-coordinate mean and scale.
#[derive(Debug, Clone)]
pub struct DiagonalGaussian {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, sd: Vec<f64>) -> Result<Self> {
        if mean.len() != sd.len() || mean.is_empty() {
            return Err(SamplerError::Config("mean and sd need the same positive length".into()));
        }
        if sd.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(SamplerError::Config("scales must be positive".into()));
        }
        Ok(DiagonalGaussian { mean, sd })
    }
}

impl Target for DiagonalGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.mean)
            .zip(&self.sd)
            .map(|((v, m), s)| -0.5 * ((v - m) / s).powi(2))
            .sum()
    }

    fn grad_log_density(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            x.iter()
                .zip(&self.mean)
                .zip(&self.sd)
                .map(|((v, m), s)| -(v - m) / (s * s))
                .collect(),
        )
    }
}

/// Neal's funnel: `v ~ N(0, 3^2)` and `x_i | v ~ N(0, e^v)` for the
/// remaining `d - 1` coordinates. Coordinate 0 is `v`.
#[derive(Debug, Clone, Copy)]
pub struct Funnel {
    pub d: usize,
}

impl Target for Funnel {
    fn dim(&self) -> usize {
        self.d
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let v = x[0];
        let rest: f64 = x[1..].iter().map(|z| z * z).sum();
        -v * v / 18.0 - 0.5 * (self.d as f64 - 1.0) * v - 0.5 * rest * (-v).exp()
    }

    fn grad_log_density(&self, x: &[f64]) -> Option<Vec<f64>> {
        let v = x[0];
        let rest: f64 = x[1..].iter().map(|z| z * z).sum();
        let mut g = Vec::with_capacity(self.d);
        g.push(-v / 9.0 - 0.5 * (self.d as f64 - 1.0) + 0.5 * rest * (-v).exp());
        g.extend(x[1..].iter().map(|z| -z * (-v).exp()));
        Some(g)
    }
}

/// Uniform on the box `[lo, hi]^d`; `-inf` outside.
#[derive(Debug, Clone, Copy)]
pub struct UniformBox {
    pub d: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Target for UniformBox {
    fn dim(&self) -> usize {
        self.d
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        if x.iter().all(|v| (self.lo..=self.hi).contains(v)) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn grad_log_density(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; x.len()])
    }
}

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub points: usize,
    pub max_relative_error: f64,
}

/// Compare the analytic gradient with central differences at `points` random
/// locations drawn from `N(0, spread^2 I)`.
///
/// The error at a point is `|fd - g| / max(|g|, 1)` in the Euclidean norm, so
/// the check is relative for large gradients and absolute near stationary
/// points.
pub fn validate_gradient<R: Rng + ?Sized>(
    target: &dyn Target,
    points: usize,
    spread: f64,
    rel_tol: f64,
    rng: &mut R,
) -> Result<GradientCheck> {
    let d = target.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x: Vec<f64> = (0..d)
            .map(|_| spread * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect();
        let g = target
            .grad_log_density(&x)
            .ok_or(SamplerError::MissingGradient)?;
        let fd = finite_difference(target, &x);
        let err = norm(&g.iter().zip(&fd).map(|(a, b)| a - b).collect::<Vec<_>>());
        let rel = err / norm(&g).max(1.0);
        worst = worst.max(rel);
        if rel.is_nan() || rel > rel_tol {
            return Err(SamplerError::Gradient {
                point: x,
                analytic: g,
                numeric: fd,
            });
        }
    }
    Ok(GradientCheck {
        points,
        max_relative_error: worst,
    })
}

fn finite_difference(target: &dyn Target, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-5 * x[i].abs().max(1.0);
            probe[i] = x[i] + h;
            let up = target.log_density(&probe);
            probe[i] = x[i] - h;
            let down = target.log_density(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn built_in_gradients_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let targets: Vec<Box<dyn Target>> = vec![
            Box::new(StandardGaussian { d: 3 }),
            Box::new(DiagonalGaussian::new(vec![1.0, -2.0], vec![0.5, 3.0]).unwrap()),
            Box::new(Funnel { d: 4 }),
        ];
        for t in &targets {
            let check = validate_gradient(t.as_ref(), 100, 1.0, 1e-5, &mut rng).unwrap();
            assert!(check.max_relative_error < 1e-5);
        }
    }

    struct WrongGradient;

    impl Target for WrongGradient {
        fn dim(&self) -> usize {
            1
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            -0.5 * x[0] * x[0]
        }
        fn grad_log_density(&self, x: &[f64]) -> Option<Vec<f64>> {
            Some(vec![-1.01 * x[0]])
        }
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let err = validate_gradient(&WrongGradient, 100, 1.0, 1e-5, &mut rng).unwrap_err();
        assert!(matches!(err, SamplerError::Gradient { .. }));
    }

    #[test]
    fn box_is_flat_inside() {
        let b = UniformBox { d: 2, lo: -1.0, hi: 1.0 };
        assert_eq!(b.log_density(&[0.3, -0.9]), 0.0);
        assert_eq!(b.log_density(&[1.3, 0.0]), f64::NEG_INFINITY);
    }
}

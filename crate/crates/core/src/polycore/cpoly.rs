use num_complex::Complex64;

use super::ratpoly::RatPoly;
use crate::error::{Error, Result};

/// Polynomial with double-precision complex coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct CPoly {
    coeffs: Vec<Complex64>,
}

impl CPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| c.norm() == 0.0) {
            coeffs.pop();
        }
        CPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// `Σ |a_k| |x|^k`, the natural scale for residuals at `x`.
    pub fn abs_scale(&self, x: Complex64) -> f64 {
        let r = x.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Self {
        CPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// `self − t`
    pub fn minus_constant(&self, t: Complex64) -> Self {
        let mut c = self.coeffs.clone();
        if c.is_empty() {
            c.push(-t);
        } else {
            c[0] -= t;
        }
        CPoly::new(c)
    }

    /// All complex roots by Aberth–Ehrlich iteration followed by Newton polishing.
    ///
    /// Intended for square-free input; multiple roots converge only linearly and
    /// may fail the residual check.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.coeffs[n];
        let monic: Vec<Complex64> = self.coeffs.iter().map(|c| c / lead).collect();
        if n == 1 {
            return Ok(vec![-monic[0]]);
        }
        let p = CPoly::new(monic);

        let center = -p.coeffs[n - 1] / n as f64;
        // Fujiwara bound on root moduli around the origin
        let bound = (0..n)
            .map(|k| {
                let scale = if k == 0 { 0.5 } else { 1.0 };
                (p.coeffs[k].norm() * scale).powf(1.0 / (n - k) as f64)
            })
            .fold(0.0_f64, f64::max)
            * 2.0;
        let radius = (bound + center.norm()).max(1e-3) * 0.5 + 1e-3;
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let angle = std::f64::consts::TAU * k as f64 / n as f64 + 0.4;
                center + Complex64::from_polar(radius, angle)
            })
            .collect();

        let mut converged = false;
        for _ in 0..2000 {
            let mut max_rel = 0.0_f64;
            for k in 0..n {
                let (v, dv) = p.eval_with_derivative(z[k]);
                if v.norm() == 0.0 {
                    continue;
                }
                let ratio = v / dv;
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != k)
                    .map(|j| Complex64::new(1.0, 0.0) / (z[k] - z[j]))
                    .sum();
                let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if w.is_finite() {
                    z[k] -= w;
                    max_rel = max_rel.max(w.norm() / (1.0 + z[k].norm()));
                }
            }
            if max_rel < 1e-15 {
                converged = true;
                break;
            }
        }

        for zk in z.iter_mut() {
            for _ in 0..3 {
                let (v, dv) = p.eval_with_derivative(*zk);
                if dv.norm() == 0.0 {
                    break;
                }
                let step = v / dv;
                if !step.is_finite() {
                    break;
                }
                *zk -= step;
            }
        }

        // absolute floor at the root radius admits clustered and multiple roots
        let floor = 1e-14 * p.abs_scale(Complex64::new(bound.max(1.0), 0.0));
        let residual_ok = z
            .iter()
            .all(|&zk| p.eval(zk).norm() <= 1e-10 * p.abs_scale(zk) + floor);
        if !residual_ok || (!converged && z.iter().any(|zk| !zk.is_finite())) {
            return Err(Error::NonConvergence {
                poly: format!("{:?}", self.coeffs),
            });
        }
        Ok(z)
    }
}

impl From<&RatPoly> for CPoly {
    fn from(p: &RatPoly) -> Self {
        CPoly::new(
            p.to_f64()
                .into_iter()
                .map(|c| Complex64::new(c, 0.0))
                .collect(),
        )
    }
}

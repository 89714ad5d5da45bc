//! Seeded samplers for the synthetic distributions the experiments draw from.
//!
//! Gaussian specs are `mu + L g` with `g` standard normal and `L` a covariance
//! factor (so `Sigma = L L^T`). The product families draw each coordinate
//! independently from a log-concave law shifted to have mean exactly `mu`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::seed::Seed;
use crate::tester::SampleBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Gaussian,
    /// Laplace with scale `b = scale` per coordinate; variance `2 scale^2`.
    ProductLaplace,
    /// Uniform on `mu_i +- sqrt(3) scale`; variance `scale^2`.
    ProductUniform,
    /// Exponential with mean `scale`, shifted by `-scale`; variance `scale^2`.
    ProductExponentialCentered,
}

/// Covariance factor for Gaussian specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovFactor {
    /// `Sigma = std^2 I`.
    Scalar { std: f64 },
    /// `Sigma = diag(std_i^2)`.
    Diagonal { std: Vec<f64> },
    /// Lower-triangular `L` with `Sigma = L L^T`, given as rows.
    LowerTriangular { rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub dim: usize,
    pub family: Family,
    pub mean: Vec<f64>,
    /// Gaussian only; absent means identity covariance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov_factor: Option<CovFactor>,
    /// Per-coordinate scale for the product families.
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl DistributionSpec {
    /// `N(mean, I)`.
    pub fn standard_gaussian(dim: usize) -> Self {
        Self::gaussian(vec![0.0; dim], None)
    }

    pub fn gaussian(mean: Vec<f64>, cov_factor: Option<CovFactor>) -> Self {
        DistributionSpec { dim: mean.len(), family: Family::Gaussian, mean, cov_factor, scale: 1.0 }
    }

    /// `N(mean, variance * I)`.
    pub fn isotropic_gaussian(mean: Vec<f64>, variance: f64) -> Self {
        Self::gaussian(mean, Some(CovFactor::Scalar { std: variance.max(0.0).sqrt() }))
    }

    /// Point mass at `mean` (zero covariance factor).
    pub fn point_mass(mean: Vec<f64>) -> Self {
        Self::gaussian(mean, Some(CovFactor::Scalar { std: 0.0 }))
    }

    /// `N(mean, covariance)` with the factor taken from a Cholesky
    /// decomposition. The covariance must be symmetric positive definite.
    pub fn gaussian_with_covariance(mean: Vec<f64>, covariance: &[Vec<f64>]) -> Result<Self> {
        let d = mean.len();
        if covariance.len() != d || covariance.iter().any(|r| r.len() != d) {
            return Err(Error::Shape(format!("covariance must be {d}x{d}")));
        }
        let sigma = DMatrix::from_fn(d, d, |i, j| covariance[i][j]);
        let chol = sigma
            .cholesky()
            .ok_or_else(|| Error::invalid("covariance is not positive definite"))?;
        let l = chol.l();
        let rows = (0..d).map(|i| (0..d).map(|j| l[(i, j)]).collect()).collect();
        let spec = Self::gaussian(mean, Some(CovFactor::LowerTriangular { rows }));
        spec.validate()?;
        Ok(spec)
    }

    /// Product log-concave law with the given mean and scale.
    pub fn product(family: Family, mean: Vec<f64>, scale: f64) -> Self {
        DistributionSpec { dim: mean.len(), family, mean, cov_factor: None, scale }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim must be >= 1"));
        }
        if self.mean.len() != self.dim {
            return Err(Error::Shape(format!("mean has length {}, dim is {}", self.mean.len(), self.dim)));
        }
        if let Some(i) = self.mean.iter().position(|m| !m.is_finite()) {
            return Err(Error::invalid(format!("mean[{i}] is not finite")));
        }
        ensure_positive("scale", self.scale)?;
        match (&self.family, &self.cov_factor) {
            (Family::Gaussian, None) => {}
            (Family::Gaussian, Some(factor)) => self.validate_factor(factor)?,
            (_, Some(_)) => {
                return Err(Error::invalid("cov_factor is only allowed for the GAUSSIAN family"));
            }
            (_, None) => {}
        }
        Ok(())
    }

    fn validate_factor(&self, factor: &CovFactor) -> Result<()> {
        let d = self.dim;
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and >= 0, got {v}")))
            }
        };
        match factor {
            CovFactor::Scalar { std } => nonneg("cov_factor.std", *std),
            CovFactor::Diagonal { std } => {
                if std.len() != d {
                    return Err(Error::Shape(format!("diagonal factor has length {}, dim is {d}", std.len())));
                }
                std.iter().enumerate().try_for_each(|(i, &s)| nonneg(&format!("cov_factor.std[{i}]"), s))
            }
            CovFactor::LowerTriangular { rows } => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(Error::Shape(format!("lower-triangular factor must be {d}x{d}")));
                }
                for (i, row) in rows.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(Error::invalid(format!("cov_factor.rows[{i}][{j}] is not finite")));
                        }
                        if j > i && v != 0.0 {
                            return Err(Error::invalid(format!(
                                "cov_factor.rows[{i}][{j}] is above the diagonal but nonzero"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Exact mean of the distribution.
    pub fn mean_of(&self) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(self.mean.clone())
    }

    /// Per-coordinate variance of a product family.
    fn product_variance(&self) -> f64 {
        match self.family {
            Family::ProductLaplace => 2.0 * self.scale * self.scale,
            _ => self.scale * self.scale,
        }
    }

    /// Dense covariance matrix. `O(d^3)` for a full factor.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        self.validate()?;
        let d = self.dim;
        Ok(match (&self.family, &self.cov_factor) {
            (Family::Gaussian, None) => DMatrix::identity(d, d),
            (Family::Gaussian, Some(CovFactor::Scalar { std })) => DMatrix::identity(d, d) * (std * std),
            (Family::Gaussian, Some(CovFactor::Diagonal { std })) => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, std.iter().map(|s| s * s)))
            }
            (Family::Gaussian, Some(CovFactor::LowerTriangular { rows })) => {
                let l = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                &l * l.transpose()
            }
            _ => DMatrix::identity(d, d) * self.product_variance(),
        })
    }

    /// `||Sigma||_F`.
    pub fn covariance_frobenius(&self) -> Result<f64> {
        self.validate()?;
        let d = self.dim as f64;
        Ok(match (&self.family, &self.cov_factor) {
            (Family::Gaussian, None) => d.sqrt(),
            (Family::Gaussian, Some(CovFactor::Scalar { std })) => std * std * d.sqrt(),
            (Family::Gaussian, Some(CovFactor::Diagonal { std })) => {
                std.iter().map(|s| s.powi(4)).sum::<f64>().sqrt()
            }
            (Family::Gaussian, Some(CovFactor::LowerTriangular { .. })) => self.covariance()?.norm(),
            _ => self.product_variance() * d.sqrt(),
        })
    }

    /// `v^T Sigma v`.
    pub fn covariance_quadratic_form(&self, v: &[f64]) -> Result<f64> {
        self.validate()?;
        if v.len() != self.dim {
            return Err(Error::Shape(format!("vector has length {}, dim is {}", v.len(), self.dim)));
        }
        let sq = |x: f64| x * x;
        Ok(match (&self.family, &self.cov_factor) {
            (Family::Gaussian, None) => v.iter().map(|&x| sq(x)).sum(),
            (Family::Gaussian, Some(CovFactor::Scalar { std })) => sq(*std) * v.iter().map(|&x| sq(x)).sum::<f64>(),
            (Family::Gaussian, Some(CovFactor::Diagonal { std })) => {
                v.iter().zip(std).map(|(&x, s)| sq(x * s)).sum()
            }
            (Family::Gaussian, Some(CovFactor::LowerTriangular { rows })) => {
                // ||L^T v||^2
                (0..self.dim).map(|j| sq((j..self.dim).map(|i| rows[i][j] * v[i]).sum())).sum()
            }
            _ => self.product_variance() * v.iter().map(|&x| sq(x)).sum::<f64>(),
        })
    }

    /// Draws `count` i.i.d. rows. Deterministic in `(self, count, seed)`.
    pub fn sample(&self, count: usize, seed: Seed) -> Result<SampleBatch> {
        self.validate()?;
        if count == 0 {
            return Err(Error::invalid("count must be >= 1"));
        }
        let mut rng = seed.rng();
        let mut data = vec![0.0; count * self.dim];
        let mut noise = vec![0.0; self.dim];
        for row in data.chunks_exact_mut(self.dim) {
            self.draw_row(&mut rng, &mut noise, row);
        }
        Ok(SampleBatch::from_trusted(self.dim, data))
    }

    /// Draws the sum of `count` i.i.d. rows.
    ///
    /// For Gaussian specs this is a single exact draw of `N(count mu,
    /// count Sigma)`, costing `O(d)` instead of `O(count d)`. Other families
    /// sum `count` raw draws.
    pub fn sample_sum<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        let mut noise = vec![0.0; d];
        if self.family == Family::Gaussian {
            let c = count as f64;
            let root = c.sqrt();
            fill_normal(rng, &mut noise);
            self.apply_factor(&noise, &mut out);
            for (o, m) in out.iter_mut().zip(&self.mean) {
                *o = c * m + root * *o;
            }
        } else {
            let mut row = vec![0.0; d];
            for _ in 0..count {
                self.draw_row(rng, &mut noise, &mut row);
                for (o, v) in out.iter_mut().zip(&row) {
                    *o += v;
                }
            }
        }
        out
    }

    fn draw_row<R: Rng + ?Sized>(&self, rng: &mut R, noise: &mut [f64], row: &mut [f64]) {
        match self.family {
            Family::Gaussian => {
                fill_normal(rng, noise);
                self.apply_factor(noise, row);
                for (r, m) in row.iter_mut().zip(&self.mean) {
                    *r += m;
                }
            }
            Family::ProductLaplace => {
                for (r, m) in row.iter_mut().zip(&self.mean) {
                    let a: f64 = Exp1.sample(rng);
                    let b: f64 = Exp1.sample(rng);
                    *r = m + self.scale * (a - b);
                }
            }
            Family::ProductUniform => {
                let half = 3f64.sqrt() * self.scale;
                let unif = Uniform::new(-half, half).expect("scale validated positive");
                for (r, m) in row.iter_mut().zip(&self.mean) {
                    *r = m + unif.sample(rng);
                }
            }
            Family::ProductExponentialCentered => {
                for (r, m) in row.iter_mut().zip(&self.mean) {
                    let e: f64 = Exp1.sample(rng);
                    *r = m + self.scale * (e - 1.0);
                }
            }
        }
    }

    /// `out = L g` (without the mean).
    fn apply_factor(&self, g: &[f64], out: &mut [f64]) {
        match &self.cov_factor {
            None => out.copy_from_slice(g),
            Some(CovFactor::Scalar { std }) => {
                for (o, x) in out.iter_mut().zip(g) {
                    *o = std * x;
                }
            }
            Some(CovFactor::Diagonal { std }) => {
                for ((o, x), s) in out.iter_mut().zip(g).zip(std) {
                    *o = s * x;
                }
            }
            Some(CovFactor::LowerTriangular { rows }) => {
                for (o, row) in out.iter_mut().zip(rows) {
                    *o = row.iter().zip(g).map(|(l, x)| l * x).sum();
                }
            }
        }
    }
}

fn fill_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out {
        *v = rng.sample(StandardNormal);
    }
}

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{kernels, scaled_distance, Kernel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpConfig {
    /// Name of a registered [`Kernel`].
    pub kernel: String,
    /// Initial length scale, shared by every dimension.
    pub lengthscale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
    /// Refit hyperparameters by maximizing the log marginal likelihood.
    pub fit_hyperparameters: bool,
    pub restarts: usize,
    pub iterations: usize,
    /// Centre and scale observations before fitting.
    pub standardize: bool,
    pub lengthscale_bounds: [f64; 2],
    pub signal_variance_bounds: [f64; 2],
    pub noise_variance_bounds: [f64; 2],
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            kernel: "matern52".into(),
            lengthscale: 0.5,
            signal_variance: 1.0,
            noise_variance: 1e-6,
            fit_hyperparameters: true,
            restarts: 4,
            iterations: 80,
            standardize: true,
            lengthscale_bounds: [0.05, 5.0],
            signal_variance_bounds: [0.05, 20.0],
            noise_variance_bounds: [1e-8, 1e-1],
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        kernels().create(&self.kernel)?;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.lengthscale) || !pos(self.signal_variance) || !(self.noise_variance >= 0.0) {
            return Err(Error::Config("GP hyperparameters must be positive".into()));
        }
        for [lo, hi] in [self.lengthscale_bounds, self.signal_variance_bounds, self.noise_variance_bounds] {
            if !(pos(lo) && hi >= lo) {
                return Err(Error::Config("GP hyperparameter bounds must be positive and ordered".into()));
            }
        }
        Ok(())
    }

    fn initial(&self, dim: usize) -> GpHyper {
        GpHyper {
            lengthscales: vec![self.lengthscale; dim],
            signal_variance: self.signal_variance,
            noise_variance: self.noise_variance,
        }
    }
}

/// Exact GP regression with a constant mean.
pub struct GpState {
    kernel: Box<dyn Kernel>,
    pub hyper: GpHyper,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    /// Log marginal likelihood of the standardized data.
    pub log_marginal_likelihood: f64,
}

fn kernel_matrix(kernel: &dyn Kernel, x: &[Vec<f64>], hyper: &GpHyper) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        hyper.signal_variance * kernel.profile(scaled_distance(&x[i], &x[j], &hyper.lengthscales))
    })
}

/// Factorizes `K + noise I`, adding jitter when needed.
fn factorize(k: &DMatrix<f64>, noise: f64) -> Option<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    let scale = (0..n).map(|i| k[(i, i)]).fold(0.0, f64::max).max(1e-12);
    for jitter in [0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4] {
        let extra = noise + jitter * scale;
        let mut m = k.clone();
        for i in 0..n {
            m[(i, i)] += extra;
        }
        if let Some(c) = Cholesky::new(m) {
            return Some((c, extra));
        }
    }
    None
}

fn unpack(theta: &[f64], dim: usize) -> GpHyper {
    GpHyper {
        lengthscales: theta[..dim].iter().map(|v| v.exp()).collect(),
        signal_variance: theta[dim].exp(),
        noise_variance: theta[dim + 1].exp(),
    }
}

/// Log marginal likelihood and its gradient in log-hyperparameter space
/// (`dim` log length scales, log signal variance, log noise variance).
pub fn log_marginal_likelihood(kernel: &dyn Kernel, x: &[Vec<f64>], y: &[f64], theta: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = x.len();
    let dim = x[0].len();
    let hyper = unpack(theta, dim);
    let k = kernel_matrix(kernel, x, &hyper);
    let (chol, _) = factorize(&k, hyper.noise_variance)?;
    let yv = DVector::from_column_slice(y);
    let alpha = chol.solve(&yv);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let lml = -0.5 * yv.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    let inv = chol.inverse();
    // W = alpha alpha^T - K^-1; dL/dtheta = 0.5 tr(W dK/dtheta)
    let w = &alpha * alpha.transpose() - inv;
    let mut grad = vec![0.0; dim + 2];
    for i in 0..n {
        for j in 0..n {
            let r = scaled_distance(&x[i], &x[j], &hyper.lengthscales);
            for d in 0..dim {
                let u = (x[i][d] - x[j][d]) / hyper.lengthscales[d];
                grad[d] += 0.5 * w[(i, j)] * hyper.signal_variance * kernel.log_lengthscale_factor(r) * u * u;
            }
            grad[dim] += 0.5 * w[(i, j)] * k[(i, j)];
        }
        grad[dim + 1] += 0.5 * w[(i, i)] * hyper.noise_variance;
    }
    Some((lml, grad))
}

fn refit<R: Rng + ?Sized>(kernel: &dyn Kernel, x: &[Vec<f64>], y: &[f64], config: &GpConfig, rng: &mut R) -> GpHyper {
    let dim = x[0].len();
    let mut lo = vec![config.lengthscale_bounds[0].ln(); dim];
    let mut hi = vec![config.lengthscale_bounds[1].ln(); dim];
    lo.extend([config.signal_variance_bounds[0].ln(), config.noise_variance_bounds[0].ln()]);
    hi.extend([config.signal_variance_bounds[1].ln(), config.noise_variance_bounds[1].ln()]);
    let init = config.initial(dim);
    let mut first: Vec<f64> = init.lengthscales.iter().map(|l| l.ln()).collect();
    first.extend([init.signal_variance.ln(), init.noise_variance.max(config.noise_variance_bounds[0]).ln()]);
    let clamp = |t: &mut Vec<f64>| {
        for (v, (l, h)) in t.iter_mut().zip(lo.iter().zip(&hi)) {
            *v = v.clamp(*l, *h);
        }
    };
    let mut starts = vec![first];
    for _ in 1..config.restarts.max(1) {
        starts.push(lo.iter().zip(&hi).map(|(l, h)| rng.random_range(*l..=*h)).collect());
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mut theta in starts {
        clamp(&mut theta);
        // Adam ascent in log space
        let (mut m, mut v) = (vec![0.0; theta.len()], vec![0.0; theta.len()]);
        let mut current = log_marginal_likelihood(kernel, x, y, &theta);
        let mut best_here = current.as_ref().map(|(l, _)| (*l, theta.clone()));
        for t in 1..=config.iterations {
            let Some((_, grad)) = &current else { break };
            for i in 0..theta.len() {
                m[i] = 0.9 * m[i] + 0.1 * grad[i];
                v[i] = 0.999 * v[i] + 0.001 * grad[i] * grad[i];
                let mh = m[i] / (1.0 - 0.9f64.powi(t as i32));
                let vh = v[i] / (1.0 - 0.999f64.powi(t as i32));
                theta[i] += 0.1 * mh / (vh.sqrt() + 1e-8);
            }
            clamp(&mut theta);
            current = log_marginal_likelihood(kernel, x, y, &theta);
            if let Some((l, _)) = &current {
                if best_here.as_ref().is_none_or(|(b, _)| l > b) {
                    best_here = Some((*l, theta.clone()));
                }
            }
        }
        if let Some((l, t)) = best_here {
            if l.is_finite() && best.as_ref().is_none_or(|(b, _)| l > *b) {
                best = Some((l, t));
            }
        }
    }
    match best {
        Some((_, theta)) => unpack(&theta, dim),
        None => init,
    }
}

impl GpState {
    /// Fits the surrogate to `(x, y)`. Inputs must lie in `[-1, 1]^d`.
    pub fn fit<R: Rng + ?Sized>(x: &[Vec<f64>], y: &[f64], config: &GpConfig, rng: &mut R) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InvalidInput(format!("{} inputs but {} observations", x.len(), y.len())));
        }
        let dim = x[0].len();
        if dim == 0 || x.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput("inputs must share a positive dimension".into()));
        }
        if x.iter().flatten().any(|v| !(v.abs() <= 1.0 + 1e-12)) {
            return Err(Error::InvalidInput("GP inputs must lie in [-1, 1]".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("observations must be finite".into()));
        }
        let kernel = kernels().create(&config.kernel)?;
        let (y_mean, y_scale) = if config.standardize {
            let n = y.len() as f64;
            let mean = y.iter().sum::<f64>() / n;
            let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            (mean, if sd > 1e-12 * mean.abs().max(1.0) { sd } else { 1.0 })
        } else {
            (0.0, 1.0)
        };
        let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();
        let hyper = if config.fit_hyperparameters && x.len() >= 2 {
            refit(kernel.as_ref(), x, &ys, config, rng)
        } else {
            config.initial(dim)
        };
        let k = kernel_matrix(kernel.as_ref(), x, &hyper);
        let (chol, _) = factorize(&k, hyper.noise_variance)
            .ok_or_else(|| Error::Numeric("kernel matrix is not positive definite after jitter".into()))?;
        let yv = DVector::from_column_slice(&ys);
        let alpha = chol.solve(&yv);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let lml = -0.5 * yv.dot(&alpha) - log_det - 0.5 * ys.len() as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(Self {
            kernel,
            hyper,
            x: x.to_vec(),
            y: y.to_vec(),
            y_mean,
            y_scale,
            chol,
            alpha,
            log_marginal_likelihood: lml,
        })
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    /// Predictive mean and variance of the latent function at `x`, in the
    /// units of the observations.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let ks = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| {
                self.hyper.signal_variance * self.kernel.profile(scaled_distance(xi, x, &self.hyper.lengthscales))
            }),
        );
        let mean = ks.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&ks)
            .unwrap_or_else(|| DVector::zeros(ks.len()));
        let var = (self.hyper.signal_variance - v.dot(&v)).max(0.0);
        (self.y_mean + self.y_scale * mean, var * self.y_scale * self.y_scale)
    }
}

use crate::registry::Registry;

/// Stationary covariance written in terms of the length-scaled distance
/// `r = sqrt(sum_d ((a_d - b_d) / l_d)^2)`, with unit signal variance.
pub trait Kernel: Send + Sync {
    fn name(&self) -> &'static str;
    fn profile(&self, r: f64) -> f64;
    /// `g(r)` such that `d k / d log l_d = g(r) * ((a_d - b_d) / l_d)^2`.
    fn log_lengthscale_factor(&self, r: f64) -> f64;
}

pub struct Matern52;
pub struct SquaredExponential;

const SQRT5: f64 = 2.236_067_977_499_79;

impl Kernel for Matern52 {
    fn name(&self) -> &'static str {
        "matern52"
    }

    fn profile(&self, r: f64) -> f64 {
        (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * (-SQRT5 * r).exp()
    }

    fn log_lengthscale_factor(&self, r: f64) -> f64 {
        5.0 / 3.0 * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
    }
}

impl Kernel for SquaredExponential {
    fn name(&self) -> &'static str {
        "rbf"
    }

    fn profile(&self, r: f64) -> f64 {
        (-0.5 * r * r).exp()
    }

    fn log_lengthscale_factor(&self, r: f64) -> f64 {
        (-0.5 * r * r).exp()
    }
}

pub fn kernels() -> Registry<dyn Kernel> {
    Registry::<dyn Kernel>::new("kernel")
        .with("matern52", || Box::new(Matern52))
        .with("rbf", || Box::new(SquaredExponential))
}

pub fn scaled_distance(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum::<f64>()
        .sqrt()
}

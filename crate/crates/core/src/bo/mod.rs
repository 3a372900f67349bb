//! Gaussian-process Bayesian optimization over the normalized parameter
//! cube, and the estimation loop that matches a target sequence.

mod acquisition;
mod estimate;
mod gp;
mod kernel;
mod optimize;
mod stop;

use serde::{Deserialize, Serialize};

use crate::config::{PhysicalParams, SearchSpace};

pub use acquisition::{
    acquisitions, expected_improvement, propose_next, Acquisition, ExpectedImprovement,
    ProposeSettings, UpperConfidenceBound,
};
pub use estimate::{estimate, target_embeddings, Estimate, RelativeErrors};
pub use gp::{log_marginal_likelihood, GpConfig, GpHyper, GpState};
pub use kernel::{kernels, scaled_distance, Kernel, Matern52, SquaredExponential};
pub use optimize::{maximize, BoConfig, BoTrace, Evaluation, TraceEntry};
pub use stop::{stop_check, stop_rules, NeverStop, RelativeChange, StopReason, StopRule};

/// Physical parameters together with their normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub physical: PhysicalParams,
    pub normalized: [f64; 3],
}

impl ParamVector {
    pub fn from_normalized(x: [f64; 3], space: &SearchSpace) -> Self {
        Self {
            physical: denormalize(x, space),
            normalized: x,
        }
    }
}

/// Affine map of each search interval onto `[-1, 1]`.
pub fn normalize(p: &PhysicalParams, space: &SearchSpace) -> [f64; 3] {
    let v = p.to_array();
    std::array::from_fn(|i| {
        let [lo, hi] = space.bounds[i];
        2.0 * (v[i] - lo) / (hi - lo) - 1.0
    })
}

pub fn denormalize(x: [f64; 3], space: &SearchSpace) -> PhysicalParams {
    PhysicalParams::from_array(std::array::from_fn(|i| {
        let [lo, hi] = space.bounds[i];
        lo + (x[i] + 1.0) * 0.5 * (hi - lo)
    }))
}

/// Turns a distance into a score to maximize; the best possible is 0.
pub fn negate_objective(psd_value: f64) -> f64 {
    -psd_value
}

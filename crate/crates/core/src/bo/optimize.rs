use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::acquisition::{acquisitions, propose_next, ProposeSettings};
use super::gp::{GpConfig, GpState};
use super::stop::{stop_rules, StopReason};
use crate::config::PhysicalParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoConfig {
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// The stop rule is consulted only from this many evaluations on.
    pub min_iterations: usize,
    /// Uniform random evaluations after the initial point and before the
    /// surrogate takes over.
    pub initial_random: usize,
    /// Name of a registered acquisition.
    pub acquisition: String,
    /// Name of a registered stop rule.
    pub stop_rule: String,
    pub gp: GpConfig,
    pub candidates: usize,
    pub refine_starts: usize,
    /// Objective recorded for a parameter set whose simulation fails.
    pub failure_penalty: f64,
    pub seed: u64,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            budget: 50,
            min_iterations: 10,
            initial_random: 0,
            acquisition: "ei".into(),
            stop_rule: "relative-10pct".into(),
            gp: GpConfig::default(),
            candidates: 1024,
            refine_starts: 8,
            failure_penalty: -1e6,
            seed: 0,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("BO budget must be at least 1".into()));
        }
        if self.candidates == 0 || self.refine_starts == 0 {
            return Err(Error::Config("candidate and refinement counts must be positive".into()));
        }
        if !self.failure_penalty.is_finite() {
            return Err(Error::Config("failure penalty must be finite".into()));
        }
        acquisitions().create(&self.acquisition)?;
        stop_rules().create(&self.stop_rule)?;
        self.gp.validate()
    }
}

/// One evaluation of the search, with the incumbent after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Normalized proposal.
    pub x: Vec<f64>,
    /// Proposal in physical units, when the search has them.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub params: Option<PhysicalParams>,
    pub objective: f64,
    pub failed: bool,
    pub best_x: Vec<f64>,
    pub best_objective: f64,
    /// Set on the final entry.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stop: Option<StopReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoTrace {
    pub entries: Vec<TraceEntry>,
    pub stop: StopReason,
}

impl BoTrace {
    pub fn best(&self) -> &TraceEntry {
        self.entries.last().expect("trace is never empty")
    }

    /// One JSON object per line, iteration order.
    pub fn to_json_lines(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
            .collect()
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let entries: Vec<TraceEntry> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        let stop = entries
            .last()
            .and_then(|e| e.stop)
            .ok_or_else(|| Error::InvalidInput("trace has no final entry with a stop reason".into()))?;
        Ok(Self { entries, stop })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_json_lines().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Outcome of one objective evaluation.
pub enum Evaluation {
    Value(f64),
    /// The simulation could not be completed; the penalty is recorded.
    Failed,
}

/// Maximizes `objective` over `[-1, 1]^dim` starting from the origin.
/// `label` maps a normalized point to physical units for the trace.
pub fn maximize(
    config: &BoConfig,
    dim: usize,
    mut objective: impl FnMut(&[f64]) -> Result<Evaluation>,
    label: impl Fn(&[f64]) -> Option<PhysicalParams>,
) -> Result<BoTrace> {
    config.validate()?;
    let acquisition = acquisitions().create(&config.acquisition)?;
    let stop_rule = stop_rules().create(&config.stop_rule)?;
    let settings = ProposeSettings {
        candidates: config.candidates,
        refine_starts: config.refine_starts,
        ..ProposeSettings::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut failed: Vec<bool> = Vec::new();
    let mut entries: Vec<TraceEntry> = Vec::new();
    let mut incumbents: Vec<Vec<f64>> = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut stop = StopReason::Budget;

    for it in 0..config.budget {
        let x = if it == 0 {
            vec![0.0; dim]
        } else if it <= config.initial_random {
            (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
        } else {
            // failed points enter the surrogate at the worst successful value
            let floor = ys
                .iter()
                .zip(&failed)
                .filter(|(_, f)| !**f)
                .map(|(y, _)| *y)
                .fold(f64::INFINITY, f64::min);
            let y_fit: Vec<f64> = ys
                .iter()
                .zip(&failed)
                .map(|(y, f)| if *f && floor.is_finite() { floor } else { *y })
                .collect();
            let gp = GpState::fit(&xs, &y_fit, &config.gp, &mut rng)?;
            let incumbent = best.as_ref().map(|b| b.1).unwrap_or(f64::NEG_INFINITY);
            let incumbent = if incumbent == config.failure_penalty && floor.is_finite() { floor } else { incumbent };
            propose_next(&gp, acquisition.as_ref(), incumbent, &settings, &mut rng).0
        };
        let (y, did_fail) = match objective(&x)? {
            Evaluation::Value(v) => {
                if !v.is_finite() {
                    return Err(Error::Numeric(format!("objective returned {v}")));
                }
                (v, false)
            }
            Evaluation::Failed => (config.failure_penalty, true),
        };
        if best.as_ref().is_none_or(|b| y > b.1) {
            best = Some((x.clone(), y));
        }
        let (bx, by) = best.clone().expect("set above");
        xs.push(x.clone());
        ys.push(y);
        failed.push(did_fail);
        incumbents.push(bx.clone());
        log::info!("iteration {it}: objective {y:.6e}, best {by:.6e}");
        entries.push(TraceEntry {
            iteration: it,
            params: label(&x),
            x,
            objective: y,
            failed: did_fail,
            best_x: bx,
            best_objective: by,
            stop: None,
        });
        if it + 1 >= config.min_iterations && stop_rule.should_stop(&incumbents) {
            stop = StopReason::Converged;
            break;
        }
    }
    if let Some(last) = entries.last_mut() {
        last.stop = Some(stop);
    }
    Ok(BoTrace { entries, stop })
}

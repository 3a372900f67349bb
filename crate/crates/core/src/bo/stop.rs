use serde::{Deserialize, Serialize};

use crate::registry::Registry;

/// Decides from the incumbent history (normalized coordinates, one entry
/// per iteration) whether the search has settled.
pub trait StopRule: Send + Sync {
    fn name(&self) -> &'static str;
    fn should_stop(&self, incumbents: &[Vec<f64>]) -> bool;
}

/// Stops once each of the last three incumbent moves changed every
/// coordinate by at most 10 %, measured against `max(|previous|, 0.05)`.
pub struct RelativeChange;

/// Never stops early; the budget alone ends the search.
pub struct NeverStop;

pub const RELATIVE_TOLERANCE: f64 = 0.10;
pub const RELATIVE_FLOOR: f64 = 0.05;
pub const STABLE_PAIRS: usize = 3;

impl StopRule for RelativeChange {
    fn name(&self) -> &'static str {
        "relative-10pct"
    }

    fn should_stop(&self, incumbents: &[Vec<f64>]) -> bool {
        stop_check(incumbents)
    }
}

impl StopRule for NeverStop {
    fn name(&self) -> &'static str {
        "none"
    }

    fn should_stop(&self, _incumbents: &[Vec<f64>]) -> bool {
        false
    }
}

pub fn stop_rules() -> Registry<dyn StopRule> {
    Registry::<dyn StopRule>::new("stop rule")
        .with("relative-10pct", || Box::new(RelativeChange))
        .with("none", || Box::new(NeverStop))
}

pub fn stop_check(incumbents: &[Vec<f64>]) -> bool {
    if incumbents.len() < STABLE_PAIRS + 1 {
        return false;
    }
    incumbents[incumbents.len() - STABLE_PAIRS - 1..].windows(2).all(|w| {
        w[0].iter()
            .zip(&w[1])
            .all(|(prev, next)| (next - prev).abs() / prev.abs().max(RELATIVE_FLOOR) <= RELATIVE_TOLERANCE)
    })
}

/// Why a search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    Budget,
}

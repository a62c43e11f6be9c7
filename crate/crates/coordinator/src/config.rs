use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use modelsplit_core::engine::{Branching, Budget, SearchMode};

/// Settings for one distributed solve. Persisted in the spool so a resumed
/// run uses the same schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinatorConfig {
    /// Number of parts per split, at least 2.
    pub split_factor: usize,
    pub worker_count: usize,
    /// Budget of the root item.
    pub initial_budget: Budget,
    /// Per-depth budget multiplier, at least 1.
    pub budget_growth: f64,
    /// Ceiling applied to every scheduled budget component.
    pub max_budget: u64,
    pub mode: SearchMode,
    pub branching: Branching,
    pub spool_dir: PathBuf,
    /// Claims of one item allowed before the run is abandoned.
    pub max_attempts: u32,
}

impl CoordinatorConfig {
    pub fn new(spool_dir: impl Into<PathBuf>) -> Self {
        Self {
            split_factor: 2,
            worker_count: 1,
            initial_budget: Budget::nodes(1000),
            budget_growth: 2.0,
            max_budget: 1 << 40,
            mode: SearchMode::First,
            branching: Branching::NWay,
            spool_dir: spool_dir.into(),
            max_attempts: 5,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.split_factor < 2 {
            return Err(format!("split factor must be at least 2, got {}", self.split_factor));
        }
        if self.worker_count == 0 {
            return Err("at least one worker is required".into());
        }
        if !(self.budget_growth >= 1.0 && self.budget_growth.is_finite()) {
            return Err(format!(
                "budget growth must be a finite number >= 1, got {}",
                self.budget_growth
            ));
        }
        if self.initial_budget.is_unbounded() {
            return Err("the initial budget must bound nodes or time".into());
        }
        if self.max_attempts == 0 {
            return Err("max attempts must be positive".into());
        }
        Ok(())
    }
}

/// `initial × g^depth`, per budget component, capped at `max_budget`.
pub fn next_budget(depth: u32, cfg: &CoordinatorConfig) -> Budget {
    let scale = |base: u64| -> u64 {
        let grown = base as f64 * cfg.budget_growth.powi(depth.min(i32::MAX as u32) as i32);
        if grown >= cfg.max_budget as f64 {
            cfg.max_budget
        } else {
            (grown.round() as u64).min(cfg.max_budget)
        }
    };
    Budget {
        max_nodes: cfg.initial_budget.max_nodes.map(scale),
        max_millis: cfg.initial_budget.max_millis.map(scale),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(initial: u64, g: f64) -> CoordinatorConfig {
        CoordinatorConfig {
            initial_budget: Budget::nodes(initial),
            budget_growth: g,
            ..CoordinatorConfig::new("spool")
        }
    }

    #[test]
    fn geometric_schedule() {
        assert_eq!(next_budget(0, &cfg(100, 2.0)), Budget::nodes(100));
        assert_eq!(next_budget(3, &cfg(100, 2.0)), Budget::nodes(800));
        for k in 0..10 {
            assert_eq!(next_budget(k, &cfg(100, 1.0)), Budget::nodes(100));
        }
    }

    #[test]
    fn schedule_is_capped() {
        let c = CoordinatorConfig {
            max_budget: 5000,
            ..cfg(100, 2.0)
        };
        assert_eq!(next_budget(6, &c), Budget::nodes(5000));
        assert_eq!(next_budget(u32::MAX, &c), Budget::nodes(5000));
    }

    #[test]
    fn time_budgets_scale_too() {
        let c = CoordinatorConfig {
            initial_budget: Budget::millis(10),
            budget_growth: 1.5,
            ..CoordinatorConfig::new("spool")
        };
        assert_eq!(next_budget(2, &c), Budget::millis(23));
    }

    #[test]
    fn validation() {
        assert!(cfg(10, 2.0).validate().is_ok());
        assert!(CoordinatorConfig {
            split_factor: 1,
            ..cfg(10, 2.0)
        }
        .validate()
        .is_err());
        assert!(cfg(10, 0.5).validate().is_err());
        assert!(cfg(10, f64::NAN).validate().is_err());
        assert!(CoordinatorConfig {
            initial_budget: Budget::unbounded(),
            ..cfg(10, 2.0)
        }
        .validate()
        .is_err());
    }
}

//! Consistency monitor for the non-squeezing bound: a verified ball built
//! honestly must fit in its certified cylinder.

use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

/// Relative slack allowed before a capacity counts as exceeding the cylinder.
pub const MONITOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub label: String,
    pub ball_capacity: f64,
    pub cylinder_capacity: f64,
    pub verified: bool,
    pub honest: bool,
}

impl Observation {
    pub fn is_violation(&self) -> bool {
        self.honest && self.verified && self.ball_capacity > self.cylinder_capacity * (1.0 + MONITOR_TOLERANCE)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NonSqueezingMonitor {
    pub observations: Vec<Observation>,
}

impl NonSqueezingMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, label: &str, ball_capacity: f64, cylinder_capacity: f64, verified: bool, honest: bool) -> bool {
        let o = Observation {
            label: label.into(),
            ball_capacity,
            cylinder_capacity,
            verified,
            honest,
        };
        let bad = o.is_violation();
        self.observations.push(o);
        !bad
    }

    pub fn violations(&self) -> Vec<&Observation> {
        self.observations.iter().filter(|o| o.is_violation()).collect()
    }

    pub fn honest_count(&self) -> usize {
        self.observations.iter().filter(|o| o.honest && o.verified).count()
    }
}

fn global() -> &'static Mutex<NonSqueezingMonitor> {
    static MONITOR: OnceLock<Mutex<NonSqueezingMonitor>> = OnceLock::new();
    MONITOR.get_or_init(|| Mutex::new(NonSqueezingMonitor::new()))
}

/// Records into the process-wide monitor.
pub fn observe_global(label: &str, ball_capacity: f64, cylinder_capacity: f64, verified: bool, honest: bool) -> bool {
    global().lock().unwrap_or_else(|e| e.into_inner()).observe(label, ball_capacity, cylinder_capacity, verified, honest)
}

pub fn global_snapshot() -> NonSqueezingMonitor {
    global().lock().unwrap_or_else(|e| e.into_inner()).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_honest_verified_excess_counts() {
        let mut m = NonSqueezingMonitor::new();
        assert!(m.observe("fits", 1.0, 1.2, true, true));
        assert!(m.observe("counterfactual", 1.0, 0.65, false, false));
        assert!(m.observe("unverified", 1.0, 0.65, false, true));
        assert!(!m.observe("bad", 1.0, 0.65, true, true));
        assert_eq!(m.violations().len(), 1);
        assert_eq!(m.honest_count(), 2);
    }
}

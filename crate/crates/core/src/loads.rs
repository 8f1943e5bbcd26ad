//! Appliance load agents.
//!
//! An appliance runs through an ordered sequence of operational states, each
//! a power plateau with a duration, a maximum tolerated start delay and an
//! interruption severity. A usage model decides when the device wants to
//! begin an operation. Once it wants power, the load is a reactive market
//! agent: given the broker's price vector it replies with a quantity vector
//! demanding its state power on exactly one catalog duration, chosen
//! best-fit — the shortest affordable duration long enough to contain the
//! remaining state time, falling back to the longest affordable one (which
//! starts a re-purchase chain for states outlasting the catalog).
//!
//! Contracts are firm reservations. Leftover contract time after a state
//! completes keeps covering the following states as long as their power fits
//! under the reserved level; a load never bids while it holds a covering
//! contract.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::broker::{PriceVector, QuantityVector, SlaContract};
use crate::scenario::SlaCatalog;
use crate::{Error, Result};

/// One step of an appliance's operation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationState {
    /// Peak power drawn while this state executes, in watts.
    pub power_w: f64,
    /// State duration in seconds.
    pub duration_s: u64,
    /// Maximum tolerated delay before this state starts, in seconds. For the
    /// first state this is the device start delay; for later states it bounds
    /// mid-operation waits at state boundaries.
    #[serde(default = "default_start_delay")]
    pub start_delay_max_s: u64,
    /// Severity weight added to the discomfort tally when this state is
    /// interrupted.
    #[serde(default = "default_severity")]
    pub interruption_severity: f64,
}

fn default_start_delay() -> u64 {
    3600
}

fn default_severity() -> f64 {
    1.0
}

/// When a device decides it wants to start an operation.
#[derive(Debug, Clone, PartialEq)]
pub enum UsageModel {
    /// Per-second start probability `willingness × starts_per_day / 86400`.
    /// On operation completion the willingness is multiplied by `decay` and
    /// recovers linearly back to its baseline over `recovery_seconds`.
    Probabilistic { willingness: f64, decay: f64, recovery_seconds: u32, starts_per_day: f64 },
    /// Start exactly at the listed epoch seconds (sorted ascending).
    EventTrace { events: Vec<u64> },
}

/// An appliance: operation model, price sensitivity ψ (€/kWh; infinite for
/// inflexible devices), and usage model.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceSpec {
    pub name: String,
    pub psi: f64,
    pub states: Vec<OperationState>,
    pub usage: UsageModel,
}

impl ApplianceSpec {
    pub(crate) fn validate(&self, field: &str) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::validation(format!("{field}.name"), "must not be empty"));
        }
        if self.psi.is_nan() || self.psi < 0.0 {
            return Err(Error::validation(format!("{field}.psi"), "must be >= 0"));
        }
        if self.states.is_empty() {
            return Err(Error::validation(format!("{field}.states"), "must not be empty"));
        }
        for (i, st) in self.states.iter().enumerate() {
            if !(st.power_w.is_finite() && st.power_w >= 0.0) {
                return Err(Error::validation(
                    format!("{field}.states[{i}].power_w"),
                    "must be finite and >= 0",
                ));
            }
            if st.duration_s == 0 {
                return Err(Error::validation(
                    format!("{field}.states[{i}].duration_s"),
                    "must be >= 1",
                ));
            }
            if !(st.interruption_severity.is_finite() && st.interruption_severity >= 0.0) {
                return Err(Error::validation(
                    format!("{field}.states[{i}].interruption_severity"),
                    "must be finite and >= 0",
                ));
            }
        }
        match &self.usage {
            UsageModel::Probabilistic { willingness, decay, recovery_seconds, starts_per_day } => {
                if !(0.0..=1.0).contains(willingness) {
                    return Err(Error::validation(
                        format!("{field}.usage.willingness"),
                        "must be in [0, 1]",
                    ));
                }
                if !(0.0..=1.0).contains(decay) {
                    return Err(Error::validation(format!("{field}.usage.decay"), "must be in [0, 1]"));
                }
                if *recovery_seconds == 0 {
                    return Err(Error::validation(
                        format!("{field}.usage.recovery_seconds"),
                        "must be >= 1",
                    ));
                }
                if !(starts_per_day.is_finite() && *starts_per_day >= 0.0) {
                    return Err(Error::validation(
                        format!("{field}.usage.starts_per_day"),
                        "must be finite and >= 0",
                    ));
                }
            }
            UsageModel::EventTrace { events } => {
                for w in events.windows(2) {
                    if w[1] <= w[0] {
                        return Err(Error::validation(
                            format!("{field}.usage.events"),
                            "must be strictly increasing",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Lifecycle phase of a load agent.
#[derive(Debug, Clone, PartialEq)]
pub enum Phase {
    Idle,
    /// Wants to begin `pending_state` and has been waiting since `since`.
    Waiting { pending_state: usize, since: u64 },
    /// Executing `state` with `elapsed` seconds done.
    Running { state: usize, elapsed: u64 },
    /// Lost power mid-state at `since`; keeps bidding to resume.
    Interrupted { state: usize, elapsed: u64, since: u64 },
}

/// Events emitted by [`LoadAgent::step`].
#[derive(Debug, Clone, PartialEq)]
pub enum LoadEvent {
    StateCompleted { state: usize },
    OperationCompleted,
    Abandoned { pending_state: usize, waited_s: u64 },
    Interrupted { state: usize, severity: f64 },
    Resumed { state: usize, downtime_s: u64 },
}

/// A stateful appliance agent.
#[derive(Debug, Clone)]
pub struct LoadAgent {
    pub spec: ApplianceSpec,
    pub phase: Phase,
    /// Current start willingness; tracks the usage model baseline.
    pub willingness: f64,
    /// Steps in which the load wanted power, held no contract, and got one.
    pub cbp: u64,
    /// Steps in which the load wanted power, held no contract, and got none.
    pub cnbp: u64,
    /// Whether the load drew power in the previous step.
    powered_prev: bool,
}

impl LoadAgent {
    pub fn new(spec: ApplianceSpec) -> Self {
        let willingness = match &spec.usage {
            UsageModel::Probabilistic { willingness, .. } => *willingness,
            UsageModel::EventTrace { .. } => 1.0,
        };
        Self { spec, phase: Phase::Idle, willingness, cbp: 0, cnbp: 0, powered_prev: false }
    }

    /// Power the load wants to draw right now, or `None` when idle.
    pub fn wanted_power(&self) -> Option<f64> {
        let state = match self.phase {
            Phase::Idle => return None,
            Phase::Waiting { pending_state, .. } => pending_state,
            Phase::Running { state, .. } => state,
            Phase::Interrupted { state, .. } => state,
        };
        Some(self.spec.states[state].power_w)
    }

    /// Seconds of the wanted state still to run.
    pub fn remaining_state_seconds(&self) -> Option<u64> {
        match self.phase {
            Phase::Idle => None,
            Phase::Waiting { pending_state, .. } => Some(self.spec.states[pending_state].duration_s),
            Phase::Running { state, elapsed } | Phase::Interrupted { state, elapsed, .. } => {
                Some(self.spec.states[state].duration_s.saturating_sub(elapsed))
            }
        }
    }

    /// Whether the agent should start an operation in `[t, t+dt)`.
    ///
    /// Only meaningful while idle. Event traces fire on any listed second in
    /// the window; the probabilistic model draws with probability
    /// `willingness × starts_per_day/86400 × dt`.
    pub fn sample_start<R: Rng>(&self, t: u64, dt: u64, rng: &mut R) -> bool {
        debug_assert_eq!(self.phase, Phase::Idle);
        match &self.spec.usage {
            UsageModel::EventTrace { events } => {
                let idx = events.partition_point(|&e| e < t);
                idx < events.len() && events[idx] < t + dt
            }
            UsageModel::Probabilistic { starts_per_day, .. } => {
                let p = (self.willingness * starts_per_day / 86_400.0 * dt as f64).clamp(0.0, 1.0);
                rng.gen::<f64>() < p
            }
        }
    }

    /// Begin waiting for the first operation state.
    pub fn request_start(&mut self, t: u64) {
        debug_assert_eq!(self.phase, Phase::Idle);
        self.phase = Phase::Waiting { pending_state: 0, since: t };
    }

    /// Advance one trading cycle of `dt` seconds.
    ///
    /// `covering` is the active contract (if any) that covers the wanted
    /// state after this cycle's allocation. Returns the lifecycle events of
    /// this step.
    pub fn step(&mut self, covering: Option<&SlaContract>, t: u64, dt: u64) -> Vec<LoadEvent> {
        self.recover_willingness(dt);
        let mut events = Vec::new();
        let covered = covering.is_some();
        match self.phase.clone() {
            Phase::Idle => {
                self.powered_prev = false;
            }
            Phase::Waiting { pending_state, since } => {
                if covered {
                    self.phase = Phase::Running { state: pending_state, elapsed: 0 };
                    self.advance(t, dt, &mut events);
                } else {
                    let waited = t + dt - since;
                    if waited > self.spec.states[pending_state].start_delay_max_s {
                        self.phase = Phase::Idle;
                        events.push(LoadEvent::Abandoned { pending_state, waited_s: waited });
                    }
                    self.powered_prev = false;
                }
            }
            Phase::Running { state, elapsed } => {
                if covered {
                    self.advance(t, dt, &mut events);
                } else {
                    // Powered last step but not this one: mid-state outage.
                    debug_assert!(self.powered_prev);
                    self.phase = Phase::Interrupted { state, elapsed, since: t };
                    events.push(LoadEvent::Interrupted {
                        state,
                        severity: self.spec.states[state].interruption_severity,
                    });
                    self.powered_prev = false;
                }
            }
            Phase::Interrupted { state, elapsed, since } => {
                if covered {
                    events.push(LoadEvent::Resumed { state, downtime_s: t - since });
                    self.phase = Phase::Running { state, elapsed };
                    self.advance(t, dt, &mut events);
                }
            }
        }
        events
    }

    fn advance(&mut self, t: u64, dt: u64, events: &mut Vec<LoadEvent>) {
        self.powered_prev = true;
        let (state, elapsed) = match self.phase {
            Phase::Running { state, elapsed } => (state, elapsed),
            _ => unreachable!("advance only from Running"),
        };
        let elapsed = elapsed + dt;
        if elapsed >= self.spec.states[state].duration_s {
            events.push(LoadEvent::StateCompleted { state });
            if state + 1 == self.spec.states.len() {
                events.push(LoadEvent::OperationCompleted);
                self.decay_willingness();
                self.phase = Phase::Idle;
            } else {
                // The next state begins next cycle; with leftover contract
                // time it is picked up seamlessly, otherwise the state's own
                // start-delay bound applies.
                self.phase = Phase::Waiting { pending_state: state + 1, since: t + dt };
            }
        } else {
            self.phase = Phase::Running { state, elapsed };
        }
    }

    fn decay_willingness(&mut self) {
        if let UsageModel::Probabilistic { decay, .. } = &self.spec.usage {
            self.willingness *= decay;
        }
    }

    fn recover_willingness(&mut self, dt: u64) {
        if let UsageModel::Probabilistic { willingness, decay, recovery_seconds, .. } =
            &self.spec.usage
        {
            if self.willingness < *willingness {
                let rate = willingness * (1.0 - decay) / *recovery_seconds as f64;
                self.willingness = (self.willingness + rate * dt as f64).min(*willingness);
            }
        }
    }
}

/// Best-fit SLA selection.
///
/// Returns a quantity vector demanding `power_w` on exactly one duration: the
/// shortest catalog duration ≥ `remaining_s` priced within ψ; if no
/// affordable duration is big enough, the longest affordable one; the zero
/// vector when nothing is affordable.
pub fn select_sla(
    power_w: f64,
    remaining_s: u64,
    prices: &PriceVector,
    psi: f64,
    catalog: &SlaCatalog,
) -> QuantityVector {
    debug_assert_eq!(prices.len(), catalog.len());
    let mut best_fit: Option<usize> = None;
    let mut longest_affordable: Option<usize> = None;
    for (k, &duration) in catalog.durations.iter().enumerate() {
        if prices.get(k) > psi {
            continue;
        }
        longest_affordable = Some(k);
        if duration as u64 >= remaining_s && best_fit.is_none() {
            best_fit = Some(k);
        }
    }
    match best_fit.or(longest_affordable) {
        Some(k) if power_w > 0.0 => QuantityVector::single(catalog.len(), k, power_w),
        _ => QuantityVector::zero(catalog.len()),
    }
}

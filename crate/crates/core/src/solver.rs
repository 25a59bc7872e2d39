//! Per-slot solver: alternates closed-form power control with FP phase
//! design, plus an exhaustive reference over all discrete phase vectors.

use rayon::prelude::*;

use crate::channel::ChannelSlot;
use crate::config::{ScenarioConfig, SolverSettings};
use crate::error::{Error, Result};
use crate::irs_fp::{design_phases, PhaseVector};
use crate::power::{optimal_powers, PowerDecision};

/// Inputs of one slot problem.
#[derive(Debug, Clone, Copy)]
pub struct SlotProblem<'a> {
    pub weights: &'a [f64],
    pub queue: &'a [f64],
    pub arrival: &'a [f64],
    pub channel: &'a ChannelSlot,
    pub config: &'a ScenarioConfig,
}

impl SlotProblem<'_> {
    /// Closed-form powers for fixed phases.
    pub fn powers_at(&self, phases: &PhaseVector) -> PowerDecision {
        let gains = self.channel.gains(&phases.values());
        optimal_powers(self.weights, self.queue, self.arrival, &gains, self.config)
    }

    /// Objective of a power decision.
    pub fn objective(&self, decision: &PowerDecision) -> f64 {
        slot_objective(&decision.power, &decision.rate, self.weights, self.config)
    }

    /// Decision with closed-form powers for the given phases.
    pub fn decide_at(&self, phases: PhaseVector) -> SlotDecision {
        let pd = self.powers_at(&phases);
        let objective = self.objective(&pd);
        SlotDecision {
            power: pd.power,
            rate: pd.rate,
            phases,
            objective,
            iterations: 0,
            converged: true,
            trace: vec![objective],
        }
    }
}

/// `-sum_k omega_k R_k + V (sum_k p_k + MN P_I)`.
pub fn slot_objective(
    power: &[f64],
    rate: &[f64],
    weights: &[f64],
    config: &ScenarioConfig,
) -> f64 {
    let utility: f64 = weights.iter().zip(rate).map(|(w, r)| w * r).sum();
    let total: f64 = power.iter().sum::<f64>() + config.irs_static_power();
    -utility + config.control_v * total
}

/// Committed decision of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecision {
    /// W per device.
    pub power: Vec<f64>,
    /// bits/s per device.
    pub rate: Vec<f64>,
    pub phases: PhaseVector,
    pub objective: f64,
    /// Outer iterations run.
    pub iterations: usize,
    pub converged: bool,
    /// Objective of the warm start and after each accepted iteration.
    pub trace: Vec<f64>,
}

impl SlotDecision {
    pub fn transmit_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Alternating optimization from `warm_start`.
///
/// Each outer iteration designs phases for the current powers, then
/// re-optimizes the powers for the new phases. The committed pair therefore
/// always has powers that are optimal for its phases. An iteration whose
/// objective would increase is rejected and ends the loop. Stops once the
/// squared objective change drops below the tolerance or after `max_outer`
/// iterations.
pub fn solve_slot(
    problem: &SlotProblem,
    settings: &SolverSettings,
    warm_start: &PhaseVector,
) -> SlotDecision {
    let mut best = problem.decide_at(warm_start.clone());
    best.converged = false;
    if warm_start.is_empty() {
        best.converged = true;
        return best;
    }
    while best.iterations < settings.max_outer {
        best.iterations += 1;
        let design = design_phases(
            &best.power,
            problem.weights,
            problem.channel,
            &best.phases,
            problem.config,
            settings,
        );
        let pd = problem.powers_at(&design.phases);
        let objective = problem.objective(&pd);
        if objective > best.objective {
            best.converged = true;
            break;
        }
        let delta = best.objective - objective;
        best.power = pd.power;
        best.rate = pd.rate;
        best.phases = design.phases;
        best.objective = objective;
        best.trace.push(objective);
        if delta * delta < settings.tolerance {
            best.converged = true;
            break;
        }
    }
    best
}

/// Number of phase vectors, `(2^b)^(MN)`, as a float.
pub fn candidate_count(elements: usize, bits: u32) -> f64 {
    2f64.powf(f64::from(bits) * elements as f64)
}

/// Phase vector number `code` in base-`2^b` digits, element 0 least significant.
pub fn decode_phases(code: u64, elements: usize, bits: u32) -> PhaseVector {
    let mask = (1u64 << bits) - 1;
    let indices = (0..elements)
        .map(|n| ((code >> (n as u32 * bits)) & mask) as u32)
        .collect();
    PhaseVector::from_indices(indices, bits).expect("decoded indices are in range")
}

/// Minimum of the slot objective over every discrete phase vector with
/// closed-form powers. Ties resolve to the smallest enumeration index.
pub fn exhaustive_slot(problem: &SlotProblem, budget: u64) -> Result<SlotDecision> {
    let elements = problem.channel.num_elements();
    let bits = problem.config.phase_bits;
    let count = candidate_count(elements, bits);
    if count > budget as f64 {
        return Err(Error::BudgetExceeded {
            candidates: count,
            budget,
        });
    }
    let count = count as u64;
    let (_, code) = (0..count)
        .into_par_iter()
        .map(|code| {
            let pd = problem.powers_at(&decode_phases(code, elements, bits));
            (problem.objective(&pd), code)
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    let mut decision = problem.decide_at(decode_phases(code, elements, bits));
    decision.iterations = 1;
    Ok(decision)
}

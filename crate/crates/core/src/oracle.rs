//! Brute-force reference checks behind `irsopt oracle-check`.
//!
//! Each check draws random instances, computes the quantity of interest both
//! with the library and with an independent brute-force method, and reports
//! the worst discrepancy. The brute-force side recomputes rates and
//! objectives from first principles instead of calling into [`crate::power`]
//! or [`crate::solver`].

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelModel, ChannelSlot};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::Layout;
use crate::irs_fp::{
    coordinate_sweep, design_phases, eta_tilde, fp_weights, lagrangian_surrogate,
    quadratic_surrogate, sinr, update_eta, update_zeta, weighted_sum_rate, FpState, PhaseVector,
    QuadraticForm,
};
use crate::power::optimal_power;
use crate::queueing::slot_weight;
use crate::solver::{candidate_count, exhaustive_slot, solve_slot, SlotProblem};

/// A random slot problem on a given scenario.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub config: ScenarioConfig,
    pub weights: Vec<f64>,
    pub queue: Vec<f64>,
    pub arrival: Vec<f64>,
    pub channel: ChannelSlot,
}

impl RandomInstance {
    /// Fresh layout and fading; backlogs up to five maximal arrivals and
    /// virtual queues up to twice the delay threshold.
    pub fn draw<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Self> {
        let layout = Layout::sample(config, rng);
        let channel = ChannelModel::new(config, &layout)?.generate_slot(rng, 1);
        let k = config.num_devices;
        let lo = config.arrival_min.max(1) as f64;
        let hi = (config.arrival_max as f64).max(lo + 1.0);
        let arrival: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi).floor()).collect();
        let queue: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..5.0 * hi)).collect();
        let weights = (0..k)
            .map(|i| {
                let d = rng.random_range(0.0..2.0 * config.delay_threshold);
                let avg = rng.random_range(lo..hi);
                slot_weight(queue[i], arrival[i], d, avg, config.slot_duration).expect("avg > 0")
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            weights,
            queue,
            arrival,
            channel,
        })
    }

    pub fn problem(&self) -> SlotProblem<'_> {
        SlotProblem {
            weights: &self.weights,
            queue: &self.queue,
            arrival: &self.arrival,
            channel: &self.channel,
            config: &self.config,
        }
    }
}

/// Outcome of one oracle check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub trials: usize,
    /// Worst observed discrepancy (meaning depends on the check).
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Extra measurements that do not decide pass/fail.
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: &'static str, trials: usize, worst: f64, tolerance: f64) -> Self {
        Self {
            name,
            trials,
            worst,
            tolerance,
            passed: worst <= tolerance,
            note: None,
        }
    }
}

/// Per-device objective `-w B log2(1 + p g / sigma^2) + V p`, written out
/// directly.
fn brute_f1(w: f64, p: f64, g: f64, cfg: &ScenarioConfig) -> f64 {
    -w * cfg.bandwidth * (1.0 + p * g / cfg.noise_power()).log2() + cfg.control_v * p
}

fn brute_served(p: f64, g: f64, cfg: &ScenarioConfig) -> f64 {
    cfg.bandwidth * (1.0 + p * g / cfg.noise_power()).log2() * cfg.slot_duration
}

/// Closed-form power against a feasible grid of `points` powers on
/// `[0, p_max]`. Returns the worst amount by which the closed form loses.
pub fn power_grid_check<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    trials: usize,
    points: usize,
    rng: &mut R,
) -> CheckResult {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let w = rng.random_range(0.0..1e-3);
        let q = rng.random_range(0.0..5e3);
        let a = rng.random_range(0.0..1.2e3);
        let g = 10f64.powf(rng.random_range(-135.0..-100.0) / 10.0);
        let p = optimal_power(w, q, a, g, config);
        let mut best = f64::INFINITY;
        for i in 0..points {
            let x = config.max_power * i as f64 / (points - 1) as f64;
            if brute_served(x, g, config) <= q + a {
                best = best.min(brute_f1(w, x, g, config));
            }
        }
        let mut gap = brute_f1(w, p, g, config) - best;
        if brute_served(p, g, config) > q + a + 1e-9 || !(0.0..=config.max_power).contains(&p) {
            gap = f64::INFINITY;
        }
        worst = worst.max(gap);
    }
    CheckResult::new("power closed form vs grid", trials, worst, 1e-9)
}

/// Largest `f2` over every phase vector, by enumeration.
pub fn brute_max_utility(
    power: &[f64],
    omega: &[f64],
    channel: &ChannelSlot,
    config: &ScenarioConfig,
) -> f64 {
    let n = channel.num_elements();
    let levels = 1u64 << config.phase_bits;
    let step = 2.0 * PI / levels as f64;
    let sigma2 = config.noise_power();
    let mut best = f64::NEG_INFINITY;
    for code in 0..levels.pow(n as u32) {
        let mut c = code;
        let v: Vec<Complex64> = (0..n)
            .map(|_| {
                let l = c % levels;
                c /= levels;
                Complex64::from_polar(1.0, l as f64 * step)
            })
            .collect();
        let mut f = 0.0;
        for k in 0..channel.num_devices() {
            let mut h = channel.direct[k];
            for (vi, hc) in v.iter().zip(&channel.cascaded[k]) {
                h += vi.conj() * hc;
            }
            f += omega[k] * config.bandwidth * (1.0 + power[k] * h.norm_sqr() / sigma2).log2();
        }
        best = best.max(f);
    }
    best
}

/// FP phase design against exhaustive phase search with single-device
/// instances. Fails on an `f2` decrease along the FP iterations or a result
/// above the enumerated maximum. Coordinate ascent can stop at a local
/// optimum, so the shortfall to the global maximum is reported in the note.
pub fn fp_exhaustive_check<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    trials: usize,
    rng: &mut R,
) -> Result<CheckResult> {
    let mut cfg = config.clone();
    cfg.num_devices = 1;
    let mut violation: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut matched = 0;
    for _ in 0..trials {
        let inst = RandomInstance::draw(&cfg, rng)?;
        let power = vec![rng.random_range(0.0..cfg.max_power)];
        let v0 = PhaseVector::zeros(cfg.total_elements(), cfg.phase_bits);
        let design = design_phases(&power, &inst.weights, &inst.channel, &v0, &cfg, &cfg.solver);
        let trace = &design.utility_trace;
        let got = *trace.last().expect("trace starts with the initial value");
        let best = brute_max_utility(&power, &inst.weights, &inst.channel, &cfg);
        let scale = best.abs().max(f64::MIN_POSITIVE);
        for w in trace.windows(2) {
            violation = violation.max((w[0] - w[1]) / scale);
        }
        violation = violation.max((got - best) / scale);
        let gap = (best - got) / scale;
        worst_gap = worst_gap.max(gap);
        matched += usize::from(gap <= 1e-9);
    }
    let mut result = CheckResult::new("FP ascent, bounded by exhaustive", trials, violation, 1e-9);
    result.note = Some(format!(
        "global optimum reached in {matched}/{trials}, worst shortfall {worst_gap:.3e}"
    ));
    Ok(result)
}

/// Surrogate identities at the closed-form auxiliaries; worst relative
/// difference to `f2`.
pub fn transform_identity_check<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    trials: usize,
    rng: &mut R,
) -> Result<CheckResult> {
    let sigma2 = config.noise_power();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let inst = RandomInstance::draw(config, rng)?;
        let power: Vec<f64> = (0..config.num_devices)
            .map(|_| rng.random_range(0.0..config.max_power))
            .collect();
        let v = PhaseVector::random(config.total_elements(), config.phase_bits, rng).values();
        let gamma = sinr(&power, &inst.channel, &v, sigma2);
        let f2 = weighted_sum_rate(&inst.weights, &gamma, config.bandwidth);
        let w = fp_weights(&inst.weights, config.bandwidth);
        let eta = update_eta(&gamma);
        let et = eta_tilde(&w, &eta);
        let zeta = update_zeta(&power, &et, &inst.channel, &v, sigma2);
        let offset: f64 = w.iter().zip(&eta).map(|(wk, e)| wk * (e.ln_1p() - e)).sum();
        let state = FpState::at(&power, &w, &inst.channel, &v, sigma2);
        let candidates = [
            lagrangian_surrogate(&w, &eta, &gamma),
            offset + quadratic_surrogate(&et, &zeta, &power, &inst.channel, &v, sigma2),
            offset + state.form.evaluate(&v),
        ];
        let scale = f2.abs().max(f64::MIN_POSITIVE);
        for s in candidates {
            worst = worst.max((s - f2).abs() / scale);
        }
    }
    Ok(CheckResult::new(
        "transform identities",
        trials,
        worst,
        1e-9,
    ))
}

/// Coordinate sweeps on random PSD quadratics; worst decrease.
pub fn sweep_monotone_check<R: Rng + ?Sized>(bits: u32, trials: usize, rng: &mut R) -> CheckResult {
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let dim = 1 + t % 12;
        let x: Vec<Complex64> = (0..dim * dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut w = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                for l in 0..dim {
                    w[i * dim + j] += x[i * dim + l] * x[j * dim + l].conj();
                }
            }
        }
        let q = (0..dim)
            .map(|_| Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)))
            .collect();
        let form = QuadraticForm { dim, w, q, c: 0.0 };
        let v = PhaseVector::random(dim, bits, rng);
        let before = form.evaluate(&v.values());
        let after = form.evaluate(&coordinate_sweep(&form, &v).values());
        worst = worst.max(before - after);
    }
    CheckResult::new("coordinate sweep ascent", trials, worst, 1e-9)
}

/// Alternating solver against exhaustive enumeration; worst relative gap.
pub fn slot_gap_check<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    trials: usize,
    rng: &mut R,
) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let inst = RandomInstance::draw(config, rng)?;
        let p = inst.problem();
        let warm = PhaseVector::zeros(config.total_elements(), config.phase_bits);
        let d = solve_slot(&p, &config.solver, &warm);
        let ex = exhaustive_slot(&p, config.exhaustive_budget)?;
        worst = worst.max((d.objective - ex.objective) / ex.objective.abs().max(f64::MIN_POSITIVE));
    }
    Ok(CheckResult::new(
        "solver vs exhaustive",
        trials,
        worst,
        0.05,
    ))
}

/// Every check with `trials` instances each (the power grid uses
/// `10 * trials`). Refuses configurations whose phase space exceeds the
/// enumeration budget.
pub fn run_oracle_checks(
    config: &ScenarioConfig,
    trials: usize,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    config.validate()?;
    let count = candidate_count(config.total_elements(), config.phase_bits);
    if count > config.exhaustive_budget as f64 {
        return Err(Error::BudgetExceeded {
            candidates: count,
            budget: config.exhaustive_budget,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        power_grid_check(config, 10 * trials, 100_000, &mut rng),
        transform_identity_check(config, trials, &mut rng)?,
        sweep_monotone_check(config.phase_bits, trials, &mut rng),
        fp_exhaustive_check(config, trials, &mut rng)?,
        slot_gap_check(config, trials, &mut rng)?,
    ])
}

//! Slot loop, controllers, Monte Carlo batches and parameter sweeps.
//!
//! Each episode uses one seed and four independent random streams (device
//! layout, arrivals, fading, controller randomness). Controllers given the
//! same seed therefore see identical layouts, arrivals and channels.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{ChannelModel, ChannelSlot};
use crate::config::{ScenarioConfig, SweepAxis};
use crate::error::{Error, Result};
use crate::geometry::Layout;
use crate::irs_fp::PhaseVector;
use crate::queueing::{sample_arrivals, NetworkState};
use crate::solver::{exhaustive_slot, solve_slot, SlotDecision, SlotProblem};
use crate::units::watts_to_dbm;

const STREAM_LAYOUT: u64 = 0;
const STREAM_ARRIVALS: u64 = 1;
const STREAM_CHANNEL: u64 = 2;
const STREAM_CONTROLLER: u64 = 3;

/// Per-slot decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerKind {
    /// Alternating power / FP phase solver, warm-started from the previous slot.
    Proposed,
    /// Uniformly random phases each slot with closed-form powers.
    RandomPhase,
    /// Direct links only; no IRS static power is paid.
    WithoutIrs,
    /// Best phase vector by enumeration (tiny configurations only).
    Exhaustive,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::Proposed,
        ControllerKind::RandomPhase,
        ControllerKind::WithoutIrs,
        ControllerKind::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Proposed => "proposed",
            ControllerKind::RandomPhase => "random_phase",
            ControllerKind::WithoutIrs => "without_irs",
            ControllerKind::Exhaustive => "exhaustive",
        }
    }

    /// Comma-separated list of names.
    pub fn parse_list(s: &str) -> Result<Vec<ControllerKind>> {
        let list: Vec<ControllerKind> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if list.is_empty() {
            return Err(Error::config("controller list is empty"));
        }
        Ok(list)
    }

    /// Scenario the controller actually optimizes: without IRSs for
    /// [`ControllerKind::WithoutIrs`].
    pub fn effective_config(self, config: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = config.clone();
        if self == ControllerKind::WithoutIrs {
            cfg.num_irs = 0;
        }
        cfg
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ControllerKind::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ControllerKind::ALL.iter().map(|c| c.name()).collect();
                Error::config(format!(
                    "unknown controller `{s}`; valid: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Seed of run `index` in a batch.
pub fn run_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Everything recorded during one episode. Per-device series are indexed
/// `[t][k]` with `t = 0` for slot 1; queue values are taken at the start of
/// the slot, before the decision.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub controller: ControllerKind,
    pub seed: u64,
    pub burn_in_fraction: f64,
    /// `P^t = sum_k p_k + MN P_I`, W.
    pub total_power: Vec<f64>,
    pub power: Vec<Vec<f64>>,
    pub arrival: Vec<Vec<f64>>,
    /// `Q`, bits.
    pub queue: Vec<Vec<f64>>,
    /// `D`, s.
    pub virtual_queue: Vec<Vec<f64>>,
    /// `d`, s.
    pub delay: Vec<Vec<f64>>,
    /// `Ã` including the slot's arrival, bits/slot.
    pub avg_arrival: Vec<Vec<f64>>,
    pub objective: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    /// Objective trace of the per-slot solver.
    pub solver_trace: Vec<Vec<f64>>,
    /// Solver time per slot, s. Not part of equality.
    pub wall_clock: Vec<f64>,
    /// State after the last slot.
    pub final_state: NetworkState,
}

impl PartialEq for RunMetrics {
    fn eq(&self, o: &Self) -> bool {
        self.controller == o.controller
            && self.seed == o.seed
            && self.burn_in_fraction == o.burn_in_fraction
            && self.total_power == o.total_power
            && self.power == o.power
            && self.arrival == o.arrival
            && self.queue == o.queue
            && self.virtual_queue == o.virtual_queue
            && self.delay == o.delay
            && self.avg_arrival == o.avg_arrival
            && self.objective == o.objective
            && self.iterations == o.iterations
            && self.converged == o.converged
            && self.solver_trace == o.solver_trace
            && self.final_state == o.final_state
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl RunMetrics {
    pub fn horizon(&self) -> usize {
        self.total_power.len()
    }

    /// First slot index (0-based) counted in stationary averages.
    pub fn burn_in(&self) -> usize {
        let skip = (self.burn_in_fraction * self.horizon() as f64).floor() as usize;
        skip.min(self.horizon().saturating_sub(1))
    }

    fn tail_mean(&self, series: &[Vec<f64>], from: usize) -> f64 {
        mean(series[from..].iter().flat_map(|row| row.iter().copied()))
    }

    /// Mean of `P^t` after burn-in, W.
    pub fn mean_total_power(&self) -> f64 {
        mean(self.total_power[self.burn_in()..].iter().copied())
    }

    /// Mean of `D` over devices and slots after burn-in, s.
    pub fn mean_virtual_queue(&self) -> f64 {
        self.tail_mean(&self.virtual_queue, self.burn_in())
    }

    /// Mean of `d` over devices and slots after burn-in, s.
    pub fn mean_delay(&self) -> f64 {
        self.tail_mean(&self.delay, self.burn_in())
    }

    /// Time-averaged delay of each device after burn-in, s.
    pub fn device_mean_delay(&self) -> Vec<f64> {
        let from = self.burn_in();
        let k = self.delay.first().map_or(0, Vec::len);
        (0..k)
            .map(|i| mean(self.delay[from..].iter().map(|row| row[i])))
            .collect()
    }

    /// Largest real queue seen, bits.
    pub fn max_queue(&self) -> f64 {
        self.queue.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Largest virtual queue seen, s.
    pub fn max_virtual_queue(&self) -> f64 {
        self.virtual_queue
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            controller: self.controller,
            seed: self.seed,
            mean_power: self.mean_total_power(),
            mean_virtual_queue: self.mean_virtual_queue(),
            mean_delay: self.mean_delay(),
        }
    }
}

/// Stationary averages of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub controller: ControllerKind,
    pub seed: u64,
    pub mean_power: f64,
    pub mean_virtual_queue: f64,
    pub mean_delay: f64,
}

/// Source of per-slot channels.
pub enum ChannelSource<'a> {
    /// Fresh draws from the scenario's fading model.
    Model,
    /// A recorded trace, one slot per entry.
    Replay(&'a [ChannelSlot]),
}

/// Runs one episode with freshly drawn channels.
pub fn run_episode(
    config: &ScenarioConfig,
    controller: ControllerKind,
    seed: u64,
) -> Result<RunMetrics> {
    run_episode_with(config, controller, seed, ChannelSource::Model)
}

/// Runs one episode: per slot, reveal arrivals, fetch the channel, compute
/// the weights, decide, then serve and update `Q`, `d`, `D`.
pub fn run_episode_with(
    config: &ScenarioConfig,
    controller: ControllerKind,
    seed: u64,
    source: ChannelSource,
) -> Result<RunMetrics> {
    config.validate()?;
    let solve_cfg = controller.effective_config(config);
    let elements = solve_cfg.total_elements();
    let horizon = config.horizon;
    let k = config.num_devices;

    let model = match source {
        ChannelSource::Model => {
            let layout = Layout::sample(config, &mut stream(seed, STREAM_LAYOUT));
            Some(ChannelModel::new(config, &layout)?)
        }
        ChannelSource::Replay(slots) => {
            if slots.len() < horizon {
                return Err(Error::Trace(format!(
                    "trace has {} slots, horizon is {horizon}",
                    slots.len()
                )));
            }
            None
        }
    };
    let mut arrival_rng = stream(seed, STREAM_ARRIVALS);
    let mut channel_rng = stream(seed, STREAM_CHANNEL);
    let mut control_rng = stream(seed, STREAM_CONTROLLER);

    let mut m = RunMetrics {
        controller,
        seed,
        burn_in_fraction: config.burn_in_fraction,
        total_power: Vec::with_capacity(horizon),
        power: Vec::with_capacity(horizon),
        arrival: Vec::with_capacity(horizon),
        queue: Vec::with_capacity(horizon),
        virtual_queue: Vec::with_capacity(horizon),
        delay: Vec::with_capacity(horizon),
        avg_arrival: Vec::with_capacity(horizon),
        objective: Vec::with_capacity(horizon),
        iterations: Vec::with_capacity(horizon),
        converged: Vec::with_capacity(horizon),
        solver_trace: Vec::with_capacity(horizon),
        wall_clock: Vec::with_capacity(horizon),
        final_state: NetworkState::new(k),
    };
    let mut state = NetworkState::new(k);
    let mut phases = PhaseVector::zeros(elements, config.phase_bits);

    for t in 1..=horizon {
        let tag = |e: Error| Error::Slot {
            slot: t,
            source: Box::new(e),
        };
        let arrivals = sample_arrivals(config, &mut arrival_rng);
        state.reveal_arrivals(&arrivals);
        let mut channel = match (&model, &source) {
            (Some(model), _) => model.generate_slot(&mut channel_rng, t),
            (None, ChannelSource::Replay(slots)) => slots[t - 1].clone(),
            (None, ChannelSource::Model) => unreachable!(),
        };
        if controller == ControllerKind::WithoutIrs {
            channel = channel.without_irs();
        }
        channel.check_shape(k, elements).map_err(tag)?;
        let weights = state.weights(config.slot_duration).map_err(tag)?;

        m.queue.push(state.queue.clone());
        m.virtual_queue.push(state.virtual_queue.clone());
        m.delay.push(state.delay.clone());
        m.avg_arrival.push(state.avg_arrival.clone());
        m.arrival.push(arrivals);

        let problem = SlotProblem {
            weights: &weights,
            queue: &state.queue,
            arrival: &state.arrival,
            channel: &channel,
            config: &solve_cfg,
        };
        let started = Instant::now();
        let decision: SlotDecision = match controller {
            ControllerKind::Proposed => solve_slot(&problem, &config.solver, &phases),
            ControllerKind::RandomPhase => problem.decide_at(PhaseVector::random(
                elements,
                config.phase_bits,
                &mut control_rng,
            )),
            ControllerKind::WithoutIrs => problem.decide_at(phases.clone()),
            ControllerKind::Exhaustive => {
                exhaustive_slot(&problem, config.exhaustive_budget).map_err(tag)?
            }
        };
        m.wall_clock.push(started.elapsed().as_secs_f64());

        m.total_power
            .push(decision.transmit_power() + solve_cfg.irs_static_power());
        m.power.push(decision.power.clone());
        m.objective.push(decision.objective);
        m.iterations.push(decision.iterations);
        m.converged.push(decision.converged);
        m.solver_trace.push(decision.trace.clone());
        phases = decision.phases;

        state.advance(&decision.rate, config).map_err(tag)?;
    }
    m.final_state = state;
    Ok(m)
}

/// Episodes `base_seed + i`, `i < num_runs`, run in parallel and returned in
/// seed order.
pub fn run_episodes(
    config: &ScenarioConfig,
    controller: ControllerKind,
    num_runs: usize,
    base_seed: u64,
) -> Result<Vec<RunMetrics>> {
    if num_runs == 0 {
        return Err(Error::config("runs must be >= 1"));
    }
    (0..num_runs)
        .into_par_iter()
        .map(|i| run_episode(config, controller, run_seed(base_seed, i)))
        .collect()
}

/// Mean and sample standard deviation of per-run stationary averages.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub controller: ControllerKind,
    pub runs: usize,
    pub mean_power: f64,
    pub std_power: f64,
    pub mean_virtual_queue: f64,
    pub std_virtual_queue: f64,
    pub mean_delay: f64,
    pub std_delay: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs.iter().copied());
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, var.sqrt())
}

impl BatchSummary {
    pub fn from_episodes(controller: ControllerKind, episodes: &[EpisodeSummary]) -> Self {
        let col =
            |f: fn(&EpisodeSummary) -> f64| mean_std(&episodes.iter().map(f).collect::<Vec<_>>());
        let (mean_power, std_power) = col(|e| e.mean_power);
        let (mean_virtual_queue, std_virtual_queue) = col(|e| e.mean_virtual_queue);
        let (mean_delay, std_delay) = col(|e| e.mean_delay);
        Self {
            controller,
            runs: episodes.len(),
            mean_power,
            std_power,
            mean_virtual_queue,
            std_virtual_queue,
            mean_delay,
            std_delay,
        }
    }

    pub fn mean_power_dbm(&self) -> f64 {
        watts_to_dbm(self.mean_power)
    }
}

/// Batch result of one controller: aggregate plus per-run episodes.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub summary: BatchSummary,
    pub episodes: Vec<RunMetrics>,
}

/// [`run_episodes`] for every controller, aggregated.
pub fn run_batch(
    config: &ScenarioConfig,
    controllers: &[ControllerKind],
    num_runs: usize,
    base_seed: u64,
) -> Result<Vec<BatchResult>> {
    controllers
        .iter()
        .map(|&c| {
            let episodes = run_episodes(config, c, num_runs, base_seed)?;
            let sums: Vec<_> = episodes.iter().map(RunMetrics::summary).collect();
            Ok(BatchResult {
                summary: BatchSummary::from_episodes(c, &sums),
                episodes,
            })
        })
        .collect()
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub summary: BatchSummary,
}

/// Aggregates for every `(value, controller)` pair, values in input order.
pub fn sweep(
    config: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    controllers: &[ControllerKind],
    num_runs: usize,
    base_seed: u64,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    let configs: Vec<ScenarioConfig> = values
        .iter()
        .map(|&v| axis.apply(config, v))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(values.len() * controllers.len());
    for (cfg, &value) in configs.iter().zip(values) {
        for &c in controllers {
            let sums: Vec<_> = run_episodes(cfg, c, num_runs, base_seed)?
                .iter()
                .map(RunMetrics::summary)
                .collect();
            rows.push(SweepRow {
                axis,
                value,
                summary: BatchSummary::from_episodes(c, &sums),
            });
        }
    }
    Ok(rows)
}

/// Per-slot, per-device trace:
/// `seed,controller,t,k,arrival_bits,queue_bits,virtual_queue_s,avg_arrival_bits,delay_s,power_W`.
pub fn write_trace_csv<W: Write>(out: W, runs: &[RunMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seed",
        "controller",
        "t",
        "k",
        "arrival_bits",
        "queue_bits",
        "virtual_queue_s",
        "avg_arrival_bits",
        "delay_s",
        "power_W",
    ])?;
    for run in runs {
        for t in 0..run.horizon() {
            for k in 0..run.queue[t].len() {
                w.write_record([
                    run.seed.to_string(),
                    run.controller.to_string(),
                    (t + 1).to_string(),
                    k.to_string(),
                    run.arrival[t][k].to_string(),
                    run.queue[t][k].to_string(),
                    run.virtual_queue[t][k].to_string(),
                    run.avg_arrival[t][k].to_string(),
                    run.delay[t][k].to_string(),
                    run.power[t][k].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-slot totals:
/// `seed,controller,t,total_power_W,total_power_dBm,objective,iterations,converged`.
pub fn write_power_trace_csv<W: Write>(out: W, runs: &[RunMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "seed",
        "controller",
        "t",
        "total_power_W",
        "total_power_dBm",
        "objective",
        "iterations",
        "converged",
    ])?;
    for run in runs {
        for t in 0..run.horizon() {
            w.write_record([
                run.seed.to_string(),
                run.controller.to_string(),
                (t + 1).to_string(),
                run.total_power[t].to_string(),
                watts_to_dbm(run.total_power[t]).to_string(),
                run.objective[t].to_string(),
                run.iterations[t].to_string(),
                run.converged[t].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

const SUMMARY_COLUMNS: [&str; 9] = [
    "controller",
    "mean_power_W",
    "std_power_W",
    "mean_power_dBm",
    "mean_Dqueue",
    "std_Dqueue",
    "mean_delay_s",
    "std_delay_s",
    "runs",
];

fn summary_fields(s: &BatchSummary) -> Vec<String> {
    vec![
        s.controller.to_string(),
        s.mean_power.to_string(),
        s.std_power.to_string(),
        s.mean_power_dbm().to_string(),
        s.mean_virtual_queue.to_string(),
        s.std_virtual_queue.to_string(),
        s.mean_delay.to_string(),
        s.std_delay.to_string(),
        s.runs.to_string(),
    ]
}

/// One row per controller with columns [`SUMMARY_COLUMNS`].
pub fn write_summary_csv<W: Write>(out: W, rows: &[BatchSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for s in rows {
        w.write_record(summary_fields(s))?;
    }
    w.flush()?;
    Ok(())
}

/// Sweep table: `axis,value` followed by the summary columns.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["axis", "value"];
    header.extend(SUMMARY_COLUMNS);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.axis.to_string(), r.value.to_string()];
        rec.extend(summary_fields(&r.summary));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Plot data: column `x` (the axis value) then the mean total power in W of
/// each controller, in first-seen order.
pub fn write_plot_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut controllers: Vec<ControllerKind> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for r in rows {
        if !controllers.contains(&r.summary.controller) {
            controllers.push(r.summary.controller);
        }
        if !values.contains(&r.value) {
            values.push(r.value);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string()];
    header.extend(controllers.iter().map(|c| c.to_string()));
    w.write_record(&header)?;
    for &x in &values {
        let mut rec = vec![x.to_string()];
        for &c in &controllers {
            let cell = rows
                .iter()
                .find(|r| r.value == x && r.summary.controller == c)
                .map_or(String::new(), |r| r.summary.mean_power.to_string());
            rec.push(cell);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

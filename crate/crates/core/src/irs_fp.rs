//! IRS phase design for fixed transmit powers.
//!
//! Maximizes the weighted sum rate `f2(v) = sum_k omega_k R_k(v)` over
//! discrete unit-modulus phase vectors with closed-form fractional
//! programming:
//!
//! 1. Lagrange-dual transform of each `log(1 + gamma_k)` with auxiliary
//!    `eta_k` (optimum `eta_k = gamma_k`),
//! 2. quadratic transform of the remaining sum of ratios with auxiliary
//!    `zeta_k` (closed-form optimum),
//! 3. the resulting quadratic `-v^H W v + 2 Re(v^H q) + C` is maximized one
//!    element at a time over the `2^b` phase levels.
//!
//! The transforms are exact in natural-log form, so internally
//! `f2 = sum_k w_k ln(1 + gamma_k)` with `w_k = omega_k B / ln 2`
//! ([`fp_weights`]). The value is identical to `sum_k omega_k B log2(1 + gamma_k)`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelSlot;
use crate::config::{ScenarioConfig, SolverSettings};
use crate::error::{Error, Result};

/// Discrete phase indices, one per reflecting element; element `n` takes the
/// value `exp(j * index_n * 2 pi / 2^b)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhaseVector {
    indices: Vec<u32>,
    bits: u32,
}

impl PhaseVector {
    pub fn zeros(len: usize, bits: u32) -> Self {
        assert!((1..=16).contains(&bits), "phase bits must be in 1..=16");
        Self {
            indices: vec![0; len],
            bits,
        }
    }

    pub fn from_indices(indices: Vec<u32>, bits: u32) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return Err(Error::Shape(format!("phase bits {bits} outside 1..=16")));
        }
        let levels = 1u32 << bits;
        if let Some(bad) = indices.iter().find(|&&i| i >= levels) {
            return Err(Error::Shape(format!("phase index {bad} >= {levels}")));
        }
        Ok(Self { indices, bits })
    }

    /// Uniformly random levels.
    pub fn random<R: Rng + ?Sized>(len: usize, bits: u32, rng: &mut R) -> Self {
        let levels = 1u32 << bits;
        Self {
            indices: (0..len).map(|_| rng.random_range(0..levels)).collect(),
            bits,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Phase step `2 pi / 2^b`.
    pub fn step(&self) -> f64 {
        phase_step(self.bits)
    }

    pub fn value(&self, n: usize) -> Complex64 {
        level_value(self.indices[n], self.bits)
    }

    pub fn values(&self) -> Vec<Complex64> {
        (0..self.len()).map(|n| self.value(n)).collect()
    }

    pub fn set(&mut self, n: usize, index: u32) {
        assert!(index < self.levels());
        self.indices[n] = index;
    }

    /// `|self - other|^2` over the complex values.
    pub fn distance_sq(&self, other: &PhaseVector) -> f64 {
        (0..self.len())
            .map(|n| (self.value(n) - other.value(n)).norm_sqr())
            .sum()
    }
}

pub fn phase_step(bits: u32) -> f64 {
    2.0 * PI / f64::from(1u32 << bits)
}

fn level_value(index: u32, bits: u32) -> Complex64 {
    Complex64::from_polar(1.0, f64::from(index) * phase_step(bits))
}

/// `gamma_k = p_k |h_d + v^H h_c|^2 / sigma^2`.
pub fn sinr(power: &[f64], channel: &ChannelSlot, v: &[Complex64], noise: f64) -> Vec<f64> {
    channel
        .gains(v)
        .iter()
        .zip(power)
        .map(|(g, p)| p * g / noise)
        .collect()
}

/// Natural-log weights `w_k = omega_k B / ln 2`.
pub fn fp_weights(omega: &[f64], bandwidth: f64) -> Vec<f64> {
    omega.iter().map(|w| w * bandwidth / LN_2).collect()
}

/// `f2 = sum_k omega_k B log2(1 + gamma_k)`.
pub fn weighted_sum_rate(omega: &[f64], gamma: &[f64], bandwidth: f64) -> f64 {
    omega
        .iter()
        .zip(gamma)
        .map(|(w, g)| w * bandwidth * g.ln_1p() / LN_2)
        .sum()
}

/// Optimal Lagrange-dual auxiliaries: `eta = gamma`.
pub fn update_eta(gamma: &[f64]) -> Vec<f64> {
    gamma.to_vec()
}

/// `eta_tilde_k = w_k (1 + eta_k)`.
pub fn eta_tilde(weights: &[f64], eta: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .zip(eta)
        .map(|(w, e)| w * (1.0 + e))
        .collect()
}

/// Right-hand side of the Lagrange-dual transform,
/// `sum_k w_k (ln(1+eta) - eta + (1+eta) gamma / (1+gamma))`.
pub fn lagrangian_surrogate(weights: &[f64], eta: &[f64], gamma: &[f64]) -> f64 {
    weights
        .iter()
        .zip(eta)
        .zip(gamma)
        .map(|((w, e), g)| w * (e.ln_1p() - e + (1.0 + e) * g / (1.0 + g)))
        .sum()
}

/// Sum of ratios `sum_k eta_tilde_k p_k |h_k|^2 / (p_k |h_k|^2 + sigma^2)`.
pub fn ratio_objective(
    eta_tilde: &[f64],
    power: &[f64],
    channel: &ChannelSlot,
    v: &[Complex64],
    noise: f64,
) -> f64 {
    (0..channel.num_devices())
        .map(|k| {
            let s = power[k] * channel.effective(k, v).norm_sqr();
            eta_tilde[k] * s / (s + noise)
        })
        .sum()
}

/// Closed-form quadratic-transform auxiliaries
/// `zeta_k = sqrt(eta_tilde_k p_k) h_k / (p_k |h_k|^2 + sigma^2)`.
pub fn update_zeta(
    power: &[f64],
    eta_tilde: &[f64],
    channel: &ChannelSlot,
    v: &[Complex64],
    noise: f64,
) -> Vec<Complex64> {
    (0..channel.num_devices())
        .map(|k| {
            let h = channel.effective(k, v);
            h * ((eta_tilde[k] * power[k]).sqrt() / (power[k] * h.norm_sqr() + noise))
        })
        .collect()
}

/// Quadratic-transform objective
/// `sum_k 2 sqrt(eta_tilde_k p_k) Re(zeta_k^* h_k) - |zeta_k|^2 (p_k |h_k|^2 + sigma^2)`.
pub fn quadratic_surrogate(
    eta_tilde: &[f64],
    zeta: &[Complex64],
    power: &[f64],
    channel: &ChannelSlot,
    v: &[Complex64],
    noise: f64,
) -> f64 {
    (0..channel.num_devices())
        .map(|k| {
            let h = channel.effective(k, v);
            2.0 * (eta_tilde[k] * power[k]).sqrt() * (zeta[k].conj() * h).re
                - zeta[k].norm_sqr() * (power[k] * h.norm_sqr() + noise)
        })
        .sum()
}

/// `f(v) = -v^H W v + 2 Re(v^H q) + C` with Hermitian `W` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub dim: usize,
    pub w: Vec<Complex64>,
    pub q: Vec<Complex64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn w_at(&self, i: usize, j: usize) -> Complex64 {
        self.w[i * self.dim + j]
    }

    pub fn evaluate(&self, v: &[Complex64]) -> f64 {
        let mut quad = Complex64::new(0.0, 0.0);
        let mut lin = Complex64::new(0.0, 0.0);
        for i in 0..self.dim {
            let row: Complex64 = (0..self.dim).map(|j| self.w_at(i, j) * v[j]).sum();
            quad += v[i].conj() * row;
            lin += v[i].conj() * self.q[i];
        }
        -quad.re + 2.0 * lin.re + self.c
    }

    /// `max |W - W^H|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.w_at(i, j) - self.w_at(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Expands the quadratic-transform objective in `v`:
///
/// - `W = sum_k |zeta_k|^2 p_k h_c,k h_c,k^H`
/// - `q = sum_k sqrt(eta_tilde_k p_k) zeta_k^* h_c,k - |zeta_k|^2 p_k h_d,k^* h_c,k`
/// - `C = sum_k 2 sqrt(eta_tilde_k p_k) Re(zeta_k^* h_d,k) - |zeta_k|^2 (p_k |h_d,k|^2 + sigma^2)`
pub fn assemble_quadratic(
    power: &[f64],
    eta_tilde: &[f64],
    zeta: &[Complex64],
    channel: &ChannelSlot,
    noise: f64,
) -> QuadraticForm {
    let dim = channel.num_elements();
    let mut w = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut q = vec![Complex64::new(0.0, 0.0); dim];
    let mut c = 0.0;
    for k in 0..channel.num_devices() {
        let hc = &channel.cascaded[k];
        let hd = channel.direct[k];
        let z2p = zeta[k].norm_sqr() * power[k];
        let amp = (eta_tilde[k] * power[k]).sqrt();
        if z2p != 0.0 {
            for i in 0..dim {
                let scaled = hc[i] * z2p;
                // lower triangle and diagonal; mirrored below
                for j in 0..=i {
                    w[i * dim + j] += scaled * hc[j].conj();
                }
            }
        }
        let lin = zeta[k].conj() * amp - hd.conj() * z2p;
        for (qi, h) in q.iter_mut().zip(hc) {
            *qi += h * lin;
        }
        c += 2.0 * amp * (zeta[k].conj() * hd).re
            - zeta[k].norm_sqr() * (power[k] * hd.norm_sqr() + noise);
    }
    for i in 0..dim {
        w[i * dim + i].im = 0.0;
        for j in 0..i {
            w[j * dim + i] = w[i * dim + j].conj();
        }
    }
    QuadraticForm { dim, w, q, c }
}

/// Auxiliaries and quadratic form of one FP iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FpState {
    pub eta: Vec<f64>,
    pub zeta: Vec<Complex64>,
    pub form: QuadraticForm,
}

impl FpState {
    /// Closed-form auxiliaries at phases `v`, then the quadratic in `v`.
    pub fn at(
        power: &[f64],
        weights: &[f64],
        channel: &ChannelSlot,
        v: &[Complex64],
        noise: f64,
    ) -> Self {
        let eta = update_eta(&sinr(power, channel, v, noise));
        let et = eta_tilde(weights, &eta);
        let zeta = update_zeta(power, &et, channel, v, noise);
        let form = assemble_quadratic(power, &et, &zeta, channel, noise);
        Self { eta, zeta, form }
    }
}

/// Level `l` maximizing `cos(angle(d) - l * step)`; exact ties go to the
/// smaller index, `d = 0` keeps `current`.
pub fn best_discrete_phase(d: Complex64, bits: u32, current: u32) -> u32 {
    if d.norm_sqr() == 0.0 {
        return current;
    }
    let levels = 1u32 << bits;
    let step = phase_step(bits);
    let angle = d.arg().rem_euclid(2.0 * PI);
    let x = angle / step;
    let lo = (x.floor() as u32) % levels;
    let hi = (lo + 1) % levels;
    let score = |l: u32| (angle - f64::from(l) * step).cos();
    let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
    if score(b) > score(a) {
        b
    } else {
        a
    }
}

/// One pass over all elements in order; element `n` moves to the level that
/// maximizes `Re(v_n^* d_n)` with `d_n = q_n - sum_{j != n} W[n, j] v_j`.
/// Never decreases [`QuadraticForm::evaluate`].
pub fn coordinate_sweep(form: &QuadraticForm, v: &PhaseVector) -> PhaseVector {
    let dim = form.dim;
    assert_eq!(v.len(), dim, "phase vector length must match W");
    let mut out = v.clone();
    let mut vals = v.values();
    // wv = W v, kept current as elements change
    let mut wv: Vec<Complex64> = (0..dim)
        .map(|i| (0..dim).map(|j| form.w_at(i, j) * vals[j]).sum())
        .collect();
    for n in 0..dim {
        let d = form.q[n] - (wv[n] - form.w_at(n, n) * vals[n]);
        let idx = best_discrete_phase(d, v.bits(), out.indices[n]);
        if idx != out.indices[n] {
            let new = level_value(idx, v.bits());
            let delta = new - vals[n];
            for (i, acc) in wv.iter_mut().enumerate() {
                *acc += form.w_at(i, n) * delta;
            }
            vals[n] = new;
            out.indices[n] = idx;
        }
    }
    out
}

/// Result of [`design_phases`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDesign {
    pub phases: PhaseVector,
    /// FP iterations run.
    pub iterations: usize,
    /// `f2` before the first iteration and after each FP iteration and
    /// improving polish pass.
    pub utility_trace: Vec<f64>,
}

/// FP loop for fixed powers: refresh the auxiliaries at the current phases,
/// rebuild the quadratic, sweep all elements; stop once
/// `|v(i) - v(i-1)|^2 < tolerance` or after `max_inner` iterations.
///
/// `eta` is evaluated at the current phases before `zeta` is formed, so each
/// sweep starts from a surrogate that is tight at the incumbent and `f2`
/// never decreases.
///
/// With `settings.polish`, exact coordinate passes on `f2` follow the FP
/// loop (at most `max_inner`), each appending one trace entry.
pub fn design_phases(
    power: &[f64],
    omega: &[f64],
    channel: &ChannelSlot,
    v_init: &PhaseVector,
    config: &ScenarioConfig,
    settings: &SolverSettings,
) -> PhaseDesign {
    let noise = config.noise_power();
    let weights = fp_weights(omega, config.bandwidth);
    let utility = |v: &PhaseVector| {
        weighted_sum_rate(
            omega,
            &sinr(power, channel, &v.values(), noise),
            config.bandwidth,
        )
    };
    let mut v = v_init.clone();
    let mut trace = vec![utility(&v)];
    let mut iterations = 0;
    if v.is_empty() {
        return PhaseDesign {
            phases: v,
            iterations,
            utility_trace: trace,
        };
    }
    while iterations < settings.max_inner {
        iterations += 1;
        let state = FpState::at(power, &weights, channel, &v.values(), noise);
        let next = coordinate_sweep(&state.form, &v);
        let change = next.distance_sq(&v);
        v = next;
        trace.push(utility(&v));
        if change < settings.tolerance {
            break;
        }
    }
    if settings.polish {
        for _ in 0..settings.max_inner {
            let (next, improved) = polish_pass(power, omega, channel, &v, config);
            v = next;
            if !improved {
                break;
            }
            trace.push(utility(&v));
        }
    }
    PhaseDesign {
        phases: v,
        iterations,
        utility_trace: trace,
    }
}

/// One pass of exact discrete coordinate ascent on the weighted sum rate:
/// each element in turn takes the level with the highest utility, keeping
/// its current level unless another is strictly better.
///
/// The quadratic surrogate is tight only at the point where it was built,
/// so the FP loop can stall where a single-element change still raises the
/// true utility. This pass removes those stalls.
fn polish_pass(
    power: &[f64],
    omega: &[f64],
    channel: &ChannelSlot,
    v: &PhaseVector,
    config: &ScenarioConfig,
) -> (PhaseVector, bool) {
    let noise = config.noise_power();
    let k = power.len();
    let values = v.values();
    let mut h: Vec<Complex64> = (0..k).map(|i| channel.effective(i, &values)).collect();
    let utility_of = |h: &[Complex64]| -> f64 {
        (0..k)
            .map(|i| omega[i] * (power[i] * h[i].norm_sqr() / noise).ln_1p())
            .sum()
    };
    let bits = v.bits();
    let phasor = |level: u32| level_value(level, bits);
    let mut v = v.clone();
    let mut improved = false;
    let mut trial = h.clone();
    for n in 0..v.len() {
        let current = v.indices()[n];
        let old = phasor(current).conj();
        let mut best = (utility_of(&h), current);
        for level in (0..v.levels()).filter(|&l| l != current) {
            let delta = phasor(level).conj() - old;
            for ((t, hi), col) in trial.iter_mut().zip(&h).zip(&channel.cascaded) {
                *t = hi + delta * col[n];
            }
            let u = utility_of(&trial);
            if u > best.0 {
                best = (u, level);
            }
        }
        if best.1 != current {
            let delta = phasor(best.1).conj() - old;
            for (hi, col) in h.iter_mut().zip(&channel.cascaded) {
                *hi += delta * col[n];
            }
            v.set(n, best.1);
            improved = true;
        }
    }
    (v, improved)
}

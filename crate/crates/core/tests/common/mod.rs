//! Independent reference computations shared by the integration tests.
//! Everything here is written from the model definitions, not by calling
//! the library routine under test.
#![allow(dead_code)]

use std::f64::consts::PI;

use irsopt::channel::LinkDraw;
use irsopt::config::tiny_scenario;
use irsopt::oracle::RandomInstance;
use irsopt::{Complex64, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Effective channel of device `k` summed IRS by IRS:
/// `h_d + sum_m g_{m,k}^T diag(conj(v_m)) f_m`, without the stacked cascade.
pub fn per_irs_effective(
    links: &LinkDraw,
    k: usize,
    v: &[Complex64],
    elements_per_irs: usize,
) -> Complex64 {
    let mut h = links.direct[k];
    for (m, f) in links.bs_irs.iter().enumerate() {
        let g = &links.irs_device[m][k];
        let v_m = &v[m * elements_per_irs..(m + 1) * elements_per_irs];
        let mut term = Complex64::new(0.0, 0.0);
        for n in 0..elements_per_irs {
            term += g[n] * v_m[n].conj() * f[n];
        }
        h += term;
    }
    h
}

/// Per-device objective `-w B log2(1 + p g / sigma^2) + V p`.
pub fn f1(w: f64, p: f64, g: f64, cfg: &ScenarioConfig) -> f64 {
    -w * cfg.bandwidth * (1.0 + p * g / cfg.noise_power()).log2() + cfg.control_v * p
}

/// Bits served in one slot at power `p`.
pub fn served_bits(p: f64, g: f64, cfg: &ScenarioConfig) -> f64 {
    cfg.bandwidth * (1.0 + p * g / cfg.noise_power()).log2() * cfg.slot_duration
}

/// Minimum of [`f1`] over a uniform grid on `[0, p_max]` restricted to
/// powers that do not over-serve the backlog.
pub fn f1_grid_min(w: f64, backlog: f64, g: f64, cfg: &ScenarioConfig, points: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points {
        let p = cfg.max_power * i as f64 / (points - 1) as f64;
        if served_bits(p, g, cfg) <= backlog {
            best = best.min(f1(w, p, g, cfg));
        }
    }
    best
}

/// Phase values of index vector `idx` with `bits`-bit levels.
pub fn phases(idx: &[u32], bits: u32) -> Vec<Complex64> {
    let step = 2.0 * PI / f64::from(1u32 << bits);
    idx.iter()
        .map(|&l| Complex64::from_polar(1.0, f64::from(l) * step))
        .collect()
}

/// Every index vector of length `n` over `levels` levels.
pub fn all_index_vectors(n: usize, levels: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..levels).map(move |l| {
                    let mut p = prefix.clone();
                    p.push(l);
                    p
                })
            })
            .collect();
    }
    out
}

/// Weighted sum rate `sum_k omega_k B log2(1 + p_k |h_k|^2 / sigma^2)`.
pub fn f2(power: &[f64], omega: &[f64], h: &[Complex64], cfg: &ScenarioConfig) -> f64 {
    (0..h.len())
        .map(|k| {
            omega[k] * cfg.bandwidth * (1.0 + power[k] * h[k].norm_sqr() / cfg.noise_power()).log2()
        })
        .sum()
}

/// Slot objective `-sum omega R + V (sum p + MN P_I)` written out directly.
pub fn slot_objective(power: &[f64], omega: &[f64], h: &[Complex64], cfg: &ScenarioConfig) -> f64 {
    let static_power = (cfg.num_irs * cfg.elements_x * cfg.elements_y) as f64 * cfg.element_power;
    -f2(power, omega, h, cfg) + cfg.control_v * (power.iter().sum::<f64>() + static_power)
}

/// Random instance on the tiny scenario.
pub fn tiny_instance<R: Rng + ?Sized>(rng: &mut R) -> RandomInstance {
    RandomInstance::draw(&tiny_scenario(), rng).expect("tiny scenario is valid")
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..iters {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    (a + b) / 2.0
}

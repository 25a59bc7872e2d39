//! Closed-form per-device power control for fixed IRS phases.
//!
//! With the phases fixed, the slot problem separates per device into
//! `min_p  -omega * R(p) + V * p` subject to `0 <= p <= p_max` and
//! `R(p) * tau <= Q + A`. The objective is convex in `p`, so the optimum is
//! the stationary point clipped to the feasible interval.

use std::f64::consts::LN_2;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Above this exponent `2^x` is treated as unbounded.
pub const RATE_CAP_EXPONENT_LIMIT: f64 = 60.0;

/// Shannon rate `B log2(1 + p |h|^2 / sigma^2)`, bits/s.
pub fn rate(power: f64, gain: f64, noise: f64, bandwidth: f64) -> f64 {
    bandwidth * (power * gain / noise).ln_1p() / LN_2
}

/// Per-device term of the slot objective, `-omega R(p) + V p`.
pub fn power_objective(weight: f64, power: f64, gain: f64, config: &ScenarioConfig) -> f64 {
    -weight * rate(power, gain, config.noise_power(), config.bandwidth) + config.control_v * power
}

/// `d/dp` of [`power_objective`].
pub fn power_objective_slope(weight: f64, power: f64, gain: f64, config: &ScenarioConfig) -> f64 {
    let sigma2 = config.noise_power();
    -weight * config.bandwidth * gain / (LN_2 * (sigma2 + power * gain)) + config.control_v
}

/// `d^2/dp^2` of [`power_objective`]; never negative.
pub fn power_objective_curvature(
    weight: f64,
    power: f64,
    gain: f64,
    config: &ScenarioConfig,
) -> f64 {
    let s = config.noise_power() + power * gain;
    weight * config.bandwidth * gain * gain / (LN_2 * s * s)
}

/// Stationary point `omega B / (V ln 2) - sigma^2 / |h|^2` (may be negative).
pub fn unconstrained_minimizer(
    weight: f64,
    bandwidth: f64,
    control_v: f64,
    gain: f64,
    noise: f64,
) -> Result<f64> {
    if gain <= 0.0 {
        return Err(Error::DeadChannel);
    }
    Ok(weight * bandwidth / (control_v * LN_2) - noise / gain)
}

/// Power at which `R tau = Q + A` exactly:
/// `(sigma^2 / |h|^2) (2^((Q+A)/(B tau)) - 1)`. Infinite when the exponent
/// exceeds [`RATE_CAP_EXPONENT_LIMIT`].
pub fn rate_cap_power(
    backlog: f64,
    bandwidth: f64,
    slot_duration: f64,
    gain: f64,
    noise: f64,
) -> Result<f64> {
    if gain <= 0.0 {
        return Err(Error::DeadChannel);
    }
    let exponent = backlog / (bandwidth * slot_duration);
    if exponent > RATE_CAP_EXPONENT_LIMIT {
        return Ok(f64::INFINITY);
    }
    Ok(noise / gain * (exponent * LN_2).exp_m1())
}

/// `min{max{0, p1}, p2, p_max}`; a dead channel gets zero power.
pub fn optimal_power(
    weight: f64,
    queue: f64,
    arrival: f64,
    gain: f64,
    config: &ScenarioConfig,
) -> f64 {
    let sigma2 = config.noise_power();
    let (Ok(p1), Ok(p2)) = (
        unconstrained_minimizer(weight, config.bandwidth, config.control_v, gain, sigma2),
        rate_cap_power(
            queue + arrival,
            config.bandwidth,
            config.slot_duration,
            gain,
            sigma2,
        ),
    ) else {
        return 0.0;
    };
    p1.max(0.0).min(p2).min(config.max_power)
}

/// Powers and rates of all devices.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDecision {
    /// W.
    pub power: Vec<f64>,
    /// bits/s.
    pub rate: Vec<f64>,
}

impl PowerDecision {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// [`optimal_power`] for every device given `|h_k|^2`.
pub fn optimal_powers(
    weights: &[f64],
    queue: &[f64],
    arrival: &[f64],
    gains: &[f64],
    config: &ScenarioConfig,
) -> PowerDecision {
    let sigma2 = config.noise_power();
    let power: Vec<f64> = (0..gains.len())
        .map(|k| optimal_power(weights[k], queue[k], arrival[k], gains[k], config))
        .collect();
    let rate = power
        .iter()
        .zip(gains)
        .map(|(&p, &g)| rate(p, g, sigma2, config.bandwidth))
        .collect();
    PowerDecision { power, rate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_scenario;
    use proptest::prelude::*;

    #[test]
    fn rate_cases() {
        assert_eq!(rate(0.0, 1.0, 1.0, 15e3), 0.0);
        assert!((rate(1.0, 2.0, 2.0, 15e3) - 15e3).abs() < 1e-9);
        let mut prev = -1.0;
        for i in 0..100 {
            let r = rate(i as f64 * 1e-3, 1e-12, 1.5e-16, 15e3);
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn minimizer_cases() {
        let (b, v, g, s) = (15e3, 50.0, 1e-12, 1.5e-16);
        assert!((unconstrained_minimizer(0.0, b, v, g, s).unwrap() + s / g).abs() < 1e-18);
        // omega chosen so omega B / (V ln2) = 2 sigma^2/|h|^2
        let w = 2.0 * s / g * v * LN_2 / b;
        let p = unconstrained_minimizer(w, b, v, g, s).unwrap();
        assert!((p / (s / g) - 1.0).abs() < 1e-12);
        assert!(matches!(
            unconstrained_minimizer(1.0, b, v, 0.0, s),
            Err(Error::DeadChannel)
        ));
    }

    #[test]
    fn stationary_point_zeroes_the_slope() {
        let cfg = default_scenario();
        let (w, g) = (4e-5, 3e-13);
        let p =
            unconstrained_minimizer(w, cfg.bandwidth, cfg.control_v, g, cfg.noise_power()).unwrap();
        assert!(p > 0.0);
        // central finite difference of the objective, not the analytic slope
        let h = p * 1e-5;
        let fd =
            (power_objective(w, p + h, g, &cfg) - power_objective(w, p - h, g, &cfg)) / (2.0 * h);
        assert!(fd.abs() <= 1e-9 * cfg.control_v, "{fd}");
        assert!(power_objective_slope(w, p, g, &cfg).abs() <= 1e-9 * cfg.control_v);
    }

    #[test]
    fn rate_cap_cases() {
        let (b, tau, g, s) = (15e3, 0.01, 1e-12, 1.5e-16);
        assert_eq!(rate_cap_power(0.0, b, tau, g, s).unwrap(), 0.0);
        let p = rate_cap_power(b * tau, b, tau, g, s).unwrap();
        assert!((p / (s / g) - 1.0).abs() < 1e-12);
        for backlog in [1.0, 37.0, 600.0, 4321.0] {
            let p = rate_cap_power(backlog, b, tau, g, s).unwrap();
            assert!((rate(p, g, s, b) * tau / backlog - 1.0).abs() < 1e-9);
        }
        assert_eq!(
            rate_cap_power(61.0 * b * tau, b, tau, g, s).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn optimal_power_cases() {
        let cfg = default_scenario();
        assert_eq!(optimal_power(0.0, 500.0, 100.0, 1e-12, &cfg), 0.0);
        assert_eq!(
            optimal_power(1.0, 5000.0, 100.0, 1e-12, &cfg),
            cfg.max_power
        );
        assert_eq!(optimal_power(1.0, 5000.0, 100.0, 0.0, &cfg), 0.0);
        // large weight, small backlog: the rate cap binds
        let g = 1e-11;
        let p = optimal_power(1.0, 10.0, 0.0, g, &cfg);
        let cap =
            rate_cap_power(10.0, cfg.bandwidth, cfg.slot_duration, g, cfg.noise_power()).unwrap();
        assert_eq!(p, cap);
    }

    proptest! {
        #[test]
        fn feasible_and_kkt(
            w in 0.0f64..1e-3, q in 0.0f64..5e3, a in 0.0f64..1.2e3, g_db in -150.0f64..-100.0,
        ) {
            let cfg = default_scenario();
            let g = 10f64.powf(g_db / 10.0);
            let p = optimal_power(w, q, a, g, &cfg);
            prop_assert!((0.0..=cfg.max_power).contains(&p));
            let served = rate(p, g, cfg.noise_power(), cfg.bandwidth) * cfg.slot_duration;
            prop_assert!(served <= q + a + 1e-9);
            let cap = rate_cap_power(q + a, cfg.bandwidth, cfg.slot_duration, g, cfg.noise_power()).unwrap();
            if p > 0.0 && p < cap.min(cfg.max_power) {
                prop_assert!(power_objective_slope(w, p, g, &cfg).abs() <= 1e-8);
            }
        }

        #[test]
        fn curvature_matches_slope_differences(
            w in 1e-6f64..1e-3, p in 1e-4f64..0.1, g_db in -140.0f64..-110.0,
        ) {
            let cfg = default_scenario();
            let g = 10f64.powf(g_db / 10.0);
            let h = p * 1e-4;
            let fd = (power_objective_slope(w, p + h, g, &cfg) - power_objective_slope(w, p - h, g, &cfg)) / (2.0 * h);
            let exact = power_objective_curvature(w, p, g, &cfg);
            prop_assert!(exact >= 0.0);
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-12), "fd {} exact {}", fd, exact);
        }
    }
}

//! Data queues, virtual delay queues and per-slot weights.
//!
//! All delays are in seconds: the Little's-law delay `Q / Ã` (in slots) is
//! multiplied by the slot length. The virtual queue `D` accumulates delay in
//! excess of the threshold and is therefore also in seconds.

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Per-device uniform integer arrivals on `[arrival_min, arrival_max]` bits.
pub fn sample_arrivals<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Vec<f64> {
    (0..config.num_devices)
        .map(|_| rng.random_range(config.arrival_min..=config.arrival_max) as f64)
        .collect()
}

/// `max(Q + A - R tau, 0)`.
pub fn queue_update(queue: f64, arrival: f64, rate: f64, slot_duration: f64) -> f64 {
    (queue + arrival - rate * slot_duration).max(0.0)
}

/// Little's-law delay `(Q / Ã_prev) * tau`, seconds.
pub fn slot_delay(queue: f64, avg_arrival_prev: f64, slot_duration: f64) -> Result<f64> {
    if queue == 0.0 {
        return Ok(0.0);
    }
    if avg_arrival_prev <= 0.0 {
        return Err(Error::UndefinedDelay { queue });
    }
    Ok(queue / avg_arrival_prev * slot_duration)
}

/// `max(D - d_th + d_next, 0)`.
pub fn virtual_queue_update(virtual_queue: f64, threshold: f64, next_delay: f64) -> f64 {
    (virtual_queue - threshold + next_delay).max(0.0)
}

/// Incremental mean: `Ã + (A - Ã) / t`, `t >= 1`.
pub fn running_average_update(avg: f64, arrival: f64, t: usize) -> f64 {
    debug_assert!(t >= 1);
    avg + (arrival - avg) / t as f64
}

/// Strong-stability proxy for one queue trace: the running time average,
/// viewed over the last 80% of slots, never exceeds 10x its median.
/// An all-zero tail counts as stable.
pub fn is_stable(trace: &[f64]) -> bool {
    if trace.is_empty() {
        return true;
    }
    let mut sum = 0.0;
    let running: Vec<f64> = trace
        .iter()
        .enumerate()
        .map(|(i, x)| {
            sum += x;
            sum / (i + 1) as f64
        })
        .collect();
    let mut tail = running[running.len() / 5..].to_vec();
    let sup = tail.iter().copied().fold(0.0, f64::max);
    tail.sort_by(f64::total_cmp);
    let median = tail[tail.len() / 2];
    sup == 0.0 || sup < 10.0 * median
}

/// Drift weight of one device:
/// `omega = Ã^-2 * (Q + A + Ã * D/tau) * tau`.
///
/// `D / tau` is the virtual backlog in slots, so `Ã * D / tau` is in bits
/// like `Q + A`.
pub fn slot_weight(
    queue: f64,
    arrival: f64,
    virtual_queue: f64,
    avg_arrival: f64,
    slot_duration: f64,
) -> Option<f64> {
    if avg_arrival <= 0.0 {
        return None;
    }
    let backlog = queue + arrival + avg_arrival * virtual_queue / slot_duration;
    Some(backlog * slot_duration / (avg_arrival * avg_arrival))
}

/// Real and virtual queue state of every device.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    /// 1-based index of the current slot.
    pub slot: usize,
    /// `Q_k`, bits.
    pub queue: Vec<f64>,
    /// `D_k`, seconds.
    pub virtual_queue: Vec<f64>,
    /// `Ã_k` including the current slot's arrival once revealed, bits/slot.
    pub avg_arrival: Vec<f64>,
    /// `A_k` of the current slot, bits.
    pub arrival: Vec<f64>,
    /// `d_k` of the current slot, seconds.
    pub delay: Vec<f64>,
}

impl NetworkState {
    /// Empty queues at slot 1.
    pub fn new(num_devices: usize) -> Self {
        Self {
            slot: 1,
            queue: vec![0.0; num_devices],
            virtual_queue: vec![0.0; num_devices],
            avg_arrival: vec![0.0; num_devices],
            arrival: vec![0.0; num_devices],
            delay: vec![0.0; num_devices],
        }
    }

    pub fn num_devices(&self) -> usize {
        self.queue.len()
    }

    /// Reveals this slot's arrivals and folds them into `Ã`.
    pub fn reveal_arrivals(&mut self, arrivals: &[f64]) {
        assert_eq!(arrivals.len(), self.num_devices());
        self.arrival.copy_from_slice(arrivals);
        for (avg, &a) in self.avg_arrival.iter_mut().zip(arrivals) {
            *avg = running_average_update(*avg, a, self.slot);
        }
    }

    /// Weights `omega_k` for the current slot. A device with `Ã = 0` has
    /// never received data, so its queues are empty and its weight is 0.
    pub fn weights(&self, slot_duration: f64) -> Result<Vec<f64>> {
        (0..self.num_devices())
            .map(|k| {
                match slot_weight(
                    self.queue[k],
                    self.arrival[k],
                    self.virtual_queue[k],
                    self.avg_arrival[k],
                    slot_duration,
                ) {
                    Some(w) => Ok(w),
                    None if self.queue[k] + self.arrival[k] + self.virtual_queue[k] == 0.0 => {
                        Ok(0.0)
                    }
                    None => Err(Error::UndefinedWeight { device: k }),
                }
            })
            .collect()
    }

    /// Serves `rates` (bits/s) for one slot and moves to the next slot:
    /// updates `Q`, then `d` from the new `Q`, then `D`. Returns the bits
    /// served per device.
    pub fn advance(&mut self, rates: &[f64], config: &ScenarioConfig) -> Result<Vec<f64>> {
        if rates.len() != self.num_devices() {
            return Err(Error::Shape(format!(
                "{} rates for {} devices",
                rates.len(),
                self.num_devices()
            )));
        }
        let tau = config.slot_duration;
        let mut served = Vec::with_capacity(rates.len());
        for (k, &rate) in rates.iter().enumerate() {
            let before = self.queue[k] + self.arrival[k];
            let after = queue_update(self.queue[k], self.arrival[k], rate, tau);
            served.push(before - after);
            self.queue[k] = after;
            self.delay[k] = slot_delay(after, self.avg_arrival[k], tau)?;
            self.virtual_queue[k] =
                virtual_queue_update(self.virtual_queue[k], config.delay_threshold, self.delay[k]);
        }
        self.slot += 1;
        Ok(served)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_scenario;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_arrival_interval() {
        let mut cfg = default_scenario();
        cfg.arrival_min = 100;
        cfg.arrival_max = 100;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            assert!(sample_arrivals(&cfg, &mut rng).iter().all(|&a| a == 100.0));
        }
    }

    #[test]
    fn arrivals_integer_bounded_and_unbiased() {
        let mut cfg = default_scenario();
        cfg.num_devices = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let a = sample_arrivals(&cfg, &mut rng)[0];
            assert_eq!(a.fract(), 0.0);
            assert!(a >= cfg.arrival_min as f64 && a <= cfg.arrival_max as f64);
            sum += a;
        }
        let want = (cfg.arrival_min + cfg.arrival_max) as f64 / 2.0;
        assert!((sum / n as f64 / want - 1.0).abs() < 0.01);
    }

    #[test]
    fn stability_proxy_cases() {
        assert!(is_stable(&[]));
        assert!(is_stable(&[0.0; 100]));
        assert!(is_stable(&[3.0; 100]));
        let settling: Vec<f64> = (0..1000)
            .map(|t| 1.0 - (-(t as f64) / 50.0).exp())
            .collect();
        assert!(is_stable(&settling));
        let growing: Vec<f64> = (0..1000).map(|t| (t as f64 / 50.0).exp()).collect();
        assert!(!is_stable(&growing));
        let mut late_burst = vec![0.0; 1000];
        late_burst[999] = 1.0;
        assert!(!is_stable(&late_burst));
    }

    #[test]
    fn queue_update_cases() {
        assert_eq!(queue_update(0.0, 100.0, 15_000.0, 0.01), 0.0);
        assert_eq!(queue_update(50.0, 100.0, 3_000.0, 0.01), 120.0);
        assert_eq!(queue_update(50.0, 100.0, 0.0, 0.01), 150.0);
    }

    #[test]
    fn delay_cases() {
        assert_eq!(slot_delay(0.0, 0.0, 0.01).unwrap(), 0.0);
        assert!((slot_delay(600.0, 600.0, 0.01).unwrap() - 0.01).abs() < 1e-15);
        assert!((slot_delay(1200.0, 600.0, 0.01).unwrap() - 0.02).abs() < 1e-15);
        assert!(matches!(
            slot_delay(5.0, 0.0, 0.01),
            Err(Error::UndefinedDelay { .. })
        ));
    }

    #[test]
    fn virtual_queue_cases() {
        assert_eq!(virtual_queue_update(0.0, 0.05, 0.05), 0.0);
        assert!((virtual_queue_update(0.1, 0.05, 0.02) - 0.07).abs() < 1e-15);
        assert_eq!(virtual_queue_update(0.01, 0.05, 0.0), 0.0);
    }

    #[test]
    fn running_average_cases() {
        assert_eq!(running_average_update(123.0, 40.0, 1), 40.0);
        let mut avg = 0.0;
        for t in 1..20 {
            avg = running_average_update(avg, 7.0, t);
            assert_eq!(avg, 7.0);
        }
        let a1 = running_average_update(0.0, 100.0, 1);
        assert_eq!(running_average_update(a1, 200.0, 2), 150.0);
    }

    #[test]
    fn weight_cases() {
        assert_eq!(slot_weight(0.0, 0.0, 0.0, 600.0, 0.01), Some(0.0));
        // 1200 / 600^2 * 0.01
        let w = slot_weight(600.0, 600.0, 0.0, 600.0, 0.01).unwrap();
        assert!((w - 3.333_333_333_333_333e-5).abs() < 1e-18);
        assert_eq!(slot_weight(1.0, 1.0, 0.0, 0.0, 0.01), None);
        // D = 0.05 s is 5 slots of backlog: 600 * 5 = 3000 extra bits.
        let w = slot_weight(600.0, 600.0, 0.05, 600.0, 0.01).unwrap();
        assert!((w - 4200.0 / 360_000.0 * 0.01).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn weight_increasing_in_each_argument(
            q in 0.0f64..1e4, a in 0.0f64..1e4, d in 0.0f64..1.0,
            avg in 1.0f64..1e3, bump in 1e-3f64..10.0,
        ) {
            let w = slot_weight(q, a, d, avg, 0.01).unwrap();
            prop_assert!(slot_weight(q + bump, a, d, avg, 0.01).unwrap() > w);
            prop_assert!(slot_weight(q, a + bump, d, avg, 0.01).unwrap() > w);
            prop_assert!(slot_weight(q, a, d + bump, avg, 0.01).unwrap() > w);
        }

        #[test]
        fn queues_stay_nonnegative(
            q in 0.0f64..1e4, a in 0.0f64..1e4, r in 0.0f64..1e7,
            d in 0.0f64..1.0, dn in 0.0f64..1.0,
        ) {
            prop_assert!(queue_update(q, a, r, 0.01) >= 0.0);
            prop_assert!(virtual_queue_update(d, 0.05, dn) >= 0.0);
        }
    }

    #[test]
    fn flow_conservation_over_random_trace() {
        let mut cfg = default_scenario();
        cfg.num_devices = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut state = NetworkState::new(3);
        let mut arrived = [0.0; 3];
        let mut served = [0.0; 3];
        for _ in 0..1000 {
            let a = sample_arrivals(&cfg, &mut rng);
            state.reveal_arrivals(&a);
            let rates: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.2e5)).collect();
            let s = state.advance(&rates, &cfg).unwrap();
            for k in 0..3 {
                // served = min{Q + A, R tau}
                assert!(s[k] <= rates[k] * cfg.slot_duration + 1e-9);
                arrived[k] += a[k];
                served[k] += s[k];
            }
            assert!(state.queue.iter().all(|&q| q >= 0.0));
            assert!(state.virtual_queue.iter().all(|&d| d >= 0.0));
            assert!(state.avg_arrival.iter().all(|&x| x >= 0.0));
        }
        for k in 0..3 {
            assert!((state.queue[k] - (arrived[k] - served[k])).abs() < 1e-9);
        }
    }

    #[test]
    fn idle_device_has_zero_weight() {
        let state = NetworkState::new(2);
        assert_eq!(state.weights(0.01).unwrap(), vec![0.0, 0.0]);
    }
}

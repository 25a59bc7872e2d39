mod common;

use std::f64::consts::PI;

use irsopt::channel::{
    draw_link, los_steering, pathloss, read_channel_trace, write_channel_trace, ChannelParams,
};
use irsopt::config::default_scenario;
use irsopt::geometry::Layout;
use irsopt::irs_fp::PhaseVector;
use irsopt::{ChannelModel, Complex64};
use proptest::prelude::*;

#[test]
fn stacked_cascade_matches_per_irs_sum() {
    let cfg = default_scenario();
    let mut rng = common::rng(1);
    let layout = Layout::sample(&cfg, &mut rng);
    let model = ChannelModel::new(&cfg, &layout).unwrap();
    let n = cfg.elements_per_irs();
    for t in 0..50 {
        let links = model.draw_links(&mut rng);
        let slot = links.assemble(t + 1);
        let v = PhaseVector::random(cfg.total_elements(), cfg.phase_bits, &mut rng).values();
        for k in 0..cfg.num_devices {
            let want = common::per_irs_effective(&links, k, &v, n);
            let got = slot.effective(k, &v);
            assert!(
                (got - want).norm() <= 1e-12 * want.norm(),
                "{got} vs {want}"
            );
            let g2 = slot.gains(&v)[k];
            assert!((g2 - want.norm_sqr()).abs() <= 1e-12 * want.norm_sqr());
        }
    }
}

#[test]
fn zero_phases_add_every_cascaded_entry() {
    let cfg = default_scenario();
    let mut rng = common::rng(2);
    let layout = Layout::sample(&cfg, &mut rng);
    let slot = ChannelModel::new(&cfg, &layout)
        .unwrap()
        .generate_slot(&mut rng, 1);
    let v = PhaseVector::zeros(cfg.total_elements(), cfg.phase_bits).values();
    for k in 0..cfg.num_devices {
        let sum: Complex64 = slot.direct[k] + slot.cascaded[k].iter().sum::<Complex64>();
        assert!((slot.effective(k, &v) - sum).norm() <= 1e-12 * sum.norm());
    }
}

#[test]
fn rician_power_matches_pathloss() {
    let los = los_steering(4, 4, 0.9, 1.2, 0.5);
    for eps in [0.0, 0.5, 1.0, 10.0] {
        let params = ChannelParams {
            rician_factor: eps,
            pathloss_exponent: 2.2,
            reference_loss: 1e-3,
            reference_distance: 1.0,
        };
        let d = 57.0;
        let want = pathloss(&params, d).unwrap();
        let mut rng = common::rng(3);
        let draws = 100_000 / los.len();
        let mut acc = 0.0;
        for _ in 0..draws {
            acc += draw_link(&params, d, &los, &mut rng)
                .unwrap()
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>();
        }
        let mean = acc / (draws * los.len()) as f64;
        assert!(
            (mean / want - 1.0).abs() < 0.02,
            "eps {eps}: {mean} vs {want}"
        );
    }
}

#[test]
fn reference_pathloss_value() {
    let params = ChannelParams {
        rician_factor: 1.0,
        pathloss_exponent: 2.2,
        reference_loss: 1e-3,
        reference_distance: 1.0,
    };
    // 1e-3 * 10^-2.2 by hand
    assert!((pathloss(&params, 10.0).unwrap() - 6.309_573_444_801_93e-6).abs() < 1e-15);
    assert_eq!(pathloss(&params, 1.0).unwrap(), 1e-3);
}

#[test]
fn broadside_steering_is_all_ones() {
    for (nx, ny) in [(1, 1), (4, 4), (8, 4), (3, 5)] {
        for z in los_steering(nx, ny, PI / 2.0, PI / 2.0, 0.5) {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }
}

#[test]
fn trace_round_trip_is_exact() {
    let cfg = default_scenario();
    let mut rng = common::rng(4);
    let layout = Layout::sample(&cfg, &mut rng);
    let model = ChannelModel::new(&cfg, &layout).unwrap();
    let slots: Vec<_> = (1..=3).map(|t| model.generate_slot(&mut rng, t)).collect();
    let mut buf = Vec::new();
    write_channel_trace(&mut buf, &slots).unwrap();
    assert_eq!(read_channel_trace(buf.as_slice()).unwrap(), slots);
}

proptest! {
    #[test]
    fn steering_entries_have_unit_modulus(
        nx in 1usize..9, ny in 1usize..9, az in -PI..PI, el in 0.0..PI,
    ) {
        let a = los_steering(nx, ny, az, el, 0.5);
        prop_assert_eq!(a.len(), nx * ny);
        for z in a {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pathloss_decreases_with_distance(d in 1.0f64..500.0, extra in 0.1f64..100.0, iota in 1.5f64..4.0) {
        let params = ChannelParams {
            rician_factor: 1.0,
            pathloss_exponent: iota,
            reference_loss: 1e-3,
            reference_distance: 1.0,
        };
        prop_assert!(pathloss(&params, d + extra).unwrap() < pathloss(&params, d).unwrap());
    }
}

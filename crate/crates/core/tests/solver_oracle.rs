mod common;

use irsopt::config::{default_scenario, tiny_scenario};
use irsopt::irs_fp::PhaseVector;
use irsopt::oracle::RandomInstance;
use irsopt::solver::{candidate_count, exhaustive_slot, slot_objective, solve_slot};
use irsopt::{Complex64, Error};

#[test]
fn objective_arithmetic() {
    let mut cfg = default_scenario();
    cfg.elements_x = 4;
    cfg.elements_y = 4;
    cfg.num_irs = 2;
    cfg.element_power = 1.585e-3;
    cfg.control_v = 50.0;
    // 50 * 32 * 1.585 mW
    let got = slot_objective(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], &cfg);
    assert!((got - 2.536).abs() < 1e-12);
    let higher_rate = slot_objective(&[0.01, 0.0], &[2e4, 0.0], &[1e-4, 0.0], &cfg);
    let lower_rate = slot_objective(&[0.01, 0.0], &[1e4, 0.0], &[1e-4, 0.0], &cfg);
    assert!(higher_rate < lower_rate);
}

fn check_feasible(inst: &RandomInstance, power: &[f64], rate: &[f64], phases: &PhaseVector) {
    let cfg = &inst.config;
    let v = phases.values();
    for k in 0..cfg.num_devices {
        assert!((0.0..=cfg.max_power).contains(&power[k]));
        let g = inst.channel.effective(k, &v).norm_sqr();
        let served = common::served_bits(power[k], g, cfg);
        assert!(served <= inst.queue[k] + inst.arrival[k] + 1e-9);
        assert!((rate[k] * cfg.slot_duration - served).abs() <= 1e-9 * served.max(1.0));
    }
    for z in v {
        assert!((z.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn exhaustive_matches_independent_enumeration() {
    let mut rng = common::rng(30);
    for _ in 0..30 {
        let inst = common::tiny_instance(&mut rng);
        let cfg = &inst.config;
        let ex = exhaustive_slot(&inst.problem(), 1 << 20).unwrap();
        let mut best = f64::INFINITY;
        for idx in common::all_index_vectors(cfg.total_elements(), cfg.phase_levels()) {
            let v = common::phases(&idx, cfg.phase_bits);
            let h: Vec<Complex64> = (0..cfg.num_devices)
                .map(|k| inst.channel.effective(k, &v))
                .collect();
            // f1 is convex in p: golden section on [0, cap], cap from bisection on the backlog
            let power: Vec<f64> = (0..cfg.num_devices)
                .map(|k| {
                    let g = h[k].norm_sqr();
                    let backlog = inst.queue[k] + inst.arrival[k];
                    let (mut lo, mut hi) = (0.0, cfg.max_power);
                    if common::served_bits(hi, g, cfg) > backlog {
                        for _ in 0..200 {
                            let mid = 0.5 * (lo + hi);
                            if common::served_bits(mid, g, cfg) > backlog {
                                hi = mid;
                            } else {
                                lo = mid;
                            }
                        }
                        hi = lo;
                    }
                    common::golden_max(|p| -common::f1(inst.weights[k], p, g, cfg), 0.0, hi, 200)
                })
                .collect();
            best = best.min(common::slot_objective(&power, &inst.weights, &h, cfg));
        }
        assert!(
            ex.objective <= best + 1e-6 * best.abs(),
            "{} vs {best}",
            ex.objective
        );
        assert!(
            (ex.objective - best).abs() <= 1e-6 * best.abs(),
            "{} vs {best}",
            ex.objective
        );
        check_feasible(&inst, &ex.power, &ex.rate, &ex.phases);
    }
}

#[test]
fn solver_is_feasible_monotone_and_bounded_by_exhaustive() {
    let mut rng = common::rng(31);
    for _ in 0..100 {
        let inst = common::tiny_instance(&mut rng);
        let cfg = &inst.config;
        let warm = PhaseVector::random(cfg.total_elements(), cfg.phase_bits, &mut rng);
        let d = solve_slot(&inst.problem(), &cfg.solver, &warm);
        let ex = exhaustive_slot(&inst.problem(), 1 << 20).unwrap();
        assert!(ex.objective <= d.objective + 1e-12 * d.objective.abs());
        assert!(d.iterations >= 1 && d.iterations <= cfg.solver.max_outer);
        for w in d.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        check_feasible(&inst, &d.power, &d.rate, &d.phases);
        let v = d.phases.values();
        let h: Vec<Complex64> = (0..cfg.num_devices)
            .map(|k| inst.channel.effective(k, &v))
            .collect();
        let direct = common::slot_objective(&d.power, &inst.weights, &h, cfg);
        assert!((direct - d.objective).abs() <= 1e-9 * direct.abs());
    }
}

#[test]
fn decoupled_slot_needs_one_iteration() {
    let mut rng = common::rng(32);
    let mut inst = RandomInstance::draw(&default_scenario(), &mut rng).unwrap();
    for col in &mut inst.channel.cascaded {
        col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    }
    let cfg = inst.config.clone();
    let warm = PhaseVector::random(cfg.total_elements(), cfg.phase_bits, &mut rng);
    let d = solve_slot(&inst.problem(), &cfg.solver, &warm);
    assert_eq!(d.iterations, 1);
    assert!(d.converged);
    assert_eq!(d.phases, warm);
    let closed = inst.problem().powers_at(&warm);
    assert_eq!(d.power, closed.power);

    let mut tiny = common::tiny_instance(&mut rng);
    for col in &mut tiny.channel.cascaded {
        col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    }
    let warm = PhaseVector::zeros(2, 1);
    let d = solve_slot(&tiny.problem(), &tiny.config.solver, &warm);
    let ex = exhaustive_slot(&tiny.problem(), 1 << 20).unwrap();
    assert_eq!(d.objective, ex.objective);
}

#[test]
fn enumeration_size_and_budget() {
    assert_eq!(candidate_count(1, 1), 2.0);
    assert_eq!(candidate_count(2, 3), 64.0);
    let mut cfg = tiny_scenario();
    cfg.elements_x = 1;
    let mut rng = common::rng(33);
    let inst = RandomInstance::draw(&cfg, &mut rng).unwrap();
    assert_eq!(inst.channel.num_elements(), 1);
    assert!(exhaustive_slot(&inst.problem(), 2).is_ok());
    assert!(matches!(
        exhaustive_slot(&inst.problem(), 1),
        Err(Error::BudgetExceeded { budget: 1, .. })
    ));
    let big = RandomInstance::draw(&default_scenario(), &mut rng).unwrap();
    let err = exhaustive_slot(&big.problem(), 1 << 20).unwrap_err();
    assert!(err.is_usage());
}

#[test]
fn exhaustive_tie_break_is_deterministic() {
    let mut rng = common::rng(34);
    let inst = common::tiny_instance(&mut rng);
    let a = exhaustive_slot(&inst.problem(), 1 << 20).unwrap();
    let b = exhaustive_slot(&inst.problem(), 1 << 20).unwrap();
    assert_eq!(a, b);
}

#[test]
fn warm_start_reaches_at_least_its_own_objective() {
    let cfg = default_scenario();
    let mut rng = common::rng(35);
    for _ in 0..10 {
        let inst = RandomInstance::draw(&cfg, &mut rng).unwrap();
        let warm = PhaseVector::random(cfg.total_elements(), cfg.phase_bits, &mut rng);
        let start = inst.problem().decide_at(warm.clone()).objective;
        let d = solve_slot(&inst.problem(), &cfg.solver, &warm);
        assert!(d.objective <= start);
        assert_eq!(d.trace[0], start);
    }
}

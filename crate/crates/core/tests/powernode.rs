mod common;

use common::*;
use flexcube::{
    simulate, step, validate, ConstraintTag, Controllability, Controls, NodeError, NodeState, PowerNodeParams, Profile,
    PwaCurve,
};
use proptest::prelude::*;
use rand::Rng;

fn battery() -> PowerNodeParams {
    PowerNodeParams {
        capacity: 4.0,
        eta_gen: PwaCurve::constant(0.9),
        eta_load: PwaCurve::constant(0.9),
        u_gen_max: 2.0,
        u_load_max: 2.0,
        ramp_gen_min: -0.1,
        ramp_gen_max: 0.1,
        ramp_load_min: -0.1,
        ramp_load_max: 0.1,
        ..Default::default()
    }
}

#[test]
fn charging_an_ideal_store_fills_it_linearly() {
    let p = PowerNodeParams { eta_gen: PwaCurve::constant(1.0), eta_load: PwaCurve::constant(1.0), ..battery() };
    let s0 = NodeState { soc: 0.25, u_load: 1.0, ..Default::default() };
    let schedule = vec![Controls { u_gen: 0.0, u_load: 1.0, w: 0.0 }; 8];
    let traj = simulate(&p, &s0, &schedule, &[0.0; 8], 0.25).unwrap();
    for (k, s) in traj.states.iter().enumerate() {
        assert!((s.soc - (0.25 + 0.0625 * k as f64)).abs() < 1e-12);
    }
}

#[test]
fn leaving_the_soc_window_is_an_error_not_a_clamp() {
    let p = battery();
    let s0 = NodeState { soc: 0.05, u_gen: 2.0, ..Default::default() };
    let err = step(&p, &s0, &Controls { u_gen: 2.0, u_load: 0.0, w: 0.0 }, 0.0, 0.25).unwrap_err();
    assert!(matches!(err, NodeError::SocOutOfBounds { .. }), "{err:?}");
}

#[test]
fn simulation_errors_keep_the_feasible_prefix() {
    let p = battery();
    let s0 = NodeState { soc: 0.2, u_gen: 2.0, ..Default::default() };
    let schedule = vec![Controls { u_gen: 2.0, u_load: 0.0, w: 0.0 }; 8];
    let err = simulate(&p, &s0, &schedule, &[0.0; 8], 0.25).unwrap_err();
    // 0.2 · 4 MWh at 2/0.9 MW lasts 0.36 h: one full step, then the store runs dry.
    assert_eq!(err.step, 1);
    assert_eq!(err.partial.states.len(), 2);
}

#[test]
fn storageless_units_must_balance() {
    let p = PowerNodeParams { eta_gen: PwaCurve::constant(0.4), u_gen_max: 100.0, xi_max: Profile::Constant(300.0), ..Default::default() };
    let s0 = NodeState { u_gen: 40.0, xi: 100.0, ..Default::default() };
    assert!(step(&p, &s0, &Controls { u_gen: 40.0, u_load: 0.0, w: 0.0 }, 100.0, 0.25).is_ok());
    let err = step(&p, &s0, &Controls { u_gen: 40.0, u_load: 0.0, w: 0.0 }, 101.0, 0.25).unwrap_err();
    assert!(matches!(err, NodeError::BalanceViolation { residual } if (residual - 1.0).abs() < 1e-9));
    // Curtailing the surplus restores the balance.
    assert!(step(&p, &s0, &Controls { u_gen: 40.0, u_load: 0.0, w: 1.0 }, 101.0, 0.25).is_ok());
}

#[test]
fn gating_forbids_curtailment_of_uncontrollable_processes() {
    let p = PowerNodeParams { controllability: Controllability::NonControllable, ..battery() };
    let s0 = NodeState { soc: 0.5, xi: 0.5, ..Default::default() };
    let err = step(&p, &s0, &Controls { u_gen: 0.0, u_load: 0.0, w: 0.2 }, 0.5, 0.25).unwrap_err();
    assert!(matches!(err, NodeError::NotControllable { .. }));
    let s = NodeState { w: 0.2, ..s0 };
    assert_eq!(validate(&p, &s, None).iter().map(|v| v.tag).collect::<Vec<_>>(), [ConstraintTag::Gating]);
}

#[test]
fn trajectory_csv_has_the_documented_columns() {
    let p = battery();
    let traj = simulate(&p, &NodeState { soc: 0.5, ..Default::default() }, &[Controls::default(); 2], &[0.0; 2], 0.5).unwrap();
    let csv = traj.to_csv(&p);
    assert_eq!(csv, "t,x,u_gen,u_load,xi,w,v\n0,0.5,0,0,0,0,0\n0.5,0.5,0,0,0,0,0\n1,0.5,0,0,0,0,0\n");
}

fn curve_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (prop::collection::vec(0.01f64..1.0, 0..4), prop::collection::vec(0.1f64..1.0, 5)).prop_map(|(mut xs, ys)| {
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        let mut bp = vec![(0.0, ys[0])];
        bp.extend(xs.iter().zip(&ys[1..]).map(|(x, y)| (*x, *y)).filter(|(x, _)| *x < 1.0 - 1e-6));
        bp.push((1.0, ys[4]));
        bp
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn curves_interpolate_their_breakpoints(bp in curve_strategy(), x in -0.5f64..1.5) {
        let c = PwaCurve::new(bp.clone()).unwrap();
        for &(bx, by) in &bp {
            prop_assert!((c.eval(bx) - by).abs() < 1e-12);
        }
        let y = c.eval(x);
        prop_assert!(y >= c.min_value() - 1e-12 && y <= c.max_value() + 1e-12);
        prop_assert_eq!(c.eval(x), c.eval(x.clamp(0.0, 1.0)));
    }

    #[test]
    fn feasible_steps_conserve_energy_and_validate_clean(seed in any::<u64>()) {
        let mut r = rng(seed);
        let dt = [0.25, 0.5, 1.0][r.random_range(0..3)];
        let (p, s) = random_unit(&mut r, dt);
        let g = r.random_range(p.u_gen_min..=p.u_gen_max);
        let l = r.random_range(p.u_load_min..=p.u_load_max);
        // Relax the ramps so any set-point pair is reachable in one step.
        let p = PowerNodeParams { ramp_gen_min: f64::NEG_INFINITY, ramp_gen_max: f64::INFINITY, ramp_load_min: f64::NEG_INFINITY, ramp_load_max: f64::INFINITY, ..p };
        if let Some((lo, hi)) = supply_window(&p, &s, g, l, dt) {
            let e = if p.capacity > 0.0 { 0.5 * (lo + hi) } else { -base_balance(&p, s.soc, g, l) };
            let (xi, w) = realize(&p, &s, e);
            let next = step(&p, &s, &Controls { u_gen: g, u_load: l, w }, xi, dt).unwrap();
            prop_assert!(validate(&p, &next, Some((&s, dt))).is_empty());
            let b = base_balance(&p, s.soc, g, l) + xi - w;
            if p.capacity > 0.0 {
                prop_assert!((p.capacity * (next.soc - s.soc) - dt * b).abs() <= 1e-12 * (1.0 + p.capacity));
            } else {
                prop_assert!(b.abs() <= flexcube::BALANCE_EPS);
                prop_assert_eq!(next.soc, s.soc);
            }
            prop_assert_eq!(next.time_index, s.time_index + 1);
        }
    }

    #[test]
    fn over_limit_generation_is_rejected_and_flagged(seed in any::<u64>(), bump in 1e-6f64..10.0) {
        let mut r = rng(seed);
        let (p, s) = random_unit(&mut r, 0.25);
        let over = p.u_gen_max + bump;
        let err = step(&p, &s, &Controls { u_gen: over, u_load: s.u_load, w: s.w }, s.xi, 0.25).unwrap_err();
        let expected = matches!(err, NodeError::PowerBoundViolation { which: "generation", .. } | NodeError::RampViolation { .. });
        prop_assert!(expected, "unexpected error {:?}", err);
        let bad = NodeState { u_gen: over, ..s };
        prop_assert!(validate(&p, &bad, None).iter().any(|v| v.tag == ConstraintTag::GenPower));
    }
}

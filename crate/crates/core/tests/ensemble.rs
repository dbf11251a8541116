mod common;

use std::f64::consts::PI;

use common::*;
use flexcube::{
    adequacy, aggregate_cubes, aggregate_polytopes, minkowski_sum, needed_envelope, remaining_flex, FlexAxis,
    FlexCube, Polytope,
};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;

/// Running energy of `A·cos(ω·t)` sampled at the midpoints of steps of `dt`,
/// after `m + 1` samples, by the Dirichlet-kernel closed form.
fn cosine_energy(a: f64, omega: f64, dt: f64, m: usize) -> f64 {
    let h = omega * dt / 2.0;
    dt * a * ((m as f64 + 1.0) * h).sin() * ((m as f64 + 1.0) * h).cos() / h.sin()
}

/// `A·cos(ω·t)` over one period, each sample taken in the middle of the step it covers.
fn midpoint_cosine(a: f64, omega: f64, dt: f64, period: f64) -> Vec<f64> {
    (0..(period / dt).round() as usize).map(|k| a * (omega * (k as f64 + 0.5) * dt).cos()).collect()
}

#[test]
fn daily_cosine_envelope_matches_closed_form_and_dense_sampling() {
    let (a, period) = (30.0, 24.0);
    let omega = 2.0 * PI / period;
    let dt = 0.25;
    let series = midpoint_cosine(a, omega, dt, period);
    let env = needed_envelope(&series, dt, "cos").unwrap().needed;

    let closed: Vec<f64> = (0..series.len()).map(|m| cosine_energy(a, omega, dt, m)).collect();
    let hi = closed.iter().cloned().fold(0.0, f64::max);
    let lo = closed.iter().cloned().fold(0.0, f64::min);
    assert!((env.eps_plus - hi).abs() < 1e-9 && (env.eps_minus - lo).abs() < 1e-9);
    assert!((env.pi_plus - a * (omega * dt / 2.0).cos()).abs() < 1e-12);

    let continuous = a / omega;
    assert!((env.eps_plus - continuous).abs() <= 0.02 * continuous, "{} vs {continuous}", env.eps_plus);
    assert!((env.eps_minus + continuous).abs() <= 0.02 * continuous);

    let fine_dt = 1.0 / 3600.0;
    let dense = needed_envelope(&midpoint_cosine(a, omega, fine_dt, period), fine_dt, "cos").unwrap().needed;
    assert!((dense.eps_plus - continuous).abs() < 1e-4);
    assert!((env.eps_plus - dense.eps_plus).abs() <= 0.02 * continuous);
    // The first step jumps from zero onto the curve; afterwards ramps are small.
    assert!((env.rho_plus - series[0] / (dt * 60.0)).abs() < 1e-12);
}

#[test]
fn zero_series_gives_the_origin() {
    let env = needed_envelope(&[0.0; 10], 0.5, "calm").unwrap().needed;
    assert_eq!(env.lower(), [0.0; 3]);
    assert_eq!(env.upper(), [0.0; 3]);
    assert!(needed_envelope(&[], 0.5, "none").is_err());
}

#[test]
fn origin_need_is_always_covered() {
    let mut r = rng(11);
    for _ in 0..50 {
        let mut pts = random_points(&mut r, 12, 1.0, [0.0; 3]);
        pts.push(p3(0.0, 0.0, 0.0));
        let available = Polytope::from_points(pts).unwrap();
        let origin = Polytope::point(p3(0.0, 0.0, 0.0)).unwrap();
        let a = adequacy(&available, &origin).unwrap();
        assert!(a.covered && a.deficit_axes.is_empty());
        let rest = remaining_flex(&available, &origin).unwrap().unwrap();
        assert!(rest.set_eq(&available));
    }
}

fn random_cube(r: &mut rand_chacha::ChaCha8Rng) -> FlexCube {
    FlexCube {
        rho_plus: r.random_range(0.0..2.0),
        rho_minus: -r.random_range(0.0..2.0),
        pi_plus: r.random_range(0.0..10.0),
        pi_minus: -r.random_range(0.0..10.0),
        eps_plus: r.random_range(0.0..20.0),
        eps_minus: -r.random_range(0.0..20.0),
        horizon: 4.0,
        time_index: 3,
    }
}

fn hull_with_origin(r: &mut rand_chacha::ChaCha8Rng, n: usize, scale: f64) -> Polytope {
    let mut pts = random_points(r, n, scale, [0.0; 3]);
    pts.push(p3(0.0, 0.0, 0.0));
    Polytope::from_points(pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cube_sums_agree_with_box_minkowski_sums(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let cubes: Vec<FlexCube> = (0..n).map(|_| random_cube(&mut r)).collect();
        let agg = aggregate_cubes(&cubes).unwrap();
        let boxes: Vec<Polytope> = cubes.iter().map(|c| c.to_polytope().unwrap()).collect();
        let summed = aggregate_polytopes(&boxes).unwrap();
        prop_assert!(summed.set_eq(&agg.to_polytope().unwrap()));
        for axis in 0..3 {
            let expect_hi: f64 = cubes.iter().map(|c| c.upper()[axis]).sum();
            let expect_lo: f64 = cubes.iter().map(|c| c.lower()[axis]).sum();
            prop_assert!((agg.upper()[axis] - expect_hi).abs() < 1e-12);
            prop_assert!((agg.lower()[axis] - expect_lo).abs() < 1e-12);
        }
    }

    #[test]
    fn support_adds_over_the_pool(seed in any::<u64>()) {
        let mut r = rng(seed);
        let members: Vec<Polytope> = (0..3)
            .map(|_| {
                let scale = r.random_range(0.2..3.0);
                hull_with_origin(&mut r, 8, scale)
            })
            .collect();
        let agg = aggregate_polytopes(&members).unwrap();
        for m in &members {
            prop_assert!(agg.contains(m), "members contain the origin, so the pool contains each member");
        }
        for _ in 0..20 {
            let d = p3(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            let d = &d / d.norm().max(1e-12);
            let sum: f64 = members.iter().map(|m| m.support(&d)).sum();
            prop_assert!((agg.support(&d) - sum).abs() <= 1e-8, "{} vs {}", agg.support(&d), sum);
        }
    }

    #[test]
    fn adequacy_agrees_with_vertex_membership_and_remaining(seed in any::<u64>()) {
        let mut r = rng(seed);
        let available = hull_with_origin(&mut r, 14, 2.0);
        let scale = r.random_range(0.05..2.0);
        let needed = hull_with_origin(&mut r, 6, scale);
        let a = adequacy(&available, &needed).unwrap();
        let brute = hrep_violation(available.hrep(), needed.vertices()) <= 1e-9;
        prop_assert_eq!(a.covered, brute);
        let rest = remaining_flex(&available, &needed).unwrap();
        let origin = DVector::zeros(3);
        let rest_has_origin = rest.as_ref().is_some_and(|p| p.contains_point(&origin));
        prop_assert_eq!(a.covered, rest_has_origin);
        if let Some(rest) = rest {
            let back = minkowski_sum(&rest, &needed).unwrap();
            prop_assert!(hrep_violation(available.hrep(), back.vertices()) <= 1e-8);
        }
        // Every axis reported short really is short, and a covered need reports none.
        for axis in &a.deficit_axes {
            let d = axis.direction();
            prop_assert!(needed.support(&d) > available.support(&d));
        }
        if a.covered {
            prop_assert!(a.deficit_axes.is_empty());
        }
    }

    #[test]
    fn envelope_covers_every_sample(series in prop::collection::vec(-50.0f64..50.0, 1..60), dt in prop::sample::select(vec![0.25, 0.5, 1.0])) {
        let env = needed_envelope(&series, dt, "s").unwrap().needed;
        prop_assert!(env.contains_origin());
        let (lo, hi) = (env.lower(), env.upper());
        let (mut prev, mut energy) = (0.0, 0.0);
        for &x in &series {
            energy += dt * x;
            let point = [(x - prev) / (dt * 60.0), x, energy];
            for i in 0..3 {
                prop_assert!(point[i] >= lo[i] - 1e-12 && point[i] <= hi[i] + 1e-12);
            }
            prev = x;
        }
        prop_assert_eq!(env.horizon, dt * series.len() as f64);
    }

    #[test]
    fn single_axis_breach_names_only_that_axis(seed in any::<u64>(), which in 0usize..6) {
        let mut r = rng(seed);
        let avail = random_cube(&mut r);
        let mut lo = avail.lower().map(|x| 0.5 * x);
        let mut hi = avail.upper().map(|x| 0.5 * x);
        let axis = FlexAxis::ALL[which];
        let i = which / 2;
        if which % 2 == 0 {
            hi[i] = avail.upper()[i] + 1.0;
        } else {
            lo[i] = avail.lower()[i] - 1.0;
        }
        let needed = Polytope::from_box(&lo, &hi).unwrap();
        let a = adequacy(&avail.to_polytope().unwrap(), &needed).unwrap();
        prop_assert!(!a.covered);
        prop_assert_eq!(a.deficit_axes, vec![axis]);
    }
}

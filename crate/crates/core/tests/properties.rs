use std::f64::consts::TAU;

use elastica_core::energy::resilience_force;
use elastica_core::io::{curve_to_string, parse_curve_file};
use elastica_core::{
    closure_report, discrete_energy, exact_gradient, ingest, perturb, whitney_index, DescentParams, PolyCurve,
    Vec2,
};
use proptest::prelude::*;

/// Star-shaped polygon winding `k` times around the origin, with jittered
/// angular spacing and radii in [0.8, 1.2].
fn star(k: i64, radii: &[f64], jitter: &[f64]) -> Vec<Vec2> {
    let n = radii.len();
    let turns = k.unsigned_abs() as f64;
    (0..n)
        .map(|i| {
            let t = k.signum() as f64 * turns * TAU * (i as f64 + 0.3 * jitter[i]) / n as f64;
            Vec2::new(radii[i] * t.cos(), radii[i] * t.sin())
        })
        .collect()
}

prop_compose! {
    fn star_curve()(k in prop::sample::select(vec![-2i64, -1, 1, 2]), n in 24usize..64)
        (radii in prop::collection::vec(0.8f64..1.2, n * k.unsigned_abs() as usize),
         jitter in prop::collection::vec(-1.0f64..1.0, n * k.unsigned_abs() as usize),
         k in Just(k)) -> (i64, PolyCurve) {
        (k, PolyCurve::from_vertices(star(k, &radii, &jitter)).unwrap())
    }
}

fn similarity(curve: &PolyCurve, theta: f64, s: f64, shift: Vec2) -> PolyCurve {
    curve.transformed(s, |v| v.rotate(theta) * s + shift).unwrap()
}

fn max_norm(vs: &[Vec2]) -> f64 {
    vs.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_and_index_survive_similarities(
        (k, curve) in star_curve(),
        theta in 0.0f64..TAU,
        s in 0.05f64..20.0,
        dx in -50.0f64..50.0,
        dy in -50.0f64..50.0,
    ) {
        let moved = similarity(&curve, theta, s, Vec2::new(dx, dy));
        let e0 = discrete_energy(&curve).unwrap().discrete;
        let e1 = discrete_energy(&moved).unwrap().discrete;
        prop_assert!((e0 - e1).abs() <= 1e-9 * e0.max(1.0), "{e0} vs {e1}");
        prop_assert_eq!(whitney_index(&curve).unwrap(), k);
        prop_assert_eq!(whitney_index(&moved).unwrap(), k);
    }

    #[test]
    fn gradient_rotates_with_the_curve_and_scales_inversely(
        (_k, curve) in star_curve(),
        theta in 0.0f64..TAU,
        s in 0.1f64..10.0,
    ) {
        let g0 = exact_gradient(&curve).unwrap();
        let g1 = exact_gradient(&similarity(&curve, theta, s, Vec2::new(3.0, -1.0))).unwrap();
        let scale = max_norm(&g0) / s;
        for (a, b) in g0.iter().zip(&g1) {
            let expected = a.rotate(theta) / s;
            prop_assert!((expected - *b).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn gradient_sums_to_zero((_k, curve) in star_curve()) {
        let g = exact_gradient(&curve).unwrap();
        let total = g.iter().fold(Vec2::new(0.0, 0.0), |acc, v| acc + *v);
        prop_assert!(total.norm() <= 1e-9 * max_norm(&g) * g.len() as f64);
    }

    #[test]
    fn reflection_and_reversal_negate_the_index((k, curve) in star_curve()) {
        let mirrored = curve.transformed(1.0, |v| Vec2::new(v.x, -v.y)).unwrap();
        prop_assert_eq!(whitney_index(&mirrored).unwrap(), -k);
        prop_assert_eq!(whitney_index(&curve.reversed()).unwrap(), -k);
        let e0 = discrete_energy(&curve).unwrap().discrete;
        let e1 = discrete_energy(&mirrored).unwrap().discrete;
        prop_assert!((e0 - e1).abs() <= 1e-12 * e0.max(1.0));
    }

    #[test]
    fn resilience_is_internal(
        (_k, curve) in star_curve(),
        stretch in prop::collection::vec(0.5f64..1.5, 128),
        c2 in 0.01f64..1.0,
    ) {
        let rest = curve.rest_lengths().iter().zip(&stretch).map(|(d, f)| d * f).collect();
        let curve = PolyCurve::new(curve.vertices().to_vec(), rest).unwrap();
        let params = DescentParams { c2, ..DescentParams::default() };
        let r = resilience_force(&curve, &params);
        let total = r.iter().fold(Vec2::new(0.0, 0.0), |acc, v| acc + *v);
        prop_assert!(total.norm() <= 1e-12 * (1.0 + max_norm(&r)) * r.len() as f64);
    }

    #[test]
    fn closed_curves_have_vanishing_closure_sums((_k, curve) in star_curve()) {
        let report = closure_report(&curve);
        prop_assert!(report.max_abs() < 1e-9 * curve.perimeter());
    }

    #[test]
    fn curve_files_round_trip_exactly(
        (_k, curve) in star_curve(),
        s in 1e-6f64..1e6,
    ) {
        let curve = curve.transformed(s, |v| v * s).unwrap();
        let back = parse_curve_file(&curve_to_string(&curve)).unwrap().into_curve().unwrap();
        prop_assert_eq!(back, curve);
    }

    #[test]
    fn perturbation_is_seeded_and_small((_k, curve) in star_curve(), seed in any::<u64>()) {
        let a = perturb(&curve, seed).unwrap();
        let b = perturb(&curve, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.rest_lengths(), curve.rest_lengths());
        // radii are at most 1.2 and the centroid sits near the origin
        let bound = 1e-3 * 1.5;
        for (p, q) in a.vertices().iter().zip(curve.vertices()) {
            prop_assert!((p.x - q.x).abs() <= bound && (p.y - q.y).abs() <= bound);
        }
        prop_assert_eq!(whitney_index(&a).unwrap(), whitney_index(&curve).unwrap());
    }

    #[test]
    fn ingest_gives_equal_chords_on_resolved_input(
        k in prop::sample::select(vec![-2i64, -1, 1, 2]),
        modes in prop::collection::vec((-0.08f64..0.08, 0.0f64..TAU), 3),
        noise in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 600),
        n in 40usize..200,
    ) {
        let turns = k.unsigned_abs() as usize;
        let m = 300 * turns;
        let pts: Vec<Vec2> = (0..m)
            .map(|i| {
                let t = TAU * turns as f64 * i as f64 / m as f64;
                let r = 1.0 + modes
                    .iter()
                    .enumerate()
                    .map(|(j, (a, ph))| a * ((j + 1) as f64 * t / turns as f64 + ph).cos())
                    .sum::<f64>();
                let (dx, dy) = noise[i % noise.len()];
                Vec2::new(r * t.cos() + 2e-3 * dx, k.signum() as f64 * r * t.sin() + 2e-3 * dy)
            })
            .collect();
        let n = n * turns;
        let out = ingest(&pts, n).unwrap();
        prop_assert_eq!(out.len(), n);
        let mean = out.mean_edge();
        for e in out.edge_lengths() {
            prop_assert!((e - mean).abs() <= 1e-9 * mean, "edge {e} vs mean {mean}");
        }
        prop_assert_eq!(whitney_index(&out).unwrap(), k);
    }

    #[test]
    fn ingest_of_coarse_input_is_still_a_valid_curve(
        (k, curve) in star_curve(),
        n in 40usize..200,
    ) {
        let n = n * k.unsigned_abs() as usize;
        let out = ingest(curve.vertices(), n).unwrap();
        prop_assert_eq!(out.len(), n);
        prop_assert_eq!(out.rest_lengths(), &out.edge_lengths()[..]);
        prop_assert_eq!(whitney_index(&out).unwrap(), k);
    }
}

use std::collections::HashMap;

use gss_core::bench::{Dataset, PromptPair, Rationale};
use gss_core::eval::{
    binary_threshold_eval, divpo_select, evaluate_all, minmax_normalize, pairwise_accuracy, pearson_r,
    welch_t_test, Candidate, DivpoSelection, PairBuildConfig, PoolRule, ScoreTable,
};
use gss_core::metrics::Direction;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-sided Student-t tail by Simpson's rule after the substitution
/// t = √ν·tan θ, under which the density becomes ∝ cos^(ν−1) θ.
fn t_two_sided_p_oracle(t: f64, nu: f64) -> f64 {
    let f = |th: f64| th.cos().powf(nu - 1.0);
    let simpson = |a: f64, b: f64| {
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let theta0 = (t.abs() / nu.sqrt()).atan();
    simpson(theta0, half_pi) / simpson(0.0, half_pi)
}

#[test]
fn welch_matches_hand_formula_and_quadrature() {
    let r = welch_t_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert!((r.t_statistic - (-3.0 / (2.0f64 / 3.0).sqrt())).abs() < 1e-12);
    assert!((r.t_statistic + 3.6742).abs() < 1e-4);
    assert!((r.degrees_of_freedom - 4.0).abs() < 1e-9);
    let oracle = t_two_sided_p_oracle(r.t_statistic, r.degrees_of_freedom);
    assert!((r.p_value - oracle).abs() < 1e-3, "{} vs {oracle}", r.p_value);
    // sanity: closed form for ν = 4, p = 1 − (3/2)·sin θ0 + (1/2)·sin³ θ0
    let s = (3.6742f64 / 2.0).atan().sin();
    assert!((oracle - (1.0 - 1.5 * s + 0.5 * s.powi(3))).abs() < 1e-4);
}

#[test]
fn welch_p_values_track_quadrature_for_unequal_variances() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let a: Vec<f64> = (0..rng.gen_range(2..15)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..rng.gen_range(2..15)).map(|_| rng.gen_range(-3.0..4.0)).collect();
        let r = welch_t_test(&a, &b).unwrap();
        let oracle = t_two_sided_p_oracle(r.t_statistic, r.degrees_of_freedom);
        assert!((r.p_value - oracle).abs() < 1e-6, "{} vs {oracle}", r.p_value);
    }
}

fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                den += 1.0;
                num += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
            }
        }
    }
    num / den
}

#[test]
fn auc_agrees_with_pair_counting_and_is_near_half_for_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let n = rng.gen_range(4..40);
        // coarse scores so ties occur
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        labels[0] = true;
        labels[1] = false;
        let r = binary_threshold_eval(&scores, &labels, 2.5).unwrap();
        assert!((r.auc - brute_force_auc(&scores, &labels)).abs() < 1e-12);
    }
    let n = 4000;
    let scores: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let auc = binary_threshold_eval(&scores, &labels, 0.5).unwrap().auc;
    assert!((auc - 0.5).abs() < 0.03, "{auc}");
}

#[test]
fn pearson_is_exact_on_affine_data() {
    let x: Vec<f64> = (0..50).map(|i| (i as f64).sin() * 10.0).collect();
    let up: Vec<f64> = x.iter().map(|v| 3.5 * v - 2.0).collect();
    let down: Vec<f64> = x.iter().map(|v| -0.25 * v + 7.0).collect();
    assert!((pearson_r(&x, &up).unwrap().r - 1.0).abs() < 1e-12);
    assert!((pearson_r(&x, &down).unwrap().r + 1.0).abs() < 1e-12);
}

#[test]
fn minmax_reproduces_reported_normalised_rewards() {
    let v = minmax_normalize(&[-0.026, -0.016, -0.029]);
    for (got, want) in v.iter().zip([0.23, 1.00, 0.00]) {
        assert!((got - want).abs() < 0.01);
    }
}

fn synthetic_pairs(rng: &mut ChaCha8Rng) -> (Vec<PromptPair>, HashMap<String, f64>) {
    let mut pairs = Vec::new();
    let mut scores = HashMap::new();
    for (d, dataset) in Dataset::SYNTHETIC.into_iter().enumerate() {
        for i in 0..15 {
            let (l, s) = (format!("{d}-{i}-l"), format!("{d}-{i}-s"));
            // a few exact ties
            let a = rng.gen_range(0..8) as f64;
            let b = if rng.gen_bool(0.1) { a } else { rng.gen_range(0..8) as f64 };
            scores.insert(l.clone(), a);
            scores.insert(s.clone(), b);
            pairs.push(PromptPair { larger_id: l, smaller_id: s, dataset, rationale: Rationale::External });
        }
    }
    (pairs, scores)
}

/// Strictly increasing maps of the real line.
fn monotone(kind: u8, a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |x| match kind % 4 {
        0 => a * x + b,
        1 => (x / (1.0 + a)).exp() + b,
        2 => x.powi(3) + a * x,
        _ => (x * a).atan() + b.abs() * x,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn accuracy_invariant_under_monotone_transforms(
        seed in any::<u64>(),
        kind in any::<u8>(),
        a in 0.1f64..5.0,
        b in -5.0f64..5.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pairs, scores) = synthetic_pairs(&mut rng);
        let mut table = ScoreTable::default();
        for (p, v) in &scores {
            table.insert("m", "f", p, *v);
        }
        let f = monotone(kind, a, b);
        let mapped = table.map_values(&f);
        for dir in [Direction::HigherMeansLarger, Direction::LowerMeansLarger] {
            prop_assert_eq!(evaluate_all(&table, &pairs, |_| dir), evaluate_all(&mapped, &pairs, |_| dir));
        }
    }

    #[test]
    fn flipping_direction_complements_accuracy_excluding_ties(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pairs, scores) = synthetic_pairs(&mut rng);
        let up = pairwise_accuracy("m", "f", &scores, &pairs, Direction::HigherMeansLarger);
        let down = pairwise_accuracy("m", "f", &scores, &pairs, Direction::LowerMeansLarger);
        for (u, d) in up.datasets.iter().zip(&down.datasets) {
            prop_assert_eq!(u.ties, d.ties);
            prop_assert_eq!(u.correct + d.correct + u.ties, u.n_pairs);
        }
    }

    #[test]
    fn accuracy_and_interval_stay_in_range(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pairs, scores) = synthetic_pairs(&mut rng);
        let r = pairwise_accuracy("m", "f", &scores, &pairs, Direction::HigherMeansLarger);
        for d in &r.datasets {
            prop_assert!((0.0..=1.0).contains(&d.accuracy));
            prop_assert!(d.ci_halfwidth >= 0.0);
        }
    }

    #[test]
    fn welch_sign_flips_and_scale_invariance(
        a in prop::collection::vec(-10.0f64..10.0, 2..12),
        b in prop::collection::vec(-10.0f64..10.0, 2..12),
        c in 0.01f64..100.0,
    ) {
        prop_assume!(a.iter().any(|x| *x != a[0]) || b.iter().any(|x| *x != b[0]));
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        prop_assert!((ab.t_statistic + ba.t_statistic).abs() < 1e-9 * ab.t_statistic.abs().max(1.0));
        let sa: Vec<f64> = a.iter().map(|x| x * c).collect();
        let sb: Vec<f64> = b.iter().map(|x| x * c).collect();
        let scaled = welch_t_test(&sa, &sb).unwrap();
        prop_assert!((scaled.t_statistic - ab.t_statistic).abs() < 1e-7 * ab.t_statistic.abs().max(1.0));
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn pearson_invariant_under_positive_affine_maps(
        xy in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
        a in 0.1f64..10.0,
        b in -10.0f64..10.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-6) && y.iter().any(|v| (v - y[0]).abs() > 1e-6));
        let r0 = pearson_r(&x, &y).unwrap().r;
        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let r1 = pearson_r(&x2, &y).unwrap().r;
        prop_assert!((r0 - r1).abs() < 1e-9);
    }

    #[test]
    fn minmax_is_affine_invariant(
        v in prop::collection::vec(-100.0f64..100.0, 1..20),
        a in 0.01f64..10.0,
        b in -10.0f64..10.0,
    ) {
        let base = minmax_normalize(&v);
        let moved = minmax_normalize(&v.iter().map(|x| a * x + b).collect::<Vec<_>>());
        for (x, y) in base.iter().zip(&moved) {
            prop_assert!((x - y).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(x));
        }
    }

    #[test]
    fn divpo_respects_band_and_diversity_order(
        rd in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..12),
        p in 0.01f64..1.0,
        quantile in any::<bool>(),
    ) {
        let cands: Vec<Candidate> = rd.iter().map(|&(reward, diversity)| Candidate { reward, diversity }).collect();
        let pool_rule = if quantile { PoolRule::Quantile } else { PoolRule::Range };
        let cfg = PairBuildConfig { quality_fraction: p, pool_rule, ..Default::default() };
        let sel = divpo_select(&cands, &cfg).unwrap();
        if let (DivpoSelection::Pair { chosen, .. }, PoolRule::Range) = (&sel, pool_rule) {
            let hi = cands.iter().map(|c| c.reward).fold(f64::NEG_INFINITY, f64::max);
            let lo = cands.iter().map(|c| c.reward).fold(f64::INFINITY, f64::min);
            prop_assert!(cands[*chosen].reward >= hi - p * (hi - lo));
        }
        let warped: Vec<Candidate> = cands
            .iter()
            .map(|c| Candidate { reward: c.reward, diversity: c.diversity.powi(3) + 2.0 * c.diversity })
            .collect();
        prop_assert_eq!(divpo_select(&warped, &cfg).unwrap(), sel);
    }
}

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use gss_core::bench::{
    enumerate_strict_subset_pairs, generate_all, generate_dataset, BuildConfig, Dataset, TemplateBank,
};
use gss_core::io::to_jsonl;

#[test]
fn full_build_totals_and_determinism() {
    let bank = TemplateBank::default();
    let cfg = BuildConfig { seed: 7, ..Default::default() };
    let start = Instant::now();
    let a = generate_all(&bank, &cfg).unwrap();
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(a.pairs.len(), 9300);
    let expected = [
        (Dataset::Complement, 500),
        (Dataset::Factualqa, 500),
        (Dataset::RandomChoice, 500),
        (Dataset::Subset, 1800),
        (Dataset::Union, 3000),
        (Dataset::Intersection, 3000),
    ];
    for (d, n) in expected {
        assert_eq!(a.pair_count(d), n, "{d}");
    }
    let bytes = |b: &gss_core::bench::Bench| (to_jsonl(&b.prompts).unwrap(), to_jsonl(&b.pairs).unwrap());
    let b = generate_all(&bank, &cfg).unwrap();
    assert_eq!(bytes(&a), bytes(&b));
    let c = generate_all(&bank, &BuildConfig { seed: 8, ..Default::default() }).unwrap();
    assert_ne!(bytes(&a).0, bytes(&c).0);
}

#[test]
fn single_dataset_build_matches_slice_of_full_build() {
    let bank = TemplateBank::default();
    let full = generate_all(&bank, &BuildConfig { seed: 3, ..Default::default() }).unwrap();
    let mut union = generate_dataset(&bank, Dataset::Union, 60, 3).unwrap();
    union.sort();
    let from_full: Vec<_> = full.pairs.iter().filter(|p| p.dataset == Dataset::Union).cloned().collect();
    assert_eq!(union.pairs, from_full);
    assert_eq!(union.prompts.len(), 900);
}

#[test]
fn lattice_matches_brute_force_over_all_mask_pairs() {
    let mut brute = Vec::new();
    for sup in 1u32..16 {
        for sub in 1u32..16 {
            if sub != sup && sub & sup == sub {
                brute.push((sup, sub));
            }
        }
    }
    brute.sort_unstable();
    assert_eq!(enumerate_strict_subset_pairs(4), brute);
    assert_eq!(brute.len(), 50);
}

fn mask_of(bench: &gss_core::bench::Bench, id: &str) -> String {
    bench.prompt(id).unwrap().meta["mask"].clone()
}

#[test]
fn union_and_intersection_orientations_are_reversed() {
    let bank = TemplateBank::default();
    let u = generate_dataset(&bank, Dataset::Union, 3, 1).unwrap();
    let i = generate_dataset(&bank, Dataset::Intersection, 3, 1).unwrap();
    let orient = |b: &gss_core::bench::Bench| -> HashSet<(String, String)> {
        b.pairs.iter().map(|p| (mask_of(b, &p.larger_id), mask_of(b, &p.smaller_id))).collect()
    };
    let (ou, oi) = (orient(&u), orient(&i));
    assert_eq!(ou.len(), 50);
    for (l, s) in &ou {
        // union: the larger prompt offers more options (superset mask)
        assert!(s.chars().all(|c| l.contains(c)) && l.len() > s.len());
        assert!(oi.contains(&(s.clone(), l.clone())));
    }
}

#[test]
fn pairs_never_cross_sets_and_ids_are_unique() {
    let bank = TemplateBank::default();
    let all = generate_all(&bank, &BuildConfig::default()).unwrap();
    let by_id: HashMap<&str, &gss_core::bench::Prompt> = all.prompts.iter().map(|p| (p.id.as_str(), p)).collect();
    assert_eq!(by_id.len(), all.prompts.len());
    for p in &all.pairs {
        let (l, s) = (by_id[p.larger_id.as_str()], by_id[p.smaller_id.as_str()]);
        assert_eq!(l.set_id, s.set_id);
        assert_eq!(l.dataset, p.dataset);
        assert_ne!(l.text, s.text);
    }
}

#[test]
fn prompt_length_does_not_determine_orientation() {
    // If "longer prompt = larger space" held everywhere, length would be a
    // trivial proxy. Union and intersection push it in opposite directions.
    let bank = TemplateBank::default();
    let all = generate_all(&bank, &BuildConfig::default()).unwrap();
    let share_longer = |d: Dataset| {
        let pairs: Vec<_> = all.pairs.iter().filter(|p| p.dataset == d).collect();
        let longer = pairs
            .iter()
            .filter(|p| all.prompt(&p.larger_id).unwrap().text.len() > all.prompt(&p.smaller_id).unwrap().text.len())
            .count();
        longer as f64 / pairs.len() as f64
    };
    assert!(share_longer(Dataset::Union) > 0.9);
    assert!(share_longer(Dataset::Intersection) < 0.1);
    assert!(share_longer(Dataset::Subset) < 0.1);
}

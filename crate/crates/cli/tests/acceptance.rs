//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p gss-cli --test acceptance`.

mod common;

use std::collections::{HashMap, HashSet};
use std::panic::AssertUnwindSafe;
use std::time::{Duration, Instant};

use common::*;
use gss_core::bench::{enumerate_strict_subset_pairs, generate_dataset, Bench, Dataset, Prompt, PromptPair, TemplateBank};
use gss_core::eval::{evaluate_all, minmax_normalize, pearson_r, binary_threshold_eval, welch_t_test, ScoreTable};
use gss_core::linalg::{logdet_psd, SquareMatrix};
use gss_core::metrics::{
    eigenscore_average, eigenscore_matrix, loo_eigenscore, semantic_entropy, EmbeddingMatrix, EntailmentLabel,
    EntailmentOracle, EntailmentVerdict, LayerStats, LayerWindow, MetricConfig, MetricName, OracleError,
    ResponseSample, SampleSet, SequenceProbMode,
};
use gss_gateway::{write_archive, ArchiveRecord, SamplingParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("generator totals", generator_totals),
        ("lattice enumeration", lattice_enumeration),
        ("eigenscore floor and logdet", eigenscore_floor),
        ("layer-average reduction", layer_average_reduction),
        ("leave-one-out eigenscore", leave_one_out),
        ("normalised LOOE rewards", normalised_rewards),
        ("semantic entropy extremes", semantic_entropy_extremes),
        ("statistics oracles", statistics_oracles),
        ("planted end-to-end run", planted_end_to_end),
        ("accuracy invariance", accuracy_invariance),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(()) => println!("PASS  {name} ({ms} ms)"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({ms} ms): {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn generator_totals() -> Check {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let start = Instant::now();
        let o = gss(dir.path(), &["generate", "--dataset", "all", "--seed", "0", "--out", out]);
        ensure!(code(&o) == 0, "generate failed: {}", stderr(&o));
        let elapsed = start.elapsed();
        ensure!(elapsed < Duration::from_secs(10), "full build took {elapsed:?}");
    }
    let counts = json(&dir.path().join("a/counts.json"));
    let want = [
        ("complement", 500),
        ("factualqa", 500),
        ("random_choice", 500),
        ("subset", 1800),
        ("union", 3000),
        ("intersection", 3000),
    ];
    for (ds, n) in want {
        ensure!(counts[ds]["pairs"] == n, "{ds}: {} pairs, want {n}", counts[ds]["pairs"]);
    }
    let pairs = lines(&dir.path().join("a/pairs.jsonl"));
    ensure!(pairs.len() == 9300, "{} pairs in total", pairs.len());
    for f in ["prompts.jsonl", "pairs.jsonl"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        ensure!(a == b, "{f} differs between seeded runs");
    }
    Ok(())
}

fn lattice_enumeration() -> Check {
    let mut brute = Vec::new();
    for sup in 1u32..16 {
        for sub in 1u32..16 {
            if sub != sup && sub | sup == sup {
                brute.push((sup, sub));
            }
        }
    }
    brute.sort_unstable();
    let got = enumerate_strict_subset_pairs(4);
    ensure!(got.len() == 50, "{} pairs", got.len());
    ensure!(got == brute, "enumeration differs from brute force");

    let bank = TemplateBank::default();
    let masks = |b: &Bench| -> HashSet<(String, String)> {
        let by_id: HashMap<&str, &Prompt> = b.prompts.iter().map(|p| (p.id.as_str(), p)).collect();
        b.pairs
            .iter()
            .map(|p| (by_id[p.larger_id.as_str()].meta["mask"].clone(), by_id[p.smaller_id.as_str()].meta["mask"].clone()))
            .collect()
    };
    let union = masks(&generate_dataset(&bank, Dataset::Union, 1, 4).map_err(|e| e.to_string())?);
    let inter = masks(&generate_dataset(&bank, Dataset::Intersection, 1, 4).map_err(|e| e.to_string())?);
    ensure!(union.len() == 50 && inter.len() == 50, "{} union / {} intersection orientations", union.len(), inter.len());
    for (l, s) in &union {
        ensure!(inter.contains(&(s.clone(), l.clone())), "({l}, {s}) is not reversed for intersection");
    }
    Ok(())
}

fn det_cofactor(m: &[Vec<f64>]) -> f64 {
    if m.len() == 1 {
        return m[0][0];
    }
    (0..m.len())
        .map(|j| {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, v)| *v).collect())
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][j] * det_cofactor(&minor)
        })
        .sum()
}

fn normal_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

fn eigenscore_floor() -> Check {
    let alpha = 1e-3f64;
    for k in [2, 3, 10] {
        let z = EmbeddingMatrix::new(vec![vec![0.7, -2.0, 1.5, 0.0]; k]).unwrap();
        let e = eigenscore_matrix(&z, alpha).map_err(|e| e.to_string())?;
        ensure!(close(e, alpha.ln(), 1e-9), "K={k}: {e} vs ln α = {}", alpha.ln());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..100 {
        let a = normal_rows(&mut rng, 5, 5);
        let m: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| (0..5).map(|k| a[i][k] * a[j][k]).sum::<f64>() + if i == j { 0.05 } else { 0.0 }).collect())
            .collect();
        let want = det_cofactor(&m).ln();
        let got = logdet_psd(&SquareMatrix::from_rows(&m).unwrap()).map_err(|e| e.to_string())?;
        ensure!(close(got, want, 1e-8 * want.abs().max(1.0)), "matrix {trial}: {got} vs {want}");
    }
    Ok(())
}

/// `layers[l][i]` is the hidden-state row of sample `i` at layer `l`.
fn layered_set(layers: &[Vec<Vec<f64>>]) -> SampleSet {
    let k = layers[0].len();
    let samples = (0..k)
        .map(|i| {
            let mut s = ResponseSample::from_logprobs(format!("r{i}"), vec![-0.5]);
            s.layers = layers
                .iter()
                .enumerate()
                .map(|(l, rows)| {
                    let v: Vec<f32> = rows[i].iter().map(|&x| x as f32).collect();
                    LayerStats { layer_index: l as u32, mean_vec: v.clone(), last_vec: v }
                })
                .collect();
            s
        })
        .collect();
    SampleSet::new("p", "m", samples)
}

fn layer_average_reduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let layers: Vec<Vec<Vec<f64>>> = (0..5)
        .map(|_| (0..6).map(|_| (0..4).map(|_| rng.gen_range(-2.0f64..2.0)).map(|x| x as f32 as f64).collect()).collect())
        .collect();
    let set = layered_set(&layers);
    for (l, rows) in layers.iter().enumerate() {
        let cfg = MetricConfig { layer_window: LayerWindow::Absolute { start: l, end: l }, ..Default::default() };
        let avg = eigenscore_average(&set, &cfg).map_err(|e| e.to_string())?;
        let direct = eigenscore_matrix(&EmbeddingMatrix::new(rows.clone()).unwrap(), cfg.alpha).unwrap();
        ensure!(close(avg, direct, 1e-12), "layer {l}: {avg} vs {direct}");
    }

    // One-dimensional rows: the centred Gram matrix is ccᵀ, so
    // det(ccᵀ + αI₃) = α²·(α + |c|²).
    let col = |v: [f64; 3]| v.iter().map(|&x| vec![x]).collect::<Vec<_>>();
    let set = layered_set(&[col([5.0, 5.0, 5.0]), col([1.0, 2.0, 6.0]), col([-1.0, 1.0, 0.0])]);
    let a = 1e-3f64;
    let score_1d = |v: [f64; 3]| {
        let m = v.iter().sum::<f64>() / 3.0;
        let norm2: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
        (2.0 * a.ln() + (a + norm2).ln()) / 3.0
    };
    let want = (score_1d([1.0, 2.0, 6.0]) + score_1d([-1.0, 1.0, 0.0])) / 2.0;
    let cfg = MetricConfig { layer_window: LayerWindow::Absolute { start: 1, end: 2 }, ..Default::default() };
    let got = eigenscore_average(&set, &cfg).map_err(|e| e.to_string())?;
    ensure!(close(got, want, 1e-9), "hand fixture: {got} vs {want}");
    Ok(())
}

/// Direct eigenscore by cofactor expansion, in whichever of the K×K or d×d
/// forms is smaller (they share all eigenvalues except K−d copies of α).
fn eigenscore_oracle(rows: &[Vec<f64>], alpha: f64) -> f64 {
    let (k, d) = (rows.len(), rows[0].len());
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / k as f64).collect();
    let c: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let reg = |n: usize, f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| f(i, j) + if i == j { alpha } else { 0.0 }).collect()).collect()
    };
    if d < k {
        let m = reg(d, &|a, b| c.iter().map(|r| r[a] * r[b]).sum());
        ((k - d) as f64 * alpha.ln() + det_cofactor(&m).ln()) / k as f64
    } else {
        let g = reg(k, &|i, j| c[i].iter().zip(&c[j]).map(|(a, b)| a * b).sum());
        det_cofactor(&g).ln() / k as f64
    }
}

fn leave_one_out() -> Check {
    let alpha = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 3..=6 {
        for d in 1..=4 {
            for _ in 0..4 {
                let rows = normal_rows(&mut rng, k, d);
                let got = loo_eigenscore(&EmbeddingMatrix::new(rows.clone()).unwrap(), alpha).map_err(|e| e.to_string())?;
                let global = eigenscore_oracle(&rows, alpha);
                for (i, g) in got.iter().enumerate() {
                    let rest: Vec<Vec<f64>> =
                        rows.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, r)| r.clone()).collect();
                    let want = global - eigenscore_oracle(&rest, alpha);
                    ensure!(close(*g, want, 1e-9), "K={k} d={d} row {i}: {g} vs {want}");
                }
            }
        }
    }
    let z = EmbeddingMatrix::new(vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let loo = loo_eigenscore(&z, alpha).map_err(|e| e.to_string())?;
    ensure!(loo[0] <= loo[2] && loo[1] <= loo[2], "duplicate rows {loo:?} vs outlier");
    Ok(())
}

fn normalised_rewards() -> Check {
    let want = [0.23, 1.00, 0.00];
    let lib = minmax_normalize(&[-0.026, -0.016, -0.029]);
    for (g, w) in lib.iter().zip(want) {
        ensure!(close(*g, w, 0.01), "library: {lib:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let o = gss(dir.path(), &["loo", "--values=-0.026,-0.016,-0.029", "--out", "l"]);
    ensure!(code(&o) == 0, "gss loo failed: {}", stderr(&o));
    let row = &lines(&dir.path().join("l/loo.jsonl"))[0];
    let cli: Vec<f64> = row["entries"].as_array().unwrap().iter().map(|e| e["normalized"].as_f64().unwrap()).collect();
    for (g, w) in cli.iter().zip(want) {
        ensure!(close(*g, w, 0.01), "cli: {cli:?}");
    }
    Ok(())
}

struct Constant(EntailmentLabel);

impl EntailmentOracle for Constant {
    fn entail(&self, _: &str, _: &str) -> Result<EntailmentVerdict, OracleError> {
        Ok(EntailmentVerdict::new(self.0, 1.0))
    }
}

fn semantic_entropy_extremes() -> Check {
    for k in [2usize, 5, 10] {
        let samples = (0..k).map(|i| ResponseSample::from_logprobs(format!("answer {i}"), vec![-0.4, -0.8])).collect();
        let set = SampleSet::new("p", "m", samples);
        for mode in [SequenceProbMode::LengthNormalized, SequenceProbMode::Raw] {
            let one = semantic_entropy(&set, &Constant(EntailmentLabel::Entail), mode).map_err(|e| e.to_string())?;
            ensure!(close(one, 0.0, 1e-9), "K={k} always-entail: {one}");
            let all = semantic_entropy(&set, &Constant(EntailmentLabel::Neutral), mode).map_err(|e| e.to_string())?;
            ensure!(close(all, (k as f64).ln(), 1e-9), "K={k} never-entail: {all} vs ln K");
        }
    }
    Ok(())
}

/// Two-sided Student-t tail by Simpson's rule in θ with t = √ν·tan θ,
/// where the density is proportional to cos^(ν−1) θ.
fn t_tail_quadrature(t: f64, nu: f64) -> f64 {
    let f = |th: f64| th.cos().powf(nu - 1.0);
    let simpson = |a: f64, b: f64| {
        let n = 10_000;
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
        (f(a) + f(b) + inner) * h / 3.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    simpson((t.abs() / nu.sqrt()).atan(), half_pi) / simpson(0.0, half_pi)
}

fn statistics_oracles() -> Check {
    let r = welch_t_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).map_err(|e| e.to_string())?;
    ensure!(close(r.t_statistic, -3.6742, 1e-4), "t = {}", r.t_statistic);
    ensure!(close(r.degrees_of_freedom, 4.0, 1e-9), "df = {}", r.degrees_of_freedom);
    let p = t_tail_quadrature(r.t_statistic, r.degrees_of_freedom);
    ensure!(close(r.p_value, p, 1e-3), "p = {} vs quadrature {p}", r.p_value);

    let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.7 - 3.0).collect();
    for (slope, want) in [(2.5, 1.0), (-0.3, -1.0)] {
        let y: Vec<f64> = x.iter().map(|v| slope * v + 4.0).collect();
        let c = pearson_r(&x, &y).map_err(|e| e.to_string())?;
        ensure!(close(c.r, want, 1e-12), "r = {} for slope {slope}", c.r);
    }

    let scores = [0.1, 0.3, 0.2, 0.9, 0.7, 0.8];
    let labels = [false, false, false, true, true, true];
    let rep = binary_threshold_eval(&scores, &labels, 0.5).map_err(|e| e.to_string())?;
    ensure!(rep.auc == 1.0, "auc = {}", rep.auc);
    Ok(())
}

/// Longest chain of strictly-smaller prompts below each prompt.
fn gss_rank(prompts: &[serde_json::Value], pairs: &[serde_json::Value]) -> HashMap<String, u32> {
    let mut rank: HashMap<String, u32> =
        prompts.iter().map(|p| (p["id"].as_str().unwrap().to_owned(), 0)).collect();
    // relax until fixed point; the pair graph is acyclic
    loop {
        let mut changed = false;
        for p in pairs {
            let below = rank[p["smaller_id"].as_str().unwrap()] + 1;
            let slot = rank.get_mut(p["larger_id"].as_str().unwrap()).unwrap();
            if *slot < below {
                *slot = below;
                changed = true;
            }
        }
        if !changed {
            return rank;
        }
    }
}

fn planted_end_to_end() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sizes = [
        ("complement", "30"),
        ("factualqa", "30"),
        ("random_choice", "30"),
        ("subset", "3"),
        ("union", "2"),
        ("intersection", "2"),
    ];
    let (mut prompts, mut pairs) = (Vec::new(), Vec::new());
    for (ds, n) in sizes {
        let o = gss(d, &["generate", "--dataset", ds, "--sets", n, "--seed", "5", "--out", ds]);
        ensure!(code(&o) == 0, "generate {ds}: {}", stderr(&o));
        prompts.extend(lines(&d.join(ds).join("prompts.jsonl")));
        pairs.extend(lines(&d.join(ds).join("pairs.jsonl")));
    }
    write_lines(&d.join("pairs.jsonl"), &pairs);
    let rank = gss_rank(&prompts, &pairs);

    let (k, dims, entries) = (10, 16, 8);
    let params = SamplingParams { k: k as u32, model_id: "planted".into(), ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut ids: Vec<&String> = rank.keys().collect();
    ids.sort();
    let records: Vec<ArchiveRecord> = ids
        .into_iter()
        .map(|id| {
            let spread = 1.5f64.powi(rank[id] as i32);
            let centre: Vec<Vec<f64>> = normal_rows(&mut rng, entries, dims);
            let samples = (0..k)
                .map(|i| {
                    let layers = centre
                        .iter()
                        .map(|c| c.iter().map(|m| (m + spread * rng.sample::<f64, _>(StandardNormal)) as f32).collect())
                        .collect();
                    sample(&format!("response {i}"), vec![-0.5, -1.0], layers, None)
                })
                .collect();
            ArchiveRecord::new(id.clone(), params.clone(), samples).unwrap()
        })
        .collect();
    write_archive(&records, &d.join("planted.jsonl.gz")).map_err(|e| e.to_string())?;

    let o = gss(d, &["score", "--archive", "planted.jsonl.gz", "--metrics", "eigenscore_average", "--out", "s"]);
    ensure!(code(&o) == 0, "score: {}", stderr(&o));
    let o = gss(d, &["eval", "--scores", "s/scores.jsonl", "--pairs", "pairs.jsonl", "--out", "e"]);
    ensure!(code(&o) == 0, "eval: {}", stderr(&o));
    let report = &lines(&d.join("e/accuracy.jsonl"))[0];
    let macro_avg = report["macro_average"].as_f64().unwrap();
    ensure!(report["datasets"].as_array().unwrap().len() == 6, "not all datasets evaluated");
    ensure!(macro_avg >= 0.95, "macro accuracy {macro_avg}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(())
}

fn accuracy_invariance() -> Check {
    let bank = TemplateBank::default();
    let mut pairs: Vec<PromptPair> = Vec::new();
    let mut ids = Vec::new();
    for (ds, n) in [(Dataset::Complement, 40), (Dataset::Subset, 2), (Dataset::Union, 1)] {
        let b = generate_dataset(&bank, ds, n, 3).map_err(|e| e.to_string())?;
        ids.extend(b.prompts.into_iter().map(|p| p.id));
        pairs.extend(b.pairs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut table = ScoreTable::default();
    for metric in [MetricName::EigenscoreOutput, MetricName::LexicalSimilarity] {
        for id in &ids {
            // coarse integer grid so ties occur and must survive the transform
            table.insert("m", metric.as_str(), id, rng.gen_range(0..40) as f64);
        }
    }
    let direction = |m: &str| m.parse::<MetricName>().map(MetricName::default_direction).unwrap();
    let base = evaluate_all(&table, &pairs, direction);
    ensure!(base.iter().all(|r| r.datasets.iter().any(|d| d.ties > 0)), "fixture has no ties");
    for t in 0..20 {
        let (a, b, c) = (rng.gen_range(0.1..5.0), rng.gen_range(-10.0..10.0), rng.gen_range(0.01..0.2));
        let f: Box<dyn Fn(f64) -> f64> = match t % 5 {
            0 => Box::new(move |x| a * x + b),
            1 => Box::new(move |x| (c * x).exp() + b),
            2 => Box::new(move |x| (x + a).ln()),
            3 => Box::new(move |x| (x - 20.0 + b).powi(3) + a * x),
            _ => Box::new(move |x| ((x - 20.0) * c).atan() * a),
        };
        let moved = evaluate_all(&table.map_values(f), &pairs, direction);
        ensure!(moved == base, "transform {t} changed a report cell");
    }
    Ok(())
}

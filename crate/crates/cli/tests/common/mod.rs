#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use gss_core::metrics::{LayerStats, ResponseSample};

/// Runs the `gss` binary in `dir` with a clean `GSS_*` environment.
pub fn gss_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gss"));
    cmd.current_dir(dir).args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("GSS_") {
            cmd.env_remove(k);
        }
    }
    cmd.envs(env.iter().copied());
    cmd.output().expect("spawn gss")
}

pub fn gss(dir: &Path, args: &[&str]) -> Output {
    gss_env(dir, args, &[])
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

#[track_caller]
pub fn assert_ok(o: &Output) {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn write_lines(path: &Path, values: &[serde_json::Value]) {
    let text: String = values.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(path, text).unwrap();
}

/// Sample with the given hidden-state rows (used for both mean and last
/// vectors) and optional external embedding.
pub fn sample(text: &str, logprobs: Vec<f64>, layers: Vec<Vec<f32>>, embedding: Option<Vec<f32>>) -> ResponseSample {
    let mut s = ResponseSample::from_logprobs(text, logprobs);
    s.token_logsumexp = s.token_logprobs.iter().map(|lp| 3.0 - lp).collect();
    s.layers = layers
        .into_iter()
        .enumerate()
        .map(|(i, v)| LayerStats { layer_index: i as u32, mean_vec: v.clone(), last_vec: v })
        .collect();
    s.external_embedding = embedding;
    s
}

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use wavecast_core::rng::Rng;

/// Site-file rows whose total is the sum of the powers. The target depends
/// smoothly on the first coordinates so small models have something to learn.
pub fn rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Rng::seed_from(seed);
    (0..n)
        .map(|_| {
            let mut r: Vec<f64> = (0..32).map(|_| rng.uniform_in(0.0, 566.0)).collect();
            let powers: Vec<f64> = (0..16)
                .map(|i| 1e5 + 300.0 * r[2 * i] + 100.0 * r[2 * i + 1] + rng.uniform_in(0.0, 5e3))
                .collect();
            let total: f64 = powers.iter().sum();
            r.extend(powers);
            r.push(total);
            r
        })
        .collect()
}

pub fn write_rows(path: &Path, rows: &[Vec<f64>], header: bool) {
    let mut text = String::new();
    if header {
        let mut names: Vec<String> = (1..=16)
            .flat_map(|i| [format!("X{i}"), format!("Y{i}")])
            .collect();
        names.extend((1..=16).map(|i| format!("Power{i}")));
        names.push("Total_Power".into());
        text.push_str(&names.join(","));
        text.push('\n');
    }
    for r in rows {
        text.push_str(
            &r.iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

/// A config for a model small enough to train in well under a second.
pub fn tiny_config(dir: &Path, data: &Path, model: &str, cv: &str, seed: u64) -> PathBuf {
    let text = format!(
        "model = {model}\nsite = sydney\ndata = {}\nseed = {seed}\nepochs = 3\npatience = 2\ncv = {cv}\noutput = {}\n\
         cnf1 = 2\ncnf2 = 2\ncnf3 = 2\ncnf4 = 2\nnhu1 = 2\nnhu2 = 2\npdo1 = 0.0\npdo2 = 0.0\n\
         batch_size = 16\nlearning_rate = 0.01\nattention_dim = 2\nl2_reg = 0.0\n",
        data.display(),
        dir.join("run").display()
    );
    let path = dir.join(format!("{model}-{cv}-{seed}.cfg"));
    fs::write(&path, text).unwrap();
    path
}

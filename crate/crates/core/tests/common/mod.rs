#![allow(dead_code)]

pub mod oracle;

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use sml::{LabelSet, TrainingSet};

pub type RawRows = Vec<(Vec<f64>, LabelSet)>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Prototype mixture: every label owns a random direction; an instance is the
/// sum of its labels' prototypes plus isotropic noise. Roughly 80% of the
/// instances carry one label and the rest two.
pub fn prototype_rows(n: usize, m: usize, k: usize, noise: f64, seed: u64) -> RawRows {
    let mut r = rng(seed);
    let prototypes: Vec<Vec<f64>> = (0..k).map(|_| gaussian(&mut r, m)).collect();
    (0..n)
        .map(|_| {
            let first = r.gen_range(0..k);
            let mut labels = vec![first as u32 + 1];
            if k > 1 && r.gen_bool(0.2) {
                let mut second = r.gen_range(0..k - 1);
                if second >= first {
                    second += 1;
                }
                labels.push(second as u32 + 1);
            }
            let mut x: Vec<f64> = gaussian(&mut r, m).into_iter().map(|v| v * noise).collect();
            for &l in &labels {
                for (xi, pi) in x.iter_mut().zip(&prototypes[l as usize - 1]) {
                    *xi += pi;
                }
            }
            (x, LabelSet::new(labels))
        })
        .collect()
}

pub fn prototype_dataset(n: usize, m: usize, k: usize, noise: f64, seed: u64) -> TrainingSet {
    TrainingSet::from_raw(prototype_rows(n, m, k, noise, seed), Some(k)).unwrap()
}

/// Random unit vectors with random (possibly empty) label sets.
pub fn random_dataset(n: usize, m: usize, k: usize, seed: u64) -> TrainingSet {
    let mut r = rng(seed);
    let rows = (0..n)
        .map(|_| {
            let x = gaussian(&mut r, m);
            let labels: LabelSet = (1..=k as u32).filter(|_| r.gen_bool(0.4)).collect();
            (x, labels)
        })
        .collect();
    TrainingSet::from_raw(rows, Some(k)).unwrap()
}

/// Tight clusters on a circle whose labels alternate between neighbouring
/// clusters, so only a narrow kernel can tell them apart.
pub fn alternating_clusters(clusters: usize, per_cluster: usize, seed: u64) -> TrainingSet {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    for c in 0..clusters {
        let angle = c as f64 * std::f64::consts::TAU / clusters as f64;
        for _ in 0..per_cluster {
            let jitter = 0.02 * r.sample::<f64, _>(StandardNormal);
            let a = angle + jitter;
            rows.push((vec![a.cos(), a.sin(), 0.05 * r.sample::<f64, _>(StandardNormal)], LabelSet::new([(c % 4) as u32 + 1])));
        }
    }
    TrainingSet::from_raw(rows, Some(4)).unwrap()
}

pub fn svm_text(rows: &[(Vec<f64>, LabelSet)]) -> String {
    let mut out = String::new();
    for (x, y) in rows {
        if y.is_empty() {
            out.push(' ');
        } else {
            let _ = write!(out, "{y}");
        }
        for (i, v) in x.iter().enumerate() {
            if *v != 0.0 {
                let _ = write!(out, " {}:{}", i + 1, v);
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_svm(rows: &[(Vec<f64>, LabelSet)], path: &Path) {
    std::fs::write(path, svm_text(rows)).unwrap();
}

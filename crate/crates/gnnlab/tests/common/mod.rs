//! Helpers shared by the integration-test binaries: a central-difference
//! gradient checker and a synthetic citation-network writer used when the
//! real files are not vendored.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gnnlab::gnn::{loss_and_grad, GnnModel, Targets};
use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Worst relative disagreement between the analytic gradient and a central
/// finite difference of the loss, over every weight and bias coordinate.
///
/// The relative error uses max(|analytic|, |difference|, FLOOR) as the
/// denominator so near-zero coordinates are judged on an absolute scale of
/// FLOOR * tolerance instead of blowing up the ratio.
pub fn max_grad_rel_error(
    model: &GnnModel,
    s: &Array2<f64>,
    x: &Array2<f64>,
    targets: &Targets,
    train_idx: &[usize],
) -> (f64, String) {
    const H: f64 = 1e-5;
    const FLOOR: f64 = 1e-6;

    let (_, grads) = loss_and_grad(model, s, x, targets, train_idx).expect("analytic gradient");
    let loss_at = |m: &GnnModel| loss_and_grad(m, s, x, targets, train_idx).expect("loss").0;

    let mut worst = 0.0f64;
    let mut worst_desc = String::from("no parameters");
    let mut check = |analytic: f64, plus: f64, minus: f64, desc: String| {
        let fd = (plus - minus) / (2.0 * H);
        let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(FLOOR);
        if rel > worst {
            worst = rel;
            worst_desc = format!("{desc}: analytic {analytic:.3e} vs fd {fd:.3e}");
        }
    };

    for (k, w) in model.weights.iter().enumerate() {
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                let mut probe = model.clone();
                probe.weights[k][[i, j]] += H;
                let plus = loss_at(&probe);
                probe.weights[k][[i, j]] -= 2.0 * H;
                let minus = loss_at(&probe);
                check(
                    grads.weights[k][[i, j]],
                    plus,
                    minus,
                    format!("W{}[{i},{j}]", k + 1),
                );
            }
        }
    }
    for (k, b) in model.biases.iter().enumerate() {
        for i in 0..b.len() {
            let mut probe = model.clone();
            probe.biases[k][i] += H;
            let plus = loss_at(&probe);
            probe.biases[k][i] -= 2.0 * H;
            let minus = loss_at(&probe);
            check(grads.biases[k][i], plus, minus, format!("b{}[{i}]", k + 1));
        }
    }
    (worst, worst_desc)
}

/// Size constants of the citation benchmark the loader targets.
pub const CORA_N: usize = 2708;
pub const CORA_D: usize = 1433;
pub const CORA_CLASSES: usize = 7;

/// Write a synthetic citation network in the two-file text layout
/// (`<id> <1433 binary features> <label>` rows and `<cited> <citing>`
/// rows) with the benchmark's exact node / feature / class counts.
///
/// Construction: each class owns a disjoint block of vocabulary words;
/// a paper activates a handful of words from its class block plus a few
/// noise words, and cites a few same-class papers plus occasional
/// cross-class ones. That matches the qualitative structure of the real
/// corpus (homophilous links, class-indicative bags of words) closely
/// enough for a small graph convolution to learn it.
pub fn write_citation_surrogate(dir: &Path) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC17A7104);
    let class_of: Vec<usize> = (0..CORA_N).map(|i| i % CORA_CLASSES).collect();
    let block = CORA_D / CORA_CLASSES; // 204 words per class block

    let mut content = String::with_capacity(CORA_N * (2 * CORA_D + 24));
    for (i, &c) in class_of.iter().enumerate() {
        let mut row = vec![0u8; CORA_D];
        for _ in 0..12 {
            row[c * block + rng.random_range(0..block)] = 1;
        }
        for _ in 0..3 {
            row[rng.random_range(0..CORA_D)] = 1;
        }
        let _ = write!(content, "paper{i}");
        for v in row {
            let _ = write!(content, "\t{v}");
        }
        let _ = writeln!(content, "\ttopic{c}");
    }

    let mut cites = String::new();
    for (i, &c) in class_of.iter().enumerate() {
        for _ in 0..2 {
            // Same-class partner: the class repeats every CORA_CLASSES ids.
            let same = c + CORA_CLASSES * rng.random_range(0..CORA_N / CORA_CLASSES);
            if same != i {
                let _ = writeln!(cites, "paper{same}\tpaper{i}");
            }
        }
        if rng.random_bool(0.15) {
            let other = rng.random_range(0..CORA_N);
            if other != i {
                let _ = writeln!(cites, "paper{other}\tpaper{i}");
            }
        }
    }

    let content_path = dir.join("surrogate.content");
    let cites_path = dir.join("surrogate.cites");
    fs::write(&content_path, content).expect("write content file");
    fs::write(&cites_path, cites).expect("write cites file");
    (content_path, cites_path)
}

/// Paths to the real citation files when they are vendored under
/// `data/cora/` at the workspace root; tests fall back to the surrogate
/// otherwise.
pub fn vendored_citation_files() -> Option<(PathBuf, PathBuf)> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let content = root.join("data/cora/cora.content");
    let cites = root.join("data/cora/cora.cites");
    if content.is_file() && cites.is_file() {
        Some((content, cites))
    } else {
        None
    }
}

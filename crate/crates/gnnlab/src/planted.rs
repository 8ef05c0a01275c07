//! Two-block planted model with controllable graph/feature alignment.
//!
//! Two latent vectors over n nodes drive the data: `z` gives the feature
//! classes, `y` gives the graph communities. Both are balanced +/-1 vectors;
//! their inner product magnitude Gamma = |<y,z>| in [0, n] measures how much
//! the graph agrees with the features. Features are a rank-one signal plus
//! Gaussian noise, X = z mu^T + eps. Edges are Bernoulli with within-block
//! probability p and cross-block probability q (a two-block SBM on `y`).
//!
//! `expected_matrices` exposes the population versions (script-A and
//! script-X in the derivations): E[A] has the exact closed form
//! (p+q)/2 * 11^T + (p-q)/2 * yy^T - p*I with a zero diagonal.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{stream, stream_rng};
use crate::{Error, Result};

/// Parameters of one planted dataset. `mu` is the realized mean vector
/// (length d); the config file layer decides how it is drawn.
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub n: usize,
    pub d: usize,
    /// Within-community edge probability.
    pub p: f64,
    /// Cross-community edge probability, q <= p.
    pub q: f64,
    /// Requested alignment |<y,z>|, in [0, n]. The construction quantizes it
    /// to a multiple of 4 away from n, so the achieved value can differ by
    /// up to 2.
    pub gamma_target: f64,
    pub mu: Array1<f64>,
    /// Feature noise standard deviation.
    pub sigma: f64,
    pub seed: u64,
}

impl PlantedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "n must be even and positive, got {}",
                self.n
            )));
        }
        if self.d == 0 {
            return Err(Error::InvalidConfig("d must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.q) || !(0.0..=1.0).contains(&self.p) || self.q > self.p {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= q <= p <= 1, got p={} q={}",
                self.p, self.q
            )));
        }
        if !(0.0..=self.n as f64).contains(&self.gamma_target) {
            return Err(Error::InvalidConfig(format!(
                "gamma_target must lie in [0, n], got {}",
                self.gamma_target
            )));
        }
        if self.mu.len() != self.d {
            return Err(Error::InvalidConfig(format!(
                "mu has length {}, expected d = {}",
                self.mu.len(),
                self.d
            )));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Latent +/-1 assignments. `z` drives features, `y` drives the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentLabels {
    pub z: Vec<i8>,
    pub y: Vec<i8>,
    /// Achieved |<y,z>|.
    pub gamma_actual: f64,
}

/// Node labels: planted datasets carry both latent vectors, real datasets
/// carry class indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Planted(LatentLabels),
    Classes(Vec<usize>),
}

/// One concrete dataset instance, planted or loaded from files.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Symmetric 0/1 adjacency with zero diagonal, n x n.
    pub adjacency: Array2<f64>,
    /// n x d feature matrix.
    pub features: Array2<f64>,
    pub labels: Labels,
    /// Sorted labeled-node indices, length m < n.
    pub train_idx: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn m(&self) -> usize {
        self.train_idx.len()
    }
}

/// Builds balanced z and y achieving gamma as close to `gamma_target` as the
/// construction allows: |gamma_actual - gamma_target| <= 2.
///
/// z is n/2 ones followed by n/2 minus-ones, permuted by the seed; y starts
/// equal to z and flips t = round((n - gamma_target)/4) seeded choices inside
/// each block, which changes <y,z> by exactly -4t while keeping y balanced.
pub fn make_latent_labels(n: usize, gamma_target: f64, seed: u64) -> Result<LatentLabels> {
    make_latent_labels_with(n, gamma_target, seed, true)
}

/// Same construction with the node permutation optional. Tests disable it to
/// reason about block-ordered labels; production callers always permute so
/// node order carries no class information.
pub fn make_latent_labels_with(
    n: usize,
    gamma_target: f64,
    seed: u64,
    permute: bool,
) -> Result<LatentLabels> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "n must be even and positive, got {n}"
        )));
    }
    if !(0.0..=n as f64).contains(&gamma_target) {
        return Err(Error::InvalidConfig(format!(
            "gamma_target must lie in [0, {n}], got {gamma_target}"
        )));
    }
    let mut rng = stream_rng(seed, stream::LABELS);

    let mut z = vec![1i8; n];
    for v in z.iter_mut().skip(n / 2) {
        *v = -1;
    }
    if permute {
        z.shuffle(&mut rng);
    }

    // t flips per block; each flipped node moves <y,z> down by 2, so 4t total.
    let t = ((n as f64 - gamma_target) / 4.0).round() as usize;
    let mut y = z.clone();
    let mut plus_block: Vec<usize> = (0..n).filter(|&i| z[i] == 1).collect();
    let mut minus_block: Vec<usize> = (0..n).filter(|&i| z[i] == -1).collect();
    plus_block.shuffle(&mut rng);
    minus_block.shuffle(&mut rng);
    for &i in plus_block.iter().take(t) {
        y[i] = -1;
    }
    for &i in minus_block.iter().take(t) {
        y[i] = 1;
    }

    let dot: i64 = z.iter().zip(&y).map(|(&a, &b)| a as i64 * b as i64).sum();
    Ok(LatentLabels {
        z,
        y,
        gamma_actual: dot.abs() as f64,
    })
}

/// X = z mu^T + eps with eps i.i.d. N(0, sigma^2). Deterministic per seed.
pub fn sample_features(config: &PlantedConfig, labels: &LatentLabels) -> Result<Array2<f64>> {
    config.validate()?;
    check_labels(config.n, labels)?;
    let mut rng = stream_rng(config.seed, stream::FEATURES);
    let mut x = Array2::zeros((config.n, config.d));
    for i in 0..config.n {
        let zi = labels.z[i] as f64;
        for j in 0..config.d {
            let eps: f64 = rng.sample(StandardNormal);
            x[[i, j]] = zi * config.mu[j] + config.sigma * eps;
        }
    }
    Ok(x)
}

/// Symmetric 0/1 adjacency with zero diagonal. Each upper-triangle pair is an
/// independent Bernoulli draw with probability p inside a y-community and q
/// across, then mirrored.
pub fn sample_adjacency(config: &PlantedConfig, labels: &LatentLabels) -> Result<Array2<f64>> {
    config.validate()?;
    check_labels(config.n, labels)?;
    let n = config.n;
    let mut rng = stream_rng(config.seed, stream::ADJACENCY);
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if labels.y[i] == labels.y[j] {
                config.p
            } else {
                config.q
            };
            let u: f64 = rng.random();
            if u < prob {
                a[[i, j]] = 1.0;
                a[[j, i]] = 1.0;
            }
        }
    }
    Ok(a)
}

/// Population matrices (E[A], E[X]): script-A = (p+q)/2 * 11^T
/// + (p-q)/2 * yy^T - p*I with the diagonal set exactly to zero, and
/// script-X = z mu^T.
pub fn expected_matrices(
    config: &PlantedConfig,
    labels: &LatentLabels,
) -> Result<(Array2<f64>, Array2<f64>)> {
    config.validate()?;
    check_labels(config.n, labels)?;
    let n = config.n;
    let avg = (config.p + config.q) / 2.0;
    let half_diff = (config.p - config.q) / 2.0;
    let mut ea = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue; // diagonal stays exactly 0
            }
            let yy = (labels.y[i] as f64) * (labels.y[j] as f64);
            ea[[i, j]] = avg + half_diff * yy;
        }
    }
    let mut ex = Array2::zeros((n, config.d));
    for i in 0..n {
        let zi = labels.z[i] as f64;
        for j in 0..config.d {
            ex[[i, j]] = zi * config.mu[j];
        }
    }
    Ok((ea, ex))
}

/// Sorted labeled set: the first m entries of a seeded shuffle of 0..n.
pub fn sample_train_idx(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m == 0 || m >= n {
        return Err(Error::InvalidConfig(format!(
            "train set size must satisfy 0 < m < n, got m={m} n={n}"
        )));
    }
    let mut rng = stream_rng(seed, stream::TRAIN_SPLIT);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    idx.truncate(m);
    idx.sort_unstable();
    Ok(idx)
}

/// Full planted dataset: labels, features, adjacency, and an m-node split.
pub fn generate_dataset(config: &PlantedConfig, m: usize) -> Result<Dataset> {
    config.validate()?;
    let labels = make_latent_labels(config.n, config.gamma_target, config.seed)?;
    let features = sample_features(config, &labels)?;
    let adjacency = sample_adjacency(config, &labels)?;
    let train_idx = sample_train_idx(config.n, m, config.seed)?;
    Ok(Dataset {
        adjacency,
        features,
        labels: Labels::Planted(labels),
        train_idx,
        num_classes: 2,
    })
}

fn check_labels(n: usize, labels: &LatentLabels) -> Result<()> {
    if labels.z.len() != n || labels.y.len() != n {
        return Err(Error::InvalidInput(format!(
            "labels have length {}/{}, expected n = {n}",
            labels.z.len(),
            labels.y.len()
        )));
    }
    Ok(())
}

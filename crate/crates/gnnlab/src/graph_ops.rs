//! Diffusion operators and the matrix quantities the bounds consume.
//!
//! Everything is dense `f64`; the intended scale is a few thousand nodes.
//! Two norm conventions deserve attention:
//!
//! * `inf_norm` is the operator infinity norm, max absolute row sum.
//! * `max_col_two_norm` is what the derivations call the 2->infinity norm:
//!   the maximum **column** Euclidean norm. This is the transpose of the
//!   textbook 2->infinity norm (which maxes over rows). All bound formulas
//!   in this crate expect the column version; do not "fix" it.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::{stream, stream_rng};
use crate::{Error, Result};

/// Graph diffusion choices for the layer map g -> phi(b + S g W).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionOperator {
    /// S = A + I.
    SelfLoop,
    /// S = (D+I)^{-1/2} (A+I) (D+I)^{-1/2}, degrees taken from A alone.
    DegreeNormalized,
    /// S = I: ignores the graph.
    Identity,
}

impl DiffusionOperator {
    pub fn name(self) -> &'static str {
        match self {
            DiffusionOperator::SelfLoop => "self-loop",
            DiffusionOperator::DegreeNormalized => "degree-normalized",
            DiffusionOperator::Identity => "identity",
        }
    }
}

/// Validates that `a` is a square symmetric 0/1 matrix with zero diagonal and
/// builds the chosen diffusion operator.
pub fn build_diffusion(a: &Array2<f64>, kind: DiffusionOperator) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "adjacency must be square, got {}x{}",
            n,
            a.ncols()
        )));
    }
    for i in 0..n {
        if a[[i, i]] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "adjacency has nonzero diagonal at {i}"
            )));
        }
        for j in 0..n {
            let v = a[[i, j]];
            if v != 0.0 && v != 1.0 {
                return Err(Error::InvalidInput(format!(
                    "adjacency entry ({i},{j}) = {v} is not 0/1"
                )));
            }
            if v != a[[j, i]] {
                return Err(Error::InvalidInput(format!(
                    "adjacency not symmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(diffusion_matrix(a, kind))
}

/// The diffusion formula applied to an arbitrary symmetric nonnegative
/// matrix. Used for population adjacencies (E[A] is not 0/1); sampled graphs
/// go through [`build_diffusion`], which validates first.
pub fn diffusion_matrix(a: &Array2<f64>, kind: DiffusionOperator) -> Array2<f64> {
    let n = a.nrows();
    match kind {
        DiffusionOperator::Identity => Array2::eye(n),
        DiffusionOperator::SelfLoop => {
            let mut s = a.clone();
            for i in 0..n {
                s[[i, i]] += 1.0;
            }
            s
        }
        DiffusionOperator::DegreeNormalized => {
            let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
            let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / (d + 1.0).sqrt()).collect();
            let mut s = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    let aij = a[[i, j]] + if i == j { 1.0 } else { 0.0 };
                    if aij != 0.0 {
                        s[[i, j]] = inv_sqrt[i] * aij * inv_sqrt[j];
                    }
                }
            }
            s
        }
    }
}

/// Max absolute row sum (operator infinity norm).
pub fn inf_norm(m: &Array2<f64>) -> f64 {
    let mut best = 0.0f64;
    for row in m.rows() {
        let s: f64 = row.iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// Maximum column Euclidean norm - the "2->infinity" norm in this crate's
/// column convention (see module docs).
pub fn max_col_two_norm(m: &Array2<f64>) -> f64 {
    let mut best = 0.0f64;
    for col in m.columns() {
        let s: f64 = col.iter().map(|v| v * v).sum();
        best = best.max(s);
    }
    best.sqrt()
}

pub fn frobenius_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest singular value via power iteration on M^T M (as two mat-vec
/// products per step; the Gram matrix is never materialized).
///
/// Convergence is a relative change of at most `tol` between successive
/// estimates. Failure to converge within `max_iter` returns
/// [`Error::NonConvergence`] carrying the last estimate.
pub fn spectral_norm(m: &Array2<f64>, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol must be positive, got {tol}")));
    }
    if frobenius_norm(m) == 0.0 {
        return Ok(0.0);
    }
    // Deterministic start vector; the seed is fixed so spectral_norm is a
    // pure function of its arguments.
    let mut rng = stream_rng(0, stream::POWER_ITER);
    let ncols = m.ncols();
    let mut v = Array1::from_iter((0..ncols).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.mapv_inplace(|x| x / vnorm);

    let mut prev = f64::NAN;
    for it in 0..max_iter {
        let w = m.dot(&v); // M v
        let sigma = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if sigma == 0.0 {
            // v fell exactly into the null space; perturb and continue.
            v = Array1::from_iter((0..ncols).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let n2 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.mapv_inplace(|x| x / n2);
            continue;
        }
        if prev.is_finite() && (sigma - prev).abs() <= tol * sigma {
            return Ok(sigma);
        }
        prev = sigma;
        let u = m.t().dot(&w); // M^T (M v)
        let unorm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if unorm == 0.0 {
            return Err(Error::NonConvergence {
                iterations: it + 1,
                last_estimate: sigma,
                residual: f64::NAN,
            });
        }
        v = u / unorm;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_estimate: prev,
        residual: f64::NAN,
    })
}

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
pub const DEFAULT_SPECTRAL_MAX_ITER: usize = 10_000;
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-10;

/// All singular values of M, descending, by one-sided Jacobi: plane
/// rotations orthogonalize the columns, whose final norms are the singular
/// values. Chosen over a Gram-matrix eigensolve because it preserves the
/// relative accuracy of *small* singular values, which is exactly what a
/// rank threshold looks at. Cubic; fine up to a couple thousand rows.
pub fn singular_values(m: &Array2<f64>) -> Result<Vec<f64>> {
    // Work on the side with fewer columns; the spectrum is the same.
    let mut b = if m.ncols() <= m.nrows() {
        m.clone()
    } else {
        m.t().to_owned()
    };
    let (rows, cols) = (b.nrows(), b.ncols());
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidInput("singular values of an empty matrix".into()));
    }
    let eps = 1e-14;
    // Columns whose squared norm falls below this are numerically zero;
    // rotating them against each other only churns rounding noise.
    let frob2: f64 = b.iter().map(|v| v * v).sum();
    let zero2 = frob2 * 1e-30;
    let max_sweeps = 60;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let mut aii = 0.0;
                let mut ajj = 0.0;
                let mut aij = 0.0;
                for r in 0..rows {
                    let bi = b[[r, i]];
                    let bj = b[[r, j]];
                    aii += bi * bi;
                    ajj += bj * bj;
                    aij += bi * bj;
                }
                if aii <= zero2 || ajj <= zero2 || aij.abs() <= eps * (aii * ajj).sqrt() {
                    continue;
                }
                let theta = (ajj - aii) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..rows {
                    let bi = b[[r, i]];
                    let bj = b[[r, j]];
                    b[[r, i]] = c * bi - s * bj;
                    b[[r, j]] = s * bi + c * bj;
                }
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: max_sweeps,
            last_estimate: f64::NAN,
            residual: f64::NAN,
        });
    }
    let mut svs: Vec<f64> = (0..cols)
        .map(|j| b.column(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    svs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(svs)
}

/// Count of singular values exceeding `rel_tol` times the largest.
pub fn numerical_rank(m: &Array2<f64>, rel_tol: f64) -> Result<usize> {
    if !(rel_tol >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "rel_tol must be nonnegative, got {rel_tol}"
        )));
    }
    let svs = singular_values(m)?;
    let top = svs[0];
    if top == 0.0 {
        return Ok(0);
    }
    Ok(svs.iter().filter(|&&s| s > rel_tol * top).count())
}

/// True when M provably has rank at least `k`: Gaussian elimination with
/// partial pivoting finds `k` pivots above `rel_tol` times the largest
/// initial pivot. Much cheaper than [`numerical_rank`] when only a capped
/// rank is needed (the VC cap is min{rank, hidden width}, and hidden widths
/// are tiny); sweeps use this to avoid a cubic eigensolve per cell.
pub fn rank_at_least(m: &Array2<f64>, k: usize, rel_tol: f64) -> bool {
    if k == 0 {
        return true;
    }
    let (rows, cols) = (m.nrows(), m.ncols());
    if k > rows.min(cols) {
        return false;
    }
    let mut a = m.clone();
    let mut scale = 0.0f64;
    for v in a.iter() {
        scale = scale.max(v.abs());
    }
    if scale == 0.0 {
        return false;
    }
    let threshold = rel_tol * scale;
    let mut found = 0;
    let mut row = 0;
    for col in 0..cols {
        if row >= rows || found >= k {
            break;
        }
        let mut pivot_row = row;
        let mut pivot_val = a[[row, col]].abs();
        for r in (row + 1)..rows {
            let v = a[[r, col]].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val <= threshold {
            continue;
        }
        if pivot_row != row {
            for c in col..cols {
                let tmp = a[[row, c]];
                a[[row, c]] = a[[pivot_row, c]];
                a[[pivot_row, c]] = tmp;
            }
        }
        for r in (row + 1)..rows {
            let factor = a[[r, col]] / a[[row, col]];
            if factor != 0.0 {
                for c in col..cols {
                    a[[r, c]] -= factor * a[[row, c]];
                }
            }
        }
        found += 1;
        row += 1;
    }
    found >= k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

/// Row-sum degree statistics of an adjacency matrix.
pub fn degree_stats(a: &Array2<f64>) -> DegreeStats {
    let n = a.nrows();
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    let mut total = 0.0;
    for row in a.rows() {
        let d: f64 = row.sum();
        min = min.min(d);
        max = max.max(d);
        total += d;
    }
    if n == 0 {
        return DegreeStats {
            min: 0.0,
            max: 0.0,
            mean: 0.0,
        };
    }
    DegreeStats {
        min,
        max,
        mean: total / n as f64,
    }
}

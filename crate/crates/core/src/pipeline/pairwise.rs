use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compare_prepared, prepare, resolve_embedding, ComparisonConfig, PreparedSeries};
use crate::embedding::TimeSeries;
use crate::error::{Error, Result};

/// An entry that could not be computed, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingEntry {
    pub i: usize,
    pub j: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    pub values: DMatrix<f64>,
    /// Pairs whose comparison failed; their entries hold NaN.
    pub missing: Vec<MissingEntry>,
}

impl DistanceMatrix {
    /// Builds a matrix from explicit values, checking symmetry, a zero
    /// diagonal and non-negativity.
    pub fn new(labels: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if values.shape() != (n, n) {
            return Err(crate::error::shape_mismatch((n, n), values.shape()));
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if !(a >= 0.0 && b >= 0.0) {
                    return Err(Error::InvalidArgument(format!("entry ({i}, {j}) is negative or NaN")));
                }
                if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                    return Err(Error::InvalidArgument(format!("entry ({i}, {j}) is not symmetric")));
                }
            }
        }
        Ok(Self {
            labels,
            values,
            missing: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Compares every unordered pair in both directions and averages.
///
/// `labels` defaults to the series index when `None`. A failed pair is
/// recorded in `missing` and leaves NaN in its entries.
pub fn pairwise_distances(
    runs: &[TimeSeries],
    labels: Option<Vec<String>>,
    config: &ComparisonConfig,
) -> Result<DistanceMatrix> {
    let n = runs.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 series, got {n}")));
    }
    let labels = match labels {
        Some(l) if l.len() != n => return Err(Error::InvalidArgument(format!("{} labels for {n} series", l.len()))),
        Some(l) => l,
        None => (0..n).map(|i| i.to_string()).collect(),
    };
    config.optimizer.validate()?;
    let params = resolve_embedding(runs, config)?;
    let prepared: Vec<std::result::Result<PreparedSeries, String>> = runs
        .par_iter()
        .map(|s| prepare(s, params, config).map_err(|e| e.to_string()))
        .collect();

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let results: Vec<std::result::Result<f64, String>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y) = match (&prepared[i], &prepared[j]) {
                (Ok(x), Ok(y)) => (x, y),
                (Err(e), _) | (_, Err(e)) => return Err(e.clone()),
            };
            let forward = compare_prepared(x, y, config).map_err(|e| e.to_string())?;
            let backward = compare_prepared(y, x, config).map_err(|e| e.to_string())?;
            Ok(0.5 * (forward.distance(config.metric) + backward.distance(config.metric)))
        })
        .collect();

    let mut values = DMatrix::zeros(n, n);
    let mut missing = Vec::new();
    for (&(i, j), r) in pairs.iter().zip(results) {
        let v = match r {
            Ok(d) => d,
            Err(reason) => {
                missing.push(MissingEntry { i, j, reason });
                f64::NAN
            }
        };
        values[(i, j)] = v;
        values[(j, i)] = v;
    }
    Ok(DistanceMatrix {
        labels,
        values,
        missing,
    })
}

/// Classical MDS: double-centred squared distances, top `dims` eigenpairs,
/// negative eigenvalues clipped to zero. Returns an `n x dims` matrix.
pub fn mds_embed(dm: &DistanceMatrix, dims: usize) -> Result<DMatrix<f64>> {
    if dims == 0 {
        return Err(Error::InvalidArgument("dims must be positive".into()));
    }
    if !dm.is_complete() || dm.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("distance matrix is incomplete".into()));
    }
    let n = dm.len();
    if n == 0 {
        return Err(Error::InvalidArgument("distance matrix is empty".into()));
    }
    let d2 = dm.values.map(|v| v * v);
    let row_mean: Vec<f64> = (0..n).map(|i| d2.row(i).mean()).collect();
    let grand = d2.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_mean[i] - row_mean[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut out = DMatrix::zeros(n, dims);
    for (k, &idx) in order.iter().take(dims).enumerate() {
        let scale = eig.eigenvalues[idx].max(0.0).sqrt();
        for i in 0..n {
            out[(i, k)] = eig.eigenvectors[(i, idx)] * scale;
        }
    }
    Ok(out)
}

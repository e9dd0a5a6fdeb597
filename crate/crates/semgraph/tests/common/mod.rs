//! Shared generators for integration tests: synthetic datasets whose true
//! graph is known.

use ndarray::Array2;
use semgraph::matrix::{spectral_norm, AdjacencyMatrix, ForbiddenMask, GraphSignalMatrix, RandomSource};

/// Random symmetric hollow ground-truth graph: each pair carries an edge
/// with probability `density`, weights uniform in [0.4, 1.0] with random
/// sign, then the whole matrix is rescaled to the target spectral radius.
pub fn sem_ground_truth(n: usize, density: f64, target_radius: f64, seed: u64) -> AdjacencyMatrix {
    let mut rs = RandomSource::new(seed);
    let mut w = Array2::<f64>::zeros((n, n));
    let mut edges = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if rs.next_uniform() < density {
                let magnitude = 0.4 + 0.6 * rs.next_uniform();
                let sign = if rs.next_uniform() < 0.5 { -1.0 } else { 1.0 };
                w[[i, j]] = sign * magnitude;
                w[[j, i]] = w[[i, j]];
                edges += 1;
            }
        }
    }
    if edges == 0 {
        w[[0, 1]] = 0.5;
        w[[1, 0]] = 0.5;
    }
    // For symmetric matrices the spectral radius equals the largest
    // singular value.
    let radius = spectral_norm(&w, 1e-10).expect("finite weights");
    let scale = target_radius / radius;
    AdjacencyMatrix::from_weights(w.mapv(|v| v * scale), ForbiddenMask::empty()).expect("valid")
}

/// Observations from the autoregressive model `X = A X + W` with unit
/// Gaussian exogenous input: `X = (I - A)^{-1} W`, evaluated by the Neumann
/// series (valid because the spectral radius is below one; 60 terms leave a
/// truncation error around 1e-18 at radius 0.5).
pub fn sem_observations(
    a_true: &AdjacencyMatrix,
    m: usize,
    outputs: Vec<usize>,
    seed: u64,
) -> GraphSignalMatrix {
    let n = a_true.n();
    let mut rs = RandomSource::new(seed);
    let w = Array2::from_shape_fn((n, m), |_| rs.next_standard_normal());
    let mut x = w.clone();
    for _ in 0..60 {
        x = &w + &a_true.weights().dot(&x);
    }
    GraphSignalMatrix::with_numbered_names(x, outputs).expect("valid dataset")
}

/// F1 score of a recovered edge set against the truth.
pub fn support_f1(found: &[(usize, usize, f64)], truth: &[(usize, usize, f64)]) -> f64 {
    let truth_pairs: std::collections::BTreeSet<(usize, usize)> =
        truth.iter().map(|&(i, j, _)| (i, j)).collect();
    let found_pairs: std::collections::BTreeSet<(usize, usize)> =
        found.iter().map(|&(i, j, _)| (i, j)).collect();
    let tp = found_pairs.intersection(&truth_pairs).count() as f64;
    let fp = (found_pairs.len() as f64) - tp;
    let fn_ = (truth_pairs.len() as f64) - tp;
    if tp == 0.0 {
        return 0.0;
    }
    2.0 * tp / (2.0 * tp + fp + fn_)
}

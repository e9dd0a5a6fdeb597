//! Regularization-path sweeps over the graph learner.
//!
//! A sweep solves the fitting problem once per grid value of lambda
//! (warm-started downward by default), recording link counts and normalized
//! errors. One sweep per mask setting serves two reporting scenarios: the
//! learned graphs depend only on the mask, while the reported error may
//! cover all rows or just the output rows. The four standard scenarios are
//! the combinations (interlink allowed x error rows):
//!
//! | scenario | output interlink | error rows  |
//! |----------|------------------|-------------|
//! | 1        | allowed          | all         |
//! | 2        | forbidden        | all         |
//! | 3        | allowed          | outputs     |
//! | 4        | forbidden        | outputs     |

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elbow::{build_curve, CurveSample, ErrorCurve};
use crate::matrix::{AdjacencyMatrix, ForbiddenMask, GraphSignalMatrix};
use crate::sem::{edge_set, solve_in_context, SemContext, SemProblem, SolveOptions};
use crate::{Error, Result};

/// Which rows enter the reported normalized error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorRows {
    AllRows,
    OutputRowsOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub allow_output_interlink: bool,
    pub error_rows: ErrorRows,
}

impl ScenarioConfig {
    /// The standard numbering (see module docs).
    pub fn numbered(k: usize) -> Result<Self> {
        let sc = match k {
            1 => Self {
                allow_output_interlink: true,
                error_rows: ErrorRows::AllRows,
            },
            2 => Self {
                allow_output_interlink: false,
                error_rows: ErrorRows::AllRows,
            },
            3 => Self {
                allow_output_interlink: true,
                error_rows: ErrorRows::OutputRowsOnly,
            },
            4 => Self {
                allow_output_interlink: false,
                error_rows: ErrorRows::OutputRowsOnly,
            },
            other => {
                return Err(Error::InvalidInput(format!(
                    "scenario must be 1..=4, got {other}"
                )))
            }
        };
        Ok(sc)
    }

    pub fn number(&self) -> usize {
        match (self.allow_output_interlink, self.error_rows) {
            (true, ErrorRows::AllRows) => 1,
            (false, ErrorRows::AllRows) => 2,
            (true, ErrorRows::OutputRowsOnly) => 3,
            (false, ErrorRows::OutputRowsOnly) => 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    /// Warm-start each solve from the previous grid point (sequential).
    /// Cold mode solves grid points independently, in parallel.
    pub warm: bool,
    /// Link-count threshold on |weight|.
    pub eps: f64,
    /// Keep every fitted adjacency matrix (memory-heavy; off by default,
    /// graphs at interesting lambdas are re-solved on demand).
    pub keep_adjacency: bool,
    pub solve: SolveOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            warm: true,
            eps: 1e-9,
            keep_adjacency: false,
            solve: SolveOptions::default(),
        }
    }
}

/// Per-lambda outcome of a sweep.
#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub lambda: f64,
    pub link_count: usize,
    pub nmse_all: f64,
    pub nmse_outputs: Option<f64>,
    pub kkt_violation: f64,
    pub iterations: usize,
    pub converged: bool,
    pub adjacency: Option<AdjacencyMatrix>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// Records in grid order (descending lambda).
    pub records: Vec<SweepRecord>,
    pub grid: Vec<f64>,
    pub mask: ForbiddenMask,
}

/// Geometric lambda grid: `points` values from `lambda_max` down to
/// `lambda_max * min_ratio` inclusive, with 0 appended; strictly decreasing.
pub fn make_grid(lambda_max: f64, points: usize, min_ratio: f64) -> Result<Vec<f64>> {
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda_max must be finite and > 0, got {lambda_max}"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 grid points, got {points}"
        )));
    }
    if !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(Error::InvalidInput(format!(
            "min_ratio must be in (0, 1), got {min_ratio}"
        )));
    }
    let mut grid = Vec::with_capacity(points + 1);
    for k in 0..points {
        let v = if k == 0 {
            lambda_max
        } else if k == points - 1 {
            lambda_max * min_ratio
        } else {
            lambda_max * min_ratio.powf(k as f64 / (points - 1) as f64)
        };
        grid.push(v);
    }
    grid.push(0.0);
    if !grid.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput(
            "grid collapsed: points too dense for this min_ratio".into(),
        ));
    }
    Ok(grid)
}

/// Runs the solver across a strictly decreasing lambda grid.
///
/// Solver failures at single grid points are recorded (`converged = false`,
/// best iterate used) instead of aborting the sweep.
pub fn sweep(
    x: &GraphSignalMatrix,
    sc: &ScenarioConfig,
    grid: &[f64],
    opts: &SweepOptions,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    if !grid.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("grid must be strictly decreasing".into()));
    }
    if grid.iter().any(|&l| !l.is_finite() || l < 0.0) {
        return Err(Error::InvalidInput("grid values must be finite and >= 0".into()));
    }
    let mask = if sc.allow_output_interlink {
        ForbiddenMask::empty()
    } else {
        if x.output_nodes().len() < 2 {
            return Err(Error::InvalidInput(
                "forbidding the output interlink needs at least two output nodes".into(),
            ));
        }
        ForbiddenMask::output_interlinks(x.output_nodes())
    };
    let x_fro = x.fro_norm_sq();
    if x_fro == 0.0 {
        return Err(Error::InvalidInput("all-zero observation matrix".into()));
    }
    let out_fro = x.output_fro_norm_sq();
    let ctx = SemContext::new(x)?;

    let record_of = |lambda: f64,
                     warm: Option<AdjacencyMatrix>|
     -> Result<(SweepRecord, AdjacencyMatrix)> {
        let mut p = SemProblem::new(x, lambda).with_mask(mask.clone());
        if let Some(w) = warm {
            p = p.with_warm_start(w);
        }
        let (sol, converged) = match solve_in_context(&p, &ctx, &opts.solve) {
            Ok(sol) => (sol, true),
            Err(Error::SemNonConvergence { best, .. }) => (*best, false),
            Err(other) => return Err(other),
        };
        let nmse_outputs = if x.output_nodes().is_empty() || out_fro == 0.0 {
            None
        } else {
            let out_err: f64 = x
                .output_nodes()
                .iter()
                .map(|&i| sol.residual.row(i).iter().map(|v| v * v).sum::<f64>())
                .sum();
            Some(out_err / out_fro)
        };
        let record = SweepRecord {
            lambda,
            link_count: edge_set(&sol.a_hat, opts.eps).len(),
            nmse_all: sol.fit_error / x_fro,
            nmse_outputs,
            kkt_violation: sol.kkt_violation,
            iterations: sol.iterations,
            converged,
            adjacency: opts.keep_adjacency.then(|| sol.a_hat.clone()),
        };
        Ok((record, sol.a_hat))
    };

    let records: Vec<SweepRecord> = if opts.warm {
        let mut acc = Vec::with_capacity(grid.len());
        let mut carry: Option<AdjacencyMatrix> = None;
        for &lambda in grid {
            let (rec, a_hat) = record_of(lambda, carry.take())?;
            carry = Some(a_hat);
            acc.push(rec);
        }
        acc
    } else {
        grid.par_iter()
            .map(|&lambda| record_of(lambda, None).map(|(rec, _)| rec))
            .collect::<Result<Vec<_>>>()?
    };

    Ok(SweepResult {
        records,
        grid: grid.to_vec(),
        mask,
    })
}

/// Builds the error curve for one reporting scenario from sweep records:
/// z is the link count, v the selected normalized error, and each sample
/// keeps its lambda. Dedup and the vertical shift happen in `build_curve`.
pub fn curve_for(sr: &SweepResult, sc: &ScenarioConfig) -> Result<ErrorCurve> {
    if sr.records.is_empty() {
        return Err(Error::InvalidInput("empty sweep".into()));
    }
    let mut samples = Vec::with_capacity(sr.records.len());
    for r in &sr.records {
        let v = match sc.error_rows {
            ErrorRows::AllRows => r.nmse_all,
            ErrorRows::OutputRowsOnly => r.nmse_outputs.ok_or_else(|| {
                Error::InvalidInput("sweep has no output-row errors".into())
            })?,
        };
        samples.push(CurveSample::with_lambda(r.link_count as f64, v, r.lambda));
    }
    build_curve(&samples)
}

//! L1-regularized least squares for the synthetic selection experiment.
//!
//! Minimizes `||y - beta X||^2 + lambda ||beta||_1` where `X` is R x N with
//! input vectors as columns, using cyclic coordinate descent in covariance
//! form: `X X^T` (R x R) and `X y` are computed once, so each coordinate
//! update costs O(R) regardless of N. Updates soft-threshold, so inactive
//! coefficients are exact zeros. No intercept and no standardization; the
//! penalty multiplies the unscaled squared error.

use ndarray::{Array1, Array2};

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct LassoProblem<'a> {
    /// R x N input matrix; column i is the i-th input vector.
    pub x: &'a Array2<f64>,
    /// Length-N output vector.
    pub y: &'a Array1<f64>,
    pub lambda: f64,
}

impl<'a> LassoProblem<'a> {
    pub fn new(x: &'a Array2<f64>, y: &'a Array1<f64>, lambda: f64) -> Self {
        Self { x, y, lambda }
    }

    fn validate(&self) -> Result<()> {
        if self.x.ncols() != self.y.len() {
            return Err(Error::InvalidInput(format!(
                "x has {} columns but y has {} entries",
                self.x.ncols(),
                self.y.len()
            )));
        }
        if !self.x.iter().all(|v| v.is_finite()) || !self.y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("lasso data".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidInput(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Fitted coefficients with the recomputed residual error and the exact
/// support (indices with nonzero coefficients).
#[derive(Clone, Debug)]
pub struct LassoSolution {
    pub beta: Array1<f64>,
    pub mse: f64,
    pub support: Vec<usize>,
    pub iterations: usize,
    pub kkt_violation: f64,
}

impl LassoSolution {
    pub fn objective(&self, lambda: f64) -> f64 {
        self.mse + lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }
}

/// Smallest lambda at which the all-zero coefficient vector is optimal:
/// `2 * max_r |(X y)_r|` by the subgradient condition at zero.
pub fn lambda_max_lasso(x: &Array2<f64>, y: &Array1<f64>) -> f64 {
    let xy = x.dot(y);
    2.0 * xy.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn solve_lasso(p: &LassoProblem, tol: f64, max_iter: usize) -> Result<LassoSolution> {
    solve_lasso_from(p, None, tol, max_iter)
}

/// Coordinate descent from an optional warm start.
pub fn solve_lasso_from(
    p: &LassoProblem,
    warm: Option<&Array1<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<LassoSolution> {
    p.validate()?;
    if tol <= 0.0 || max_iter == 0 {
        return Err(Error::InvalidInput(
            "tol must be > 0 and max_iter >= 1".into(),
        ));
    }
    let r = p.x.nrows();
    let gram = p.x.dot(&p.x.t());
    let xy = p.x.dot(p.y);
    let half_lambda = p.lambda / 2.0;

    let mut beta = match warm {
        Some(b0) if b0.len() == r => b0.clone(),
        Some(b0) => {
            return Err(Error::InvalidInput(format!(
                "warm start has {} coefficients, expected {r}",
                b0.len()
            )))
        }
        None => Array1::zeros(r),
    };
    // q_r = (G beta)_r, kept incrementally.
    let mut q = gram.dot(&beta);

    let mut iterations = 0usize;
    let mut stall = 0usize;
    let mut converged = false;
    for sweep in 1..=max_iter {
        iterations = sweep;
        let mut max_delta = 0.0f64;
        let mut max_beta = 0.0f64;
        for i in 0..r {
            let gii = gram[[i, i]];
            if gii <= 0.0 {
                continue; // zero feature can never help
            }
            let rho = xy[i] - (q[i] - gii * beta[i]);
            let new = soft_threshold(rho, half_lambda) / gii;
            let delta = new - beta[i];
            if delta != 0.0 {
                for k in 0..r {
                    q[k] += gram[[k, i]] * delta;
                }
                beta[i] = new;
            }
            max_delta = max_delta.max(delta.abs());
            max_beta = max_beta.max(beta[i].abs());
        }
        if max_delta <= tol * max_beta.max(1.0) {
            stall += 1;
            if stall >= 2 {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }

    let solution = assemble(p, beta, &gram, &xy, iterations);
    if converged {
        Ok(solution)
    } else {
        Err(Error::LassoNonConvergence {
            best: Box::new(solution),
            iterations,
        })
    }
}

fn assemble(
    p: &LassoProblem,
    beta: Array1<f64>,
    gram: &Array2<f64>,
    xy: &Array1<f64>,
    iterations: usize,
) -> LassoSolution {
    let residual = p.y - &p.x.t().dot(&beta);
    let mse = residual.iter().map(|v| v * v).sum();
    let support: Vec<usize> = beta
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(i, _)| i)
        .collect();
    let q = gram.dot(&beta);
    let mut kkt = 0.0f64;
    for i in 0..beta.len() {
        let c = 2.0 * (xy[i] - q[i]);
        let v = if beta[i] != 0.0 {
            (c - p.lambda * beta[i].signum()).abs()
        } else {
            (c.abs() - p.lambda).max(0.0)
        };
        kkt = kkt.max(v);
    }
    LassoSolution {
        beta,
        mse,
        support,
        iterations,
        kkt_violation: kkt,
    }
}

/// Solves the problem at every grid point, warm-starting each solve from the
/// previous one when `warm` is set. The grid must be strictly monotone
/// (either direction).
pub fn lasso_path(
    x: &Array2<f64>,
    y: &Array1<f64>,
    grid: &[f64],
    warm: bool,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<LassoSolution>> {
    if grid.len() > 1 {
        let increasing = grid.windows(2).all(|w| w[0] < w[1]);
        let decreasing = grid.windows(2).all(|w| w[0] > w[1]);
        if !increasing && !decreasing {
            return Err(Error::InvalidInput(
                "grid must be strictly increasing or strictly decreasing".into(),
            ));
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    let mut prev: Option<Array1<f64>> = None;
    for &lambda in grid {
        let p = LassoProblem::new(x, y, lambda);
        let sol = solve_lasso_from(&p, prev.as_ref(), tol, max_iter)?;
        if warm {
            prev = Some(sol.beta.clone());
        }
        out.push(sol);
    }
    Ok(out)
}

fn soft_threshold(v: f64, thr: f64) -> f64 {
    if v > thr {
        v - thr
    } else if v < -thr {
        v + thr
    } else {
        0.0
    }
}

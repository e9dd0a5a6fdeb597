//! Sparse symmetric graph fitting.
//!
//! Fits the model `X = A X + W` by minimizing
//!
//! ```text
//! || X - A X ||_F^2 + lambda * || A ||_1
//! ```
//!
//! over symmetric matrices with a zero diagonal (and optional forbidden
//! pairs pinned to zero). The constraints are handled by construction: the
//! solver works on the vectorized strict upper triangle, where each free
//! coordinate stands for a mirrored pair of entries. Because `||A||_1`
//! counts both mirrored entries, the per-coordinate penalty is `2 * lambda`
//! and the proximal step soft-thresholds by `2 * lambda * step`, which
//! produces exact zeros — the link-count sweep depends on that.
//!
//! The iteration is a monotone accelerated proximal gradient method with
//! backtracking line search (safe step bound `1 / (4 * sigma_max(X X^T))`)
//! and momentum restarts. Accepted iterates never increase the objective.

use ndarray::Array2;

use crate::matrix::{spectral_norm, AdjacencyMatrix, ForbiddenMask, GraphSignalMatrix};
use crate::{Error, Result};

/// Per-dataset quantities shared by every solve: the Gram matrix
/// `S = X X^T`, its spectral norm (step-size bound), and `||X||_F^2`.
#[derive(Clone, Debug)]
pub struct SemContext {
    s: Array2<f64>,
    x_fro_sq: f64,
    s_spectral: f64,
}

impl SemContext {
    pub fn new(x: &GraphSignalMatrix) -> Result<Self> {
        let s = x.data().dot(&x.data().t());
        let s_spectral = spectral_norm(&s, 1e-10)?;
        Ok(Self {
            s,
            x_fro_sq: x.fro_norm_sq(),
            s_spectral,
        })
    }

    pub fn gram(&self) -> &Array2<f64> {
        &self.s
    }

    pub fn gram_spectral_norm(&self) -> f64 {
        self.s_spectral
    }
}

/// One fitting problem: data, sparsity weight, forbidden pairs, and an
/// optional warm start (which must carry the same mask).
#[derive(Clone, Debug)]
pub struct SemProblem<'a> {
    pub x: &'a GraphSignalMatrix,
    pub lambda: f64,
    pub mask: ForbiddenMask,
    pub warm_start: Option<AdjacencyMatrix>,
}

impl<'a> SemProblem<'a> {
    pub fn new(x: &'a GraphSignalMatrix, lambda: f64) -> Self {
        Self {
            x,
            lambda,
            mask: ForbiddenMask::empty(),
            warm_start: None,
        }
    }

    pub fn with_mask(mut self, mask: ForbiddenMask) -> Self {
        self.mask = mask;
        self
    }

    pub fn with_warm_start(mut self, warm: AdjacencyMatrix) -> Self {
        self.warm_start = Some(warm);
        self
    }
}

/// Solver tuning knobs. `tol` is the relative objective-change threshold,
/// required on two consecutive iterations; `kkt_rel_tol` scales the
/// stationarity certificate that gates acceptance.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub kkt_rel_tol: f64,
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50_000,
            kkt_rel_tol: 1e-6,
            record_history: false,
        }
    }
}

/// A fitted graph plus diagnostics. `objective = fit_error + lambda * ||A||_1`
/// by construction, `residual = X - A X` estimates the exogenous input, and
/// `kkt_violation` is the recorded stationarity certificate (never assumed
/// zero).
#[derive(Clone, Debug)]
pub struct SemSolution {
    pub a_hat: AdjacencyMatrix,
    pub objective: f64,
    pub fit_error: f64,
    pub residual: Array2<f64>,
    pub iterations: usize,
    pub kkt_violation: f64,
    pub objective_history: Option<Vec<f64>>,
}

/// Solves one problem with default certificate settings.
pub fn solve(p: &SemProblem, tol: f64, max_iter: usize) -> Result<SemSolution> {
    let ctx = SemContext::new(p.x)?;
    let opts = SolveOptions {
        tol,
        max_iter,
        ..SolveOptions::default()
    };
    solve_in_context(p, &ctx, &opts)
}

/// Solves one problem against a precomputed [`SemContext`]; sweeps share the
/// context across the whole grid.
pub fn solve_in_context(p: &SemProblem, ctx: &SemContext, opts: &SolveOptions) -> Result<SemSolution> {
    if p.lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "lambda must be >= 0, got {}",
            p.lambda
        )));
    }
    if opts.tol <= 0.0 || opts.max_iter == 0 {
        return Err(Error::InvalidInput(
            "tol must be > 0 and max_iter >= 1".into(),
        ));
    }
    let n = p.x.n();
    let pairs = free_pairs(n, &p.mask);
    let np = pairs.len();
    let s = &ctx.s;
    let two_lambda = 2.0 * p.lambda;

    let mut u = vec![0.0; np];
    if let Some(warm) = &p.warm_start {
        if warm.n() != n {
            return Err(Error::InvalidInput(format!(
                "warm start is {}x{}, data has {} nodes",
                warm.n(),
                warm.n(),
                n
            )));
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            u[k] = warm.weights()[[i, j]];
        }
    }

    let mut a_buf = Array2::<f64>::zeros((n, n));
    let mut smooth = |u: &[f64], grad: Option<&mut Vec<f64>>| -> f64 {
        fill_symmetric(&mut a_buf, u, &pairs);
        let m = a_buf.dot(s);
        let mut tr_as = 0.0;
        for (k, &(i, j)) in pairs.iter().enumerate() {
            tr_as += 2.0 * u[k] * s[[i, j]];
        }
        let inner: f64 = m.iter().zip(a_buf.iter()).map(|(a, b)| a * b).sum();
        if let Some(g) = grad {
            g.clear();
            g.extend(
                pairs
                    .iter()
                    .map(|&(i, j)| 2.0 * (m[[i, j]] + m[[j, i]]) - 4.0 * s[[i, j]]),
            );
        }
        ctx.x_fro_sq - 2.0 * tr_as + inner
    };

    let l_safe = 4.0 * ctx.s_spectral;
    let l_cap = 8.0 * l_safe;
    let mut l = (l_safe / 64.0).max(f64::MIN_POSITIVE);
    let kkt_tol = opts.kkt_rel_tol * ctx.s_spectral;

    let l1 = |u: &[f64]| -> f64 { u.iter().map(|v| v.abs()).sum::<f64>() };

    let mut x_cur = u.clone();
    let mut x_prev = u.clone();
    let mut y = u;
    let mut obj_cur = smooth(&x_cur, None) + two_lambda * l1(&x_cur);
    let obj0 = obj_cur;
    let mut history = if opts.record_history {
        Some(vec![obj_cur])
    } else {
        None
    };

    let mut grad = Vec::with_capacity(np);
    let mut kkt_buf = Array2::<f64>::zeros((n, n));
    let mut t: f64 = 1.0;
    let mut stall = 0usize;
    let mut last_prox_obj = f64::INFINITY;
    let mut iterations = 0usize;
    let mut converged = false;

    for iter in 1..=opts.max_iter {
        iterations = iter;
        let f_y = smooth(&y, Some(&mut grad));

        // Backtracking: grow l until the quadratic model majorizes f at z.
        let mut z;
        let mut f_z;
        loop {
            let step = 1.0 / l;
            z = Vec::with_capacity(np);
            for k in 0..np {
                z.push(soft_threshold(y[k] - step * grad[k], two_lambda * step));
            }
            f_z = smooth(&z, None);
            let mut lin = 0.0;
            let mut sq = 0.0;
            for k in 0..np {
                let d = z[k] - y[k];
                lin += grad[k] * d;
                sq += d * d;
            }
            let q = f_y + lin + 0.5 * l * sq;
            if f_z <= q + 1e-12 * f_y.abs().max(1.0) || l >= l_cap {
                break;
            }
            l *= 2.0;
        }

        let obj_z = f_z + two_lambda * l1(&z);
        let restart = obj_z > last_prox_obj;
        last_prox_obj = obj_z;

        // Monotone accept: keep the previous iterate if the prox point is worse.
        let take_z = obj_z <= obj_cur;
        let prev_obj = obj_cur;
        let new_x: Vec<f64>;
        if take_z {
            new_x = z.clone();
            obj_cur = obj_z;
        } else {
            new_x = x_cur.clone();
        }

        if restart {
            t = 1.0;
            y.copy_from_slice(&new_x);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            for k in 0..np {
                y[k] = new_x[k]
                    + (t / t_next) * (z[k] - new_x[k])
                    + ((t - 1.0) / t_next) * (new_x[k] - x_prev[k]);
            }
            t = t_next;
        }
        x_prev = x_cur;
        x_cur = new_x;
        if let Some(h) = history.as_mut() {
            h.push(obj_cur);
        }

        let denom = obj_cur.abs().max(1e-12 * obj0.abs()).max(f64::MIN_POSITIVE);
        let rel = (prev_obj - obj_cur) / denom;
        if rel < opts.tol {
            stall += 1;
        } else {
            stall = 0;
        }
        if stall >= 2 {
            let kkt = kkt_violation_for(s, &x_cur, &pairs, p.lambda, &mut kkt_buf);
            if kkt <= kkt_tol {
                converged = true;
                break;
            }
        }
    }

    let solution = assemble_solution(p, ctx, &pairs, &x_cur, iterations, history)?;
    if converged {
        Ok(solution)
    } else {
        let kkt_violation = solution.kkt_violation;
        Err(Error::SemNonConvergence {
            best: Box::new(solution),
            iterations,
            kkt_violation,
        })
    }
}

fn assemble_solution(
    p: &SemProblem,
    ctx: &SemContext,
    pairs: &[(usize, usize)],
    u: &[f64],
    iterations: usize,
    history: Option<Vec<f64>>,
) -> Result<SemSolution> {
    let n = p.x.n();
    let mut w = Array2::<f64>::zeros((n, n));
    fill_symmetric(&mut w, u, pairs);
    let a_hat = AdjacencyMatrix::from_weights(w, p.mask.clone())?;
    let residual = p.x.data() - &a_hat.weights().dot(p.x.data());
    let fit_error: f64 = residual.iter().map(|v| v * v).sum();
    let objective = fit_error + p.lambda * a_hat.l1_norm();
    let mut a_buf = Array2::<f64>::zeros((n, n));
    let kkt_violation = kkt_violation_for(&ctx.s, u, pairs, p.lambda, &mut a_buf);
    Ok(SemSolution {
        a_hat,
        objective,
        fit_error,
        residual,
        iterations,
        kkt_violation,
        objective_history: history,
    })
}

/// Smallest `lambda` at which the empty graph is optimal.
///
/// Stationarity of the zero matrix under the shared-pair parametrization
/// requires `|4 S_ij| <= 2 lambda` for every free pair, hence
/// `lambda_max = 2 * max |S_ij|` over unmasked pairs `i < j`.
pub fn lambda_max(x: &GraphSignalMatrix, mask: &ForbiddenMask) -> f64 {
    let s = x.data().dot(&x.data().t());
    lambda_max_from_gram(&s, mask)
}

pub fn lambda_max_from_gram(s: &Array2<f64>, mask: &ForbiddenMask) -> f64 {
    let n = s.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            if !mask.contains(i, j) {
                worst = worst.max(s[[i, j]].abs());
            }
        }
    }
    2.0 * worst
}

/// Stationarity certificate for a candidate solution.
///
/// With `g_ij = (grad f)_ij + (grad f)_ji` and `grad f = 2 (A S - S)`,
/// returns the largest violation over unmasked pairs:
/// `|g_ij + 2 lambda sign(a_ij)|` on active pairs and
/// `max(0, |g_ij| - 2 lambda)` on zero pairs. Zero at any global minimizer.
pub fn check_kkt(x: &GraphSignalMatrix, sol: &SemSolution, lambda: f64) -> f64 {
    assert_eq!(sol.a_hat.n(), x.n(), "solution does not match data");
    let s = x.data().dot(&x.data().t());
    let pairs = free_pairs(x.n(), sol.a_hat.forbidden());
    let u: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| sol.a_hat.weights()[[i, j]])
        .collect();
    let mut a_buf = Array2::<f64>::zeros((x.n(), x.n()));
    kkt_violation_for(&s, &u, &pairs, lambda, &mut a_buf)
}

fn kkt_violation_for(
    s: &Array2<f64>,
    u: &[f64],
    pairs: &[(usize, usize)],
    lambda: f64,
    a_buf: &mut Array2<f64>,
) -> f64 {
    fill_symmetric(a_buf, u, pairs);
    let m = a_buf.dot(s);
    let two_lambda = 2.0 * lambda;
    let mut worst = 0.0f64;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let g = 2.0 * (m[[i, j]] + m[[j, i]]) - 4.0 * s[[i, j]];
        let v = if u[k] != 0.0 {
            (g + two_lambda * u[k].signum()).abs()
        } else {
            (g.abs() - two_lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// All unordered pairs with `|weight| > eps`, listed as `(i, j, weight)`
/// with `i < j` in lexicographic order. The link count of a graph is the
/// length of this list.
pub fn edge_set(a: &AdjacencyMatrix, eps: f64) -> Vec<(usize, usize, f64)> {
    assert!(eps >= 0.0, "eps must be >= 0");
    let n = a.n();
    let w = a.weights();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if w[[i, j]].abs() > eps {
                edges.push((i, j, w[[i, j]]));
            }
        }
    }
    edges
}

fn free_pairs(n: usize, mask: &ForbiddenMask) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            if !mask.contains(i, j) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

fn fill_symmetric(a: &mut Array2<f64>, u: &[f64], pairs: &[(usize, usize)]) {
    a.fill(0.0);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        a[[i, j]] = u[k];
        a[[j, i]] = u[k];
    }
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

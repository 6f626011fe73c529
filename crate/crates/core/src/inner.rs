//! Convex inner solvers for the linearized surrogate
//! `G(x) = F1(x) − ⟨∇F2(anchor), x − anchor⟩`.
//!
//! Three first-order methods share one contract: the returned point is
//! the best iterate visited, so `G(x_out) ≤ G(x0)` always holds even for
//! the nonmonotone BB hybrid.

use crate::error::{Error, Result};
use crate::la;
use crate::model::Signal;
use crate::objective::SplitObjective;

/// Anything the inner solvers can minimize. Implemented by
/// [`InnerProblem`] and by synthetic objectives in tests.
pub trait InnerObjective {
    fn dim(&self) -> usize;
    fn g(&self, x: &[f64]) -> f64;
    fn grad_g(&self, x: &[f64], out: &mut [f64]);
}

/// The surrogate minimized at each outer iteration: convex because it
/// inherits the convexity of `F1`; `∇G(x) = ∇F1(x) − ∇F2(anchor)`.
pub struct InnerProblem<'a> {
    objective: &'a SplitObjective,
    anchor: Vec<f64>,
    anchor_grad_f2: Vec<f64>,
}

impl<'a> InnerProblem<'a> {
    pub fn new(objective: &'a SplitObjective, anchor: &Signal) -> Result<Self> {
        let g2 = objective.grad_f2(anchor)?;
        Ok(InnerProblem {
            objective,
            anchor: anchor.data().to_vec(),
            anchor_grad_f2: g2.into_data(),
        })
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn anchor_grad_f2(&self) -> &[f64] {
        &self.anchor_grad_f2
    }
}

impl InnerObjective for InnerProblem<'_> {
    fn dim(&self) -> usize {
        self.anchor.len()
    }

    fn g(&self, x: &[f64]) -> f64 {
        let diff = la::sub(x, &self.anchor);
        self.objective.eval_f1_raw(x) - la::dot(&self.anchor_grad_f2, &diff)
    }

    fn grad_g(&self, x: &[f64], out: &mut [f64]) {
        self.objective.grad_f1_raw(x, out);
        for (o, a) in out.iter_mut().zip(&self.anchor_grad_f2) {
            *o -= a;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerMethod {
    Gd,
    Nesterov,
    BbNesterov,
}

#[derive(Clone, Debug)]
pub struct InnerConfig {
    pub method: InnerMethod,
    pub max_iters: usize,
    /// Relative gradient tolerance; the absolute stopping threshold is
    /// `grad_tol · (1 + |G(x0)|)`.
    pub grad_tol: f64,
    /// Lipschitz estimate of `∇G`; GD steps `1/(2L)`, Nesterov `1/L`.
    pub step_l: f64,
    /// Strong-convexity estimate for the momentum coefficient.
    pub nu: f64,
    pub bb_clamp: (f64, f64),
    pub backtrack_factor: f64,
    pub sufficient_decrease: f64,
    /// Overrides the momentum coefficient computed from (step_l, nu).
    pub q_override: Option<f64>,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            method: InnerMethod::BbNesterov,
            max_iters: 300,
            grad_tol: 1e-9,
            step_l: 1.0,
            nu: 1.0,
            bb_clamp: (1e-8, 1e8),
            backtrack_factor: 0.5,
            sufficient_decrease: 1e-4,
            q_override: None,
        }
    }
}

impl InnerConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig("grad_tol must be positive".into()));
        }
        if !(self.step_l > 0.0) {
            return Err(Error::InvalidConfig("step_l must be positive".into()));
        }
        if self.nu < 0.0 {
            return Err(Error::InvalidConfig("nu must be nonnegative".into()));
        }
        let (lo, hi) = self.bb_clamp;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::InvalidConfig("bb_clamp must satisfy 0 < min <= max".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::InvalidConfig("backtrack_factor must lie in (0,1)".into()));
        }
        Ok(())
    }

    fn momentum(&self) -> Result<f64> {
        if let Some(q) = self.q_override {
            if !(0.0..1.0).contains(&q) {
                return Err(Error::InvalidConfig("momentum override must lie in [0,1)".into()));
            }
            return Ok(q);
        }
        nesterov_momentum_coeff(self.step_l, self.nu)
    }
}

#[derive(Clone, Debug)]
pub struct InnerResult {
    pub x: Vec<f64>,
    /// Effective iterations taken (0 for a stationary start).
    pub iters: usize,
    /// ‖∇G‖ at the returned point.
    pub grad_norm: f64,
    /// Best G value seen up to each iteration; nonincreasing.
    pub best_g_trace: Vec<f64>,
    pub backtracked: bool,
}

/// `q = (√(L/ν) − 1)/(√(L/ν) + 1)`.
pub fn nesterov_momentum_coeff(l: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::invalid("nu must be positive"));
    }
    if l < nu {
        return Err(Error::invalid("L must be at least nu"));
    }
    let r = (l / nu).sqrt();
    Ok((r - 1.0) / (r + 1.0))
}

/// Curvature estimate `(s·y)/‖s‖²` clamped into `[β_min, β_max]`;
/// nonpositive raw values clamp to the floor.
pub fn bb_step_size(s: &[f64], y: &[f64], clamp: (f64, f64)) -> Result<f64> {
    let ss = la::dot(s, s);
    if ss == 0.0 {
        return Err(Error::invalid("zero displacement in bb_step_size"));
    }
    let raw = la::dot(s, y) / ss;
    if raw <= 0.0 {
        return Ok(clamp.0);
    }
    Ok(raw.clamp(clamp.0, clamp.1))
}

struct Best {
    g: f64,
    gn: f64,
    /// Largest |G| seen; proxies the evaluation noise floor of G.
    g_scale: f64,
    x: Vec<f64>,
    trace: Vec<f64>,
}

impl Best {
    fn new(g0: f64, gn0: f64, x0: &[f64]) -> Self {
        Best { g: g0, gn: gn0, g_scale: g0.abs(), x: x0.to_vec(), trace: Vec::new() }
    }

    // Near stationarity G plateaus at floating-point resolution while
    // the iterates keep improving, so ties within the evaluation noise
    // of G are broken by gradient norm instead of insisting on a strict
    // G decrease.
    fn offer(&mut self, g: f64, gn: f64, x: &[f64]) {
        self.g_scale = self.g_scale.max(g.abs());
        let slack = 64.0 * f64::EPSILON * (1.0 + self.g_scale);
        if g < self.g - slack || (g <= self.g + slack && gn < self.gn) {
            self.g = self.g.min(g);
            self.gn = gn;
            self.x.copy_from_slice(x);
        }
        self.trace.push(self.g);
    }

    fn finish(self, iters: usize, backtracked: bool) -> InnerResult {
        InnerResult {
            grad_norm: self.gn,
            x: self.x,
            iters,
            best_g_trace: self.trace,
            backtracked,
        }
    }
}

/// Gradient descent with step `1/(2L)`, halved while the sufficient
/// decrease test `G(x') ≤ G(x) − c·h‖∇G‖²` fails.
pub fn solve_inner_gd(
    problem: &dyn InnerObjective,
    x0: &[f64],
    cfg: &InnerConfig,
) -> Result<InnerResult> {
    cfg.validate()?;
    let d = problem.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let g0 = problem.g(x0);
    let tol = cfg.grad_tol * (1.0 + g0.abs());
    let mut x = x0.to_vec();
    let mut gx = g0;
    let mut grad = vec![0.0; d];
    problem.grad_g(&x, &mut grad);
    let mut gn = la::norm(&grad);
    let mut best = Best::new(g0, gn, x0);
    let mut trial = vec![0.0; d];
    let mut h = 0.5 / cfg.step_l;
    let mut backtracked = false;
    let mut iters = 0;
    let mut g_scale = g0.abs();
    for _ in 0..cfg.max_iters {
        if gn <= tol {
            break;
        }
        let mut accepted = false;
        g_scale = g_scale.max(gx.abs());
        // slack absorbs cancellation once the true decrease drops below
        // the floating-point evaluation noise of G
        let slack = 64.0 * f64::EPSILON * (1.0 + g_scale);
        for _ in 0..60 {
            trial.copy_from_slice(&x);
            la::axpy(-h, &grad, &mut trial);
            let gt = problem.g(&trial);
            if gt <= gx - cfg.sufficient_decrease * h * gn * gn + slack {
                x.copy_from_slice(&trial);
                gx = gt;
                accepted = true;
                break;
            }
            h *= cfg.backtrack_factor;
            backtracked = true;
        }
        if !accepted {
            break;
        }
        iters += 1;
        problem.grad_g(&x, &mut grad);
        gn = la::norm(&grad);
        best.offer(gx, gn, &x);
    }
    Ok(best.finish(iters, backtracked))
}

/// Nesterov's accelerated method with step `1/L` and constant momentum
/// `q`. The paper's printed recursion subtracts the momentum term; the
/// classical extrapolation adds it, and only the latter achieves the
/// accelerated rate on strongly convex quadratics, so the sign is `+`
/// here: `u = z' + q(z' − z)`.
pub fn solve_inner_nesterov(
    problem: &dyn InnerObjective,
    x0: &[f64],
    cfg: &InnerConfig,
) -> Result<InnerResult> {
    cfg.validate()?;
    if !(cfg.nu > 0.0) {
        return Err(Error::InvalidConfig("nesterov requires nu > 0".into()));
    }
    let q = cfg.momentum()?;
    let d = problem.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let g0 = problem.g(x0);
    let tol = cfg.grad_tol * (1.0 + g0.abs());
    let step = 1.0 / cfg.step_l;
    let mut z = x0.to_vec();
    let mut u = x0.to_vec();
    let mut grad = vec![0.0; d];
    problem.grad_g(&u, &mut grad);
    let mut gn = la::norm(&grad);
    let mut best = Best::new(g0, gn, x0);
    let mut z_new = vec![0.0; d];
    let mut iters = 0;
    for _ in 0..cfg.max_iters {
        if gn <= tol {
            // convergence is detected at the extrapolated point, so that
            // is the point to return
            best.offer(problem.g(&u), gn, &u);
            break;
        }
        z_new.copy_from_slice(&u);
        la::axpy(-step, &grad, &mut z_new);
        for j in 0..d {
            u[j] = z_new[j] + q * (z_new[j] - z[j]);
        }
        z.copy_from_slice(&z_new);
        iters += 1;
        // ‖∇G(u)‖ stands in for ‖∇G(z)‖ in the tiebreak; the two points
        // coincide in the limit where the tiebreak matters
        best.offer(problem.g(&z), gn, &z);
        problem.grad_g(&u, &mut grad);
        gn = la::norm(&grad);
    }
    Ok(best.finish(iters, false))
}

/// The BB hybrid: spectral step lengths from the last two z-iterates,
/// Nesterov extrapolation between them, best-iterate return. The first
/// step (no displacement pair yet) uses `β₁ = L`.
pub fn solve_inner_bb_nesterov(
    problem: &dyn InnerObjective,
    x0: &[f64],
    cfg: &InnerConfig,
) -> Result<InnerResult> {
    cfg.validate()?;
    let q = cfg.momentum()?;
    let d = problem.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let g0 = problem.g(x0);
    let tol = cfg.grad_tol * (1.0 + g0.abs());

    let mut grad_z_prev = vec![0.0; d];
    problem.grad_g(x0, &mut grad_z_prev);
    let gn0 = la::norm(&grad_z_prev);
    let mut best = Best::new(g0, gn0, x0);
    if gn0 <= tol {
        return Ok(best.finish(0, false));
    }

    let mut z_prev = x0.to_vec();
    let mut u = x0.to_vec();
    let mut beta = cfg.step_l;
    let mut grad_u = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut grad_z = vec![0.0; d];
    let mut iters = 0;
    for j in 0..cfg.max_iters {
        if j == 0 {
            grad_u.copy_from_slice(&grad_z_prev);
        } else {
            problem.grad_g(&u, &mut grad_u);
        }
        z.copy_from_slice(&u);
        la::axpy(-1.0 / beta, &grad_u, &mut z);
        problem.grad_g(&z, &mut grad_z);
        iters += 1;
        let gn_z = la::norm(&grad_z);
        best.offer(problem.g(&z), gn_z, &z);
        if gn_z <= tol {
            break;
        }
        let s = la::sub(&z, &z_prev);
        if la::dot(&s, &s) == 0.0 {
            break;
        }
        let y = la::sub(&grad_z, &grad_z_prev);
        beta = bb_step_size(&s, &y, cfg.bb_clamp)?;
        // interpolating update (the momentum term is subtracted): raw BB
        // is nonmonotone and extrapolation on top of it diverges on the
        // quartic surrogates, while averaging with the previous iterate
        // damps the oscillation
        for k in 0..d {
            u[k] = z[k] - q * (z[k] - z_prev[k]);
        }
        z_prev.copy_from_slice(&z);
        grad_z_prev.copy_from_slice(&grad_z);
    }
    Ok(best.finish(iters, false))
}

/// Dispatches on `cfg.method`.
pub fn solve_inner(
    problem: &dyn InnerObjective,
    x0: &[f64],
    cfg: &InnerConfig,
) -> Result<InnerResult> {
    match cfg.method {
        InnerMethod::Gd => solve_inner_gd(problem, x0, cfg),
        InnerMethod::Nesterov => solve_inner_nesterov(problem, x0, cfg),
        InnerMethod::BbNesterov => solve_inner_bb_nesterov(problem, x0, cfg),
    }
}

//! The outer DC iteration: linearize the concave part at the current
//! iterate and minimize the convex surrogate, repeated until the step
//! norm collapses.
//!
//! Each update is parameter-free; the strong-convexity constant of `F2`
//! is sampled lazily for the descent audit only and never enters the
//! update itself.

use crate::error::{Error, Result};
use crate::inner::{solve_inner, InnerConfig, InnerProblem};
use crate::la;
use crate::model::Signal;
use crate::objective::SplitObjective;

#[derive(Clone, Debug)]
pub struct DcConfig {
    pub inner: InnerConfig,
    pub max_outer: usize,
    /// Stop when ‖x^(k+1) − x^(k)‖ drops below this.
    pub step_tol: f64,
    /// Stop when F reaches this (clean data drives F to zero).
    pub objective_floor: f64,
    /// Estimate the inner solver's (L, ν) at the starting point instead
    /// of trusting the values in `inner`.
    pub auto_params: bool,
}

impl Default for DcConfig {
    fn default() -> Self {
        DcConfig {
            inner: InnerConfig::default(),
            max_outer: 500,
            step_tol: 1e-9,
            objective_floor: 1e-14,
            auto_params: true,
        }
    }
}

impl DcConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("max_outer must be positive".into()));
        }
        if !(self.step_tol > 0.0) {
            return Err(Error::InvalidConfig("step_tol must be positive".into()));
        }
        Ok(())
    }
}

/// One outer iteration's worth of diagnostics, recorded after the step.
#[derive(Clone, Debug)]
pub struct DcRecord {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub step_norm: f64,
    pub grad_norm: f64,
    pub inner_iters: usize,
    pub backtracked: bool,
    /// Strong-convexity sample of F2, refreshed every 10 outer steps.
    pub ell_hat: Option<f64>,
    pub support_size: usize,
    /// ℓ1 norm of the iterate in the real embedding.
    pub l1_norm: f64,
}

#[derive(Clone, Debug, Default)]
pub struct DcTrace {
    pub records: Vec<DcRecord>,
    pub converged: bool,
    /// Set by callers that started from an uninformed initializer.
    pub uninformed_init: bool,
    /// Fitted contraction factor of the tail `log‖x^(k) − x_final‖`
    /// sequence; needs at least 5 usable tail points.
    pub tau_hat: Option<f64>,
    /// Coefficient of determination of that fit.
    pub tau_r2: Option<f64>,
}

impl DcTrace {
    /// Per-iteration CSV with the exact header
    /// `iter,F,F1,F2,step_norm,grad_norm,support_size`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,F,F1,F2,step_norm,grad_norm,support_size\n");
        for (k, r) in self.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{}\n",
                k + 1,
                r.f,
                r.f1,
                r.f2,
                r.step_norm,
                r.grad_norm,
                r.support_size
            ));
        }
        out
    }
}

/// `x^(k+1) = argmin F1(x) − ∇F2(x_k)ᵀ(x − x_k)`, solved by the
/// configured inner method from the anchor itself.
pub fn dc_step(obj: &SplitObjective, x_k: &Signal, cfg: &DcConfig) -> Result<Signal> {
    cfg.validate()?;
    let inner_cfg = if cfg.auto_params {
        auto_inner(obj, x_k, &cfg.inner)?
    } else {
        cfg.inner.clone()
    };
    let problem = InnerProblem::new(obj, x_k)?;
    let r = solve_inner(&problem, x_k.data(), &inner_cfg)?;
    Signal::new(x_k.field(), x_k.n(), r.x)
}

/// Fills in curvature estimates for the inner solver at the given point.
fn auto_inner(obj: &SplitObjective, x: &Signal, base: &InnerConfig) -> Result<InnerConfig> {
    let mut cfg = base.clone();
    let radius = 1.0 + x.norm();
    cfg.step_l = obj.estimate_lipschitz_f1(x, radius)?.max(1e-12);
    let nu_hat = estimate_f1_strong_convexity(obj, x.data(), cfg.step_l);
    cfg.nu = nu_hat.max(1e-8 * cfg.step_l);
    Ok(cfg)
}

/// Least-squares fit of `ln(dist)` against the iteration index over the
/// tail; returns `(τ̂ clamped to (0,1], R²)`.
fn fit_tail_rate(dists: &[f64]) -> Option<(f64, f64)> {
    let valid: Vec<(f64, f64)> = dists
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 1e-300)
        .map(|(k, &d)| (k as f64, d.ln()))
        .collect();
    let tail = if valid.len() > 30 { &valid[valid.len() - 30..] } else { &valid[..] };
    if tail.len() < 5 {
        return None;
    }
    let n = tail.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in tail {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let ss_tot = syy - sy * sy / n;
    let r2 = if ss_tot > 0.0 {
        let intercept = (sy - slope * sx) / n;
        let mut ss_res = 0.0;
        for &(x, y) in tail {
            let e = y - (intercept + slope * x);
            ss_res += e * e;
        }
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    let tau = slope.exp().clamp(f64::MIN_POSITIVE, 1.0);
    Some((tau, r2))
}

/// Runs the outer DC iteration from `x1` until the step norm falls below
/// `step_tol`, `F` reaches `objective_floor`, or `max_outer` steps pass.
/// Never errors on exhaustion; the trace reports `converged = false`.
pub fn run_dc(obj: &SplitObjective, x1: &Signal, cfg: &DcConfig) -> Result<(Signal, DcTrace)> {
    cfg.validate()?;
    let mut trace = DcTrace::default();
    let mut x = x1.clone();

    let inner_cfg = if cfg.auto_params {
        auto_inner(obj, x1, &cfg.inner)?
    } else {
        cfg.inner.clone()
    };
    let step_cfg = DcConfig { inner: inner_cfg, auto_params: false, ..cfg.clone() };

    let mut f = obj.eval_f(&x)?;
    if f <= cfg.objective_floor {
        trace.converged = true;
        return Ok((x, trace));
    }

    let mut iterates: Vec<Vec<f64>> = Vec::new();
    for k in 0..cfg.max_outer {
        let problem = InnerProblem::new(obj, &x)?;
        let r = solve_inner(&problem, x.data(), &step_cfg.inner)?;
        let step_norm = la::dist(&r.x, x.data());
        iterates.push(x.data().to_vec());
        x = Signal::new(x1.field(), x1.n(), r.x)?;

        let (f1, f2) = obj.eval_split(&x)?;
        f = f1 - f2;
        let grad_norm = obj.grad_f(&x)?.norm();
        let ell_hat = if k % 10 == 0 { Some(obj.strong_convexity_f2(&x)?) } else { None };
        trace.records.push(DcRecord {
            f,
            f1,
            f2,
            step_norm,
            grad_norm,
            inner_iters: r.iters,
            backtracked: r.backtracked,
            ell_hat,
            support_size: x.support_size(),
            l1_norm: x.data().iter().map(|v| v.abs()).sum(),
        });

        if f <= cfg.objective_floor || step_norm <= cfg.step_tol {
            trace.converged = true;
            break;
        }
    }

    let dists: Vec<f64> = iterates.iter().map(|p| la::dist(p, x.data())).collect();
    if let Some((tau, r2)) = fit_tail_rate(&dists) {
        trace.tau_hat = Some(tau);
        trace.tau_r2 = Some(r2);
    }
    Ok((x, trace))
}

/// Smallest Hessian eigenvalue of `F1` at `x`, matrix-free: power
/// iteration on `λ_max·I − H` using the Hessian-vector product. `F1` is
/// convex so the result is clamped to be nonnegative.
fn estimate_f1_strong_convexity(obj: &SplitObjective, x: &[f64], lambda_max: f64) -> f64 {
    use crate::rng::Prng;
    let d = x.len();
    let mut rng = Prng::new(0x51D2_77AB);
    let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let nv = la::norm(&v);
    if nv == 0.0 || lambda_max <= 0.0 {
        return 0.0;
    }
    la::scale(&mut v, 1.0 / nv);
    let mut hv = vec![0.0; d];
    let mut w = vec![0.0; d];
    let mut lambda = 0.0;
    for _ in 0..200 {
        obj.hvp_f1_raw(x, &v, &mut hv);
        for j in 0..d {
            w[j] = lambda_max * v[j] - hv[j];
        }
        let nw = la::norm(&w);
        if nw < 1e-300 {
            // H ≈ λ_max·I
            return lambda_max;
        }
        let prev = lambda;
        lambda = nw;
        for j in 0..d {
            v[j] = w[j] / nw;
        }
        if (lambda - prev).abs() <= 1e-8 * lambda {
            break;
        }
    }
    (lambda_max - lambda).max(0.0)
}

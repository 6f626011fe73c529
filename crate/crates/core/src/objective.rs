//! The split objective `F = F1 − F2` with gradients and curvature.
//!
//! `F(x) = Σ (f(⟨a_i,x⟩) − b_i)²` splits into the convex pair
//! `F1 = Σ f²(⟨a_i,x⟩) + b_i²` and `F2 = Σ 2 b_i f(⟨a_i,x⟩)`.
//! All sums accumulate in fixed index order so equal configurations are
//! bit-reproducible.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::la;
use crate::model::{MeasurementEnsemble, Signal};
use crate::rng::Prng;

/// Evaluator for `F`, `F1`, `F2`, their gradients and Hessian forms over a
/// measured ensemble. Read-only and safe to share across trial workers.
pub struct SplitObjective {
    ensemble: Arc<MeasurementEnsemble>,
    values: Vec<f64>,
    negative_values: bool,
    /// Running maximum of Lipschitz estimates (bit pattern of an f64);
    /// makes `estimate_lipschitz_f1` monotone under re-query.
    l1_running_max: AtomicU64,
    /// Strong-convexity parameter of F2; x-independent for SquareModulus.
    ell_cache: OnceLock<f64>,
}

impl SplitObjective {
    /// Requires a measured ensemble. Negative observed values are allowed
    /// (they can arise under additive noise) but recorded as a warning
    /// flag because they break the convexity of `F2`.
    pub fn new(ensemble: Arc<MeasurementEnsemble>) -> Result<Self> {
        let values = ensemble
            .values()
            .ok_or_else(|| Error::invalid("ensemble has no measured values"))?
            .to_vec();
        let negative_values = values.iter().any(|&b| b < 0.0);
        Ok(SplitObjective {
            ensemble,
            values,
            negative_values,
            l1_running_max: AtomicU64::new(0),
            ell_cache: OnceLock::new(),
        })
    }

    pub fn ensemble(&self) -> &MeasurementEnsemble {
        &self.ensemble
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when any observed value is negative (F2 convexity not
    /// guaranteed; the solvers still run and flag it in their traces).
    pub fn has_negative_values(&self) -> bool {
        self.negative_values
    }

    pub fn dim(&self) -> usize {
        self.ensemble.embed_dim()
    }

    fn check(&self, x: &Signal) -> Result<()> {
        if x.field() != self.ensemble.field() {
            return Err(Error::FieldMismatch("signal field does not match objective"));
        }
        if x.n() != self.ensemble.n() {
            return Err(Error::DimensionMismatch {
                expected: self.ensemble.n(),
                got: x.n(),
            });
        }
        Ok(())
    }

    fn signal(&self, data: Vec<f64>) -> Signal {
        Signal::new(self.ensemble.field(), self.ensemble.n(), data)
            .expect("gradient has the objective's own dimensions")
    }

    // -- raw slice-level evaluators (hot paths) ------------------------

    pub(crate) fn eval_f_raw(&self, x: &[f64]) -> f64 {
        let link = self.ensemble.link();
        let mut acc = 0.0;
        for i in 0..self.ensemble.m() {
            let (re, im) = self.ensemble.inner(i, x);
            let r = link.value(re, im) - self.values[i];
            acc += r * r;
        }
        acc
    }

    pub(crate) fn eval_split_raw(&self, x: &[f64]) -> (f64, f64) {
        let link = self.ensemble.link();
        let (mut f1, mut f2) = (0.0, 0.0);
        for i in 0..self.ensemble.m() {
            let (re, im) = self.ensemble.inner(i, x);
            let v = link.value(re, im);
            let b = self.values[i];
            f1 += v * v + b * b;
            f2 += 2.0 * b * v;
        }
        (f1, f2)
    }

    pub(crate) fn eval_f1_raw(&self, x: &[f64]) -> f64 {
        self.eval_split_raw(x).0
    }

    pub(crate) fn grad_f1_raw(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let link = self.ensemble.link();
        for i in 0..self.ensemble.m() {
            let (re, im) = self.ensemble.inner(i, x);
            let v = link.value(re, im);
            let (fr, fi) = link.grad(re, im);
            self.ensemble.accumulate_row(i, 2.0 * v * fr, 2.0 * v * fi, out);
        }
    }

    pub(crate) fn grad_f2_raw(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let link = self.ensemble.link();
        for i in 0..self.ensemble.m() {
            let (re, im) = self.ensemble.inner(i, x);
            let (fr, fi) = link.grad(re, im);
            let b = self.values[i];
            self.ensemble.accumulate_row(i, 2.0 * b * fr, 2.0 * b * fi, out);
        }
    }

    /// `∇F = ∇F1 − ∇F2`, coordinate-exact by construction.
    pub(crate) fn grad_f_raw(&self, x: &[f64], out: &mut [f64]) {
        let mut g2 = vec![0.0; out.len()];
        self.grad_f1_raw(x, out);
        self.grad_f2_raw(x, &mut g2);
        for (o, g) in out.iter_mut().zip(&g2) {
            *o -= g;
        }
    }

    /// Hessian-vector product of `F1`.
    pub(crate) fn hvp_f1_raw(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let link = self.ensemble.link();
        for i in 0..self.ensemble.m() {
            let (re, im) = self.ensemble.inner(i, x);
            let (pr, ps) = self.ensemble.inner(i, y);
            let v = link.value(re, im);
            let (fr, fi) = link.grad(re, im);
            let (frr, fri, fii) = link.hess(re, im);
            let p = fr * pr + fi * ps;
            let cr = 2.0 * p * fr + 2.0 * v * (frr * pr + fri * ps);
            let cs = 2.0 * p * fi + 2.0 * v * (fri * pr + fii * ps);
            self.ensemble.accumulate_row(i, cr, cs, out);
        }
    }

    // -- public Signal-level API ---------------------------------------

    /// `F(x) = Σ (f(⟨a_i,x⟩) − b_i)²`
    pub fn eval_f(&self, x: &Signal) -> Result<f64> {
        self.check(x)?;
        Ok(self.eval_f_raw(x.data()))
    }

    /// `(F1, F2)` with `F1 − F2 = F`.
    pub fn eval_split(&self, x: &Signal) -> Result<(f64, f64)> {
        self.check(x)?;
        Ok(self.eval_split_raw(x.data()))
    }

    pub fn grad_f1(&self, x: &Signal) -> Result<Signal> {
        self.check(x)?;
        let mut g = vec![0.0; self.dim()];
        self.grad_f1_raw(x.data(), &mut g);
        Ok(self.signal(g))
    }

    pub fn grad_f2(&self, x: &Signal) -> Result<Signal> {
        self.check(x)?;
        let mut g = vec![0.0; self.dim()];
        self.grad_f2_raw(x.data(), &mut g);
        Ok(self.signal(g))
    }

    pub fn grad_f(&self, x: &Signal) -> Result<Signal> {
        self.check(x)?;
        let mut g = vec![0.0; self.dim()];
        self.grad_f_raw(x.data(), &mut g);
        Ok(self.signal(g))
    }

    /// Upper estimate of the largest Hessian eigenvalue of `F1` over the
    /// ball of the given radius around `x`: power iteration on the
    /// analytic Hessian-vector product at the center plus 8 sampled
    /// boundary points, times a 1.1 safety factor. A running maximum is
    /// kept so re-queries are monotone; the floor for degenerate
    /// ensembles is 1e-12.
    pub fn estimate_lipschitz_f1(&self, x: &Signal, radius: f64) -> Result<f64> {
        self.check(x)?;
        if radius < 0.0 {
            return Err(Error::invalid("radius must be nonnegative"));
        }
        let d = self.dim();
        let mut rng = Prng::new(0x4C31_5AFE);
        let mut est: f64 = self.power_iterate_f1(x.data(), &mut rng);
        if radius > 0.0 {
            let mut point = vec![0.0; d];
            for _ in 0..8 {
                let mut u: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
                let nu = la::norm(&u);
                if nu > 0.0 {
                    la::scale(&mut u, radius / nu);
                }
                point.copy_from_slice(x.data());
                la::axpy(1.0, &u, &mut point);
                est = est.max(self.power_iterate_f1(&point, &mut rng));
            }
        }
        let est = (est * 1.1).max(1e-12);
        // monotone running max across queries
        let bits = est.to_bits();
        let prev = self.l1_running_max.fetch_max(bits, Ordering::Relaxed);
        Ok(f64::from_bits(prev.max(bits)))
    }

    fn power_iterate_f1(&self, x: &[f64], rng: &mut Prng) -> f64 {
        let d = x.len();
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let nv = la::norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        la::scale(&mut v, 1.0 / nv);
        let mut w = vec![0.0; d];
        let mut lambda = 0.0;
        for _ in 0..100 {
            self.hvp_f1_raw(x, &v, &mut w);
            let nw = la::norm(&w);
            if nw < 1e-300 {
                return 0.0;
            }
            let prev = lambda;
            lambda = nw;
            for j in 0..d {
                v[j] = w[j] / nw;
            }
            if (lambda - prev).abs() <= 1e-6 * lambda {
                break;
            }
        }
        lambda
    }

    fn hessian_f2_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let link = self.ensemble.link();
        let mut h = DMatrix::zeros(d, d);
        let mut r_dir = vec![0.0; d];
        let mut s_dir = vec![0.0; d];
        for i in 0..self.ensemble.m() {
            let (re, im) = self.ensemble.inner(i, x);
            let (frr, fri, fii) = link.hess(re, im);
            let b = self.values[i];
            r_dir.fill(0.0);
            s_dir.fill(0.0);
            self.ensemble.accumulate_row(i, 1.0, 0.0, &mut r_dir);
            self.ensemble.accumulate_row(i, 0.0, 1.0, &mut s_dir);
            for p in 0..d {
                for q in 0..d {
                    h[(p, q)] += 2.0
                        * b
                        * (frr * r_dir[p] * r_dir[q]
                            + fri * (r_dir[p] * s_dir[q] + s_dir[p] * r_dir[q])
                            + fii * s_dir[p] * s_dir[q]);
                }
            }
        }
        h
    }

    /// Strong-convexity parameter of `F2`: the minimal eigenvalue of
    /// `H = Σ 2 b_i f''(⟨a_i,x⟩) a_i a_i^T` via inverse power iteration
    /// (tolerance 1e-8, 500 iteration cap). Singular `H` yields 0 — `F2`
    /// is merely convex there. For `SquareModulus` the Hessian does not
    /// depend on `x` and the result is cached.
    pub fn strong_convexity_f2(&self, x: &Signal) -> Result<f64> {
        self.check(x)?;
        if self.ensemble.link().is_square_modulus() {
            if let Some(v) = self.ell_cache.get() {
                return Ok(*v);
            }
            let v = lambda_min_spd(&self.hessian_f2_matrix(x.data()));
            Ok(*self.ell_cache.get_or_init(|| v))
        } else {
            Ok(lambda_min_spd(&self.hessian_f2_matrix(x.data())))
        }
    }

    /// `y^T H_F(x) y` from the closed forms (full Hessian including the
    /// residual-weighted curvature terms, which vanish only at exact
    /// minimizers).
    pub fn hessian_quadratic_form(&self, x: &Signal, y: &Signal) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        let link = self.ensemble.link();
        let mut acc = 0.0;
        for i in 0..self.ensemble.m() {
            let (re, im) = self.ensemble.inner(i, x.data());
            let (pr, ps) = self.ensemble.inner(i, y.data());
            let v = link.value(re, im);
            let (fr, fi) = link.grad(re, im);
            let (frr, fri, fii) = link.hess(re, im);
            let p = fr * pr + fi * ps;
            acc += 2.0 * p * p
                + 2.0 * (v - self.values[i]) * (frr * pr * pr + 2.0 * fri * pr * ps + fii * ps * ps);
        }
        Ok(acc)
    }
}

/// Minimal eigenvalue of a symmetric positive semidefinite matrix by
/// inverse power iteration on its Cholesky factorization; returns 0 when
/// the factorization fails (singular or indefinite input).
fn lambda_min_spd(h: &DMatrix<f64>) -> f64 {
    let d = h.nrows();
    let chol = match h.clone().cholesky() {
        Some(c) => c,
        None => return 0.0,
    };
    let mut rng = Prng::new(0x3B9A_CA07);
    let mut v = nalgebra::DVector::from_iterator(d, (0..d).map(|_| rng.normal()));
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = chol.solve(&v);
        let nw = w.norm();
        if nw < 1e-300 {
            break;
        }
        let w = w / nw;
        let delta = (&w - &v).norm().min((&w + &v).norm());
        v = w;
        lambda = (h * &v).dot(&v);
        if delta <= 1e-8 {
            break;
        }
    }
    lambda.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{measure, sample_gaussian_ensemble, FieldTag, LinkFunction, NoiseSpec};
    use crate::rng::mix_seed;

    fn one_d(a: f64, b: f64) -> SplitObjective {
        let mut e = MeasurementEnsemble::from_rows(
            FieldTag::Real,
            1,
            vec![a],
            LinkFunction::SquareModulus,
        )
        .unwrap();
        e.set_values(vec![b]).unwrap();
        SplitObjective::new(Arc::new(e)).unwrap()
    }

    fn random_instance(n: usize, m: usize, field: FieldTag, seed: u64) -> (SplitObjective, Signal) {
        let e = sample_gaussian_ensemble(n, m, field, LinkFunction::SquareModulus, seed).unwrap();
        let mut rng = Prng::new(mix_seed(&[seed, 1]));
        let mut truth = Signal::zeros(field, n);
        for v in truth.data_mut() {
            *v = rng.normal();
        }
        let e = measure(&e, &truth, &NoiseSpec::none()).unwrap();
        (SplitObjective::new(Arc::new(e)).unwrap(), truth)
    }

    #[test]
    fn hand_values_one_d() {
        let obj = one_d(1.0, 1.0);
        let x = Signal::new(FieldTag::Real, 1, vec![0.5]).unwrap();
        assert!((obj.eval_f(&x).unwrap() - 0.5625).abs() < 1e-15);
        let (f1, f2) = obj.eval_split(&x).unwrap();
        assert!((f1 - f2 - 0.5625).abs() < 1e-12);
        let g = obj.grad_f(&x).unwrap();
        assert!((g.data()[0] + 1.5).abs() < 1e-12);

        let x1 = Signal::new(FieldTag::Real, 1, vec![1.0]).unwrap();
        let (f1, f2) = obj.eval_split(&x1).unwrap();
        assert_eq!((f1, f2), (2.0, 2.0));
    }

    #[test]
    fn zero_point_split() {
        let (obj, _) = random_instance(6, 18, FieldTag::Real, 12);
        let zero = Signal::zeros(FieldTag::Real, 6);
        let (f1, f2) = obj.eval_split(&zero).unwrap();
        let sum_b2: f64 = obj.values().iter().map(|b| b * b).sum();
        assert!((f1 - sum_b2).abs() < 1e-10 * (1.0 + sum_b2));
        assert_eq!(f2, 0.0);
    }

    #[test]
    fn truth_is_global_minimizer() {
        for field in [FieldTag::Real, FieldTag::Complex] {
            let (obj, truth) = random_instance(8, 24, field, 5);
            assert!(obj.eval_f(&truth).unwrap() < 1e-18);
            let g = obj.grad_f(&truth).unwrap();
            assert!(g.data().iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn split_identity_random() {
        let mut rng = Prng::new(33);
        for trial in 0..50 {
            let field = if trial % 2 == 0 { FieldTag::Real } else { FieldTag::Complex };
            let (obj, _) = random_instance(5, 15, field, 100 + trial);
            let mut x = Signal::zeros(field, 5);
            for v in x.data_mut() {
                *v = rng.normal();
            }
            let f = obj.eval_f(&x).unwrap();
            let (f1, f2) = obj.eval_split(&x).unwrap();
            assert!((f - (f1 - f2)).abs() <= 1e-10 * (1.0 + f1.abs()));
        }
    }

    #[test]
    fn gradient_consistency_exact() {
        let (obj, _) = random_instance(7, 21, FieldTag::Complex, 9);
        let mut rng = Prng::new(4);
        let mut x = Signal::zeros(FieldTag::Complex, 7);
        for v in x.data_mut() {
            *v = rng.normal();
        }
        let g = obj.grad_f(&x).unwrap();
        let g1 = obj.grad_f1(&x).unwrap();
        let g2 = obj.grad_f2(&x).unwrap();
        for j in 0..g.data().len() {
            assert_eq!(g.data()[j], g1.data()[j] - g2.data()[j]);
        }
    }

    fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for j in 0..x.len() {
            xp[j] = x[j] + h;
            let fp = f(&xp);
            xp[j] = x[j] - h;
            let fm = f(&xp);
            xp[j] = x[j];
            g[j] = (fp - fm) / (2.0 * h);
        }
        g
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Prng::new(71);
        for trial in 0..10 {
            let field = if trial % 2 == 0 { FieldTag::Real } else { FieldTag::Complex };
            let (obj, _) = random_instance(8, 20, field, 300 + trial);
            let d = obj.dim();
            let x: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            for (grad, eval) in [
                (SplitObjective::grad_f1_raw as fn(&SplitObjective, &[f64], &mut [f64]),
                 (|o: &SplitObjective, x: &[f64]| o.eval_split_raw(x).0) as fn(&SplitObjective, &[f64]) -> f64),
                (SplitObjective::grad_f2_raw, |o, x| o.eval_split_raw(x).1),
                (SplitObjective::grad_f_raw, |o, x| o.eval_f_raw(x)),
            ] {
                let mut g = vec![0.0; d];
                grad(&obj, &x, &mut g);
                let fd = fd_grad(|p| eval(&obj, p), &x, 1e-5);
                let err = la::dist(&g, &fd) / (1.0 + la::norm(&g));
                assert!(err <= 1e-5, "fd mismatch {err}");
            }
        }
    }

    #[test]
    fn lipschitz_estimate_scalar() {
        let obj = one_d(1.0, 3.0);
        let x = Signal::new(FieldTag::Real, 1, vec![1.0]).unwrap();
        let l = obj.estimate_lipschitz_f1(&x, 0.0).unwrap();
        assert!((l - 13.2).abs() < 1e-6, "got {l}");
    }

    #[test]
    fn lipschitz_floor_and_monotonicity() {
        let mut e = MeasurementEnsemble::from_rows(
            FieldTag::Real,
            2,
            vec![0.0, 0.0],
            LinkFunction::SquareModulus,
        )
        .unwrap();
        e.set_values(vec![0.0]).unwrap();
        let obj = SplitObjective::new(Arc::new(e)).unwrap();
        let x = Signal::zeros(FieldTag::Real, 2);
        assert_eq!(obj.estimate_lipschitz_f1(&x, 1.0).unwrap(), 1e-12);

        let (obj, truth) = random_instance(4, 12, FieldTag::Real, 44);
        let mut prev = 0.0;
        let mut r = 0.25;
        for _ in 0..5 {
            let est = obj.estimate_lipschitz_f1(&truth, r).unwrap();
            assert!(est >= prev);
            prev = est;
            r *= 2.0;
        }
    }

    #[test]
    fn strong_convexity_examples() {
        let obj = one_d(1.0, 1.0);
        let x = Signal::zeros(FieldTag::Real, 1);
        assert!((obj.strong_convexity_f2(&x).unwrap() - 4.0).abs() < 1e-7);

        let obj0 = one_d(1.0, 0.0);
        assert_eq!(obj0.strong_convexity_f2(&x).unwrap(), 0.0);

        let mut e = MeasurementEnsemble::from_rows(
            FieldTag::Real,
            2,
            vec![1.0, 0.0, 0.0, 1.0],
            LinkFunction::SquareModulus,
        )
        .unwrap();
        e.set_values(vec![1.0, 2.0]).unwrap();
        let obj = SplitObjective::new(Arc::new(e)).unwrap();
        let x = Signal::zeros(FieldTag::Real, 2);
        assert!((obj.strong_convexity_f2(&x).unwrap() - 4.0).abs() < 1e-7);
    }

    #[test]
    fn quadratic_form_cases() {
        let obj = one_d(1.0, 1.0);
        let x = Signal::new(FieldTag::Real, 1, vec![1.0]).unwrap();
        let y = Signal::new(FieldTag::Real, 1, vec![1.0]).unwrap();
        assert!((obj.hessian_quadratic_form(&x, &y).unwrap() - 8.0).abs() < 1e-12);
        let y0 = Signal::zeros(FieldTag::Real, 1);
        assert_eq!(obj.hessian_quadratic_form(&x, &y0).unwrap(), 0.0);
        // saddle at the origin: F''(0) = -4b < 0
        let x0 = Signal::zeros(FieldTag::Real, 1);
        assert!((obj.hessian_quadratic_form(&x0, &y).unwrap() + 4.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_form_matches_second_differences() {
        let mut rng = Prng::new(52);
        for trial in 0..10 {
            let field = if trial % 2 == 0 { FieldTag::Real } else { FieldTag::Complex };
            let (obj, _) = random_instance(6, 18, field, 500 + trial);
            let d = obj.dim();
            let n = obj.ensemble().n();
            let x = Signal::new(field, n, (0..d).map(|_| rng.normal()).collect()).unwrap();
            let y = Signal::new(field, n, (0..d).map(|_| rng.normal()).collect()).unwrap();
            let qf = obj.hessian_quadratic_form(&x, &y).unwrap();
            let h = 1e-4;
            let mut xp = x.data().to_vec();
            let mut xm = x.data().to_vec();
            for j in 0..d {
                xp[j] = x.data()[j] + h * y.data()[j];
                xm[j] = x.data()[j] - h * y.data()[j];
            }
            let fd = (obj.eval_f_raw(&xp) - 2.0 * obj.eval_f_raw(x.data()) + obj.eval_f_raw(&xm))
                / (h * h);
            assert!(
                (qf - fd).abs() <= 1e-3 * (1.0 + qf.abs()),
                "qf {qf} vs fd {fd}"
            );
        }
    }

    #[test]
    fn convexity_of_split_parts() {
        let mut rng = Prng::new(61);
        let (obj, _) = random_instance(5, 15, FieldTag::Real, 71);
        for _ in 0..1000 {
            let a: Vec<f64> = (0..5).map(|_| 2.0 * rng.normal()).collect();
            let b: Vec<f64> = (0..5).map(|_| 2.0 * rng.normal()).collect();
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let (f1a, f2a) = obj.eval_split_raw(&a);
            let (f1b, f2b) = obj.eval_split_raw(&b);
            let (f1m, f2m) = obj.eval_split_raw(&mid);
            assert!(f1m <= 0.5 * (f1a + f1b) + 1e-9 * (1.0 + f1a.abs() + f1b.abs()));
            assert!(f2m <= 0.5 * (f2a + f2b) + 1e-9 * (1.0 + f2a.abs() + f2b.abs()));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (obj, _) = random_instance(5, 15, FieldTag::Real, 71);
        let bad = Signal::zeros(FieldTag::Real, 4);
        assert!(obj.eval_f(&bad).is_err());
        let bad_field = Signal::zeros(FieldTag::Complex, 5);
        assert!(obj.grad_f(&bad_field).is_err());
    }
}

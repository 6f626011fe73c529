//! Algebraic-geometry utilities: the degree bound for the rank-one
//! variety and empirical Hessian certificates at recovered minimizers.

use crate::error::{Error, Result};
use crate::la;
use crate::model::{FieldTag, Signal};
use crate::objective::SplitObjective;
use crate::rng::Prng;
use num_bigint::BigUint;

/// Exact value of `∏_{i=0}^{n−2} (n+i)/(1+i)`, equal to the central
/// binomial coefficient `C(2n−2, n−1)`; the empty product at `n = 1`
/// is 1. Computed as a running binomial so every partial result is an
/// integer: after step `i`, the accumulator holds `C(n−1+i, i)`.
pub fn rank_one_degree_bound(n: usize) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let mut acc = BigUint::from(1u32);
    for i in 1..n {
        acc = acc * BigUint::from(n - 1 + i) / BigUint::from(i);
    }
    Ok(acc)
}

/// Empirical second-order certificate at a candidate minimizer.
#[derive(Clone, Debug)]
pub struct HessianCertificate {
    /// Minimum of the Hessian quadratic form over the sampled unit
    /// directions; positive values support a local minimum.
    pub min_quadratic_form: f64,
    /// For complex signals, the quadratic form along the phase
    /// direction `i·z*` (embedding `[−im | re]`), which vanishes at an
    /// exact minimizer. Absent for real signals.
    pub null_direction_residual: Option<f64>,
}

/// Samples `directions` random unit directions (seeded, deterministic)
/// and reports the minimum Hessian quadratic form of `F` at `x_star`;
/// complex inputs additionally get the phase-direction residual. The
/// caller is responsible for checking `‖∇F(x_star)‖` is small — the
/// report is produced even at saddle points, where the minimum goes
/// negative.
pub fn certify_minimizer_hessian(
    obj: &SplitObjective,
    x_star: &Signal,
    directions: usize,
) -> Result<HessianCertificate> {
    if directions == 0 {
        return Err(Error::invalid("directions must be positive"));
    }
    let d = x_star.data().len();
    let mut rng = Prng::new(0x9e37_79b9_7f4a_7c15);
    let mut min_q = f64::INFINITY;
    for _ in 0..directions {
        let mut y: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let ny = la::norm(&y);
        if ny == 0.0 {
            continue;
        }
        la::scale(&mut y, 1.0 / ny);
        let y = Signal::new(x_star.field(), x_star.n(), y)?;
        min_q = min_q.min(obj.hessian_quadratic_form(x_star, &y)?);
    }

    let null_direction_residual = match x_star.field() {
        FieldTag::Real => None,
        FieldTag::Complex => {
            let n = x_star.n();
            let mut y = vec![0.0; d];
            for j in 0..n {
                y[j] = -x_star.data()[j + n];
                y[j + n] = x_star.data()[j];
            }
            // unnormalized: the residual then carries its natural
            // quartic scale in ‖z*‖
            let y = Signal::new(FieldTag::Complex, n, y)?;
            Some(obj.hessian_quadratic_form(x_star, &y)?)
        }
    };

    Ok(HessianCertificate {
        min_quadratic_form: min_q,
        null_direction_residual,
    })
}

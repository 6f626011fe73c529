//! Signals, measurement ensembles, link functions and noise models.
//!
//! Complex signals and measurement vectors are stored in a real embedding
//! of dimension `2n` with layout `[real parts | imaginary parts]`. The
//! complex inner product is evaluated in the embedding as
//! `⟨a, z⟩ = (aR·xR + aI·xI) + i (aR·xI − aI·xR)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::la;
use crate::rng::Prng;

/// Scalar field of a signal or ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldTag {
    Real,
    Complex,
}

impl FieldTag {
    /// Storage dimension of the real embedding for ambient dimension `n`.
    pub fn embed_dim(self, n: usize) -> usize {
        match self {
            FieldTag::Real => n,
            FieldTag::Complex => 2 * n,
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldTag::Real => write!(f, "real"),
            FieldTag::Complex => write!(f, "complex"),
        }
    }
}

impl std::str::FromStr for FieldTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(FieldTag::Real),
            "complex" => Ok(FieldTag::Complex),
            other => Err(Error::Parse(format!("unknown field tag {other:?}"))),
        }
    }
}

/// A real or complex vector in the uniform real-embedding representation.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    field: FieldTag,
    n: usize,
    data: Vec<f64>,
}

impl Signal {
    pub fn new(field: FieldTag, n: usize, data: Vec<f64>) -> Result<Self> {
        let d = field.embed_dim(n);
        if data.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: data.len(),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("signal coordinates must be finite"));
        }
        Ok(Signal { field, n, data })
    }

    pub fn zeros(field: FieldTag, n: usize) -> Self {
        Signal {
            field,
            n,
            data: vec![0.0; field.embed_dim(n)],
        }
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    /// Ambient dimension (number of real or complex coordinates).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        la::norm(&self.data)
    }

    /// Number of nonzero coordinates; a complex coordinate counts once and
    /// is nonzero when either embedding half is.
    pub fn support_size(&self) -> usize {
        match self.field {
            FieldTag::Real => self.data.iter().filter(|v| **v != 0.0).count(),
            FieldTag::Complex => (0..self.n)
                .filter(|&j| self.data[j] != 0.0 || self.data[j + self.n] != 0.0)
                .count(),
        }
    }

    /// Multiplies by a unimodular constant: `±1` (real) or a phase angle
    /// `e^{iθ}` applied per complex coordinate.
    pub fn rotate(&self, theta: f64) -> Signal {
        let mut out = self.clone();
        match self.field {
            FieldTag::Real => {
                let c = theta.cos().signum();
                la::scale(&mut out.data, c);
            }
            FieldTag::Complex => {
                let (c, s) = (theta.cos(), theta.sin());
                for j in 0..self.n {
                    let re = self.data[j];
                    let im = self.data[j + self.n];
                    out.data[j] = c * re - s * im;
                    out.data[j + self.n] = s * re + c * im;
                }
            }
        }
        out
    }
}

/// Analytic evaluators for a custom link function, as functions of the
/// real embedding `(re, im)` of the inner product. Real-field callers pass
/// `im = 0` and only the `re` derivatives are used.
pub trait LinkFn: Send + Sync {
    fn value(&self, re: f64, im: f64) -> f64;
    /// `(∂f/∂re, ∂f/∂im)`
    fn grad(&self, re: f64, im: f64) -> (f64, f64);
    /// `(∂²f/∂re², ∂²f/∂re∂im, ∂²f/∂im²)`
    fn hess(&self, re: f64, im: f64) -> (f64, f64, f64);
}

/// The convex, nonnegative, coercive scalar map applied to each inner
/// product. `SquareModulus` is `f(t) = |t|²`, standard phase retrieval.
#[derive(Clone)]
pub enum LinkFunction {
    SquareModulus,
    Custom(Arc<dyn LinkFn>),
}

impl LinkFunction {
    pub fn value(&self, re: f64, im: f64) -> f64 {
        match self {
            LinkFunction::SquareModulus => re * re + im * im,
            LinkFunction::Custom(f) => f.value(re, im),
        }
    }

    pub fn grad(&self, re: f64, im: f64) -> (f64, f64) {
        match self {
            LinkFunction::SquareModulus => (2.0 * re, 2.0 * im),
            LinkFunction::Custom(f) => f.grad(re, im),
        }
    }

    pub fn hess(&self, re: f64, im: f64) -> (f64, f64, f64) {
        match self {
            LinkFunction::SquareModulus => (2.0, 0.0, 2.0),
            LinkFunction::Custom(f) => f.hess(re, im),
        }
    }

    pub fn is_square_modulus(&self) -> bool {
        matches!(self, LinkFunction::SquareModulus)
    }
}

impl fmt::Debug for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkFunction::SquareModulus => write!(f, "SquareModulus"),
            LinkFunction::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Noise model applied by [`measure`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    /// Clean measurements.
    None,
    /// `b̂ = f(⟨a, x⟩) + ε`, ε ~ U[-u, u].
    Additive,
    /// `b̃ = f(⟨a, x⟩ + δ) + ε`, δ and ε ~ U[-u, u] independently
    /// (complex fields draw independent real and imaginary δ parts).
    InsideOutside,
}

#[derive(Clone, Copy, Debug)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    /// Half-width of the uniform noise distribution.
    pub u: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            model: NoiseModel::None,
            u: 0.0,
            seed: 0,
        }
    }
}

/// Measurement vectors `a_i`, observed values `b_i` and the link function.
///
/// The rank-one matrices `a_i a_i^T` used by curvature formulas are always
/// derived on the fly from the stored rows, never materialized.
#[derive(Clone, Debug)]
pub struct MeasurementEnsemble {
    field: FieldTag,
    n: usize,
    m: usize,
    /// `m × d` row-major embedded measurement vectors, `d = embed_dim(n)`.
    vectors: Vec<f64>,
    /// Observed values, present once `measure` has run.
    values: Option<Vec<f64>>,
    link: LinkFunction,
}

impl MeasurementEnsemble {
    pub fn from_rows(
        field: FieldTag,
        n: usize,
        rows: Vec<f64>,
        link: LinkFunction,
    ) -> Result<Self> {
        let d = field.embed_dim(n);
        if d == 0 || rows.is_empty() || rows.len() % d != 0 {
            return Err(Error::invalid("row storage must be a nonempty multiple of the embedding dimension"));
        }
        Ok(MeasurementEnsemble {
            field,
            n,
            m: rows.len() / d,
            vectors: rows,
            values: None,
            link,
        })
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn embed_dim(&self) -> usize {
        self.field.embed_dim(self.n)
    }

    pub fn link(&self) -> &LinkFunction {
        &self.link
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.embed_dim();
        &self.vectors[i * d..(i + 1) * d]
    }

    pub fn values(&self) -> Option<&[f64]> {
        self.values.as_deref()
    }

    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: values.len(),
            });
        }
        self.values = Some(values);
        Ok(())
    }

    /// Inner product `⟨a_i, x⟩` in the embedding, returned as `(re, im)`;
    /// `im` is zero for real fields.
    pub fn inner(&self, i: usize, x: &[f64]) -> (f64, f64) {
        let row = self.row(i);
        match self.field {
            FieldTag::Real => (la::dot(row, x), 0.0),
            FieldTag::Complex => {
                let n = self.n;
                let (ar, ai) = row.split_at(n);
                let (xr, xi) = x.split_at(n);
                let re = la::dot(ar, xr) + la::dot(ai, xi);
                let im = la::dot(ar, xi) - la::dot(ai, xr);
                (re, im)
            }
        }
    }

    /// Accumulates `out += cr * r_i + cs * s_i` where `r_i` is the embedded
    /// row and `s_i` its quarter-turn rotation `[-aI | aR]` (the direction
    /// along which the imaginary part of the inner product varies). For
    /// real fields `s_i` vanishes and `cs` is ignored.
    pub fn accumulate_row(&self, i: usize, cr: f64, cs: f64, out: &mut [f64]) {
        let row = self.row(i);
        match self.field {
            FieldTag::Real => la::axpy(cr, row, out),
            FieldTag::Complex => {
                let n = self.n;
                let (ar, ai) = row.split_at(n);
                let (or_, oi) = out.split_at_mut(n);
                for j in 0..n {
                    or_[j] += cr * ar[j] - cs * ai[j];
                    oi[j] += cr * ai[j] + cs * ar[j];
                }
            }
        }
    }

    fn check_signal(&self, x: &Signal) -> Result<()> {
        if x.field() != self.field {
            return Err(Error::FieldMismatch("signal field does not match ensemble"));
        }
        if x.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.n(),
            });
        }
        Ok(())
    }
}

/// Samples `m` measurement vectors with i.i.d. standard normal real
/// coordinates (real and imaginary parts independently in the complex
/// case). Values are left unset; call [`measure`] next.
pub fn sample_gaussian_ensemble(
    n: usize,
    m: usize,
    field: FieldTag,
    link: LinkFunction,
    seed: u64,
) -> Result<MeasurementEnsemble> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("n and m must be positive"));
    }
    let d = field.embed_dim(n);
    let mut rng = Prng::new(seed);
    let mut rows = Vec::with_capacity(m * d);
    for _ in 0..m * d {
        rows.push(rng.normal());
    }
    MeasurementEnsemble::from_rows(field, n, rows, link)
}

/// Evaluates the measurements `b_i = f(⟨a_i, truth⟩)` plus the selected
/// noise model and returns the populated ensemble.
///
/// Per measurement the noise draws are ordered δ (re, then im for complex
/// fields) followed by ε, so a fixed `noise.seed` pins the whole vector.
/// Noisy values may be negative; they are stored as-is.
pub fn measure(
    ensemble: &MeasurementEnsemble,
    truth: &Signal,
    noise: &NoiseSpec,
) -> Result<MeasurementEnsemble> {
    ensemble.check_signal(truth)?;
    let mut rng = Prng::new(noise.seed);
    let mut values = Vec::with_capacity(ensemble.m);
    for i in 0..ensemble.m {
        let (mut re, mut im) = ensemble.inner(i, truth.data());
        let mut eps = 0.0;
        match noise.model {
            NoiseModel::None => {}
            NoiseModel::Additive => {
                eps = rng.uniform_sym(noise.u);
            }
            NoiseModel::InsideOutside => {
                re += rng.uniform_sym(noise.u);
                if ensemble.field == FieldTag::Complex {
                    im += rng.uniform_sym(noise.u);
                }
                eps = rng.uniform_sym(noise.u);
            }
        }
        values.push(ensemble.link.value(re, im) + eps);
    }
    let mut out = ensemble.clone();
    out.values = Some(values);
    Ok(out)
}

/// Phase-invariant distance `min_{|c|=1} ‖x − c·y‖₂`.
pub fn dist_up_to_phase(x: &Signal, y: &Signal) -> Result<f64> {
    if x.field() != y.field() {
        return Err(Error::FieldMismatch("signals in different fields"));
    }
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch {
            expected: x.n(),
            got: y.n(),
        });
    }
    match x.field() {
        FieldTag::Real => {
            let mut dm = 0.0;
            let mut dp = 0.0;
            for (a, b) in x.data().iter().zip(y.data()) {
                dm += (a - b) * (a - b);
                dp += (a + b) * (a + b);
            }
            Ok(dm.min(dp).sqrt())
        }
        FieldTag::Complex => {
            let n = x.n();
            let (xr, xi) = x.data().split_at(n);
            let (yr, yi) = y.data().split_at(n);
            let re = la::dot(xr, yr) + la::dot(xi, yi);
            let im = la::dot(xr, yi) - la::dot(xi, yr);
            let cross = (re * re + im * im).sqrt();
            let sq = la::dot(x.data(), x.data()) + la::dot(y.data(), y.data()) - 2.0 * cross;
            Ok(sq.max(0.0).sqrt())
        }
    }
}

// ---------------------------------------------------------------------
// CSV persistence (harness file format)
// ---------------------------------------------------------------------

fn join_floats(row: &[f64]) -> String {
    row.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Serializes an ensemble: a `field,n,m` header, the corresponding value
/// row, then one row of embedded coordinates per measurement vector with
/// the observed value appended as a last column when values are set.
/// Only the `SquareModulus` link round-trips through this format.
pub fn ensemble_to_csv(e: &MeasurementEnsemble) -> String {
    let mut out = String::from("field,n,m\n");
    out.push_str(&format!("{},{},{}\n", e.field, e.n, e.m));
    for i in 0..e.m {
        let mut line = join_floats(e.row(i));
        if let Some(values) = e.values() {
            line.push(',');
            line.push_str(&values[i].to_string());
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn ensemble_from_csv(text: &str) -> Result<MeasurementEnsemble> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    if header.trim() != "field,n,m" {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let meta = lines.next().ok_or_else(|| Error::Parse("missing metadata row".into()))?;
    let parts: Vec<&str> = meta.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Parse("metadata row must have 3 fields".into()));
    }
    let field: FieldTag = parts[0].trim().parse()?;
    let n: usize = parts[1].trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
    let m: usize = parts[2].trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
    let d = field.embed_dim(n);
    let mut rows = Vec::with_capacity(m * d);
    let mut values = Vec::new();
    for line in lines {
        let coords: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{e}"))))
            .collect::<Result<_>>()?;
        if coords.len() == d + 1 {
            rows.extend_from_slice(&coords[..d]);
            values.push(coords[d]);
        } else if coords.len() == d {
            rows.extend_from_slice(&coords);
        } else {
            return Err(Error::Parse(format!(
                "row has {} columns, expected {d} or {}",
                coords.len(),
                d + 1
            )));
        }
    }
    if rows.len() != m * d {
        return Err(Error::Parse(format!("expected {m} rows of dimension {d}")));
    }
    let mut out = MeasurementEnsemble::from_rows(field, n, rows, LinkFunction::SquareModulus)?;
    if !values.is_empty() {
        if values.len() != m {
            return Err(Error::Parse("value column present on only some rows".into()));
        }
        out.set_values(values)?;
    }
    Ok(out)
}

/// Serializes a signal: a `field,n` header, the value row, then one row of
/// embedded coordinates.
pub fn signal_to_csv(x: &Signal) -> String {
    format!("field,n\n{},{}\n{}\n", x.field(), x.n(), join_floats(x.data()))
}

pub fn signal_from_csv(text: &str) -> Result<Signal> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    if header.trim() != "field,n" {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let meta = lines.next().ok_or_else(|| Error::Parse("missing metadata row".into()))?;
    let parts: Vec<&str> = meta.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Parse("metadata row must have 2 fields".into()));
    }
    let field: FieldTag = parts[0].trim().parse()?;
    let n: usize = parts[1].trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
    let coords = lines
        .next()
        .ok_or_else(|| Error::Parse("missing coordinate row".into()))?
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{e}"))))
        .collect::<Result<Vec<f64>>>()?;
    Signal::new(field, n, coords)
}

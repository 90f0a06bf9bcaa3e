//! Loss families, empirical risks and their certified constants.

use std::ops::Index;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

/// Rows per partial sum in the empirical-risk reductions. Fixed so that the
/// summation order does not depend on the thread count.
const CHUNK: usize = 128;

/// Below this many multiply-adds a reduction stays on the calling thread.
const PARALLEL_WORK: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("parameter dimension must be at least 1".into()));
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("coordinate {i} is not finite")));
        }
        Ok(ParamVector(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        ParamVector(vec![0.0; dim.max(1)])
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        ParamVector(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &ParamVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A single observation: a labeled covariate pair or a two-point symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DataPoint {
    Labeled { x: Vec<f64>, y: u8 },
    Symbol(i8),
}

impl DataPoint {
    pub fn labeled(x: Vec<f64>, y: u8) -> Result<Self> {
        if y > 1 {
            return Err(Error::InvalidParameter(format!("label must be 0 or 1, got {y}")));
        }
        if x.is_empty() {
            return Err(Error::InvalidParameter("covariate vector is empty".into()));
        }
        Ok(DataPoint::Labeled { x, y })
    }

    pub fn symbol(s: i8) -> Result<Self> {
        if s != 1 && s != -1 {
            return Err(Error::InvalidParameter(format!("symbol must be -1 or +1, got {s}")));
        }
        Ok(DataPoint::Symbol(s))
    }

    pub fn as_ref(&self) -> PointRef<'_> {
        match self {
            DataPoint::Labeled { x, y } => PointRef::Labeled { x, y: *y },
            DataPoint::Symbol(s) => PointRef::Symbol(*s),
        }
    }
}

/// Borrowed view of a data point, used by the inner loops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointRef<'a> {
    Labeled { x: &'a [f64], y: u8 },
    Symbol(i8),
}

impl PointRef<'_> {
    pub fn to_owned(self) -> DataPoint {
        match self {
            PointRef::Labeled { x, y } => DataPoint::Labeled { x: x.to_vec(), y },
            PointRef::Symbol(s) => DataPoint::Symbol(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Storage {
    Labeled { dim: usize, x: Vec<f64>, y: Vec<u8> },
    Symbols(Vec<i8>),
}

/// A homogeneous sample `S = (z_1, …, z_n)`. Labeled designs are stored
/// row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    storage: Storage,
}

impl Dataset {
    /// Labeled sample from a row-major `n × dim` design and labels in {0, 1}.
    pub fn labeled(x: Vec<f64>, dim: usize, y: Vec<u8>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if y.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if x.len() != dim * y.len() {
            return Err(Error::DimensionMismatch { expected: dim * y.len(), got: x.len() });
        }
        if let Some(bad) = y.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidParameter(format!("label must be 0 or 1, got {bad}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("design contains a non-finite entry".into()));
        }
        Ok(Dataset { storage: Storage::Labeled { dim, x, y } })
    }

    pub fn symbols(s: Vec<i8>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(bad) = s.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidParameter(format!("symbol must be -1 or +1, got {bad}")));
        }
        Ok(Dataset { storage: Storage::Symbols(s) })
    }

    pub fn from_points(points: &[DataPoint]) -> Result<Self> {
        match points.first() {
            None => Err(Error::EmptyDataset),
            Some(DataPoint::Symbol(_)) => {
                let s = points
                    .iter()
                    .map(|p| match p {
                        DataPoint::Symbol(s) => Ok(*s),
                        DataPoint::Labeled { .. } => Err(Error::MixedDataset),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Dataset::symbols(s)
            }
            Some(DataPoint::Labeled { x, .. }) => {
                let dim = x.len();
                let mut flat = Vec::with_capacity(dim * points.len());
                let mut y = Vec::with_capacity(points.len());
                for p in points {
                    match p {
                        DataPoint::Labeled { x, y: label } => {
                            if x.len() != dim {
                                return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
                            }
                            flat.extend_from_slice(x);
                            y.push(*label);
                        }
                        DataPoint::Symbol(_) => return Err(Error::MixedDataset),
                    }
                }
                Dataset::labeled(flat, dim, y)
            }
        }
    }

    pub fn len(&self) -> usize {
        match &self.storage {
            Storage::Labeled { y, .. } => y.len(),
            Storage::Symbols(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Covariate dimension for labeled samples.
    pub fn dim(&self) -> Option<usize> {
        match &self.storage {
            Storage::Labeled { dim, .. } => Some(*dim),
            Storage::Symbols(_) => None,
        }
    }

    pub fn is_labeled(&self) -> bool {
        matches!(self.storage, Storage::Labeled { .. })
    }

    pub fn point(&self, i: usize) -> PointRef<'_> {
        match &self.storage {
            Storage::Labeled { dim, x, y } => PointRef::Labeled { x: &x[i * dim..(i + 1) * dim], y: y[i] },
            Storage::Symbols(s) => PointRef::Symbol(s[i]),
        }
    }

    pub fn get(&self, i: usize) -> Option<DataPoint> {
        (i < self.len()).then(|| self.point(i).to_owned())
    }

    pub fn iter(&self) -> impl Iterator<Item = PointRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Labels of a labeled sample.
    pub fn labels(&self) -> Option<&[u8]> {
        match &self.storage {
            Storage::Labeled { y, .. } => Some(y),
            Storage::Symbols(_) => None,
        }
    }

    /// Row-major design of a labeled sample.
    pub fn design(&self) -> Option<&[f64]> {
        match &self.storage {
            Storage::Labeled { x, .. } => Some(x),
            Storage::Symbols(_) => None,
        }
    }

    /// Copy of the sample with position `k` replaced by `z`.
    pub fn with_replaced(&self, k: usize, z: &DataPoint) -> Result<Dataset> {
        if k >= self.len() {
            return Err(Error::IndexOutOfRange { index: k, n: self.len() });
        }
        let mut out = self.clone();
        match (&mut out.storage, z) {
            (Storage::Labeled { dim, x, y }, DataPoint::Labeled { x: zx, y: zy }) => {
                if zx.len() != *dim {
                    return Err(Error::DimensionMismatch { expected: *dim, got: zx.len() });
                }
                if *zy > 1 {
                    return Err(Error::InvalidParameter(format!("label must be 0 or 1, got {zy}")));
                }
                x[k * *dim..(k + 1) * *dim].copy_from_slice(zx);
                y[k] = *zy;
            }
            (Storage::Symbols(s), DataPoint::Symbol(v)) => {
                if *v != 1 && *v != -1 {
                    return Err(Error::InvalidParameter(format!("symbol must be -1 or +1, got {v}")));
                }
                s[k] = *v;
            }
            _ => return Err(Error::MixedDataset),
        }
        Ok(out)
    }

    /// Sub-sample at the given positions, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::IndexOutOfRange { index: bad, n: self.len() });
        }
        match &self.storage {
            Storage::Labeled { dim, x, y } => {
                let mut flat = Vec::with_capacity(indices.len() * dim);
                for &i in indices {
                    flat.extend_from_slice(&x[i * dim..(i + 1) * dim]);
                }
                Dataset::labeled(flat, *dim, indices.iter().map(|&i| y[i]).collect())
            }
            Storage::Symbols(s) => Dataset::symbols(indices.iter().map(|&i| s[i]).collect()),
        }
    }
}

/// Quadratic curvature term `½ θᵀAθ − bᵀθ` with a validated PSD matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

impl QuadraticForm {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let dim = a.nrows();
        if dim == 0 || a.ncols() != dim {
            return Err(Error::InvalidParameter(format!(
                "curvature matrix must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: b.len() });
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("quadratic coefficients must be finite".into()));
        }
        let scale = a.amax().max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter("curvature matrix is not symmetric".into()));
                }
            }
        }
        let eig = SymmetricEigen::new(a.clone());
        let lambda_min = eig.eigenvalues.min();
        let lambda_max = eig.eigenvalues.max();
        if lambda_min < -1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "curvature matrix is not positive semidefinite (smallest eigenvalue {lambda_min})"
            )));
        }
        let mut flat = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                flat.push(a[(i, j)]);
            }
        }
        Ok(QuadraticForm { dim, a: flat, b, lambda_min: lambda_min.max(0.0), lambda_max })
    }

    /// Diagonal curvature `diag(d)` with `b = 0`.
    pub fn diagonal(d: &[f64]) -> Result<Self> {
        QuadraticForm::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)), vec![0.0; d.len()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.b
    }

    fn apply(&self, theta: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&self.a[i * self.dim..(i + 1) * self.dim], theta);
        }
    }

    /// `½ θᵀAθ − bᵀθ`.
    pub fn value(&self, theta: &[f64]) -> f64 {
        let mut at = vec![0.0; self.dim];
        self.apply(theta, &mut at);
        0.5 * dot(theta, &at) - dot(&self.b, theta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LossFamily {
    /// `log(1 + e^{θᵀx}) − y θᵀx` on labeled points.
    Logistic,
    /// `½ θᵀAθ − bᵀθ − (2y − 1) xᵀθ` on labeled points.
    Quadratic(QuadraticForm),
    /// `s · L · θ[1]` on symbol points.
    LinearWorstCase { lipschitz: f64 },
    /// Two-point loss: quadratic within `r/2` of the center `s·r`, linear
    /// with slope `βr/4` outside.
    LeCamConvex { beta: f64, r: f64 },
    /// Two-point loss `β/2 (θ[1] − s·r)²`.
    LeCamStronglyConvex { beta: f64, r: f64 },
}

impl LossFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::Logistic => "logistic",
            LossFamily::Quadratic(_) => "quadratic",
            LossFamily::LinearWorstCase { .. } => "linear_worstcase",
            LossFamily::LeCamConvex { .. } => "lecam_convex",
            LossFamily::LeCamStronglyConvex { .. } => "lecam_strongly_convex",
        }
    }
}

/// A loss family together with the domain size `R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    family: LossFamily,
    domain: f64,
}

/// Lipschitz constant, smoothness, strong convexity and domain size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConstants {
    pub lipschitz: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub domain: f64,
}

impl LossConstants {
    /// `β / α`, infinite when `α = 0`.
    pub fn condition_number(&self) -> f64 {
        if self.strong_convexity > 0.0 {
            self.smoothness / self.strong_convexity
        } else {
            f64::INFINITY
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl LossSpec {
    pub fn new(family: LossFamily, domain: f64) -> Result<Self> {
        positive("domain size", domain)?;
        match &family {
            LossFamily::Logistic | LossFamily::Quadratic(_) => {}
            LossFamily::LinearWorstCase { lipschitz } => positive("Lipschitz constant", *lipschitz)?,
            LossFamily::LeCamConvex { beta, r } | LossFamily::LeCamStronglyConvex { beta, r } => {
                positive("beta", *beta)?;
                positive("r", *r)?;
            }
        }
        Ok(LossSpec { family, domain })
    }

    pub fn logistic(domain: f64) -> Result<Self> {
        LossSpec::new(LossFamily::Logistic, domain)
    }

    pub fn quadratic(form: QuadraticForm, domain: f64) -> Result<Self> {
        LossSpec::new(LossFamily::Quadratic(form), domain)
    }

    pub fn linear_worstcase(lipschitz: f64, domain: f64) -> Result<Self> {
        LossSpec::new(LossFamily::LinearWorstCase { lipschitz }, domain)
    }

    pub fn lecam_convex(beta: f64, r: f64, domain: f64) -> Result<Self> {
        LossSpec::new(LossFamily::LeCamConvex { beta, r }, domain)
    }

    pub fn lecam_strongly_convex(beta: f64, r: f64, domain: f64) -> Result<Self> {
        LossSpec::new(LossFamily::LeCamStronglyConvex { beta, r }, domain)
    }

    pub fn family(&self) -> &LossFamily {
        &self.family
    }

    pub fn domain(&self) -> f64 {
        self.domain
    }

    fn mismatch(&self) -> Error {
        Error::VariantMismatch { family: self.family.name() }
    }

    /// Per-point loss on a borrowed point.
    pub fn value_at(&self, theta: &[f64], z: PointRef<'_>) -> Result<f64> {
        match (&self.family, z) {
            (LossFamily::Logistic, PointRef::Labeled { x, y }) => {
                check_dim(theta.len(), x.len())?;
                let a = dot(theta, x);
                Ok(softplus(a) - f64::from(y) * a)
            }
            (LossFamily::Quadratic(q), PointRef::Labeled { x, y }) => {
                check_dim(q.dim, theta.len())?;
                check_dim(q.dim, x.len())?;
                Ok(q.value(theta) - sign(y) * dot(x, theta))
            }
            (LossFamily::LinearWorstCase { lipschitz }, PointRef::Symbol(s)) => Ok(f64::from(s) * lipschitz * theta[0]),
            (LossFamily::LeCamConvex { beta, r }, PointRef::Symbol(s)) => {
                let c = theta[0] - f64::from(s) * r;
                if c.abs() <= 0.5 * r {
                    Ok(0.5 * beta * c * c)
                } else {
                    Ok(0.25 * beta * r * c.abs())
                }
            }
            (LossFamily::LeCamStronglyConvex { beta, r }, PointRef::Symbol(s)) => {
                let c = theta[0] - f64::from(s) * r;
                Ok(0.5 * beta * c * c)
            }
            _ => Err(self.mismatch()),
        }
    }

    /// Adds `scale · ∇l(θ; z)` to `out`.
    pub fn add_grad(&self, theta: &[f64], z: PointRef<'_>, scale: f64, out: &mut [f64]) -> Result<()> {
        check_dim(theta.len(), out.len())?;
        match (&self.family, z) {
            (LossFamily::Logistic, PointRef::Labeled { x, y }) => {
                check_dim(theta.len(), x.len())?;
                let w = scale * (sigmoid(dot(theta, x)) - f64::from(y));
                axpy(w, x, out);
            }
            (LossFamily::Quadratic(q), PointRef::Labeled { x, y }) => {
                check_dim(q.dim, theta.len())?;
                check_dim(q.dim, x.len())?;
                for (i, o) in out.iter_mut().enumerate() {
                    *o += scale * (dot(&q.a[i * q.dim..(i + 1) * q.dim], theta) - q.b[i]);
                }
                axpy(-scale * sign(y), x, out);
            }
            (LossFamily::LinearWorstCase { lipschitz }, PointRef::Symbol(s)) => {
                out[0] += scale * f64::from(s) * lipschitz;
            }
            (LossFamily::LeCamConvex { beta, r }, PointRef::Symbol(s)) => {
                let c = theta[0] - f64::from(s) * r;
                // At the kinks |c| = r/2 the linear-piece slope is used.
                let g = if c.abs() < 0.5 * r { beta * c } else { 0.25 * beta * r * c.signum() };
                out[0] += scale * g;
            }
            (LossFamily::LeCamStronglyConvex { beta, r }, PointRef::Symbol(s)) => {
                out[0] += scale * beta * (theta[0] - f64::from(s) * r);
            }
            _ => return Err(self.mismatch()),
        }
        Ok(())
    }

    fn check_sample(&self, theta: &ParamVector, sample: &Dataset) -> Result<()> {
        if sample.is_empty() {
            return Err(Error::EmptyDataset);
        }
        match (&self.family, sample.dim()) {
            (LossFamily::Logistic, Some(d)) => check_dim(d, theta.dim()),
            (LossFamily::Quadratic(q), Some(d)) => {
                check_dim(q.dim, d)?;
                check_dim(q.dim, theta.dim())
            }
            (LossFamily::Logistic | LossFamily::Quadratic(_), None) => Err(self.mismatch()),
            (_, Some(_)) => Err(self.mismatch()),
            (_, None) => Ok(()),
        }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn sign(y: u8) -> f64 {
    2.0 * f64::from(y) - 1.0
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn axpy(w: f64, x: &[f64], out: &mut [f64]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += w * v;
    }
}

/// Numerically stable `log(1 + e^a)`.
pub fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

pub fn loss_value(spec: &LossSpec, theta: &ParamVector, z: &DataPoint) -> Result<f64> {
    spec.value_at(theta.as_slice(), z.as_ref())
}

pub fn loss_grad(spec: &LossSpec, theta: &ParamVector, z: &DataPoint) -> Result<ParamVector> {
    let mut g = vec![0.0; theta.dim()];
    spec.add_grad(theta.as_slice(), z.as_ref(), 1.0, &mut g)?;
    Ok(ParamVector(g))
}

fn chunk_exec(n: usize, dim: usize) -> Exec {
    if n * dim >= PARALLEL_WORK {
        Exec::default()
    } else {
        Exec::Sequential
    }
}

/// `R_S(θ) = (1/n) Σ l(θ; z_i)`.
pub fn empirical_risk(spec: &LossSpec, theta: &ParamVector, sample: &Dataset) -> Result<f64> {
    spec.check_sample(theta, sample)?;
    let n = sample.len();
    let th = theta.as_slice();
    let parts = chunk_exec(n, theta.dim()).map(n.div_ceil(CHUNK), |c| -> Result<f64> {
        let mut acc = 0.0;
        for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
            acc += spec.value_at(th, sample.point(i))?;
        }
        Ok(acc)
    });
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total / n as f64)
}

/// `∇R_S(θ) = (1/n) Σ ∇l(θ; z_i)`.
pub fn empirical_risk_grad(spec: &LossSpec, theta: &ParamVector, sample: &Dataset) -> Result<ParamVector> {
    empirical_risk_grad_with(spec, theta, sample, chunk_exec(sample.len(), theta.dim()))
}

/// `empirical_risk_grad` with an explicit execution mode. Both modes give
/// bitwise-identical results.
pub fn empirical_risk_grad_with(spec: &LossSpec, theta: &ParamVector, sample: &Dataset, exec: Exec) -> Result<ParamVector> {
    spec.check_sample(theta, sample)?;
    let n = sample.len();
    let d = theta.dim();
    let th = theta.as_slice();
    if let LossFamily::Quadratic(q) = &spec.family {
        // The curvature part is shared by every point; only the data term is averaged.
        let mut g = vec![0.0; d];
        q.apply(th, &mut g);
        for (gi, bi) in g.iter_mut().zip(&q.b) {
            *gi -= bi;
        }
        let mut data = vec![0.0; d];
        for z in sample.iter() {
            if let PointRef::Labeled { x, y } = z {
                axpy(sign(y), x, &mut data);
            }
        }
        for (gi, u) in g.iter_mut().zip(&data) {
            *gi -= u / n as f64;
        }
        return Ok(ParamVector(g));
    }
    let parts = exec.map(n.div_ceil(CHUNK), |c| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; d];
        for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
            spec.add_grad(th, sample.point(i), 1.0, &mut acc)?;
        }
        Ok(acc)
    });
    let mut g = vec![0.0; d];
    for p in parts {
        for (gi, v) in g.iter_mut().zip(p?) {
            *gi += v;
        }
    }
    for gi in &mut g {
        *gi /= n as f64;
    }
    Ok(ParamVector(g))
}

/// Certified constants of `spec` on `sample`.
///
/// Logistic: `L = 1, β = 1/4, α = 0`, valid only when every design row has
/// norm at most 1. Quadratic: `β = λmax(A)`, `α = λmin(A)`, `L = βR`.
/// Linear: the configured `L` with `β = 0`. Le Cam convex: `L = βr/2`,
/// `α = 0`. Le Cam strongly convex: `L = βR`, `α = β`.
pub fn loss_constants(spec: &LossSpec, sample: &Dataset) -> Result<LossConstants> {
    let domain = spec.domain;
    let c = match &spec.family {
        LossFamily::Logistic => {
            let d = sample.dim().ok_or_else(|| spec.mismatch())?;
            let x = sample.design().unwrap_or(&[]);
            for (row, chunk) in x.chunks(d).enumerate() {
                let norm = dot(chunk, chunk).sqrt();
                if norm > 1.0 + 1e-12 {
                    return Err(Error::UnnormalizedDesign { row, norm });
                }
            }
            LossConstants { lipschitz: 1.0, smoothness: 0.25, strong_convexity: 0.0, domain }
        }
        LossFamily::Quadratic(q) => LossConstants {
            lipschitz: q.lambda_max * domain,
            smoothness: q.lambda_max,
            strong_convexity: q.lambda_min,
            domain,
        },
        LossFamily::LinearWorstCase { lipschitz } => {
            LossConstants { lipschitz: *lipschitz, smoothness: 0.0, strong_convexity: 0.0, domain }
        }
        LossFamily::LeCamConvex { beta, r } => {
            LossConstants { lipschitz: 0.5 * beta * r, smoothness: *beta, strong_convexity: 0.0, domain }
        }
        LossFamily::LeCamStronglyConvex { beta, .. } => {
            LossConstants { lipschitz: beta * domain, smoothness: *beta, strong_convexity: *beta, domain }
        }
    };
    Ok(c)
}

/// Scale every row of a row-major `n × dim` matrix to unit Euclidean norm.
pub fn normalize_rows(x: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || !x.len().is_multiple_of(dim) {
        return Err(Error::InvalidParameter(format!(
            "matrix of {} entries cannot have rows of length {dim}",
            x.len()
        )));
    }
    let mut out = x.to_vec();
    for (i, row) in out.chunks_mut(dim).enumerate() {
        let norm = dot(row, row).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroRow(i));
        }
        for v in row {
            *v /= norm;
        }
    }
    Ok(out)
}

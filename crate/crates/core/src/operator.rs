//! Dense complex Hermitian linear algebra.
//!
//! Every other module in the crate is built on the types here: a certified
//! Hermitian carrier, its spectral decomposition, spectral matrix functions
//! (with generalized-inverse semantics on the support), and the tensor /
//! partial-trace calculus needed for multipartite and n-copy operators.

use std::ops::Range;

use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Maximum tolerated `|A_ij - conj(A_ji)|` (relative to `max(1, max|A_ij|)`)
/// before construction fails. Smaller deviations are symmetrized away.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Eigenvalues with `|λ| <= SUPPORT_CUTOFF * max|λ|` are treated as zero.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// Adjacent eigenvalues whose gap is below this fraction of the larger one
/// are considered equal when counting distinct eigenvalues or pinching.
pub const DISTINCT_EIGENVALUE_TOLERANCE: f64 = 1e-10;

/// Gaps below `EIGEN_NOISE_FACTOR · ε · dim · radius` are round-off of the
/// eigensolver and never separate two eigenvalues.
pub const EIGEN_NOISE_FACTOR: f64 = 16.0;

/// Default cap on the dimension of any operator the crate will build.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Environment variable overriding [`DEFAULT_MAX_DIM`].
pub const BUDGET_ENV: &str = "STEINLAB_BUDGET_DIM";

#[inline]
pub(crate) fn cx(re: f64) -> c64 {
    c64::new(re, 0.0)
}

/// Memory budget expressed as a maximum operator dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_dim: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

impl Budget {
    pub fn new(max_dim: usize) -> Self {
        Self { max_dim }
    }

    /// Reads `STEINLAB_BUDGET_DIM`, falling back to the default when unset or
    /// unparsable.
    pub fn from_env() -> Self {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&d| d > 0)
            .map(Self::new)
            .unwrap_or_default()
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if dim > self.max_dim {
            Err(Error::BudgetExceeded {
                required: dim,
                limit: self.max_dim,
            })
        } else {
            Ok(())
        }
    }

    /// `base^n`, or a budget error when it would exceed the cap (or overflow).
    pub fn power_dim(&self, base: usize, n: usize) -> Result<usize> {
        let mut dim: usize = 1;
        for _ in 0..n {
            dim = dim.checked_mul(base).ok_or(Error::BudgetExceeded {
                required: usize::MAX,
                limit: self.max_dim,
            })?;
            self.check(dim)?;
        }
        Ok(dim)
    }

    /// Largest `n` with `base^n` inside the budget.
    pub fn max_power(&self, base: usize) -> usize {
        if base <= 1 {
            return usize::MAX;
        }
        let mut n = 0;
        let mut dim = 1usize;
        while let Some(next) = dim.checked_mul(base) {
            if next > self.max_dim {
                break;
            }
            dim = next;
            n += 1;
        }
        n
    }
}

/// Local dimensions of the labelled subsystems `A, B, C, ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemShape {
    factors: Vec<usize>,
}

impl SystemShape {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "subsystem dimensions must be positive, got {factors:?}"
            )));
        }
        Ok(Self { factors })
    }

    pub fn single(dim: usize) -> Self {
        Self {
            factors: vec![dim.max(1)],
        }
    }

    pub fn qubits(count: usize) -> Self {
        Self {
            factors: vec![2; count.max(1)],
        }
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    /// Shape of `n` copies laid out as `A1 B1 .. A2 B2 ..`.
    pub fn repeated(&self, n: usize) -> Self {
        let mut factors = Vec::with_capacity(self.factors.len() * n);
        for _ in 0..n {
            factors.extend_from_slice(&self.factors);
        }
        Self { factors }
    }

    pub fn concat(&self, other: &SystemShape) -> Self {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Self { factors }
    }

    pub fn select(&self, keep: &[usize]) -> Self {
        Self {
            factors: keep.iter().map(|&k| self.factors[k]).collect(),
        }
    }

    pub(crate) fn ensure_matches(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::ShapeMismatch {
                factors: self.factors.clone(),
                product: self.dim(),
                dim,
            });
        }
        Ok(())
    }

    /// Splits a flat index into per-factor digits (most significant first).
    fn digits(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &d) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % d;
            index /= d;
        }
    }
}

/// A dense complex matrix certified Hermitian at construction.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    mat: Mat<c64>,
    asymmetry: f64,
}

impl HermitianOperator {
    /// Symmetrizes `(A + A†)/2`; fails when the input deviates from
    /// Hermiticity by more than [`HERMITIAN_TOLERANCE`].
    pub fn from_matrix(mat: Mat<c64>) -> Result<Self> {
        let (rows, cols) = (mat.nrows(), mat.ncols());
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let (deviation, scale) = asymmetry(mat.as_ref());
        let tolerance = HERMITIAN_TOLERANCE * scale.max(1.0);
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(Self::symmetrized(mat, deviation))
    }

    /// For matrices that are Hermitian up to rounding by construction.
    pub(crate) fn from_matrix_trusted(mat: Mat<c64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        let (deviation, _) = asymmetry(mat.as_ref());
        Self::symmetrized(mat, deviation)
    }

    fn symmetrized(mut mat: Mat<c64>, deviation: f64) -> Self {
        let n = mat.nrows();
        for j in 0..n {
            mat[(j, j)] = cx(mat[(j, j)].re);
            for i in (j + 1)..n {
                let avg = (mat[(i, j)] + mat[(j, i)].conj()) * 0.5;
                mat[(i, j)] = avg;
                mat[(j, i)] = avg.conj();
            }
        }
        Self {
            mat,
            asymmetry: deviation,
        }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Result<Self> {
        Self::from_matrix(Mat::from_fn(dim, dim, f))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: Mat::zeros(dim, dim),
            asymmetry: 0.0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: Mat::identity(dim, dim),
            asymmetry: 0.0,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut mat = Mat::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = cx(d);
        }
        Self {
            mat,
            asymmetry: 0.0,
        }
    }

    /// `|v⟩⟨v|` (no normalization applied).
    pub fn outer(v: &[c64]) -> Self {
        let n = v.len();
        Self::from_matrix_trusted(Mat::from_fn(n, n, |i, j| v[i] * v[j].conj()))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.mat.as_ref()
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.mat
    }

    /// Asymmetry removed at construction.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            mat: Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)] * factor),
            asymmetry: self.asymmetry,
        }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.ensure_same_dim(other)?;
        Ok(Self {
            mat: Mat::from_fn(self.dim(), self.dim(), |i, j| {
                self.mat[(i, j)] * a + other.mat[(i, j)] * b
            }),
            asymmetry: 0.0,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lincomb(1.0, other, -1.0)
    }

    pub(crate) fn ensure_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    /// Plain matrix product (generally not Hermitian).
    pub fn mul(&self, other: &Self) -> Mat<c64> {
        &self.mat * &other.mat
    }

    /// `tr[self · other]`, real for Hermitian factors.
    pub fn trace_product(&self, other: &Self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            let a = self.mat.col_as_slice(j);
            let b = other.mat.col_as_slice(j);
            for i in 0..n {
                // tr[AB] = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij)
                acc += (a[i] * b[i].conj()).re;
            }
        }
        acc
    }

    /// `B · self · B†` for a general `B`.
    pub fn congruence(&self, b: MatRef<'_, c64>) -> Self {
        let tmp = b * &self.mat;
        Self::from_matrix_trusted(&tmp * b.adjoint())
    }

    /// `V† · self · V` (the operator expressed in the columns of `V`).
    pub fn in_basis(&self, v: MatRef<'_, c64>) -> Self {
        let tmp = &self.mat * v;
        Self::from_matrix_trusted(v.adjoint() * &tmp)
    }

    /// Diagonal entries of `U† · self · U`.
    pub fn diag_in_basis(&self, u: MatRef<'_, c64>) -> Vec<f64> {
        let au = &self.mat * u;
        (0..u.ncols())
            .map(|k| {
                let mut acc = 0.0;
                for i in 0..u.nrows() {
                    acc += (u[(i, k)].conj() * au[(i, k)]).re;
                }
                acc
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self.mat.as_ref())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(self.mat.as_ref(), other.mat.as_ref())
    }

    /// Frobenius norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &Self) -> f64 {
        let ab = &self.mat * &other.mat;
        let ba = &other.mat * &self.mat;
        frobenius_norm((&ab - &ba).as_ref())
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            mat: kron(self.mat.as_ref(), other.mat.as_ref()),
            asymmetry: 0.0,
        }
    }

    /// Entrywise complex conjugate (transpose for Hermitian operators).
    pub fn conj(&self) -> Self {
        Self {
            mat: Mat::from_fn(self.dim(), self.dim(), |i, j| self.mat[(i, j)].conj()),
            asymmetry: self.asymmetry,
        }
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.mat[(i, j)].norm() <= tol))
    }
}

fn asymmetry(mat: MatRef<'_, c64>) -> (f64, f64) {
    let n = mat.nrows();
    let mut deviation = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let a = mat[(i, j)];
            scale = scale.max(a.norm());
            if i >= j {
                deviation = deviation.max((a - mat[(j, i)].conj()).norm());
            }
        }
    }
    (deviation, scale)
}

pub fn frobenius_norm(mat: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..mat.ncols() {
        for i in 0..mat.nrows() {
            acc += mat[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// Kronecker product of two general matrices.
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Mat::<c64>::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for l in 0..bc {
            let col = out.col_as_slice_mut(j * bc + l);
            for i in 0..ar {
                let aij = a[(i, j)];
                if aij == c64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..br {
                    col[i * br + k] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `A^{⊗n}` subject to the dimension budget.
pub fn kron_power(a: &HermitianOperator, n: usize, budget: &Budget) -> Result<HermitianOperator> {
    if n == 0 {
        return Err(Error::InvalidArgument("tensor power needs n >= 1".into()));
    }
    budget.power_dim(a.dim(), n)?;
    let mut out = a.clone();
    for _ in 1..n {
        out = out.kron(a);
    }
    Ok(out)
}

/// Spectral decomposition with ascending eigenvalues and the matching
/// orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<c64>,
}

pub fn eig(a: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = a.dim();
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: Mat::zeros(0, 0),
        });
    }
    let evd = a
        .mat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenNoConvergence {
            dim: n,
            detail: format!("{e:?}"),
        })?;
    let s = evd.S().column_vector();
    let eigenvalues: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNoConvergence {
            dim: n,
            detail: "non-finite eigenvalue".into(),
        });
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors: evd.U().to_owned(),
    })
}

/// Which eigenvalues a spectral function is applied to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    /// Every eigenvalue.
    Full,
    /// Only eigenvalues above the support cutoff in magnitude; the rest map
    /// to zero (generalized-inverse semantics).
    SupportOnly,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> MatRef<'_, c64> {
        self.eigenvectors.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn cutoff(&self) -> f64 {
        SUPPORT_CUTOFF * self.spectral_radius()
    }

    /// Whether eigenvalue `k` is part of the (positive) support.
    pub fn in_support(&self, k: usize) -> bool {
        self.eigenvalues[k] > self.cutoff()
    }

    pub fn rank(&self) -> usize {
        let c = self.cutoff();
        self.eigenvalues.iter().filter(|&&v| v > c).count()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `Σ v_k |u_k⟩⟨u_k|` for real weights.
    pub fn synthesize(&self, weights: &[f64]) -> HermitianOperator {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (k, &w) in weights.iter().enumerate() {
            for x in scaled.col_as_slice_mut(k) {
                *x *= w;
            }
        }
        HermitianOperator::from_matrix_trusted(&scaled * self.eigenvectors.adjoint())
            .with_dim_check(n)
    }

    /// `Σ v_k |u_k⟩⟨u_k|` for complex weights (generally not Hermitian).
    pub fn synthesize_complex(&self, weights: &[c64]) -> Mat<c64> {
        let mut scaled = self.eigenvectors.clone();
        for (k, &w) in weights.iter().enumerate() {
            for x in scaled.col_as_slice_mut(k) {
                *x *= w;
            }
        }
        &scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.synthesize(&self.eigenvalues)
    }

    /// Projector onto the span of the listed eigenvectors.
    pub fn projector_onto(&self, indices: &[usize]) -> HermitianOperator {
        let n = self.dim();
        if indices.is_empty() {
            return HermitianOperator::zeros(n);
        }
        let cols = Mat::from_fn(n, indices.len(), |i, k| self.eigenvectors[(i, indices[k])]);
        HermitianOperator::from_matrix_trusted(&cols * cols.adjoint())
    }

    pub fn support_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&k| self.in_support(k)).collect()
    }

    pub fn support_projector(&self) -> HermitianOperator {
        self.projector_onto(&self.support_indices())
    }

    pub fn kernel_projector(&self) -> HermitianOperator {
        let idx: Vec<usize> = (0..self.dim()).filter(|&k| !self.in_support(k)).collect();
        self.projector_onto(&idx)
    }

    /// Applies a real scalar function spectrally.
    pub fn apply(&self, f: impl Fn(f64) -> f64, support: Support) -> Result<HermitianOperator> {
        let weights = self.function_weights(|x| cx(f(x)), support)?;
        Ok(self.synthesize(&weights.iter().map(|w| w.re).collect::<Vec<_>>()))
    }

    /// Applies a complex scalar function spectrally.
    pub fn apply_complex(&self, f: impl Fn(f64) -> c64, support: Support) -> Result<Mat<c64>> {
        let weights = self.function_weights(f, support)?;
        Ok(self.synthesize_complex(&weights))
    }

    fn function_weights(&self, f: impl Fn(f64) -> c64, support: Support) -> Result<Vec<c64>> {
        let cutoff = self.cutoff();
        self.eigenvalues
            .iter()
            .map(|&lambda| {
                if support == Support::SupportOnly && lambda.abs() <= cutoff {
                    return Ok(c64::new(0.0, 0.0));
                }
                let v = f(lambda);
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Domain { eigenvalue: lambda })
                }
            })
            .collect()
    }

    /// Function of a positive semidefinite operator restricted to its
    /// support: eigenvalues at or below the cutoff (including rounding
    /// negatives) map to zero; a genuinely negative eigenvalue is an error.
    pub fn apply_psd(&self, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
        let weights = self.psd_weights(|x| cx(f(x)))?;
        Ok(self.synthesize(&weights.iter().map(|w| w.re).collect::<Vec<_>>()))
    }

    pub fn apply_psd_complex(&self, f: impl Fn(f64) -> c64) -> Result<Mat<c64>> {
        let weights = self.psd_weights(f)?;
        Ok(self.synthesize_complex(&weights))
    }

    fn psd_weights(&self, f: impl Fn(f64) -> c64) -> Result<Vec<c64>> {
        let cutoff = self.cutoff();
        let negative_floor = -1e-9 * self.spectral_radius().max(1e-300);
        self.eigenvalues
            .iter()
            .map(|&lambda| {
                if lambda < negative_floor {
                    return Err(Error::Domain { eigenvalue: lambda });
                }
                if lambda <= cutoff {
                    return Ok(c64::new(0.0, 0.0));
                }
                let v = f(lambda);
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Domain { eigenvalue: lambda })
                }
            })
            .collect()
    }

    /// Contiguous index ranges of (numerically) equal eigenvalues.
    pub fn groups(&self) -> Vec<Range<usize>> {
        // relative gaps resolve the small eigenvalues of tensor powers,
        // which an absolute threshold would merge
        let floor = EIGEN_NOISE_FACTOR * f64::EPSILON * self.dim() as f64 * self.spectral_radius();
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.dim() {
            let (lo, hi) = if k < self.dim() { (self.eigenvalues[k - 1], self.eigenvalues[k]) } else { (0.0, 0.0) };
            let tol = (DISTINCT_EIGENVALUE_TOLERANCE * lo.abs().max(hi.abs())).max(floor).max(f64::MIN_POSITIVE);
            if k == self.dim() || hi - lo > tol {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// Number of distinct eigenvalues, `|spec(A)|`.
    pub fn distinct_count(&self) -> usize {
        self.groups().len()
    }

    /// `(eigenvalue, projector)` for every distinct eigenvalue.
    pub fn eigenprojectors(&self) -> Vec<(f64, HermitianOperator)> {
        self.groups()
            .into_iter()
            .map(|r| {
                let mean = self.eigenvalues[r.clone()].iter().sum::<f64>() / r.len() as f64;
                let idx: Vec<usize> = r.collect();
                (mean, self.projector_onto(&idx))
            })
            .collect()
    }
}

impl HermitianOperator {
    fn with_dim_check(self, n: usize) -> Self {
        debug_assert_eq!(self.dim(), n);
        self
    }
}

/// `f(A) = Σ f(λ_i) P_i`.
pub fn matrix_function(
    a: &HermitianOperator,
    f: impl Fn(f64) -> f64,
    support: Support,
) -> Result<HermitianOperator> {
    eig(a)?.apply(f, support)
}

/// Complex-valued spectral function (result is generally not Hermitian).
pub fn matrix_function_complex(
    a: &HermitianOperator,
    f: impl Fn(f64) -> c64,
    support: Support,
) -> Result<Mat<c64>> {
    eig(a)?.apply_complex(f, support)
}

/// The two objects attached to the positive spectrum of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct PositivePart {
    /// Projector `{A}_+` onto the eigenspace of strictly positive eigenvalues.
    pub projector: HermitianOperator,
    /// `Σ_{λ>0} λ P_λ`.
    pub part: HermitianOperator,
}

pub fn positive_part(a: &HermitianOperator) -> Result<PositivePart> {
    let spec = eig(a)?;
    Ok(positive_part_from(&spec))
}

pub fn positive_part_from(spec: &SpectralDecomposition) -> PositivePart {
    let idx = positive_indices(spec);
    let projector = spec.projector_onto(&idx);
    let weights: Vec<f64> = (0..spec.dim())
        .map(|k| if idx.contains(&k) { spec.eigenvalues[k] } else { 0.0 })
        .collect();
    PositivePart {
        projector,
        part: spec.synthesize(&weights),
    }
}

/// Indices of eigenvalues counted as strictly positive (above the cutoff).
pub fn positive_indices(spec: &SpectralDecomposition) -> Vec<usize> {
    let c = spec.cutoff();
    (0..spec.dim()).filter(|&k| spec.eigenvalues[k] > c).collect()
}

/// Partial trace keeping the listed factors (in their original order).
pub fn partial_trace(
    a: &HermitianOperator,
    shape: &SystemShape,
    keep: &[usize],
) -> Result<HermitianOperator> {
    shape.ensure_matches(a.dim())?;
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.iter().any(|&k| k >= shape.len()) {
        return Err(Error::InvalidArgument(format!(
            "keep indices {keep:?} out of range for {} factors",
            shape.len()
        )));
    }
    let traced: Vec<usize> = (0..shape.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let kept_dim: usize = keep_sorted.iter().map(|&k| shape.factors[k]).product();
    let traced_dim: usize = traced.iter().map(|&k| shape.factors[k]).product();

    // Group full indices by their traced multi-index; within a group the
    // position equals the kept multi-index.
    let mut groups = vec![vec![0usize; kept_dim]; traced_dim];
    let mut digits = vec![0usize; shape.len()];
    for full in 0..a.dim() {
        shape.digits(full, &mut digits);
        let kept_index = keep_sorted
            .iter()
            .fold(0, |acc, &k| acc * shape.factors[k] + digits[k]);
        let traced_index = traced
            .iter()
            .fold(0, |acc, &k| acc * shape.factors[k] + digits[k]);
        groups[traced_index][kept_index] = full;
    }
    let mut out = Mat::<c64>::zeros(kept_dim, kept_dim);
    for group in &groups {
        for (c, &fc) in group.iter().enumerate() {
            let src = a.mat.col_as_slice(fc);
            let dst = out.col_as_slice_mut(c);
            for (r, &fr) in group.iter().enumerate() {
                dst[r] += src[fr];
            }
        }
    }
    Ok(HermitianOperator::from_matrix_trusted(out))
}

/// Reorders tensor factors: factor `j` of the result is factor `order[j]`
/// of the input.
pub fn permute_subsystems(
    a: &HermitianOperator,
    shape: &SystemShape,
    order: &[usize],
) -> Result<(HermitianOperator, SystemShape)> {
    shape.ensure_matches(a.dim())?;
    let map = subsystem_permutation_map(shape, order)?;
    let n = a.dim();
    let mat = Mat::from_fn(n, n, |i, j| a.mat[(map[i], map[j])]);
    let new_shape = SystemShape {
        factors: order.iter().map(|&k| shape.factors[k]).collect(),
    };
    Ok((
        HermitianOperator {
            mat,
            asymmetry: a.asymmetry,
        },
        new_shape,
    ))
}

/// `map[new_index] = old_index` for a factor reordering.
pub(crate) fn subsystem_permutation_map(shape: &SystemShape, order: &[usize]) -> Result<Vec<usize>> {
    let m = shape.len();
    let mut seen = vec![false; m];
    if order.len() != m || order.iter().any(|&k| k >= m || std::mem::replace(&mut seen[k], true)) {
        return Err(Error::InvalidArgument(format!(
            "{order:?} is not a permutation of {m} factors"
        )));
    }
    let new_factors: Vec<usize> = order.iter().map(|&k| shape.factors[k]).collect();
    let new_shape = SystemShape {
        factors: new_factors,
    };
    let mut new_digits = vec![0usize; m];
    let mut old_digits = vec![0usize; m];
    Ok((0..shape.dim())
        .map(|new_index| {
            new_shape.digits(new_index, &mut new_digits);
            for (j, &k) in order.iter().enumerate() {
                old_digits[k] = new_digits[j];
            }
            old_digits
                .iter()
                .zip(&shape.factors)
                .fold(0, |acc, (&dgt, &d)| acc * d + dgt)
        })
        .collect())
}

/// First divided differences `Γ_kl = (f(λ_k) − f(λ_l))/(λ_k − λ_l)` (and
/// `f'(λ_k)` on the diagonal / for near-equal pairs), row-major. Entries
/// touching an eigenvalue at or below `cutoff` are zero, so the Fréchet
/// derivative `U (Γ ∘ U†HU) U†` acts on the support only.
pub fn divided_differences(
    eigenvalues: &[f64],
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    cutoff: f64,
) -> Vec<f64> {
    let n = eigenvalues.len();
    let values: Vec<f64> = eigenvalues.iter().map(|&x| if x > cutoff { f(x) } else { 0.0 }).collect();
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        let a = eigenvalues[k];
        if a <= cutoff {
            continue;
        }
        for l in 0..n {
            let b = eigenvalues[l];
            if b <= cutoff {
                continue;
            }
            let gap = a - b;
            out[k * n + l] = if gap.abs() <= 1e-6 * a.abs().max(b.abs()) {
                df(0.5 * (a + b))
            } else {
                (values[k] - values[l]) / gap
            };
        }
    }
    out
}

/// Sum of singular values of a general complex matrix.
pub fn trace_norm(mat: MatRef<'_, c64>) -> Result<f64> {
    let sv = mat.singular_values().map_err(|_| Error::SvdNoConvergence {
        rows: mat.nrows(),
        cols: mat.ncols(),
    })?;
    Ok(sv.iter().sum())
}

/// Sum of absolute eigenvalues.
pub fn trace_norm_hermitian(a: &HermitianOperator) -> Result<f64> {
    Ok(eig(a)?.eigenvalues.iter().map(|v| v.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn herm(dim: usize, seed: u64) -> HermitianOperator {
        // small deterministic LCG, enough for unit tests
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let raw = Mat::from_fn(dim, dim, |_, _| c64::new(next(), next()));
        HermitianOperator::from_matrix_trusted(&raw + raw.adjoint())
    }

    #[test]
    fn eig_of_diagonal() {
        let d = eig(&HermitianOperator::from_diagonal(&[0.75, 0.25])).unwrap();
        assert!((d.eigenvalues()[0] - 0.25).abs() < 1e-15);
        assert!((d.eigenvalues()[1] - 0.75).abs() < 1e-15);
        let projs = d.eigenprojectors();
        assert_eq!(projs.len(), 2);
        assert!((projs[0].1.get(1, 1).re - 1.0).abs() < 1e-12);
        assert!((projs[1].1.get(0, 0).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_has_one_distinct_eigenvalue() {
        let d = eig(&HermitianOperator::identity(4)).unwrap();
        assert_eq!(d.distinct_count(), 1);
        assert!(d.eigenvalues().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn reconstruction_and_projectors() {
        let a = herm(6, 3);
        let d = eig(&a).unwrap();
        let r = d.reconstruct();
        assert!(r.sub(&a).unwrap().frobenius_norm() <= 1e-9 * a.frobenius_norm());
        let projs = d.eigenprojectors();
        for (i, (_, p)) in projs.iter().enumerate() {
            let p2 = HermitianOperator::from_matrix_trusted(p.mul(p));
            assert!(p2.max_abs_diff(p) < 1e-9);
            for (_, q) in projs.iter().skip(i + 1) {
                assert!(frobenius_norm(p.mul(q).as_ref()) < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = Mat::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { cx(1.0) } else { cx(0.0) });
        assert!(matches!(
            HermitianOperator::from_matrix(m),
            Err(Error::NotHermitian { .. })
        ));
        let tiny = Mat::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { cx(1e-12) } else { cx(0.0) });
        let h = HermitianOperator::from_matrix(tiny).unwrap();
        assert!(h.asymmetry() > 0.0);
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
    }

    #[test]
    fn matrix_function_examples() {
        let l = matrix_function(&HermitianOperator::from_diagonal(&[0.5, 0.5]), f64::log2, Support::Full)
            .unwrap();
        assert!((l.get(0, 0).re + 1.0).abs() < 1e-14 && (l.get(1, 1).re + 1.0).abs() < 1e-14);

        let p = HermitianOperator::from_diagonal(&[1.0, 0.0]);
        let inv_sqrt = matrix_function(&p, |x| x.powf(-0.5), Support::SupportOnly).unwrap();
        assert!(inv_sqrt.max_abs_diff(&p) < 1e-14);

        let s = matrix_function(&HermitianOperator::from_diagonal(&[4.0, 9.0]), f64::sqrt, Support::Full)
            .unwrap();
        assert!(s.max_abs_diff(&HermitianOperator::from_diagonal(&[2.0, 3.0])) < 1e-13);
    }

    #[test]
    fn matrix_function_domain_error_names_eigenvalue() {
        let a = HermitianOperator::from_diagonal(&[-0.5, 1.0]);
        match matrix_function(&a, f64::ln, Support::SupportOnly) {
            Err(Error::Domain { eigenvalue }) => assert!((eigenvalue + 0.5).abs() < 1e-12),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn exp_log_roundtrip_full_rank() {
        let a = herm(4, 9);
        let spec = eig(&a).unwrap();
        // shift to make it positive definite
        let shifted = spec.apply(|x| x - spec.min_eigenvalue() + 0.1, Support::Full).unwrap();
        let log = matrix_function(&shifted, f64::ln, Support::Full).unwrap();
        let back = matrix_function(&log, f64::exp, Support::Full).unwrap();
        assert!(back.max_abs_diff(&shifted) < 1e-8);
    }

    #[test]
    fn positive_part_examples() {
        let pp = positive_part(&HermitianOperator::from_diagonal(&[1.0, -1.0])).unwrap();
        assert!(pp.projector.max_abs_diff(&HermitianOperator::from_diagonal(&[1.0, 0.0])) < 1e-14);
        assert!(pp.part.max_abs_diff(&HermitianOperator::from_diagonal(&[1.0, 0.0])) < 1e-14);

        let a = herm(5, 1);
        let spec = eig(&a).unwrap();
        let traceless = spec
            .apply(|x| x, Support::Full)
            .unwrap()
            .lincomb(1.0, &HermitianOperator::identity(5), -a.trace() / 5.0)
            .unwrap();
        let pp = positive_part(&traceless).unwrap();
        let expect: f64 = eig(&traceless).unwrap().eigenvalues().iter().filter(|&&v| v > 0.0).sum();
        assert!((pp.part.trace() - expect).abs() < 1e-10);
    }

    #[test]
    fn kron_power_examples() {
        let half = HermitianOperator::from_diagonal(&[0.5, 0.5]);
        let p = kron_power(&half, 3, &Budget::default()).unwrap();
        assert!(p.max_abs_diff(&HermitianOperator::from_diagonal(&[0.125; 8])) < 1e-15);
        let e0 = HermitianOperator::from_diagonal(&[1.0, 0.0]);
        let p = kron_power(&e0, 2, &Budget::default()).unwrap();
        assert!(p.max_abs_diff(&HermitianOperator::from_diagonal(&[1.0, 0.0, 0.0, 0.0])) < 1e-15);
        assert!(matches!(
            kron_power(&half, 13, &Budget::default()),
            Err(Error::BudgetExceeded { required: 8192, limit: 4096 })
        ));
    }

    #[test]
    fn partial_trace_bell_and_product() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = HermitianOperator::outer(&[cx(s), cx(0.0), cx(0.0), cx(s)]);
        let shape = SystemShape::qubits(2);
        let a = partial_trace(&bell, &shape, &[0]).unwrap();
        assert!(a.max_abs_diff(&HermitianOperator::from_diagonal(&[0.5, 0.5])) < 1e-15);

        let ra = HermitianOperator::from_diagonal(&[0.3, 0.7]);
        let rb = HermitianOperator::from_diagonal(&[0.1, 0.2, 0.7]);
        let prod = ra.kron(&rb);
        let shape = SystemShape::new(vec![2, 3]).unwrap();
        assert!(partial_trace(&prod, &shape, &[0]).unwrap().max_abs_diff(&ra) < 1e-15);
        assert!(partial_trace(&prod, &shape, &[1]).unwrap().max_abs_diff(&rb) < 1e-15);
        assert!(matches!(
            partial_trace(&prod, &SystemShape::qubits(2), &[0]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn permute_subsystems_swaps_factors() {
        let ra = HermitianOperator::from_diagonal(&[0.3, 0.7]);
        let rb = HermitianOperator::from_diagonal(&[0.1, 0.2, 0.7]);
        let shape = SystemShape::new(vec![2, 3]).unwrap();
        let (swapped, new_shape) = permute_subsystems(&ra.kron(&rb), &shape, &[1, 0]).unwrap();
        assert_eq!(new_shape.factors(), &[3, 2]);
        assert!(swapped.max_abs_diff(&rb.kron(&ra)) < 1e-15);
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm_hermitian(&HermitianOperator::from_diagonal(&[1.0, -2.0])).unwrap() - 3.0).abs() < 1e-14);
        let m = HermitianOperator::from_diagonal(&[1.0, -2.0]);
        assert!((trace_norm(m.matrix()).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn budget_from_env_and_power() {
        let b = Budget::new(64);
        assert_eq!(b.max_power(2), 6);
        assert!(b.power_dim(4, 3).is_ok());
        assert!(b.power_dim(4, 4).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn positive_part_decomposes(seed in 0u64..10_000, dim in 1usize..6) {
            let a = herm(dim, seed);
            let plus = positive_part(&a).unwrap().part;
            let minus = positive_part(&a.scale(-1.0)).unwrap().part;
            prop_assert!(plus.sub(&minus).unwrap().max_abs_diff(&a) < 1e-10);
        }

        #[test]
        fn partial_trace_is_linear_and_trace_preserving(seed in 0u64..10_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let x = herm(8, seed);
            let y = herm(8, seed + 17);
            let shape = SystemShape::qubits(3);
            let z = x.lincomb(a, &y, b).unwrap();
            let lhs = partial_trace(&z, &shape, &[0, 2]).unwrap();
            let rhs = partial_trace(&x, &shape, &[0, 2]).unwrap()
                .lincomb(a, &partial_trace(&y, &shape, &[0, 2]).unwrap(), b).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            prop_assert!((lhs.trace() - z.trace()).abs() < 1e-12);
            let all = partial_trace(&z, &shape, &[]).unwrap();
            prop_assert!((all.get(0, 0).re - z.trace()).abs() < 1e-12);
        }
    }
}

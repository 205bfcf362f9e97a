//! Scalar information measures: entropies, relative entropies, Rényi
//! families, pinching, measured relative entropy brackets, Chernoff
//! information and coherence measures. All logarithms are base 2.

use std::f64::consts::LN_2;

use faer::{c64, Mat, MatRef};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{self, eig, HermitianOperator, SpectralDecomposition};
use crate::optim::{self, PgdOptions};
use crate::states::{incoherent_projection, random_unitary, DensityOperator, FiniteMixture};

/// Slightly negative divergences of states within this margin are clipped.
pub const NEGATIVE_CLIP: f64 = 1e-9;

/// Support mass below which `supp ρ ⊆ supp σ` is considered satisfied.
pub const SUPPORT_LEAK_TOLERANCE: f64 = 1e-10;

/// `tr[ρ^s σ^{1−s}]` below this value counts as orthogonal supports.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-14;

/// Golden-section tolerance on the Chernoff optimizer.
pub const CHERNOFF_S_TOLERANCE: f64 = 1e-8;

/// A divergence value in bits, with an explicit infinity flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    #[serde(with = "crate::report::extended_float")]
    pub value: f64,
    pub finite: bool,
    pub method: String,
    pub tolerance: f64,
    /// Amount by which a slightly negative raw value was raised to zero.
    #[serde(default)]
    pub clipped: f64,
}

impl DivergenceValue {
    pub fn finite(value: f64, method: &str, tolerance: f64) -> Self {
        Self {
            value,
            finite: true,
            method: method.to_owned(),
            tolerance,
            clipped: 0.0,
        }
    }

    pub fn infinite(method: &str) -> Self {
        Self {
            value: f64::INFINITY,
            finite: false,
            method: method.to_owned(),
            tolerance: 0.0,
            clipped: 0.0,
        }
    }

    pub fn from_raw(value: f64, method: &str, tolerance: f64) -> Self {
        if value.is_infinite() && value > 0.0 {
            Self::infinite(method)
        } else {
            Self::finite(value, method, tolerance)
        }
    }

    /// Applies the non-negativity convention for divergences of states.
    fn clip_nonnegative(mut self) -> Self {
        if self.finite && self.value < 0.0 && self.value >= -NEGATIVE_CLIP {
            self.clipped = -self.value;
            self.value = 0.0;
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.finite
    }
}

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// `H(ρ) = −tr ρ log ρ` from a spectrum.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    let cutoff = operator::SUPPORT_CUTOFF * eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    -eigenvalues
        .iter()
        .filter(|&&v| v > cutoff)
        .map(|&v| xlog2x(v))
        .sum::<f64>()
}

pub fn von_neumann(rho: &DensityOperator) -> Result<f64> {
    Ok(entropy_of_spectrum(eig(rho.op())?.eigenvalues()).max(0.0))
}

/// `D(A‖B)` for positive semidefinite operators (no normalization assumed,
/// no clipping): `tr A log A − tr A log B`, `+∞` when `A` leaks out of
/// `supp B`.
pub fn rel_entropy_operators(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    a.ensure_same_dim(b)?;
    let sa = eig(a)?;
    let sb = eig(b)?;
    rel_entropy_spectra(a, &sa, &sb)
}

/// Same as [`rel_entropy_operators`] with precomputed spectra.
pub fn rel_entropy_spectra(
    a: &HermitianOperator,
    sa: &SpectralDecomposition,
    sb: &SpectralDecomposition,
) -> Result<f64> {
    let diag = a.diag_in_basis(sb.eigenvectors());
    let scale = a.trace().abs().max(f64::MIN_POSITIVE);
    let mut leak = 0.0;
    let mut cross = 0.0;
    for (k, &mu) in sb.eigenvalues().iter().enumerate() {
        if sb.in_support(k) {
            cross += diag[k] * mu.log2();
        } else {
            leak += diag[k].max(0.0);
        }
    }
    if leak > SUPPORT_LEAK_TOLERANCE * scale {
        return Ok(f64::INFINITY);
    }
    let neg_entropy: f64 = sa
        .eigenvalues()
        .iter()
        .enumerate()
        .filter(|&(k, _)| sa.in_support(k))
        .map(|(_, &v)| xlog2x(v))
        .sum();
    Ok(neg_entropy - cross)
}

pub fn rel_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DivergenceValue> {
    let raw = rel_entropy_operators(rho.op(), sigma.op())?;
    Ok(DivergenceValue::from_raw(raw, "relative_entropy", operator::SUPPORT_CUTOFF).clip_nonnegative())
}

fn check_factors(rho: &DensityOperator, parts: usize) -> Result<()> {
    if rho.shape().len() != parts {
        return Err(Error::ShapeMismatch {
            factors: rho.shape().factors().to_vec(),
            product: rho.shape().dim(),
            dim: rho.dim(),
        });
    }
    Ok(())
}

/// `I(A:B) = H(A) + H(B) − H(AB)` for a two-factor state.
pub fn mutual_info(rho_ab: &DensityOperator) -> Result<f64> {
    check_factors(rho_ab, 2)?;
    let ha = von_neumann(&rho_ab.partial_trace(&[0])?)?;
    let hb = von_neumann(&rho_ab.partial_trace(&[1])?)?;
    Ok(ha + hb - von_neumann(rho_ab)?)
}

/// `I(A:B|C) = H(AC) + H(BC) − H(ABC) − H(C)` for a three-factor state.
pub fn cond_mutual_info(rho_abc: &DensityOperator) -> Result<f64> {
    check_factors(rho_abc, 3)?;
    let hac = von_neumann(&rho_abc.partial_trace(&[0, 2])?)?;
    let hbc = von_neumann(&rho_abc.partial_trace(&[1, 2])?)?;
    let hc = von_neumann(&rho_abc.partial_trace(&[2])?)?;
    let habc = von_neumann(rho_abc)?;
    let value = hac + hbc - habc - hc;
    debug_assert!(value >= -1e-8, "strong subadditivity violated: {value}");
    Ok(value)
}

/// `Σ_i p_i H(ρ_i) + log₂ N − H(Σ_i p_i ρ_i)` for an `N`-component mixture;
/// entropy quasi-convexity says this is nonnegative.
pub fn mixture_entropy_slack(m: &FiniteMixture) -> Result<f64> {
    let mut avg = 0.0;
    for (w, c) in m.weights().iter().zip(m.components()) {
        avg += w * von_neumann(c)?;
    }
    Ok(avg + (m.len() as f64).log2() - von_neumann(&m.mean())?)
}

/// `|⟨u_i|v_j⟩|²` for the eigenbases of two operators, row-major over `i`.
fn overlaps(u: MatRef<'_, c64>, v: MatRef<'_, c64>) -> Vec<f64> {
    let w = u.adjoint() * v;
    let (r, c) = (w.nrows(), w.ncols());
    let mut out = vec![0.0; r * c];
    for j in 0..c {
        for i in 0..r {
            out[i * c + j] = w[(i, j)].norm_sqr();
        }
    }
    out
}

/// Eigen-overlap data for evaluating `tr[ρ^s σ^{1−s}]` at many `s`.
#[derive(Clone, Debug)]
pub struct PetzOverlap {
    rho: Vec<f64>,
    sigma: Vec<f64>,
    weights: Vec<f64>,
    /// `tr[ρ Π_ker σ]`.
    leak: f64,
}

impl PetzOverlap {
    pub fn new(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<Self> {
        rho.ensure_same_dim(sigma)?;
        Ok(Self::from_spectra(&eig(rho)?, &eig(sigma)?))
    }

    pub fn from_spectra(sr: &SpectralDecomposition, ss: &SpectralDecomposition) -> Self {
        let rho_idx = sr.support_indices();
        let sigma_idx: Vec<usize> = ss.support_indices();
        let all = overlaps(sr.eigenvectors(), ss.eigenvectors());
        let n = ss.dim();
        let mut weights = Vec::with_capacity(rho_idx.len() * sigma_idx.len());
        let mut leak = 0.0;
        for &i in &rho_idx {
            for j in 0..n {
                if ss.in_support(j) {
                    weights.push(all[i * n + j]);
                } else {
                    leak += sr.eigenvalues()[i] * all[i * n + j];
                }
            }
        }
        Self {
            rho: rho_idx.iter().map(|&i| sr.eigenvalues()[i]).collect(),
            sigma: sigma_idx.iter().map(|&j| ss.eigenvalues()[j]).collect(),
            weights,
            leak,
        }
    }

    /// `Σ_ij λ_i^s μ_j^{1−s} |⟨u_i|v_j⟩|²` over the supports (so that
    /// `s = 0` gives `tr[Π_ρ σ]` and `s = 1` gives `tr[ρ Π_σ]`).
    pub fn quasi(&self, s: f64) -> f64 {
        let m = self.sigma.len();
        let sig: Vec<f64> = self.sigma.iter().map(|&mu| mu.powf(1.0 - s)).collect();
        let mut acc = 0.0;
        for (i, &lam) in self.rho.iter().enumerate() {
            let ls = lam.powf(s);
            let row = &self.weights[i * m..(i + 1) * m];
            acc += ls * row.iter().zip(&sig).map(|(w, m)| w * m).sum::<f64>();
        }
        acc
    }

    pub fn support_leak(&self) -> f64 {
        self.leak
    }

    /// `D_s` in bits, `+∞` under the support conventions.
    pub fn divergence(&self, s: f64) -> f64 {
        if s > 1.0 && self.leak > SUPPORT_LEAK_TOLERANCE {
            return f64::INFINITY;
        }
        let q = self.quasi(s);
        if q <= ORTHOGONALITY_TOLERANCE {
            return f64::INFINITY;
        }
        q.log2() / (s - 1.0)
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0) || (s - 1.0).abs() < 1e-15 || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("Rényi order {s} must lie in (0,1)∪(1,∞)")));
    }
    Ok(())
}

/// Petz Rényi divergence `log tr[ρ^s σ^{1−s}]/(s−1)`.
pub fn petz_renyi(rho: &DensityOperator, sigma: &DensityOperator, s: f64) -> Result<DivergenceValue> {
    check_order(s)?;
    let raw = PetzOverlap::new(rho.op(), sigma.op())?.divergence(s);
    Ok(DivergenceValue::from_raw(raw, "petz_renyi", operator::SUPPORT_CUTOFF).clip_nonnegative())
}

/// `tr[(σ^{(1−s)/2s} ρ σ^{(1−s)/2s})^s]` with generalized powers on `supp σ`.
pub fn sandwiched_quasi(rho: &HermitianOperator, sigma_spec: &SpectralDecomposition, s: f64) -> Result<f64> {
    let a = (1.0 - s) / (2.0 * s);
    let sa = sigma_spec.apply_psd(|x| x.powf(a))?;
    let x = rho.congruence(sa.matrix());
    let spec = eig(&x)?;
    let cutoff = spec.cutoff();
    Ok(spec
        .eigenvalues()
        .iter()
        .filter(|&&v| v > cutoff)
        .map(|&v| v.powf(s))
        .sum())
}

pub fn sandwiched_renyi(rho: &DensityOperator, sigma: &DensityOperator, s: f64) -> Result<DivergenceValue> {
    check_order(s)?;
    rho.op().ensure_same_dim(sigma.op())?;
    let ss = eig(sigma.op())?;
    if s > 1.0 && support_leak(rho.op(), &ss) > SUPPORT_LEAK_TOLERANCE {
        return Ok(DivergenceValue::infinite("sandwiched_renyi"));
    }
    let q = sandwiched_quasi(rho.op(), &ss, s)?;
    let raw = if q <= ORTHOGONALITY_TOLERANCE {
        f64::INFINITY
    } else {
        q.log2() / (s - 1.0)
    };
    Ok(DivergenceValue::from_raw(raw, "sandwiched_renyi", operator::SUPPORT_CUTOFF).clip_nonnegative())
}

/// `tr[ρ Π_ker σ]`.
pub fn support_leak(rho: &HermitianOperator, sigma_spec: &SpectralDecomposition) -> f64 {
    let diag = rho.diag_in_basis(sigma_spec.eigenvectors());
    (0..sigma_spec.dim())
        .filter(|&k| !sigma_spec.in_support(k))
        .map(|k| diag[k].max(0.0))
        .sum()
}

/// The pinching channel `X ↦ Σ_λ P_λ X P_λ` of a fixed operator.
#[derive(Clone, Debug)]
pub struct Pinching {
    spec: SpectralDecomposition,
    labels: Vec<usize>,
    count: usize,
}

impl Pinching {
    pub fn new(omega: &HermitianOperator) -> Result<Self> {
        Ok(Self::from_spectrum(eig(omega)?))
    }

    pub fn from_spectrum(spec: SpectralDecomposition) -> Self {
        let groups = spec.groups();
        let mut labels = vec![0; spec.dim()];
        for (g, range) in groups.iter().enumerate() {
            for k in range.clone() {
                labels[k] = g;
            }
        }
        Self {
            count: groups.len(),
            spec,
            labels,
        }
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spec
    }

    /// Number of distinct eigenvalues.
    pub fn spectrum_count(&self) -> usize {
        self.count
    }

    pub fn apply(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        if x.dim() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                left: self.spec.dim(),
                right: x.dim(),
            });
        }
        let v = self.spec.eigenvectors();
        let mut y = x.in_basis(v).into_matrix();
        for j in 0..y.ncols() {
            for i in 0..y.nrows() {
                if self.labels[i] != self.labels[j] {
                    y[(i, j)] = c64::new(0.0, 0.0);
                }
            }
        }
        Ok(HermitianOperator::from_matrix_trusted(y).congruence(v))
    }
}

pub fn pinch(omega: &HermitianOperator, x: &HermitianOperator) -> Result<HermitianOperator> {
    Pinching::new(omega)?.apply(x)
}

pub fn spectrum_count(omega: &HermitianOperator) -> Result<usize> {
    Ok(eig(omega)?.distinct_count())
}

/// Result of the measured relative entropy search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasuredBracket {
    /// `D(P_σ(ρ)‖σ)`, attained by an explicit measurement.
    pub lower: DivergenceValue,
    /// Best value found by local search over orthonormal bases.
    pub best: DivergenceValue,
    /// `D(ρ‖σ)`.
    pub upper: DivergenceValue,
    pub restarts: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct MeasuredOptions {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub rel_improvement: f64,
}

impl Default for MeasuredOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_sweeps: 50,
            rel_improvement: 1e-9,
        }
    }
}

/// `D(P_σ(ρ)‖σ)`: the sound lower side of the measured bracket.
pub fn measured_lower_bound(rho: &DensityOperator, sigma: &DensityOperator) -> Result<DivergenceValue> {
    let pinching = Pinching::new(sigma.op())?;
    let pinched = pinching.apply(rho.op())?;
    let raw = rel_entropy_spectra(&pinched, &eig(&pinched)?, pinching.spectrum())?;
    Ok(DivergenceValue::from_raw(raw, "pinching_lower_bound", operator::SUPPORT_CUTOFF).clip_nonnegative())
}

fn classical_kl(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        if pk <= 0.0 {
            continue;
        }
        if qk <= 0.0 {
            return f64::INFINITY;
        }
        acc += pk * (pk / qk).log2();
    }
    acc
}

fn pair_term(p: f64, q: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if q <= 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).log2()
    }
}

/// Basis diagonalizing `σ` and, inside each eigenspace of `σ`, the
/// compression of `ρ` — measuring in it yields `D(P_σ(ρ)‖σ)`.
fn pinched_basis(rho: &HermitianOperator, pinching: &Pinching) -> Result<Mat<c64>> {
    let spec = pinching.spectrum();
    let v = spec.eigenvectors();
    let n = spec.dim();
    let mut basis = Mat::<c64>::zeros(n, n);
    for range in spec.groups() {
        let cols = Mat::from_fn(n, range.len(), |i, k| v[(i, range.start + k)]);
        let block = HermitianOperator::from_matrix_trusted(&(cols.adjoint() * rho.matrix()) * &cols);
        let inner = eig(&block)?;
        let rotated = &cols * inner.eigenvectors();
        for k in 0..range.len() {
            for i in 0..n {
                basis[(i, range.start + k)] = rotated[(i, k)];
            }
        }
    }
    Ok(basis)
}

struct JacobiSearch {
    r: Mat<c64>,
    s: Mat<c64>,
}

impl JacobiSearch {
    fn new(rho: &HermitianOperator, sigma: &HermitianOperator, basis: MatRef<'_, c64>) -> Self {
        Self {
            r: rho.in_basis(basis).into_matrix(),
            s: sigma.in_basis(basis).into_matrix(),
        }
    }

    fn value(&self) -> f64 {
        let n = self.r.nrows();
        let p: Vec<f64> = (0..n).map(|k| self.r[(k, k)].re.max(0.0)).collect();
        let q: Vec<f64> = (0..n).map(|k| self.s[(k, k)].re.max(0.0)).collect();
        classical_kl(&p, &q)
    }

    /// Two-outcome objective after rotating the `(a, b)` plane to
    /// `v = (cos θ, e^{iφ} sin θ)`.
    fn pair_objective(block_r: [f64; 4], block_s: [f64; 4], theta: f64, phi: f64) -> f64 {
        // block = [aa, re ab, im ab, bb]
        let (c, sn) = (theta.cos(), theta.sin());
        let eval = |b: [f64; 4]| {
            let cross = b[1] * phi.cos() + b[2] * phi.sin();
            let pa = c * c * b[0] + sn * sn * b[3] + 2.0 * c * sn * cross;
            (pa.max(0.0), (b[0] + b[3] - pa).max(0.0))
        };
        let (pa, pb) = eval(block_r);
        let (qa, qb) = eval(block_s);
        pair_term(pa, qa) + pair_term(pb, qb)
    }

    fn block(m: &Mat<c64>, a: usize, b: usize) -> [f64; 4] {
        // v†Mv with v = c e_a + e^{iφ} s e_b has cross term 2cs·Re(M_ab e^{iφ})
        let ab = m[(a, b)];
        [m[(a, a)].re, ab.re, -ab.im, m[(b, b)].re]
    }

    fn rotate(m: &mut Mat<c64>, a: usize, b: usize, theta: f64, phi: f64) {
        // new basis vectors: u_a' = c u_a + e^{iφ} s u_b, u_b' = −e^{−iφ} s u_a + c u_b
        let (c, sn) = (theta.cos(), theta.sin());
        let e = c64::new(phi.cos(), phi.sin());
        let n = m.nrows();
        // columns: M ← M G
        for i in 0..n {
            let (ma, mb) = (m[(i, a)], m[(i, b)]);
            m[(i, a)] = ma * c + mb * e * sn;
            m[(i, b)] = -(ma * e.conj()) * sn + mb * c;
        }
        // rows: M ← G† M
        for j in 0..n {
            let (ma, mb) = (m[(a, j)], m[(b, j)]);
            m[(a, j)] = ma * c + mb * e.conj() * sn;
            m[(b, j)] = -(ma * e) * sn + mb * c;
        }
    }

    fn optimize_pair(&mut self, a: usize, b: usize) -> f64 {
        let br = Self::block(&self.r, a, b);
        let bs = Self::block(&self.s, a, b);
        let current = Self::pair_objective(br, bs, 0.0, 0.0);
        let f = |t: f64, p: f64| Self::pair_objective(br, bs, t, p);
        let (mut bt, mut bp, mut best) = (0.0, 0.0, current);
        let half_pi = std::f64::consts::FRAC_PI_2;
        let tau = std::f64::consts::TAU;
        for i in 1..=12 {
            let t = half_pi * i as f64 / 12.0;
            for j in 0..16 {
                let p = tau * j as f64 / 16.0;
                let v = f(t, p);
                if v.is_finite() && v > best {
                    (bt, bp, best) = (t, p, v);
                }
            }
        }
        // pattern search polish
        let mut step = half_pi / 24.0;
        let mut budget = 400;
        while step > 1e-10 && budget > 0 {
            let mut moved = false;
            for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                budget -= 1;
                let v = f(bt + dt, bp + dp);
                // ignore round-off "improvements", which can otherwise walk
                // at the smallest step indefinitely
                if v.is_finite() && v > best + 1e-15 * best.abs() {
                    (bt, bp, best) = (bt + dt, bp + dp, v);
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        if best > current && best.is_finite() {
            Self::rotate(&mut self.r, a, b, bt, bp);
            Self::rotate(&mut self.s, a, b, bt, bp);
            best - current
        } else {
            0.0
        }
    }

    fn run(&mut self, opts: &MeasuredOptions) -> f64 {
        let n = self.r.nrows();
        let mut value = self.value();
        for _ in 0..opts.max_sweeps {
            for a in 0..n {
                for b in (a + 1)..n {
                    self.optimize_pair(a, b);
                }
            }
            let next = self.value();
            let improved = next - value;
            value = next;
            if !(improved > opts.rel_improvement * value.abs().max(1e-300)) {
                break;
            }
        }
        value
    }
}

/// Bracket `D(P_σ(ρ)‖σ) ≤ best ≤ D(ρ‖σ)` for the measured relative entropy.
pub fn measured_rel_entropy<R: Rng + ?Sized>(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    opts: &MeasuredOptions,
    rng: &mut R,
) -> Result<MeasuredBracket> {
    let upper = rel_entropy(rho, sigma)?;
    let lower = measured_lower_bound(rho, sigma)?;
    if !upper.finite || !lower.finite {
        return Ok(MeasuredBracket {
            best: DivergenceValue::infinite("measured_search"),
            lower,
            upper,
            restarts: 0,
        });
    }
    let pinching = Pinching::new(sigma.op())?;
    let n = rho.dim();
    let mut starts = vec![pinched_basis(rho.op(), &pinching)?];
    starts.push(eig(rho.op())?.eigenvectors().to_owned());
    while starts.len() < opts.restarts.max(1) {
        starts.push(random_unitary(rng, n));
    }
    starts.truncate(opts.restarts.max(1));
    let mut best = lower.value;
    for basis in &starts {
        let mut search = JacobiSearch::new(rho.op(), sigma.op(), basis.as_ref());
        let v = search.run(opts);
        if v.is_finite() && v > best {
            best = v;
        }
    }
    // a measured value above D can only be round-off
    best = best.min(upper.value);
    Ok(MeasuredBracket {
        best: DivergenceValue::finite(best, "measured_search", opts.rel_improvement),
        lower,
        upper,
        restarts: starts.len(),
    })
}

/// `C(ρ,σ) = sup_{s∈[0,1]} −log tr[ρ^s σ^{1−s}]` with its maximizer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChernoffValue {
    pub value: DivergenceValue,
    pub argmax: f64,
}

/// Golden-section maximization of a concave function on `[lo, hi]`,
/// comparing against the endpoints.
pub fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

pub fn chernoff(rho: &DensityOperator, sigma: &DensityOperator) -> Result<ChernoffValue> {
    let overlap = PetzOverlap::new(rho.op(), sigma.op())?;
    if overlap.quasi(0.5) <= ORTHOGONALITY_TOLERANCE {
        return Ok(ChernoffValue {
            value: DivergenceValue::infinite("chernoff"),
            argmax: 0.5,
        });
    }
    let (s, v) = golden_max(|s| -overlap.quasi(s).log2(), 0.0, 1.0, CHERNOFF_S_TOLERANCE);
    Ok(ChernoffValue {
        value: DivergenceValue::finite(v, "chernoff", CHERNOFF_S_TOLERANCE).clip_nonnegative(),
        argmax: s,
    })
}

/// Coherence measure selector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CoherenceKind {
    RelativeEntropy,
    Petz(f64),
    Sandwiched(f64),
}

/// `D_C(ρ) = D(ρ‖ρ_diag)`.
pub fn rel_entropy_of_coherence(rho: &DensityOperator) -> Result<DivergenceValue> {
    let mut v = rel_entropy(rho, &incoherent_projection(rho))?;
    v.method = "coherence_relative_entropy".into();
    Ok(v)
}

fn simplex_floor(q: &[f64]) -> Vec<f64> {
    q.iter().map(|&x| x.max(1e-300)).collect()
}

/// Petz Rényi coherence `min_q D_s(ρ‖diag q)`: Hölder candidate
/// `q_c ∝ ⟨c|ρ^s|c⟩^{1/s}` cross-checked by projected gradient.
pub fn petz_renyi_coherence(rho: &DensityOperator, s: f64) -> Result<DivergenceValue> {
    check_order(s)?;
    let spec = eig(rho.op())?;
    let rho_s = spec.apply_psd(|x| x.powf(s))?;
    let a: Vec<f64> = rho_s.diagonal().iter().map(|v| v.max(0.0)).collect();
    let objective = |q: &[f64]| -> f64 {
        let q = simplex_floor(q);
        let quasi: f64 = a
            .iter()
            .zip(&q)
            .filter(|(ac, _)| **ac > 0.0)
            .map(|(ac, qc)| ac * qc.powf(1.0 - s))
            .sum();
        quasi.log2() / (s - 1.0)
    };
    let z: f64 = a.iter().map(|ac| ac.powf(1.0 / s)).sum();
    let candidate: Vec<f64> = a.iter().map(|ac| ac.powf(1.0 / s) / z).collect();
    let closed = objective(&candidate);

    let grad = |q: &[f64]| -> (f64, Vec<f64>) {
        let q = simplex_floor(q);
        let quasi: f64 = a.iter().zip(&q).map(|(ac, qc)| ac * qc.powf(1.0 - s)).sum();
        let g = a
            .iter()
            .zip(&q)
            .map(|(ac, qc)| -ac * qc.powf(-s) / (quasi * LN_2))
            .collect();
        (quasi.log2() / (s - 1.0), g)
    };
    let n = a.len();
    let pgd = optim::minimize_on_simplex(grad, &vec![1.0 / n as f64; n], &PgdOptions::default());
    let value = closed.min(pgd.value);
    Ok(DivergenceValue::finite(value, "coherence_petz_renyi", pgd.stationarity).clip_nonnegative())
}

/// Sandwiched Rényi coherence `min_q D̃_s(ρ‖diag q)` by projected gradient
/// from the Petz candidate (finite-difference gradients; small dims only).
pub fn sandwiched_renyi_coherence(rho: &DensityOperator, s: f64) -> Result<DivergenceValue> {
    check_order(s)?;
    let n = rho.dim();
    let eval = |q: &[f64]| -> f64 {
        let q = simplex_floor(q);
        let a = (1.0 - s) / (2.0 * s);
        let d: Vec<f64> = q.iter().map(|x| x.powf(a)).collect();
        let x = HermitianOperator::from_matrix_trusted(Mat::from_fn(n, n, |i, j| {
            rho.op().get(i, j) * (d[i] * d[j])
        }));
        match eig(&x) {
            Ok(spec) => {
                let quasi: f64 = spec.eigenvalues().iter().filter(|&&v| v > 0.0).map(|v| v.powf(s)).sum();
                quasi.log2() / (s - 1.0)
            }
            Err(_) => f64::INFINITY,
        }
    };
    let grad = |q: &[f64]| -> (f64, Vec<f64>) {
        let f0 = eval(q);
        let g = (0..n)
            .map(|c| {
                let h = 1e-7 * q[c].max(1e-6);
                let mut up = q.to_vec();
                let mut down = q.to_vec();
                up[c] += h;
                down[c] = (down[c] - h).max(0.0);
                (eval(&up) - eval(&down)) / (up[c] - down[c])
            })
            .collect();
        (f0, g)
    };
    let spec = eig(rho.op())?;
    let rho_s = spec.apply_psd(|x| x.powf(s))?;
    let a: Vec<f64> = rho_s.diagonal().iter().map(|v| v.max(0.0).powf(1.0 / s)).collect();
    let z: f64 = a.iter().sum();
    let start: Vec<f64> = a.iter().map(|v| v / z).collect();
    let opts = PgdOptions {
        tolerance: 1e-6,
        ..PgdOptions::default()
    };
    let pgd = optim::minimize_on_simplex(grad, &start, &opts);
    let value = pgd.value.min(eval(&start));
    Ok(DivergenceValue::finite(value, "coherence_sandwiched_renyi", pgd.stationarity).clip_nonnegative())
}

pub fn coherence_measure(rho: &DensityOperator, kind: CoherenceKind) -> Result<DivergenceValue> {
    match kind {
        CoherenceKind::RelativeEntropy => rel_entropy_of_coherence(rho),
        CoherenceKind::Petz(s) => petz_renyi_coherence(rho, s),
        CoherenceKind::Sandwiched(s) => sandwiched_renyi_coherence(rho, s),
    }
}

/// `tr[X^s Y^{1−s}] − tr[X(1 − Q)] − tr[Y Q]` with `Q = {X − Y}_+`; the
/// trace inequality for positive operators says this is nonnegative.
pub fn audenaert_gap(x: &HermitianOperator, y: &HermitianOperator, s: f64) -> Result<f64> {
    let lhs = PetzOverlap::new(x, y)?.quasi(s);
    let q = operator::positive_part(&x.sub(y)?)?.projector;
    let rhs = x.trace() - x.trace_product(&q) + y.trace_product(&q);
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{cx, SystemShape};
    use crate::states::random_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(p: &[f64]) -> DensityOperator {
        DensityOperator::diagonal(p).unwrap()
    }

    fn plus() -> DensityOperator {
        let h = cx(std::f64::consts::FRAC_1_SQRT_2);
        DensityOperator::pure(&[h, h], SystemShape::single(2)).unwrap()
    }

    #[test]
    fn relative_entropy_examples() {
        let rho = random_density(3, 3, 5).unwrap();
        assert!(rel_entropy(&rho, &rho).unwrap().value.abs() < 1e-10);
        let v = rel_entropy(&diag(&[0.5, 0.5]), &diag(&[0.25, 0.75])).unwrap();
        let kl = 0.5 * (0.5f64 / 0.25).log2() + 0.5 * (0.5f64 / 0.75).log2();
        assert!((v.value - kl).abs() < 1e-12);
        let d = rel_entropy(&plus(), &DensityOperator::maximally_mixed(2)).unwrap();
        assert!((d.value - 1.0).abs() < 1e-12);
        assert!(!rel_entropy(&diag(&[0.5, 0.5]), &diag(&[1.0, 0.0])).unwrap().finite);
    }

    #[test]
    fn entropies() {
        assert!((von_neumann(&DensityOperator::maximally_mixed(4)).unwrap() - 2.0).abs() < 1e-12);
        let s = cx(std::f64::consts::FRAC_1_SQRT_2);
        let z = cx(0.0);
        let ghz = DensityOperator::pure(&[s, z, z, z, z, z, z, s], SystemShape::qubits(3)).unwrap();
        assert!((cond_mutual_info(&ghz).unwrap() - 1.0).abs() < 1e-10);
        let a = random_density(2, 2, 1).unwrap();
        let b = random_density(2, 2, 2).unwrap();
        let c = random_density(2, 2, 3).unwrap();
        let prod = a.tensor(&b).tensor(&c);
        assert!(cond_mutual_info(&prod).unwrap().abs() < 1e-10);
        assert!(cond_mutual_info(&a.tensor(&b)).is_err());
    }

    #[test]
    fn renyi_examples() {
        let rho = random_density(3, 3, 8).unwrap();
        let sigma = random_density(3, 3, 9).unwrap();
        for s in [0.3, 0.5, 2.0] {
            assert!(petz_renyi(&rho, &rho, s).unwrap().value.abs() < 1e-10);
            assert!(sandwiched_renyi(&rho, &rho, s).unwrap().value.abs() < 1e-10);
        }
        // s = 1/2 against direct evaluation
        let sr = operator::matrix_function(rho.op(), f64::sqrt, operator::Support::Full).unwrap();
        let ss = operator::matrix_function(sigma.op(), f64::sqrt, operator::Support::Full).unwrap();
        let direct = -2.0 * sr.trace_product(&ss).log2();
        assert!((petz_renyi(&rho, &sigma, 0.5).unwrap().value - direct).abs() < 1e-10);
        assert!(petz_renyi(&rho, &sigma, 1.0).is_err());
        // limits towards the relative entropy
        let d = rel_entropy(&rho, &sigma).unwrap().value;
        for s in [1.0 - 1e-4, 1.0 + 1e-4] {
            assert!((petz_renyi(&rho, &sigma, s).unwrap().value - d).abs() < 1e-3);
            assert!((sandwiched_renyi(&rho, &sigma, s).unwrap().value - d).abs() < 1e-3);
        }
    }

    #[test]
    fn renyi_support_conventions() {
        let a = diag(&[1.0, 0.0]);
        let b = diag(&[0.0, 1.0]);
        assert!(!petz_renyi(&a, &b, 0.5).unwrap().finite);
        assert!(!petz_renyi(&diag(&[0.5, 0.5]), &a, 2.0).unwrap().finite);
        assert!(petz_renyi(&diag(&[0.5, 0.5]), &a, 0.5).unwrap().finite);
        assert!(!sandwiched_renyi(&diag(&[0.5, 0.5]), &a, 2.0).unwrap().finite);
    }

    #[test]
    fn pinching_examples() {
        let x = plus();
        let p = pinch(&HermitianOperator::from_diagonal(&[0.5, 0.5]), x.op()).unwrap();
        assert!(p.max_abs_diff(x.op()) < 1e-14);
        let p = pinch(&HermitianOperator::from_diagonal(&[0.75, 0.25]), x.op()).unwrap();
        assert!(p.max_abs_diff(&HermitianOperator::from_diagonal(&[0.5, 0.5])) < 1e-14);
        assert_eq!(spectrum_count(&HermitianOperator::identity(3)).unwrap(), 1);
    }

    #[test]
    fn measured_bracket_commuting_and_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = diag(&[0.2, 0.3, 0.5]);
        let sigma = diag(&[0.4, 0.4, 0.2]);
        let b = measured_rel_entropy(&rho, &sigma, &MeasuredOptions::default(), &mut rng).unwrap();
        assert!((b.best.value - b.upper.value).abs() < 1e-12);
        assert!((b.lower.value - b.upper.value).abs() < 1e-12);
        let r = random_density(2, 2, 4).unwrap();
        let b = measured_rel_entropy(&r, &r, &MeasuredOptions::default(), &mut rng).unwrap();
        assert!(b.best.value.abs() < 1e-10);
    }

    #[test]
    fn measured_bracket_random_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..5 {
            let rho = random_density(2, 2, 100 + seed).unwrap();
            let sigma = random_density(2, 2, 200 + seed).unwrap();
            let b = measured_rel_entropy(&rho, &sigma, &MeasuredOptions::default(), &mut rng).unwrap();
            assert!(b.lower.value <= b.best.value + 1e-12);
            assert!(b.best.value <= b.upper.value + 1e-8);
        }
    }

    #[test]
    fn chernoff_examples() {
        let rho = random_density(3, 3, 1).unwrap();
        assert!(chernoff(&rho, &rho).unwrap().value.value.abs() < 1e-12);
        let v = chernoff(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap();
        assert!(!v.value.finite);
    }

    #[test]
    fn coherence_examples() {
        assert!((rel_entropy_of_coherence(&plus()).unwrap().value - 1.0).abs() < 1e-12);
        assert!(rel_entropy_of_coherence(&diag(&[0.3, 0.7])).unwrap().value.abs() < 1e-12);
        for s in [0.5, 2.0] {
            assert!(petz_renyi_coherence(&diag(&[0.3, 0.7]), s).unwrap().value.abs() < 1e-9);
        }
    }

    #[test]
    fn audenaert_gap_nonnegative_small() {
        let x = random_density(3, 3, 1).unwrap();
        let y = random_density(3, 3, 2).unwrap();
        for s in [0.1, 0.5, 0.9] {
            assert!(audenaert_gap(x.op(), &y.op().scale(0.7), s).unwrap() >= -1e-12);
        }
    }
}

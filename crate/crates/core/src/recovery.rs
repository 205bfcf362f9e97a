//! Rotated Petz recovery maps, the β₀ weighting, and finite-n lower bounds
//! on conditional mutual information and relative-entropy contraction.

use std::f64::consts::PI;

use faer::{c64, Mat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composite::minimize_mixture_divergence;
use crate::divergence::{cond_mutual_info, measured_rel_entropy, rel_entropy_operators, MeasuredOptions, Pinching};
use crate::error::{Error, Result};
use crate::operator::{self, eig, Budget, HermitianOperator, SystemShape};
use crate::optim::PgdOptions;
use crate::report::{extended_float, BoundReport, Check};
use crate::states::DensityOperator;

/// `π/2 · (cosh(πt) + 1)^{-1}`, a probability density on ℝ.
pub fn beta0(t: f64) -> f64 {
    let x = PI * t.abs();
    if x > 700.0 {
        // cosh overflows; the density is ~ π e^{-π|t|}
        return PI * (-x).exp();
    }
    0.5 * PI / (x.cosh() + 1.0)
}

/// Composite Simpson rule for `∫ f(t) β₀(t) dt` on `[−T, T]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub half_width: f64,
    pub nodes: Vec<f64>,
    /// Simpson weights times `β₀(t_k)`.
    pub weights: Vec<f64>,
    /// Same rule at half resolution, supported on the even nodes.
    coarse: Vec<f64>,
    /// `2∫_T^∞ β₀ ≤ 2e^{−πT}`.
    pub tail: f64,
}

fn simpson_weights(m: usize, h: f64) -> Vec<f64> {
    (0..m)
        .map(|k| {
            let c = if k == 0 || k + 1 == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

impl QuadratureGrid {
    /// Defaults: `T = 12`, 961 nodes.
    pub fn standard() -> Self {
        Self::build(12.0, 961).expect("valid defaults")
    }

    /// `m` must be odd; Richardson comparison additionally needs
    /// `(m − 1)/2` even, otherwise the coarse rule is skipped.
    pub fn build(half_width: f64, m: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("half width {half_width} must be positive")));
        }
        if m < 3 || m % 2 == 0 {
            return Err(Error::InvalidArgument(format!("Simpson rule needs an odd node count >= 3, got {m}")));
        }
        let h = 2.0 * half_width / (m - 1) as f64;
        let nodes: Vec<f64> = (0..m).map(|k| -half_width + k as f64 * h).collect();
        let weights = simpson_weights(m, h)
            .into_iter()
            .zip(&nodes)
            .map(|(w, &t)| w * beta0(t))
            .collect();
        let mut coarse = vec![0.0; m];
        let mc = (m - 1) / 2 + 1;
        if mc >= 3 && mc % 2 == 1 {
            for (j, w) in simpson_weights(mc, 2.0 * h).into_iter().enumerate() {
                coarse[2 * j] = w * beta0(nodes[2 * j]);
            }
        }
        Ok(Self {
            half_width,
            nodes,
            weights,
            coarse,
            tail: 2.0 * (-PI * half_width).exp(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(Σ w_k f_k, error)` where the error adds the fine/coarse Richardson
    /// difference and `tail · max|f|`.
    pub fn integrate(&self, values: &[f64]) -> Quadrature {
        let fine: f64 = self.weights.iter().zip(values).map(|(w, v)| w * v).sum();
        let has_coarse = self.coarse.iter().any(|&w| w != 0.0);
        let coarse: f64 = self.coarse.iter().zip(values).map(|(w, v)| w * v).sum();
        let node_error = if has_coarse { (fine - coarse).abs() } else { f64::INFINITY };
        let fmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Quadrature {
            value: fine,
            error: node_error + self.tail * fmax,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

/// Channel in operator-sum form `X ↦ Σ K_i X K_i†`.
#[derive(Clone, Debug)]
pub struct Channel {
    kraus: Vec<Mat<c64>>,
    in_dim: usize,
    out_dim: usize,
}

impl Channel {
    /// Rejects Kraus sets with `‖Σ K†K − 1‖_max > 1e-10`.
    pub fn new(kraus: Vec<Mat<c64>>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("channel needs at least one Kraus operator".into()))?;
        let (out_dim, in_dim) = (first.nrows(), first.ncols());
        if kraus.iter().any(|k| k.nrows() != out_dim || k.ncols() != in_dim) {
            return Err(Error::InvalidArgument("Kraus operators have inconsistent shapes".into()));
        }
        let mut sum = Mat::<c64>::zeros(in_dim, in_dim);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let id = Mat::<c64>::identity(in_dim, in_dim);
        let dev = operator::max_abs_diff(sum.as_ref(), id.as_ref());
        if dev > 1e-10 {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(Self { kraus, in_dim, out_dim })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(vec![Mat::identity(dim, dim)]).expect("identity is trace preserving")
    }

    /// `X ↦ (1 − p) X + p tr[X] 1/d`.
    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("depolarizing parameter {p} outside [0,1]")));
        }
        let mut kraus = Vec::new();
        if p < 1.0 {
            kraus.push(Mat::<c64>::identity(dim, dim) * faer::Scale(c64::new((1.0 - p).sqrt(), 0.0)));
        }
        let c = (p / dim as f64).sqrt();
        if c > 0.0 {
            for i in 0..dim {
                for j in 0..dim {
                    let mut k = Mat::<c64>::zeros(dim, dim);
                    k[(i, j)] = c64::new(c, 0.0);
                    kraus.push(k);
                }
            }
        }
        Self::new(kraus)
    }

    /// Partial trace over every factor of `shape` not listed in `keep`.
    pub fn partial_trace(shape: &SystemShape, keep: &[usize]) -> Result<Self> {
        let f = shape.factors();
        if keep.iter().any(|&k| k >= f.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!("keep list {keep:?} must be increasing and in range")));
        }
        let traced: Vec<usize> = (0..f.len()).filter(|k| !keep.contains(k)).collect();
        let env_dim: usize = traced.iter().map(|&k| f[k]).product();
        let out_dim: usize = keep.iter().map(|&k| f[k]).product();
        let in_dim = shape.dim();
        let mut kraus = vec![Mat::<c64>::zeros(out_dim, in_dim); env_dim];
        let mut digits = vec![0usize; f.len()];
        for x in 0..in_dim {
            let mut r = x;
            for k in (0..f.len()).rev() {
                digits[k] = r % f[k];
                r /= f[k];
            }
            let out = keep.iter().fold(0, |acc, &k| acc * f[k] + digits[k]);
            let env = traced.iter().fold(0, |acc, &k| acc * f[k] + digits[k]);
            kraus[env][(out, x)] = c64::new(1.0, 0.0);
        }
        Self::new(kraus)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[Mat<c64>] {
        &self.kraus
    }

    pub fn apply(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        if x.dim() != self.in_dim {
            return Err(Error::DimensionMismatch { left: self.in_dim, right: x.dim() });
        }
        let mut acc = HermitianOperator::zeros(self.out_dim);
        for k in &self.kraus {
            acc = acc.add(&x.congruence(k.as_ref()))?;
        }
        Ok(acc)
    }
}

/// `R^{[t]}_{σ,N}(X) = σ^{(1+it)/2} N†(N(σ)^{(−1−it)/2} X N(σ)^{(−1+it)/2}) σ^{(1−it)/2}`
/// held in operator-sum form `L_i = σ^{(1+it)/2} K_i† N(σ)^{(−1−it)/2}`.
/// Negative powers act on supports only.
#[derive(Clone, Debug)]
pub struct RotatedPetzMap {
    t: f64,
    kraus: Vec<Mat<c64>>,
    /// Support projector of `N(σ)`: trace is preserved on inputs living there.
    input_support: HermitianOperator,
}

impl RotatedPetzMap {
    pub fn new(sigma: &HermitianOperator, channel: &Channel, t: f64) -> Result<Self> {
        if sigma.dim() != channel.in_dim() {
            return Err(Error::DimensionMismatch { left: channel.in_dim(), right: sigma.dim() });
        }
        let s_spec = eig(sigma)?;
        let n_sigma = channel.apply(sigma)?;
        let n_spec = eig(&n_sigma)?;
        let outer = s_spec.apply_psd_complex(|x| {
            let m = x.sqrt();
            let ph = 0.5 * t * x.ln();
            c64::new(m * ph.cos(), m * ph.sin())
        })?;
        let inner = n_spec.apply_psd_complex(|x| {
            let m = 1.0 / x.sqrt();
            let ph = -0.5 * t * x.ln();
            c64::new(m * ph.cos(), m * ph.sin())
        })?;
        let kraus = channel
            .kraus()
            .iter()
            .map(|k| &outer * k.adjoint() * &inner)
            .collect();
        Ok(Self {
            t,
            kraus,
            input_support: n_spec.support_projector(),
        })
    }

    /// Recovery map for `A ⊗ C → A ⊗ B ⊗ C` anchored at `ρ_BC`: the map
    /// with `σ = 1_A ⊗ ρ_BC` and `N = tr_B`.
    pub fn for_tripartite(rho_abc: &DensityOperator, t: f64) -> Result<Self> {
        let (sigma, channel) = tripartite_anchor(rho_abc)?;
        Self::new(&sigma, &channel, t)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn input_support(&self) -> &HermitianOperator {
        &self.input_support
    }
}

fn tripartite_anchor(rho_abc: &DensityOperator) -> Result<(HermitianOperator, Channel)> {
    let f = rho_abc.shape().factors();
    if f.len() != 3 {
        return Err(Error::InvalidArgument(format!("expected a tripartite shape, got {f:?}")));
    }
    let rho_bc = rho_abc.partial_trace(&[1, 2])?;
    let sigma = HermitianOperator::identity(f[0]).kron(rho_bc.op());
    Ok((sigma, Channel::partial_trace(rho_abc.shape(), &[0, 2])?))
}

/// Output of a recovery map, with the part of the input's trace lost
/// outside the map's support.
#[derive(Clone, Debug)]
pub struct Recovered {
    pub state: HermitianOperator,
    pub trace_defect: f64,
}

pub fn apply_rotated_petz(map: &RotatedPetzMap, x: &HermitianOperator) -> Result<Recovered> {
    let in_dim = map.kraus[0].ncols();
    if x.dim() != in_dim {
        return Err(Error::DimensionMismatch { left: in_dim, right: x.dim() });
    }
    let mut out = HermitianOperator::zeros(map.kraus[0].nrows());
    for l in &map.kraus {
        out = out.add(&x.congruence(l.as_ref()))?;
    }
    Ok(Recovered {
        trace_defect: x.trace() - out.trace(),
        state: out,
    })
}

/// `‖√ρ √σ‖₁²` for positive semidefinite arguments.
pub fn fidelity(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    let a = eig(rho)?.apply_psd(f64::sqrt)?;
    let b = eig(sigma)?.apply_psd(f64::sqrt)?;
    let tn = operator::trace_norm(a.mul(&b).as_ref())?;
    Ok(tn * tn)
}

#[derive(Clone, Debug)]
pub struct RecoveryOptions {
    pub n_max: usize,
    pub grid: QuadratureGrid,
    pub measured: MeasuredOptions,
    /// Seed for the measured-relative-entropy search.
    pub seed: u64,
    pub budget: Budget,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            n_max: 2,
            grid: QuadratureGrid::standard(),
            measured: MeasuredOptions {
                restarts: 8,
                ..MeasuredOptions::default()
            },
            seed: 0,
            budget: Budget::from_env(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockBound {
    pub n: usize,
    /// `(1/n) D(ρ^{⊗n} ‖ σ_n)` with `σ_n = ∫β₀ (σ^{[t]})^{⊗n}`.
    #[serde(with = "extended_float")]
    pub value: f64,
    /// `(1/n) log₂ |spec(σ_n)|`.
    pub penalty: f64,
}

/// Lower bounds on a relative-entropy contraction from the rotated Petz
/// family. `B1`, `B2` and `B3` are computed with the quadrature grid; only
/// their sound sides are checked against the exact contraction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryBounds {
    /// The quantity being bounded (`I(A:B|C)` in the tripartite case).
    pub target: f64,
    /// `−∫β₀ log₂ F(ρ, σ^{[t]}) dt`.
    pub b1: f64,
    pub quadrature_error: f64,
    /// Pinching lower side of `D_M(ρ ‖ ∫β₀ σ^{[t]})`.
    pub b2_lower: f64,
    pub b2_best: f64,
    #[serde(with = "extended_float")]
    pub b2_upper: f64,
    pub b3: Vec<BlockBound>,
    /// `−log₂ F(ρ, σ^{[0]})`, tabulated only.
    pub unrotated: f64,
    /// Largest trace defect of a recovered state on the grid.
    pub trace_defect: f64,
    pub report: BoundReport,
}

fn recovery_bounds_inner(
    rho: &DensityOperator,
    sigma: &HermitianOperator,
    channel: &Channel,
    target: f64,
    title: &str,
    opts: &RecoveryOptions,
) -> Result<RecoveryBounds> {
    let grid = &opts.grid;
    let input = channel.apply(rho.op())?;
    let recovered: Vec<Recovered> = grid
        .nodes
        .par_iter()
        .map(|&t| apply_rotated_petz(&RotatedPetzMap::new(sigma, channel, t)?, &input))
        .collect::<Result<_>>()?;
    let trace_defect = recovered.iter().fold(0.0f64, |m, r| m.max(r.trace_defect.abs()));
    let neg_log_fid: Vec<f64> = recovered
        .par_iter()
        .map(|r| Ok(-fidelity(rho.op(), &r.state)?.log2()))
        .collect::<Result<_>>()?;
    let b1 = grid.integrate(&neg_log_fid);
    let unrotated = {
        let r = apply_rotated_petz(&RotatedPetzMap::new(sigma, channel, 0.0)?, &input)?;
        -fidelity(rho.op(), &r.state)?.log2()
    };

    let mut mean = HermitianOperator::zeros(rho.dim());
    for (w, r) in grid.weights.iter().zip(&recovered) {
        mean = mean.lincomb(1.0, &r.state, *w)?;
    }
    let tr = mean.trace();
    let sigma_bar = DensityOperator::from_operator(mean.scale(1.0 / tr))?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bracket = measured_rel_entropy(rho, &sigma_bar, &opts.measured, &mut rng)?;

    let mut report = BoundReport::new(title);
    let slack = b1.error + 1e-9;
    report.value("target", target, "entropies", None, 1e-12);
    report.value("B1", b1.value, "simpson_fidelity", None, b1.error);
    report.value("B2_lower", bracket.lower.value, "pinching_lower_bound", None, 1e-12);
    report.value("B2_best", bracket.best.value, "measured_search", None, opts.measured.rel_improvement);
    report.divergence("B2_upper", &bracket.upper, None);
    report.value("unrotated", unrotated, "fidelity_t0", None, 1e-12);
    report.check(Check::ge("target >= B1", target, b1.value, slack));
    report.check(Check::ge("target >= B2_lower", target, bracket.lower.value, slack));

    let d = rho.dim();
    let feasible = opts.budget.max_power(d).min(opts.n_max);
    if feasible < opts.n_max {
        report.note(format!("block bound truncated at n={feasible}: n={} exceeds the budget", feasible + 1));
    }
    let mut b3 = Vec::new();
    for n in 1..=feasible {
        let rho_n = operator::kron_power(rho.op(), n, &opts.budget)?;
        let powers: Vec<HermitianOperator> = recovered
            .par_iter()
            .map(|r| operator::kron_power(&r.state, n, &opts.budget))
            .collect::<Result<_>>()?;
        let mut sigma_n = HermitianOperator::zeros(rho_n.dim());
        for (w, p) in grid.weights.iter().zip(&powers) {
            sigma_n = sigma_n.lincomb(1.0, p, *w)?;
        }
        let sigma_n = sigma_n.scale(1.0 / sigma_n.trace());
        let pinching = Pinching::new(&sigma_n)?;
        let count = pinching.spectrum_count() as f64;
        let nf = n as f64;
        let value = rel_entropy_operators(&rho_n, &sigma_n)? / nf;
        let penalty = count.log2() / nf;
        report.value(format!("B3(n={n})"), value, "block_relative_entropy", Some(n), 1e-9);
        report.check(Check::ge(format!("target >= B3(n={n}) - penalty"), target, value - penalty, slack));
        b3.push(BlockBound { n, value, penalty });
    }
    Ok(RecoveryBounds {
        target,
        b1: b1.value,
        quadrature_error: b1.error,
        b2_lower: bracket.lower.value,
        b2_best: bracket.best.value,
        b2_upper: bracket.upper.value,
        b3,
        unrotated,
        trace_defect,
        report,
    })
}

/// The three rotated-Petz lower bounds on `I(A:B|C)` of a tripartite state.
pub fn cqmi_bounds(rho_abc: &DensityOperator, opts: &RecoveryOptions) -> Result<RecoveryBounds> {
    let (sigma, channel) = tripartite_anchor(rho_abc)?;
    let cmi = cond_mutual_info(rho_abc)?;
    recovery_bounds_inner(rho_abc, &sigma, &channel, cmi, "conditional mutual information", opts)
}

/// `D(ρ‖σ) − D(N(ρ)‖N(σ))` against the same family of bounds, with `σ` any
/// positive semidefinite operator.
pub fn strengthened_monotonicity(
    rho: &DensityOperator,
    sigma: &HermitianOperator,
    channel: &Channel,
    opts: &RecoveryOptions,
) -> Result<RecoveryBounds> {
    if sigma.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { left: rho.dim(), right: sigma.dim() });
    }
    if eig(sigma)?.min_eigenvalue() < -1e-12 * sigma.trace().abs().max(1.0) {
        return Err(Error::InvalidArgument("σ must be positive semidefinite".into()));
    }
    let before = rel_entropy_operators(rho.op(), sigma)?;
    let after = rel_entropy_operators(&channel.apply(rho.op())?, &channel.apply(sigma)?)?;
    let contraction = if before.is_infinite() && after.is_infinite() { f64::NAN } else { before - after };
    if contraction.is_nan() {
        return Err(Error::InvalidArgument("both relative entropies are infinite".into()));
    }
    recovery_bounds_inner(rho, sigma, channel, contraction, "strengthened monotonicity", opts)
}

/// `(1/n) min_w D(ρ^{⊗n} ‖ Σ_j w_j R_j(ρ_AC)^{⊗n})` over a finite family of
/// recovery maps: an upper bound on the infimum over all recovery maps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryFamilyValue {
    pub n: usize,
    #[serde(with = "extended_float")]
    pub upper_bound: f64,
    pub weights: Vec<f64>,
    pub converged: bool,
}

pub fn recovery_family_divergence(
    rho_abc: &DensityOperator,
    family: &[RotatedPetzMap],
    n: usize,
    budget: &Budget,
) -> Result<RecoveryFamilyValue> {
    if family.is_empty() || n == 0 {
        return Err(Error::InvalidArgument("need a nonempty family and n >= 1".into()));
    }
    let input = rho_abc.partial_trace(&[0, 2])?;
    let rho_n = operator::kron_power(rho_abc.op(), n, budget)?;
    let alts: Vec<HermitianOperator> = family
        .par_iter()
        .map(|m| {
            let r = apply_rotated_petz(m, input.op())?.state;
            operator::kron_power(&r.scale(1.0 / r.trace()), n, budget)
        })
        .collect::<Result<_>>()?;
    let m = minimize_mixture_divergence(&rho_n, &alts, &PgdOptions::default())?;
    Ok(RecoveryFamilyValue {
        n,
        upper_bound: m.value / n as f64,
        weights: m.weights,
        converged: m.converged,
    })
}

/// Per-θ row of the recovery table on the three-qubit family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaRow {
    pub theta: f64,
    pub cmi: f64,
    pub b1: f64,
    pub b2_lower: f64,
    pub b2_best: f64,
    pub b3: Vec<BlockBound>,
    pub quadrature_error: f64,
    pub unrotated: f64,
    /// Single-letter recovery-family divergence (upper bound).
    #[serde(with = "extended_float")]
    pub family_upper: f64,
}

/// `t` values of the finite recovery family used in the θ table.
pub fn default_family_nodes() -> Vec<f64> {
    (-8..=8).map(|k| k as f64 * 0.5).collect()
}

pub fn theta_sweep(thetas: &[f64], opts: &RecoveryOptions) -> Result<(Vec<ThetaRow>, BoundReport)> {
    let mut report = BoundReport::new("recovery theta sweep");
    let mut rows = Vec::new();
    for &theta in thetas {
        let rho = crate::states::ff17_state(theta)?;
        let b = cqmi_bounds(&rho, opts)?;
        let family: Vec<RotatedPetzMap> = default_family_nodes()
            .into_iter()
            .map(|t| RotatedPetzMap::for_tripartite(&rho, t))
            .collect::<Result<_>>()?;
        let fam = recovery_family_divergence(&rho, &family, 1, &opts.budget)?;
        for c in &b.report.checks {
            let mut c = c.clone();
            c.name = format!("theta={theta:.6}: {}", c.name);
            report.check(c);
        }
        rows.push(ThetaRow {
            theta,
            cmi: b.target,
            b1: b.b1,
            b2_lower: b.b2_lower,
            b2_best: b.b2_best,
            b3: b.b3,
            quadrature_error: b.quadrature_error,
            unrotated: b.unrotated,
            family_upper: fam.upper_bound,
        });
    }
    Ok((rows, report))
}

/// `|1 − Σ w_k| − tail`; nonpositive when the weights integrate to one
/// within the truncated tail.
pub fn normalization_defect(grid: &QuadratureGrid) -> f64 {
    (1.0 - grid.total_weight()).abs() - grid.tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::cx;
    use crate::states::{random_density, random_density_with};

    #[test]
    fn beta0_values() {
        assert!((beta0(0.0) - PI / 4.0).abs() < 1e-15);
        for t in [0.1, 1.3, 7.0, 400.0] {
            assert_eq!(beta0(t), beta0(-t));
        }
        let g = QuadratureGrid::build(20.0, 4001).unwrap();
        assert!((g.total_weight() - 1.0).abs() < 1e-6);
        let s = QuadratureGrid::standard();
        assert!(s.weights.iter().all(|&w| w > 0.0));
        assert!(s.total_weight() <= 1.0 + 1e-12);
        assert!(s.total_weight() >= 1.0 - s.tail - 1e-12);
        assert!(QuadratureGrid::build(1.0, 4).is_err());
    }

    #[test]
    fn channels_validate() {
        let bad = vec![Mat::<c64>::identity(2, 2) * faer::Scale(c64::new(0.5, 0.0))];
        assert!(matches!(Channel::new(bad), Err(Error::NotTracePreserving(_))));
        let rho = random_density(4, 4, 3).unwrap().with_shape(SystemShape::qubits(2)).unwrap();
        let ch = Channel::partial_trace(rho.shape(), &[1]).unwrap();
        let out = ch.apply(rho.op()).unwrap();
        assert!(out.max_abs_diff(rho.partial_trace(&[1]).unwrap().op()) < 1e-14);
        let dep = Channel::depolarizing(3, 1.0).unwrap();
        let x = random_density(3, 3, 4).unwrap();
        let y = dep.apply(x.op()).unwrap();
        assert!(y.max_abs_diff(&HermitianOperator::identity(3).scale(1.0 / 3.0)) < 1e-14);
    }

    #[test]
    fn markov_product_recovers_exactly() {
        let ra = random_density(2, 2, 1).unwrap();
        let rbc = random_density(4, 4, 2).unwrap();
        let rho = ra.tensor(&rbc).with_shape(SystemShape::qubits(3)).unwrap();
        let input = rho.partial_trace(&[0, 2]).unwrap();
        for t in [0.0, 0.7, -3.0] {
            let map = RotatedPetzMap::for_tripartite(&rho, t).unwrap();
            let r = apply_rotated_petz(&map, input.op()).unwrap();
            if t == 0.0 {
                assert!(r.state.max_abs_diff(rho.op()) < 1e-10);
            }
            assert!(r.trace_defect.abs() < 1e-10);
        }
    }

    #[test]
    fn classical_markov_chain() {
        // p(a,b,c) = p(c) p(a|c) p(b|c)
        let pc = [0.3, 0.7];
        let pa = [[0.2, 0.8], [0.6, 0.4]];
        let pb = [[0.9, 0.1], [0.5, 0.5]];
        let mut p = vec![0.0; 8];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    p[4 * a + 2 * b + c] = pc[c] * pa[c][a] * pb[c][b];
                }
            }
        }
        let rho = DensityOperator::diagonal(&p).unwrap().with_shape(SystemShape::qubits(3)).unwrap();
        let map = RotatedPetzMap::for_tripartite(&rho, 0.0).unwrap();
        let r = apply_rotated_petz(&map, rho.partial_trace(&[0, 2]).unwrap().op()).unwrap();
        assert!(r.state.max_abs_diff(rho.op()) < 1e-10);
        let b = cqmi_bounds(&rho, &RecoveryOptions { n_max: 1, ..RecoveryOptions::default() }).unwrap();
        assert!(b.target.abs() < 1e-10);
        assert!(b.b1.abs() < 1e-6 && b.b2_lower.abs() < 1e-6);
    }

    #[test]
    fn random_states_satisfy_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let opts = RecoveryOptions {
            n_max: 2,
            ..RecoveryOptions::default()
        };
        for _ in 0..2 {
            let rho = random_density_with(&mut rng, 8, 8).unwrap().with_shape(SystemShape::qubits(3)).unwrap();
            let b = cqmi_bounds(&rho, &opts).unwrap();
            assert!(b.report.all_passed(), "{:?}", b.report.failures().collect::<Vec<_>>());
            assert!(b.trace_defect < 1e-8);
            assert!(b.b2_lower <= b.b2_best + 1e-12);
        }
    }

    #[test]
    fn ghz_bounds_below_one() {
        let h = cx(std::f64::consts::FRAC_1_SQRT_2);
        let mut amps = vec![cx(0.0); 8];
        amps[0] = h;
        amps[7] = h;
        let rho = DensityOperator::pure(&amps, SystemShape::qubits(3)).unwrap();
        let b = cqmi_bounds(&rho, &RecoveryOptions { n_max: 1, ..RecoveryOptions::default() }).unwrap();
        assert!((b.target - 1.0).abs() < 1e-10);
        assert!(b.b1 <= 1.0 + 1e-6 && b.b2_lower <= 1.0 + 1e-6);
        assert!(b.report.all_passed());
    }

    #[test]
    fn monotonicity_identity_and_depolarizing() {
        let rho = random_density(3, 3, 5).unwrap();
        let sigma = random_density(3, 3, 6).unwrap();
        let opts = RecoveryOptions { n_max: 1, ..RecoveryOptions::default() };
        let id = strengthened_monotonicity(&rho, sigma.op(), &Channel::identity(3), &opts).unwrap();
        assert!(id.target.abs() < 1e-12 && id.b1.abs() < 1e-8);
        let dep = strengthened_monotonicity(&rho, sigma.op(), &Channel::depolarizing(3, 1.0).unwrap(), &opts).unwrap();
        let d = rel_entropy_operators(rho.op(), sigma.op()).unwrap();
        assert!((dep.target - d).abs() < 1e-10);
        assert!(dep.report.all_passed());
        assert!(dep.b1 <= dep.target + 1e-9);
    }

    #[test]
    fn monotonicity_partial_trace_matches_cqmi() {
        let rho = random_density(8, 8, 7).unwrap().with_shape(SystemShape::qubits(3)).unwrap();
        let opts = RecoveryOptions { n_max: 1, ..RecoveryOptions::default() };
        let c = cqmi_bounds(&rho, &opts).unwrap();
        let (sigma, ch) = tripartite_anchor(&rho).unwrap();
        let m = strengthened_monotonicity(&rho, &sigma, &ch, &opts).unwrap();
        assert!((c.target - m.target).abs() < 1e-10);
        assert!((c.b1 - m.b1).abs() < 1e-10);
    }

    #[test]
    fn family_divergence_markov_and_singleton() {
        let ra = random_density(2, 2, 8).unwrap();
        let rbc = random_density(4, 4, 9).unwrap();
        let rho = ra.tensor(&rbc).with_shape(SystemShape::qubits(3)).unwrap();
        let fam = vec![RotatedPetzMap::for_tripartite(&rho, 0.0).unwrap()];
        let v = recovery_family_divergence(&rho, &fam, 2, &Budget::default()).unwrap();
        assert!(v.upper_bound.abs() < 1e-8);
        let generic = random_density(8, 8, 10).unwrap().with_shape(SystemShape::qubits(3)).unwrap();
        let fam: Vec<_> = [0.0, 1.0].iter().map(|&t| RotatedPetzMap::for_tripartite(&generic, t).unwrap()).collect();
        let mixed = recovery_family_divergence(&generic, &fam, 1, &Budget::default()).unwrap();
        let single = recovery_family_divergence(&generic, &fam[..1], 1, &Budget::default()).unwrap();
        assert!(mixed.upper_bound <= single.upper_bound + 1e-9);
        assert!(mixed.upper_bound >= 0.0);
    }
}

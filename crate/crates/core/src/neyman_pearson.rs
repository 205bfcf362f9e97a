//! Optimal finite-n asymmetric tests: error pairs, the Neyman–Pearson
//! threshold construction, exponent sequences, converse bounds and the
//! exponential threshold tests with their Rényi certificates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{rel_entropy_operators, PetzOverlap};
use crate::error::{Error, Result};
use crate::operator::{self, eig, positive_indices, Budget, HermitianOperator};
use crate::states::{mix_tensor_power, DensityOperator, FiniteMixture};

/// Eigenvalue slack for `0 ≤ M ≤ 1`.
pub const TEST_TOLERANCE: f64 = 1e-9;

/// Binary POVM element `0 ≤ M ≤ 1`.
#[derive(Clone, Debug)]
pub struct TestOperator {
    m: HermitianOperator,
}

impl TestOperator {
    pub fn new(m: HermitianOperator) -> Result<Self> {
        let spec = eig(&m)?;
        let (lo, hi) = (spec.min_eigenvalue(), spec.max_eigenvalue());
        if lo < -TEST_TOLERANCE {
            return Err(Error::InvalidTest(lo));
        }
        if hi > 1.0 + TEST_TOLERANCE {
            return Err(Error::InvalidTest(hi));
        }
        Ok(Self { m })
    }

    pub(crate) fn trusted(m: HermitianOperator) -> Self {
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self::trusted(HermitianOperator::identity(dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::trusted(HermitianOperator::zeros(dim))
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// `w·a + (1 − w)·b`.
    pub fn mix(a: &Self, b: &Self, w: f64) -> Result<Self> {
        Ok(Self::trusted(a.m.lincomb(w, &b.m, 1.0 - w)?))
    }

    /// `c·M + (1 − c)·1`: lowers every Type-1 error by the factor `c`.
    pub fn toward_identity(&self, c: f64) -> Self {
        let n = self.dim();
        Self::trusted(
            self.m
                .lincomb(c, &HermitianOperator::identity(n), 1.0 - c)
                .expect("same dimension"),
        )
    }
}

/// `(α, β) = (tr[ρ(1 − M)], tr[σM])`.
pub fn errors(rho: &DensityOperator, sigma: &DensityOperator, test: &TestOperator) -> Result<(f64, f64)> {
    rho.op().ensure_same_dim(test.op())?;
    sigma.op().ensure_same_dim(test.op())?;
    Ok(errors_raw(rho.op(), sigma.op(), test.op()))
}

pub(crate) fn errors_raw(rho: &HermitianOperator, sigma: &HermitianOperator, m: &HermitianOperator) -> (f64, f64) {
    (1.0 - rho.trace_product(m), sigma.trace_product(m))
}

/// Output of the Neyman–Pearson solver.
#[derive(Clone, Debug)]
pub struct NpSolution {
    pub beta: f64,
    pub alpha: f64,
    pub test: TestOperator,
    /// Thresholds of the two mixed projectors `{ρ − tσ}_+` (equal when no
    /// mixing was needed; `∞` marks the kernel-of-σ test).
    pub t_lo: f64,
    pub t_hi: f64,
    /// Weight on the `t_lo` projector.
    pub weight: f64,
    /// Lagrangian lower bound on the optimal β; `beta − beta_lower` bounds
    /// the suboptimality of the returned test.
    pub beta_lower: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct NpOptions {
    pub max_iterations: usize,
    pub rel_width: f64,
    pub gap_tolerance: f64,
}

impl Default for NpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            rel_width: 1e-12,
            gap_tolerance: 1e-13,
        }
    }
}

/// One threshold evaluation `t ↦ (g, b, P)` with `P = {ρ − tσ}_+`, plus
/// first-order predictions of where the eigenvalues nearest zero cross it.
struct Threshold {
    t: f64,
    g: f64,
    b: f64,
    projector: Option<HermitianOperator>,
    /// Crossing of the smallest positive eigenvalue (moving up in `t`).
    cross_up: f64,
    /// Crossing of the largest non-positive eigenvalue (moving down).
    cross_down: f64,
}

struct Evaluator<'a> {
    rho: &'a HermitianOperator,
    sigma: &'a HermitianOperator,
    count: usize,
}

impl Evaluator<'_> {
    fn eval(&mut self, t: f64) -> Result<Threshold> {
        self.count += 1;
        let a = if t == 0.0 {
            self.rho.clone()
        } else {
            self.rho.lincomb(1.0, self.sigma, -t)?
        };
        let spec = eig(&a)?;
        let pos = positive_indices(&spec);
        // Hellmann–Feynman: dλ_k/dt = −⟨u_k|σ|u_k⟩
        let crossing = |k: usize| {
            let u = spec.eigenvectors().col(k);
            let su = self.sigma.matrix() * u;
            let s: f64 = (0..u.nrows()).map(|i| (u[i].conj() * su[i]).re).sum();
            if s > 0.0 {
                t + spec.eigenvalues()[k] / s
            } else {
                f64::NAN
            }
        };
        let first = pos.first().copied().unwrap_or(spec.dim());
        let cross_up = if first < spec.dim() { crossing(first) } else { f64::NAN };
        let cross_down = if first > 0 { crossing(first - 1) } else { f64::NAN };
        let projector = spec.projector_onto(&pos);
        Ok(Threshold {
            t,
            g: self.rho.trace_product(&projector),
            b: self.sigma.trace_product(&projector),
            projector: Some(projector),
            cross_up,
            cross_down,
        })
    }
}

/// Lagrangian certificate: for every feasible `M`,
/// `tr σM ≥ b(t) + (1 − ε − g(t))/t`.
fn certificate(th: &Threshold, target: f64) -> f64 {
    if th.t > 0.0 && th.t.is_finite() {
        (th.b + (target - th.g) / th.t).max(0.0)
    } else {
        0.0
    }
}

pub fn optimal_beta(rho: &DensityOperator, sigma: &DensityOperator, epsilon: f64) -> Result<NpSolution> {
    optimal_beta_ops(rho.op(), sigma.op(), epsilon, None, &NpOptions::default())
}

/// Neyman–Pearson solver on raw operators with an optional warm-start
/// threshold.
pub fn optimal_beta_ops(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    epsilon: f64,
    warm_start: Option<f64>,
    opts: &NpOptions,
) -> Result<NpSolution> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0,1)")));
    }
    rho.ensure_same_dim(sigma)?;
    let n = rho.dim();
    let target = 1.0 - epsilon;

    // β = 0 is attainable when ρ has enough weight on ker σ
    let ss = eig(sigma)?;
    let kernel = ss.kernel_projector();
    let g_ker = rho.trace_product(&kernel);
    if g_ker >= target {
        let w = target / g_ker;
        let test = TestOperator::trusted(kernel.scale(w));
        let (alpha, beta) = errors_raw(rho, sigma, test.op());
        return Ok(NpSolution {
            beta: beta.max(0.0),
            alpha,
            test,
            t_lo: f64::INFINITY,
            t_hi: f64::INFINITY,
            weight: w,
            beta_lower: 0.0,
            evaluations: 0,
        });
    }

    let mut ev = Evaluator { rho, sigma, count: 0 };
    let t0 = warm_start.filter(|t| t.is_finite() && *t > 0.0).unwrap_or(1.0);
    let first = ev.eval(t0)?;

    // exponential bracketing in log t: factors 2, 4, 16, 256, ...
    let (mut lo, mut hi);
    if first.g >= target {
        lo = first;
        let mut factor = 2.0f64;
        loop {
            let t = lo.t * factor;
            if !t.is_finite() || t > 1e300 {
                // g never drops below the target: saturate at this threshold
                return finish(rho, sigma, lo, None, target, ev.count, n, 0.0);
            }
            let th = ev.eval(t)?;
            if th.g < target {
                hi = th;
                break;
            }
            lo = th;
            factor = (factor * factor).min(1e100);
        }
    } else {
        hi = first;
        let mut factor = 2.0f64;
        loop {
            let t = hi.t / factor;
            if t < 1e-300 {
                lo = ev.eval(0.0)?;
                break;
            }
            let th = ev.eval(t)?;
            if th.g >= target {
                lo = th;
                break;
            }
            hi = th;
            factor = (factor * factor).min(1e100);
        }
    }

    // Illinois regula falsi on u = ln t, interleaved with Newton steps on
    // the eigenvalue branches closest to zero at either end of the bracket.
    // g is a step function (it jumps whenever an eigenvalue of ρ − tσ
    // crosses zero), so once a single crossing remains the Newton step is
    // what locates it; regula falsi alone would crawl.
    let mut side = 0i32;
    let (mut f_lo, mut f_hi) = (lo.g - target, hi.g - target);
    let mut best_cert = certificate(&lo, target).max(certificate(&hi, target));
    let mut widths: Vec<f64> = Vec::new();
    for _ in 0..opts.max_iterations {
        if lo.t == 0.0 {
            break;
        }
        let (u_lo, u_hi) = (lo.t.ln(), hi.t.ln());
        let width = u_hi - u_lo;
        let dg = lo.g - hi.g;
        let w = if dg > 1e-15 { ((target - hi.g) / dg).clamp(0.0, 1.0) } else { 1.0 };
        let beta_mix = hi.b + w * (lo.b - hi.b);
        if width <= opts.rel_width || beta_mix - best_cert <= opts.gap_tolerance {
            break;
        }
        let inside = |u: f64, margin: f64| u > u_lo + margin && u < u_hi - margin;
        let stalled = widths.len() >= 2 && width > 0.5 * widths[widths.len() - 2];
        // a prediction that rounds onto its own endpoint means the endpoint
        // sits on the crossing: step just past it
        let nudge = 1e-13;
        let newton = [
            lo.cross_up.ln().max(u_lo + nudge),
            hi.cross_down.ln().min(u_hi - nudge),
        ]
        .into_iter()
        .find(|&u| inside(u, 0.0));
        let u = match newton {
            Some(u) if !stalled => u,
            _ => {
                let rf = if f_lo != f_hi {
                    u_lo + f_lo * (u_hi - u_lo) / (f_lo - f_hi)
                } else {
                    f64::NAN
                };
                if !stalled && inside(rf, 0.0) {
                    // keep clear of the endpoints without giving up the
                    // superlinear step when the root hugs one of them
                    rf.clamp(u_lo + 1e-3 * width, u_hi - 1e-3 * width)
                } else {
                    0.5 * (u_lo + u_hi)
                }
            }
        };
        widths.push(width);
        let th = ev.eval(u.exp())?;
        best_cert = best_cert.max(certificate(&th, target));
        if th.g >= target {
            f_lo = th.g - target;
            lo = th;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            f_hi = th.g - target;
            hi = th;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
    }
    finish(rho, sigma, lo, Some(hi), target, ev.count, n, best_cert)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    mut lo: Threshold,
    hi: Option<Threshold>,
    target: f64,
    evaluations: usize,
    n: usize,
    best_cert: f64,
) -> Result<NpSolution> {
    let p_lo = lo.projector.take().unwrap_or_else(|| HermitianOperator::zeros(n));
    let Some(mut hi) = hi else {
        let w = (target / lo.g).min(1.0);
        let test = TestOperator::trusted(p_lo.scale(w));
        let (alpha, beta) = errors_raw(rho, sigma, test.op());
        return Ok(NpSolution {
            beta: beta.max(0.0),
            alpha,
            test,
            t_lo: lo.t,
            t_hi: lo.t,
            weight: w,
            beta_lower: certificate(&lo, target).max(best_cert).min(beta.max(0.0)),
            evaluations,
        });
    };
    let p_hi = hi.projector.take().unwrap_or_else(|| HermitianOperator::zeros(n));
    let dg = lo.g - hi.g;
    let w = if dg > 1e-15 {
        ((target - hi.g) / dg).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let test = TestOperator::trusted(p_lo.lincomb(w, &p_hi, 1.0 - w)?);
    let (alpha, beta) = errors_raw(rho, sigma, test.op());
    let beta_lower = certificate(&lo, target).max(certificate(&hi, target)).max(best_cert);
    Ok(NpSolution {
        beta: beta.max(0.0),
        alpha,
        test,
        t_lo: lo.t,
        t_hi: hi.t,
        weight: w,
        beta_lower: beta_lower.min(beta.max(0.0)),
        evaluations,
    })
}

/// One row of an exponent table.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TradeoffPoint {
    pub n: usize,
    pub epsilon: f64,
    pub beta: f64,
    /// `−log₂ β / n`.
    pub exponent: f64,
    /// `(D(ρ^{⊗n}‖σ_n) + 1)/(n(1 − ε))`.
    pub converse_bound: f64,
    pub method: String,
}

pub(crate) fn check_copies(local_dim: usize, n: usize, budget: &Budget) -> Result<usize> {
    budget.power_dim(local_dim, n).map_err(|_| Error::CopiesExceedBudget {
        n,
        required: local_dim.checked_pow(n as u32).unwrap_or(usize::MAX),
        limit: budget.max_dim,
        max_feasible: budget.max_power(local_dim),
    })
}

/// `(D(ρ^{⊗n}‖σ_n(μ)) + 1)/(n(1 − ε))`.
pub fn converse_bound(
    rho: &DensityOperator,
    mixture: &FiniteMixture,
    n: usize,
    epsilon: f64,
    budget: &Budget,
) -> Result<f64> {
    let d = tensor_power_divergence(rho, mixture, n, budget)?;
    Ok(converse_from_divergence(d, n, epsilon))
}

fn converse_from_divergence(d: f64, n: usize, epsilon: f64) -> f64 {
    if d.is_infinite() {
        f64::INFINITY
    } else {
        (d + 1.0) / (n as f64 * (1.0 - epsilon))
    }
}

/// `D(ρ^{⊗n}‖Σ_j w_j σ_j^{⊗n})`, using additivity for singletons.
pub(crate) fn tensor_power_divergence(
    rho: &DensityOperator,
    mixture: &FiniteMixture,
    n: usize,
    budget: &Budget,
) -> Result<f64> {
    check_copies(rho.dim(), n, budget)?;
    if mixture.len() == 1 {
        let d = rel_entropy_operators(rho.op(), mixture.components()[0].op())?;
        return Ok(n as f64 * d);
    }
    let rho_n = rho.tensor_power(n, budget)?;
    let sigma_n = mix_tensor_power(mixture, n, budget)?;
    rel_entropy_operators(rho_n.op(), sigma_n.op())
}

/// Per-n optimal exponents `−log₂ β_n(ε)/n` for `n = 1..=n_max` with the
/// matching converse bounds. Cells run in parallel on the current pool.
pub fn exponent_sequence(
    rho: &DensityOperator,
    mixture: &FiniteMixture,
    epsilon: f64,
    n_max: usize,
    budget: &Budget,
) -> Result<Vec<TradeoffPoint>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    check_copies(rho.dim(), n_max, budget)?;
    (1..=n_max)
        .into_par_iter()
        .map(|n| tradeoff_point(rho, mixture, epsilon, n, budget))
        .collect()
}

pub fn tradeoff_point(
    rho: &DensityOperator,
    mixture: &FiniteMixture,
    epsilon: f64,
    n: usize,
    budget: &Budget,
) -> Result<TradeoffPoint> {
    let rho_n = rho.tensor_power(n, budget)?;
    let sigma_n = mix_tensor_power(mixture, n, budget)?;
    // the optimal threshold grows roughly like 2^{nD}
    let d1 = rel_entropy_operators(rho.op(), mixture.mean().op())?;
    let warm = if d1.is_finite() { Some((n as f64 * d1).exp2()) } else { None };
    let sol = optimal_beta_ops(rho_n.op(), sigma_n.op(), epsilon, warm, &NpOptions::default())?;
    let d = if mixture.len() == 1 {
        n as f64 * rel_entropy_operators(rho.op(), mixture.components()[0].op())?
    } else {
        rel_entropy_operators(rho_n.op(), sigma_n.op())?
    };
    Ok(TradeoffPoint {
        n,
        epsilon,
        beta: sol.beta,
        exponent: exponent_of(sol.beta, n),
        converse_bound: converse_from_divergence(d, n, epsilon),
        method: "neyman_pearson_threshold".into(),
    })
}

/// `−log₂ β / n` (`+∞` for β = 0).
pub fn exponent_of(beta: f64, n: usize) -> f64 {
    if beta <= 0.0 {
        f64::INFINITY
    } else {
        -beta.log2() / n as f64
    }
}

/// Projector test `{ρ − 2^λ σ}_+` with its Rényi error certificates.
#[derive(Clone, Debug)]
pub struct AudenaertTest {
    pub test: TestOperator,
    pub lambda: f64,
    pub s: f64,
    /// Petz Rényi divergence `D_s(ρ‖σ)` used in the bounds.
    pub petz: f64,
    /// `2^{(1−s)(λ − D_s)}`.
    pub alpha_bound: f64,
    /// `2^{−sλ − (1−s)D_s}`.
    pub beta_bound: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn audenaert_test(
    rho: &HermitianOperator,
    sigma: &HermitianOperator,
    lambda: f64,
    s: f64,
) -> Result<AudenaertTest> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("s = {s} must lie in (0,1)")));
    }
    rho.ensure_same_dim(sigma)?;
    let scaled = sigma.scale(lambda.exp2());
    let pp = operator::positive_part(&rho.sub(&scaled)?)?;
    let test = TestOperator::trusted(pp.projector);
    let (alpha, beta) = errors_raw(rho, sigma, test.op());
    let petz = PetzOverlap::new(rho, sigma)?.divergence(s);
    Ok(AudenaertTest {
        alpha_bound: ((1.0 - s) * (lambda - petz)).exp2(),
        beta_bound: (-s * lambda - (1.0 - s) * petz).exp2(),
        test,
        lambda,
        s,
        petz,
        alpha,
        beta,
    })
}

/// Threshold `λ = D_s + log₂(ε)/(1 − s)`, which makes the α certificate
/// equal to ε.
pub fn audenaert_lambda(petz: f64, epsilon: f64, s: f64) -> f64 {
    petz + epsilon.log2() / (1.0 - s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{cx, SystemShape};
    use crate::states::random_density;

    fn diag(p: &[f64]) -> DensityOperator {
        DensityOperator::diagonal(p).unwrap()
    }

    #[test]
    fn error_pairs() {
        let rho = random_density(2, 2, 1).unwrap();
        let sigma = random_density(2, 2, 2).unwrap();
        let (a, b) = errors(&rho, &sigma, &TestOperator::identity(2)).unwrap();
        assert!(a.abs() < 1e-15 && (b - 1.0).abs() < 1e-15);
        let (a, b) = errors(&rho, &sigma, &TestOperator::zero(2)).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && b.abs() < 1e-15);
        let m = TestOperator::new(HermitianOperator::from_diagonal(&[1.0, 0.0])).unwrap();
        let (a, b) = errors(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]), &m).unwrap();
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
        assert!(TestOperator::new(HermitianOperator::from_diagonal(&[1.5, 0.0])).is_err());
    }

    #[test]
    fn equal_states_saturate() {
        let rho = random_density(3, 3, 4).unwrap();
        for eps in [0.1, 0.5, 0.9] {
            let sol = optimal_beta(&rho, &rho, eps).unwrap();
            assert!((sol.beta - (1.0 - eps)).abs() < 1e-9, "{} vs {}", sol.beta, 1.0 - eps);
            assert!((sol.alpha - eps).abs() < 1e-9);
        }
    }

    #[test]
    fn orthogonal_states_give_zero() {
        let sol = optimal_beta(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]), 0.3).unwrap();
        assert!(sol.beta.abs() < 1e-15);
        let h = cx(std::f64::consts::FRAC_1_SQRT_2);
        let plus = DensityOperator::pure(&[h, h], SystemShape::single(2)).unwrap();
        let minus = DensityOperator::pure(&[h, -h], SystemShape::single(2)).unwrap();
        assert!(optimal_beta(&plus, &minus, 0.01).unwrap().beta < 1e-12);
    }

    #[test]
    fn returned_test_achieves_reported_errors() {
        let rho = random_density(4, 4, 10).unwrap();
        let sigma = random_density(4, 4, 11).unwrap();
        for eps in [0.05, 0.3, 0.7] {
            let sol = optimal_beta(&rho, &sigma, eps).unwrap();
            let (a, b) = errors(&rho, &sigma, &sol.test).unwrap();
            assert!((b - sol.beta).abs() < 1e-10);
            assert!(a <= eps + 1e-10);
            assert!(sol.beta - sol.beta_lower < 1e-9);
            TestOperator::new(sol.test.op().clone()).unwrap();
        }
    }

    #[test]
    fn classical_step_function() {
        // commuting case: g(t) is a step function and mixing is required
        let rho = diag(&[0.5, 0.3, 0.2]);
        let sigma = diag(&[0.1, 0.3, 0.6]);
        // likelihood ratios 5, 1, 1/3: take symbol 0 fully, then part of 1
        let sol = optimal_beta(&rho, &sigma, 0.3).unwrap();
        let expected = 0.1 + 0.3 * (0.2 / 0.3);
        assert!((sol.beta - expected).abs() < 1e-12, "{}", sol.beta);
    }

    #[test]
    fn audenaert_equal_states_at_zero() {
        let rho = random_density(2, 2, 3).unwrap();
        let t = audenaert_test(rho.op(), rho.op(), 0.0, 0.5).unwrap();
        assert!(t.test.op().frobenius_norm() < 1e-12);
        assert!((t.alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponent_sequence_equal_states() {
        let rho = random_density(2, 2, 6).unwrap();
        let pts = exponent_sequence(&rho, &FiniteMixture::singleton(rho.clone()), 0.2, 4, &Budget::default()).unwrap();
        for p in &pts {
            let expect = -(0.8f64).log2() / p.n as f64;
            assert!((p.exponent - expect).abs() < 1e-8);
            assert!((p.converse_bound - 1.0 / (p.n as f64 * 0.8)).abs() < 1e-9);
        }
        assert!(matches!(
            exponent_sequence(&rho, &FiniteMixture::singleton(rho.clone()), 0.2, 13, &Budget::default()),
            Err(Error::CopiesExceedBudget { max_feasible: 12, .. })
        ));
    }

    #[test]
    fn converse_infinite_on_support_violation() {
        let b = converse_bound(&diag(&[0.5, 0.5]), &FiniteMixture::singleton(diag(&[1.0, 0.0])), 2, 0.1, &Budget::default())
            .unwrap();
        assert!(b.is_infinite());
    }
}

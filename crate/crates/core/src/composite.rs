//! Composite hypotheses: worst-case optimal tests over finite families,
//! regularized divergences, Carathéodory reduction of mixtures, and the
//! coherence, mutual-information and Chernoff specializations.

use std::f64::consts::LN_2;

use faer::Mat;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{chernoff, golden_max, rel_entropy, rel_entropy_operators, PetzOverlap};
use crate::divergence::{petz_renyi_coherence, rel_entropy_of_coherence, sandwiched_quasi};
use crate::error::{Error, Result};
use crate::neyman_pearson::{audenaert_lambda, audenaert_test, check_copies, optimal_beta_ops, NpOptions, TestOperator};
use crate::operator::{self, divided_differences, eig, Budget, HermitianOperator, SpectralDecomposition};
use crate::optim::{minimize_on_product, PgdOptions};
use crate::report::{extended_float, BoundReport, Check};
use crate::states::{
    binomial, incoherent_projection, mix_tensor_power, random_density_with, symmetric_isometry,
    universal_symmetric_state, DensityOperator, FiniteMixture,
};

#[derive(Clone, Copy, Debug)]
pub struct CompositeOptions {
    pub max_iterations: usize,
    /// Multiplicative-weights step at iteration `k` is `learning_rate/√k`.
    pub learning_rate: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

impl Default for CompositeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            learning_rate: 0.5,
            abs_gap: 1e-9,
            rel_gap: 1e-6,
        }
    }
}

/// Certified interval `[lower, upper]` for the composite optimal Type-2
/// error, with the test attaining `upper`.
#[derive(Clone, Debug)]
pub struct CompositeSolution {
    /// Worst-case β of `test` over the alternative family.
    pub upper: f64,
    /// Lagrangian lower bound on the optimal worst-case β.
    pub lower: f64,
    /// Worst-case α of `test` over the null family (≤ ε).
    pub worst_alpha: f64,
    pub test: TestOperator,
    pub null_weights: Vec<f64>,
    pub alt_weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl CompositeSolution {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn composite_optimal_beta(
    nulls: &[DensityOperator],
    alts: &[DensityOperator],
    epsilon: f64,
) -> Result<CompositeSolution> {
    let n: Vec<HermitianOperator> = nulls.iter().map(|r| r.op().clone()).collect();
    let a: Vec<HermitianOperator> = alts.iter().map(|r| r.op().clone()).collect();
    composite_optimal_beta_ops(&n, &a, epsilon, &CompositeOptions::default())
}

fn weighted_sum(ops: &[HermitianOperator], w: &[f64]) -> HermitianOperator {
    let mut acc = HermitianOperator::zeros(ops[0].dim());
    for (op, &wi) in ops.iter().zip(w) {
        if wi != 0.0 {
            acc = acc.lincomb(1.0, op, wi).expect("same dimension");
        }
    }
    acc
}

/// Errors of `m` against every family member, then the cheapest feasible
/// repair `c·M + (1 − c)·1` with `c = min(1, ε/max α)`. Returns
/// `(worst β, worst α, c)` of the repaired test.
fn repaired_errors(
    m: &HermitianOperator,
    nulls: &[HermitianOperator],
    alts: &[HermitianOperator],
    epsilon: f64,
) -> (f64, f64, f64, Vec<f64>, Vec<f64>) {
    let alphas: Vec<f64> = nulls.iter().map(|r| 1.0 - r.trace_product(m)).collect();
    let betas: Vec<f64> = alts.iter().map(|s| s.trace_product(m)).collect();
    let amax = alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c = if amax <= epsilon { 1.0 } else { epsilon / amax };
    let bmax = betas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (c * bmax + 1.0 - c, c * amax, c, alphas, betas)
}

fn mw_step(weights: &mut [f64], gains: &[f64], eta: f64) {
    let hi = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = gains.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = hi - lo;
    if !(spread > 0.0) {
        return;
    }
    for (w, g) in weights.iter_mut().zip(gains) {
        *w *= (eta * (g - hi) / spread).exp();
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
}

/// Worst-case optimal test between the convex hulls of two finite families.
///
/// Multiplicative weights drive the null and alternative mixture weights;
/// each iterate solves the Neyman–Pearson problem for the mixed pair, whose
/// Lagrangian certificate lower-bounds the composite value. Upper bounds
/// come from the iterates' tests and their running average, repaired to
/// meet every Type-1 constraint.
pub fn composite_optimal_beta_ops(
    nulls: &[HermitianOperator],
    alts: &[HermitianOperator],
    epsilon: f64,
    opts: &CompositeOptions,
) -> Result<CompositeSolution> {
    if nulls.is_empty() || alts.is_empty() {
        return Err(Error::InvalidArgument("hypothesis families must be nonempty".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0,1)")));
    }
    for op in nulls.iter().chain(alts) {
        nulls[0].ensure_same_dim(op)?;
    }
    let dim = nulls[0].dim();
    let mut nu = vec![1.0 / nulls.len() as f64; nulls.len()];
    let mut mu = vec![1.0 / alts.len() as f64; alts.len()];
    let mut lower = 0.0f64;
    let mut best: Option<(f64, f64, HermitianOperator)> = None;
    let mut best_weights = (nu.clone(), mu.clone());
    let mut average = HermitianOperator::zeros(dim);
    let mut warm = None;
    let np_opts = NpOptions::default();
    let mut iterations = 0;
    let mut converged = false;

    let consider = |m: &HermitianOperator, best: &mut Option<(f64, f64, HermitianOperator)>| {
        let (upper, alpha, c, alphas, betas) = repaired_errors(m, nulls, alts, epsilon);
        if best.as_ref().map_or(true, |b| upper < b.0) {
            let repaired = if c < 1.0 { m.lincomb(c, &HermitianOperator::identity(dim), 1.0 - c).expect("same dimension") } else { m.clone() };
            *best = Some((upper, alpha, repaired));
        }
        (alphas, betas)
    };

    for k in 1..=opts.max_iterations.max(1) {
        iterations = k;
        let rho = weighted_sum(nulls, &nu);
        let sigma = weighted_sum(alts, &mu);
        let sol = optimal_beta_ops(&rho, &sigma, epsilon, warm, &np_opts)?;
        if sol.t_lo.is_finite() && sol.t_lo > 0.0 {
            warm = Some(if sol.t_hi.is_finite() { (sol.t_lo * sol.t_hi).sqrt() } else { sol.t_lo });
        }
        if sol.beta_lower > lower {
            lower = sol.beta_lower;
            best_weights = (nu.clone(), mu.clone());
        }
        let m = sol.test.op();
        let (alphas, betas) = consider(m, &mut best);
        average = average.lincomb((k - 1) as f64 / k as f64, m, 1.0 / k as f64)?;
        if k > 1 {
            consider(&average, &mut best);
        }
        let upper = best.as_ref().map(|b| b.0).unwrap_or(1.0);
        if upper - lower <= opts.abs_gap + opts.rel_gap * upper {
            converged = true;
            break;
        }
        let eta = opts.learning_rate / (k as f64).sqrt();
        mw_step(&mut mu, &betas, eta);
        let violations: Vec<f64> = alphas.iter().map(|a| a - epsilon).collect();
        mw_step(&mut nu, &violations, eta);
    }
    let (upper, worst_alpha, m) = best.expect("at least one iteration");
    Ok(CompositeSolution {
        upper,
        lower: lower.min(upper),
        worst_alpha,
        test: TestOperator::new(m)?,
        null_weights: best_weights.0,
        alt_weights: best_weights.1,
        iterations,
        converged,
    })
}

/// Per-copy regularized divergence at one `n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularizedValue {
    pub n: usize,
    /// `(1/n) min_i min_w D(ρ_i^{⊗n} ‖ Σ_j w_j σ_j^{⊗n})`.
    #[serde(with = "extended_float")]
    pub value: f64,
    /// Minimizing vertex of the null family (lowest index on ties).
    pub vertex: usize,
    /// Mixture weights over the alternative family at the minimizer.
    pub weights: Vec<f64>,
    pub stationarity: f64,
    pub converged: bool,
    /// Per-vertex values, per copy.
    pub per_vertex: Vec<f64>,
    /// Alternatives left out of the minimization for the chosen vertex
    /// because `D(ρ_i‖σ_j) = ∞`.
    pub excluded: Vec<usize>,
}

pub(crate) struct MixtureMinimum {
    pub(crate) value: f64,
    pub(crate) weights: Vec<f64>,
    pub(crate) stationarity: f64,
    pub(crate) converged: bool,
    pub(crate) excluded: Vec<usize>,
}

fn log_on_support(spec: &SpectralDecomposition) -> Result<HermitianOperator> {
    spec.apply_psd(f64::ln)
}

/// `Σ_kl Γ_kl (V†XV)_kl conj((V†RV)_kl)` — the directional derivative
/// `tr[R · Df(A)[X]]` for Hermitian `R`, `X` given `A`'s eigenbasis `V` and
/// the divided differences `Γ` of `f`.
fn frechet_pairing(gamma: &[f64], v: faer::MatRef<'_, faer::c64>, x: &HermitianOperator, r_rot: &HermitianOperator) -> f64 {
    let x_rot = x.in_basis(v);
    let n = v.ncols();
    let mut acc = 0.0;
    for l in 0..n {
        for k in 0..n {
            let g = gamma[k * n + l];
            if g != 0.0 {
                acc += g * (x_rot.get(k, l) * r_rot.get(k, l).conj()).re;
            }
        }
    }
    acc
}

/// `min_w D(ρ ‖ Σ_j w_j σ_j)` over the simplex, in bits.
pub(crate) fn minimize_mixture_divergence(
    rho: &HermitianOperator,
    alts: &[HermitianOperator],
    opts: &PgdOptions,
) -> Result<MixtureMinimum> {
    let rho_spec = eig(rho)?;
    let neg_entropy = rho_spec
        .eigenvalues()
        .iter()
        .filter(|&&x| x > rho_spec.cutoff())
        .map(|&x| x * x.ln())
        .sum::<f64>()
        / LN_2;
    let mut active = Vec::new();
    let mut excluded = Vec::new();
    for (j, s) in alts.iter().enumerate() {
        if rel_entropy_operators(rho, s)?.is_finite() {
            active.push(j);
        } else {
            excluded.push(j);
        }
    }
    if active.is_empty() {
        // no single alternative covers supp ρ; mixtures still might
        active = (0..alts.len()).collect();
        excluded.clear();
    }
    let pool: Vec<&HermitianOperator> = active.iter().map(|&j| &alts[j]).collect();
    let objective = |w: &[f64]| -> (f64, Vec<f64>) {
        let mut sigma = HermitianOperator::zeros(rho.dim());
        for (s, &wj) in pool.iter().zip(w) {
            if wj != 0.0 {
                sigma = sigma.lincomb(1.0, s, wj).expect("same dimension");
            }
        }
        let Ok(spec) = eig(&sigma) else {
            return (f64::INFINITY, vec![0.0; w.len()]);
        };
        if crate::divergence::support_leak(rho, &spec) > crate::divergence::SUPPORT_LEAK_TOLERANCE {
            return (f64::INFINITY, vec![0.0; w.len()]);
        }
        let Ok(log_sigma) = log_on_support(&spec) else {
            return (f64::INFINITY, vec![0.0; w.len()]);
        };
        let value = neg_entropy - rho.trace_product(&log_sigma) / LN_2;
        let gamma = divided_differences(spec.eigenvalues(), f64::ln, |x| 1.0 / x, spec.cutoff());
        let v = spec.eigenvectors();
        let rho_rot = rho.in_basis(v);
        let grad = pool
            .iter()
            .map(|s| -frechet_pairing(&gamma, v, s, &rho_rot) / LN_2)
            .collect();
        (value, grad)
    };
    let start = vec![1.0 / pool.len() as f64; pool.len()];
    let (value, w, stationarity, converged) = if pool.len() == 1 {
        (objective(&start).0, start, 0.0, true)
    } else {
        let r = minimize_on_product(objective, &[pool.len()], &start, opts);
        (r.value, r.x, r.stationarity, r.converged)
    };
    let mut weights = vec![0.0; alts.len()];
    for (&j, wj) in active.iter().zip(w) {
        weights[j] = wj;
    }
    Ok(MixtureMinimum {
        value,
        weights,
        stationarity,
        converged,
        excluded,
    })
}

/// `(1/n) min_{ρ∈S} min_w D(ρ^{⊗n} ‖ Σ_j w_j σ_j^{⊗n})`. Vertices of the null
/// hull suffice; each vertex is an independent convex problem in `w`.
pub fn regularized_divergence(
    nulls: &[DensityOperator],
    alts: &[DensityOperator],
    n: usize,
    budget: &Budget,
    opts: &PgdOptions,
) -> Result<RegularizedValue> {
    if nulls.is_empty() || alts.is_empty() || n == 0 {
        return Err(Error::InvalidArgument("need nonempty families and n >= 1".into()));
    }
    let d = nulls[0].dim();
    for s in nulls.iter().chain(alts) {
        if s.dim() != d {
            return Err(Error::DimensionMismatch { left: d, right: s.dim() });
        }
    }
    check_copies(d, n, budget)?;
    let alts_n: Vec<HermitianOperator> = alts
        .iter()
        .map(|s| operator::kron_power(s.op(), n, budget))
        .collect::<Result<_>>()?;
    let results: Vec<MixtureMinimum> = nulls
        .par_iter()
        .map(|r| minimize_mixture_divergence(&operator::kron_power(r.op(), n, budget)?, &alts_n, opts))
        .collect::<Result<_>>()?;
    let per_vertex: Vec<f64> = results.iter().map(|r| r.value / n as f64).collect();
    let mut vertex = 0;
    for (i, v) in per_vertex.iter().enumerate() {
        if *v < per_vertex[vertex] {
            vertex = i;
        }
    }
    let r = &results[vertex];
    Ok(RegularizedValue {
        n,
        value: per_vertex[vertex],
        vertex,
        weights: r.weights.clone(),
        stationarity: r.stationarity,
        converged: r.converged,
        per_vertex,
        excluded: r.excluded.clone(),
    })
}

/// `(1/n)D(ρ_n(ν)‖σ_n) − [min_i (1/n)D(ρ_i^{⊗n}‖σ_n) − log₂N/n]`; nonnegative
/// by entropy quasi-convexity, which is why vertices suffice.
pub fn vertex_sufficiency_slack(
    nulls: &FiniteMixture,
    alts: &FiniteMixture,
    n: usize,
    budget: &Budget,
) -> Result<f64> {
    let sigma_n = mix_tensor_power(alts, n, budget)?;
    let rho_n = mix_tensor_power(nulls, n, budget)?;
    let lhs = rel_entropy_operators(rho_n.op(), sigma_n.op())?;
    let mut best = f64::INFINITY;
    for c in nulls.components() {
        let r = c.tensor_power(n, budget)?;
        best = best.min(rel_entropy_operators(r.op(), sigma_n.op())?);
    }
    let nf = n as f64;
    Ok(lhs / nf - (best - (nulls.len() as f64).log2()) / nf)
}

/// `(n + 1)^{2d²}`: the component cap for reproducing `n`-th tensor moments
/// of states on `C^d` (as `f64`; it overflows integers quickly).
pub fn caratheodory_cap(local_dim: usize, n: usize) -> f64 {
    ((n + 1) as f64).powf(2.0 * (local_dim * local_dim) as f64)
}

/// Real coordinates of a Hermitian matrix: diagonal, then real and
/// imaginary parts of the strict upper triangle.
fn hermitian_coordinates(a: &HermitianOperator) -> Vec<f64> {
    let n = a.dim();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(a.get(i, i).re);
    }
    for j in 0..n {
        for i in 0..j {
            let z = a.get(i, j);
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

/// Finite mixture with the same `n`-th tensor moment `Σ_j w_j σ_j^{⊗n}` and
/// at most as many components as the affine rank of the moment vectors.
/// Exact duplicates are merged first; each reduction step moves along a
/// null vector of `[vec(σ_j^{⊗n}); 1]` until one weight hits zero.
pub fn caratheodory_reduce(m: &FiniteMixture, n: usize, budget: &Budget) -> Result<FiniteMixture> {
    check_copies(m.dim(), n, budget)?;
    let mut comps: Vec<DensityOperator> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (w, c) in m.weights().iter().zip(m.components()) {
        if *w <= 0.0 {
            continue;
        }
        match comps.iter().position(|k| k.op().max_abs_diff(c.op()) <= 1e-14) {
            Some(k) => weights[k] += w,
            None => {
                comps.push(c.clone());
                weights.push(*w);
            }
        }
    }
    let mut coords: Vec<Vec<f64>> = comps
        .iter()
        .map(|c| Ok(hermitian_coordinates(&operator::kron_power(c.op(), n, budget)?)))
        .collect::<Result<_>>()?;
    loop {
        let k = comps.len();
        if k <= 1 {
            break;
        }
        let rows = coords[0].len() + 1;
        let a = Mat::<f64>::from_fn(rows, k, |i, j| if i + 1 == rows { 1.0 } else { coords[j][i] });
        let svd = a.svd().map_err(|_| Error::SvdNoConvergence { rows, cols: k })?;
        let s = svd.S().column_vector();
        let smax = s[0];
        let smin = if rows >= k { s[k - 1] } else { 0.0 };
        if smin > 1e-10 * smax {
            break;
        }
        let v = svd.V();
        let mut c: Vec<f64> = (0..k).map(|i| v[(i, k - 1)]).collect();
        if !c.iter().any(|&x| x > 1e-15) {
            c.iter_mut().for_each(|x| *x = -*x);
        }
        let mut tau = f64::INFINITY;
        let mut hit = 0;
        for j in 0..k {
            if c[j] > 1e-15 {
                let t = weights[j] / c[j];
                if t < tau {
                    tau = t;
                    hit = j;
                }
            }
        }
        for j in 0..k {
            weights[j] -= tau * c[j];
        }
        weights[hit] = 0.0;
        let mut j = 0;
        while j < comps.len() {
            if weights[j] <= 1e-15 {
                weights.remove(j);
                comps.remove(j);
                coords.remove(j);
            } else {
                j += 1;
            }
        }
    }
    FiniteMixture::normalized(weights, comps)
}

/// Direction of a per-n sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Single,
    Nondecreasing,
    Nonincreasing,
    Mixed,
}

impl Trend {
    pub fn of(values: &[f64]) -> Self {
        if values.len() < 2 {
            return Trend::Single;
        }
        let up = values.windows(2).all(|w| w[1] >= w[0] - 1e-12);
        let down = values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        match (up, down) {
            (true, _) => Trend::Nondecreasing,
            (_, true) => Trend::Nonincreasing,
            _ => Trend::Mixed,
        }
    }
}

/// Finite-n sequence of a regularized quantity; never extrapolated.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularizedEstimate {
    pub per_n: Vec<(usize, f64)>,
    pub trend: Trend,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RegularizedEstimate {
    pub fn new(per_n: Vec<(usize, f64)>, notes: Vec<String>) -> Self {
        let values: Vec<f64> = per_n.iter().map(|p| p.1).collect();
        Self {
            trend: Trend::of(&values),
            per_n,
            notes,
        }
    }
}

/// `Δ(ρ)` together with `½Δ(ρ) + ½|c⟩⟨c|` for every basis vector `c`.
pub fn default_incoherent_family(rho: &DensityOperator) -> Vec<DensityOperator> {
    let delta = incoherent_projection(rho);
    let d = rho.dim();
    let mut out = vec![delta.clone()];
    for c in 0..d {
        let mut p = delta.op().diagonal();
        p.iter_mut().for_each(|x| *x *= 0.5);
        p[c] += 0.5;
        out.push(DensityOperator::diagonal(&p).expect("valid distribution"));
    }
    out
}

#[derive(Clone, Debug)]
pub struct CoherenceOptions {
    pub epsilon: f64,
    pub n_max: usize,
    /// Orders in `(0,1)` for the Rényi achievability bound.
    pub s_values: Vec<f64>,
    pub composite: CompositeOptions,
    pub budget: Budget,
}

impl Default for CoherenceOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            n_max: 6,
            s_values: vec![0.5],
            composite: CompositeOptions::default(),
            budget: Budget::from_env(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoherenceRow {
    pub n: usize,
    pub beta_upper: f64,
    pub beta_lower: f64,
    /// `−log₂ β_upper / n`, attained by an explicit test.
    #[serde(with = "extended_float")]
    pub exponent: f64,
    /// `−log₂ β_lower / n`, an upper estimate of the optimal exponent.
    #[serde(with = "extended_float")]
    pub exponent_ceiling: f64,
    /// `(s, D_{s,C}(ρ) − (s/(1−s)) log₂(1/ε)/n)`.
    pub achievability: Vec<(f64, f64)>,
    #[serde(with = "extended_float")]
    pub converse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Dimension the tests were computed in (the symmetric subspace for
    /// pure `ρ`).
    pub working_dim: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoherenceExperiment {
    pub coherence: f64,
    pub renyi_coherence: Vec<(f64, f64)>,
    pub rows: Vec<CoherenceRow>,
    pub estimate: RegularizedEstimate,
    pub report: BoundReport,
}

/// Composite test of `ρ^{⊗n}` against mixtures of tensor powers of an
/// incoherent family, for `n = 1..=n_max`, with the Rényi achievability
/// and relative-entropy converse bounds checked at every `n`.
///
/// For pure `ρ` the problem is solved exactly on the symmetric subspace:
/// `ρ^{⊗n}` lives there and every alternative commutes with its projector,
/// so compressing a test onto it never increases a Type-2 error.
pub fn coherence_exponent_experiment(
    rho: &DensityOperator,
    family: &[DensityOperator],
    opts: &CoherenceOptions,
) -> Result<CoherenceExperiment> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("incoherent family is empty".into()));
    }
    if let Some(bad) = family.iter().position(|s| !s.op().is_diagonal(1e-12)) {
        return Err(Error::InvalidArgument(format!("family member {bad} is not incoherent")));
    }
    if opts.s_values.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
        return Err(Error::InvalidArgument("achievability orders must lie in (0,1)".into()));
    }
    let d = rho.dim();
    check_copies(d, opts.n_max, &opts.budget)?;
    let eps = opts.epsilon;
    let coherence = rel_entropy_of_coherence(rho)?.value;
    let renyi: Vec<(f64, f64)> = opts
        .s_values
        .iter()
        .map(|&s| Ok((s, petz_renyi_coherence(rho, s)?.value)))
        .collect::<Result<_>>()?;
    let single_d: Vec<f64> = family
        .iter()
        .map(|s| Ok(rel_entropy(rho, s)?.value))
        .collect::<Result<_>>()?;
    let d_best = single_d.iter().cloned().fold(f64::INFINITY, f64::min);
    let pure = rho.purity() >= 1.0 - 1e-12;

    let mut report = BoundReport::new("coherence exponent");
    report.value("D_C", coherence, "coherence_relative_entropy", None, 1e-12);
    for (s, v) in &renyi {
        report.value(format!("D_C_petz(s={s})"), *v, "coherence_petz_renyi", None, 1e-7);
    }
    let mut rows = Vec::new();
    for n in 1..=opts.n_max {
        let rho_n = operator::kron_power(rho.op(), n, &opts.budget)?;
        let alts_n: Vec<HermitianOperator> = family
            .iter()
            .map(|s| operator::kron_power(s.op(), n, &opts.budget))
            .collect::<Result<_>>()?;
        let (nulls, alts) = if pure && n > 1 {
            let v = symmetric_isometry(d, n, &opts.budget)?;
            (
                vec![rho_n.in_basis(v.as_ref())],
                alts_n.iter().map(|a| a.in_basis(v.as_ref())).collect::<Vec<_>>(),
            )
        } else {
            (vec![rho_n], alts_n)
        };
        let working_dim = nulls[0].dim();
        let sol = composite_optimal_beta_ops(&nulls, &alts, eps, &opts.composite)?;
        let nf = n as f64;
        let exponent = crate::neyman_pearson::exponent_of(sol.upper, n);
        let ceiling = crate::neyman_pearson::exponent_of(sol.lower, n);
        let penalty = (1.0 / eps).log2() / nf;
        let achievability: Vec<(f64, f64)> = renyi.iter().map(|&(s, v)| (s, v - s / (1.0 - s) * penalty)).collect();
        let converse = if d_best.is_finite() {
            (nf * d_best + 1.0) / (nf * (1.0 - eps))
        } else {
            f64::INFINITY
        };
        report.value("beta_upper", sol.upper, "composite_multiplicative_weights", Some(n), sol.gap());
        report.value("beta_lower", sol.lower, "lagrangian_certificate", Some(n), sol.gap());
        report.check(Check::le(format!("alpha n={n}"), sol.worst_alpha, eps, 1e-9));
        for (s, b) in &achievability {
            report.check(Check::ge(format!("achievability n={n} s={s}"), exponent, *b, 1e-9));
        }
        report.check(Check::le(format!("converse n={n}"), ceiling, converse, 1e-9));
        if !sol.converged {
            report.note(format!("n={n}: duality gap {:.3e} after {} iterations", sol.gap(), sol.iterations));
        }
        rows.push(CoherenceRow {
            n,
            beta_upper: sol.upper,
            beta_lower: sol.lower,
            exponent,
            exponent_ceiling: ceiling,
            achievability,
            converse,
            iterations: sol.iterations,
            converged: sol.converged,
            working_dim,
        });
    }
    let estimate = RegularizedEstimate::new(
        rows.iter().map(|r| (r.n, r.exponent)).collect(),
        vec![format!("single-letter D_C = {coherence:.12}")],
    );
    Ok(CoherenceExperiment {
        coherence,
        renyi_coherence: renyi,
        rows,
        estimate,
        report,
    })
}

/// Result of splitting `D_s(ρ_AB‖σ_A⊗σ_B)` through the Sibson state.
#[derive(Clone, Debug)]
pub struct SibsonDecomposition {
    pub sigma_bar: DensityOperator,
    /// `D_s(ρ_AB‖σ_A⊗σ_B)`.
    pub lhs: f64,
    /// `D_s(ρ_AB‖σ_A⊗σ̄_B)`.
    pub first: f64,
    /// `D_s(σ̄_B‖σ_B)`.
    pub second: f64,
    pub residual: f64,
    /// False when any of the three terms is infinite.
    pub finite: bool,
}

fn check_bipartite(rho_ab: &DensityOperator) -> Result<(usize, usize)> {
    let f = rho_ab.shape().factors();
    if f.len() != 2 {
        return Err(Error::InvalidArgument(format!("expected a bipartite shape, got {f:?}")));
    }
    Ok((f[0], f[1]))
}

/// `σ̄ ∝ (tr_other[(τ^{(1−s)/2} ⊗ 1) ρ^s (τ^{(1−s)/2} ⊗ 1)])^{1/s}` with `τ` on
/// factor `side` and the trace over that same factor.
fn sibson_state(rho_s: &HermitianOperator, rho_ab: &DensityOperator, tau: &DensityOperator, side: usize, s: f64) -> Result<DensityOperator> {
    let (da, db) = check_bipartite(rho_ab)?;
    let t = eig(tau.op())?.apply_psd(|x| x.powf((1.0 - s) / 2.0))?;
    let lifted = if side == 0 {
        t.kron(&HermitianOperator::identity(db))
    } else {
        HermitianOperator::identity(da).kron(&t)
    };
    let inner = rho_s.congruence(lifted.matrix());
    let x = operator::partial_trace(&inner, rho_ab.shape(), &[1 - side])?;
    let root = eig(&x)?.apply_psd(|v| v.powf(1.0 / s))?;
    let tr = root.trace();
    if !(tr > 0.0) {
        return Err(Error::InvalidState("Sibson state has zero trace".into()));
    }
    let shape = rho_ab.shape().select(&[1 - side]);
    DensityOperator::new(root.scale(1.0 / tr), shape)
}

fn petz_raw(a: &HermitianOperator, b: &HermitianOperator, s: f64) -> Result<f64> {
    Ok(PetzOverlap::new(a, b)?.divergence(s))
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0) || (s - 1.0).abs() < 1e-15 || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("Rényi order {s} must lie in (0,1)∪(1,∞)")));
    }
    Ok(())
}

pub fn sibson_decompose(
    rho_ab: &DensityOperator,
    sigma_a: &DensityOperator,
    sigma_b: &DensityOperator,
    s: f64,
) -> Result<SibsonDecomposition> {
    check_order(s)?;
    let (da, db) = check_bipartite(rho_ab)?;
    if sigma_a.dim() != da || sigma_b.dim() != db {
        return Err(Error::DimensionMismatch {
            left: da * db,
            right: sigma_a.dim() * sigma_b.dim(),
        });
    }
    let rho_s = eig(rho_ab.op())?.apply_psd(|x| x.powf(s))?;
    let bar = sibson_state(&rho_s, rho_ab, sigma_a, 0, s)?;
    let lhs = petz_raw(rho_ab.op(), &sigma_a.op().kron(sigma_b.op()), s)?;
    let first = petz_raw(rho_ab.op(), &sigma_a.op().kron(bar.op()), s)?;
    let second = petz_raw(bar.op(), sigma_b.op(), s)?;
    let finite = lhs.is_finite() && first.is_finite() && second.is_finite();
    let residual = if finite {
        (lhs - first - second).abs()
    } else if lhs.is_infinite() && (first.is_infinite() || second.is_infinite()) {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SibsonDecomposition {
        sigma_bar: bar,
        lhs,
        first,
        second,
        residual,
        finite,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct AlternatingOptions {
    pub max_iterations: usize,
    /// Stop when the relative change of the value drops to this level.
    pub tolerance: f64,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RenyiMutualInfo {
    pub value: f64,
    pub sigma_a: DensityOperator,
    pub sigma_b: DensityOperator,
    pub iterations: usize,
    /// False when the iteration cap was hit or the value increased.
    pub converged: bool,
}

/// `I_s(A:B) = min D_s(ρ_AB‖σ_A⊗σ_B)` by alternating exact minimization:
/// the Sibson state is the optimal `σ_B` for fixed `σ_A`, and symmetrically.
pub fn renyi_mutual_info(rho_ab: &DensityOperator, s: f64, opts: &AlternatingOptions) -> Result<RenyiMutualInfo> {
    check_order(s)?;
    check_bipartite(rho_ab)?;
    let rho_s = eig(rho_ab.op())?.apply_psd(|x| x.powf(s))?;
    let mut sa = rho_ab.partial_trace(&[0])?;
    let mut sb = rho_ab.partial_trace(&[1])?;
    let mut value = petz_raw(rho_ab.op(), &sa.op().kron(sb.op()), s)?;
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=opts.max_iterations {
        iterations = k;
        sb = sibson_state(&rho_s, rho_ab, &sa, 0, s)?;
        sa = sibson_state(&rho_s, rho_ab, &sb, 1, s)?;
        let next = petz_raw(rho_ab.op(), &sa.op().kron(sb.op()), s)?;
        if next > value + 1e-12 * value.abs().max(1.0) {
            value = value.min(next);
            break;
        }
        let change = (value - next).abs();
        value = next;
        if change <= opts.tolerance * value.abs().max(1e-300) || change == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(RenyiMutualInfo {
        value: value.max(0.0),
        sigma_a: sa,
        sigma_b: sb,
        iterations,
        converged,
    })
}

/// Upper bound on the sandwiched Rényi mutual information: `D̃_s` at the
/// marginals and at the Petz minimizers, whichever is smaller.
pub fn sandwiched_mutual_info_upper(rho_ab: &DensityOperator, s: f64, petz: &RenyiMutualInfo) -> Result<f64> {
    check_order(s)?;
    let candidates = [
        rho_ab.partial_trace(&[0])?.op().kron(rho_ab.partial_trace(&[1])?.op()),
        petz.sigma_a.op().kron(petz.sigma_b.op()),
    ];
    let mut best = f64::INFINITY;
    for c in candidates {
        let spec = eig(&c)?;
        if s > 1.0 && crate::divergence::support_leak(rho_ab.op(), &spec) > crate::divergence::SUPPORT_LEAK_TOLERANCE {
            continue;
        }
        let q = sandwiched_quasi(rho_ab.op(), &spec, s)?;
        if q > 0.0 {
            best = best.min(q.log2() / (s - 1.0));
        }
    }
    Ok(best)
}

/// `binom(n + d_A² − 1, n) · binom(n + d_B² − 1, n)`.
pub fn mutual_info_poly_factor(da: usize, db: usize, n: usize) -> f64 {
    binomial(n + da * da - 1, n) * binomial(n + db * db - 1, n)
}

/// Minimum eigenvalue of `binom(n + d² − 1, n)·ω_{A^n} − σ` for a
/// permutation-invariant state `σ` on `(C^d)^{⊗n}`.
pub fn schur_weyl_margin(sigma: &HermitianOperator, local_dim: usize, n: usize, budget: &Budget) -> Result<f64> {
    let omega = universal_symmetric_state(local_dim, n, budget)?;
    let g = binomial(n + local_dim * local_dim - 1, n);
    let diff = omega.op().lincomb(g, sigma, -1.0)?;
    Ok(eig(&diff)?.min_eigenvalue())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MutualInfoRow {
    pub n: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub alpha_bound: f64,
    /// `tr[(ω_{A^n}⊗ω_{B^n}) M]`.
    pub beta_universal: f64,
    pub beta_bound: f64,
    pub poly_factor: f64,
    /// `−log₂(p(n)·β_ω)/n`: certified against every product alternative.
    #[serde(with = "extended_float")]
    pub exponent: f64,
    /// `I_s − (s/(1−s)) log₂(1/ε)/n − log₂ p(n)/n`.
    pub lower_bound: f64,
    #[serde(with = "extended_float")]
    pub converse: f64,
    /// `D_s(ρ^{⊗n}‖ω_{A^n}⊗ω_{B^n})`.
    pub petz_universal: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MutualInfoExperiment {
    pub mutual_info: f64,
    pub renyi_mutual_info: f64,
    pub s: f64,
    pub rows: Vec<MutualInfoRow>,
    pub estimate: RegularizedEstimate,
    pub report: BoundReport,
}

/// Threshold tests `{ρ_AB^{⊗n} − 2^λ ω_{A^n}⊗ω_{B^n}}_+` against the
/// product-state alternative, with the chain of certified bounds.
/// `samples` random product states are used to spot-check domination of
/// the Type-2 error by `p(n)·β_ω`.
#[allow(clippy::too_many_arguments)]
pub fn mutual_info_exponent_experiment<R: Rng + ?Sized>(
    rho_ab: &DensityOperator,
    epsilon: f64,
    n_max: usize,
    s: f64,
    samples: usize,
    rng: &mut R,
    budget: &Budget,
) -> Result<MutualInfoExperiment> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("order {s} must lie in (0,1)")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0,1)")));
    }
    let (da, db) = check_bipartite(rho_ab)?;
    check_copies(da * db, n_max, budget)?;
    let info = crate::divergence::mutual_info(rho_ab)?;
    let i_s = renyi_mutual_info(rho_ab, s, &AlternatingOptions::default())?;
    let mut report = BoundReport::new("mutual information exponent");
    report.value("I", info, "entropies", None, 1e-12);
    report.value(format!("I_s(s={s})"), i_s.value, "alternating_sibson", None, 1e-9);
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let nf = n as f64;
        let rho_n = rho_ab.tensor_power(n, budget)?;
        let wa = universal_symmetric_state(da, n, budget)?;
        let wb = universal_symmetric_state(db, n, budget)?;
        // A^n B^n → (AB)^n
        let joint = wa.tensor(&wb);
        let order: Vec<usize> = (0..n).flat_map(|k| [k, n + k]).collect();
        let omega = joint.permute(&order)?;
        let petz = petz_raw(rho_n.op(), omega.op(), s)?;
        let lambda = audenaert_lambda(petz, epsilon, s);
        let t = audenaert_test(rho_n.op(), omega.op(), lambda, s)?;
        let p = mutual_info_poly_factor(da, db, n);
        let exponent = crate::neyman_pearson::exponent_of(p * t.beta, n);
        let penalty = s / (1.0 - s) * (1.0 / epsilon).log2() / nf;
        let lower_bound = i_s.value - penalty - p.log2() / nf;
        let converse = (nf * info + 1.0) / (nf * (1.0 - epsilon));
        report.check(Check::le(format!("alpha n={n}"), t.alpha, epsilon, 1e-9));
        report.check(Check::le(format!("alpha certificate n={n}"), t.alpha, t.alpha_bound, 1e-9));
        report.check(Check::le(format!("beta certificate n={n}"), t.beta, t.beta_bound, 1e-9));
        report.check(Check::ge(format!("universal divergence n={n}"), petz, nf * i_s.value, 1e-8));
        report.check(Check::ge(format!("achievability n={n}"), exponent, lower_bound, 1e-9));
        report.check(Check::le(format!("converse n={n}"), exponent, converse, 1e-9));
        for k in 0..samples {
            let sa = random_density_with(rng, da, da)?;
            let sb = random_density_with(rng, db, db)?;
            let prod = sa.tensor(&sb).tensor_power(n, budget)?;
            let beta = prod.op().trace_product(t.test.op());
            report.check(Check::le(format!("product alternative n={n} sample={k}"), beta, p * t.beta, 1e-12));
        }
        rows.push(MutualInfoRow {
            n,
            lambda,
            alpha: t.alpha,
            alpha_bound: t.alpha_bound,
            beta_universal: t.beta,
            beta_bound: t.beta_bound,
            poly_factor: p,
            exponent,
            lower_bound,
            converse,
            petz_universal: petz,
        });
    }
    let estimate = RegularizedEstimate::new(rows.iter().map(|r| (r.n, r.exponent)).collect(), vec![]);
    Ok(MutualInfoExperiment {
        mutual_info: info,
        renyi_mutual_info: i_s.value,
        s,
        rows,
        estimate,
        report,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChernoffComposite {
    pub n: usize,
    /// `max_s −(1/n) log₂ max_{ν,μ} tr[ρ_n(ν)^s σ_n(μ)^{1−s}]`.
    #[serde(with = "extended_float")]
    pub value: f64,
    pub argmax: f64,
    pub null_weights: Vec<f64>,
    pub alt_weights: Vec<f64>,
    /// `min_{i,j} C(ρ_i, σ_j)`.
    #[serde(with = "extended_float")]
    pub conjectured: f64,
    pub stationarity: f64,
}

struct QuasiMax {
    value: f64,
    x: Vec<f64>,
    stationarity: f64,
}

/// `max_{ν,μ} tr[A(ν)^s B(μ)^{1−s}]`, concave in `(ν, μ)`.
fn maximize_quasi(nulls: &[HermitianOperator], alts: &[HermitianOperator], s: f64) -> QuasiMax {
    let (p, q) = (nulls.len(), alts.len());
    let objective = |x: &[f64]| -> (f64, Vec<f64>) {
        let a = weighted_sum(nulls, &x[..p]);
        let b = weighted_sum(alts, &x[p..]);
        let (Ok(sa), Ok(sb)) = (eig(&a), eig(&b)) else {
            return (f64::INFINITY, vec![0.0; p + q]);
        };
        let quasi = PetzOverlap::from_spectra(&sa, &sb).quasi(s);
        let (Ok(a_s), Ok(b_t)) = (sa.apply_psd(|v| v.powf(s)), sb.apply_psd(|v| v.powf(1.0 - s))) else {
            return (f64::INFINITY, vec![0.0; p + q]);
        };
        let ga = divided_differences(sa.eigenvalues(), |v| v.powf(s), |v| s * v.powf(s - 1.0), sa.cutoff());
        let gb = divided_differences(sb.eigenvalues(), |v| v.powf(1.0 - s), |v| (1.0 - s) * v.powf(-s), sb.cutoff());
        let b_rot = b_t.in_basis(sa.eigenvectors());
        let a_rot = a_s.in_basis(sb.eigenvectors());
        let mut grad = Vec::with_capacity(p + q);
        for r in nulls {
            grad.push(-frechet_pairing(&ga, sa.eigenvectors(), r, &b_rot));
        }
        for r in alts {
            grad.push(-frechet_pairing(&gb, sb.eigenvectors(), r, &a_rot));
        }
        (-quasi, grad)
    };
    let mut x0 = vec![1.0 / p as f64; p];
    x0.extend(vec![1.0 / q as f64; q]);
    if p == 1 && q == 1 {
        return QuasiMax {
            value: -objective(&x0).0,
            x: x0,
            stationarity: 0.0,
        };
    }
    let opts = PgdOptions {
        tolerance: 1e-10,
        ..PgdOptions::default()
    };
    let r = minimize_on_product(objective, &[p, q], &x0, &opts);
    QuasiMax {
        value: -r.value,
        x: r.x,
        stationarity: r.stationarity,
    }
}

/// Per-n composite Chernoff quantity: an 11-point grid in `s` brackets the
/// maximum of the concave outer function, golden section refines it.
pub fn chernoff_composite(
    nulls: &[DensityOperator],
    alts: &[DensityOperator],
    n: usize,
    budget: &Budget,
) -> Result<ChernoffComposite> {
    if nulls.is_empty() || alts.is_empty() || n == 0 {
        return Err(Error::InvalidArgument("need nonempty families and n >= 1".into()));
    }
    let d = nulls[0].dim();
    check_copies(d, n, budget)?;
    let power = |v: &[DensityOperator]| -> Result<Vec<HermitianOperator>> {
        v.iter().map(|s| operator::kron_power(s.op(), n, budget)).collect()
    };
    let (a, b) = (power(nulls)?, power(alts)?);
    let nf = n as f64;
    let outer = |s: f64| -> f64 {
        let q = maximize_quasi(&a, &b, s).value;
        if q <= 0.0 {
            f64::INFINITY
        } else {
            -q.log2() / nf
        }
    };
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let values: Vec<f64> = grid.par_iter().map(|&s| outer(s)).collect();
    let mut k = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[k] {
            k = i;
        }
    }
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(10)];
    let (mut s_best, mut v_best) = golden_max(outer, lo, hi, 1e-6);
    if values[k] > v_best {
        s_best = grid[k];
        v_best = values[k];
    }
    let at = maximize_quasi(&a, &b, s_best);
    let mut conjectured = f64::INFINITY;
    for r in nulls {
        for s in alts {
            conjectured = conjectured.min(chernoff(r, s)?.value.value);
        }
    }
    let p = nulls.len();
    Ok(ChernoffComposite {
        n,
        value: v_best.max(0.0),
        argmax: s_best,
        null_weights: at.x[..p].to_vec(),
        alt_weights: at.x[p..].to_vec(),
        conjectured,
        stationarity: at.stationarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neyman_pearson::optimal_beta;
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
    fn singleton_composite_is_neyman_pearson() {
        let rho = random_density(2, 2, 31).unwrap();
        let sigma = random_density(2, 2, 32).unwrap();
        let c = composite_optimal_beta(&[rho.clone()], &[sigma.clone()], 0.3).unwrap();
        let np = optimal_beta(&rho, &sigma, 0.3).unwrap();
        assert!(c.converged);
        assert!((c.upper - np.beta).abs() < 1e-10);
        assert!(c.gap() < 1e-9);
        let dup = composite_optimal_beta(&[rho.clone()], &[sigma.clone(), sigma.clone()], 0.3).unwrap();
        assert!((dup.upper - c.upper).abs() < 1e-9);
    }

    #[test]
    fn composite_interval_is_ordered() {
        let nulls = [random_density(3, 3, 1).unwrap(), random_density(3, 3, 2).unwrap()];
        let alts = [random_density(3, 3, 3).unwrap(), random_density(3, 3, 4).unwrap()];
        let sol = composite_optimal_beta(&nulls, &alts, 0.2).unwrap();
        assert!(sol.lower <= sol.upper + 1e-15);
        assert!(sol.worst_alpha <= 0.2 + 1e-9);
        for r in &nulls {
            let (a, _) = crate::neyman_pearson::errors(r, &alts[0], &sol.test).unwrap();
            assert!(a <= 0.2 + 1e-9);
        }
    }

    #[test]
    fn regularized_singleton_is_additive() {
        let rho = random_density(2, 2, 5).unwrap();
        let sigma = random_density(2, 2, 6).unwrap();
        let d = rel_entropy(&rho, &sigma).unwrap().value;
        for n in 1..=4 {
            let r = regularized_divergence(&[rho.clone()], &[sigma.clone()], n, &Budget::default(), &PgdOptions::default())
                .unwrap();
            assert!((r.value - d).abs() < 1e-8, "n={n}: {} vs {d}", r.value);
        }
        let zero = regularized_divergence(&[rho.clone()], &[sigma, rho], 2, &Budget::default(), &PgdOptions::default())
            .unwrap();
        assert!(zero.value.abs() < 1e-6, "{}", zero.value);
    }

    #[test]
    fn regularized_mixture_gradient_matches_finite_differences() {
        let rho = random_density(3, 3, 7).unwrap();
        let alts: Vec<HermitianOperator> = (8..11).map(|s| random_density(3, 3, s).unwrap().op().clone()).collect();
        let m = minimize_mixture_divergence(rho.op(), &alts, &PgdOptions::default()).unwrap();
        assert!(m.converged);
        // the minimum is no larger than any vertex or the uniform mixture
        for a in &alts {
            assert!(m.value <= rel_entropy_operators(rho.op(), a).unwrap() + 1e-9);
        }
        let uniform = weighted_sum(&alts, &[1.0 / 3.0; 3]);
        assert!(m.value <= rel_entropy_operators(rho.op(), &uniform).unwrap() + 1e-9);
    }

    #[test]
    fn caratheodory_preserves_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let comps: Vec<DensityOperator> = (0..12).map(|_| random_density_with(&mut rng, 2, 2).unwrap()).collect();
        let m = FiniteMixture::uniform(comps).unwrap();
        let budget = Budget::default();
        let r = caratheodory_reduce(&m, 2, &budget).unwrap();
        assert!(r.len() <= 10, "{} components", r.len());
        let before = mix_tensor_power(&m, 2, &budget).unwrap();
        let after = mix_tensor_power(&r, 2, &budget).unwrap();
        let diff = before.op().sub(after.op()).unwrap().frobenius_norm();
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn caratheodory_merges_and_keeps_minimal() {
        let a = random_density(2, 2, 1).unwrap();
        let b = random_density(2, 2, 2).unwrap();
        let m = FiniteMixture::new(vec![0.25, 0.5, 0.25], vec![a.clone(), b.clone(), a.clone()]).unwrap();
        let r = caratheodory_reduce(&m, 1, &Budget::default()).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.weights()[0] - 0.5).abs() < 1e-15);
        let single = caratheodory_reduce(&FiniteMixture::singleton(a), 3, &Budget::default()).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn sibson_product_state() {
        let ra = random_density(2, 2, 11).unwrap();
        let rb = random_density(2, 2, 12).unwrap();
        let rho = ra.tensor(&rb);
        let d = sibson_decompose(&rho, &ra, &random_density(2, 2, 13).unwrap(), 0.5).unwrap();
        assert!(d.sigma_bar.op().max_abs_diff(rb.op()) < 1e-10);
        assert!(d.residual < 1e-10);
    }

    #[test]
    fn sibson_identity_random() {
        for seed in 0..5 {
            let rho = random_density(4, 4, 100 + seed).unwrap().with_shape(SystemShape::qubits(2)).unwrap();
            let sa = random_density(2, 2, 200 + seed).unwrap();
            let sb = random_density(2, 2, 300 + seed).unwrap();
            for s in [0.3, 0.7, 2.0] {
                let d = sibson_decompose(&rho, &sa, &sb, s).unwrap();
                assert!(d.residual < 1e-8, "seed {seed} s {s}: {}", d.residual);
            }
        }
    }

    #[test]
    fn renyi_mutual_info_cases() {
        let prod = random_density(2, 2, 1).unwrap().tensor(&random_density(2, 2, 2).unwrap());
        let r = renyi_mutual_info(&prod, 0.5, &AlternatingOptions::default()).unwrap();
        assert!(r.value < 1e-10);
        let rho = random_density(4, 4, 3).unwrap().with_shape(SystemShape::qubits(2)).unwrap();
        let info = crate::divergence::mutual_info(&rho).unwrap();
        for s in [1.0 - 1e-4, 1.0 + 1e-4] {
            let r = renyi_mutual_info(&rho, s, &AlternatingOptions::default()).unwrap();
            assert!((r.value - info).abs() < 1e-3, "s={s}: {} vs {info}", r.value);
        }
        // I_s is the minimum: never above the value at the marginals
        let r = renyi_mutual_info(&rho, 0.7, &AlternatingOptions::default()).unwrap();
        let at_marg = petz_raw(
            rho.op(),
            &rho.partial_trace(&[0]).unwrap().op().kron(rho.partial_trace(&[1]).unwrap().op()),
            0.7,
        )
        .unwrap();
        assert!(r.value <= at_marg + 1e-12);
        assert!(r.converged);
        let upper = sandwiched_mutual_info_upper(&rho, 0.7, &r).unwrap();
        assert!(upper <= r.value + 1e-9);
    }

    #[test]
    fn coherence_experiment_incoherent_state() {
        let rho = diag(&[0.6, 0.4]);
        let opts = CoherenceOptions {
            n_max: 3,
            ..CoherenceOptions::default()
        };
        let e = coherence_exponent_experiment(&rho, &default_incoherent_family(&rho), &opts).unwrap();
        for r in &e.rows {
            // Δ(ρ) = ρ is in the family, so β = 1 − ε
            assert!((r.beta_upper - 0.8).abs() < 1e-6, "{}", r.beta_upper);
        }
    }

    #[test]
    fn coherence_experiment_plus_state() {
        let rho = plus();
        let opts = CoherenceOptions {
            n_max: 5,
            ..CoherenceOptions::default()
        };
        let e = coherence_exponent_experiment(&rho, &default_incoherent_family(&rho), &opts).unwrap();
        assert!(e.report.all_passed(), "{:?}", e.report.failures().collect::<Vec<_>>());
        assert!((e.coherence - 1.0).abs() < 1e-12);
        assert_eq!(e.rows[4].working_dim, 6);
        assert!(coherence_exponent_experiment(&rho, &[rho.clone()], &opts).is_err());
    }

    #[test]
    fn mutual_info_experiment_bell() {
        let h = cx(std::f64::consts::FRAC_1_SQRT_2);
        let zero = cx(0.0);
        let bell = DensityOperator::pure(&[h, zero, zero, h], SystemShape::qubits(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = mutual_info_exponent_experiment(&bell, 0.1, 2, 0.5, 3, &mut rng, &Budget::default()).unwrap();
        assert!((e.mutual_info - 2.0).abs() < 1e-10);
        assert!(e.report.all_passed(), "{:?}", e.report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn schur_weyl_domination() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let budget = Budget::default();
        for n in [2, 3] {
            let raw = random_density_with(&mut rng, 1 << n, 1 << n).unwrap();
            let sym = crate::states::symmetrize(raw.op(), 2, n).unwrap();
            assert!(schur_weyl_margin(&sym, 2, n, &budget).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn chernoff_composite_cases() {
        let rho = random_density(2, 2, 21).unwrap();
        let sigma = random_density(2, 2, 22).unwrap();
        let budget = Budget::default();
        let c1 = chernoff_composite(&[rho.clone()], &[sigma.clone()], 1, &budget).unwrap();
        let c3 = chernoff_composite(&[rho.clone()], &[sigma.clone()], 3, &budget).unwrap();
        assert!((c1.value - c3.value).abs() < 1e-8);
        assert!((c1.value - c1.conjectured).abs() < 1e-8);
        let z = chernoff_composite(&[rho.clone()], &[sigma, rho], 2, &budget).unwrap();
        assert!(z.value.abs() < 1e-8, "{}", z.value);
    }

    #[test]
    fn vertex_sufficiency_holds() {
        let nulls = FiniteMixture::uniform(vec![random_density(2, 2, 1).unwrap(), random_density(2, 2, 2).unwrap()]).unwrap();
        let alts = FiniteMixture::uniform(vec![random_density(2, 2, 3).unwrap(), random_density(2, 2, 4).unwrap()]).unwrap();
        for n in 1..=3 {
            assert!(vertex_sufficiency_slack(&nulls, &alts, n, &Budget::default()).unwrap() >= -1e-9);
        }
    }
}

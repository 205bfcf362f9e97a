//! Density operators, finite mixtures and the structured states used by the
//! experiments (random ensembles, the FF17 family, the universal symmetric
//! state, permutation operators).

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{self, cx, eig, Budget, HermitianOperator, SystemShape};

/// Trace tolerance for density operators.
pub const TRACE_TOLERANCE: f64 = 1e-9;

/// Most negative eigenvalue that is silently clipped to zero.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

/// Tolerance on mixture weight normalization.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DensityOperator {
    op: HermitianOperator,
    shape: SystemShape,
    clipped: f64,
}

impl DensityOperator {
    /// Validates trace and positivity; eigenvalues in `[-1e-10, 0)` are
    /// clipped and the clipped mass is recorded.
    pub fn new(op: HermitianOperator, shape: SystemShape) -> Result<Self> {
        shape.ensure_matches(op.dim())?;
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let spec = eig(&op)?;
        let min = spec.min_eigenvalue();
        if min < -NEGATIVITY_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
        }
        // negatives within the support cutoff are rounding noise and already
        // count as zero everywhere; only rebuild for larger ones
        if min < -spec.cutoff() {
            let clipped: Vec<f64> = spec.eigenvalues().iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let op = spec.synthesize(&clipped.iter().map(|v| v / total).collect::<Vec<_>>());
            return Ok(Self {
                op,
                shape,
                clipped: -min,
            });
        }
        Ok(Self {
            op,
            shape,
            clipped: (-min).max(0.0),
        })
    }

    pub fn from_matrix(mat: Mat<c64>, shape: SystemShape) -> Result<Self> {
        Self::new(HermitianOperator::from_matrix(mat)?, shape)
    }

    /// Single-factor state.
    pub fn from_operator(op: HermitianOperator) -> Result<Self> {
        let shape = SystemShape::single(op.dim());
        Self::new(op, shape)
    }

    /// Skips the spectral check; for operators that are states by
    /// construction (tensor products, partial traces, mixtures).
    pub(crate) fn trusted(op: HermitianOperator, shape: SystemShape) -> Self {
        debug_assert_eq!(shape.dim(), op.dim());
        Self {
            op,
            shape,
            clipped: 0.0,
        }
    }

    /// `|ψ⟩⟨ψ|`; the vector must have unit norm.
    pub fn pure(amplitudes: &[c64], shape: SystemShape) -> Result<Self> {
        shape.ensure_matches(amplitudes.len())?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidState(format!("state vector norm {norm}")));
        }
        Ok(Self::trusted(HermitianOperator::outer(amplitudes), shape))
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|&p| p < -NEGATIVITY_TOLERANCE) {
            return Err(Error::InvalidState(format!("negative probability in {probs:?}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidState(format!("probabilities sum to {total}")));
        }
        let clean: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
        Ok(Self::trusted(
            HermitianOperator::from_diagonal(&clean),
            SystemShape::single(probs.len()),
        ))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::trusted(
            HermitianOperator::identity(dim).scale(1.0 / dim as f64),
            SystemShape::single(dim),
        )
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Magnitude of the most negative eigenvalue clipped at construction.
    pub fn clipped(&self) -> f64 {
        self.clipped
    }

    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op)
    }

    pub fn with_shape(&self, shape: SystemShape) -> Result<Self> {
        shape.ensure_matches(self.dim())?;
        Ok(Self {
            op: self.op.clone(),
            shape,
            clipped: self.clipped,
        })
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self::trusted(self.op.kron(&other.op), self.shape.concat(&other.shape))
    }

    pub fn tensor_power(&self, n: usize, budget: &Budget) -> Result<Self> {
        let op = operator::kron_power(&self.op, n, budget)?;
        Ok(Self::trusted(op, self.shape.repeated(n)))
    }

    /// Reduced state on the kept factors.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let op = operator::partial_trace(&self.op, &self.shape, keep)?;
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        let shape = if keep_sorted.is_empty() {
            SystemShape::single(1)
        } else {
            self.shape.select(&keep_sorted)
        };
        Ok(Self::trusted(op, shape))
    }

    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let (op, shape) = operator::permute_subsystems(&self.op, &self.shape, order)?;
        Ok(Self::trusted(op, shape))
    }

    /// `Σ p_i ρ_i` over states of a common dimension (shape of the first).
    pub fn convex_combination(weights: &[f64], states: &[&Self]) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty combination".into()))?;
        let mut acc = HermitianOperator::zeros(first.dim());
        for (w, s) in weights.iter().zip(states) {
            acc = acc.lincomb(1.0, &s.op, *w)?;
        }
        Ok(Self::trusted(acc, first.shape.clone()))
    }
}

/// Weighted finite family `Σ_j w_j δ_{σ_j}`.
#[derive(Clone, Debug)]
pub struct FiniteMixture {
    weights: Vec<f64>,
    components: Vec<DensityOperator>,
}

impl FiniteMixture {
    pub fn new(weights: Vec<f64>, components: Vec<DensityOperator>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("mixture needs at least one component".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative weight in {weights:?}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        let dim = components[0].dim();
        if let Some(bad) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: bad.dim(),
            });
        }
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn uniform(components: Vec<DensityOperator>) -> Result<Self> {
        let n = components.len().max(1);
        Self::new(vec![1.0 / n as f64; components.len()], components)
    }

    pub fn singleton(state: DensityOperator) -> Self {
        Self {
            weights: vec![1.0],
            components: vec![state],
        }
    }

    /// Renormalizes the weights first (for weights from numerical routines).
    pub fn normalized(weights: Vec<f64>, components: Vec<DensityOperator>) -> Result<Self> {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("weights have no positive mass".into()));
        }
        Self::new(weights.iter().map(|w| w.max(0.0) / total).collect(), components)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[DensityOperator] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// `Σ_j w_j σ_j`.
    pub fn mean(&self) -> DensityOperator {
        mix_tensor_power(self, 1, &Budget::new(usize::MAX)).expect("n = 1 fits any budget")
    }
}

/// `Σ_j w_j σ_j^{⊗n}`.
pub fn mix_tensor_power(m: &FiniteMixture, n: usize, budget: &Budget) -> Result<DensityOperator> {
    let dim = budget.power_dim(m.dim(), n)?;
    let mut acc = HermitianOperator::zeros(dim);
    for (w, c) in m.weights.iter().zip(&m.components) {
        if *w == 0.0 {
            continue;
        }
        let p = operator::kron_power(c.op(), n, budget)?;
        acc = acc.lincomb(1.0, &p, *w)?;
    }
    Ok(DensityOperator::trusted(
        acc,
        m.components[0].shape().repeated(n),
    ))
}

/// Ginibre state `GG†/tr` with `G` a `dim × rank` complex Gaussian matrix.
pub fn random_density_with<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<DensityOperator> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= rank <= dim, got rank {rank}, dim {dim}"
        )));
    }
    let g = Mat::from_fn(dim, rank, |_, _| {
        c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let gg = HermitianOperator::from_matrix_trusted(&g * g.adjoint());
    let tr = gg.trace();
    Ok(DensityOperator::trusted(gg.scale(1.0 / tr), SystemShape::single(dim)))
}

pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityOperator> {
    random_density_with(&mut ChaCha8Rng::seed_from_u64(seed), dim, rank)
}

/// Random unitary from Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Mat<c64> {
    let mut u = Mat::from_fn(dim, dim, |_, _| {
        c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    for j in 0..dim {
        for k in 0..j {
            let mut dot = c64::new(0.0, 0.0);
            for i in 0..dim {
                dot += u[(i, k)].conj() * u[(i, j)];
            }
            for i in 0..dim {
                let v = u[(i, k)];
                u[(i, j)] -= dot * v;
            }
        }
        let norm = (0..dim).map(|i| u[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..dim {
            u[(i, j)] /= norm;
        }
    }
    u
}

/// The three-qubit pure state family on `A ⊗ B ⊗ C` (basis index `4a+2b+c`):
/// `(|000⟩ + cos θ |011⟩ + sin θ |110⟩)/√2`.
pub fn ff17_state(theta: f64) -> Result<DensityOperator> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    if !(-1e-12..=half_pi + 1e-12).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta {theta} outside [0, π/2]")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![cx(0.0); 8];
    amps[0b000] = cx(s);
    amps[0b011] = cx(s * theta.cos());
    amps[0b110] = cx(s * theta.sin());
    DensityOperator::pure(&amps, SystemShape::qubits(3))
}

/// Permutation of `n` tensor factors of local dimension `d`:
/// `U(π) e_{x_1..x_n} = e_y` with `y_{π(i)} = x_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationOperator {
    local_dim: usize,
    perm: Vec<usize>,
}

impl PermutationOperator {
    pub fn new(local_dim: usize, perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
        }
        if local_dim == 0 {
            return Err(Error::InvalidArgument("local dimension must be positive".into()));
        }
        Ok(Self { local_dim, perm })
    }

    pub fn identity(local_dim: usize, n: usize) -> Self {
        Self {
            local_dim,
            perm: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn dim(&self) -> usize {
        self.local_dim.pow(self.n() as u32)
    }

    /// `(self ∘ other)(i) = self(other(i))`, so that `U(π₁)U(π₂) = U(π₁∘π₂)`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            local_dim: self.local_dim,
            perm: other.perm.iter().map(|&i| self.perm[i]).collect(),
        }
    }

    pub fn cycle_count(&self) -> usize {
        let mut seen = vec![false; self.n()];
        let mut cycles = 0;
        for start in 0..self.n() {
            if seen[start] {
                continue;
            }
            cycles += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.perm[i];
            }
        }
        cycles
    }

    /// `map[x] = y` with `U(π) e_x = e_y`.
    pub fn index_map(&self) -> Vec<usize> {
        let (d, n) = (self.local_dim, self.n());
        let mut digits = vec![0usize; n];
        let mut out_digits = vec![0usize; n];
        (0..self.dim())
            .map(|mut x| {
                for slot in digits.iter_mut().rev() {
                    *slot = x % d;
                    x /= d;
                }
                for (i, &xi) in digits.iter().enumerate() {
                    out_digits[self.perm[i]] = xi;
                }
                out_digits.iter().fold(0, |acc, &v| acc * d + v)
            })
            .collect()
    }

    pub fn matrix(&self) -> Mat<c64> {
        let map = self.index_map();
        let dim = self.dim();
        let mut m = Mat::zeros(dim, dim);
        for (x, &y) in map.iter().enumerate() {
            m[(y, x)] = cx(1.0);
        }
        m
    }

    /// `U A U†`.
    pub fn conjugate(&self, a: &HermitianOperator) -> Result<HermitianOperator> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: a.dim(),
            });
        }
        let map = self.index_map();
        let dim = self.dim();
        let mut out = Mat::zeros(dim, dim);
        for j in 0..dim {
            for i in 0..dim {
                out[(map[i], map[j])] = a.get(i, j);
            }
        }
        Ok(HermitianOperator::from_matrix_trusted(out))
    }

    /// Largest entry of `U A U† − A`.
    pub fn commutator_residual(&self, a: &HermitianOperator) -> Result<f64> {
        Ok(self.conjugate(a)?.max_abs_diff(a))
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).expect("pivot exists");
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `binom(n + d² − 1, n)^{-1} tr_{Ã^n}[P^Sym]`, with `P^Sym` the symmetric
/// projector on `(C^d ⊗ C^d)^{⊗n}` built as the average of permutation
/// operators.
pub fn universal_symmetric_state(local_dim: usize, n: usize, budget: &Budget) -> Result<DensityOperator> {
    if n == 0 || local_dim == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and d >= 1".into()));
    }
    let pair = local_dim * local_dim;
    let dim = budget.power_dim(pair, n)?;
    let perms = permutations(n);
    let scale = 1.0 / perms.len() as f64;
    let mut p_sym = Mat::<c64>::zeros(dim, dim);
    for perm in perms {
        let u = PermutationOperator::new(pair, perm)?;
        for (x, y) in u.index_map().into_iter().enumerate() {
            p_sym[(y, x)] += cx(scale);
        }
    }
    let p_sym = HermitianOperator::from_matrix_trusted(p_sym);
    // each copy is A_i ⊗ Ã_i; keep the A factors
    let shape = SystemShape::new(vec![local_dim; 2 * n])?;
    let keep: Vec<usize> = (0..n).map(|i| 2 * i).collect();
    let reduced = operator::partial_trace(&p_sym, &shape, &keep)?;
    let norm = binomial(n + pair - 1, n);
    Ok(DensityOperator::trusted(
        reduced.scale(1.0 / norm),
        SystemShape::new(vec![local_dim; n])?,
    ))
}

/// Average of `U_π A U_π†` over all permutations of the `n` factors.
pub fn symmetrize(a: &HermitianOperator, local_dim: usize, n: usize) -> Result<HermitianOperator> {
    let perms = permutations(n);
    let scale = 1.0 / perms.len() as f64;
    let mut acc = HermitianOperator::zeros(a.dim());
    for perm in perms {
        let u = PermutationOperator::new(local_dim, perm)?;
        acc = acc.lincomb(1.0, &u.conjugate(a)?, scale)?;
    }
    Ok(acc)
}

/// Isometry `V: Sym^n(C^d) → (C^d)^{⊗n}` whose columns are the normalized
/// symmetrized basis strings (one per occupation pattern), ordered by first
/// occurrence in lexicographic order.
pub fn symmetric_isometry(local_dim: usize, n: usize, budget: &Budget) -> Result<Mat<c64>> {
    if n == 0 || local_dim == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and d >= 1".into()));
    }
    let dim = budget.power_dim(local_dim, n)?;
    let mut patterns: Vec<Vec<usize>> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut lookup = std::collections::HashMap::new();
    for x in 0..dim {
        let mut occ = vec![0usize; local_dim];
        let mut r = x;
        for _ in 0..n {
            occ[r % local_dim] += 1;
            r /= local_dim;
        }
        let k = *lookup.entry(occ.clone()).or_insert_with(|| {
            patterns.push(occ);
            members.push(Vec::new());
            patterns.len() - 1
        });
        members[k].push(x);
    }
    let mut v = Mat::<c64>::zeros(dim, members.len());
    for (k, rows) in members.iter().enumerate() {
        let a = 1.0 / (rows.len() as f64).sqrt();
        for &x in rows {
            v[(x, k)] = cx(a);
        }
    }
    Ok(v)
}

/// `ρ_diag`: the state with the off-diagonal entries deleted in the
/// computational basis.
pub fn incoherent_projection(rho: &DensityOperator) -> DensityOperator {
    DensityOperator::trusted(
        HermitianOperator::from_diagonal(&rho.op.diagonal()),
        rho.shape.clone(),
    )
}

/// On-disk representation of a state: row-major `(re, im)` entries.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateDocument {
    pub dim: usize,
    pub shape: Vec<usize>,
    pub entries: Vec<[f64; 2]>,
}

impl StateDocument {
    pub fn from_state(rho: &DensityOperator) -> Self {
        let n = rho.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = rho.op.get(i, j);
                entries.push([z.re, z.im]);
            }
        }
        Self {
            dim: n,
            shape: rho.shape.factors().to_vec(),
            entries,
        }
    }

    pub fn to_state(&self) -> Result<DensityOperator> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::Parse(format!(
                "expected {} entries for dim {}, found {}",
                self.dim * self.dim,
                self.dim,
                self.entries.len()
            )));
        }
        let shape = if self.shape.is_empty() {
            SystemShape::single(self.dim)
        } else {
            SystemShape::new(self.shape.clone())?
        };
        let mat = Mat::from_fn(self.dim, self.dim, |i, j| {
            let [re, im] = self.entries[i * self.dim + j];
            c64::new(re, im)
        });
        DensityOperator::from_matrix(mat, shape)
    }
}

/// A list of states, optionally weighted.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FamilyDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub states: Vec<StateDocument>,
}

impl FamilyDocument {
    pub fn from_states(states: &[DensityOperator]) -> Self {
        Self {
            weights: None,
            states: states.iter().map(StateDocument::from_state).collect(),
        }
    }

    pub fn from_mixture(m: &FiniteMixture) -> Self {
        Self {
            weights: Some(m.weights.clone()),
            states: m.components.iter().map(StateDocument::from_state).collect(),
        }
    }

    pub fn to_states(&self) -> Result<Vec<DensityOperator>> {
        self.states.iter().map(StateDocument::to_state).collect()
    }

    pub fn to_mixture(&self) -> Result<FiniteMixture> {
        let states = self.to_states()?;
        match &self.weights {
            Some(w) => FiniteMixture::new(w.clone(), states),
            None => FiniteMixture::uniform(states),
        }
    }
}

pub fn state_to_json(rho: &DensityOperator) -> String {
    serde_json::to_string_pretty(&StateDocument::from_state(rho)).expect("plain data serializes")
}

pub fn state_from_json(text: &str) -> Result<DensityOperator> {
    let doc: StateDocument = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    doc.to_state()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn random_density_rank_and_determinism() {
        let pure = random_density(2, 1, 7).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-12);
        let full = random_density(4, 4, 7).unwrap();
        assert!(eig(full.op()).unwrap().min_eigenvalue() > 0.0);
        let again = random_density(4, 4, 7).unwrap();
        assert_eq!(full.op().max_abs_diff(again.op()), 0.0);
        assert!(random_density(2, 3, 0).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::from_operator(HermitianOperator::from_diagonal(&[0.6, 0.6])).is_err());
        assert!(DensityOperator::from_operator(HermitianOperator::from_diagonal(&[1.5, -0.5])).is_err());
        let tiny = DensityOperator::from_operator(HermitianOperator::from_diagonal(&[1.0 + 5e-11, -5e-11]))
            .unwrap();
        assert!(tiny.clipped() > 0.0);
        assert!(eig(tiny.op()).unwrap().min_eigenvalue() >= 0.0);
    }

    #[test]
    fn ff17_endpoints() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r0 = ff17_state(0.0).unwrap();
        assert!((r0.purity() - 1.0).abs() < 1e-12);
        assert!((r0.op().get(0, 3).re - 0.5).abs() < 1e-15);
        let rc = r0.partial_trace(&[2]).unwrap();
        assert!(rc.op().max_abs_diff(&HermitianOperator::from_diagonal(&[0.5, 0.5])) < 1e-15);

        let r1 = ff17_state(std::f64::consts::FRAC_PI_2).unwrap();
        assert!((r1.op().get(0, 0).re - s * s).abs() < 1e-15);
        assert!((r1.op().get(6, 6).re - 0.5).abs() < 1e-15);
        assert!(r1.op().get(3, 3).re.abs() < 1e-15);
        assert!(ff17_state(2.0).is_err());
    }

    #[test]
    fn permutation_composition_law() {
        let p1 = PermutationOperator::new(2, vec![1, 2, 0]).unwrap();
        let p2 = PermutationOperator::new(2, vec![0, 2, 1]).unwrap();
        let lhs = &p1.matrix() * &p2.matrix();
        let rhs = p1.compose(&p2).matrix();
        assert_eq!(operator::max_abs_diff(lhs.as_ref(), rhs.as_ref()), 0.0);
        let u = p1.matrix();
        let uu = &u * u.adjoint();
        assert_eq!(
            operator::max_abs_diff(uu.as_ref(), Mat::<c64>::identity(8, 8).as_ref()),
            0.0
        );
        assert_eq!(p1.cycle_count(), 1);
        assert_eq!(PermutationOperator::identity(2, 3).cycle_count(), 3);
    }

    #[test]
    fn permutation_moves_factors() {
        // swapping two factors maps a ⊗ b to b ⊗ a
        let a = HermitianOperator::from_diagonal(&[0.2, 0.8]);
        let b = HermitianOperator::from_diagonal(&[0.6, 0.4]);
        let swap = PermutationOperator::new(2, vec![1, 0]).unwrap();
        assert!(swap.conjugate(&a.kron(&b)).unwrap().max_abs_diff(&b.kron(&a)) < 1e-15);
    }

    #[test]
    fn permutations_enumerated() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn symmetric_isometry_dimensions() {
        let v = symmetric_isometry(2, 3, &Budget::default()).unwrap();
        assert_eq!((v.nrows(), v.ncols()), (8, 4));
        let v = symmetric_isometry(3, 2, &Budget::default()).unwrap();
        assert_eq!(v.ncols(), 6);
        let gram = v.adjoint() * &v;
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - cx(e)).norm() < 1e-15);
            }
        }
        // a pure tensor power lives in the symmetric subspace
        let rho = random_density(3, 1, 4).unwrap().tensor_power(2, &Budget::default()).unwrap();
        let back = rho.op().in_basis(v.as_ref()).congruence(v.as_ref());
        assert!(back.max_abs_diff(rho.op()) < 1e-12);
    }

    #[test]
    fn universal_state_small_cases() {
        let w1 = universal_symmetric_state(2, 1, &Budget::default()).unwrap();
        assert!(w1.op().max_abs_diff(&HermitianOperator::from_diagonal(&[0.5, 0.5])) < 1e-15);
        let w3 = universal_symmetric_state(2, 3, &Budget::default()).unwrap();
        assert!((w3.op().trace() - 1.0).abs() < 1e-12);
        for perm in permutations(3) {
            let u = PermutationOperator::new(2, perm).unwrap();
            assert!(u.commutator_residual(w3.op()).unwrap() < 1e-12);
        }
        assert_eq!(binomial(5, 2), 10.0);
    }

    #[test]
    fn incoherent_projection_examples() {
        let plus = DensityOperator::pure(&[cx(0.5f64.sqrt()), cx(0.5f64.sqrt())], SystemShape::single(2)).unwrap();
        let d = incoherent_projection(&plus);
        assert!(d.op().max_abs_diff(&HermitianOperator::from_diagonal(&[0.5, 0.5])) < 1e-15);
        assert!(incoherent_projection(&d).op().max_abs_diff(d.op()) == 0.0);
    }

    #[test]
    fn mixture_validation_and_moments() {
        let a = random_density(2, 2, 1).unwrap();
        let b = random_density(2, 2, 2).unwrap();
        assert!(FiniteMixture::new(vec![0.5, 0.6], vec![a.clone(), b.clone()]).is_err());
        assert!(FiniteMixture::new(vec![1.0], vec![]).is_err());
        let m = FiniteMixture::new(vec![0.25, 0.75], vec![a.clone(), b.clone()]).unwrap();
        let one = mix_tensor_power(&m, 1, &Budget::default()).unwrap();
        let direct = a.op().lincomb(0.25, b.op(), 0.75).unwrap();
        assert!(one.op().max_abs_diff(&direct) < 1e-15);
        let single = mix_tensor_power(&FiniteMixture::singleton(a.clone()), 2, &Budget::default()).unwrap();
        assert!(single.op().max_abs_diff(&a.op().kron(a.op())) < 1e-15);
        let three = mix_tensor_power(&m, 3, &Budget::default()).unwrap();
        for perm in permutations(3) {
            let u = PermutationOperator::new(2, perm).unwrap();
            assert!(u.commutator_residual(three.op()).unwrap() < 1e-9);
        }
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let rho = random_density(3, 2, 11).unwrap();
        let text = state_to_json(&rho);
        let back = state_from_json(&text).unwrap();
        assert_eq!(back.op().max_abs_diff(rho.op()), 0.0);
        assert!(matches!(state_from_json("{\"dim\": 2,\n \"shape\": [2], \"entries\": [[1, 0]]}"), Err(Error::Parse(_))));
        let err = state_from_json("{\n\"dim\": oops}").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_states_are_valid(seed in any::<u64>(), dim in 1usize..6) {
            let rho = random_density(dim, dim, seed).unwrap();
            prop_assert!((rho.op().trace() - 1.0).abs() < 1e-12);
            prop_assert!(eig(rho.op()).unwrap().min_eigenvalue() > -1e-12);
        }

        #[test]
        fn ff17_is_pure(theta in 0.0f64..std::f64::consts::FRAC_PI_2) {
            let rho = ff17_state(theta).unwrap();
            prop_assert!((rho.purity() - 1.0).abs() < 1e-10);
            prop_assert!((rho.partial_trace(&[2]).unwrap().op().trace() - 1.0).abs() < 1e-12);
        }
    }
}

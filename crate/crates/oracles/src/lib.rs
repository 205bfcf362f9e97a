//! Slow, independent reference computations used only by tests. Nothing here
//! shares code with the main library: qubit problems are solved in Bloch
//! coordinates, classical problems by sorting and scanning.

use faer::{c64, Mat, MatRef, Side};

/// Bloch vector `r` of a qubit state `(1 + r·σ)/2` given its matrix.
pub fn bloch(m: MatRef<'_, c64>) -> [f64; 3] {
    let off = m[(0, 1)];
    [2.0 * off.re, -2.0 * off.im, m[(0, 0)].re - m[(1, 1)].re]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Smallest `Σ λ_k s_k` with `Σ λ_k r_k ≥ need`, `λ ∈ [0,1]^k` — a
/// fractional knapsack, filled in increasing order of `s_k/r_k`.
pub fn knapsack_beta(r: &[f64], s: &[f64], need: f64) -> f64 {
    if need <= 0.0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..r.len()).filter(|&k| r[k] > 0.0).collect();
    // sort on the ratio itself: cross-multiplied comparisons are not a
    // total order in floating point
    order.sort_by(|&a, &b| (s[a] / r[a]).total_cmp(&(s[b] / r[b])).then(a.cmp(&b)));
    let mut left = need;
    let mut beta = 0.0;
    for k in order {
        if r[k] >= left {
            return beta + s[k] * left / r[k];
        }
        left -= r[k];
        beta += s[k];
    }
    // infeasible only through round-off: accept everything
    s.iter().sum()
}

/// `min s·t` over `{|t| ≤ radius, r·t ≥ c}`; `+∞` when empty.
fn ball_halfspace_min(r: [f64; 3], s: [f64; 3], c: f64, radius: f64) -> f64 {
    let rn = dot(r, r).sqrt();
    let sn = dot(s, s).sqrt();
    if c > radius * rn + 1e-15 {
        return f64::INFINITY;
    }
    // unconstrained minimizer on the ball
    let free = if sn > 0.0 { [-radius * s[0] / sn, -radius * s[1] / sn, -radius * s[2] / sn] } else { [0.0; 3] };
    if dot(r, free) >= c {
        return -radius * sn;
    }
    // the halfspace is active: a disk of radius √(R² − c²/|r|²) around c r/|r|²
    let proj = dot(s, r) / (rn * rn);
    let perp = [s[0] - proj * r[0], s[1] - proj * r[1], s[2] - proj * r[2]];
    let disk = (radius * radius - c * c / (rn * rn)).max(0.0).sqrt();
    c * proj - dot(perp, perp).sqrt() * disk
}

/// Best β among tests `T = t₀·1 + t·σ` with a fixed `t₀`:
/// `0 ≤ T ≤ 1 ⇔ |t| ≤ min(t₀, 1 − t₀)`, `α = 1 − t₀ − r·t`, `β = t₀ + s·t`.
fn qubit_beta_given_t0(r: [f64; 3], s: [f64; 3], eps: f64, t0: f64) -> f64 {
    let t0 = t0.clamp(0.0, 1.0);
    t0 + ball_halfspace_min(r, s, 1.0 - eps - t0, t0.min(1.0 - t0))
}

/// Optimal Type-2 error for a qubit pair by brute force over all tests
/// `T = t₀·1 + t·σ` (four real parameters). The three parameters in `t`
/// are eliminated in closed form; `t₀` is scanned on a grid of step
/// `resolution` and polished by golden section (the reduced objective is
/// convex in `t₀`).
pub fn qubit_np_beta(r: [f64; 3], s: [f64; 3], eps: f64, resolution: f64) -> f64 {
    let f = |t0: f64| qubit_beta_given_t0(r, s, eps, t0);
    let steps = (1.0 / resolution).ceil() as usize;
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let v = f(t);
        if v < best {
            (best_t, best) = (t, v);
        }
    }
    let (mut a, mut b) = ((best_t - resolution).max(0.0), (best_t + resolution).min(1.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-14 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if f(x1) <= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.min(f((a + b) / 2.0))
}

/// Optimal Type-2 error between distributions `p` and `q`.
pub fn classical_np_beta(p: &[f64], q: &[f64], eps: f64) -> f64 {
    knapsack_beta(p, q, 1.0 - eps)
}

/// `Π_k p_k^{⊗n}` as a flat distribution over `len^n` outcomes.
pub fn product_distribution(p: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = out.iter().flat_map(|&a| p.iter().map(move |&b| a * b)).collect();
    }
    out
}

/// `Σ p log₂(p/q)`.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            acc += a * (a / b).log2();
        }
    }
    acc
}

/// `log₂(Σ p^s q^{1−s})/(s − 1)`.
pub fn renyi(p: &[f64], q: &[f64], s: f64) -> f64 {
    let sum: f64 = p
        .iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| a.powf(s) * b.powf(1.0 - s))
        .sum();
    sum.log2() / (s - 1.0)
}

pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

/// Minimum of a unimodal function on `[lo, hi]` by ternary search.
fn ternary_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Classical Chernoff information `max_s −log₂ Σ p^s q^{1−s}`: a grid of
/// step `1/grid` on `[0,1]`, then ternary search around the best cell.
pub fn classical_chernoff(p: &[f64], q: &[f64], grid: usize) -> f64 {
    let f = |s: f64| -> f64 {
        let sum: f64 = p
            .iter()
            .zip(q)
            .map(|(&a, &b)| {
                let x = if a > 0.0 { a.powf(s) } else if s == 0.0 { 1.0 } else { 0.0 };
                let y = if b > 0.0 { b.powf(1.0 - s) } else if s == 1.0 { 1.0 } else { 0.0 };
                x * y
            })
            .sum();
        sum.log2()
    };
    let mut k_best = 0;
    let mut v_best = f64::INFINITY;
    for k in 0..=grid {
        let v = f(k as f64 / grid as f64);
        if v < v_best {
            v_best = v;
            k_best = k;
        }
    }
    let lo = k_best.saturating_sub(1) as f64 / grid as f64;
    let hi = ((k_best + 1).min(grid)) as f64 / grid as f64;
    let (_, v) = ternary_min(f, lo, hi);
    -(v.min(v_best))
}

/// Composite optimal Type-2 error for families of distributions on two
/// symbols. For each first test entry the smallest feasible second entry
/// is optimal, and the resulting worst-case β is convex in the first
/// entry; a grid of step `1/grid` locates it and ternary search finishes.
pub fn classical_composite_beta(nulls: &[[f64; 2]], alts: &[[f64; 2]], eps: f64, grid: usize) -> f64 {
    let need = 1.0 - eps;
    let value = |t0: f64| -> f64 {
        let mut t1: f64 = 0.0;
        for p in nulls {
            let rest = need - p[0] * t0;
            if rest > 0.0 {
                if p[1] <= 0.0 {
                    return f64::INFINITY;
                }
                t1 = t1.max(rest / p[1]);
            }
        }
        if t1 > 1.0 + 1e-15 {
            return f64::INFINITY;
        }
        let t1 = t1.min(1.0);
        alts.iter().map(|q| q[0] * t0 + q[1] * t1).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best = (0usize, f64::INFINITY);
    for k in 0..=grid {
        let v = value(k as f64 / grid as f64);
        if v < best.1 {
            best = (k, v);
        }
    }
    let lo = best.0.saturating_sub(1) as f64 / grid as f64;
    let hi = ((best.0 + 1).min(grid)) as f64 / grid as f64;
    ternary_min(value, lo, hi).1.min(best.1)
}

/// `(1/n) min_w KL(p^{⊗n} ‖ w q₁^{⊗n} + (1 − w) q₂^{⊗n})` by ternary search
/// over `w` (the objective is convex).
pub fn classical_mixture_divergence(p: &[f64], q1: &[f64], q2: &[f64], n: usize) -> f64 {
    let pn = product_distribution(p, n);
    let (a, b) = (product_distribution(q1, n), product_distribution(q2, n));
    let f = |w: f64| {
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| w * x + (1.0 - w) * y).collect();
        kl(&pn, &mix)
    };
    let (_, v) = ternary_min(f, 0.0, 1.0);
    v.min(f(0.0)).min(f(1.0)) / n as f64
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues(m: MatRef<'_, c64>) -> Vec<f64> {
    let evd = m.self_adjoint_eigen(Side::Lower).expect("eigensolver converges");
    let s = evd.S().column_vector();
    (0..m.nrows()).map(|i| s[i].re).collect()
}

/// `min_δ D(ρ‖diag(δ))` over the probability simplex, by exponentiated
/// gradient descent on `−Σ ρ_ii log δ_i`, plus the entropy of `ρ`.
pub fn coherence_by_simplex(rho: MatRef<'_, c64>) -> f64 {
    let d = rho.nrows();
    let diag: Vec<f64> = (0..d).map(|i| rho[(i, i)].re).collect();
    let h = shannon(&eigenvalues(rho).iter().map(|&x| x.max(0.0)).collect::<Vec<_>>());
    let cross = |delta: &[f64]| -> f64 {
        diag.iter()
            .zip(delta)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &q)| -p * q.log2())
            .sum()
    };
    let mut delta = vec![1.0 / d as f64; d];
    for _ in 0..20_000 {
        let grad: Vec<f64> = diag.iter().zip(&delta).map(|(&p, &q)| -p / q).collect();
        let mut next: Vec<f64> = delta.iter().zip(&grad).map(|(&q, &g)| q * (-0.5 * g).exp()).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let moved = next.iter().zip(&delta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        delta = next;
        if moved < 1e-15 {
            break;
        }
    }
    cross(&delta) - h
}

/// Eigenvalues of `σ^{⊗n}` from those of `σ`.
pub fn tensor_power_spectrum(eigs: &[f64], n: usize) -> Vec<f64> {
    product_distribution(eigs, n)
}

/// Number of distinct values, merging neighbours closer than
/// `rel_tol · max|v|` after sorting.
pub fn count_distinct(values: &[f64], rel_tol: f64) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for x in v {
        if x - last > rel_tol * scale {
            count += 1;
            last = x;
        }
    }
    count
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// `tr_{A'^n}[P_sym] / tr[P_sym]` with `P_sym` the symmetric projector on
/// `(C^d ⊗ C^d)^{⊗n}`, built by summing all `n!` permutation matrices.
/// Row-major dense matrix on `(C^d)^{⊗n}`.
pub fn universal_state(d: usize, n: usize) -> Vec<Vec<f64>> {
    let big = d * d;
    let total = big.pow(n as u32);
    let small = d.pow(n as u32);
    let digits = |mut x: usize, base: usize| -> Vec<usize> {
        let mut v = vec![0; n];
        for k in (0..n).rev() {
            v[k] = x % base;
            x /= base;
        }
        v
    };
    let join = |v: &[usize], base: usize| v.iter().fold(0, |acc, &x| acc * base + x);
    let perms = permutations(n);
    // P_sym[x][y] = (1/n!) #{π : y = π(x)}; accumulate the reduced matrix
    let mut out = vec![vec![0.0; small]; small];
    let mut trace = 0.0;
    for x in 0..total {
        let xs = digits(x, big);
        for p in &perms {
            let ys: Vec<usize> = (0..n).map(|k| xs[p[k]]).collect();
            // keep A = site / d, trace A' = site % d
            if (0..n).all(|k| xs[k] % d == ys[k] % d) {
                let a: Vec<usize> = xs.iter().map(|s| s / d).collect();
                let b: Vec<usize> = ys.iter().map(|s| s / d).collect();
                out[join(&a, d)][join(&b, d)] += 1.0 / perms.len() as f64;
            }
            if join(&ys, big) == x {
                trace += 1.0 / perms.len() as f64;
            }
        }
    }
    for row in &mut out {
        for v in row.iter_mut() {
            *v /= trace;
        }
    }
    out
}

/// Dense Hermitian matrix from a real row-major table.
pub fn to_mat(m: &[Vec<f64>]) -> Mat<c64> {
    Mat::from_fn(m.len(), m.len(), |i, j| c64::new(m[i][j], 0.0))
}

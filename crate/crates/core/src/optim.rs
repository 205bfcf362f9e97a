//! Projected gradient descent on probability simplices (and products of them).

/// Euclidean projection onto `{x ≥ 0, Σx = 1}` (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct PgdOptions {
    pub max_iter: usize,
    /// Stop when `‖x − Proj(x − ∇f)‖ ≤ tolerance`.
    pub tolerance: f64,
    pub power_iterations: usize,
}

impl Default for PgdOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tolerance: 1e-7,
            power_iterations: 6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PgdResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Norm of the projected-gradient residual at `x`.
    pub stationarity: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖x − Proj(x − g)‖`.
pub fn stationarity(x: &[f64], g: &[f64]) -> f64 {
    stationarity_blocks(x, g, &[x.len()])
}

/// Projection onto a product of simplices with the given block sizes.
pub fn project_blocks(v: &[f64], blocks: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut start = 0;
    for &b in blocks {
        out.extend(project_simplex(&v[start..start + b]));
        start += b;
    }
    out
}

fn stationarity_blocks(x: &[f64], g: &[f64], blocks: &[usize]) -> f64 {
    let stepped: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    let p = project_blocks(&stepped, blocks);
    norm(&x.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>())
}

/// Removes the per-block mean so the vector is tangent to the product.
fn center_blocks(v: &mut [f64], blocks: &[usize]) {
    let mut start = 0;
    for &b in blocks {
        let block = &mut v[start..start + b];
        let mean = block.iter().sum::<f64>() / b as f64;
        block.iter_mut().for_each(|d| *d -= mean);
        start += b;
    }
}

/// Curvature estimate by power iteration on gradient differences.
fn estimate_lipschitz(
    f: &impl Fn(&[f64]) -> (f64, Vec<f64>),
    x: &[f64],
    g: &[f64],
    blocks: &[usize],
    iters: usize,
) -> f64 {
    if blocks.iter().all(|&b| b < 2) {
        return 1.0;
    }
    // tangent direction keeps the probe on the affine hull
    let mut dir: Vec<f64> = (0..x.len()).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    center_blocks(&mut dir, blocks);
    let mut l: f64 = 1.0;
    for _ in 0..iters {
        let nd = norm(&dir);
        if nd == 0.0 {
            break;
        }
        let min_x = x.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-12);
        let h = (1e-4 * min_x).max(1e-10) / nd;
        let probe: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| (a + h * d).max(0.0)).collect();
        let (_, gp) = f(&probe);
        let mut proj: Vec<f64> = gp.iter().zip(g).map(|(a, b)| (a - b) / h).collect();
        center_blocks(&mut proj, blocks);
        let est = norm(&proj) / nd;
        if est.is_finite() && est > 0.0 {
            l = est;
            dir = proj;
        } else {
            break;
        }
    }
    l.max(1e-12)
}

/// Minimizes a smooth convex `f` over the simplex. `f` returns the value and
/// gradient. Step `1/L` with `L` from power iteration, plus Armijo-style
/// backtracking (doubling `L`) whenever the quadratic upper model fails.
pub fn minimize_on_simplex(
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
    x0: &[f64],
    opts: &PgdOptions,
) -> PgdResult {
    minimize_on_product(f, &[x0.len()], x0, opts)
}

/// [`minimize_on_simplex`] over a product of simplices; `blocks` lists the
/// consecutive block sizes of `x`.
pub fn minimize_on_product(
    f: impl Fn(&[f64]) -> (f64, Vec<f64>),
    blocks: &[usize],
    x0: &[f64],
    opts: &PgdOptions,
) -> PgdResult {
    assert_eq!(blocks.iter().sum::<usize>(), x0.len(), "block sizes must cover x0");
    let mut x = project_blocks(x0, blocks);
    let (mut fx, mut g) = f(&x);
    let mut l = estimate_lipschitz(&f, &x, &g, blocks, opts.power_iterations);
    let mut iterations = 0;
    let mut stat = stationarity_blocks(&x, &g, blocks);
    while iterations < opts.max_iter && stat > opts.tolerance {
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let stepped: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b / l).collect();
            let y = project_blocks(&stepped, blocks);
            let (fy, gy) = f(&y);
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let model = fx + g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() + 0.5 * l * norm(&d).powi(2);
            if fy.is_finite() && fy <= model + 1e-15 * fx.abs() {
                x = y;
                fx = fy;
                g = gy;
                accepted = true;
                // let the step grow again slowly
                l *= 0.9;
                break;
            }
            l *= 2.0;
        }
        stat = stationarity_blocks(&x, &g, blocks);
        if !accepted {
            break;
        }
    }
    PgdResult {
        converged: stat <= opts.tolerance,
        x,
        value: fx,
        stationarity: stat,
        iterations,
    }
}

use anyhow::{anyhow, bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use steinlab::composite::{
    chernoff_composite, coherence_exponent_experiment, default_incoherent_family, mutual_info_exponent_experiment,
    CoherenceOptions,
};
use steinlab::divergence::{
    chernoff, measured_rel_entropy, petz_renyi, petz_renyi_coherence, rel_entropy, rel_entropy_of_coherence,
    sandwiched_renyi, von_neumann, MeasuredOptions,
};
use steinlab::neyman_pearson::exponent_sequence;
use faer::c64;
use steinlab::recovery::{cqmi_bounds, strengthened_monotonicity, theta_sweep, QuadratureGrid, RecoveryBounds, RecoveryOptions};
use steinlab::{BoundReport, Budget, Check, DensityOperator, SystemShape};

use crate::config::{ExperimentConfig, StateSpec};
use crate::output::{Artifacts, Cell, Table};

/// Independent generator for cell `index` of a run with seed `seed`:
/// ChaCha streams make the draw order of one cell irrelevant to another.
pub fn cell_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn require(state: Option<DensityOperator>, what: &str) -> Result<DensityOperator> {
    state.ok_or_else(|| anyhow!("config needs `{what}`"))
}

fn open_orders(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.s_grid.iter().copied().filter(|s| *s > 0.0 && *s < 1.0).collect()
}

pub fn exponent(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool> {
    let rho = require(cfg.rho()?, "rho")?;
    let mixture = cfg.alternative_mixture()?;
    let budget = Budget::from_env();
    let d1 = rel_entropy(&rho, &mixture.mean())?;
    let mut table = Table::new(
        "exponent",
        &["epsilon", "n", "beta", "exponent", "converse_bound", "relative_entropy"],
    );
    let mut report = BoundReport::new("exponent");
    report.divergence("D(rho||mean alternative)", &d1, None);
    for &eps in &cfg.epsilon {
        for p in exponent_sequence(&rho, &mixture, eps, cfg.n_max, &budget)? {
            report.check(Check::le(
                format!("eps={eps} n={}: exponent <= converse", p.n),
                p.exponent,
                p.converse_bound,
                1e-9,
            ));
            table.push(vec![eps.into(), p.n.into(), p.beta.into(), p.exponent.into(), p.converse_bound.into(), d1.value.into()]);
        }
    }
    art.table(&table)?;
    art.report("exponent", &report)?;
    Ok(report.all_passed())
}

pub fn divergence(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool> {
    let rho = require(cfg.rho()?, "rho")?;
    let sigma = require(cfg.sigma()?, "sigma")?;
    let mut table = Table::new("divergence", &["quantity", "s", "value", "method"]);
    let mut report = BoundReport::new("divergence");
    let row = |table: &mut Table, q: &str, s: Option<f64>, v: f64, method: &str| {
        table.push(vec![q.into(), s.map(Cell::Num).unwrap_or(Cell::Text(String::new())), v.into(), method.into()]);
    };
    let d = rel_entropy(&rho, &sigma)?;
    report.divergence("D", &d, None);
    row(&mut table, "entropy_rho", None, von_neumann(&rho)?, "spectrum");
    row(&mut table, "entropy_sigma", None, von_neumann(&sigma)?, "spectrum");
    row(&mut table, "relative_entropy", None, d.value, &d.method);
    for &s in &cfg.s_grid {
        let p = petz_renyi(&rho, &sigma, s)?;
        let t = sandwiched_renyi(&rho, &sigma, s)?;
        row(&mut table, "petz_renyi", Some(s), p.value, &p.method);
        row(&mut table, "sandwiched_renyi", Some(s), t.value, &t.method);
        if p.finite && t.finite {
            // sandwiched never exceeds Petz
            report.check(Check::le(format!("sandwiched <= petz s={s}"), t.value, p.value, 1e-9));
        }
    }
    let mut rng = cell_rng(cfg.seed, 0);
    let m = measured_rel_entropy(&rho, &sigma, &MeasuredOptions::default(), &mut rng)?;
    row(&mut table, "measured_lower", None, m.lower.value, &m.lower.method);
    row(&mut table, "measured_best", None, m.best.value, &m.best.method);
    row(&mut table, "measured_upper", None, m.upper.value, &m.upper.method);
    report.check(Check::le("measured lower <= best", m.lower.value, m.best.value, 1e-12));
    report.check(Check::le("measured best <= D", m.best.value, m.upper.value, 1e-12));
    let c = chernoff(&rho, &sigma)?;
    row(&mut table, "chernoff", Some(c.argmax), c.value.value, &c.value.method);
    let dc = rel_entropy_of_coherence(&rho)?;
    row(&mut table, "coherence_rho", None, dc.value, &dc.method);
    for &s in &cfg.s_grid {
        let v = petz_renyi_coherence(&rho, s)?;
        row(&mut table, "petz_renyi_coherence_rho", Some(s), v.value, &v.method);
    }
    art.table(&table)?;
    art.report("divergence", &report)?;
    Ok(report.all_passed())
}

fn plus_state() -> DensityOperator {
    let h = c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DensityOperator::pure(&[h, h], SystemShape::single(2)).expect("normalized")
}

pub fn coherence(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool> {
    let rho = cfg.rho()?.unwrap_or_else(plus_state);
    let family = if cfg.alts.is_empty() {
        default_incoherent_family(&rho)
    } else {
        let fam = cfg.family(&cfg.alts, "alts")?;
        if let Some(i) = fam.iter().position(|s| !s.op().is_diagonal(1e-12)) {
            bail!("coherence needs incoherent (diagonal) `alts`; alts[{i}] has off-diagonal entries");
        }
        fam
    };
    let orders = open_orders(cfg);
    if orders.is_empty() {
        bail!("coherence needs at least one order in (0, 1) in s_grid");
    }
    let mut header: Vec<String> = ["epsilon", "n", "working_dim", "beta_upper", "beta_lower", "exponent", "exponent_ceiling"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(orders.iter().map(|s| format!("achievability_s{s}")));
    header.extend(["converse", "iterations", "converged"].iter().map(|s| s.to_string()));
    let mut table = Table::new("coherence", &header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut report = BoundReport::new("coherence");
    for &eps in &cfg.epsilon {
        let opts = CoherenceOptions {
            epsilon: eps,
            n_max: cfg.n_max,
            s_values: orders.clone(),
            ..CoherenceOptions::default()
        };
        let e = coherence_exponent_experiment(&rho, &family, &opts)?;
        for r in &e.rows {
            let mut cells: Vec<Cell> = vec![
                eps.into(),
                r.n.into(),
                r.working_dim.into(),
                r.beta_upper.into(),
                r.beta_lower.into(),
                r.exponent.into(),
                r.exponent_ceiling.into(),
            ];
            cells.extend(r.achievability.iter().map(|&(_, b)| Cell::Num(b)));
            cells.extend([r.converse.into(), r.iterations.into(), r.converged.into()]);
            table.push(cells);
        }
        let mut sub = e.report;
        sub.title = format!("coherence eps={eps}");
        report.extend(sub);
    }
    art.table(&table)?;
    art.report("coherence", &report)?;
    Ok(report.all_passed())
}

fn noisy_bell() -> DensityOperator {
    StateSpec::Pure {
        amplitudes: vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]],
        shape: vec![2, 2],
        noise: 0.3,
    }
    .load(std::path::Path::new("."))
    .expect("valid state")
}

pub fn mutual_info(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool> {
    let rho = cfg.rho()?.unwrap_or_else(noisy_bell);
    let orders = open_orders(cfg);
    if orders.is_empty() {
        bail!("mutual-info needs at least one order in (0, 1) in s_grid");
    }
    let budget = Budget::from_env();
    let mut table = Table::new(
        "mutual_info",
        &[
            "epsilon", "s", "n", "lambda", "alpha", "alpha_bound", "beta_universal", "beta_bound", "poly_factor",
            "exponent", "lower_bound", "converse", "petz_universal",
        ],
    );
    let mut report = BoundReport::new("mutual information");
    let mut cell = 0u64;
    for &eps in &cfg.epsilon {
        for &s in &orders {
            let mut rng = cell_rng(cfg.seed, cell);
            cell += 1;
            let e = mutual_info_exponent_experiment(&rho, eps, cfg.n_max, s, cfg.samples, &mut rng, &budget)?;
            for r in &e.rows {
                table.push(vec![
                    eps.into(),
                    s.into(),
                    r.n.into(),
                    r.lambda.into(),
                    r.alpha.into(),
                    r.alpha_bound.into(),
                    r.beta_universal.into(),
                    r.beta_bound.into(),
                    r.poly_factor.into(),
                    r.exponent.into(),
                    r.lower_bound.into(),
                    r.converse.into(),
                    r.petz_universal.into(),
                ]);
            }
            let mut sub = e.report;
            sub.title = format!("mutual information eps={eps} s={s}");
            report.extend(sub);
        }
    }
    art.table(&table)?;
    art.report("mutual_info", &report)?;
    Ok(report.all_passed())
}

pub fn chernoff_cmd(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool> {
    let (nulls, alts) = if !cfg.nulls.is_empty() || !cfg.alts.is_empty() {
        (cfg.family(&cfg.nulls, "nulls")?, cfg.family(&cfg.alts, "alts")?)
    } else {
        (vec![require(cfg.rho()?, "rho")?], vec![require(cfg.sigma()?, "sigma")?])
    };
    if nulls.is_empty() || alts.is_empty() {
        bail!("chernoff needs nonempty `nulls` and `alts` (or `rho` and `sigma`)");
    }
    let budget = Budget::from_env();
    let mut table = Table::new("chernoff", &["n", "value", "argmax", "conjectured", "stationarity"]);
    let mut report = BoundReport::new("chernoff");
    for n in 1..=cfg.n_max {
        let c = chernoff_composite(&nulls, &alts, n, &budget)?;
        report.value("composite", c.value, "concave_saddle", Some(n), c.stationarity);
        report.check(Check::le(format!("n={n}: composite <= pairwise minimum"), c.value, c.conjectured, 1e-8));
        table.push(vec![n.into(), c.value.into(), c.argmax.into(), c.conjectured.into(), c.stationarity.into()]);
    }
    art.table(&table)?;
    art.report("chernoff", &report)?;
    Ok(report.all_passed())
}

fn recovery_options(cfg: &ExperimentConfig) -> Result<RecoveryOptions> {
    Ok(RecoveryOptions {
        n_max: cfg.n_max,
        grid: QuadratureGrid::build(cfg.quadrature.half_width, cfg.quadrature.nodes)?,
        seed: cfg.seed,
        ..RecoveryOptions::default()
    })
}

fn bound_header(first: &str, n_max: usize) -> Vec<String> {
    let mut h: Vec<String> = [first, "I", "B1", "B2_lower", "B2_best"].iter().map(|s| s.to_string()).collect();
    for n in 1..=n_max {
        h.push(format!("B3_n{n}"));
    }
    for n in 1..=n_max {
        h.push(format!("B3_penalty_n{n}"));
    }
    h.extend(["quadrature_error", "unrotated", "slack_B1", "slack_B2_lower"].iter().map(|s| s.to_string()));
    for n in 1..=n_max {
        h.push(format!("slack_B3_n{n}"));
    }
    h
}

/// `I − bound` for each asserted bound (B1 net of its quadrature error,
/// B3 net of its spectrum-count penalty).
fn slack_cells(target: f64, b1: f64, quad: f64, b2_lower: f64, b3: &[steinlab::recovery::BlockBound], n_max: usize) -> Vec<Cell> {
    let mut cells = vec![Cell::Num(target - (b1 - quad)), Cell::Num(target - b2_lower)];
    for n in 1..=n_max {
        cells.push(
            b3.iter()
                .find(|b| b.n == n)
                .map(|b| Cell::Num(target - (b.value - b.penalty)))
                .unwrap_or(Cell::Text(String::new())),
        );
    }
    cells
}

fn block_cells(b3: &[steinlab::recovery::BlockBound], n_max: usize) -> Vec<Cell> {
    let mut cells = Vec::new();
    for n in 1..=n_max {
        cells.push(b3.iter().find(|b| b.n == n).map(|b| Cell::Num(b.value)).unwrap_or(Cell::Text(String::new())));
    }
    for n in 1..=n_max {
        cells.push(b3.iter().find(|b| b.n == n).map(|b| Cell::Num(b.penalty)).unwrap_or(Cell::Text(String::new())));
    }
    cells
}

pub fn cqmi(cfg: &ExperimentConfig, art: &mut Artifacts, theta_sweep_mode: bool) -> Result<bool> {
    let opts = recovery_options(cfg)?;
    if theta_sweep_mode {
        let (rows, report) = theta_sweep(&cfg.theta_grid, &opts)?;
        let mut header = bound_header("theta", cfg.n_max);
        header.push("family_upper".into());
        let mut table = Table::new("cqmi_theta", &header.iter().map(String::as_str).collect::<Vec<_>>());
        for r in &rows {
            let mut cells: Vec<Cell> = vec![r.theta.into(), r.cmi.into(), r.b1.into(), r.b2_lower.into(), r.b2_best.into()];
            cells.extend(block_cells(&r.b3, cfg.n_max));
            cells.extend([r.quadrature_error.into(), r.unrotated.into()]);
            cells.extend(slack_cells(r.cmi, r.b1, r.quadrature_error, r.b2_lower, &r.b3, cfg.n_max));
            cells.push(r.family_upper.into());
            table.push(cells);
        }
        art.table(&table)?;
        art.report("cqmi_theta", &report)?;
        return Ok(report.all_passed());
    }
    let rho = require(cfg.rho()?, "rho")?;
    let b = cqmi_bounds(&rho, &opts)?;
    write_bounds(art, "cqmi", &b, cfg.n_max)
}

fn write_bounds(art: &mut Artifacts, name: &str, b: &RecoveryBounds, n_max: usize) -> Result<bool> {
    let header = bound_header("state", n_max);
    let mut table = Table::new(name, &header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut cells: Vec<Cell> = vec!["rho".into(), b.target.into(), b.b1.into(), b.b2_lower.into(), b.b2_best.into()];
    cells.extend(block_cells(&b.b3, n_max));
    cells.extend([b.quadrature_error.into(), b.unrotated.into()]);
    cells.extend(slack_cells(b.target, b.b1, b.quadrature_error, b.b2_lower, &b.b3, n_max));
    table.push(cells);
    art.table(&table)?;
    art.report(name, &b.report)?;
    Ok(b.report.all_passed())
}

pub fn monotonicity(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool> {
    let rho = require(cfg.rho()?, "rho")?;
    let sigma = require(cfg.sigma()?, "sigma")?;
    let channel = cfg
        .channel
        .as_ref()
        .ok_or_else(|| anyhow!("config needs `channel`"))?
        .build(&rho)?;
    let b = strengthened_monotonicity(&rho, sigma.op(), &channel, &recovery_options(cfg)?)?;
    write_bounds(art, "monotonicity", &b, cfg.n_max)
}

//! Invariant suite at reduced sample counts. Each invariant yields one raw
//! slack per instance; it passes when `slack + tolerance ≥ 0` everywhere.

use anyhow::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use steinlab::composite::{
    caratheodory_reduce, chernoff_composite, coherence_exponent_experiment, default_incoherent_family,
    renyi_mutual_info, schur_weyl_margin, sibson_decompose, vertex_sufficiency_slack, AlternatingOptions,
    CoherenceOptions,
};
use steinlab::divergence::{
    audenaert_gap, chernoff, measured_rel_entropy, mixture_entropy_slack, mutual_info, rel_entropy_operators, spectrum_count, MeasuredOptions, Pinching,
};
use steinlab::neyman_pearson::{audenaert_test, exponent_sequence};
use steinlab::operator::{eig, kron_power, partial_trace};
use steinlab::recovery::{apply_rotated_petz, cqmi_bounds, normalization_defect, QuadratureGrid, RecoveryOptions, RotatedPetzMap};
use steinlab::states::{mix_tensor_power, random_density_with, symmetrize};
use steinlab::{Budget, DensityOperator, FiniteMixture, SystemShape};

use crate::commands::cell_rng;
use crate::output::{Artifacts, Table};

type Instances = Vec<(f64, String)>;

struct Invariant {
    name: &'static str,
    tolerance: f64,
    run: fn(&mut ChaCha8Rng) -> Result<Instances>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub instances: usize,
    pub tolerance: f64,
    pub worst_margin: f64,
    pub worst_instance: String,
    pub passed: bool,
}

fn state(rng: &mut ChaCha8Rng, d: usize) -> Result<DensityOperator> {
    Ok(random_density_with(rng, d, d)?)
}

fn reconstruction(rng: &mut ChaCha8Rng) -> Result<Instances> {
    (0..10)
        .map(|k| {
            let d = 2 + k % 5;
            let a = state(rng, d)?.op().lincomb(1.0, state(rng, d)?.op(), -0.7)?;
            let spec = eig(&a)?;
            let err = spec.reconstruct().max_abs_diff(&a);
            Ok((1e-9 * a.frobenius_norm() - err, format!("d={d}")))
        })
        .collect()
}

fn partial_trace_product(rng: &mut ChaCha8Rng) -> Result<Instances> {
    (0..6)
        .map(|k| {
            let (da, db) = (2 + k % 2, 2 + k % 3);
            let a = state(rng, da)?;
            let b = state(rng, db)?;
            let ab = a.op().kron(b.op());
            let shape = SystemShape::new(vec![da, db])?;
            let err = partial_trace(&ab, &shape, &[0])?.max_abs_diff(a.op());
            Ok((-err, format!("da={da} db={db}")))
        })
        .collect()
}

fn schur_weyl(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let budget = Budget::default();
    let mut out = Vec::new();
    for n in [2, 3] {
        for _ in 0..3 {
            let raw = state(rng, 1 << n)?;
            let sym = symmetrize(raw.op(), 2, n)?;
            out.push((schur_weyl_margin(&sym, 2, n, &budget)?, format!("d=2 n={n}")));
        }
    }
    Ok(out)
}

fn pinching(rng: &mut ChaCha8Rng) -> Result<Instances> {
    (0..10)
        .map(|k| {
            let d = 2 + k % 4;
            let omega = state(rng, d)?;
            let x = state(rng, d)?;
            let p = Pinching::new(omega.op())?;
            let diff = p.apply(x.op())?.lincomb(1.0, x.op(), -1.0 / p.spectrum_count() as f64)?;
            Ok((eig(&diff)?.min_eigenvalue(), format!("d={d}")))
        })
        .collect()
}

fn measured_bracket(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let opts = MeasuredOptions {
        restarts: 3,
        ..MeasuredOptions::default()
    };
    let mut out = Vec::new();
    for k in 0..6 {
        let d = 2 + k % 3;
        let rho = state(rng, d)?;
        let sigma = state(rng, d)?;
        let b = measured_rel_entropy(&rho, &sigma, &opts, rng)?;
        let slack = (b.best.value - b.lower.value).min(b.upper.value - b.best.value);
        out.push((slack, format!("d={d}")));
    }
    Ok(out)
}

fn audenaert(rng: &mut ChaCha8Rng) -> Result<Instances> {
    (0..20)
        .map(|k| {
            let d = 2 + k % 5;
            let x = state(rng, d)?.op().scale(rng.random_range(0.1..3.0));
            let y = state(rng, d)?.op().scale(rng.random_range(0.1..3.0));
            let s = rng.random_range(0.01..0.99);
            Ok((audenaert_gap(&x, &y, s)?, format!("d={d} s={s:.6}")))
        })
        .collect()
}

/// Qubit state with Bloch radius in `[0.1, 0.85]`: non-degenerate, and
/// `λ_min^10` stays far above eigensolver round-off.
pub fn generic_qubit(rng: &mut ChaCha8Rng) -> Result<DensityOperator> {
    let r = rng.random_range(0.1..0.85);
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    let rho_xy = (1.0 - z * z).sqrt();
    let spec = crate::config::StateSpec::Bloch {
        bloch: [r * rho_xy * phi.cos(), r * rho_xy * phi.sin(), r * z],
    };
    spec.load(std::path::Path::new("."))
}

fn spectrum_count_powers(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let budget = Budget::default();
    let sigma = generic_qubit(rng)?;
    (1..=6)
        .map(|n| {
            let c = spectrum_count(&kron_power(sigma.op(), n, &budget)?)?;
            Ok((-((c as f64) - (n + 1) as f64).abs(), format!("n={n}")))
        })
        .collect()
}

fn mutual_info_identity(rng: &mut ChaCha8Rng) -> Result<Instances> {
    (0..5)
        .map(|_| {
            let rho = state(rng, 4)?.with_shape(SystemShape::qubits(2))?;
            let prod = rho.partial_trace(&[0])?.tensor(&rho.partial_trace(&[1])?);
            let d = rel_entropy_operators(rho.op(), prod.op())?;
            Ok((-(d - mutual_info(&rho)?).abs(), "two qubits".into()))
        })
        .collect()
}

fn stein_converse(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let budget = Budget::default();
    let rho = state(rng, 2)?;
    let sigma = FiniteMixture::singleton(state(rng, 2)?);
    let mut out = Vec::new();
    for eps in [0.1, 0.5] {
        for p in exponent_sequence(&rho, &sigma, eps, 5, &budget)? {
            out.push((p.converse_bound - p.exponent, format!("eps={eps} n={}", p.n)));
        }
    }
    Ok(out)
}

fn audenaert_certificates(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let budget = Budget::default();
    let mut out = Vec::new();
    for k in 0..8 {
        let n = 1 + k % 3;
        let rho = state(rng, 2)?.tensor_power(n, &budget)?;
        let sigma = state(rng, 2)?.tensor_power(n, &budget)?;
        let lambda = rng.random_range(-2.0..2.0);
        let s = rng.random_range(0.05..0.95);
        let t = audenaert_test(rho.op(), sigma.op(), lambda, s)?;
        out.push(((t.alpha_bound - t.alpha).min(t.beta_bound - t.beta), format!("n={n} lambda={lambda:.6} s={s:.6}")));
    }
    Ok(out)
}

fn sibson(rng: &mut ChaCha8Rng) -> Result<Instances> {
    (0..10)
        .map(|k| {
            let rho = state(rng, 4)?.with_shape(SystemShape::qubits(2))?;
            let (sa, sb) = (state(rng, 2)?, state(rng, 2)?);
            let s = [0.3, 0.7, 1.5, 2.0][k % 4];
            Ok((-sibson_decompose(&rho, &sa, &sb, s)?.residual, format!("s={s}")))
        })
        .collect()
}

fn renyi_mi_additivity(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let mut out = Vec::new();
    let rho = state(rng, 4)?.with_shape(SystemShape::qubits(2))?;
    // (A B)(A' B') → (A A')(B B')
    let doubled = rho.tensor(&rho).permute(&[0, 2, 1, 3])?.with_shape(SystemShape::new(vec![4, 4])?)?;
    for s in [0.5, 0.8] {
        let one = renyi_mutual_info(&rho, s, &AlternatingOptions::default())?.value;
        let two = renyi_mutual_info(&doubled, s, &AlternatingOptions::default())?.value;
        out.push((-(two - 2.0 * one).abs(), format!("s={s}")));
    }
    Ok(out)
}

fn caratheodory(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let budget = Budget::default();
    (0..4)
        .map(|k| {
            let comps = (0..8 + k).map(|_| state(rng, 2)).collect::<Result<Vec<_>>>()?;
            let m = FiniteMixture::uniform(comps)?;
            let r = caratheodory_reduce(&m, 2, &budget)?;
            let err = mix_tensor_power(&m, 2, &budget)?.op().max_abs_diff(mix_tensor_power(&r, 2, &budget)?.op());
            Ok((1e-8 - err, format!("components={}", 8 + k)))
        })
        .collect()
}

fn quasi_convexity(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let budget = Budget::default();
    let mut out = Vec::new();
    for k in 0..6 {
        let comps = (0..2 + k % 3).map(|_| state(rng, 2)).collect::<Result<Vec<_>>>()?;
        let m = FiniteMixture::uniform(comps)?;
        out.push((mixture_entropy_slack(&m)?, format!("entropy k={}", m.len())));
    }
    for n in 1..=3 {
        let nulls = FiniteMixture::uniform(vec![state(rng, 2)?, state(rng, 2)?])?;
        let alts = FiniteMixture::uniform(vec![state(rng, 2)?, state(rng, 2)?])?;
        out.push((vertex_sufficiency_slack(&nulls, &alts, n, &budget)?, format!("vertex n={n}")));
    }
    Ok(out)
}

fn chernoff_checks(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let budget = Budget::default();
    let rho = state(rng, 2)?;
    let sigma = state(rng, 2)?;
    let zero = chernoff(&rho, &rho)?.value.value.abs();
    let c1 = chernoff_composite(std::slice::from_ref(&rho), std::slice::from_ref(&sigma), 1, &budget)?.value;
    let c2 = chernoff_composite(&[rho], &[sigma], 2, &budget)?.value;
    Ok(vec![(-zero, "C(rho,rho)".into()), (-(c1 - c2).abs(), "singleton n=1 vs n=2".into())])
}

fn coherence_bounds(_rng: &mut ChaCha8Rng) -> Result<Instances> {
    let h = faer::c64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let rho = DensityOperator::pure(&[h, h], SystemShape::single(2))?;
    let opts = CoherenceOptions {
        n_max: 4,
        ..CoherenceOptions::default()
    };
    let e = coherence_exponent_experiment(&rho, &default_incoherent_family(&rho), &opts)?;
    Ok(e.report.checks.iter().map(|c| (c.margin(), c.name.clone())).collect())
}

fn quadrature(_rng: &mut ChaCha8Rng) -> Result<Instances> {
    let g = QuadratureGrid::standard();
    Ok(vec![(-normalization_defect(&g), format!("T={} nodes={}", g.half_width, g.len()))])
}

fn markov_recovery(rng: &mut ChaCha8Rng) -> Result<Instances> {
    (0..3)
        .map(|_| {
            let rho = state(rng, 2)?.tensor(&state(rng, 4)?).with_shape(SystemShape::qubits(3))?;
            let map = RotatedPetzMap::for_tripartite(&rho, 0.0)?;
            let out = apply_rotated_petz(&map, rho.partial_trace(&[0, 2])?.op())?;
            Ok((1e-8 - out.state.max_abs_diff(rho.op()), "rho_A ⊗ rho_BC".into()))
        })
        .collect()
}

fn cqmi(rng: &mut ChaCha8Rng) -> Result<Instances> {
    let mut out = Vec::new();
    for k in 0..2 {
        let rho = state(rng, 8)?.with_shape(SystemShape::qubits(3))?;
        let opts = RecoveryOptions {
            n_max: 2,
            seed: k,
            budget: Budget::default(),
            ..RecoveryOptions::default()
        };
        let b = cqmi_bounds(&rho, &opts)?;
        out.extend(b.report.checks.iter().map(|c| (c.margin(), format!("state {k}: {}", c.name))));
    }
    Ok(out)
}

fn registry() -> Vec<Invariant> {
    macro_rules! inv {
        ($name:literal, $tol:expr, $f:ident) => {
            Invariant { name: $name, tolerance: $tol, run: $f }
        };
    }
    vec![
        inv!("operator.spectral_reconstruction", 0.0, reconstruction),
        inv!("operator.partial_trace_of_product", 1e-12, partial_trace_product),
        inv!("states.schur_weyl_domination", 1e-9, schur_weyl),
        inv!("divergence.pinching_inequality", 1e-9, pinching),
        inv!("divergence.measured_bracket_order", 1e-12, measured_bracket),
        inv!("divergence.audenaert_inequality", 1e-9, audenaert),
        inv!("divergence.spectrum_count_tensor_power", 0.0, spectrum_count_powers),
        inv!("divergence.mutual_information_identity", 1e-9, mutual_info_identity),
        inv!("neyman_pearson.converse_bound", 1e-9, stein_converse),
        inv!("neyman_pearson.threshold_test_certificates", 1e-9, audenaert_certificates),
        inv!("composite.sibson_identity", 1e-8, sibson),
        inv!("composite.renyi_mutual_info_additivity", 1e-6, renyi_mi_additivity),
        inv!("composite.caratheodory_moments", 0.0, caratheodory),
        inv!("composite.quasi_convexity", 1e-9, quasi_convexity),
        inv!("composite.chernoff_sanity", 1e-8, chernoff_checks),
        inv!("composite.coherence_bounds", 0.0, coherence_bounds),
        inv!("recovery.quadrature_normalization", 1e-12, quadrature),
        inv!("recovery.markov_recovery", 0.0, markov_recovery),
        inv!("recovery.cqmi_bounds", 0.0, cqmi),
    ]
}

pub fn invariant_names() -> Vec<&'static str> {
    registry().iter().map(|i| i.name).collect()
}

/// Runs every invariant. `inject` names invariants whose tolerance is
/// replaced by `-1`, which must make them fail.
pub fn run(seed: u64, inject: &[String]) -> Result<Vec<InvariantResult>> {
    let reg = registry();
    if let Some(bad) = inject.iter().find(|n| !reg.iter().any(|i| i.name == n.as_str())) {
        anyhow::bail!("unknown invariant `{bad}`; known: {}", invariant_names().join(", "));
    }
    reg.par_iter()
        .enumerate()
        .map(|(k, inv)| {
            let mut rng = cell_rng(seed, k as u64);
            let instances = (inv.run)(&mut rng)?;
            let tolerance = if inject.iter().any(|n| n == inv.name) { -1.0 } else { inv.tolerance };
            let (worst, label) = instances
                .iter()
                .map(|(s, l)| (s + tolerance, l.clone()))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap_or((f64::INFINITY, String::new()));
            Ok(InvariantResult {
                name: inv.name.into(),
                instances: instances.len(),
                tolerance,
                worst_margin: worst,
                worst_instance: label,
                passed: worst >= 0.0,
            })
        })
        .collect()
}

pub fn write(results: &[InvariantResult], art: &mut Artifacts) -> Result<bool> {
    let mut table = Table::new("selftest", &["invariant", "instances", "tolerance", "worst_margin", "worst_instance", "passed"]);
    let mut report = steinlab::BoundReport::new("selftest");
    for r in results {
        table.push(vec![
            r.name.as_str().into(),
            r.instances.into(),
            r.tolerance.into(),
            r.worst_margin.into(),
            r.worst_instance.as_str().into(),
            r.passed.into(),
        ]);
        report.check(steinlab::Check::ge(r.name.clone(), r.worst_margin, 0.0, 0.0));
        if !r.passed {
            report.note(format!("{} failed at instance `{}`", r.name, r.worst_instance));
        }
    }
    art.table(&table)?;
    art.report("selftest", &report)?;
    Ok(report.all_passed())
}

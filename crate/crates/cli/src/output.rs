//! CSV tables, report files and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use steinlab::BoundReport;

/// Decimal rendering with 12 significant digits; scientific notation
/// outside `[1e-5, 1e12)`. Infinities print as `inf`/`-inf`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let mag = v.abs();
    if !(1e-5..1e12).contains(&mag) {
        return format!("{v:.11e}");
    }
    let exp = mag.log10().floor() as i32;
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can carry into a new leading digit; trim trailing zeros for
    // a canonical form either way
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.into())
    }
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width for table {}", self.name);
        self.rows.push(
            row.into_iter()
                .map(|c| match c {
                    Cell::Num(v) => fmt_num(v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(t) => escape(&t),
                })
                .collect(),
        );
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.header.join(",")).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", r.join(",")).unwrap();
        }
        out
    }
}

fn escape(t: &str) -> String {
    if t.contains([',', '"', '\n']) {
        format!("\"{}\"", t.replace('"', "\"\""))
    } else {
        t.to_string()
    }
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    rows: Option<usize>,
}

/// Everything needed to trace a number back to its inputs. Contains no
/// timestamps or host details, so identical runs give identical bytes.
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: u64,
    pub workers: Option<usize>,
    pub budget_max_dim: usize,
    pub config: &'a crate::config::ExperimentConfig,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub defaults: BTreeMap<&'static str, String>,
}

pub fn tolerances() -> BTreeMap<&'static str, f64> {
    use steinlab::{divergence, neyman_pearson, operator, states};
    BTreeMap::from([
        ("hermitian", operator::HERMITIAN_TOLERANCE),
        ("support_cutoff", operator::SUPPORT_CUTOFF),
        ("distinct_eigenvalue", operator::DISTINCT_EIGENVALUE_TOLERANCE),
        ("eigen_noise_factor", operator::EIGEN_NOISE_FACTOR),
        ("trace", states::TRACE_TOLERANCE),
        ("negativity", states::NEGATIVITY_TOLERANCE),
        ("weight", states::WEIGHT_TOLERANCE),
        ("negative_clip", divergence::NEGATIVE_CLIP),
        ("support_leak", divergence::SUPPORT_LEAK_TOLERANCE),
        ("orthogonality", divergence::ORTHOGONALITY_TOLERANCE),
        ("chernoff_s", divergence::CHERNOFF_S_TOLERANCE),
        ("test_operator", neyman_pearson::TEST_TOLERANCE),
    ])
}

pub fn module_defaults() -> BTreeMap<&'static str, String> {
    let np = steinlab::neyman_pearson::NpOptions::default();
    let co = steinlab::composite::CompositeOptions::default();
    let pgd = steinlab::optim::PgdOptions::default();
    let mo = steinlab::recovery::RecoveryOptions::default().measured;
    BTreeMap::from([
        ("np.max_iterations", np.max_iterations.to_string()),
        ("np.rel_width", fmt_num(np.rel_width)),
        ("np.gap_tolerance", fmt_num(np.gap_tolerance)),
        ("composite.max_iterations", co.max_iterations.to_string()),
        ("composite.learning_rate", fmt_num(co.learning_rate)),
        ("composite.abs_gap", fmt_num(co.abs_gap)),
        ("composite.rel_gap", fmt_num(co.rel_gap)),
        ("pgd.max_iter", pgd.max_iter.to_string()),
        ("pgd.tolerance", fmt_num(pgd.tolerance)),
        ("measured.restarts", mo.restarts.to_string()),
        ("measured.max_sweeps", mo.max_sweeps.to_string()),
        ("measured.rel_improvement", fmt_num(mo.rel_improvement)),
    ])
}

/// Writes tables and reports under `dir`, then the manifest listing them.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn write(&mut self, name: &str, text: &str, rows: Option<usize>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry { path: name.into(), rows });
        Ok(())
    }

    pub fn table(&mut self, t: &Table) -> Result<()> {
        self.write(&format!("{}.csv", t.name), &t.to_csv(), Some(t.len()))
    }

    pub fn report(&mut self, name: &str, r: &BoundReport) -> Result<()> {
        self.write(&format!("{name}.report.json"), &(r.to_json() + "\n"), None)
    }

    pub fn finish(mut self, manifest: &Manifest) -> Result<()> {
        #[derive(Serialize)]
        struct WithFiles<'a, 'b> {
            #[serde(flatten)]
            manifest: &'a Manifest<'b>,
            files: &'a [FileEntry],
        }
        let files = std::mem::take(&mut self.files);
        let text = serde_json::to_string_pretty(&WithFiles { manifest, files: &files })? + "\n";
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

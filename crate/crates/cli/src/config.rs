//! Experiment configuration: a TOML file, overridden field by field by
//! command-line flags.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use faer::c64;
use serde::{Deserialize, Serialize};
use steinlab::recovery::Channel;
use steinlab::states::{ff17_state, state_from_json};
use steinlab::{DensityOperator, FiniteMixture, HermitianOperator, SystemShape};

/// How a state is given in a config file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged, deny_unknown_fields)]
pub enum StateSpec {
    /// Qubit `(1 + r·σ)/2`.
    Bloch { bloch: [f64; 3] },
    Diagonal { diagonal: Vec<f64> },
    /// `(1 − noise)|ψ⟩⟨ψ| + noise·1/d`; amplitudes as `[re, im]` pairs,
    /// normalized on load.
    Pure {
        amplitudes: Vec<[f64; 2]>,
        #[serde(default)]
        shape: Vec<usize>,
        #[serde(default)]
        noise: f64,
    },
    Ff17 { ff17: f64 },
    /// JSON state document, relative to the config file.
    File { file: PathBuf },
}

impl StateSpec {
    pub fn load(&self, base: &Path) -> Result<DensityOperator> {
        Ok(match self {
            StateSpec::Bloch { bloch: [x, y, z] } => {
                let m = faer::Mat::from_fn(2, 2, |i, j| match (i, j) {
                    (0, 0) => c64::new((1.0 + z) / 2.0, 0.0),
                    (1, 1) => c64::new((1.0 - z) / 2.0, 0.0),
                    (0, 1) => c64::new(x / 2.0, -y / 2.0),
                    _ => c64::new(x / 2.0, y / 2.0),
                });
                DensityOperator::from_matrix(m, SystemShape::single(2))?
            }
            StateSpec::Diagonal { diagonal } => DensityOperator::diagonal(diagonal)?,
            StateSpec::Pure { amplitudes, shape, noise } => {
                let norm = amplitudes.iter().map(|[a, b]| a * a + b * b).sum::<f64>().sqrt();
                if norm.is_nan() || norm <= 0.0 {
                    bail!("pure state has zero norm");
                }
                if !(0.0..=1.0).contains(noise) {
                    bail!("noise {noise} outside [0, 1]");
                }
                let amps: Vec<c64> = amplitudes.iter().map(|[a, b]| c64::new(a / norm, b / norm)).collect();
                let shape = if shape.is_empty() {
                    SystemShape::single(amps.len())
                } else {
                    SystemShape::new(shape.clone())?
                };
                let psi = DensityOperator::pure(&amps, shape.clone())?;
                if *noise == 0.0 {
                    psi
                } else {
                    let d = amps.len();
                    let mixed = psi.op().lincomb(1.0 - noise, &HermitianOperator::identity(d), noise / d as f64)?;
                    DensityOperator::new(mixed, shape)?
                }
            }
            StateSpec::Ff17 { ff17 } => ff17_state(*ff17)?,
            StateSpec::File { file } => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                state_from_json(&text).with_context(|| format!("parsing {}", path.display()))?
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Identity,
    Depolarizing { p: f64 },
    /// Keeps the listed factors of the input state's shape.
    PartialTrace { keep: Vec<usize> },
}

impl ChannelSpec {
    pub fn build(&self, input: &DensityOperator) -> Result<Channel> {
        Ok(match self {
            ChannelSpec::Identity => Channel::identity(input.dim()),
            ChannelSpec::Depolarizing { p } => Channel::depolarizing(input.dim(), *p)?,
            ChannelSpec::PartialTrace { keep } => Channel::partial_trace(input.shape(), keep)?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub half_width: f64,
    pub nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            half_width: 12.0,
            nodes: 961,
        }
    }
}

fn default_epsilon() -> Vec<f64> {
    vec![0.5]
}
fn default_n_max() -> usize {
    4
}
fn default_s_grid() -> Vec<f64> {
    vec![0.5]
}
fn default_theta_grid() -> Vec<f64> {
    (0..=8).map(|k| k as f64 * PI / 16.0).collect()
}
fn default_output() -> PathBuf {
    PathBuf::from("steinlab-out")
}
fn default_samples() -> usize {
    4
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_theta_grid")]
    pub theta_grid: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub seed: u64,
    /// Not recorded in the manifest, so reruns into different directories
    /// compare equal.
    #[serde(default = "default_output", skip_serializing)]
    pub output: PathBuf,
    /// Worker threads; `None` uses every logical core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Random product alternatives sampled per `n` (mutual information).
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub rho: Option<StateSpec>,
    #[serde(default)]
    pub sigma: Option<StateSpec>,
    #[serde(default)]
    pub nulls: Vec<StateSpec>,
    #[serde(default)]
    pub alts: Vec<StateSpec>,
    #[serde(default)]
    pub alt_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    /// Directory state files are resolved against (the config's folder).
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        // toml errors carry line and column
        toml::from_str(text).map_err(|e| anyhow!("config parse error: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            bail!("n_max must be at least 1");
        }
        if self.epsilon.is_empty() {
            bail!("epsilon list is empty");
        }
        if let Some(e) = self.epsilon.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            bail!("epsilon {e} outside (0, 1)");
        }
        if let Some(t) = self.theta_grid.iter().find(|t| !(-1e-12..=FRAC_PI_2 + 1e-12).contains(*t)) {
            bail!("theta {t} outside [0, π/2]");
        }
        if self.quadrature.nodes < 3 || self.quadrature.nodes % 2 == 0 {
            bail!("quadrature nodes must be odd and at least 3");
        }
        if self.workers == Some(0) {
            bail!("workers must be positive");
        }
        // every referenced state must exist and parse
        self.rho()?;
        self.sigma()?;
        self.family(&self.nulls, "nulls")?;
        self.family(&self.alts, "alts")?;
        Ok(())
    }

    pub fn rho(&self) -> Result<Option<DensityOperator>> {
        self.rho.as_ref().map(|s| s.load(&self.base_dir).context("loading rho")).transpose()
    }

    pub fn sigma(&self) -> Result<Option<DensityOperator>> {
        self.sigma.as_ref().map(|s| s.load(&self.base_dir).context("loading sigma")).transpose()
    }

    pub fn family(&self, specs: &[StateSpec], what: &str) -> Result<Vec<DensityOperator>> {
        specs
            .iter()
            .enumerate()
            .map(|(k, s)| s.load(&self.base_dir).with_context(|| format!("loading {what}[{k}]")))
            .collect()
    }

    /// Alternative hypothesis as a mixture: `alts` (with `alt_weights`)
    /// when given, else the singleton `sigma`.
    pub fn alternative_mixture(&self) -> Result<FiniteMixture> {
        if !self.alts.is_empty() {
            let states = self.family(&self.alts, "alts")?;
            return Ok(match &self.alt_weights {
                Some(w) => FiniteMixture::new(w.clone(), states)?,
                None => FiniteMixture::uniform(states)?,
            });
        }
        let sigma = self.sigma()?.ok_or_else(|| anyhow!("config needs `sigma` or `alts`"))?;
        Ok(FiniteMixture::singleton(sigma))
    }
}

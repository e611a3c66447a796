//! Experiment configuration: one versioned JSON document.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use bosamp_core::circuits::{coupled_waveguide_unitary, haar_random_unitary, Interferometer};
use bosamp_core::distributions::Domain;
use bosamp_core::validation::Protocol;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Where the interferometer comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CircuitSource {
    Haar { modes: usize, seed: u64 },
    Waveguide {
        couplings: Vec<f64>,
        phases: Vec<f64>,
        length: f64,
    },
    /// Interferometer JSON; relative paths resolve against the config file.
    MatrixFile(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AltModel {
    Distinguishable,
    Thermal,
    Coherent,
    DistinguishableSms,
    Tms,
    Uniform,
}

impl AltModel {
    pub fn tag(self) -> &'static str {
        match self {
            AltModel::Distinguishable => "distinguishable",
            AltModel::Thermal => "thermal",
            AltModel::Coherent => "coherent",
            AltModel::DistinguishableSms => "distinguishable-sms",
            AltModel::Tms => "tms",
            AltModel::Uniform => "uniform",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CounterTest {
    RowNorm,
    LikelihoodRatio { a1: f64, a2: f64 },
}

impl CounterTest {
    pub fn tag(self) -> &'static str {
        match self {
            CounterTest::RowNorm => "row-norm",
            CounterTest::LikelihoodRatio { .. } => "likelihood-ratio",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSettings {
    pub count: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub protocol: Protocol,
    pub circuit: CircuitSource,
    /// Modes fed by sources; defaults to the first `squeezing.len()` (or
    /// `input.len()`) modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_modes: Option<Vec<usize>>,
    /// Squeezing per source (GBS and SBS).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub squeezing: Vec<f64>,
    /// Photons per input mode (standard boson sampling).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<usize>>,
    /// Heralded photon number (SBS).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photons: Option<usize>,
    pub domain: Domain,
    #[serde(default = "yes")]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSettings>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub validation: Vec<AltModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub counter_tests: Vec<CounterTest>,
    /// Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    /// Reads a config, or the config embedded in a run manifest, and
    /// resolves file references against the document's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("{} is not valid JSON", path.display()))?;
        if let Some(inner) = value.get("config").filter(|_| value.get("config_sha256").is_some()) {
            value = inner.clone();
        }
        let mut cfg: Self = serde_json::from_value(value)
            .with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).context("invalid config")?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let CircuitSource::MatrixFile(p) = &mut self.circuit {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut self.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.schema_version == SCHEMA_VERSION,
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            self.schema_version
        );
        if let CircuitSource::MatrixFile(p) = &self.circuit {
            ensure!(p.is_file(), "matrix file {} does not exist", p.display());
        }
        match self.protocol {
            Protocol::Gbs => {
                ensure!(!self.squeezing.is_empty(), "GBS needs a non-empty squeezing list");
                ensure!(self.input.is_none(), "GBS takes squeezing, not a Fock input");
            }
            Protocol::Sbs => {
                ensure!(!self.squeezing.is_empty(), "SBS needs a non-empty squeezing list");
                ensure!(self.photons.is_some(), "SBS needs the heralded photon number");
            }
            Protocol::Standard => {
                ensure!(self.input.is_some(), "standard boson sampling needs an input pattern");
            }
        }
        for alt in &self.validation {
            let ok = match self.protocol {
                Protocol::Gbs => !matches!(alt, AltModel::Distinguishable),
                _ => matches!(alt, AltModel::Distinguishable | AltModel::Uniform),
            };
            ensure!(ok, "model {} does not apply to {:?}", alt.tag(), self.protocol);
        }
        if !self.counter_tests.is_empty() && self.protocol == Protocol::Gbs {
            bail!("row-norm and likelihood-ratio tests need Fock inputs");
        }
        if (!self.validation.is_empty() || !self.counter_tests.is_empty()) && self.samples.is_none()
        {
            bail!("validation needs a samples section with count and seed");
        }
        Ok(())
    }

    /// Interferometer with its source modes attached.
    pub fn interferometer(&self) -> Result<Interferometer> {
        let full = match &self.circuit {
            CircuitSource::Haar { modes, seed } => haar_random_unitary(*modes, *seed)?,
            CircuitSource::Waveguide {
                couplings,
                phases,
                length,
            } => coupled_waveguide_unitary(couplings, phases, *length)?,
            CircuitSource::MatrixFile(p) => Interferometer::load(p)
                .with_context(|| format!("cannot load matrix file {}", p.display()))?,
        };
        let count = match self.protocol {
            Protocol::Standard => self.input.as_ref().map_or(0, Vec::len),
            _ => self.squeezing.len(),
        };
        let modes = match &self.input_modes {
            Some(m) => m.clone(),
            None => (0..count).collect(),
        };
        ensure!(
            modes.len() == count,
            "{} input modes for {count} sources",
            modes.len()
        );
        Ok(full.with_inputs(modes)?)
    }

    /// SHA-256 of the canonical JSON form, without the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        let bytes = serde_json::to_vec(&c).expect("config serialises");
        hex::encode(Sha256::digest(bytes))
    }
}

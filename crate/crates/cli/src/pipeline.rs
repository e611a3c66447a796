//! simulate → sample → validate, and the artifacts each step leaves behind.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use bosamp_core::circuits::{transfer_matrix, Interferometer};
use bosamp_core::distributions::{
    build_distribution, domain_size, ClassicalModelSpec, Distribution, Domain, Model,
    ScattershotSampler, MAX_DOMAIN_SIZE,
};
use bosamp_core::gaussian::{build_sigma_q, SqueezerBank};
use bosamp_core::validation::{
    bayesian_compare, likelihood_ratio_test, rownorm_test, Likelihood, Protocol, SampleRecord,
    ValidationVerdict,
};
use bosamp_core::{FockPattern, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{AltModel, CircuitSource, CounterTest, ExperimentConfig};

pub const DISTRIBUTION_FILE: &str = "distribution.csv";
pub const SAMPLES_FILE: &str = "samples.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Refuses domains too large to enumerate before any work starts.
pub fn guard_domain(modes: usize, domain: Domain) -> Result<()> {
    let size = domain_size(modes, domain);
    if size > MAX_DOMAIN_SIZE as u128 {
        bail!(
            "domain {domain} over {modes} modes holds {size} patterns, above the limit of \
             {MAX_DOMAIN_SIZE}; lower the photon number or use a collision-free domain"
        );
    }
    Ok(())
}

/// A configured experiment with its circuit loaded.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub interf: Interferometer,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let interf = config.interferometer()?;
        guard_domain(interf.modes(), config.domain)?;
        Ok(Self { config, interf })
    }

    fn bank(&self) -> Result<SqueezerBank> {
        Ok(SqueezerBank::on_modes(
            self.interf.modes(),
            self.interf.input_modes(),
            &self.config.squeezing,
        )?)
    }

    fn input_pattern(&self) -> Result<FockPattern> {
        let occ = self.config.input.clone().context("missing input pattern")?;
        Ok(FockPattern::new(occ))
    }

    /// Per-mode values on the source modes, zero elsewhere.
    fn spread<T: Copy + Default>(&self, f: impl Fn(f64) -> T) -> Vec<T> {
        let mut v = vec![T::default(); self.interf.modes()];
        for (&mode, &xi) in self.interf.input_modes().iter().zip(&self.config.squeezing) {
            v[mode] = f(xi);
        }
        v
    }

    /// The law the device is meant to follow; `None` for scattershot, whose
    /// output law depends on the herald.
    pub fn ideal_model(&self) -> Result<Option<Model>> {
        Ok(match self.config.protocol {
            Protocol::Gbs => Some(Model::Gbs(build_sigma_q(&self.interf, &self.bank()?)?)),
            Protocol::Standard => Some(Model::BosonSampling {
                transfer: transfer_matrix(&self.interf),
                input: self.input_pattern()?,
            }),
            Protocol::Sbs => None,
        })
    }

    pub fn ideal_distribution(&self) -> Result<Option<Distribution>> {
        self.ideal_model()?
            .map(|m| Ok(build_distribution(&m, self.config.domain, self.config.normalize)?))
            .transpose()
    }

    fn sbs_sampler(&self, distinguishable: bool) -> Result<ScattershotSampler> {
        Ok(ScattershotSampler::new(
            transfer_matrix(&self.interf),
            &self.config.squeezing,
            self.config.photons.context("missing photon number")?,
            self.config.domain,
            distinguishable,
        )?)
    }

    pub fn simulate(&self, seed: u64, count: usize) -> Result<Vec<SampleRecord>> {
        match self.config.protocol {
            Protocol::Sbs => Ok(self.sbs_sampler(false)?.sample(seed, count)?),
            proto => {
                let dist = self.ideal_distribution()?.expect("fixed-input protocol");
                let herald = match proto {
                    Protocol::Standard => self.input_pattern()?,
                    _ => FockPattern::default(),
                };
                Ok(dist
                    .sample(seed, count)?
                    .into_iter()
                    .enumerate()
                    .map(|(index, output)| SampleRecord {
                        protocol: proto,
                        herald: herald.clone(),
                        output,
                        index,
                    })
                    .collect())
            }
        }
    }

    pub fn ideal_likelihood(&self) -> Result<Likelihood> {
        let domain = Some(self.config.domain);
        Ok(match self.ideal_model()? {
            Some(m) => Likelihood::fixed(m, domain),
            None => Likelihood::heralded(transfer_matrix(&self.interf), false, domain),
        })
    }

    /// Adversarial model with the same mean photon number per source as the
    /// squeezers it replaces.
    pub fn alternative(&self, alt: AltModel) -> Result<Likelihood> {
        let domain = Some(self.config.domain);
        let m = self.interf.modes();
        let fixed = |model| Likelihood::fixed(model, domain);
        Ok(match alt {
            AltModel::Distinguishable => match self.config.protocol {
                Protocol::Standard => fixed(Model::DistinguishableBs {
                    transfer: transfer_matrix(&self.interf),
                    input: self.input_pattern()?,
                }),
                _ => Likelihood::heralded(transfer_matrix(&self.interf), true, domain),
            },
            AltModel::Uniform => fixed(Model::Uniform {
                modes: m,
                domain: self.config.domain,
            }),
            AltModel::Thermal => fixed(Model::Thermal {
                spec: ClassicalModelSpec::thermal(self.spread(|xi| xi.sinh().powi(2)))?,
                interf: self.interf.clone(),
            }),
            AltModel::Coherent => fixed(Model::Coherent {
                spec: ClassicalModelSpec::coherent(self.spread(|xi| C64::new(xi.sinh(), 0.0)))?,
                interf: self.interf.clone(),
            }),
            AltModel::DistinguishableSms => fixed(Model::DistinguishableSms {
                bank: self.bank()?,
                interf: self.interf.clone(),
            }),
            AltModel::Tms => fixed(Model::tms(
                &SqueezerBank::new(self.config.squeezing.clone())?,
                &transfer_matrix(&self.interf),
            )?),
        })
    }

    /// One verdict per configured alternative, then one per counter test.
    pub fn validate(&self, samples: &[SampleRecord]) -> Result<Vec<(String, ValidationVerdict)>> {
        let ideal = self.ideal_likelihood()?;
        let mut out = Vec::new();
        for &alt in &self.config.validation {
            let v = bayesian_compare(samples, &ideal, &self.alternative(alt)?)
                .with_context(|| format!("validation against {}", alt.tag()))?;
            out.push((alt.tag().to_string(), v));
        }
        let t = transfer_matrix(&self.interf);
        for &test in &self.config.counter_tests {
            let v = match test {
                CounterTest::RowNorm => rownorm_test(samples, &t)?,
                CounterTest::LikelihoodRatio { a1, a2 } => likelihood_ratio_test(samples, &t, a1, a2)?,
            };
            out.push((test.tag().to_string(), v));
        }
        Ok(out)
    }
}

pub fn verdict_file(tag: &str) -> String {
    format!("verdict-{tag}.csv")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

/// Record of a run. `wall_time_seconds` is the only field that varies
/// between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<ArtifactEntry>,
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
}

fn write_artifact(dir: &Path, name: &str, contents: &str, log: &mut Vec<ArtifactEntry>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    log.push(ArtifactEntry {
        file: name.to_string(),
        sha256: hex::encode(Sha256::digest(contents.as_bytes())),
    });
    Ok(())
}

/// Runs every configured step and writes the artifacts into `out`.
pub fn run(config: ExperimentConfig, out: &Path) -> Result<Manifest> {
    let start = Instant::now();
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let exp = Experiment::new(config)?;
    let mut artifacts = Vec::new();
    let mut seeds = Vec::new();
    if let CircuitSource::Haar { seed, .. } = exp.config.circuit {
        seeds.push(seed);
    }

    if let Some(dist) = exp.ideal_distribution()? {
        write_artifact(out, DISTRIBUTION_FILE, &dist.to_csv(), &mut artifacts)?;
    }
    if let Some(s) = exp.config.samples {
        seeds.push(s.seed);
        let samples = exp.simulate(s.seed, s.count)?;
        write_artifact(out, SAMPLES_FILE, &SampleRecord::to_jsonl(&samples)?, &mut artifacts)?;
        for (tag, v) in exp.validate(&samples)? {
            write_artifact(out, &verdict_file(&tag), &v.to_csv(), &mut artifacts)?;
        }
    }

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: exp.config.hash(),
        seeds,
        artifacts,
        config: exp.config.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let path = out.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(manifest)
}

/// Reads a JSON-lines sample file, naming it on failure.
pub fn read_samples(path: &Path) -> Result<Vec<SampleRecord>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read samples file {}", path.display()))?;
    let samples = SampleRecord::read_jsonl(&text)
        .with_context(|| format!("malformed samples file {}", path.display()))?;
    ensure!(!samples.is_empty(), "samples file {} is empty", path.display());
    Ok(samples)
}

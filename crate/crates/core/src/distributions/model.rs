use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{seeded_rng, Interferometer};
use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::gaussian::{GaussianState, SqueezerBank};
use crate::matkernels::{ComplexMatrix, FockPattern};

use super::laws::{
    prob_boson_sampling, prob_coherent, prob_distinguishable_bs, prob_distinguishable_sms,
    prob_distinguishable_sms_convolution,
    prob_gbs, prob_tms_with_state, prob_thermal, prob_uniform, tms_doubled_state,
    ClassicalModelSpec,
};
use super::patterns::{enumerate_patterns, Domain};

/// A probability law over output patterns.
#[derive(Clone, Debug)]
pub enum Model {
    /// Indistinguishable Fock input through a transfer matrix.
    BosonSampling { transfer: ComplexMatrix, input: FockPattern },
    /// Distinguishable Fock input through a transfer matrix.
    DistinguishableBs { transfer: ComplexMatrix, input: FockPattern },
    Gbs(GaussianState),
    Coherent { spec: ClassicalModelSpec, interf: Interferometer },
    Thermal { spec: ClassicalModelSpec, interf: Interferometer },
    /// Mutually distinguishable squeezed sources: the four-photon closed
    /// form where it applies, the per-source convolution elsewhere.
    DistinguishableSms { bank: SqueezerBank, interf: Interferometer },
    /// Two-mode squeezed sources on the rows of a transfer matrix; holds the
    /// doubled-network state.
    Tms(GaussianState),
    Uniform { modes: usize, domain: Domain },
    /// Explicit table; patterns absent from it have probability zero.
    Tabulated(Distribution),
}

impl Model {
    pub fn tms(bank: &SqueezerBank, transfer: &ComplexMatrix) -> Result<Self> {
        Ok(Self::Tms(tms_doubled_state(bank, transfer)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BosonSampling { .. } => "boson-sampling",
            Self::DistinguishableBs { .. } => "distinguishable",
            Self::Gbs(_) => "gbs",
            Self::Coherent { .. } => "coherent",
            Self::Thermal { .. } => "thermal",
            Self::DistinguishableSms { .. } => "distinguishable-sms",
            Self::Tms(_) => "tms",
            Self::Uniform { .. } => "uniform",
            Self::Tabulated(_) => "tabulated",
        }
    }

    /// Number of output modes.
    pub fn modes(&self) -> usize {
        match self {
            Self::BosonSampling { transfer, .. } | Self::DistinguishableBs { transfer, .. } => {
                transfer.cols()
            }
            Self::Gbs(s) => s.modes(),
            Self::Coherent { interf, .. }
            | Self::Thermal { interf, .. }
            | Self::DistinguishableSms { interf, .. } => interf.modes(),
            Self::Tms(s) => s.modes() / 2,
            Self::Uniform { modes, .. } => *modes,
            Self::Tabulated(d) => d.patterns.first().map_or(0, FockPattern::modes),
        }
    }

    pub fn probability(&self, output: &FockPattern) -> Result<f64> {
        match self {
            Self::BosonSampling { transfer, input } => {
                if input.total() != output.total() {
                    return Ok(0.0);
                }
                prob_boson_sampling(transfer, input, output)
            }
            Self::DistinguishableBs { transfer, input } => {
                if input.total() != output.total() {
                    return Ok(0.0);
                }
                prob_distinguishable_bs(transfer, input, output)
            }
            Self::Gbs(s) => prob_gbs(s, output),
            Self::Coherent { spec, interf } => prob_coherent(spec, interf, output),
            Self::Thermal { spec, interf } => prob_thermal(spec, interf, output),
            Self::DistinguishableSms { bank, interf } => {
                if output.total() == 4 && output.max_occupancy() <= 2 {
                    prob_distinguishable_sms(bank, interf, output)
                } else {
                    prob_distinguishable_sms_convolution(bank, interf, output)
                }
            }
            Self::Tms(s) => prob_tms_with_state(s, output),
            Self::Uniform { modes, domain } => prob_uniform(*modes, *domain, output),
            Self::Tabulated(d) => Ok(d.probability_of(output).unwrap_or(0.0)),
        }
    }
}

/// Probabilities of every pattern in a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    domain: Domain,
    patterns: Vec<FockPattern>,
    probs: Vec<f64>,
    /// Total raw probability of the domain before any renormalisation.
    normalization: f64,
    normalized: bool,
}

impl Distribution {
    /// Wraps explicit weights. Patterns must be unique and inside `domain`.
    pub fn from_parts(domain: Domain, patterns: Vec<FockPattern>, probs: Vec<f64>) -> Result<Self> {
        if patterns.len() != probs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} patterns with {} probabilities",
                patterns.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidParameter(format!("invalid probability {p}")));
        }
        if let Some(p) = patterns.iter().find(|p| !domain.contains(p)) {
            return Err(Error::InvalidParameter(format!(
                "pattern {p} lies outside domain {domain}"
            )));
        }
        let mut seen: Vec<&FockPattern> = patterns.iter().collect();
        seen.sort();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("repeated pattern".into()));
        }
        let normalization = probs.iter().sum();
        Ok(Self {
            domain,
            patterns,
            probs,
            normalization,
            normalized: false,
        })
    }

    /// Point mass on a single pattern.
    pub fn point_mass(domain: Domain, pattern: FockPattern) -> Result<Self> {
        Self::from_parts(domain, vec![pattern], vec![1.0])
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn patterns(&self) -> &[FockPattern] {
        &self.patterns
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn probability_of(&self, p: &FockPattern) -> Option<f64> {
        self.patterns.iter().position(|q| q == p).map(|i| self.probs[i])
    }

    /// Conditions on the domain: divides by the raw total, which stays
    /// available through [`Distribution::normalization`].
    pub fn normalize(mut self) -> Result<Self> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::ZeroDistribution);
        }
        for p in &mut self.probs {
            *p /= total;
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,pattern,probability\n");
        for (i, (p, q)) in self.patterns.iter().zip(&self.probs).enumerate() {
            let occ: Vec<String> = p.occupations().iter().map(|k| k.to_string()).collect();
            let _ = writeln!(s, "{i},{},{}", occ.join(" "), fmt_f64(*q));
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(s)?;
        let normalized = d.normalized;
        let mut checked = Self::from_parts(d.domain, d.patterns, d.probs)?;
        checked.normalization = d.normalization;
        checked.normalized = normalized;
        Ok(checked)
    }

    /// `count` independent draws by inverse-CDF lookup, reproducible per seed.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<FockPattern>> {
        let mut rng = seeded_rng(seed);
        self.sample_with(&mut rng, count)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<FockPattern>> {
        Ok(self
            .sample_indices(rng, count)?
            .into_iter()
            .map(|i| self.patterns[i].clone())
            .collect())
    }

    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<usize>> {
        let mut cdf = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for &p in &self.probs {
            acc += p;
            cdf.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::ZeroDistribution);
        }
        let last = self.probs.iter().rposition(|&p| p > 0.0).expect("positive mass");
        Ok((0..count)
            .map(|_| {
                let r = rng.random::<f64>() * acc;
                cdf.partition_point(|&c| c <= r).min(last)
            })
            .collect())
    }
}

/// Evaluates `model` on every pattern of `domain`, optionally conditioning
/// on the domain.
pub fn build_distribution(model: &Model, domain: Domain, normalize: bool) -> Result<Distribution> {
    let patterns = enumerate_patterns(model.modes(), domain)?;
    let probs = patterns
        .par_iter()
        .map(|p| model.probability(p))
        .collect::<Result<Vec<f64>>>()?;
    let dist = Distribution::from_parts(domain, patterns, probs)?;
    if normalize {
        dist.normalize()
    } else {
        Ok(dist)
    }
}

/// Detection through pseudo number-resolving detectors: each doubly
/// occupied mode is resolved as two photons or collapsed to one click with
/// equal probability.
pub fn pseudo_pnr_channel(dist: &Distribution) -> Result<Distribution> {
    let mut acc: BTreeMap<(usize, Vec<usize>), (FockPattern, f64)> = BTreeMap::new();
    let mut any_double = false;
    for (p, &q) in dist.patterns.iter().zip(&dist.probs) {
        if p.max_occupancy() > 2 {
            return Err(Error::UnsupportedPattern(format!(
                "pattern {p} has more than two photons in a mode"
            )));
        }
        let doubles: Vec<usize> = (0..p.modes()).filter(|&i| p.occupations()[i] == 2).collect();
        any_double |= !doubles.is_empty();
        let weight = q * 0.5f64.powi(doubles.len() as i32);
        for mask in 0u64..(1 << doubles.len()) {
            let mut occ = p.occupations().to_vec();
            for (b, &mode) in doubles.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    occ[mode] = 1;
                }
            }
            let obs = FockPattern::new(occ);
            let key = (obs.total(), obs.mode_list());
            acc.entry(key).or_insert((obs, 0.0)).1 += weight;
        }
    }
    let domain = match dist.domain {
        d @ Domain::CollisionFree { .. } => d,
        _ if !any_double => dist.domain,
        Domain::MaxOccupancy2 { n } | Domain::Exact { n } | Domain::PseudoPnr { n } => {
            Domain::PseudoPnr { n }
        }
        d @ Domain::Truncated { .. } => d,
    };
    let (patterns, probs): (Vec<_>, Vec<_>) = acc.into_values().unzip();
    let mut out = Distribution::from_parts(domain, patterns, probs)?;
    out.normalization = dist.normalization;
    out.normalized = dist.normalized;
    Ok(out)
}

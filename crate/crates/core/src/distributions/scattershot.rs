use std::collections::HashMap;

use crate::circuits::seeded_rng;
use crate::error::{Error, Result};
use crate::matkernels::{ln_factorial, ComplexMatrix, FockPattern};
use crate::validation::{Protocol, SampleRecord};

use super::model::{build_distribution, Distribution, Model};
use super::patterns::{enumerate_patterns, Domain};

/// Probability that a two-mode squeezed source emits exactly one pair.
pub fn pair_emission_probability(xi: f64) -> f64 {
    let t2 = xi.tanh().powi(2);
    t2 * (1.0 - t2)
}

/// Probability that exactly the sources in `fired` emit one pair each and
/// all others emit nothing.
pub fn herald_set_probability(xi: &[f64], fired: &FockPattern) -> Result<f64> {
    if fired.modes() != xi.len() || fired.max_occupancy() > 1 {
        return Err(Error::InvalidParameter(format!(
            "herald {fired} is not a subset of {} sources",
            xi.len()
        )));
    }
    Ok(xi
        .iter()
        .zip(fired.occupations())
        .map(|(&x, &f)| {
            let t2 = x.tanh().powi(2);
            if f == 1 {
                t2 * (1.0 - t2)
            } else {
                1.0 - t2
            }
        })
        .product())
}

/// Probability that some set of exactly `n` sources heralds single pairs.
pub fn heralding_probability(xi: &[f64], n: usize) -> Result<f64> {
    enumerate_patterns(xi.len(), Domain::CollisionFree { n })?
        .iter()
        .map(|s| herald_set_probability(xi, s))
        .sum()
}

/// Heralding probability when only the first `n` sources are pumped and
/// all of them must fire.
pub fn standard_heralding_probability(xi: &[f64], n: usize) -> Result<f64> {
    if n > xi.len() {
        return Err(Error::InvalidParameter(format!(
            "{n} photons from {} sources",
            xi.len()
        )));
    }
    Ok(xi[..n].iter().map(|&x| pair_emission_probability(x)).product())
}

/// Rate ratio of scattershot heralding over the fixed-source scheme.
pub fn enhancement_factor(xi: &[f64], n: usize) -> Result<f64> {
    Ok(heralding_probability(xi, n)? / standard_heralding_probability(xi, n)?)
}

/// `C(k, n) εⁿ (1 − ε)ᵏ`: heralding law for `k` identical sources with
/// `ε = tanh²ξ`.
pub fn binomial_heralding_law(k: usize, n: usize, eps: f64) -> f64 {
    if n > k {
        return 0.0;
    }
    let ln_c = ln_factorial(k) - ln_factorial(n) - ln_factorial(k - n);
    ln_c.exp() * eps.powi(n as i32) * (1.0 - eps).powi(k as i32)
}

/// Seeded scattershot run: heralds drawn from the exact `n`-pair law of
/// the sources on the rows of `t`, outputs from the boson-sampling law for
/// each herald conditioned on `output_domain`.
pub struct ScattershotSampler {
    transfer: ComplexMatrix,
    heralds: Distribution,
    output_domain: Domain,
    distinguishable: bool,
    cache: HashMap<FockPattern, Distribution>,
}

impl ScattershotSampler {
    pub fn new(
        transfer: ComplexMatrix,
        xi: &[f64],
        n: usize,
        output_domain: Domain,
        distinguishable: bool,
    ) -> Result<Self> {
        if xi.len() != transfer.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} squeezers for {} sources",
                xi.len(),
                transfer.rows()
            )));
        }
        let hd = Domain::CollisionFree { n };
        let sets = enumerate_patterns(xi.len(), hd)?;
        let weights = sets
            .iter()
            .map(|s| herald_set_probability(xi, s))
            .collect::<Result<Vec<_>>>()?;
        let heralds = Distribution::from_parts(hd, sets, weights)?.normalize()?;
        Ok(Self {
            transfer,
            heralds,
            output_domain,
            distinguishable,
            cache: HashMap::new(),
        })
    }

    /// Normalised output law given a herald.
    pub fn output_distribution(&mut self, herald: &FockPattern) -> Result<&Distribution> {
        if !self.cache.contains_key(herald) {
            let model = if self.distinguishable {
                Model::DistinguishableBs {
                    transfer: self.transfer.clone(),
                    input: herald.clone(),
                }
            } else {
                Model::BosonSampling {
                    transfer: self.transfer.clone(),
                    input: herald.clone(),
                }
            };
            let d = build_distribution(&model, self.output_domain, true)?;
            self.cache.insert(herald.clone(), d);
        }
        Ok(&self.cache[herald])
    }

    pub fn sample(&mut self, seed: u64, count: usize) -> Result<Vec<SampleRecord>> {
        let mut rng = seeded_rng(seed);
        let herald_idx = self.heralds.sample_indices(&mut rng, count)?;
        let mut out = Vec::with_capacity(count);
        for (index, h) in herald_idx.into_iter().enumerate() {
            let herald = self.heralds.patterns()[h].clone();
            let dist = self.output_distribution(&herald)?;
            let o = dist.sample_indices(&mut rng, 1)?[0];
            out.push(SampleRecord {
                protocol: Protocol::Sbs,
                herald,
                output: dist.patterns()[o].clone(),
                index,
            });
        }
        Ok(out)
    }
}

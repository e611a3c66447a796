//! Validation protocols over recorded samples: Bayesian model comparison,
//! the row-norm estimator test and the likelihood-ratio test.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{build_distribution, Domain, Model};
#[cfg(test)]
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::matkernels::{permanent, repeat_submatrix, ComplexMatrix, FockPattern};
use crate::C64;

/// Likelihoods are clamped below at this value before taking logarithms.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Standard,
    Sbs,
    Gbs,
}

/// One detection event.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub protocol: Protocol,
    /// Input (herald) pattern over the sources; empty for GBS.
    #[serde(default)]
    pub herald: FockPattern,
    pub output: FockPattern,
    #[serde(default)]
    pub index: usize,
}

impl SampleRecord {
    pub fn gbs(output: FockPattern, index: usize) -> Self {
        Self {
            protocol: Protocol::Gbs,
            herald: FockPattern::default(),
            output,
            index,
        }
    }

    fn check(&self) -> Result<()> {
        if matches!(self.protocol, Protocol::Sbs | Protocol::Standard)
            && self.herald.total() != self.output.total()
        {
            return Err(Error::PhotonNumberMismatch {
                input: self.herald.total(),
                output: self.output.total(),
            });
        }
        Ok(())
    }

    /// Parses one record per non-empty line.
    pub fn read_jsonl(text: &str) -> Result<Vec<Self>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let r: Self = serde_json::from_str(l)?;
                r.check()?;
                Ok(r)
            })
            .collect()
    }

    pub fn to_jsonl(records: &[Self]) -> Result<String> {
        let mut s = String::new();
        for r in records {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        Ok(s)
    }
}

/// How a model assigns a probability to a recorded sample.
#[derive(Clone, Debug)]
pub enum SampleModel {
    /// Boson sampling with the sample's herald as input.
    Heralded {
        transfer: ComplexMatrix,
        distinguishable: bool,
    },
    /// A fixed output law that ignores the herald.
    Fixed(Model),
}

/// A sample model, optionally conditioned on a domain of outputs.
///
/// With a domain, each likelihood is divided by the model's total
/// probability over that domain (per herald for heralded models).
pub struct Likelihood {
    model: SampleModel,
    domain: Option<Domain>,
    norms: Mutex<HashMap<FockPattern, f64>>,
}

impl Likelihood {
    pub fn new(model: SampleModel, domain: Option<Domain>) -> Self {
        Self {
            model,
            domain,
            norms: Mutex::new(HashMap::new()),
        }
    }

    pub fn fixed(model: Model, domain: Option<Domain>) -> Self {
        Self::new(SampleModel::Fixed(model), domain)
    }

    pub fn heralded(transfer: ComplexMatrix, distinguishable: bool, domain: Option<Domain>) -> Self {
        Self::new(
            SampleModel::Heralded {
                transfer,
                distinguishable,
            },
            domain,
        )
    }

    fn model_for(&self, herald: &FockPattern) -> Model {
        match &self.model {
            SampleModel::Heralded {
                transfer,
                distinguishable: false,
            } => Model::BosonSampling {
                transfer: transfer.clone(),
                input: herald.clone(),
            },
            SampleModel::Heralded {
                transfer,
                distinguishable: true,
            } => Model::DistinguishableBs {
                transfer: transfer.clone(),
                input: herald.clone(),
            },
            SampleModel::Fixed(m) => m.clone(),
        }
    }

    fn norm_key(&self, herald: &FockPattern) -> FockPattern {
        match self.model {
            SampleModel::Heralded { .. } => herald.clone(),
            SampleModel::Fixed(_) => FockPattern::default(),
        }
    }

    /// Probability of `rec` under the model, conditioned on the domain.
    pub fn evaluate(&self, rec: &SampleRecord) -> Result<f64> {
        let model = self.model_for(&rec.herald);
        let p = model.probability(&rec.output)?;
        let Some(domain) = self.domain else {
            return Ok(p);
        };
        if !domain.contains(&rec.output) {
            return Err(Error::InvalidParameter(format!(
                "sample {} ({}) lies outside domain {domain}",
                rec.index, rec.output
            )));
        }
        let key = self.norm_key(&rec.herald);
        let cached = self.norms.lock().expect("cache lock").get(&key).copied();
        let z = match cached {
            Some(z) => z,
            None => {
                let z = build_distribution(&model, domain, false)?.total();
                self.norms.lock().expect("cache lock").insert(key, z);
                z
            }
        };
        if z <= 0.0 {
            return Err(Error::ZeroDistribution);
        }
        Ok(p / z)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Ideal,
    Alternative,
    Inconclusive,
}

/// Per-sample traces and the final call of a validation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    /// Posterior probability of the ideal model after each sample.
    pub confidence_trace: Vec<f64>,
    /// Counter value after each sample.
    pub counter_trace: Vec<i64>,
    /// Lower and upper bounds on the multi-model confidence after each
    /// sample: `1/(1 + m·r_max)` and `1/(1 + r_max)`.
    pub bounds_trace: Vec<(f64, f64)>,
    pub final_decision: Decision,
}

impl ValidationVerdict {
    fn from_confidences(confidence_trace: Vec<f64>, bounds_trace: Vec<(f64, f64)>) -> Self {
        let final_decision = match confidence_trace.last() {
            Some(&c) if c > 0.5 => Decision::Ideal,
            Some(&c) if c < 0.5 => Decision::Alternative,
            _ => Decision::Inconclusive,
        };
        Self {
            confidence_trace,
            counter_trace: Vec::new(),
            bounds_trace,
            final_decision,
        }
    }

    fn from_counter(counter_trace: Vec<i64>) -> Self {
        let margin = (counter_trace.len() as f64).sqrt();
        let mut v = Self {
            confidence_trace: Vec::new(),
            counter_trace,
            bounds_trace: Vec::new(),
            final_decision: Decision::Inconclusive,
        };
        v.final_decision = v.counter_decision(margin);
        v
    }

    /// Counter-based decision with an explicit dead zone `|C| ≤ margin`.
    pub fn counter_decision(&self, margin: f64) -> Decision {
        match self.counter_trace.last() {
            Some(&c) if c as f64 > margin => Decision::Ideal,
            Some(&c) if (c as f64) < -margin => Decision::Alternative,
            _ => Decision::Inconclusive,
        }
    }

    pub fn final_confidence(&self) -> Option<f64> {
        self.confidence_trace.last().copied()
    }

    pub fn final_counter(&self) -> Option<i64> {
        self.counter_trace.last().copied()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if !self.confidence_trace.is_empty() {
            if self.bounds_trace.is_empty() {
                s.push_str("index,confidence\n");
                for (i, c) in self.confidence_trace.iter().enumerate() {
                    let _ = writeln!(s, "{i},{}", fmt_f64(*c));
                }
            } else {
                s.push_str("index,confidence,lower_bound,upper_bound\n");
                for (i, (c, (lo, hi))) in
                    self.confidence_trace.iter().zip(&self.bounds_trace).enumerate()
                {
                    let _ = writeln!(s, "{i},{},{},{}", fmt_f64(*c), fmt_f64(*lo), fmt_f64(*hi));
                }
            }
        } else {
            s.push_str("index,counter\n");
            for (i, c) in self.counter_trace.iter().enumerate() {
                let _ = writeln!(s, "{i},{c}");
            }
        }
        s
    }
}

/// Log-likelihood of every sample under every model, with the ideal model
/// first. Samples impossible under the ideal model are rejected.
fn log_likelihoods(samples: &[SampleRecord], models: &[&Likelihood]) -> Result<Vec<Vec<f64>>> {
    samples
        .par_iter()
        .map(|rec| {
            let mut row = Vec::with_capacity(models.len());
            for (k, m) in models.iter().enumerate() {
                let p = m.evaluate(rec)?;
                if k == 0 && p <= 0.0 {
                    return Err(Error::ZeroLikelihood { index: rec.index });
                }
                row.push(p.max(LIKELIHOOD_FLOOR).ln());
            }
            Ok(row)
        })
        .collect()
}

/// Sequential Bayesian update of the ideal model against one alternative,
/// uniform prior.
pub fn bayesian_compare(
    samples: &[SampleRecord],
    ideal: &Likelihood,
    alternative: &Likelihood,
) -> Result<ValidationVerdict> {
    let ll = log_likelihoods(samples, &[ideal, alternative])?;
    let mut log_ratio = 0.0;
    let trace = ll
        .iter()
        .map(|row| {
            log_ratio += row[1] - row[0];
            confidence_from_log_ratio(log_ratio)
        })
        .collect();
    Ok(ValidationVerdict::from_confidences(trace, Vec::new()))
}

/// `1 / (1 + e^x)` without overflow.
fn confidence_from_log_ratio(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Simultaneous comparison against several alternatives with a uniform
/// prior over all models: `1 / (1 + Σ_k p(D|M_k)/p(D|M̄))`.
pub fn bayesian_compare_multi(
    samples: &[SampleRecord],
    ideal: &Likelihood,
    alternatives: &[&Likelihood],
) -> Result<ValidationVerdict> {
    if alternatives.is_empty() {
        return Err(Error::InvalidParameter("no alternative models".into()));
    }
    let mut models = vec![ideal];
    models.extend_from_slice(alternatives);
    let ll = log_likelihoods(samples, &models)?;
    let mut acc = vec![0.0; alternatives.len()];
    let count = alternatives.len() as f64;
    let mut trace = Vec::with_capacity(samples.len());
    let mut bounds = Vec::with_capacity(samples.len());
    for row in &ll {
        for (a, l) in acc.iter_mut().zip(&row[1..]) {
            *a += l - row[0];
        }
        let max = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // log Σ e^{a_k}, shifted by the largest term.
        let lse = max + acc.iter().map(|a| (a - max).exp()).sum::<f64>().ln();
        trace.push(confidence_from_log_ratio(lse));
        bounds.push((
            confidence_from_log_ratio(max + count.ln()),
            confidence_from_log_ratio(max),
        ));
    }
    Ok(ValidationVerdict::from_confidences(trace, bounds))
}

/// `∏_o Σ_i |T_{i,o}|²` over the detected outputs `o` (with multiplicity)
/// and the herald rows `i` (with multiplicity).
pub fn row_norm_estimator(t: &ComplexMatrix, rec: &SampleRecord) -> Result<f64> {
    let sub = lr_submatrix(t, rec)?;
    Ok((0..sub.cols())
        .map(|o| (0..sub.rows()).map(|i| sub[(i, o)].norm_sqr()).sum::<f64>())
        .product())
}

/// Row-norm estimator test against a uniform sampler: `+1` when
/// `R > (n/m)ⁿ`, otherwise `−1`.
pub fn rownorm_test(samples: &[SampleRecord], t: &ComplexMatrix) -> Result<ValidationVerdict> {
    let m = t.cols() as f64;
    let mut c = 0i64;
    let mut trace = Vec::with_capacity(samples.len());
    for rec in samples {
        let n = rec.output.total();
        let threshold = (n as f64 / m).powi(n as i32);
        c += if row_norm_estimator(t, rec)? > threshold { 1 } else { -1 };
        trace.push(c);
    }
    Ok(ValidationVerdict::from_counter(trace))
}

fn lr_submatrix(t: &ComplexMatrix, rec: &SampleRecord) -> Result<ComplexMatrix> {
    if rec.herald.total() != rec.output.total() {
        return Err(Error::PhotonNumberMismatch {
            input: rec.herald.total(),
            output: rec.output.total(),
        });
    }
    repeat_submatrix(t, &rec.herald, &rec.output)
}

/// `|Perm T_{j,k}|² / Perm(|T_{j,k}|²)` for one sample.
pub fn likelihood_ratio(t: &ComplexMatrix, rec: &SampleRecord) -> Result<f64> {
    let sub = lr_submatrix(t, rec)?;
    let p_ind = permanent(&sub)?.norm_sqr();
    let p_dist = permanent(&sub.map(|z| C64::new(z.norm_sqr(), 0.0)))?.re;
    if p_dist <= 0.0 {
        return Err(Error::ZeroLikelihood { index: rec.index });
    }
    Ok(p_ind / p_dist)
}

/// Counter step of the likelihood-ratio test for a ratio `l`.
pub fn likelihood_ratio_step(l: f64, a1: f64, a2: f64) -> i64 {
    if l >= a2 {
        2
    } else if l >= 1.0 / a1 {
        1
    } else if l > a1 {
        0
    } else if l > 1.0 / a2 {
        -1
    } else {
        -2
    }
}

/// Likelihood-ratio test of indistinguishable against distinguishable
/// photons, with control parameters `0 < a1 < 1 < a2`.
pub fn likelihood_ratio_test(
    samples: &[SampleRecord],
    t: &ComplexMatrix,
    a1: f64,
    a2: f64,
) -> Result<ValidationVerdict> {
    if !(0.0 < a1 && a1 < 1.0 && 1.0 < a2) {
        return Err(Error::InvalidParameter(format!(
            "control parameters need 0 < a1 < 1 < a2, got a1={a1}, a2={a2}"
        )));
    }
    let ratios = samples
        .par_iter()
        .map(|rec| likelihood_ratio(t, rec))
        .collect::<Result<Vec<_>>>()?;
    let mut c = 0i64;
    let trace = ratios
        .into_iter()
        .map(|l| {
            c += likelihood_ratio_step(l, a1, a2);
            c
        })
        .collect();
    Ok(ValidationVerdict::from_counter(trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(p: &[f64]) -> Model {
        let pats = vec![FockPattern::new(vec![1, 0]), FockPattern::new(vec![0, 1])];
        let d = Distribution::from_parts(Domain::CollisionFree { n: 1 }, pats, p.to_vec());
        Model::Tabulated(d.unwrap())
    }

    fn samples(outputs: &[[usize; 2]]) -> Vec<SampleRecord> {
        outputs
            .iter()
            .enumerate()
            .map(|(i, o)| SampleRecord::gbs(FockPattern::new(o.to_vec()), i))
            .collect()
    }

    #[test]
    fn identical_models_stay_at_half() {
        let a = Likelihood::fixed(table(&[0.3, 0.7]), None);
        let b = Likelihood::fixed(table(&[0.3, 0.7]), None);
        let v = bayesian_compare(&samples(&[[1, 0], [0, 1], [1, 0]]), &a, &b).unwrap();
        assert!(v.confidence_trace.iter().all(|&c| (c - 0.5).abs() < 1e-15));
        assert_eq!(v.final_decision, Decision::Inconclusive);
    }

    #[test]
    fn single_sample_bayes() {
        let a = Likelihood::fixed(table(&[0.9, 0.1]), None);
        let b = Likelihood::fixed(table(&[0.1, 0.9]), None);
        let v = bayesian_compare(&samples(&[[1, 0]]), &a, &b).unwrap();
        assert!((v.confidence_trace[0] - 0.9).abs() < 1e-15);
        assert_eq!(v.final_decision, Decision::Ideal);
    }

    #[test]
    fn zero_ideal_probability_is_an_error() {
        let a = Likelihood::fixed(table(&[1.0, 0.0]), None);
        let b = Likelihood::fixed(table(&[0.5, 0.5]), None);
        let err = bayesian_compare(&samples(&[[1, 0], [0, 1]]), &a, &b).unwrap_err();
        assert!(matches!(err, Error::ZeroLikelihood { index: 1 }));
    }

    #[test]
    fn domain_conditioning_renormalises() {
        let a = Likelihood::fixed(table(&[0.2, 0.2]), Some(Domain::CollisionFree { n: 1 }));
        let p = a.evaluate(&samples(&[[1, 0]])[0]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn multi_with_repeated_alternative() {
        let a = Likelihood::fixed(table(&[0.6, 0.4]), None);
        let b = Likelihood::fixed(table(&[0.3, 0.7]), None);
        let data = samples(&[[1, 0], [1, 0], [0, 1]]);
        let single = bayesian_compare(&data, &a, &b).unwrap();
        let one = bayesian_compare_multi(&data, &a, &[&b]).unwrap();
        for (x, y) in single.confidence_trace.iter().zip(&one.confidence_trace) {
            assert!((x - y).abs() < 1e-15);
        }
        let three = bayesian_compare_multi(&data, &a, &[&b, &b, &b]).unwrap();
        let r: f64 = (0.3f64 * 0.3 * 0.7) / (0.6 * 0.6 * 0.4);
        assert!((three.final_confidence().unwrap() - 1.0 / (1.0 + 3.0 * r)).abs() < 1e-14);
        let (lo, hi) = *three.bounds_trace.last().unwrap();
        assert!(lo <= three.final_confidence().unwrap() + 1e-15);
        assert!(hi >= three.final_confidence().unwrap() - 1e-15);
    }

    #[test]
    fn lrt_branches() {
        let (a1, a2) = (0.75, 2.0);
        assert_eq!(likelihood_ratio_step(2.0, a1, a2), 2);
        assert_eq!(likelihood_ratio_step(1.5, a1, a2), 1);
        assert_eq!(likelihood_ratio_step(1.0 / 0.75, a1, a2), 1);
        assert_eq!(likelihood_ratio_step(1.0, a1, a2), 0);
        assert_eq!(likelihood_ratio_step(0.75, a1, a2), -1);
        assert_eq!(likelihood_ratio_step(0.6, a1, a2), -1);
        assert_eq!(likelihood_ratio_step(0.5, a1, a2), -2);
    }

    #[test]
    fn jsonl_round_trip() {
        let recs = vec![
            SampleRecord {
                protocol: Protocol::Sbs,
                herald: FockPattern::new(vec![1, 1, 0]),
                output: FockPattern::new(vec![0, 1, 0, 1]),
                index: 0,
            },
            SampleRecord::gbs(FockPattern::new(vec![2, 0, 0, 0]), 1),
        ];
        let text = SampleRecord::to_jsonl(&recs).unwrap();
        assert_eq!(SampleRecord::read_jsonl(&text).unwrap(), recs);
        let bad = r#"{"protocol":"sbs","herald":[1,0],"output":[1,1]}"#;
        assert!(SampleRecord::read_jsonl(bad).is_err());
    }

    #[test]
    fn confidence_is_numerically_stable() {
        assert_eq!(confidence_from_log_ratio(-1e4), 1.0);
        assert_eq!(confidence_from_log_ratio(1e4), 0.0);
        assert!((confidence_from_log_ratio(0.0) - 0.5).abs() < 1e-16);
    }
}

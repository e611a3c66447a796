//! Resource and noise estimates: event rates, spurious-pair SNR, the
//! quantum-dot comparison, circuit-size optimisation and loss studies.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{haar_random_unitary, Interferometer, CENTRAL_INPUTS};
use crate::distributions::{build_distribution, Domain, Model};
use crate::error::{Error, Result};
use crate::export::csv_table;
use crate::gaussian::{apply_uniform_loss, build_sigma_q, LossChannel, SqueezerBank};
use crate::matkernels::ln_gamma;

/// One event per week, in Hz.
pub const ONE_PER_WEEK: f64 = 1.0 / 604_800.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateProtocol {
    Sbs,
    Gbs,
}

/// Hardware figures entering the rate model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    /// Pump repetition rate in Hz.
    pub r0: f64,
    pub eta_det: f64,
    pub eta_ch: f64,
    /// Transmission per coupling operation inside the interferometer.
    pub eta_u: f64,
    pub xi: f64,
    /// Number of sources.
    pub k: usize,
    /// Number of interferometer modes.
    pub m: usize,
}

/// Named parameter sets for spiral or ring sources, with off-chip or
/// integrated detection, on a 100-mode circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatePreset {
    Spiral,
    SpiralIntegrated,
    Ring,
    RingIntegrated,
}

impl RatePreset {
    pub const ALL: [RatePreset; 4] = [
        RatePreset::Spiral,
        RatePreset::SpiralIntegrated,
        RatePreset::Ring,
        RatePreset::RingIntegrated,
    ];

    pub fn params(self) -> RateParams {
        let (xi, eta_ch) = match self {
            RatePreset::Spiral => (0.17, 0.64),
            RatePreset::SpiralIntegrated => (0.17, 1.0),
            RatePreset::Ring => (0.31, 0.64),
            RatePreset::RingIntegrated => (0.31, 1.0),
        };
        RateParams {
            r0: 5e8,
            eta_det: 0.8,
            eta_ch,
            eta_u: 0.9995,
            xi,
            k: 100,
            m: 100,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RatePreset::Spiral => "spiral",
            RatePreset::SpiralIntegrated => "spiral-integrated",
            RatePreset::Ring => "ring",
            RatePreset::RingIntegrated => "ring-integrated",
        }
    }
}

impl std::str::FromStr for RatePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RatePreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown rate preset {s:?}")))
    }
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_det", self.eta_det),
            ("eta_ch", self.eta_ch),
            ("eta_u", self.eta_u),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::InvalidParameter(format!("r0 = {} must be positive", self.r0)));
        }
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::InvalidParameter(format!("xi = {} must be non-negative", self.xi)));
        }
        Ok(())
    }

    /// Same hardware with `k = m = size`.
    pub fn with_size(&self, size: usize) -> Self {
        Self {
            k: size,
            m: size,
            ..*self
        }
    }
}

/// `ln C(a, b)` for real `a ≥ b ≥ 0` through the gamma function.
pub fn ln_binomial(a: f64, b: f64) -> f64 {
    ln_gamma(a + 1.0) - ln_gamma(b + 1.0) - ln_gamma(a - b + 1.0)
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Rate of `n`-signal-photon events in Hz.
pub fn event_rate(protocol: RateProtocol, n: usize, p: &RateParams) -> Result<f64> {
    p.validate()?;
    if n > p.k {
        return Err(Error::InvalidParameter(format!(
            "{n} photons from {} sources",
            p.k
        )));
    }
    let (nf, kf, mf) = (n as f64, p.k as f64, p.m as f64);
    let (ln_t, ln_sech) = (ln_or_neg_inf(p.xi.tanh()), -p.xi.cosh().ln());
    let ln_gen = match protocol {
        RateProtocol::Sbs => {
            ln_binomial(kf, nf) + 2.0 * nf * ln_t + 2.0 * kf * ln_sech
        }
        RateProtocol::Gbs => {
            if n % 2 == 1 {
                return Err(Error::InvalidParameter(format!(
                    "GBS events need an even photon number, got {n}"
                )));
            }
            ln_binomial(kf / 2.0 + nf / 2.0 - 1.0, nf / 2.0) + nf * ln_t + kf * ln_sech
        }
    };
    if n == 0 {
        // Avoid 0·ln 0 in the loss terms.
        return Ok(p.r0 * (ln_gen.exp()));
    }
    let fold = match protocol {
        RateProtocol::Sbs => 2.0 * nf,
        RateProtocol::Gbs => nf,
    };
    let ln_loss = mf * nf * ln_or_neg_inf(p.eta_u)
        + fold * (ln_or_neg_inf(p.eta_ch) + ln_or_neg_inf(p.eta_det));
    Ok(p.r0 * (ln_gen + ln_loss).exp())
}

/// Transmission of a log-depth switching tree that routes `n` photons:
/// `η_switch^(n·⌈log₂ n⌉)`.
pub fn demux_transmission(n: usize, eta_switch: f64) -> f64 {
    let depth = if n <= 1 { 0 } else { usize::BITS - (n - 1).leading_zeros() };
    eta_switch.powi((n as u32 * depth) as i32)
}

/// Standard boson sampling fed by a demultiplexed quantum-dot source:
/// `R₀ p_qdⁿ η_demux η_u^{mn} η_chⁿ η_detⁿ`, with `m`, `η_u`, `η_ch`,
/// `η_det` taken from `params`.
pub fn qd_demux_rate(
    n: usize,
    p_qd: f64,
    r0_qd: f64,
    eta_switch: f64,
    params: &RateParams,
) -> Result<f64> {
    params.validate()?;
    if !(0.0..=1.0).contains(&p_qd) || !(0.0..=1.0).contains(&eta_switch) {
        return Err(Error::InvalidParameter(
            "p_qd and eta_switch must lie in [0, 1]".into(),
        ));
    }
    let nf = n as f64;
    let ln = nf * ln_or_neg_inf(p_qd)
        + (params.m as f64) * nf * ln_or_neg_inf(params.eta_u)
        + nf * (ln_or_neg_inf(params.eta_ch) + ln_or_neg_inf(params.eta_det));
    Ok(r0_qd * ln.exp() * demux_transmission(n, eta_switch))
}

/// Circuit size `k = m` maximising the event rate, with that rate. Ties go
/// to the smallest size.
pub fn optimal_circuit_size(
    protocol: RateProtocol,
    n: usize,
    params: &RateParams,
    sizes: RangeInclusive<usize>,
) -> Result<(usize, f64)> {
    let lo = (*sizes.start()).max(n).max(1);
    let hi = *sizes.end();
    if lo > hi {
        return Err(Error::InvalidParameter(format!(
            "empty size sweep {lo}..={hi} for {n} photons"
        )));
    }
    let mut best = (lo, f64::NEG_INFINITY);
    for size in lo..=hi {
        let r = event_rate(protocol, n, &params.with_size(size))?;
        if r > best.1 {
            best = (size, r);
        }
    }
    Ok(best)
}

/// One row of an optimal-rate curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalPoint {
    pub n: usize,
    pub size: usize,
    pub rate: f64,
}

/// Optimal size and rate for every photon number in `ns`.
pub fn optimal_rate_curve(
    protocol: RateProtocol,
    ns: &[usize],
    params: &RateParams,
    sizes: RangeInclusive<usize>,
) -> Result<Vec<OptimalPoint>> {
    ns.par_iter()
        .map(|&n| {
            let (size, rate) = optimal_circuit_size(protocol, n, params, sizes.clone())?;
            Ok(OptimalPoint { n, size, rate })
        })
        .collect()
}

/// Largest photon number (stepping by 1 for SBS, 2 for GBS, up to `n_max`)
/// whose optimal rate is at least `threshold`.
pub fn largest_practical_n(
    protocol: RateProtocol,
    params: &RateParams,
    threshold: f64,
    sizes: RangeInclusive<usize>,
    n_max: usize,
) -> Result<Option<OptimalPoint>> {
    let step = match protocol {
        RateProtocol::Sbs => 1,
        RateProtocol::Gbs => 2,
    };
    let ns: Vec<usize> = (step..=n_max.min(*sizes.end())).step_by(step).collect();
    let curve = optimal_rate_curve(protocol, &ns, params, sizes)?;
    Ok(curve.into_iter().rfind(|p| p.rate >= threshold))
}

pub fn optimal_curve_csv(curve: &[OptimalPoint]) -> String {
    csv_table(
        &["n", "size", "rate_hz"],
        curve.iter().map(|p| vec![p.n as f64, p.size as f64, p.rate]),
    )
}

fn check_snr_args(n: usize, k: usize, xi: f64) -> Result<()> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("need at least one pair and one source".into()));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "SNR is undefined without squeezing (xi = {xi})"
        )));
    }
    Ok(())
}

/// Probability of `2n` photons from `k` single-mode squeezers.
pub fn p_sms(k: usize, xi: f64, n: usize) -> f64 {
    let (kf, nf) = (k as f64, n as f64);
    (ln_binomial(kf / 2.0 + nf - 1.0, nf) - kf * xi.cosh().ln() + 2.0 * nf * xi.tanh().ln()).exp()
}

/// Probability of `n` signal photons from `k` two-mode squeezers.
pub fn p_tms(k: usize, xi: f64, n: usize) -> f64 {
    if n > k {
        return 0.0;
    }
    let (kf, nf) = (k as f64, n as f64);
    (ln_binomial(kf, nf) - 2.0 * kf * xi.cosh().ln() + 2.0 * nf * xi.tanh().ln()).exp()
}

/// Ratio of `2n`-photon events from `k` single-mode squeezers alone to
/// those involving at least one spurious pair from the `2k` two-mode
/// squeezers, in closed form.
pub fn snr_gbs(n: usize, k: usize, xi: f64) -> Result<f64> {
    check_snr_args(n, k, xi)?;
    let (kf, nf) = (k as f64, n as f64);
    let ln_t2 = 2.0 * xi.tanh().ln();
    let terms: Vec<f64> = (1..=n)
        .map(|m| {
            let mf = m as f64;
            ln_binomial(kf / 2.0 + nf - mf - 1.0, nf - mf)
                + ln_binomial(2.0 * kf, 2.0 * mf)
                + mf * ln_t2
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_sum = max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln();
    Ok((4.0 * kf * xi.cosh().ln() + ln_binomial(kf / 2.0 + nf - 1.0, nf) - ln_sum).exp())
}

/// The same ratio assembled from the photon-number laws:
/// `p_sms(2n) / Σ_{m=1..n} p_sms(2(n−m)) p_tms^{(2k)}(2m)`.
pub fn snr_gbs_composed(n: usize, k: usize, xi: f64) -> Result<f64> {
    check_snr_args(n, k, xi)?;
    let noise: f64 = (1..=n)
        .map(|m| p_sms(k, xi, n - m) * p_tms(2 * k, xi, 2 * m))
        .sum();
    Ok(p_sms(k, xi, n) / noise)
}

/// Grid of the loss study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossStudySettings {
    /// Photon number of the compared sector.
    pub n: usize,
    pub m: usize,
    /// Number of squeezed sources (the central modes when fewer than `m`).
    pub k: usize,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    /// One Haar circuit per seed.
    pub seeds: Vec<u64>,
}

/// Mean statistical fidelity at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossStudyRow {
    pub xi: f64,
    pub eta: f64,
    pub mean_fidelity: f64,
    pub per_seed: Vec<f64>,
}

fn source_modes(m: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!("{k} sources for {m} modes")));
    }
    if k == CENTRAL_INPUTS.len() && m > *CENTRAL_INPUTS.last().expect("non-empty") {
        return Ok(CENTRAL_INPUTS.to_vec());
    }
    let start = (m - k) / 2;
    Ok((start..start + k).collect())
}

/// Statistical fidelity `Σ √(p q)` between lossy and lossless GBS output
/// distributions, each conditioned on the `n`-photon sector and averaged
/// over seeded Haar circuits.
pub fn loss_fidelity_study(s: &LossStudySettings) -> Result<Vec<LossStudyRow>> {
    if s.seeds.is_empty() {
        return Err(Error::InvalidParameter("loss study needs at least one seed".into()));
    }
    let modes = source_modes(s.m, s.k)?;
    let domain = Domain::Exact { n: s.n };
    let circuits: Vec<Interferometer> = s
        .seeds
        .iter()
        .map(|&seed| haar_random_unitary(s.m, seed))
        .collect::<Result<_>>()?;
    let losses = s
        .eta
        .iter()
        .map(|&e| LossChannel::new(e))
        .collect::<Result<Vec<_>>>()?;

    let grid: Vec<(f64, LossChannel)> = s
        .xi
        .iter()
        .flat_map(|&x| losses.iter().map(move |&l| (x, l)))
        .collect();
    grid.par_iter()
        .map(|&(xi, loss)| {
            let bank = SqueezerBank::on_modes(s.m, &modes, &vec![xi; modes.len()])?;
            let per_seed = circuits
                .iter()
                .map(|c| {
                    let ideal = build_distribution(&Model::Gbs(build_sigma_q(c, &bank)?), domain, true)?;
                    let lossy = build_distribution(
                        &Model::Gbs(apply_uniform_loss(&bank, c, loss)?),
                        domain,
                        true,
                    )?;
                    Ok(ideal
                        .probs()
                        .iter()
                        .zip(lossy.probs())
                        .map(|(p, q)| (p * q).sqrt())
                        .sum::<f64>())
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(LossStudyRow {
                xi,
                eta: loss.eta(),
                mean_fidelity: per_seed.iter().sum::<f64>() / per_seed.len() as f64,
                per_seed,
            })
        })
        .collect()
}

pub fn loss_study_csv(rows: &[LossStudyRow]) -> String {
    csv_table(
        &["xi", "eta", "mean_fidelity"],
        rows.iter().map(|r| vec![r.xi, r.eta, r.mean_fidelity]),
    )
}

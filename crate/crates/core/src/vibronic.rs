//! Franck-Condon profiles of harmonic molecules via Gaussian boson sampling.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{seeded_rng, Interferometer};
use crate::distributions::{enumerate_patterns, prob_gbs, Domain};
use crate::error::{Error, Result};
use crate::export::csv_table;
use crate::gaussian::{build_sigma_q, GaussianState, SqueezerBank};
use crate::matkernels::{ComplexMatrix, FockPattern};
use crate::C64;

const ORTHO_TOL: f64 = 1e-10;

/// Harmonic description of an electronic transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSpec {
    /// Initial-state angular frequencies.
    pub omega: Vec<f64>,
    /// Final-state angular frequencies.
    pub omega_prime: Vec<f64>,
    /// Duschinsky rotation, row-major.
    pub duschinsky: Vec<Vec<f64>>,
    /// Displacement along the normal coordinates.
    pub displacement: Vec<f64>,
}

impl MoleculeSpec {
    pub fn new(
        omega: Vec<f64>,
        omega_prime: Vec<f64>,
        duschinsky: Vec<Vec<f64>>,
        displacement: Vec<f64>,
    ) -> Result<Self> {
        let mol = Self {
            omega,
            omega_prime,
            duschinsky,
            displacement,
        };
        mol.validate()?;
        Ok(mol)
    }

    pub fn modes(&self) -> usize {
        self.omega.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.omega.len();
        if self.omega_prime.len() != m
            || self.displacement.len() != m
            || self.duschinsky.len() != m
            || self.duschinsky.iter().any(|r| r.len() != m)
        {
            return Err(Error::DimensionMismatch(format!(
                "molecule with {m} modes has inconsistent array lengths"
            )));
        }
        let all = self.omega.iter().chain(&self.omega_prime);
        if let Some(w) = all.clone().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "frequencies must be positive, got {w}"
            )));
        }
        if self.displacement.iter().chain(self.duschinsky.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let u = self.duschinsky_matrix();
        let err = (&u * u.transpose() - DMatrix::identity(m, m)).amax();
        if err > ORTHO_TOL {
            return Err(Error::InvalidParameter(format!(
                "Duschinsky matrix is not orthogonal (error {err:.3e})"
            )));
        }
        Ok(())
    }

    fn duschinsky_matrix(&self) -> DMatrix<f64> {
        let m = self.omega.len();
        DMatrix::from_fn(m, m, |i, j| self.duschinsky[i][j])
    }

    /// Random displacement-free molecule: frequencies uniform on
    /// `[500, 2000]` and a Haar-random orthogonal Duschinsky matrix.
    pub fn random(m: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let omega = random_frequencies_with(&mut rng, m);
        let omega_prime = random_frequencies_with(&mut rng, m);
        let u = random_orthogonal(&mut rng, m);
        Self {
            omega,
            omega_prime,
            duschinsky: (0..m).map(|i| (0..m).map(|j| u[(i, j)]).collect()).collect(),
            displacement: vec![0.0; m],
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mol: Self = serde_json::from_str(s)?;
        mol.validate()?;
        Ok(mol)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Frequencies drawn uniformly from `[500, 2000]` arbitrary units.
pub fn random_frequencies(m: usize, seed: u64) -> Vec<f64> {
    random_frequencies_with(&mut seeded_rng(seed), m)
}

fn random_frequencies_with<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(500.0..2000.0)).collect()
}

fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, m: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Displacement, squeezing and rotation factors of a molecular transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoktorovDecomposition {
    pub u_left: ComplexMatrix,
    pub u_right: ComplexMatrix,
    /// `ln` of the singular values of `J`; negative when a singular value is
    /// below one.
    pub xi: Vec<f64>,
    pub alpha: Vec<f64>,
    pub j_matrix: ComplexMatrix,
}

fn real_to_complex(m: &DMatrix<f64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

/// `J = Ω′ U_D Ω⁻¹ = U_L Σ U_Rᵀ`, `ξ = ln Σ`, `δ = Ω′ d`, `α = J⁻¹δ/√2`.
pub fn doktorov_decompose(mol: &MoleculeSpec) -> Result<DoktorovDecomposition> {
    mol.validate()?;
    let m = mol.modes();
    let op = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        m,
        mol.omega_prime.iter().map(|w| w.sqrt()),
    ));
    let o_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        m,
        mol.omega.iter().map(|w| 1.0 / w.sqrt()),
    ));
    let j = &op * mol.duschinsky_matrix() * o_inv;

    let svd = j.clone().svd(true, true);
    let (u, v_t) = (svd.u.expect("left vectors"), svd.v_t.expect("right vectors"));
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    if sigma.iter().any(|&s| s <= 0.0) {
        return Err(Error::Singular);
    }
    let u_left = DMatrix::from_fn(m, m, |r, c| u[(r, order[c])]);
    let u_right = DMatrix::from_fn(m, m, |r, c| v_t[(order[c], r)]);

    let alpha = if mol.displacement.iter().all(|&d| d == 0.0) {
        vec![0.0; m]
    } else {
        let delta = nalgebra::DVector::from_iterator(
            m,
            mol.displacement.iter().zip(&mol.omega_prime).map(|(d, w)| w.sqrt() * d),
        );
        let j_inv = j.clone().try_inverse().ok_or(Error::Singular)?;
        (j_inv * delta).iter().map(|x| x / std::f64::consts::SQRT_2).collect()
    };

    Ok(DoktorovDecomposition {
        u_left: real_to_complex(&u_left),
        u_right: real_to_complex(&u_right),
        // Singular values within rounding of 1 carry no squeezing.
        xi: sigma
            .iter()
            .map(|s| s.ln())
            .map(|x| if x.abs() < 1e-14 { 0.0 } else { x })
            .collect(),
        alpha,
        j_matrix: real_to_complex(&j),
    })
}

impl DoktorovDecomposition {
    /// Displacement-free transformation defined directly by a unitary `U_L`
    /// and squeezing values, with `U_R = I`.
    pub fn synthetic(u_left: ComplexMatrix, xi: Vec<f64>) -> Result<Self> {
        let m = u_left.ensure_square()?;
        if xi.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} squeezing values for {m} modes",
                xi.len()
            )));
        }
        let err = u_left.unitarity_error();
        if err > ORTHO_TOL {
            return Err(Error::InvalidParameter(format!(
                "U_L is not unitary (error {err:.3e})"
            )));
        }
        let e: Vec<f64> = xi.iter().map(|x| x.exp()).collect();
        let j_matrix = u_left.matmul(&ComplexMatrix::from_real_diagonal(&e));
        Ok(Self {
            u_left,
            u_right: ComplexMatrix::identity(m),
            xi,
            alpha: vec![0.0; m],
            j_matrix,
        })
    }

    pub fn modes(&self) -> usize {
        self.xi.len()
    }

    /// `U_L · diag(e^ξ) · U_Rᵀ`.
    pub fn reconstruct_j(&self) -> ComplexMatrix {
        let e: Vec<f64> = self.xi.iter().map(|x| x.exp()).collect();
        self.u_left
            .matmul(&ComplexMatrix::from_real_diagonal(&e))
            .matmul(&self.u_right.transpose())
    }

    /// Squeezed vacuum evolved by `U_L`, so that its GBS kernel is
    /// `U_L diag(tanh ξ) U_Lᵀ`.
    ///
    /// Negative `ξ` are carried by multiplying the matching column of `U_L`
    /// by `i`, which leaves the kernel unchanged.
    pub fn gaussian_state(&self) -> Result<GaussianState> {
        let m = self.modes();
        let w = ComplexMatrix::from_fn(m, m, |r, c| {
            if self.xi[c] < 0.0 {
                self.u_left[(r, c)] * C64::new(0.0, 1.0)
            } else {
                self.u_left[(r, c)]
            }
        });
        // Stored interferometers put inputs on rows.
        let interf = Interferometer::full(w.transpose())?;
        let bank = SqueezerBank::new(self.xi.iter().map(|x| x.abs()).collect())?;
        build_sigma_q(&interf, &bank)
    }

    /// Same unitary with `tanh ξ̄ = γ tanh ξ`.
    pub fn rescaled(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("γ must be positive, got {gamma}")));
        }
        let xi = self
            .xi
            .iter()
            .map(|x| {
                let t = gamma * x.tanh();
                if t.abs() >= 1.0 {
                    Err(Error::InvalidParameter(format!(
                        "γ = {gamma} takes tanh ξ = {} beyond 1",
                        x.tanh()
                    )))
                } else {
                    Ok(t.atanh())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        let e: Vec<f64> = xi.iter().map(|x| x.exp()).collect();
        out.j_matrix = self
            .u_left
            .matmul(&ComplexMatrix::from_real_diagonal(&e))
            .matmul(&self.u_right.transpose());
        out.xi = xi;
        Ok(out)
    }

    fn ensure_undisplaced(&self) -> Result<()> {
        if self.alpha.iter().any(|&a| a != 0.0) {
            return Err(Error::InvalidParameter(
                "Franck-Condon factors are only available for zero displacement".into(),
            ));
        }
        Ok(())
    }
}

/// Transition probability from the vibrational ground state to `pattern`.
pub fn fc_factor(dok: &DoktorovDecomposition, pattern: &FockPattern) -> Result<f64> {
    dok.ensure_undisplaced()?;
    prob_gbs(&dok.gaussian_state()?, pattern)
}

/// FC factors of every pattern with at most `truncation_n` quanta.
pub fn fc_factors(
    dok: &DoktorovDecomposition,
    truncation_n: usize,
) -> Result<Vec<(FockPattern, f64)>> {
    dok.ensure_undisplaced()?;
    let state = dok.gaussian_state()?;
    let patterns = enumerate_patterns(dok.modes(), Domain::Truncated { max_n: truncation_n })?;
    patterns
        .into_par_iter()
        .map(|p| {
            let q = prob_gbs(&state, &p)?;
            Ok((p, q))
        })
        .collect()
}

/// How transition energies are grouped into bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binning {
    /// Width is the greatest common divisor of the rounded final-state
    /// frequencies; exact matching if any rounds to zero.
    Gcd,
    /// Fixed width.
    Width(f64),
    /// Energies equal to within 1e-9.
    Exact,
}

const EXACT_WIDTH: f64 = 1e-9;

impl Binning {
    fn width(&self, omega_prime: &[f64]) -> Result<f64> {
        match *self {
            Binning::Width(w) if w > 0.0 && w.is_finite() => Ok(w),
            Binning::Width(w) => Err(Error::InvalidParameter(format!("bin width {w}"))),
            Binning::Exact => Ok(EXACT_WIDTH),
            Binning::Gcd => {
                let rounded: Vec<u64> = omega_prime.iter().map(|w| w.round() as u64).collect();
                if rounded.contains(&0) {
                    return Ok(EXACT_WIDTH);
                }
                Ok(rounded.into_iter().fold(0, gcd) as f64)
            }
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Franck-Condon weight per transition-energy bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FcProfile {
    pub width: f64,
    /// Bin index `b`; the bin is centred at `b · width`.
    pub bins: Vec<i64>,
    pub masses: Vec<f64>,
    pub truncation_n: usize,
}

impl FcProfile {
    pub fn frequencies(&self) -> Vec<f64> {
        self.bins.iter().map(|&b| b as f64 * self.width).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// The same masses placed on the (larger) grid of `target`.
    pub fn regrid(&self, target: &FcProfile) -> Result<FcProfile> {
        if self.width != target.width {
            return Err(Error::DimensionMismatch(format!(
                "bin widths differ: {} vs {}",
                self.width, target.width
            )));
        }
        let pos: BTreeMap<i64, usize> =
            target.bins.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut masses = vec![0.0; target.bins.len()];
        for (b, m) in self.bins.iter().zip(&self.masses) {
            let i = pos.get(b).ok_or_else(|| {
                Error::DimensionMismatch(format!("bin {b} missing from the target grid"))
            })?;
            masses[*i] += m;
        }
        Ok(FcProfile {
            width: target.width,
            bins: target.bins.clone(),
            masses,
            truncation_n: self.truncation_n,
        })
    }

    pub fn to_csv(&self) -> String {
        csv_table(
            &["omega", "mass"],
            self.frequencies()
                .into_iter()
                .zip(&self.masses)
                .map(|(w, &m)| vec![w, m]),
        )
    }
}

/// Bins `factors` by `Σ ω′_i k_i`. Every pattern contributes a bin, so
/// profiles built from the same pattern set share a grid.
pub fn profile_from_factors(
    factors: &[(FockPattern, f64)],
    omega_prime: &[f64],
    truncation_n: usize,
    binning: Binning,
) -> Result<FcProfile> {
    let width = binning.width(omega_prime)?;
    let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
    for (p, q) in factors {
        if p.modes() != omega_prime.len() {
            return Err(Error::DimensionMismatch(format!(
                "pattern over {} modes with {} frequencies",
                p.modes(),
                omega_prime.len()
            )));
        }
        let energy: f64 = p
            .occupations()
            .iter()
            .zip(omega_prime)
            .map(|(&k, w)| k as f64 * w)
            .sum();
        *acc.entry((energy / width).round() as i64).or_insert(0.0) += q;
    }
    let (bins, masses) = acc.into_iter().unzip();
    Ok(FcProfile {
        width,
        bins,
        masses,
        truncation_n,
    })
}

/// FC profile truncated at `truncation_n` quanta.
pub fn fc_profile(
    dok: &DoktorovDecomposition,
    omega_prime: &[f64],
    truncation_n: usize,
    binning: Binning,
) -> Result<FcProfile> {
    if omega_prime.len() != dok.modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} frequencies for {} modes",
            omega_prime.len(),
            dok.modes()
        )));
    }
    let factors = fc_factors(dok, truncation_n)?;
    profile_from_factors(&factors, omega_prime, truncation_n, binning)
}

fn rescale(
    list: &[(FockPattern, f64)],
    weight: impl Fn(usize) -> f64,
) -> Result<Vec<(FockPattern, f64)>> {
    let scaled: Vec<(FockPattern, f64)> = list
        .iter()
        .map(|(p, q)| (p.clone(), q * weight(p.total())))
        .collect();
    let total: f64 = scaled.iter().map(|(_, q)| q).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroDistribution);
    }
    Ok(scaled.into_iter().map(|(p, q)| (p, q / total)).collect())
}

fn check_device(eta: f64, gamma: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("η must lie in (0, 1], got {eta}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("γ must be positive, got {gamma}")));
    }
    Ok(())
}

/// Device-side factors `p̄(k) ∝ ηⁿ γⁿ p(k)`, normalised over the list.
pub fn fc9_forward(
    ideal: &[(FockPattern, f64)],
    eta: f64,
    gamma: f64,
) -> Result<Vec<(FockPattern, f64)>> {
    check_device(eta, gamma)?;
    rescale(ideal, |n| (eta * gamma).powi(n as i32))
}

/// Inverts [`fc9_forward`]: `p(k) ∝ p̄(k) / (ηⁿ γⁿ)`.
pub fn postprocess_rescale(
    raw: &[(FockPattern, f64)],
    eta: f64,
    gamma: f64,
) -> Result<Vec<(FockPattern, f64)>> {
    check_device(eta, gamma)?;
    rescale(raw, |n| (eta * gamma).powi(-(n as i32)))
}

/// Unnormalised detection probabilities of a device whose squeezers are
/// rescaled by `γ` and whose photons are each detected with probability
/// `η`, for every pattern with at most `truncation_n` photons.
pub fn device_factors(
    dok: &DoktorovDecomposition,
    gamma: f64,
    eta: f64,
    truncation_n: usize,
) -> Result<Vec<(FockPattern, f64)>> {
    check_device(eta, gamma)?;
    let dev = dok.rescaled(gamma)?;
    Ok(fc_factors(&dev, truncation_n)?
        .into_iter()
        .map(|(p, q)| {
            let n = p.total() as i32;
            (p, q * eta.powi(n))
        })
        .collect())
}

/// `Σ_ω √(p_ω q_ω)` over a shared grid.
pub fn profile_fidelity(p: &FcProfile, q: &FcProfile) -> Result<f64> {
    if p.width != q.width || p.bins != q.bins {
        return Err(Error::DimensionMismatch("profiles use different bin grids".into()));
    }
    Ok(p.masses
        .iter()
        .zip(&q.masses)
        .map(|(a, b)| (a * b).sqrt())
        .sum())
}

/// Optimal classical (vacuum-input) profile on the grid of `like`: all
/// mass at zero transition energy.
pub fn classical_baseline(like: &FcProfile) -> Result<FcProfile> {
    let zero = like
        .bins
        .iter()
        .position(|&b| b == 0)
        .ok_or_else(|| Error::DimensionMismatch("grid has no zero-energy bin".into()))?;
    let mut masses = vec![0.0; like.bins.len()];
    masses[zero] = 1.0;
    Ok(FcProfile {
        width: like.width,
        bins: like.bins.clone(),
        masses,
        truncation_n: like.truncation_n,
    })
}

/// `C = F_Q − F_C`.
pub fn quantum_enhancement(f_quantum: f64, f_classical: f64) -> f64 {
    f_quantum - f_classical
}

/// One point of a simulated-squeezing sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnhancementPoint {
    pub gamma: f64,
    /// Largest squeezing of the simulated molecule.
    pub max_xi: f64,
    /// Fidelity of the post-processed reconstruction.
    pub f_quantum: f64,
    /// Fidelity of the raw device data, without post-processing.
    pub f_raw: f64,
    pub f_classical: f64,
    pub enhancement: f64,
    pub enhancement_raw: f64,
}

/// Settings of an enhancement-versus-γ sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Transmission seen by every detected photon.
    pub eta: f64,
    /// Largest photon number the device data covers.
    pub device_truncation: usize,
    /// Truncation of the reference (ideal) profile.
    pub ideal_truncation: usize,
    pub binning: Binning,
    /// Draw this many device samples instead of using exact factors.
    pub shots: Option<usize>,
    pub seed: u64,
}

/// For each `γ`, simulates the molecule with `tanh ξ = tanh ξ̄ / γ` from a
/// device with squeezing `ξ̄`, reconstructs its profile from device data
/// with at most `device_truncation` photons and scores it against the ideal
/// profile.
pub fn enhancement_sweep(
    u_left: &ComplexMatrix,
    device_xi: &[f64],
    omega_prime: &[f64],
    gammas: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<EnhancementPoint>> {
    if settings.ideal_truncation < settings.device_truncation {
        return Err(Error::InvalidParameter(
            "ideal truncation must cover the device truncation".into(),
        ));
    }
    let device = DoktorovDecomposition::synthetic(u_left.clone(), device_xi.to_vec())?;
    let mut out = Vec::with_capacity(gammas.len());
    for (i, &gamma) in gammas.iter().enumerate() {
        let molecule = device.rescaled(1.0 / gamma)?;
        let ideal = fc_profile(
            &molecule,
            omega_prime,
            settings.ideal_truncation,
            settings.binning,
        )?;
        let mut raw = device_factors(&molecule, gamma, settings.eta, settings.device_truncation)?;
        if let Some(shots) = settings.shots {
            raw = empirical(&raw, shots, settings.seed.wrapping_add(i as u64))?;
        }
        let raw_norm = rescale(&raw, |_| 1.0)?;
        let post = postprocess_rescale(&raw, settings.eta, gamma)?;
        let grid = |f: &[(FockPattern, f64)]| {
            profile_from_factors(f, omega_prime, settings.device_truncation, settings.binning)?
                .regrid(&ideal)
        };
        let f_quantum = profile_fidelity(&grid(&post)?, &ideal)?;
        let f_raw = profile_fidelity(&grid(&raw_norm)?, &ideal)?;
        let f_classical = profile_fidelity(&classical_baseline(&ideal)?, &ideal)?;
        out.push(EnhancementPoint {
            gamma,
            max_xi: molecule.xi.iter().copied().fold(0.0, f64::max),
            f_quantum,
            f_raw,
            f_classical,
            enhancement: quantum_enhancement(f_quantum, f_classical),
            enhancement_raw: quantum_enhancement(f_raw, f_classical),
        });
    }
    Ok(out)
}

/// Relative frequencies of `shots` seeded draws from `list`.
fn empirical(list: &[(FockPattern, f64)], shots: usize, seed: u64) -> Result<Vec<(FockPattern, f64)>> {
    let total: f64 = list.iter().map(|(_, q)| q).sum();
    if !(total > 0.0) || shots == 0 {
        return Err(Error::ZeroDistribution);
    }
    let mut cdf = Vec::with_capacity(list.len());
    let mut acc = 0.0;
    for (_, q) in list {
        acc += q;
        cdf.push(acc);
    }
    let mut counts = vec![0usize; list.len()];
    let mut rng = seeded_rng(seed);
    for _ in 0..shots {
        let r = rng.random::<f64>() * acc;
        counts[cdf.partition_point(|&c| c <= r).min(list.len() - 1)] += 1;
    }
    Ok(list
        .iter()
        .zip(counts)
        .map(|((p, _), c)| (p.clone(), c as f64 / shots as f64))
        .collect())
}

//! Gaussian input states: squeezer banks, Q-covariance matrices and the
//! uniform loss channel.
//!
//! Covariances use the complex `(a_1..a_m, a_1*..a_m*)` ordering. The
//! Q-covariance of the vacuum is the identity.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::circuits::Interferometer;
use crate::error::{Error, Result};
use crate::matkernels::{determinant, ComplexMatrix};
use crate::C64;

/// Upper bound on accepted squeezing parameters.
pub const MAX_SQUEEZING: f64 = 4.0;

const HERMITIAN_TOL: f64 = 1e-10;
const CHOLESKY_TOL: f64 = 1e-9;
const DET_TOL: f64 = 1e-9;

/// Per-mode single-mode squeezing parameters (zero on vacuum modes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SqueezerBank {
    xi: Vec<f64>,
}

impl SqueezerBank {
    pub fn new(xi: Vec<f64>) -> Result<Self> {
        if let Some(bad) = xi.iter().find(|x| !(0.0..MAX_SQUEEZING).contains(*x)) {
            return Err(Error::InvalidParameter(format!(
                "squeezing parameter {bad} outside [0, {MAX_SQUEEZING})"
            )));
        }
        Ok(Self { xi })
    }

    /// Places `values` on `modes` of an `m`-mode bank.
    pub fn on_modes(m: usize, modes: &[usize], values: &[f64]) -> Result<Self> {
        if modes.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} modes but {} squeezing values",
                modes.len(),
                values.len()
            )));
        }
        let mut xi = vec![0.0; m];
        for (&mode, &v) in modes.iter().zip(values) {
            if mode >= m {
                return Err(Error::InvalidParameter(format!("mode {mode} out of range")));
            }
            xi[mode] = v;
        }
        Self::new(xi)
    }

    pub fn uniform(m: usize, xi: f64) -> Result<Self> {
        Self::new(vec![xi; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.xi
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Modes carrying non-zero squeezing.
    pub fn active_modes(&self) -> Vec<usize> {
        (0..self.xi.len()).filter(|&i| self.xi[i] > 0.0).collect()
    }

    /// Copy keeping only the squeezer on `mode`.
    pub fn isolate(&self, mode: usize) -> Self {
        let xi = (0..self.xi.len())
            .map(|i| if i == mode { self.xi[i] } else { 0.0 })
            .collect();
        Self { xi }
    }
}

/// Uniform transmission applied to every source before the interferometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossChannel {
    eta: f64,
}

impl LossChannel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!(
                "transmission {eta} outside [0, 1]"
            )));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// Gaussian state at the interferometer output.
#[derive(Clone, Debug)]
pub struct GaussianState {
    m: usize,
    sigma_q: ComplexMatrix,
    kernel_b: Option<ComplexMatrix>,
    det: f64,
    mixed: OnceLock<ComplexMatrix>,
}

impl PartialEq for GaussianState {
    fn eq(&self, other: &Self) -> bool {
        self.sigma_q == other.sigma_q && self.kernel_b == other.kernel_b
    }
}

impl GaussianState {
    /// Validates Hermiticity, positive definiteness and `det σ_Q ≥ 1`.
    pub fn new(sigma_q: ComplexMatrix, kernel_b: Option<ComplexMatrix>) -> Result<Self> {
        let dim = sigma_q.ensure_square()?;
        if dim % 2 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "Q-covariance must be 2m×2m, got {dim}×{dim}"
            )));
        }
        let m = dim / 2;
        if let Some(b) = &kernel_b {
            if b.rows() != m || b.cols() != m {
                return Err(Error::DimensionMismatch(format!(
                    "kernel must be {m}×{m}, got {}×{}",
                    b.rows(),
                    b.cols()
                )));
            }
        }
        let herr = sigma_q.hermiticity_error();
        if herr > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herr));
        }
        if !is_positive_definite(&sigma_q) {
            return Err(Error::Unphysical("Q-covariance is not positive definite".into()));
        }
        let det = determinant(&sigma_q)?.re;
        if det < 1.0 - DET_TOL {
            return Err(Error::Unphysical(format!("det σ_Q = {det} < 1")));
        }
        Ok(Self {
            m,
            sigma_q,
            kernel_b,
            det,
            mixed: OnceLock::new(),
        })
    }

    /// Cached result of `f`, computed on first use.
    pub(crate) fn mixed_kernel_with(
        &self,
        f: impl FnOnce(&Self) -> Result<ComplexMatrix>,
    ) -> Result<&ComplexMatrix> {
        if let Some(k) = self.mixed.get() {
            return Ok(k);
        }
        let k = f(self)?;
        Ok(self.mixed.get_or_init(|| k))
    }

    pub fn modes(&self) -> usize {
        self.m
    }

    pub fn sigma_q(&self) -> &ComplexMatrix {
        &self.sigma_q
    }

    /// `B = W·diag(tanh ξ)·Wᵀ`, present only for pure squeezed vacuum.
    pub fn kernel_b(&self) -> Option<&ComplexMatrix> {
        self.kernel_b.as_ref()
    }

    pub fn is_pure(&self) -> bool {
        self.kernel_b.is_some()
    }

    pub fn det_sigma_q(&self) -> f64 {
        self.det
    }

    /// Probability of detecting no photons, `1/√det σ_Q`.
    pub fn vacuum_probability(&self) -> f64 {
        1.0 / self.det_sigma_q().sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        let (sigma_q_re, sigma_q_im) = self.sigma_q.to_re_im();
        let (kernel_b_re, kernel_b_im) = match &self.kernel_b {
            Some(b) => {
                let (re, im) = b.to_re_im();
                (Some(re), Some(im))
            }
            None => (None, None),
        };
        let doc = GaussianStateDoc {
            m: self.m,
            sigma_q_re,
            sigma_q_im,
            kernel_b_re,
            kernel_b_im,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: GaussianStateDoc = serde_json::from_str(s)?;
        let sigma = ComplexMatrix::from_re_im(&doc.sigma_q_re, &doc.sigma_q_im)?;
        let kernel = match (doc.kernel_b_re, doc.kernel_b_im) {
            (Some(re), Some(im)) => Some(ComplexMatrix::from_re_im(&re, &im)?),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidParameter(
                    "kernel needs both real and imaginary parts".into(),
                ))
            }
        };
        let state = Self::new(sigma, kernel)?;
        if state.m != doc.m {
            return Err(Error::DimensionMismatch("declared m disagrees with σ_Q".into()));
        }
        Ok(state)
    }
}

#[derive(Serialize, Deserialize)]
struct GaussianStateDoc {
    m: usize,
    sigma_q_re: Vec<Vec<f64>>,
    sigma_q_im: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel_b_re: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel_b_im: Option<Vec<Vec<f64>>>,
}

/// Cholesky factorisation with a small negative-pivot allowance.
fn is_positive_definite(a: &ComplexMatrix) -> bool {
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= CHOLESKY_TOL {
            return false;
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    true
}

/// Column-convention mode transformation `W = Uᵀ` of an interferometer.
pub(crate) fn mode_transform(interf: &Interferometer) -> ComplexMatrix {
    interf.unitary().transpose()
}

/// `blockdiag(W, W*) · X · blockdiag(W†, Wᵀ)`.
pub(crate) fn propagate_covariance(w: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    let big = w.direct_sum(&w.conj());
    big.matmul(x).matmul(&big.adjoint())
}

/// `S·S†` for the cosh/sinh block matrix of a bank of squeezers.
fn squeeze_gram(xi: &[f64]) -> ComplexMatrix {
    let m = xi.len();
    let mut g = ComplexMatrix::zeros(2 * m, 2 * m);
    for (i, &x) in xi.iter().enumerate() {
        let (c2, s2) = ((2.0 * x).cosh(), (2.0 * x).sinh());
        g[(i, i)] = C64::new(c2, 0.0);
        g[(m + i, m + i)] = C64::new(c2, 0.0);
        g[(i, m + i)] = C64::new(s2, 0.0);
        g[(m + i, i)] = C64::new(s2, 0.0);
    }
    g
}

fn half_plus_identity(x: &ComplexMatrix) -> ComplexMatrix {
    let n = x.rows();
    ComplexMatrix::from_fn(n, n, |i, j| {
        let v = x[(i, j)] * 0.5;
        if i == j {
            v + 0.5
        } else {
            v
        }
    })
}

fn squeezed_kernel(w: &ComplexMatrix, xi: &[f64]) -> ComplexMatrix {
    let d: Vec<f64> = xi.iter().map(|x| x.tanh()).collect();
    w.matmul(&ComplexMatrix::from_real_diagonal(&d))
        .matmul(&w.transpose())
}

/// Squeezed vacuum on every mode of `bank`, evolved through `interf`.
pub fn build_sigma_q(interf: &Interferometer, bank: &SqueezerBank) -> Result<GaussianState> {
    let m = interf.modes();
    if bank.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} squeezers for a {m}-mode interferometer",
            bank.len()
        )));
    }
    let w = mode_transform(interf);
    let sigma = half_plus_identity(&propagate_covariance(&w, &squeeze_gram(bank.values())));
    let kernel = squeezed_kernel(&w, bank.values());
    GaussianState::new(sigma, Some(kernel))
}

/// Squeezed vacuum on each source row of a `k × m` transfer matrix `t`,
/// detected on its `m` output modes.
///
/// A kernel is attached only when the rows of `t` are orthonormal; a
/// lossy (sub-unitary) `t` yields the corresponding mixed state.
pub fn squeezed_state_from_transfer(t: &ComplexMatrix, xi: &[f64]) -> Result<GaussianState> {
    let (k, m) = (t.rows(), t.cols());
    if xi.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} squeezers for a transfer matrix with {k} rows",
            xi.len()
        )));
    }
    SqueezerBank::new(xi.to_vec())?;
    let mut g = squeeze_gram(xi);
    for i in 0..2 * k {
        g[(i, i)] -= 1.0;
    }
    let w = t.transpose();
    let mut sigma = propagate_covariance(&w, &g).scale(C64::new(0.5, 0.0));
    for i in 0..2 * m {
        sigma[(i, i)] += 1.0;
    }
    let gram = t.matmul(&t.adjoint());
    let kernel = if gram.max_abs_diff(&ComplexMatrix::identity(k)) < 1e-10 {
        Some(squeezed_kernel(&w, xi))
    } else {
        None
    };
    GaussianState::new(sigma, kernel)
}

/// Each source meets a vacuum ancilla on a beam splitter of transmission
/// `η`; the ancillas are traced out (their rows and columns deleted) and
/// the remaining state is sent through `interf`.
pub fn apply_uniform_loss(
    bank: &SqueezerBank,
    interf: &Interferometer,
    loss: LossChannel,
) -> Result<GaussianState> {
    let m = interf.modes();
    if bank.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} squeezers for a {m}-mode interferometer",
            bank.len()
        )));
    }
    let eta = loss.eta();
    if eta == 1.0 {
        return build_sigma_q(interf, bank);
    }
    if eta == 0.0 {
        return GaussianState::new(
            ComplexMatrix::identity(2 * m),
            Some(ComplexMatrix::zeros(m, m)),
        );
    }
    // Signal modes are the even indices 0, 2, ..; ancillas the odd ones.
    let mut xi2 = vec![0.0; 2 * m];
    for (i, &x) in bank.values().iter().enumerate() {
        xi2[2 * i] = x;
    }
    let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
    let mut ubs = ComplexMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        let (s, a) = (2 * i, 2 * i + 1);
        ubs[(s, s)] = C64::new(t, 0.0);
        ubs[(s, a)] = C64::new(r, 0.0);
        ubs[(a, s)] = C64::new(-r, 0.0);
        ubs[(a, a)] = C64::new(t, 0.0);
    }
    let sigma2k = half_plus_identity(&propagate_covariance(&ubs, &squeeze_gram(&xi2)));

    // Keep signal modes in both the a and a* blocks.
    let keep: Vec<usize> = (0..m)
        .map(|i| 2 * i)
        .chain((0..m).map(|i| 2 * m + 2 * i))
        .collect();
    let sigma_in = sigma2k.select(&keep, &keep);

    let w = mode_transform(interf);
    GaussianState::new(propagate_covariance(&w, &sigma_in), None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SfwmKind {
    /// Two-mode squeezing (signal/idler pairs).
    Nondegenerate,
    /// Single-mode squeezing from a dual-wavelength pump.
    Degenerate,
}

/// Two-photon emission probability of an SFWM source.
pub fn source_efficiency(xi: f64, kind: SfwmKind) -> Result<f64> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "squeezing must be finite and non-negative, got {xi}"
        )));
    }
    let t2 = xi.tanh().powi(2);
    Ok(match kind {
        SfwmKind::Nondegenerate => t2 / xi.cosh().powi(2),
        SfwmKind::Degenerate => t2 / (2.0 * xi.cosh()),
    })
}

/// Heralded-photon purity from the unheralded `g2(0)`.
pub fn purity_from_g2(g2_zero: f64) -> Result<f64> {
    if !(1.0..=2.0).contains(&g2_zero) {
        return Err(Error::InvalidParameter(format!(
            "g2(0) = {g2_zero} outside [1, 2]"
        )));
    }
    Ok(g2_zero - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::haar_random_unitary;

    fn single_mode() -> Interferometer {
        Interferometer::full(ComplexMatrix::identity(1)).unwrap()
    }

    #[test]
    fn vacuum_has_identity_covariance() {
        let interf = haar_random_unitary(4, 8).unwrap();
        let s = build_sigma_q(&interf, &SqueezerBank::uniform(4, 0.0).unwrap()).unwrap();
        assert!(s.sigma_q().max_abs_diff(&ComplexMatrix::identity(8)) < 1e-12);
    }

    #[test]
    fn single_mode_determinant() {
        let s = build_sigma_q(&single_mode(), &SqueezerBank::new(vec![0.2]).unwrap()).unwrap();
        assert!((s.det_sigma_q() - 0.2f64.cosh().powi(2)).abs() < 1e-12);
        assert!((s.det_sigma_q() - 1.0405).abs() < 1e-4);
    }

    #[test]
    fn bank_and_loss_validation() {
        assert!(SqueezerBank::new(vec![-0.1]).is_err());
        assert!(SqueezerBank::new(vec![4.0]).is_err());
        assert!(LossChannel::new(1.1).is_err());
        assert!(LossChannel::new(-0.01).is_err());
        let interf = haar_random_unitary(3, 1).unwrap();
        assert!(build_sigma_q(&interf, &SqueezerBank::new(vec![0.1]).unwrap()).is_err());
    }

    #[test]
    fn lossless_channel_matches_direct_construction() {
        let interf = haar_random_unitary(5, 4).unwrap();
        let bank = SqueezerBank::on_modes(5, &[1, 2, 3], &[0.3, 0.2, 0.5]).unwrap();
        let direct = build_sigma_q(&interf, &bank).unwrap();
        let lossy = apply_uniform_loss(&bank, &interf, LossChannel::new(1.0).unwrap()).unwrap();
        assert!(direct.sigma_q().max_abs_diff(lossy.sigma_q()) < 1e-12);
        assert!(lossy.is_pure());
    }

    #[test]
    fn full_loss_gives_vacuum() {
        let interf = haar_random_unitary(3, 4).unwrap();
        let bank = SqueezerBank::uniform(3, 0.7).unwrap();
        let s = apply_uniform_loss(&bank, &interf, LossChannel::new(0.0).unwrap()).unwrap();
        assert_eq!(s.sigma_q(), &ComplexMatrix::identity(6));
        assert_eq!(s.vacuum_probability(), 1.0);
    }

    #[test]
    fn rejects_unphysical_covariance() {
        let half = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        assert!(matches!(GaussianState::new(half, None), Err(Error::Unphysical(_))));
        let neg = ComplexMatrix::identity(2).scale(C64::new(-1.0, 0.0));
        assert!(GaussianState::new(neg, None).is_err());
    }

    #[test]
    fn efficiencies_and_purity() {
        assert_eq!(source_efficiency(0.0, SfwmKind::Degenerate).unwrap(), 0.0);
        let nd = source_efficiency(0.25, SfwmKind::Nondegenerate).unwrap();
        assert!((nd - 0.25f64.tanh().powi(2) / 0.25f64.cosh().powi(2)).abs() < 1e-15);
        assert!((nd - 0.0564).abs() < 1e-4);
        let d = source_efficiency(0.2, SfwmKind::Degenerate).unwrap();
        assert!((d - 0.01910).abs() < 1e-5);
        assert!(source_efficiency(-0.1, SfwmKind::Degenerate).is_err());
        assert_eq!(purity_from_g2(2.0).unwrap(), 1.0);
        assert_eq!(purity_from_g2(1.0).unwrap(), 0.0);
        assert!((purity_from_g2(1.86).unwrap() - 0.86).abs() < 1e-12);
        assert!(purity_from_g2(2.5).is_err());
    }

    #[test]
    fn json_round_trip() {
        let interf = haar_random_unitary(2, 3).unwrap();
        let s = build_sigma_q(&interf, &SqueezerBank::new(vec![0.1, 0.2]).unwrap()).unwrap();
        let back = GaussianState::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }
}

use serde::{Deserialize, Serialize};

use crate::circuits::{doubled_gbs_circuit, Interferometer};
use crate::error::{Error, Result};
use crate::gaussian::{build_sigma_q, squeezed_state_from_transfer, GaussianState, SqueezerBank};
use crate::matkernels::{
    hafnian, inverse, permanent, repeat_submatrix, ComplexMatrix, FockPattern,
};
use crate::C64;

use super::patterns::{domain_size, Domain};

/// Parameters of the classical coherent and thermal test models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassicalModelSpec {
    /// Per-input-mode complex amplitudes.
    Coherent { alpha: Vec<C64> },
    /// Per-input-mode mean photon numbers.
    Thermal { mean_photons: Vec<f64> },
}

impl ClassicalModelSpec {
    pub fn coherent(alpha: Vec<C64>) -> Result<Self> {
        if alpha.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::Coherent { alpha })
    }

    pub fn thermal(mean_photons: Vec<f64>) -> Result<Self> {
        if mean_photons.iter().any(|n| !n.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(n) = mean_photons.iter().find(|&&n| n < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "negative mean photon number {n}"
            )));
        }
        Ok(Self::Thermal { mean_photons })
    }

    fn kind(&self) -> &'static str {
        match self {
            Self::Coherent { .. } => "coherent",
            Self::Thermal { .. } => "thermal",
        }
    }

    fn len(&self) -> usize {
        match self {
            Self::Coherent { alpha } => alpha.len(),
            Self::Thermal { mean_photons } => mean_photons.len(),
        }
    }
}

fn check_modes(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!(
            "{what} has {got} modes, expected {want}"
        )));
    }
    Ok(())
}

/// Output probability of Fock input `input` through the `k × m` transfer
/// matrix `t`.
pub fn prob_boson_sampling(
    t: &ComplexMatrix,
    input: &FockPattern,
    output: &FockPattern,
) -> Result<f64> {
    let sub = bs_submatrix(t, input, output)?;
    let perm = permanent(&sub)?;
    let log_norm = input.log_factorial_product() + output.log_factorial_product();
    Ok(perm.norm_sqr() * (-log_norm).exp())
}

/// Same as [`prob_boson_sampling`] for fully distinguishable photons.
pub fn prob_distinguishable_bs(
    t: &ComplexMatrix,
    input: &FockPattern,
    output: &FockPattern,
) -> Result<f64> {
    let sub = bs_submatrix(t, input, output)?;
    let perm = permanent(&sub.map(|z| C64::new(z.norm_sqr(), 0.0)))?;
    Ok(perm.re / output.factorial_product())
}

fn bs_submatrix(
    t: &ComplexMatrix,
    input: &FockPattern,
    output: &FockPattern,
) -> Result<ComplexMatrix> {
    check_modes("input pattern", input.modes(), t.rows())?;
    check_modes("output pattern", output.modes(), t.cols())?;
    if input.total() != output.total() {
        return Err(Error::PhotonNumberMismatch {
            input: input.total(),
            output: output.total(),
        });
    }
    repeat_submatrix(t, input, output)
}

/// Detection probability of `output` for a Gaussian state.
///
/// Pure states use the stored kernel; odd photon numbers then have
/// probability exactly zero. Mixed states use the Hafnian of
/// `A = X(I − σ_Q⁻¹)` with rows and columns repeated for both the `a` and
/// `a*` blocks.
pub fn prob_gbs(state: &GaussianState, output: &FockPattern) -> Result<f64> {
    check_modes("output pattern", output.modes(), state.modes())?;
    let norm = output.factorial_product() * state.det_sigma_q().sqrt();
    match state.kernel_b() {
        Some(b) => {
            if output.total() % 2 == 1 {
                return Ok(0.0);
            }
            let sub = repeat_submatrix(b, output, output)?;
            Ok(hafnian(&sub)?.norm_sqr() / norm)
        }
        None => {
            let a = state.mixed_kernel_with(mixed_kernel)?;
            let m = state.modes();
            let modes = output.mode_list();
            let idx: Vec<usize> = modes
                .iter()
                .copied()
                .chain(modes.iter().map(|&i| i + m))
                .collect();
            let h = hafnian(&a.select(&idx, &idx))?;
            Ok((h.re / norm).max(0.0))
        }
    }
}

/// `A = X(I − σ_Q⁻¹)`, symmetrised to remove rounding asymmetry.
pub fn mixed_kernel(state: &GaussianState) -> Result<ComplexMatrix> {
    let m = state.modes();
    let inv = inverse(state.sigma_q())?;
    let one_minus = ComplexMatrix::identity(2 * m).sub(&inv)?;
    // X swaps the a and a* halves of the rows.
    let a = ComplexMatrix::from_fn(2 * m, 2 * m, |i, j| one_minus[((i + m) % (2 * m), j)]);
    Ok(ComplexMatrix::from_fn(2 * m, 2 * m, |i, j| {
        (a[(i, j)] + a[(j, i)]) * 0.5
    }))
}

/// Product of Poisson laws with amplitudes `β = Tᵀα` for coherent inputs.
pub fn prob_coherent(
    spec: &ClassicalModelSpec,
    interf: &Interferometer,
    output: &FockPattern,
) -> Result<f64> {
    let ClassicalModelSpec::Coherent { alpha } = spec else {
        return Err(Error::InvalidParameter(format!(
            "expected a coherent model, got {}",
            spec.kind()
        )));
    };
    let m = interf.modes();
    check_modes("coherent amplitudes", spec.len(), m)?;
    check_modes("output pattern", output.modes(), m)?;
    let u = interf.unitary();
    let mut log_p = 0.0;
    for (o, &k) in output.occupations().iter().enumerate() {
        let beta: C64 = (0..m).map(|i| u[(i, o)] * alpha[i]).sum();
        let mean = beta.norm_sqr();
        if k > 0 {
            if mean == 0.0 {
                return Ok(0.0);
            }
            log_p += k as f64 * mean.ln();
        }
        log_p -= mean;
    }
    Ok((log_p - output.log_factorial_product()).exp())
}

/// Thermal inputs: `Perm(A_k) / (∏k! ∏(1 + ⟨n⟩))` with
/// `A = W diag(τ) W†`, `τ = ⟨n⟩ / (⟨n⟩ + 1)`.
pub fn prob_thermal(
    spec: &ClassicalModelSpec,
    interf: &Interferometer,
    output: &FockPattern,
) -> Result<f64> {
    let ClassicalModelSpec::Thermal { mean_photons } = spec else {
        return Err(Error::InvalidParameter(format!(
            "expected a thermal model, got {}",
            spec.kind()
        )));
    };
    let m = interf.modes();
    check_modes("mean photon numbers", spec.len(), m)?;
    check_modes("output pattern", output.modes(), m)?;
    let u = interf.unitary();
    let tau: Vec<f64> = mean_photons.iter().map(|&n| n / (n + 1.0)).collect();
    let a = ComplexMatrix::from_fn(m, m, |o1, o2| {
        (0..m).map(|i| u[(i, o1)] * tau[i] * u[(i, o2)].conj()).sum()
    });
    let perm = permanent(&repeat_submatrix(&a, output, output)?)?;
    let log_vac: f64 = mean_photons.iter().map(|&n| (1.0 + n).ln()).sum();
    Ok((perm.re * (-(log_vac + output.log_factorial_product())).exp()).max(0.0))
}

fn per_source_states(
    bank: &SqueezerBank,
    interf: &Interferometer,
) -> Result<(Vec<GaussianState>, f64)> {
    check_modes("squeezer bank", bank.len(), interf.modes())?;
    let states = bank
        .active_modes()
        .into_iter()
        .map(|s| build_sigma_q(interf, &bank.isolate(s)))
        .collect::<Result<Vec<_>>>()?;
    let prefactor = states
        .iter()
        .map(|s| 1.0 / s.det_sigma_q().sqrt())
        .product();
    Ok((states, prefactor))
}

/// Four-photon law for mutually distinguishable single-mode squeezed
/// sources: every unordered pair of sources contributing two photons each,
/// plus every single source contributing all four.
pub fn prob_distinguishable_sms(
    bank: &SqueezerBank,
    interf: &Interferometer,
    output: &FockPattern,
) -> Result<f64> {
    check_modes("output pattern", output.modes(), interf.modes())?;
    if output.total() != 4 {
        return Err(Error::UnsupportedPattern(format!(
            "closed form covers four photons, pattern has {}",
            output.total()
        )));
    }
    if output.max_occupancy() > 2 {
        return Err(Error::UnsupportedPattern(
            "closed form allows at most two photons per mode".into(),
        ));
    }
    let (states, prefactor) = per_source_states(bank, interf)?;
    let kernels: Vec<&ComplexMatrix> = states
        .iter()
        .map(|s| s.kernel_b().expect("lossless source state"))
        .collect();

    let pair = |c: &ComplexMatrix, h: &FockPattern| {
        let l = h.mode_list();
        let delta = if l[0] == l[1] { 2.0 } else { 1.0 };
        c[(l[0], l[1])].norm_sqr() / delta
    };
    let halves = sub_patterns(output, 2);

    let mut total = 0.0;
    for (i, ci) in kernels.iter().enumerate() {
        for cj in &kernels[i + 1..] {
            for h in &halves {
                let rest = difference(output, h);
                total += pair(ci, h) * pair(cj, &rest);
            }
        }
    }
    let k_fact = output.factorial_product();
    for c in &kernels {
        let sub = repeat_submatrix(c, output, output)?;
        total += hafnian(&sub)?.norm_sqr() / k_fact;
    }
    Ok(total * prefactor)
}

/// Distinguishable-source law for any photon number, by convolving the
/// independent per-source GBS outcome distributions.
pub fn prob_distinguishable_sms_convolution(
    bank: &SqueezerBank,
    interf: &Interferometer,
    output: &FockPattern,
) -> Result<f64> {
    check_modes("output pattern", output.modes(), interf.modes())?;
    let (states, _) = per_source_states(bank, interf)?;
    if states.is_empty() {
        return Ok(if output.total() == 0 { 1.0 } else { 0.0 });
    }
    convolve(&states, output)
}

fn convolve(states: &[GaussianState], remaining: &FockPattern) -> Result<f64> {
    let (first, rest) = states.split_first().expect("non-empty");
    if rest.is_empty() {
        return prob_gbs(first, remaining);
    }
    let mut total = 0.0;
    for size in (0..=remaining.total()).step_by(2) {
        for h in sub_patterns(remaining, size) {
            let p = prob_gbs(first, &h)?;
            if p != 0.0 {
                total += p * convolve(rest, &difference(remaining, &h))?;
            }
        }
    }
    Ok(total)
}

/// Distinct patterns `h ≤ k` (elementwise) with `size` photons.
fn sub_patterns(k: &FockPattern, size: usize) -> Vec<FockPattern> {
    let occ = k.occupations();
    let mut out = Vec::new();
    let mut cur = vec![0usize; occ.len()];
    fn rec(
        occ: &[usize],
        i: usize,
        left: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<FockPattern>,
    ) {
        if i == occ.len() {
            if left == 0 {
                out.push(FockPattern::new(cur.clone()));
            }
            return;
        }
        for c in 0..=occ[i].min(left) {
            cur[i] = c;
            rec(occ, i + 1, left - c, cur, out);
        }
        cur[i] = 0;
    }
    rec(occ, 0, size, &mut cur, &mut out);
    out
}

fn difference(k: &FockPattern, h: &FockPattern) -> FockPattern {
    FockPattern::new(
        k.occupations()
            .iter()
            .zip(h.occupations())
            .map(|(a, b)| a - b)
            .collect(),
    )
}

/// Pure squeezed state of the doubled network realising two-mode squeezed
/// inputs on the rows of `t`, each pair squeezed by the matching entry of
/// `bank`.
pub fn tms_doubled_state(bank: &SqueezerBank, t: &ComplexMatrix) -> Result<GaussianState> {
    check_modes("squeezer bank", bank.len(), t.rows())?;
    let d = doubled_gbs_circuit(t);
    let xi: Vec<f64> = bank.values().iter().chain(bank.values()).copied().collect();
    squeezed_state_from_transfer(&d, &xi)
}

/// Two-mode squeezed model: the doubled-network GBS law summed over every
/// split `x = h + k` with `|h| = |k| = |x|/2`.
pub fn prob_tms(bank: &SqueezerBank, t: &ComplexMatrix, output: &FockPattern) -> Result<f64> {
    let state = tms_doubled_state(bank, t)?;
    prob_tms_with_state(&state, output)
}

pub(crate) fn prob_tms_with_state(state: &GaussianState, output: &FockPattern) -> Result<f64> {
    let m = state.modes() / 2;
    check_modes("output pattern", output.modes(), m)?;
    let n = output.total();
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for h in sub_patterns(output, n / 2) {
        let k = difference(output, &h);
        total += prob_gbs(state, &h.concat(&k))?;
    }
    Ok(total)
}

/// `1 / |domain|` for patterns inside `domain`, zero elsewhere.
pub fn prob_uniform(m: usize, domain: Domain, output: &FockPattern) -> Result<f64> {
    check_modes("output pattern", output.modes(), m)?;
    let size = domain_size(m, domain);
    if size == 0 {
        return Err(Error::InvalidParameter(format!(
            "domain {domain} is empty over {m} modes"
        )));
    }
    Ok(if domain.contains(output) {
        1.0 / size as f64
    } else {
        0.0
    })
}

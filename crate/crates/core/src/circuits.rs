//! Linear-optical networks.
//!
//! Throughout the crate a unitary is stored with rows indexing input modes
//! and columns indexing output modes: `unitary[(i, o)]` is the amplitude for
//! a photon injected in input `i` to leave from output `o`. Selecting the
//! rows of the source modes therefore gives the rectangular transfer matrix
//! directly.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernels::{matrix_exp, ComplexMatrix};
use crate::C64;

const UNITARY_TOL: f64 = 1e-10;

/// Modes of the 12-mode device that receive the four sources.
pub const CENTRAL_INPUTS: [usize; 4] = [4, 5, 6, 7];

/// Seeded generator used for every stochastic step in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// An `m`-mode unitary together with the ordered set of modes fed by sources.
#[derive(Clone, Debug, PartialEq)]
pub struct Interferometer {
    unitary: ComplexMatrix,
    input_modes: Vec<usize>,
}

impl Interferometer {
    pub fn new(unitary: ComplexMatrix, input_modes: Vec<usize>) -> Result<Self> {
        let m = unitary.ensure_square()?;
        let err = unitary.unitarity_error();
        if err > UNITARY_TOL {
            return Err(Error::InvalidParameter(format!(
                "matrix is not unitary (‖UU†−I‖ = {err:e})"
            )));
        }
        if input_modes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "input modes must be strictly increasing".into(),
            ));
        }
        if let Some(&bad) = input_modes.iter().find(|&&i| i >= m) {
            return Err(Error::InvalidParameter(format!(
                "input mode {bad} out of range for {m} modes"
            )));
        }
        Ok(Self {
            unitary,
            input_modes,
        })
    }

    /// All modes used as inputs.
    pub fn full(unitary: ComplexMatrix) -> Result<Self> {
        let m = unitary.ensure_square()?;
        Self::new(unitary, (0..m).collect())
    }

    pub fn with_inputs(&self, input_modes: Vec<usize>) -> Result<Self> {
        Self::new(self.unitary.clone(), input_modes)
    }

    pub fn modes(&self) -> usize {
        self.unitary.rows()
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn input_modes(&self) -> &[usize] {
        &self.input_modes
    }

    /// 12-mode Haar-random circuit with sources on the four central modes.
    pub fn device_preset(seed: u64) -> Self {
        haar_random_unitary(12, seed)
            .and_then(|i| i.with_inputs(CENTRAL_INPUTS.to_vec()))
            .expect("preset dimensions are valid")
    }

    pub fn to_json(&self) -> Result<String> {
        let (unitary_re, unitary_im) = self.unitary.to_re_im();
        let doc = InterferometerDoc {
            m: self.modes(),
            unitary_re,
            unitary_im,
            input_modes: self.input_modes.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: InterferometerDoc = serde_json::from_str(s)?;
        let u = ComplexMatrix::from_re_im(&doc.unitary_re, &doc.unitary_im)?;
        if u.rows() != doc.m || u.cols() != doc.m {
            return Err(Error::DimensionMismatch(format!(
                "declared m = {} but matrix is {}x{}",
                doc.m,
                u.rows(),
                u.cols()
            )));
        }
        Self::new(u, doc.input_modes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// On-disk layout of an interferometer.
#[derive(Serialize, Deserialize)]
struct InterferometerDoc {
    m: usize,
    unitary_re: Vec<Vec<f64>>,
    unitary_im: Vec<Vec<f64>>,
    input_modes: Vec<usize>,
}

/// Haar-random `m×m` unitary with every mode used as an input.
pub fn haar_random_unitary(m: usize, seed: u64) -> Result<Interferometer> {
    let mut rng = seeded_rng(seed);
    haar_random_unitary_with_rng(m, &mut rng)
}

/// QR decomposition of a complex Ginibre matrix, with the phases of `R`'s
/// diagonal absorbed into `Q` so the result is Haar distributed.
pub fn haar_random_unitary_with_rng<R: Rng + ?Sized>(
    m: usize,
    rng: &mut R,
) -> Result<Interferometer> {
    if m == 0 {
        return Err(Error::InvalidParameter("mode count must be at least 1".into()));
    }
    let g = DMatrix::from_fn(m, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let u = ComplexMatrix::from_fn(m, m, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        q[(i, j)] * phase
    });
    Interferometer::full(u)
}

/// Continuous quantum walk on a linear array of evanescently coupled
/// waveguides: `U = exp(i · length · H)` with `H` tridiagonal, holding the
/// propagation constants on the diagonal and the nearest-neighbour coupling
/// rates off the diagonal.
pub fn coupled_waveguide_unitary(
    couplings: &[f64],
    propagation_phases: &[f64],
    length: f64,
) -> Result<Interferometer> {
    let m = propagation_phases.len();
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one waveguide".into()));
    }
    if couplings.len() + 1 != m {
        return Err(Error::DimensionMismatch(format!(
            "{} couplings for {m} waveguides",
            couplings.len()
        )));
    }
    if couplings
        .iter()
        .chain(propagation_phases)
        .chain(std::iter::once(&length))
        .any(|x| !x.is_finite())
    {
        return Err(Error::NonFinite);
    }
    let h = ComplexMatrix::from_fn(m, m, |i, j| {
        if i == j {
            C64::new(propagation_phases[i], 0.0)
        } else if i + 1 == j {
            C64::new(couplings[i], 0.0)
        } else if j + 1 == i {
            C64::new(couplings[j], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Interferometer::full(matrix_exp(&h, length)?)
}

/// `k_in × m` transfer matrix: the rows of the unitary for the source modes.
pub fn transfer_matrix(interf: &Interferometer) -> ComplexMatrix {
    interf.unitary.select_rows(&interf.input_modes)
}

/// Phase shifter `diag(1, i)` followed by the beam splitter
/// `[[1, 1], [-1, 1]]/√2`, as a column-convention 2×2 matrix.
fn tms_pair_block() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    let bs = ComplexMatrix::from_fn(2, 2, |i, j| {
        C64::new(if i == 1 && j == 0 { -s } else { s }, 0.0)
    });
    let ps = ComplexMatrix::from_diagonal(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
    bs.matmul(&ps)
}

/// Doubled network that realises two-mode squeezed inputs from pairs of
/// single-mode squeezers: each source pair `(j, k + j)` passes through a
/// phase shifter and a balanced beam splitter, after which the top copy
/// `0..k` enters `T` on outputs `0..m` and the bottom copy enters an
/// identical `T` on outputs `m..2m`.
///
/// The returned `2k × 2m` matrix follows the row-as-input convention, so
/// each pair block appears transposed relative to the column-convention
/// product `U_bs · U_ps`.
pub fn doubled_gbs_circuit(t: &ComplexMatrix) -> ComplexMatrix {
    let k = t.rows();
    let g = tms_pair_block();
    let mut pairs = ComplexMatrix::zeros(2 * k, 2 * k);
    for j in 0..k {
        let idx = [j, k + j];
        for a in 0..2 {
            for b in 0..2 {
                pairs[(idx[a], idx[b])] = g[(b, a)];
            }
        }
    }
    pairs.matmul(&t.direct_sum(t))
}

use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::C64;

/// Largest dimension accepted by [`permanent`].
pub const PERMANENT_CAP: usize = 18;

/// Size above which the 2^n-term sum switches to compensated accumulation.
const KAHAN_THRESHOLD: usize = 10;

/// Permanent of a square matrix with the default dimension cap.
pub fn permanent(m: &ComplexMatrix) -> Result<C64> {
    permanent_with_cap(m, PERMANENT_CAP)
}

/// Permanent via Glynn's formula with Gray-code ordering of the sign
/// vectors, `O(2^(n-1) · n)`.
///
/// `Perm(A) = 2^{1-n} Σ_δ (∏_k δ_k) ∏_j Σ_i δ_i a_ij` with `δ_0 = +1`.
pub fn permanent_with_cap(m: &ComplexMatrix, cap: usize) -> Result<C64> {
    let n = m.ensure_square()?;
    if n > cap {
        return Err(Error::ExceedsCap {
            what: "permanent",
            dim: n,
            cap,
        });
    }
    match n {
        0 => return Ok(C64::new(1.0, 0.0)),
        1 => return Ok(m[(0, 0)]),
        2 => return Ok(m[(0, 0)] * m[(1, 1)] + m[(0, 1)] * m[(1, 0)]),
        _ => {}
    }

    // Column sums with every δ_i = +1.
    let mut colsum: Vec<C64> = (0..n).map(|j| (0..n).map(|i| m[(i, j)]).sum()).collect();
    let mut delta = vec![1.0f64; n];
    let mut sign = 1.0f64;

    let mut acc = KahanSum::new(n > KAHAN_THRESHOLD);
    acc.add(colsum.iter().product());

    let steps: u64 = 1u64 << (n - 1);
    for g in 1..steps {
        // Row to flip: position of the lowest set bit of the Gray step, offset
        // by one because row 0 keeps δ = +1.
        let row = g.trailing_zeros() as usize + 1;
        let d = delta[row];
        let r = m.row(row);
        for (c, a) in colsum.iter_mut().zip(r) {
            *c -= a * (2.0 * d);
        }
        delta[row] = -d;
        sign = -sign;
        let prod: C64 = colsum.iter().product();
        acc.add(prod * sign);
    }
    Ok(acc.value() / (steps as f64))
}

/// Optionally compensated complex summation.
pub(crate) struct KahanSum {
    compensated: bool,
    sum: C64,
    carry: C64,
}

impl KahanSum {
    pub(crate) fn new(compensated: bool) -> Self {
        Self {
            compensated,
            sum: C64::new(0.0, 0.0),
            carry: C64::new(0.0, 0.0),
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, x: C64) {
        if !self.compensated {
            self.sum += x;
            return;
        }
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> C64 {
        self.sum
    }
}

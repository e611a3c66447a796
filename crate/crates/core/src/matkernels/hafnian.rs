use super::permanent::KahanSum;
use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::C64;

/// Largest dimension accepted by [`hafnian`].
pub const HAFNIAN_CAP: usize = 16;

/// Entrywise tolerance on `|M - Mᵀ|`.
const SYMMETRY_TOL: f64 = 1e-10;

pub fn hafnian(m: &ComplexMatrix) -> Result<C64> {
    hafnian_with_cap(m, HAFNIAN_CAP)
}

/// Hafnian by recursion on the first unmatched index: the index is paired
/// with every remaining one and the rest is matched recursively. The
/// diagonal never enters the sum.
pub fn hafnian_with_cap(m: &ComplexMatrix, cap: usize) -> Result<C64> {
    let n = m.ensure_square()?;
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    if n > cap {
        return Err(Error::ExceedsCap {
            what: "hafnian",
            dim: n,
            cap,
        });
    }
    let asym = m.symmetry_error();
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    Ok(haf_rec(m, full, n > 10))
}

fn haf_rec(m: &ComplexMatrix, mask: u32, compensated: bool) -> C64 {
    if mask == 0 {
        return C64::new(1.0, 0.0);
    }
    let i = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << i);
    if rest.count_ones() == 1 {
        let j = rest.trailing_zeros() as usize;
        return m[(i, j)];
    }
    let mut acc = KahanSum::new(compensated);
    let mut others = rest;
    while others != 0 {
        let j = others.trailing_zeros() as usize;
        others &= others - 1;
        let a = m[(i, j)];
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        acc.add(a * haf_rec(m, rest & !(1 << j), false));
    }
    acc.value()
}

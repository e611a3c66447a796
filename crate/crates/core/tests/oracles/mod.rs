//! Brute-force reference implementations used only by tests. None of them
//! call the library's kernels.
#![allow(dead_code)]

use bosamp_core::{ComplexMatrix, FockPattern, C64};
use nalgebra::DMatrix;

/// Permanent as a sum over all `n!` permutations.
pub fn perm_factorial(a: &ComplexMatrix) -> C64 {
    let n = a.rows();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut total = C64::new(0.0, 0.0);
    permute(&mut idx, 0, &mut |p| {
        total += (0..n).map(|i| a[(i, p[i])]).product::<C64>();
    });
    total
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Hafnian as a sum over perfect matchings.
pub fn haf_matchings(a: &ComplexMatrix) -> C64 {
    fn rec(a: &ComplexMatrix, rest: &[usize]) -> C64 {
        let Some((&first, tail)) = rest.split_first() else {
            return C64::new(1.0, 0.0);
        };
        let mut s = C64::new(0.0, 0.0);
        for (j, &partner) in tail.iter().enumerate() {
            let remaining: Vec<usize> = tail
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &x)| x)
                .collect();
            s += a[(first, partner)] * rec(a, &remaining);
        }
        s
    }
    assert!(a.rows() % 2 == 0);
    rec(a, &(0..a.rows()).collect::<Vec<_>>())
}

/// Single-mode squeezed vacuum `exp(−ξ/2 (a†² − a²))|0⟩` in a Fock space
/// truncated at `dim` levels.
pub fn squeezed_vacuum(xi: f64, dim: usize) -> Vec<C64> {
    let mut k = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..dim.saturating_sub(2) {
        let amp = ((n + 1) as f64 * (n + 2) as f64).sqrt() * xi / 2.0;
        // a†² |n⟩ = √((n+1)(n+2)) |n+2⟩
        k[(n + 2, n)] -= C64::new(amp, 0.0);
        k[(n, n + 2)] += C64::new(amp, 0.0);
    }
    let u = k.exp();
    (0..dim).map(|i| u[(i, 0)]).collect()
}

/// Photon-number law after sending the state through a beam splitter of
/// transmission `eta`.
pub fn thinned_law(p: &[f64], eta: f64, max_n: usize) -> Vec<f64> {
    let mut out = vec![0.0; max_n + 1];
    for (n, &pn) in p.iter().enumerate() {
        for (k, o) in out.iter_mut().enumerate().take(n.min(max_n) + 1) {
            let binom = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
            *o += pn * binom * eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32);
        }
    }
    out
}

/// All occupation vectors of `m` modes with `total` photons.
pub fn sector(m: usize, total: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![total]];
    }
    (0..=total)
        .rev()
        .flat_map(|first| {
            sector(m - 1, total - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// `exp(Σ G_oi a_o† a_i)` restricted to the `total`-photon sector, so that
/// `a_i† → Σ_o exp(G)_oi a_o†`.
pub fn passive_operator(g: &DMatrix<f64>, basis: &[Vec<usize>]) -> DMatrix<C64> {
    let d = basis.len();
    let mut k = DMatrix::<C64>::zeros(d, d);
    for (col, state) in basis.iter().enumerate() {
        for i in 0..g.ncols() {
            if state[i] == 0 {
                continue;
            }
            for o in 0..g.nrows() {
                if g[(o, i)] == 0.0 {
                    continue;
                }
                let mut next = state.clone();
                let mut amp = (state[i] as f64).sqrt();
                next[i] -= 1;
                amp *= (next[o] as f64 + 1.0).sqrt();
                next[o] += 1;
                let row = basis.iter().position(|b| *b == next).expect("same sector");
                k[(row, col)] += C64::new(g[(o, i)] * amp, 0.0);
            }
        }
    }
    k.exp()
}

/// Output photon statistics of single-mode squeezers followed by the
/// passive network generated by the real antisymmetric `g`, evolved in
/// Fock space one photon-number sector at a time.
pub struct FockOracle {
    g: DMatrix<f64>,
    amps: Vec<Vec<C64>>,
    sectors: Vec<(Vec<Vec<usize>>, DMatrix<C64>)>,
}

impl FockOracle {
    pub fn new(g: &DMatrix<f64>, xi: &[f64], max_n: usize) -> Self {
        let dim = max_n + 40;
        let amps = xi.iter().map(|&x| squeezed_vacuum(x, dim)).collect();
        let sectors = (0..=max_n)
            .map(|n| {
                let basis = sector(xi.len(), n);
                let op = passive_operator(g, &basis);
                (basis, op)
            })
            .collect();
        Self {
            g: g.clone(),
            amps,
            sectors,
        }
    }

    /// `|⟨n| R(exp G) S(ξ) |0⟩|²`.
    pub fn probability(&self, pattern: &FockPattern) -> f64 {
        let (basis, op) = &self.sectors[pattern.total()];
        let m = self.g.nrows();
        let input = nalgebra::DVector::from_iterator(
            basis.len(),
            basis
                .iter()
                .map(|s| (0..m).map(|i| self.amps[i][s[i]]).product::<C64>()),
        );
        let out = op * input;
        let row = basis
            .iter()
            .position(|b| b.as_slice() == pattern.occupations())
            .expect("pattern in sector");
        out[row].norm_sqr()
    }
}

/// Joint probability of `y` on the `2m` outputs of `T ⊕ T` fed by two-mode
/// squeezers whose halves sit on rows `j` and `k + j`.
fn tms_joint(t: &ComplexMatrix, xi: &[f64], y: &[usize]) -> f64 {
    let (k, m) = (t.rows(), t.cols());
    let mut b = DMatrix::<C64>::zeros(2 * k, 2 * k);
    for (j, x) in xi.iter().enumerate() {
        b[(j, k + j)] = C64::new(x.tanh(), 0.0);
        b[(k + j, j)] = C64::new(x.tanh(), 0.0);
    }
    let mut w = DMatrix::<C64>::zeros(2 * m, 2 * k);
    for i in 0..k {
        for o in 0..m {
            w[(o, i)] = t[(i, o)];
            w[(m + o, k + i)] = t[(i, o)];
        }
    }
    let bo = &w * b * w.transpose();
    let idx: Vec<usize> = y
        .iter()
        .enumerate()
        .flat_map(|(mode, &c)| std::iter::repeat_n(mode, c))
        .collect();
    if idx.len() % 2 == 1 {
        return 0.0;
    }
    let sub = ComplexMatrix::from_fn(idx.len(), idx.len(), |r, c| bo[(idx[r], idx[c])]);
    let fact: f64 = y.iter().map(|&c| (1..=c).product::<usize>() as f64).product();
    let norm: f64 = xi.iter().map(|x| x.cosh().powi(2)).product();
    haf_matchings(&sub).norm_sqr() / (fact * norm)
}

/// TMS output law on the `m` detected modes: the joint law summed over
/// every split of `x` into equal halves between the two copies.
pub fn tms_direct(t: &ComplexMatrix, xi: &[f64], x: &FockPattern) -> f64 {
    let occ = x.occupations();
    if x.total() % 2 == 1 {
        return 0.0;
    }
    let half = x.total() / 2;
    let mut total = 0.0;
    for h in sector(occ.len(), half) {
        if h.iter().zip(occ).any(|(a, b)| a > b) {
            continue;
        }
        let mut y = h.clone();
        y.extend(occ.iter().zip(&h).map(|(a, b)| a - b));
        total += tms_joint(t, xi, &y);
    }
    total
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernels::FockPattern;

/// Largest pattern set that will be enumerated.
pub const MAX_DOMAIN_SIZE: usize = 1_000_000;

/// Set of output patterns over which a distribution is tabulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    /// Exactly `n` photons, at most one per mode.
    CollisionFree { n: usize },
    /// Exactly `n` photons, at most two per mode.
    MaxOccupancy2 { n: usize },
    /// Exactly `n` photons, any occupancy.
    Exact { n: usize },
    /// Every pattern with at most `max_n` photons in total.
    Truncated { max_n: usize },
    /// Click patterns observed behind pseudo number-resolving detectors fed
    /// by patterns of `n` photons with at most two per mode.
    PseudoPnr { n: usize },
}

impl Domain {
    /// Per-mode occupation cap and the inclusive range of photon totals.
    fn shape(&self) -> (Option<usize>, usize, usize) {
        match *self {
            Domain::CollisionFree { n } => (Some(1), n, n),
            Domain::MaxOccupancy2 { n } => (Some(2), n, n),
            Domain::Exact { n } => (None, n, n),
            Domain::Truncated { max_n } => (None, 0, max_n),
            Domain::PseudoPnr { n } => (Some(2), n.div_ceil(2), n),
        }
    }

    pub fn contains(&self, p: &FockPattern) -> bool {
        let (cap, lo, hi) = self.shape();
        let total = p.total();
        (lo..=hi).contains(&total) && cap.is_none_or(|c| p.max_occupancy() <= c)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::CollisionFree { n } => write!(f, "collision-free-{n}"),
            Domain::MaxOccupancy2 { n } => write!(f, "max-occupancy-2-{n}"),
            Domain::Exact { n } => write!(f, "exact-{n}"),
            Domain::Truncated { max_n } => write!(f, "full-truncated-{max_n}"),
            Domain::PseudoPnr { n } => write!(f, "pseudo-pnr-{n}"),
        }
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown domain tag {s:?}"));
        let (head, num) = s.rsplit_once('-').ok_or_else(bad)?;
        let k: usize = num.parse().map_err(|_| bad())?;
        match head {
            "collision-free" => Ok(Domain::CollisionFree { n: k }),
            "max-occupancy-2" => Ok(Domain::MaxOccupancy2 { n: k }),
            "exact" => Ok(Domain::Exact { n: k }),
            "full-truncated" => Ok(Domain::Truncated { max_n: k }),
            "pseudo-pnr" => Ok(Domain::PseudoPnr { n: k }),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Domain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of ways to place `n` photons in `m` modes with at most `cap` each.
fn count_fixed(m: usize, n: usize, cap: Option<usize>) -> u128 {
    // ways[t] = placements of t photons in the modes seen so far.
    let mut ways = vec![0u128; n + 1];
    ways[0] = 1;
    for _ in 0..m {
        let mut next = vec![0u128; n + 1];
        for (t, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let hi = cap.map_or(n - t, |c| c.min(n - t));
            for k in 0..=hi {
                next[t + k] = next[t + k].saturating_add(w);
            }
        }
        ways = next;
    }
    ways[n]
}

/// Size of a domain over `m` modes, computed without enumerating it.
pub fn domain_size(m: usize, domain: Domain) -> u128 {
    let (cap, lo, hi) = domain.shape();
    (lo..=hi).map(|n| count_fixed(m, n, cap)).sum()
}

/// All patterns of `domain` over `m` modes.
///
/// Within a fixed photon number, patterns are ordered lexicographically by
/// their sorted list of occupied modes, so collision-free triples run
/// `{0,1,2}, {0,1,3}, …`. Truncated domains list photon numbers in
/// increasing order.
pub fn enumerate_patterns(m: usize, domain: Domain) -> Result<Vec<FockPattern>> {
    let size = domain_size(m, domain);
    if size > MAX_DOMAIN_SIZE as u128 {
        return Err(Error::DomainTooLarge {
            size,
            limit: MAX_DOMAIN_SIZE,
        });
    }
    let (cap, lo, hi) = domain.shape();
    let mut out = Vec::with_capacity(size as usize);
    for n in lo..=hi {
        let mut list = Vec::with_capacity(n);
        let mut occ = vec![0usize; m];
        push_lists(m, n, cap, 0, &mut list, &mut occ, &mut out);
    }
    Ok(out)
}

fn push_lists(
    m: usize,
    n: usize,
    cap: Option<usize>,
    start: usize,
    list: &mut Vec<usize>,
    occ: &mut [usize],
    out: &mut Vec<FockPattern>,
) {
    if list.len() == n {
        out.push(FockPattern::new(occ.to_vec()));
        return;
    }
    for mode in start..m {
        if cap.is_some_and(|c| occ[mode] >= c) {
            continue;
        }
        occ[mode] += 1;
        list.push(mode);
        push_lists(m, n, cap, mode, list, occ, out);
        list.pop();
        occ[mode] -= 1;
    }
}

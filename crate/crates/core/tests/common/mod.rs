//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use stochflux::prob::{Polynomial, ProbExpr, Term};
use stochflux::RingConfig;

pub fn cfg(s: &str) -> RingConfig {
    s.parse().expect("valid configuration")
}

/// Cyclic occurrences of `pattern` counted site by site.
pub fn count_pattern(sites: &[u8], pattern: &[u8]) -> usize {
    let l = sites.len();
    (0..l)
        .filter(|&i| pattern.iter().enumerate().all(|(k, &p)| sites[(i + k) % l] == p))
        .count()
}

pub fn all_configs(len: usize) -> impl Iterator<Item = RingConfig> {
    (0u64..(1 << len)).map(move |bits| RingConfig::from_bits(bits, len).unwrap())
}

/// Particle blocks of a ring as `(start, length)`; `None` for the full ring.
fn blocks(sites: &[u8]) -> Option<Vec<(usize, usize)>> {
    let l = sites.len();
    if sites.iter().all(|&s| s == 1) {
        return None;
    }
    let mut out = Vec::new();
    for start in 0..l {
        if sites[start] == 1 && sites[(start + l - 1) % l] == 0 {
            let mut len = 0;
            while sites[(start + len) % l] == 1 {
                len += 1;
            }
            out.push((start, len));
        }
    }
    Some(out)
}

/// One step of the stochastic v-system stated as a particle motion rule:
/// a lone particle hops right, the two particles of a pair stay, and the
/// rightmost particle of a longer block hops right with probability α.
/// Returns every successor with its probability.
pub fn motion_rule_outcomes(c: &RingConfig) -> BTreeMap<RingConfig, ProbExpr> {
    let sites = c.sites();
    let l = sites.len();
    let mut out = BTreeMap::new();
    let Some(blocks) = blocks(sites) else {
        out.insert(c.clone(), ProbExpr::one());
        return out;
    };
    let sure: Vec<usize> = blocks.iter().filter(|b| b.1 == 1).map(|b| b.0).collect();
    let maybe: Vec<usize> = blocks
        .iter()
        .filter(|b| b.1 >= 3)
        .map(|b| (b.0 + b.1 - 1) % l)
        .collect();
    let s = maybe.len() as u32;
    for mask in 0u32..(1 << s) {
        let mut next = sites.to_vec();
        let movers = sure
            .iter()
            .copied()
            .chain(maybe.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &p)| p));
        for p in movers {
            next[p] = 0;
            next[(p + 1) % l] = 1;
        }
        let hops = mask.count_ones();
        out.entry(RingConfig::new(next).unwrap())
            .or_insert_with(ProbExpr::zero)
            .add_term(Term::new(1, hops, s - hops));
    }
    out
}

/// One step of the u-system as a motion rule: a lone particle stays, both
/// particles of a pair hop right, and in a longer block every particle but
/// the leftmost hops right. With `stochastic`, the leftmost particle of a
/// longer block also hops with probability 1-α.
pub fn u_motion_outcomes(c: &RingConfig, stochastic: bool) -> BTreeMap<RingConfig, ProbExpr> {
    let sites = c.sites();
    let l = sites.len();
    let mut out = BTreeMap::new();
    let Some(blocks) = blocks(sites) else {
        out.insert(c.clone(), ProbExpr::one());
        return out;
    };
    let long: Vec<(usize, usize)> = blocks.iter().copied().filter(|b| b.1 >= 3).collect();
    let s = if stochastic { long.len() as u32 } else { 0 };
    for mask in 0u32..(1 << s) {
        let mut movers = Vec::new();
        for &(start, len) in &blocks {
            match len {
                1 => {}
                2 => movers.extend([start, (start + 1) % l]),
                _ => {
                    let k = long.iter().position(|b| b.0 == start).unwrap();
                    let first = if stochastic && mask & (1 << k) != 0 { 0 } else { 1 };
                    movers.extend((first..len).map(|d| (start + d) % l));
                }
            }
        }
        let mut next = sites.to_vec();
        for &p in &movers {
            next[p] = 0;
        }
        for &p in &movers {
            next[(p + 1) % l] = 1;
        }
        let hops = mask.count_ones();
        out.entry(RingConfig::new(next).unwrap())
            .or_insert_with(ProbExpr::zero)
            .add_term(Term::new(1, s - hops, hops));
    }
    out
}

/// Brute-force `N(k1, k2)` per sector for every ring of length `len`.
pub fn brute_partition(len: usize) -> BTreeMap<(usize, usize), BTreeMap<(usize, usize), u128>> {
    let mut out: BTreeMap<(usize, usize), BTreeMap<(usize, usize), u128>> = BTreeMap::new();
    for c in all_configs(len) {
        let s = c.sites();
        let m1 = s.iter().filter(|&&x| x == 1).count();
        let m110 = count_pattern(s, &[1, 1, 0]);
        let k1 = count_pattern(s, &[1, 1, 1, 0]);
        let k2 = count_pattern(s, &[0, 1, 0]);
        *out.entry((m1, m110)).or_default().entry((k1, k2)).or_default() += 1;
    }
    out
}

/// Polynomial from a short hand-written expression in `a` (for α).
pub fn poly(expr: &str) -> Polynomial {
    let c = |v: &[i64]| Polynomial::from_coeffs(v.iter().map(|&x| BigInt::from(x)).collect());
    match expr {
        "0" => c(&[]),
        "1" => c(&[1]),
        "a" => c(&[0, 1]),
        "1-a" => c(&[1, -1]),
        "a^2" => c(&[0, 0, 1]),
        "(1-a)^2" => c(&[1, -2, 1]),
        "(1-a)a" => c(&[0, 1, -1]),
        "2a(1-a)" => c(&[0, 2, -2]),
        other => panic!("unsupported expression {other}"),
    }
}

pub const OMEGA1: [&str; 8] = [
    "0001101111",
    "0001110111",
    "0001111011",
    "0010110111",
    "0010111011",
    "0011011101",
    "0011101101",
    "0101011011",
];

pub const OMEGA2: [&str; 5] = ["0011001111", "0011010111", "0011100111", "0011101011", "0101101011"];

pub const OMEGA1_MATRIX: [[&str; 8]; 8] = [
    ["1-a", "0", "0", "0", "0", "a", "0", "0"],
    ["(1-a)a", "(1-a)^2", "0", "0", "0", "a^2", "(1-a)a", "0"],
    ["0", "a", "1-a", "0", "0", "0", "0", "0"],
    ["0", "1-a", "0", "0", "0", "0", "a", "0"],
    ["0", "a", "1-a", "0", "0", "0", "0", "0"],
    ["0", "0", "0", "1-a", "0", "0", "0", "a"],
    ["0", "0", "0", "a", "1-a", "0", "0", "0"],
    ["0", "0", "0", "0", "1", "0", "0", "0"],
];

pub const OMEGA2_MATRIX: [[&str; 5]; 5] = [
    ["1-a", "0", "0", "a", "0"],
    ["1-a", "0", "0", "a", "0"],
    ["0", "2a(1-a)", "(1-a)^2", "0", "a^2"],
    ["0", "a", "1-a", "0", "0"],
    ["0", "0", "1", "0", "0"],
];

/// Unnormalized left eigenvectors for eigenvalue 1, as `(c, i, k)` meaning
/// `c * α^i * (1-α)^k` with possibly negative exponents.
pub type Component = (f64, i32, i32);

pub const OMEGA1_EIGEN: [Component; 8] = [
    (1.0, -2, 1),
    (1.0, -2, 0),
    (1.0, -2, 1),
    (1.0, -1, 0),
    (1.0, -1, 0),
    (1.0, -1, 0),
    (1.0, -1, 0),
    (1.0, 0, 0),
];

pub const OMEGA2_EIGEN: [Component; 5] = [(2.0, -2, 1), (2.0, -1, 0), (1.0, -2, 0), (2.0, -1, 0), (1.0, 0, 0)];

pub const L16_MEMBERS: [&str; 30] = [
    "0011011011011111",
    "0011011011101111",
    "0011011011110111",
    "0011011011111011",
    "0011011101101111",
    "0011011101110111",
    "0011011101111011",
    "0011011110110111",
    "0011011110111011",
    "0011011111011011",
    "0011101101101111",
    "0011101101110111",
    "0011101101111011",
    "0011101110110111",
    "0011101110111011",
    "0011101111011011",
    "0011110110110111",
    "0011110110111011",
    "0011110111011011",
    "0011111011011011",
    "0101101101101111",
    "0101101101110111",
    "0101101101111011",
    "0101101110110111",
    "0101101110111011",
    "0101101111011011",
    "0101110110110111",
    "0101110110111011",
    "0101110111011011",
    "0101111011011011",
];

pub const L16_EIGEN: [Component; 30] = [
    (1.0, -1, 1),
    (1.0, -1, 0),
    (1.0, -1, 0),
    (1.0, -1, 1),
    (1.0, -1, 0),
    (1.0, -1, -1),
    (1.0, -1, 0),
    (1.0, -1, 0),
    (1.0, -1, 0),
    (1.0, -1, 1),
    (1.0, -1, 0),
    (1.0, -1, -1),
    (1.0, -1, 0),
    (1.0, -1, -1),
    (1.0, -1, -1),
    (1.0, -1, 0),
    (1.0, -1, 0),
    (1.0, -1, 0),
    (1.0, -1, 0),
    (1.0, -1, 1),
    (1.0, 0, 0),
    (1.0, 0, -1),
    (1.0, 0, 0),
    (1.0, 0, -1),
    (1.0, 0, -1),
    (1.0, 0, 0),
    (1.0, 0, -1),
    (1.0, 0, -1),
    (1.0, 0, -1),
    (1.0, 0, 0),
];

pub fn eigen_at(components: &[Component], alpha: f64) -> Vec<f64> {
    let raw: Vec<f64> = components
        .iter()
        .map(|&(c, i, k)| c * alpha.powi(i) * (1.0 - alpha).powi(k))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn max_rel_err(actual: &[f64], expected: &[f64]) -> f64 {
    assert_eq!(actual.len(), expected.len());
    actual
        .iter()
        .zip(expected)
        .map(|(a, e)| (a - e).abs() / e.abs())
        .fold(0.0, f64::max)
}

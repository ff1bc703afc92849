//! Cyclic binary configurations and the pattern algebra on them.
//!
//! A [`RingConfig`] is a string over `{0,1}` with periodic boundary; site 0 is
//! the leftmost character of its text form. Every pattern count in this crate
//! is cyclic: a window starting near the end wraps around to the start.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Largest ring length handled by the packed `u64` fast path.
pub const PACKED_MAX_LEN: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RingConfig {
    sites: Vec<u8>,
}

impl RingConfig {
    pub fn new(sites: Vec<u8>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("ring length must be at least 1"));
        }
        if let Some(pos) = sites.iter().position(|&s| s > 1) {
            return Err(Error::invalid(format!(
                "site {pos} has value {}, expected 0 or 1",
                sites[pos]
            )));
        }
        Ok(RingConfig { sites })
    }

    /// All-empty ring of length `len`.
    pub fn empty(len: usize) -> Result<Self> {
        RingConfig::new(vec![0; len])
    }

    pub(crate) fn from_sites_unchecked(sites: Vec<u8>) -> Self {
        debug_assert!(!sites.is_empty() && sites.iter().all(|&s| s <= 1));
        RingConfig { sites }
    }

    /// Unpacks `len` bits, site 0 taken from the most significant of them.
    pub fn from_bits(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > PACKED_MAX_LEN {
            return Err(Error::invalid(format!(
                "packed length must be in 1..={PACKED_MAX_LEN}, got {len}"
            )));
        }
        let sites = (0..len)
            .map(|i| ((bits >> (len - 1 - i)) & 1) as u8)
            .collect();
        Ok(RingConfig { sites })
    }

    /// Packed form with site 0 as the most significant bit, so numeric order
    /// agrees with the lexicographic order on strings.
    pub fn to_bits(&self) -> Option<u64> {
        if self.len() > PACKED_MAX_LEN {
            return None;
        }
        Some(self.sites.iter().fold(0u64, |acc, &s| (acc << 1) | s as u64))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self) -> &[u8] {
        &self.sites
    }

    /// Site value with the index taken modulo the ring length.
    #[inline]
    pub fn site(&self, index: isize) -> u8 {
        let l = self.sites.len() as isize;
        self.sites[index.rem_euclid(l) as usize]
    }

    pub fn particles(&self) -> usize {
        self.sites.iter().filter(|&&s| s == 1).count()
    }

    /// The string `c[k..] + c[..k]`.
    pub fn rotate_left(&self, k: usize) -> RingConfig {
        let mut sites = self.sites.clone();
        let l = sites.len();
        sites.rotate_left(k % l);
        RingConfig { sites }
    }

    /// Cyclic occurrence count of `pattern`, windows wrapping as many times
    /// as needed. Unlike [`count_cyclic_pattern`](Self::count_cyclic_pattern)
    /// this accepts patterns longer than the ring.
    pub fn count_wrapped(&self, pattern: &[u8]) -> usize {
        let l = self.sites.len();
        (0..l)
            .filter(|&i| {
                pattern
                    .iter()
                    .enumerate()
                    .all(|(t, &p)| self.sites[(i + t) % l] == p)
            })
            .count()
    }

    pub fn count_cyclic_pattern(&self, pattern: &[u8]) -> Result<PatternCount> {
        if pattern.is_empty() || pattern.len() > self.len() {
            return Err(Error::invalid(format!(
                "pattern length {} must be in 1..={}",
                pattern.len(),
                self.len()
            )));
        }
        if pattern.iter().any(|&p| p > 1) {
            return Err(Error::invalid("pattern must be binary"));
        }
        Ok(PatternCount {
            pattern: pattern.to_vec(),
            count: self.count_wrapped(pattern),
            len: self.len(),
        })
    }

    /// `(m1, m110)`: particle number and number of maximal blocks of length >= 2.
    pub fn conserved_pair(&self) -> (usize, usize) {
        (self.particles(), self.count_wrapped(&[1, 1, 0]))
    }

    /// `(m1110, m010)`, the exponents of the stationary weight.
    pub fn weight_exponents(&self) -> (usize, usize) {
        (self.count_wrapped(&[1, 1, 1, 0]), self.count_wrapped(&[0, 1, 0]))
    }

    /// Lexicographically least rotation.
    pub fn canonical_rotation(&self) -> RingConfig {
        let l = self.len();
        let best = (0..l)
            .min_by(|&a, &b| {
                let lhs = self.sites[a..].iter().chain(&self.sites[..a]);
                let rhs = self.sites[b..].iter().chain(&self.sites[..b]);
                lhs.cmp(rhs)
            })
            .unwrap_or(0);
        self.rotate_left(best)
    }

    /// Smallest `p` dividing `L` with `c` invariant under rotation by `p`.
    pub fn period(&self) -> usize {
        let l = self.len();
        (1..=l)
            .filter(|p| l.is_multiple_of(*p))
            .find(|&p| (0..l).all(|i| self.sites[i] == self.sites[(i + p) % l]))
            .unwrap_or(l)
    }

    /// Number of distinct rotations.
    pub fn orbit_size(&self) -> usize {
        self.period()
    }

    /// The ring read in reverse site order.
    pub fn reflect(&self) -> RingConfig {
        let mut sites = self.sites.clone();
        sites.reverse();
        RingConfig { sites }
    }
}

impl fmt::Display for RingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.sites {
            f.write_str(if s == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for RingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingConfig({self})")
    }
}

impl FromStr for RingConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sites = parse_word(s.trim())?;
        RingConfig::new(sites)
    }
}

/// Parses a binary word such as `"110"` into site values.
pub fn parse_word(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::invalid(format!(
                "unexpected character {other:?} in configuration"
            ))),
        })
        .collect()
}

/// Count of one cyclic pattern on a ring of length `len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternCount {
    pub pattern: Vec<u8>,
    pub count: usize,
    pub len: usize,
}

impl PatternCount {
    pub fn density(&self) -> Ratio<u64> {
        Ratio::new(self.count as u64, self.len as u64)
    }
}

/// A rotation-equivalence class of configurations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrbitClass {
    pub representative: RingConfig,
    pub orbit_size: usize,
}

impl OrbitClass {
    pub fn of(config: &RingConfig) -> OrbitClass {
        let representative = config.canonical_rotation();
        let orbit_size = representative.orbit_size();
        OrbitClass {
            representative,
            orbit_size,
        }
    }

    pub fn len(&self) -> usize {
        self.representative.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Domain `2*m110 <= m1 <= L - m110`; a necessary condition for a
/// nonempty sector.
pub fn within_domain(len: usize, m1: usize, m110: usize) -> bool {
    2 * m110 <= m1 && m1 + m110 <= len
}

/// Exact nonemptiness of the sector `(L, m1, m110)`.
///
/// Besides the domain inequalities, a ring with `m110 = 0` and
/// `L/2 < m1 < L` cannot exist: some two particles would be adjacent.
pub fn sector_nonempty(len: usize, m1: usize, m110: usize) -> bool {
    if len == 0 || !within_domain(len, m1, m110) {
        return false;
    }
    if m1 == 0 || m1 == len {
        return m110 == 0;
    }
    if m110 == 0 {
        return 2 * m1 <= len;
    }
    true
}

/// Bit-level helpers over rings packed by [`RingConfig::to_bits`].
pub mod packed {
    #[inline]
    pub fn mask(len: usize) -> u64 {
        if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        }
    }

    /// Rotation equivalent to `RingConfig::rotate_left(k)`.
    #[inline]
    pub fn rotate_left(x: u64, k: usize, len: usize) -> u64 {
        let k = k % len;
        if k == 0 {
            return x;
        }
        ((x << k) | (x >> (len - k))) & mask(len)
    }

    pub fn canonical(x: u64, len: usize) -> u64 {
        (0..len).map(|k| rotate_left(x, k, len)).min().unwrap_or(x)
    }

    /// Cyclic count of `pattern`, windows wrapping as often as needed.
    pub fn count(x: u64, len: usize, pattern: &[u8]) -> u32 {
        let m = mask(len);
        // acc bit (len-1-i) set iff the window starting at site i matches
        let mut acc = m;
        for (t, &p) in pattern.iter().enumerate() {
            let shifted = rotate_left(x, t, len);
            acc &= if p == 1 { shifted } else { !shifted & m };
        }
        acc.count_ones()
    }
}

//! Partition functions `N(k1, k2)` and the mean-flux formulas built on them.
//!
//! `k1` counts the cyclic pattern `1110` and `k2` the pattern `010`. Tables
//! count raw configurations: a rotation class contributes its orbit size.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::ensemble::OmegaSet;
use crate::error::{Error, Result};
use crate::ring::{sector_nonempty, within_domain, RingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Omega,
    Sector,
}

impl std::str::FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(Scope::Omega),
            "sector" => Ok(Scope::Sector),
            other => Err(Error::invalid(format!(
                "unknown scope {other:?}; expected omega or sector"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTable {
    pub scope: Scope,
    pub len: usize,
    pub m1: usize,
    pub m110: usize,
    /// `(k1, k2) -> N`, zero entries omitted.
    pub counts: BTreeMap<(usize, usize), u128>,
}

impl PartitionTable {
    pub fn new(scope: Scope, len: usize, m1: usize, m110: usize) -> Self {
        PartitionTable {
            scope,
            len,
            m1,
            m110,
            counts: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, k1: usize, k2: usize, n: u128) {
        if n > 0 {
            *self.counts.entry((k1, k2)).or_insert(0) += n;
        }
    }

    pub fn get(&self, k1: usize, k2: usize) -> u128 {
        self.counts.get(&(k1, k2)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u128 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Largest `k1 + k2` with a nonzero count.
    pub fn support_max(&self) -> Option<usize> {
        self.counts.keys().map(|(a, b)| a + b).max()
    }

    /// The bound `min(L - m1, m1 - 2 m110)`.
    pub fn kmax(&self) -> usize {
        kmax_unchecked(self.len, self.m1, self.m110)
    }

    /// Entry-wise sum with another table of the same sector.
    pub fn merge(&mut self, other: &PartitionTable) {
        for (&(k1, k2), &n) in &other.counts {
            self.add(k1, k2, n);
        }
    }
}

fn kmax_unchecked(len: usize, m1: usize, m110: usize) -> usize {
    (len - m1).min(m1 - 2 * m110)
}

pub fn kmax(len: usize, m1: usize, m110: usize) -> Result<usize> {
    if !within_domain(len, m1, m110) {
        return Err(Error::InfeasibleSector { l: len, m1, m110 });
    }
    Ok(kmax_unchecked(len, m1, m110))
}

pub fn partition_omega(omega: &OmegaSet) -> PartitionTable {
    let mut table = PartitionTable::new(Scope::Omega, omega.len, omega.m1, omega.m110);
    for class in &omega.members {
        let (k1, k2) = class.representative.weight_exponents();
        table.add(k1, k2, class.orbit_size as u128);
    }
    table
}

/// Per-(context, bit) increments `(Δm1, Δm110, Δk1, Δk2)` when `bit` is
/// appended after the 3-bit context `ctx = (s_{i-2}, s_{i-1}, s_i)`.
/// The 3-window is `(s_{i-1}, s_i, bit)`, the 4-window `(s_{i-2}, .., bit)`.
fn increments(ctx: usize, bit: usize) -> [usize; 4] {
    let three = ((ctx & 0b11) << 1) | bit;
    let four = (ctx << 1) | bit;
    [
        bit,
        usize::from(three == 0b110),
        usize::from(four == 0b1110),
        usize::from(three == 0b010),
    ]
}

/// Counter bounds and index strides for the dense DP layer.
struct Layout {
    m1: usize,
    m110: usize,
    k1: usize,
    k2: usize,
}

impl Layout {
    fn cells(&self) -> usize {
        8 * self.m1 * self.m110 * self.k1 * self.k2
    }

    #[inline]
    fn index(&self, ctx: usize, m1: usize, m110: usize, k1: usize, k2: usize) -> usize {
        (((m1 * self.m110 + m110) * self.k1 + k1) * self.k2 + k2) * 8 + ctx
    }
}

/// Cyclic transfer-matrix count of all rings of length `len >= 3`, bucketed
/// by `(m1, m110, k1, k2)`. `target` restricts to one sector and enables
/// pruning on the particle count.
fn transfer_dp(len: usize, target: Option<(usize, usize)>) -> BTreeMap<(usize, usize), PartitionTable> {
    debug_assert!(len >= 3);
    let (m1_max, m110_max) = target.unwrap_or((len, len / 2));
    // k1 <= m110 and m110 + k2 <= number of blocks <= L/2 hold for every
    // prefix; a single sector is further bounded by kmax.
    let (k1_max, k2_max) = match target {
        Some((m1, m110)) => {
            let k = kmax_unchecked(len, m1, m110);
            (m110.min(k), k)
        }
        None => (len / 2, len / 2),
    };
    let layout = Layout {
        m1: m1_max + 1,
        m110: m110_max + 1,
        k1: k1_max + 1,
        k2: k2_max + 1,
    };
    let inc: Vec<[usize; 4]> = (0..16).map(|i| increments(i >> 1, i & 1)).collect();
    let mut out: BTreeMap<(usize, usize), PartitionTable> = BTreeMap::new();

    let mut cur = vec![0u128; layout.cells()];
    let mut next = vec![0u128; layout.cells()];
    for init in 0..8usize {
        cur.iter_mut().for_each(|v| *v = 0);
        let m1 = init.count_ones() as usize;
        if m1 > m1_max {
            continue;
        }
        let m110 = usize::from(init == 0b110);
        let k2 = usize::from(init == 0b010);
        if m110 > m110_max || k2 >= layout.k2 {
            continue;
        }
        cur[layout.index(init, m1, m110, 0, k2)] = 1;

        for pos in 3..len {
            next.iter_mut().for_each(|v| *v = 0);
            // sites still to be appended after this one
            let remaining = len - 1 - pos;
            let m1_lo = if target.is_some() { m1_max.saturating_sub(remaining + 1) } else { 0 };
            let m1_hi = pos.min(m1_max);
            for m1 in m1_lo..=m1_hi {
                for m110 in 0..layout.m110.min(len / 2 + 1) {
                    for k1 in 0..layout.k1.min(m110 + 1) {
                        for k2 in 0..layout.k2.min(len / 2 + 1 - m110) {
                            let base = layout.index(0, m1, m110, k1, k2);
                            for ctx in 0..8 {
                                let n = cur[base + ctx];
                                if n == 0 {
                                    continue;
                                }
                                for bit in 0..2 {
                                    let d = inc[(ctx << 1) | bit];
                                    let (a, b, c, e) = (m1 + d[0], m110 + d[1], k1 + d[2], k2 + d[3]);
                                    if a >= layout.m1 || b >= layout.m110 || c >= layout.k1 || e >= layout.k2 {
                                        continue;
                                    }
                                    if target.is_some() && a + remaining < m1_max {
                                        continue;
                                    }
                                    let nctx = ((ctx << 1) | bit) & 0b111;
                                    next[layout.index(nctx, a, b, c, e)] += n;
                                }
                            }
                        }
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }

        // close the ring: re-read the first three sites
        let wrap = [(init >> 2) & 1, (init >> 1) & 1, init & 1];
        for m1 in 0..layout.m1 {
            for m110 in 0..layout.m110 {
                for k1 in 0..layout.k1 {
                    for k2 in 0..layout.k2 {
                        for ctx in 0..8 {
                            let n = cur[layout.index(ctx, m1, m110, k1, k2)];
                            if n == 0 {
                                continue;
                            }
                            let (mut c, mut a, mut b, mut e) = (ctx, m110, k1, k2);
                            for (t, &bit) in wrap.iter().enumerate() {
                                let d = inc[(c << 1) | bit];
                                if t < 2 {
                                    a += d[1];
                                    e += d[3];
                                }
                                b += d[2];
                                c = ((c << 1) | bit) & 0b111;
                            }
                            if let Some((t1, t110)) = target {
                                if m1 != t1 || a != t110 {
                                    continue;
                                }
                            }
                            out.entry((m1, a))
                                .or_insert_with(|| PartitionTable::new(Scope::Sector, len, m1, a))
                                .add(b, e, n);
                        }
                    }
                }
            }
        }
    }
    out
}

fn brute_tables(len: usize) -> BTreeMap<(usize, usize), PartitionTable> {
    let mut out: BTreeMap<(usize, usize), PartitionTable> = BTreeMap::new();
    for bits in 0u64..(1 << len) {
        let c = RingConfig::from_bits(bits, len).expect("short ring");
        let (m1, m110) = c.conserved_pair();
        let (k1, k2) = c.weight_exponents();
        out.entry((m1, m110))
            .or_insert_with(|| PartitionTable::new(Scope::Sector, len, m1, m110))
            .add(k1, k2, 1);
    }
    out
}

/// Sector-wide table of the sector `(len, m1, m110)`; empty when infeasible.
pub fn partition_sector_dp(len: usize, m1: usize, m110: usize) -> Result<PartitionTable> {
    if len == 0 {
        return Err(Error::invalid("ring length must be at least 1"));
    }
    if len > 120 {
        return Err(Error::invalid(format!(
            "L={len} exceeds the 128-bit count range (L <= 120)"
        )));
    }
    let empty = PartitionTable::new(Scope::Sector, len, m1, m110);
    if !sector_nonempty(len, m1, m110) {
        return Ok(empty);
    }
    let mut tables = if len < 3 {
        brute_tables(len)
    } else {
        transfer_dp(len, Some((m1, m110)))
    };
    Ok(tables.remove(&(m1, m110)).unwrap_or(empty))
}

/// Sector-wide tables of every nonempty sector of length `len`, from one DP pass.
pub fn partition_all_sectors_dp(len: usize) -> Result<Vec<PartitionTable>> {
    if len == 0 || len > 120 {
        return Err(Error::invalid(format!("L={len} must lie in 1..=120")));
    }
    let tables = if len < 3 { brute_tables(len) } else { transfer_dp(len, None) };
    Ok(tables.into_values().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxPoint {
    #[serde(rename = "L")]
    pub len: usize,
    pub m1: usize,
    pub m110: usize,
    pub alpha: f64,
    #[serde(rename = "Q_v")]
    pub q_v: f64,
    #[serde(rename = "Q_u")]
    pub q_u: f64,
}

fn check_open_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "alpha must lie in (0,1), got {alpha}; use q-deterministic or limit-check at the endpoints"
        )))
    }
}

/// Mean flux from the pattern-count weights, rescaled by `(1-α)^{kmax}`
/// so that nothing overflows as `α -> 1`.
pub fn q_theory(table: &PartitionTable, alpha: f64) -> Result<FluxPoint> {
    check_open_alpha(alpha)?;
    let top = table
        .support_max()
        .ok_or_else(|| Error::invalid("partition table is empty"))?;
    let mut entries: Vec<(&(usize, usize), &u128)> = table.counts.iter().collect();
    entries.sort_by_key(|(&(k1, k2), _)| std::cmp::Reverse(k1 + k2));
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (&(k1, k2), &n) in entries {
        let w = n as f64 * alpha.powi(k2 as i32) * (1.0 - alpha).powi((top - k1 - k2) as i32);
        num += (alpha * k1 as f64 + k2 as f64) * w;
        den += w;
    }
    let l = table.len as f64;
    let q_v = num / den / l;
    Ok(FluxPoint {
        len: table.len,
        m1: table.m1,
        m110: table.m110,
        alpha,
        q_v,
        q_u: table.m1 as f64 / l - q_v,
    })
}

/// Exact `Q_v` at rational `α ∈ (0,1)`.
pub fn q_theory_exact(table: &PartitionTable, alpha: &BigRational) -> Result<BigRational> {
    if *alpha <= BigRational::zero() || *alpha >= BigRational::one() {
        return Err(Error::invalid("alpha must lie in (0,1)"));
    }
    if table.is_empty() {
        return Err(Error::invalid("partition table is empty"));
    }
    let comp = BigRational::one() - alpha;
    let (mut num, mut den) = (BigRational::zero(), BigRational::zero());
    for (&(k1, k2), &n) in &table.counts {
        let w = BigRational::from_integer(BigInt::from(n)) * num_traits::pow(alpha.clone(), k2)
            / num_traits::pow(comp.clone(), k1 + k2);
        num += (alpha * BigRational::from_integer(k1.into()) + BigRational::from_integer(k2.into())) * &w;
        den += w;
    }
    Ok(num / den / BigRational::from_integer(table.len.into()))
}

/// `max(2ρ1 - 1, 2ρ110)`.
pub fn q_deterministic(rho1: Ratio<i64>, rho110: Ratio<i64>) -> Result<Ratio<i64>> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    let two = Ratio::from_integer(2);
    if rho110 < zero || two * rho110 > rho1 || rho1 > one - rho110 {
        return Err(Error::invalid(format!(
            "densities (rho1={rho1}, rho110={rho110}) violate 2*rho110 <= rho1 <= 1 - rho110"
        )));
    }
    Ok((two * rho1 - one).max(two * rho110))
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub alpha: f64,
    /// `ρ1 - Q_v`.
    pub q_u: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    #[serde(rename = "L")]
    pub len: usize,
    pub m1: usize,
    pub m110: usize,
    pub kmax: usize,
    pub target: f64,
    pub rows: Vec<LimitRow>,
    /// Linear extrapolation in `1-α` from the last two rows.
    pub extrapolated: f64,
    /// `ρ1 - Q_v` with the sums restricted to `k1 + k2 = kmax` at `α = 1`.
    #[serde(serialize_with = "ser_ratio")]
    pub dominant: Ratio<i64>,
    #[serde(serialize_with = "ser_ratio")]
    pub target_exact: Ratio<i64>,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl LimitReport {
    pub fn dominant_matches(&self) -> bool {
        self.dominant == self.target_exact
    }
}

pub const DEFAULT_LIMIT_ALPHAS: [f64; 4] = [0.9, 0.99, 0.999, 0.9999];

/// Dominant-term value `(m1 - Σ_diag (k1+k2) N / Σ_diag N) / L` on the
/// diagonal `k1 + k2 = kmax`; `None` if that diagonal is empty.
pub fn dominant_term(table: &PartitionTable) -> Option<Ratio<i64>> {
    let k = table.kmax();
    let diag: u128 = table
        .counts
        .iter()
        .filter(|(&(a, b), _)| a + b == k)
        .map(|(_, &n)| n)
        .sum();
    if diag == 0 {
        return None;
    }
    let weighted = BigInt::from(diag) * BigInt::from(k);
    let mean = BigRational::new(weighted, BigInt::from(diag));
    let value = (BigRational::from_integer(table.m1.into()) - mean)
        / BigRational::from_integer(table.len.into());
    Some(Ratio::new(value.numer().to_i64()?, value.denom().to_i64()?))
}

pub fn limit_check(len: usize, m1: usize, m110: usize, alphas: &[f64]) -> Result<LimitReport> {
    if !sector_nonempty(len, m1, m110) {
        return Err(Error::InfeasibleSector { l: len, m1, m110 });
    }
    let table = partition_sector_dp(len, m1, m110)?;
    limit_check_with(&table, alphas)
}

pub fn limit_check_with(table: &PartitionTable, alphas: &[f64]) -> Result<LimitReport> {
    let (len, m1, m110) = (table.len, table.m1, table.m110);
    let target_exact = q_deterministic(
        Ratio::new(m1 as i64, len as i64),
        Ratio::new(m110 as i64, len as i64),
    )?;
    let target = target_exact.to_f64().unwrap_or(f64::NAN);
    let rows = alphas
        .iter()
        .map(|&alpha| {
            let p = q_theory(table, alpha)?;
            Ok(LimitRow {
                alpha,
                q_u: p.q_u,
                deviation: p.q_u - target,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let extrapolated = match rows.as_slice() {
        [.., a, b] => {
            let (e1, e2) = (1.0 - a.alpha, 1.0 - b.alpha);
            b.q_u - (b.q_u - a.q_u) * e2 / (e2 - e1)
        }
        [only] => only.q_u,
        [] => f64::NAN,
    };
    let dominant = dominant_term(table).ok_or_else(|| {
        Error::Internal(format!(
            "no configuration of ({len}, {m1}, {m110}) attains k1 + k2 = {}",
            table.kmax()
        ))
    })?;
    Ok(LimitReport {
        len,
        m1,
        m110,
        kmax: table.kmax(),
        target,
        rows,
        extrapolated,
        dominant,
        target_exact,
    })
}

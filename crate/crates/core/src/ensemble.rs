//! Sector enumeration and decomposition into irreducible sets.
//!
//! A sector is the set of rotation classes sharing `(L, m1, m110)`. The
//! v-rule induces a directed graph on it; the closed strongly connected
//! components are the irreducible sets, everything else is transient.

use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::dynamics::{branch_outcomes, FluxRule, StepOutcome};
use crate::error::{Error, Result};
use crate::ring::{packed, sector_nonempty, OrbitClass, RingConfig, PACKED_MAX_LEN};

pub const DEFAULT_ENUMERATION_BOUND: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sector {
    pub len: usize,
    pub m1: usize,
    pub m110: usize,
    /// Sorted by canonical representative.
    pub classes: Vec<OrbitClass>,
}

impl Sector {
    /// Number of raw configurations: Σ orbit sizes.
    pub fn raw_count(&self) -> u128 {
        self.classes.iter().map(|c| c.orbit_size as u128).sum()
    }

    pub fn index_of(&self, rep: &RingConfig) -> Option<usize> {
        self.classes
            .binary_search_by(|c| c.representative.cmp(rep))
            .ok()
    }
}

/// Next integer with the same popcount (Gosper's hack).
fn next_same_popcount(x: u64) -> Option<u64> {
    let c = x & x.wrapping_neg();
    let r = x.checked_add(c)?;
    Some((((r ^ x) >> 2) / c) | r)
}

pub fn enumerate_sector(len: usize, m1: usize, m110: usize) -> Result<Sector> {
    enumerate_sector_bounded(len, m1, m110, DEFAULT_ENUMERATION_BOUND)
}

pub fn enumerate_sector_bounded(len: usize, m1: usize, m110: usize, bound: usize) -> Result<Sector> {
    if len == 0 || m1 > len {
        return Err(Error::invalid(format!(
            "need L >= 1 and 0 <= m1 <= L, got L={len}, m1={m1}"
        )));
    }
    if len > bound.min(PACKED_MAX_LEN - 1) {
        return Err(Error::invalid(format!(
            "L={len} exceeds the enumeration bound {bound}; use the transfer-matrix \
             partition function (`partition --scope sector`) instead"
        )));
    }
    let mut classes = Vec::new();
    if sector_nonempty(len, m1, m110) {
        let limit = 1u64 << len;
        let mut x = if m1 == 0 { 0 } else { (1u64 << m1) - 1 };
        loop {
            if packed::count(x, len, &[1, 1, 0]) as usize == m110 && packed::canonical(x, len) == x {
                let rep = RingConfig::from_bits(x, len)?;
                classes.push(OrbitClass {
                    orbit_size: rep.orbit_size(),
                    representative: rep,
                });
            }
            if m1 == 0 {
                break;
            }
            match next_same_popcount(x) {
                Some(n) if n < limit => x = n,
                _ => break,
            }
        }
    }
    // Gosper order is numeric order, which equals lexicographic order here
    debug_assert!(classes.windows(2).all(|w| w[0] < w[1]));
    Ok(Sector {
        len,
        m1,
        m110,
        classes,
    })
}

/// Class-level transition structure under the v-rule.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    /// `rows[i]` lists `(target index, outcome)` sorted by target.
    pub rows: Vec<Vec<(usize, StepOutcome)>>,
}

impl TransitionGraph {
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[i].iter().map(|(j, _)| *j)
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

pub fn transition_graph(sector: &Sector) -> Result<TransitionGraph> {
    let rule = FluxRule::stoch_v();
    let rows = sector
        .classes
        .iter()
        .map(|class| {
            branch_outcomes(&class.representative, &rule)
                .into_iter()
                .filter(|o| !o.probability.is_zero())
                .map(|o| {
                    sector
                        .index_of(&o.next)
                        .map(|j| (j, o.clone()))
                        .ok_or_else(|| {
                            Error::Internal(format!(
                                "{} steps to {} outside sector ({}, {}, {})",
                                class.representative, o.next, sector.len, sector.m1, sector.m110
                            ))
                        })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionGraph { rows })
}

/// An irreducible (closed, strongly connected) set of rotation classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OmegaSet {
    pub len: usize,
    pub m1: usize,
    pub m110: usize,
    /// 1-based, in order of the smallest member.
    pub id: usize,
    #[serde(serialize_with = "serialize_members")]
    pub members: Vec<OrbitClass>,
}

fn serialize_members<S: serde::Serializer>(
    members: &[OrbitClass],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(members.iter().map(|m| m.representative.to_string()))
}

impl OmegaSet {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn index_of(&self, rep: &RingConfig) -> Option<usize> {
        self.members
            .binary_search_by(|c| c.representative.cmp(rep))
            .ok()
    }

    pub fn raw_count(&self) -> u128 {
        self.members.iter().map(|c| c.orbit_size as u128).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub omegas: Vec<OmegaSet>,
    pub transient: Vec<OrbitClass>,
}

pub fn recurrent_classes(sector: &Sector) -> Result<Decomposition> {
    let graph = transition_graph(sector)?;
    decompose(sector, &graph)
}

pub fn decompose(sector: &Sector, graph: &TransitionGraph) -> Result<Decomposition> {
    let n = sector.classes.len();
    let mut g: DiGraph<usize, ()> = DiGraph::with_capacity(n, graph.edge_count());
    let nodes: Vec<_> = (0..n).map(|i| g.add_node(i)).collect();
    for i in 0..n {
        for j in graph.successors(i) {
            g.add_edge(nodes[i], nodes[j], ());
        }
    }
    let components = tarjan_scc(&g);
    let mut component_of = HashMap::with_capacity(n);
    for (k, comp) in components.iter().enumerate() {
        for &node in comp {
            component_of.insert(g[node], k);
        }
    }
    let mut closed: Vec<Vec<usize>> = Vec::new();
    let mut transient = Vec::new();
    for (k, comp) in components.iter().enumerate() {
        let mut idx: Vec<usize> = comp.iter().map(|&node| g[node]).collect();
        idx.sort_unstable();
        let is_closed = idx
            .iter()
            .all(|&i| graph.successors(i).all(|j| component_of[&j] == k));
        if is_closed {
            closed.push(idx);
        } else {
            transient.extend(idx);
        }
    }
    closed.sort();
    transient.sort_unstable();
    let omegas = closed
        .into_iter()
        .enumerate()
        .map(|(id, idx)| OmegaSet {
            len: sector.len,
            m1: sector.m1,
            m110: sector.m110,
            id: id + 1,
            members: idx.into_iter().map(|i| sector.classes[i].clone()).collect(),
        })
        .collect();
    Ok(Decomposition {
        omegas,
        transient: transient
            .into_iter()
            .map(|i| sector.classes[i].clone())
            .collect(),
    })
}

/// All nonempty sectors of length `len`, in `(m1, m110)` order.
pub fn sectors_of_length(len: usize) -> Result<Vec<Sector>> {
    let mut out = Vec::new();
    for m1 in 0..=len {
        for m110 in 0..=len / 2 {
            if sector_nonempty(len, m1, m110) {
                out.push(enumerate_sector_bounded(len, m1, m110, len.max(DEFAULT_ENUMERATION_BOUND))?);
            }
        }
    }
    Ok(out)
}

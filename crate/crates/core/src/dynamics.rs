//! One-step evolution of the three flux rules and exact branch enumeration.
//!
//! Every rule has the conservative form `c'_j = c_j + f_j - f_{j+1}`, where
//! `f_j` is read from a 4-site window. For the u-stencil the window of `f_j`
//! starts at `j-2`, for the v-stencil at `j-3`. The flux array is computed
//! once per step, so a stochastic window draws a single value that both
//! update terms referencing it share.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::prob::{ProbExpr, Term};
use crate::ring::RingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FluxSymbol {
    Zero,
    One,
    /// 0 with probability α, else 1.
    A,
    /// 1 with probability α, else 0.
    B,
}

impl FluxSymbol {
    pub fn is_stochastic(self) -> bool {
        matches!(self, FluxSymbol::A | FluxSymbol::B)
    }

    /// Value taken when the probability-α event does (`true`) or does not occur.
    #[inline]
    pub fn resolve(self, event: bool) -> u8 {
        match self {
            FluxSymbol::Zero => 0,
            FluxSymbol::One => 1,
            FluxSymbol::A => u8::from(!event),
            FluxSymbol::B => u8::from(event),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stencil {
    /// `f_j = q(c_{j-2}, c_{j-1}, c_j, c_{j+1})`
    U,
    /// `f_j = q(c_{j-3}, c_{j-2}, c_{j-1}, c_j)`
    V,
}

impl Stencil {
    fn offset(self) -> isize {
        match self {
            Stencil::U => 2,
            Stencil::V => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleName {
    Det,
    StochU,
    StochV,
}

impl RuleName {
    pub const ALL: [RuleName; 3] = [RuleName::Det, RuleName::StochU, RuleName::StochV];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleName::Det => "det",
            RuleName::StochU => "stoch-u",
            RuleName::StochV => "stoch-v",
        }
    }

    pub fn rule(self) -> FluxRule {
        match self {
            RuleName::Det => FluxRule::det(),
            RuleName::StochU => FluxRule::stoch_u(),
            RuleName::StochV => FluxRule::stoch_v(),
        }
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "det" => Ok(RuleName::Det),
            "stoch-u" => Ok(RuleName::StochU),
            "stoch-v" => Ok(RuleName::StochV),
            other => Err(Error::invalid(format!(
                "unknown rule {other:?}; expected det, stoch-u or stoch-v"
            ))),
        }
    }
}

/// Window index with `w` as the most significant bit.
#[inline]
pub fn window_index(w: u8, x: u8, y: u8, z: u8) -> usize {
    ((w << 3) | (x << 2) | (y << 1) | z) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluxRule {
    pub name: RuleName,
    pub stencil: Stencil,
    pub table: [FluxSymbol; 16],
}

impl FluxRule {
    /// Deterministic table: every window `11zz` and the window `0110` carry flux 1.
    pub fn det() -> Self {
        let mut table = [FluxSymbol::Zero; 16];
        for (idx, slot) in table.iter_mut().enumerate() {
            if idx >= 0b1100 || idx == 0b0110 {
                *slot = FluxSymbol::One;
            }
        }
        FluxRule {
            name: RuleName::Det,
            stencil: Stencil::U,
            table,
        }
    }

    pub fn stoch_u() -> Self {
        let mut rule = FluxRule::det();
        rule.name = RuleName::StochU;
        rule.table[0b0111] = FluxSymbol::A;
        rule
    }

    pub fn stoch_v() -> Self {
        let mut table = [FluxSymbol::Zero; 16];
        table[0b1110] = FluxSymbol::B;
        table[0b1010] = FluxSymbol::One;
        table[0b0010] = FluxSymbol::One;
        FluxRule {
            name: RuleName::StochV,
            stencil: Stencil::V,
            table,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        self.table.iter().any(|s| s.is_stochastic())
    }

    /// The α-free table obtained at α ∈ {0, 1}.
    pub fn specialize(&self, alpha: f64) -> Result<FluxRule> {
        let event = if alpha == 1.0 {
            true
        } else if alpha == 0.0 {
            false
        } else {
            return Err(Error::invalid(format!(
                "specialization needs alpha in {{0, 1}}, got {alpha}"
            )));
        };
        let mut out = self.clone();
        for slot in out.table.iter_mut() {
            *slot = match slot.resolve(event) {
                0 => FluxSymbol::Zero,
                _ => FluxSymbol::One,
            };
        }
        Ok(out)
    }

    #[inline]
    pub fn symbol_at(&self, c: &RingConfig, j: usize) -> FluxSymbol {
        let s = j as isize - self.stencil.offset();
        self.table[window_index(c.site(s), c.site(s + 1), c.site(s + 2), c.site(s + 3))]
    }

    pub fn symbols(&self, c: &RingConfig) -> Vec<FluxSymbol> {
        (0..c.len()).map(|j| self.symbol_at(c, j)).collect()
    }

    /// Sites whose flux is stochastic in `c`.
    pub fn stochastic_windows(&self, c: &RingConfig) -> Vec<usize> {
        (0..c.len())
            .filter(|&j| self.symbol_at(c, j).is_stochastic())
            .collect()
    }

    /// Flux array given the outcome of the α-event for each window.
    pub fn flux_with(&self, c: &RingConfig, mut event: impl FnMut(usize) -> bool) -> Vec<u8> {
        (0..c.len())
            .map(|j| {
                let sym = self.symbol_at(c, j);
                if sym.is_stochastic() {
                    sym.resolve(event(j))
                } else {
                    sym.resolve(false)
                }
            })
            .collect()
    }
}

/// Applies `c'_j = c_j + f_j - f_{j+1}`.
///
/// Panics if a site leaves `{0,1}`, which means the rule table is wrong.
pub fn apply_flux(c: &RingConfig, flux: &[u8]) -> RingConfig {
    let l = c.len();
    debug_assert_eq!(flux.len(), l);
    let sites = (0..l)
        .map(|j| {
            let v = c.sites()[j] as i32 + flux[j] as i32 - flux[(j + 1) % l] as i32;
            assert!(
                v == 0 || v == 1,
                "site {j} evolved to {v}; flux table is not conservative on {c}"
            );
            v as u8
        })
        .collect();
    RingConfig::from_sites_unchecked(sites)
}

/// One step with every α-event decided by `event`; returns the successor and Σ f_j.
pub fn step_forced(
    c: &RingConfig,
    rule: &FluxRule,
    event: impl FnMut(usize) -> bool,
) -> (RingConfig, usize) {
    let flux = rule.flux_with(c, event);
    let moved = flux.iter().map(|&f| f as usize).sum();
    (apply_flux(c, &flux), moved)
}

pub fn step_deterministic(c: &RingConfig) -> RingConfig {
    step_forced(c, &FluxRule::det(), |_| false).0
}

/// Counter-based random stream: the draw for window `j` at time `n` depends
/// only on `(seed, n, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    pub seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    /// Uniform draws in `[0,1)` for windows `0..len` at time `step`.
    pub fn uniforms(&self, step: u64, len: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(step);
        (0..len).map(|_| rng.gen::<f64>()).collect()
    }
}

fn check_open_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "alpha must lie in (0,1), got {alpha}; use the deterministic specialization"
        )))
    }
}

/// One stochastic step at time `step`; returns the successor and Σ f_j.
pub fn step_stochastic(
    c: &RingConfig,
    rule: &FluxRule,
    alpha: f64,
    rng: &CounterRng,
    step: u64,
) -> Result<(RingConfig, usize)> {
    check_open_alpha(alpha)?;
    if !rule.is_stochastic() {
        return Err(Error::invalid(format!(
            "rule {} has no stochastic window",
            rule.name
        )));
    }
    let draws = rng.uniforms(step, c.len());
    Ok(step_forced(c, rule, |j| draws[j] < alpha))
}

/// A successor together with its exact probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub next: RingConfig,
    pub probability: ProbExpr,
}

/// All successors of `c`, not identified up to rotation.
pub fn branch_outcomes_raw(c: &RingConfig, rule: &FluxRule) -> Vec<StepOutcome> {
    let windows = rule.stochastic_windows(c);
    let s = windows.len();
    assert!(s < 32, "too many stochastic windows ({s}) to enumerate");
    let mut merged: BTreeMap<RingConfig, ProbExpr> = BTreeMap::new();
    for mask in 0u32..(1u32 << s) {
        let (next, _) = step_forced(c, rule, |j| {
            let k = windows.binary_search(&j).expect("stochastic window");
            mask & (1 << k) != 0
        });
        let events = mask.count_ones();
        merged
            .entry(next)
            .or_default()
            .add_term(Term::new(1, events, s as u32 - events));
    }
    merged
        .into_iter()
        .map(|(next, probability)| StepOutcome { next, probability })
        .collect()
}

/// Successor rotation classes of `c` (canonical representatives, sorted).
pub fn branch_outcomes(c: &RingConfig, rule: &FluxRule) -> Vec<StepOutcome> {
    let mut merged: BTreeMap<RingConfig, ProbExpr> = BTreeMap::new();
    for out in branch_outcomes_raw(c, rule) {
        *merged.entry(out.next.canonical_rotation()).or_default() += &out.probability;
    }
    merged
        .into_iter()
        .map(|(next, probability)| StepOutcome { next, probability })
        .collect()
}

/// Exact one-step expectation of Σ_j f_j; divide by `L` for the mean flux.
pub fn expected_flux_sum(c: &RingConfig, rule: &FluxRule) -> ProbExpr {
    let mut expr = ProbExpr::zero();
    for sym in rule.symbols(c) {
        match sym {
            FluxSymbol::Zero => {}
            FluxSymbol::One => expr.add_term(Term::new(1, 0, 0)),
            FluxSymbol::A => expr.add_term(Term::new(1, 0, 1)),
            FluxSymbol::B => expr.add_term(Term::new(1, 1, 0)),
        }
    }
    expr
}

/// Expected mean flux `(1/L) E[Σ f_j]` at `alpha`.
pub fn expected_flux(c: &RingConfig, rule: &FluxRule, alpha: f64) -> f64 {
    expected_flux_sum(c, rule).eval(alpha) / c.len() as f64
}

//! Trajectory simulation and time-averaged flux estimators.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{expected_flux_sum, step_forced, CounterRng, FluxRule, RuleName};
use crate::error::{Error, Result};
use crate::ring::{sector_nonempty, RingConfig};

pub const DEFAULT_REPLICATES: usize = 32;
pub const DEFAULT_STEPS: usize = 3000;
const CYCLE_SEARCH_LIMIT: usize = 1_000_000;
const INIT_STREAM_SALT: u64 = 0x5DEE_CE66_D1CE_4E5B;

/// Independent per-replicate seed.
pub fn replicate_seed(seed: u64, replicate: usize) -> u64 {
    seed.wrapping_add((replicate as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Uniform weak composition of `total` into `parts` nonnegative parts.
fn random_composition(total: usize, parts: usize, rng: &mut impl Rng) -> Vec<usize> {
    if parts == 0 {
        return Vec::new();
    }
    if parts == 1 {
        return vec![total];
    }
    let slots = total + parts - 1;
    let mut bars = sample(rng, slots, parts - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0usize;
    for (i, &b) in bars.iter().enumerate() {
        out.push(b - prev - if i == 0 { 0 } else { 1 });
        prev = b;
    }
    out.push(slots - prev - 1);
    out
}

/// A ring with the prescribed `(m1, m110)`.
///
/// Uses `m110` blocks of length >= 2 plus as many isolated particles as fit,
/// then draws block lengths, gap lengths, their order and a rotation from
/// `seed`. The law is not uniform over the sector.
pub fn generate_initial(len: usize, m1: usize, m110: usize, seed: u64) -> Result<RingConfig> {
    if !sector_nonempty(len, m1, m110) {
        return Err(Error::InfeasibleSector { l: len, m1, m110 });
    }
    if m1 == 0 || m1 == len {
        return RingConfig::new(vec![u8::from(m1 == len); len]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ INIT_STREAM_SALT);
    let zeros = len - m1;
    let isolated = if m110 == 0 {
        m1
    } else {
        (m1 - 2 * m110).min(zeros - m110)
    };
    let extra = random_composition(m1 - isolated - 2 * m110, m110, &mut rng);
    let mut runs: Vec<usize> = extra.iter().map(|e| 2 + e).collect();
    runs.extend(std::iter::repeat_n(1, isolated));
    runs.shuffle(&mut rng);
    let gaps = random_composition(zeros - runs.len(), runs.len(), &mut rng);
    let mut sites = Vec::with_capacity(len);
    for (run, gap) in runs.iter().zip(&gaps) {
        sites.extend(std::iter::repeat_n(1u8, *run));
        sites.extend(std::iter::repeat_n(0u8, gap + 1));
    }
    let c = RingConfig::new(sites)?.rotate_left(rng.gen_range(0..len));
    debug_assert_eq!(c.conserved_pair(), (m1, m110));
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Explicit(RingConfig),
    Generated { m1: usize, m110: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub rule: RuleName,
    pub len: usize,
    pub init: InitialCondition,
    pub alpha: f64,
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub replicates: usize,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.len == 0 {
            return Err(Error::invalid("L must be at least 1"));
        }
        if self.burn_in >= self.steps {
            return Err(Error::invalid(format!(
                "burn-in {} must be smaller than steps {}",
                self.burn_in, self.steps
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0,1], got {}", self.alpha)));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("at least one replicate is required"));
        }
        match &self.init {
            InitialCondition::Explicit(c) if c.len() != self.len => Err(Error::invalid(format!(
                "initial configuration has length {}, expected L={}",
                c.len(),
                self.len
            ))),
            InitialCondition::Generated { m1, m110 } if !sector_nonempty(self.len, *m1, *m110) => {
                Err(Error::InfeasibleSector {
                    l: self.len,
                    m1: *m1,
                    m110: *m110,
                })
            }
            _ => Ok(()),
        }
    }

    /// Table actually iterated: stochastic rules at α ∈ {0,1} become deterministic.
    pub fn effective_rule(&self) -> FluxRule {
        let rule = self.rule.rule();
        if rule.is_stochastic() && (self.alpha == 0.0 || self.alpha == 1.0) {
            rule.specialize(self.alpha).expect("endpoint alpha")
        } else {
            rule
        }
    }

    pub fn initial(&self, replicate: usize) -> Result<RingConfig> {
        match &self.init {
            InitialCondition::Explicit(c) => Ok(c.clone()),
            InitialCondition::Generated { m1, m110 } => {
                generate_initial(self.len, *m1, *m110, replicate_seed(self.seed, replicate))
            }
        }
    }

    pub fn conserved(&self) -> Result<(usize, usize)> {
        Ok(self.initial(0)?.conserved_pair())
    }
}

/// Steps the rule once; α-events drawn from the counter stream when stochastic.
pub struct Stepper {
    rule: FluxRule,
    alpha: f64,
    rng: CounterRng,
}

impl Stepper {
    pub fn new(rule: FluxRule, alpha: f64, seed: u64) -> Self {
        Stepper {
            rule,
            alpha,
            rng: CounterRng::new(seed),
        }
    }

    pub fn rule(&self) -> &FluxRule {
        &self.rule
    }

    /// Successor of `c` at time `step` and the realized Σ f_j.
    pub fn step(&self, c: &RingConfig, step: u64) -> (RingConfig, usize) {
        if self.rule.is_stochastic() {
            let draws = self.rng.uniforms(step, c.len());
            step_forced(c, &self.rule, |j| draws[j] < self.alpha)
        } else {
            step_forced(c, &self.rule, |_| false)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateResult {
    pub initial: String,
    pub flux: f64,
    /// Time average of the one-step conditional expectation of the flux.
    pub pattern_flux: f64,
    #[serde(skip)]
    pub exact: Option<Ratio<i64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub pattern_mean: f64,
    pub pattern_stderr: f64,
    /// Exact replicate-averaged value when the run is deterministic.
    #[serde(serialize_with = "ser_opt_ratio")]
    pub exact: Option<Ratio<i64>>,
    pub replicates: Vec<ReplicateResult>,
}

fn ser_opt_ratio<S: serde::Serializer>(
    r: &Option<Ratio<i64>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&r.to_string()),
        None => s.serialize_none(),
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Transient length, period and exact mean flux on the limit cycle of a
/// deterministic trajectory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleFlux {
    pub transient: usize,
    pub period: usize,
    pub flux: Ratio<i64>,
}

pub fn cycle_flux(initial: &RingConfig, rule: &FluxRule) -> Result<CycleFlux> {
    if rule.is_stochastic() {
        return Err(Error::invalid("cycle detection needs a deterministic table"));
    }
    let mut seen: HashMap<RingConfig, usize> = HashMap::new();
    // prefix[n] = Σ flux over steps 0..n
    let mut prefix = vec![0usize];
    let mut c = initial.clone();
    for n in 0..CYCLE_SEARCH_LIMIT {
        if let Some(&first) = seen.get(&c) {
            let period = n - first;
            let total = prefix[n] - prefix[first];
            return Ok(CycleFlux {
                transient: first,
                period,
                flux: Ratio::new(total as i64, (period * c.len()) as i64),
            });
        }
        seen.insert(c.clone(), n);
        let (next, moved) = step_forced(&c, rule, |_| false);
        prefix.push(prefix[n] + moved);
        c = next;
    }
    Err(Error::Numerical {
        message: format!("no cycle within {CYCLE_SEARCH_LIMIT} steps"),
        residual: f64::NAN,
    })
}

fn run_replicate(spec: &SimulationSpec, rule: &FluxRule, replicate: usize) -> Result<ReplicateResult> {
    let initial = spec.initial(replicate)?;
    let conserved = initial.conserved_pair();
    let l = spec.len as f64;
    if !rule.is_stochastic() {
        let cyc = cycle_flux(&initial, rule)?;
        let v = *cyc.flux.numer() as f64 / *cyc.flux.denom() as f64;
        return Ok(ReplicateResult {
            initial: initial.to_string(),
            flux: v,
            pattern_flux: v,
            exact: Some(cyc.flux),
        });
    }
    let stepper = Stepper::new(rule.clone(), spec.alpha, replicate_seed(spec.seed, replicate));
    let mut c = initial.clone();
    let (mut moved_sum, mut pattern_sum) = (0usize, 0.0f64);
    for n in 0..spec.steps {
        let (next, moved) = stepper.step(&c, n as u64);
        if n >= spec.burn_in {
            moved_sum += moved;
            pattern_sum += expected_flux_sum(&c, rule).eval(spec.alpha);
        }
        if (cfg!(debug_assertions) || n % 64 == 0)
            && next.conserved_pair() != conserved {
                return Err(Error::Internal(format!(
                    "step {n} broke conservation: {c} -> {next}"
                )));
            }
        c = next;
    }
    let window = (spec.steps - spec.burn_in) as f64;
    Ok(ReplicateResult {
        initial: initial.to_string(),
        flux: moved_sum as f64 / (window * l),
        pattern_flux: pattern_sum / (window * l),
        exact: None,
    })
}

/// Time-and-replicate averaged mean flux `(1/L) Σ_j f_j`.
pub fn run_flux(spec: &SimulationSpec) -> Result<FluxEstimate> {
    spec.validate()?;
    let rule = spec.effective_rule();
    let replicates = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_replicate(spec, &rule, r))
        .collect::<Result<Vec<_>>>()?;
    let flux: Vec<f64> = replicates.iter().map(|r| r.flux).collect();
    let pattern: Vec<f64> = replicates.iter().map(|r| r.pattern_flux).collect();
    let (mean, stderr) = mean_and_stderr(&flux);
    let (pattern_mean, pattern_stderr) = mean_and_stderr(&pattern);
    let exact = replicates
        .iter()
        .map(|r| r.exact)
        .collect::<Option<Vec<_>>>()
        .map(|xs| xs.iter().sum::<Ratio<i64>>() / Ratio::from_integer(xs.len() as i64));
    Ok(FluxEstimate {
        mean,
        stderr,
        pattern_mean,
        pattern_stderr,
        exact,
        replicates,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub len: usize,
    pub m1: usize,
    pub m110: usize,
    pub alpha: f64,
    pub rho1: f64,
    pub rho110: f64,
    #[serde(rename = "Q_u_hat")]
    pub q_hat: f64,
    pub stderr: f64,
    pub n_max: usize,
    pub n_burn: usize,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Grid points outside the nonempty sectors, as `(m1, m110)`.
    pub skipped: Vec<(usize, usize)>,
}

/// Every `(m1, m110)` of the domain `2 m110 <= m1 <= L - m110`.
pub fn full_grid(len: usize) -> Vec<(usize, usize)> {
    (0..=len / 2)
        .flat_map(|m110| (2 * m110..=len - m110).map(move |m1| (m1, m110)))
        .collect()
}

/// One estimate per grid point; `template.init` is replaced per point.
pub fn sweep_diagram(template: &SimulationSpec, grid: &[(usize, usize)]) -> Result<SweepResult> {
    let points: Vec<Option<SweepRow>> = grid
        .par_iter()
        .map(|&(m1, m110)| {
            if !sector_nonempty(template.len, m1, m110) {
                return Ok(None);
            }
            let spec = SimulationSpec {
                init: InitialCondition::Generated { m1, m110 },
                ..template.clone()
            };
            let est = run_flux(&spec)?;
            let l = template.len as f64;
            Ok(Some(SweepRow {
                len: template.len,
                m1,
                m110,
                alpha: template.alpha,
                rho1: m1 as f64 / l,
                rho110: m110 as f64 / l,
                q_hat: est.mean,
                stderr: est.stderr,
                n_max: template.steps,
                n_burn: template.burn_in,
                replicates: template.replicates,
                seed: template.seed,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SweepResult::default();
    for (p, &g) in points.into_iter().zip(grid) {
        match p {
            Some(row) => out.rows.push(row),
            None => out.skipped.push(g),
        }
    }
    Ok(out)
}

/// Configurations `c_0 .. c_steps` of one trajectory.
pub fn trajectory(initial: &RingConfig, rule: &FluxRule, alpha: f64, seed: u64, steps: usize) -> Vec<RingConfig> {
    let stepper = Stepper::new(rule.clone(), alpha, seed);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    for n in 0..steps {
        let (next, _) = stepper.step(&out[n], n as u64);
        out.push(next);
    }
    out
}

/// Space-time diagram: one configuration string per line.
pub fn space_time_text(traj: &[RingConfig]) -> String {
    let mut s = String::new();
    for c in traj {
        s.push_str(&c.to_string());
        s.push('\n');
    }
    s
}

/// Fraction of time steps in `[burn_in, steps)` spent in each rotation class.
pub fn class_occupancy(
    initial: &RingConfig,
    rule: &FluxRule,
    alpha: f64,
    seed: u64,
    steps: usize,
    burn_in: usize,
) -> BTreeMap<RingConfig, f64> {
    let stepper = Stepper::new(rule.clone(), alpha, seed);
    let mut counts: HashMap<RingConfig, usize> = HashMap::new();
    let mut c = initial.clone();
    for n in 0..steps {
        if n >= burn_in {
            *counts.entry(c.canonical_rotation()).or_insert(0) += 1;
        }
        c = stepper.step(&c, n as u64).0;
    }
    let total = (steps - burn_in) as f64;
    counts.into_iter().map(|(k, v)| (k, v as f64 / total)).collect()
}

//! Acceptance gate. Each test checks one criterion and prints a single
//! `criterion N: PASS|FAIL ...` line (visible with `--nocapture`, and in the
//! failure report otherwise).

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use stochflux::dynamics::{branch_outcomes_raw, step_deterministic, step_stochastic, CounterRng, FluxRule, RuleName};
use stochflux::ensemble::{enumerate_sector, recurrent_classes, sectors_of_length, OmegaSet};
use stochflux::markov::{build_matrix, stationary, stationary_exact, verify_conjecture};
use stochflux::montecarlo::{cycle_flux, run_flux, InitialCondition, SimulationSpec};
use stochflux::ring::sector_nonempty;
use stochflux::theory::{
    dominant_term, partition_all_sectors_dp, partition_omega, partition_sector_dp, q_deterministic, q_theory,
    q_theory_exact,
};

fn report(n: u32, ok: bool, detail: String, start: Instant) {
    let line = format!(
        "criterion {n}: {} {detail} ({:.2}s)",
        if ok { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    println!("{line}");
    assert!(ok, "{line}");
}

fn omegas_of(len: usize, m1: usize, m110: usize) -> Vec<OmegaSet> {
    recurrent_classes(&enumerate_sector(len, m1, m110).unwrap()).unwrap().omegas
}

fn strings(o: &OmegaSet) -> Vec<String> {
    o.members.iter().map(|m| m.representative.to_string()).collect()
}

#[test]
fn criterion_01_omega_listing() {
    let start = Instant::now();
    let omegas = omegas_of(10, 6, 2);
    let dec = recurrent_classes(&enumerate_sector(10, 6, 2).unwrap()).unwrap();
    let got: Vec<Vec<String>> = omegas.iter().map(strings).collect();
    let want: Vec<Vec<String>> = [OMEGA1.to_vec(), OMEGA2.to_vec()]
        .into_iter()
        .map(|v| v.into_iter().map(String::from).collect())
        .collect();
    let ok = got == want && dec.transient.is_empty() && start.elapsed().as_secs_f64() < 1.0;
    report(1, ok, format!("sizes {:?}", got.iter().map(Vec::len).collect::<Vec<_>>()), start);
}

#[test]
fn criterion_02_matrices() {
    let start = Instant::now();
    let omegas = omegas_of(10, 6, 2);
    let mut mismatches = Vec::new();
    let tables: [Vec<Vec<&str>>; 2] = [
        OMEGA1_MATRIX.iter().map(|r| r.to_vec()).collect(),
        OMEGA2_MATRIX.iter().map(|r| r.to_vec()).collect(),
    ];
    let names: [&[&str]; 2] = [&OMEGA1, &OMEGA2];
    for ((omega, table), names) in omegas.iter().zip(&tables).zip(names) {
        let m = build_matrix(omega).unwrap();
        // align rows and columns by configuration string
        let pos: Vec<usize> = names
            .iter()
            .map(|s| omega.index_of(&cfg(s)).expect("listed member"))
            .collect();
        for (i, row) in table.iter().enumerate() {
            for (j, expr) in row.iter().enumerate() {
                if m.entries[pos[i]][pos[j]].to_polynomial() != poly(expr) {
                    mismatches.push(format!("Ω{} [{i}][{j}]", omega.id));
                }
            }
        }
    }
    let ok = mismatches.is_empty() && start.elapsed().as_secs_f64() < 1.0;
    report(2, ok, format!("8x8 and 5x5 entry-wise, mismatches {mismatches:?}"), start);
}

#[test]
fn criterion_03_eigenvectors() {
    let start = Instant::now();
    let omegas = omegas_of(10, 6, 2);
    let l16 = omegas_of(16, 11, 4);
    let target = l16
        .iter()
        .find(|o| o.index_of(&cfg(L16_MEMBERS[0])).is_some())
        .expect("L=16 set present");
    let same_members = strings(target) == L16_MEMBERS.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let cases: [(&OmegaSet, &[&str], &[Component]); 3] = [
        (&omegas[0], &OMEGA1, &OMEGA1_EIGEN),
        (&omegas[1], &OMEGA2, &OMEGA2_EIGEN),
        (target, &L16_MEMBERS, &L16_EIGEN),
    ];
    let mut worst: f64 = 0.0;
    for (omega, names, eigen) in cases {
        let m = build_matrix(omega).unwrap();
        for alpha in [0.3, 0.5, 0.7] {
            let st = stationary(&m, alpha).unwrap();
            let got: Vec<f64> = names
                .iter()
                .map(|s| st.probabilities[omega.index_of(&cfg(s)).unwrap()])
                .collect();
            worst = worst.max(max_rel_err(&got, &eigen_at(eigen, alpha)));
        }
    }
    let ok = same_members && worst <= 1e-10 && start.elapsed().as_secs_f64() < 5.0;
    report(3, ok, format!("L=16 members match: {same_members}, worst rel err {worst:.2e}"), start);
}

#[test]
fn criterion_04_conjecture_up_to_14() {
    let start = Instant::now();
    let alphas = [0.1, 0.3, 0.5, 0.7, 0.9];
    let (mut checked, mut failures) = (0usize, Vec::new());
    let mut worst: f64 = 0.0;
    for len in 1..=14 {
        for sector in sectors_of_length(len).unwrap() {
            for omega in recurrent_classes(&sector).unwrap().omegas {
                let rep = verify_conjecture(&omega, &alphas, 1e-8).unwrap();
                checked += 1;
                worst = worst.max(rep.worst_error());
                if !rep.passed() {
                    failures.push(format!("({}, {}, {}) #{}", rep.len, rep.m1, rep.m110, rep.omega_id));
                }
            }
        }
    }
    let ok = failures.is_empty() && checked > 0;
    report(
        4,
        ok,
        format!("{checked} irreducible sets, worst rel err {worst:.2e}, counterexamples {failures:?}"),
        start,
    );
}

#[test]
fn criterion_05_partition_dp_vs_brute_force() {
    let start = Instant::now();
    let (mut sectors, mut problems) = (0usize, Vec::new());
    for len in 1..=14 {
        let brute = brute_partition(len);
        for m1 in 0..=len {
            for m110 in 0..=len / 2 {
                let dp = partition_sector_dp(len, m1, m110).unwrap();
                let want = brute.get(&(m1, m110)).cloned().unwrap_or_default();
                if dp.counts != want {
                    problems.push(format!("N mismatch ({len}, {m1}, {m110})"));
                }
                if want.is_empty() {
                    continue;
                }
                sectors += 1;
                let kmax = (len - m1).min(m1 - 2 * m110);
                let top = want.keys().map(|(a, b)| a + b).max().unwrap();
                if top != kmax {
                    problems.push(format!("max k1+k2 = {top} != kmax {kmax} at ({len}, {m1}, {m110})"));
                }
            }
        }
    }
    let ok = problems.is_empty();
    report(5, ok, format!("{sectors} nonempty sectors, problems {problems:?}"), start);
}

#[test]
fn criterion_06_exact_flux_identity() {
    let start = Instant::now();
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let (mut checked, mut bad) = (0usize, Vec::new());
    for len in 1..=12 {
        for sector in sectors_of_length(len).unwrap() {
            for omega in recurrent_classes(&sector).unwrap().omegas {
                let m = build_matrix(&omega).unwrap();
                let pi = stationary_exact(&m, &half).unwrap();
                // Σ π(x) (α ρ1110(x) + ρ010(x)) from direct pattern counts
                let mut flux = BigRational::from_integer(0.into());
                for (class, p) in omega.members.iter().zip(&pi) {
                    let s = class.representative.sites();
                    let k1 = BigRational::from_integer(count_pattern(s, &[1, 1, 1, 0]).into());
                    let k2 = BigRational::from_integer(count_pattern(s, &[0, 1, 0]).into());
                    flux += p * (&half * k1 + k2);
                }
                flux /= BigRational::from_integer(len.into());
                let theory = q_theory_exact(&partition_omega(&omega), &half).unwrap();
                checked += 1;
                if theory != flux {
                    bad.push(format!("({len}, {}, {}) #{}", omega.m1, omega.m110, omega.id));
                }
            }
        }
    }
    let ok = bad.is_empty();
    report(6, ok, format!("{checked} irreducible sets at alpha=1/2, mismatches {bad:?}"), start);
}

#[test]
fn criterion_07_fig7_monte_carlo_vs_theory() {
    let start = Instant::now();
    let (len, m110, alpha) = (60, 7, 0.7);
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut points = 0;
    for m1 in 0..=len {
        if !sector_nonempty(len, m1, m110) {
            continue;
        }
        points += 1;
        let theory = q_theory(&partition_sector_dp(len, m1, m110).unwrap(), alpha).unwrap();
        let spec = SimulationSpec {
            rule: RuleName::StochU,
            len,
            init: InitialCondition::Generated { m1, m110 },
            alpha,
            steps: 3000,
            burn_in: 0,
            seed: 7 + m1 as u64,
            replicates: 32,
        };
        let est = run_flux(&spec).unwrap();
        let tol = 0.02f64.max(4.0 * est.stderr);
        let dev = (est.mean - theory.q_u).abs();
        worst_excess = worst_excess.max(dev - tol);
        if dev > tol {
            failures.push(format!("m1={m1}: |{:.4} - {:.4}| > {tol:.4}", est.mean, theory.q_u));
        }
    }
    let ok = failures.is_empty() && points > 0;
    report(
        7,
        ok,
        format!("{points} points, worst (deviation - tolerance) {worst_excess:.4}, failures {failures:?}"),
        start,
    );
}

#[test]
fn criterion_08_deterministic_law() {
    let start = Instant::now();
    let len = 60usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let rule = FluxRule::det();
    let mut bad = Vec::new();
    for _ in 0..200 {
        let sites: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
        let c = stochflux::RingConfig::new(sites).unwrap();
        let m1 = c.sites().iter().filter(|&&x| x == 1).count();
        let m110 = count_pattern(c.sites(), &[1, 1, 0]);
        let got = cycle_flux(&c, &rule).unwrap().flux;
        let want = q_deterministic(Ratio::new(m1 as i64, len as i64), Ratio::new(m110 as i64, len as i64)).unwrap();
        if got != want {
            bad.push(format!("{c}: {got} != {want}"));
        }
    }
    let ok = bad.is_empty();
    report(8, ok, format!("200 random rings, mismatches {bad:?}"), start);
}

#[test]
fn criterion_09_limit_alpha_to_one() {
    let start = Instant::now();
    let len = 60usize;
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    let tables = partition_all_sectors_dp(len).unwrap();
    for table in &tables {
        let (m1, m110) = (table.m1, table.m110);
        let kmax = (len - m1).min(m1 - 2 * m110);
        let expected = Ratio::new((m1 - kmax) as i64, len as i64);
        if dominant_term(table) != Some(expected) {
            bad.push(format!("dominant ({m1}, {m110})"));
        }
        let det = q_deterministic(Ratio::new(m1 as i64, len as i64), Ratio::new(m110 as i64, len as i64)).unwrap();
        let det = *det.numer() as f64 / *det.denom() as f64;
        let dev = (q_theory(table, 0.9999).unwrap().q_u - det).abs();
        worst = worst.max(dev);
        if dev > 1e-2 {
            bad.push(format!("alpha=0.9999 ({m1}, {m110}) off by {dev:.3e}"));
        }
    }
    let ok = bad.is_empty() && !tables.is_empty();
    report(9, ok, format!("{} sectors, worst deviation {worst:.2e}, problems {bad:?}", tables.len()), start);
}

#[test]
fn criterion_10_conservation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let rules = [FluxRule::det(), FluxRule::stoch_u(), FluxRule::stoch_v()];
    let (mut steps, mut violations) = (0usize, 0usize);
    while steps < 100_000 {
        let len = rng.gen_range(1..=48);
        let sites: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
        let mut c = stochflux::RingConfig::new(sites).unwrap();
        let rule = &rules[rng.gen_range(0..3)];
        let alpha: f64 = rng.gen_range(0.01..0.99);
        let counter = CounterRng::new(rng.gen());
        let conserved = |c: &stochflux::RingConfig| {
            (
                c.sites().iter().filter(|&&x| x == 1).count(),
                count_pattern(c.sites(), &[1, 1, 0]),
            )
        };
        let before = conserved(&c);
        for n in 0..100 {
            c = if rule.is_stochastic() {
                step_stochastic(&c, rule, alpha, &counter, n).unwrap().0
            } else {
                step_deterministic(&c)
            };
            steps += 1;
            if conserved(&c) != before {
                violations += 1;
            }
        }
    }
    report(10, violations == 0, format!("{steps} steps, {violations} violations"), start);
}

#[test]
fn criterion_11_motion_rule_equivalence() {
    let start = Instant::now();
    let rule = FluxRule::stoch_v();
    let (mut checked, mut bad) = (0usize, Vec::new());
    for len in 1..=12 {
        for c in all_configs(len) {
            let table: BTreeMap<_, _> = branch_outcomes_raw(&c, &rule)
                .into_iter()
                .map(|o| (o.next, o.probability.to_polynomial()))
                .collect();
            let motion: BTreeMap<_, _> = motion_rule_outcomes(&c)
                .into_iter()
                .map(|(k, v)| (k, v.to_polynomial()))
                .collect();
            checked += 1;
            if table != motion {
                bad.push(c.to_string());
            }
        }
    }
    let ok = bad.is_empty();
    report(11, ok, format!("{checked} configurations, mismatches {:?}", &bad[..bad.len().min(5)]), start);
}

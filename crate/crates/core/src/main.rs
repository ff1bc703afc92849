use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stochflux::dynamics::RuleName;
use stochflux::ensemble::{enumerate_sector_bounded, recurrent_classes, sectors_of_length, Decomposition, OmegaSet};
use stochflux::error::{Error, Result};
use stochflux::io::{self, Format};
use stochflux::markov::{self, CONJECTURE_REL_TOL, VERIFY_ALPHAS};
use stochflux::montecarlo::{self, InitialCondition, SimulationSpec, SweepRow};
use stochflux::ring::{sector_nonempty, RingConfig};
use stochflux::theory::{self, Scope, DEFAULT_LIMIT_ALPHAS};

#[derive(Parser, Debug)]
#[command(name = "stochflux", version, about = "Stationary behavior and mean flux of a 5-neighbor stochastic particle system")]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "STOCHFLUX_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// csv, json (or text for `omega`).
    #[arg(long)]
    format: Option<String>,

    /// Output file; relative paths resolve against $STOCHFLUX_OUT_DIR when set.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SectorArgs {
    #[arg(long = "L")]
    len: usize,
    #[arg(long)]
    m1: usize,
    #[arg(long)]
    m110: usize,
    /// Largest L accepted for explicit enumeration.
    #[arg(long, default_value_t = stochflux::ensemble::DEFAULT_ENUMERATION_BOUND)]
    bound: usize,
}

#[derive(Args, Debug, Clone)]
struct SimulateArgs {
    #[arg(long, default_value = "stoch-u")]
    rule: String,
    #[arg(long = "L")]
    len: Option<usize>,
    /// Explicit initial configuration, e.g. 0011010111.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m110: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = montecarlo::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = montecarlo::DEFAULT_REPLICATES)]
    replicates: usize,
    /// Emit one row per replicate instead of the summary row.
    #[arg(long)]
    per_replicate: bool,
    /// Also write the space-time diagram of replicate 0 here.
    #[arg(long)]
    space_time: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate trajectories and estimate the mean flux.
    Simulate(SimulateArgs),
    /// List the rotation classes of a sector and their irreducible set.
    Sector {
        #[command(flatten)]
        sector: SectorArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Irreducible sets of a sector.
    Omega {
        #[command(flatten)]
        sector: SectorArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Symbolic transition matrix of one irreducible set.
    Matrix {
        #[command(flatten)]
        sector: SectorArgs,
        #[arg(long)]
        omega: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Stationary distribution per class, next to the pattern-count weight.
    Stationary {
        #[command(flatten)]
        sector: SectorArgs,
        #[arg(long)]
        omega: Option<usize>,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Compare stationary distributions with the pattern-count weight.
    VerifyConjecture {
        #[arg(long = "L")]
        len: Option<usize>,
        #[arg(long)]
        m1: Option<usize>,
        #[arg(long)]
        m110: Option<usize>,
        /// Check every sector with L up to this value instead of one sector.
        #[arg(long)]
        max_l: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, default_value_t = CONJECTURE_REL_TOL)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Partition function N(k1, k2).
    Partition {
        #[arg(long = "L")]
        len: usize,
        #[arg(long)]
        m1: usize,
        #[arg(long)]
        m110: usize,
        #[arg(long, default_value = "sector")]
        scope: String,
        #[arg(long)]
        omega: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Mean flux from the partition function.
    FluxTheory {
        #[arg(long = "L")]
        len: usize,
        /// Single m1; all nonempty sectors when omitted.
        #[arg(long)]
        m1: Option<usize>,
        #[arg(long)]
        m110: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "sector")]
        scope: String,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo fundamental diagram over the (m1, m110) domain.
    Diagram {
        #[arg(long = "L")]
        len: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "stoch-u")]
        rule: String,
        /// Restrict to one m110.
        #[arg(long)]
        m110: Option<usize>,
        #[arg(long, default_value_t = montecarlo::DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        burn_in: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = montecarlo::DEFAULT_REPLICATES)]
        replicates: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Convergence of the theoretical flux as alpha -> 1.
    LimitCheck {
        #[arg(long = "L")]
        len: usize,
        #[arg(long)]
        m1: usize,
        #[arg(long)]
        m110: usize,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[command(flatten)]
        output: Output,
    },
}

/// Rendered artifact plus the one-line summary.
struct Artifact {
    body: String,
    summary: String,
}

fn format_of(output: &Output, default: Format) -> Result<Format> {
    match output.format.as_deref() {
        None => Ok(default),
        Some(f) => f.parse(),
    }
}

fn render<T: serde::Serialize>(format: Format, header: &[&str], rows: &[T], notes: &[String]) -> Result<String> {
    match format {
        Format::Csv => io::to_csv(header, rows, notes),
        Format::Json => io::to_json(&serde_json::json!({
            "schema_version": io::SCHEMA_VERSION,
            "notes": notes,
            "rows": rows,
        })),
    }
}

fn check_alpha_open(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("--alpha must lie in (0,1), got {alpha}")))
    }
}

fn decomposition(args: &SectorArgs) -> Result<Decomposition> {
    if args.m1 > args.len {
        return Err(Error::invalid("m1 must not exceed L"));
    }
    if !sector_nonempty(args.len, args.m1, args.m110) {
        return Err(Error::InfeasibleSector {
            l: args.len,
            m1: args.m1,
            m110: args.m110,
        });
    }
    let sector = enumerate_sector_bounded(args.len, args.m1, args.m110, args.bound)?;
    recurrent_classes(&sector)
}

fn pick_omegas(dec: &Decomposition, id: Option<usize>) -> Result<Vec<OmegaSet>> {
    match id {
        None => Ok(dec.omegas.clone()),
        Some(i) => dec
            .omegas
            .iter()
            .find(|o| o.id == i)
            .cloned()
            .map(|o| vec![o])
            .ok_or_else(|| Error::invalid(format!("no irreducible set {i}; sector has 1..={}", dec.omegas.len()))),
    }
}

fn simulate(args: &SimulateArgs) -> Result<Artifact> {
    let SimulateArgs {
        ref rule,
        len,
        ref init,
        m1,
        m110,
        alpha,
        steps,
        burn_in,
        seed,
        replicates,
        per_replicate,
        ref space_time,
        ref output,
    } = *args;
    let rule: RuleName = rule.parse()?;
    let (len, init) = match (init.as_deref(), m1, m110) {
        (Some(s), None, None) => {
            let c: RingConfig = s.parse()?;
            if let Some(l) = len {
                if l != c.len() {
                    return Err(Error::invalid(format!("--init has length {}, but --L is {l}", c.len())));
                }
            }
            (c.len(), InitialCondition::Explicit(c))
        }
        (None, Some(m1), Some(m110)) => {
            let l = len.ok_or_else(|| Error::invalid("--L is required with --m1/--m110"))?;
            (l, InitialCondition::Generated { m1, m110 })
        }
        _ => return Err(Error::invalid("give either --init or both --m1 and --m110")),
    };
    let spec = SimulationSpec {
        rule,
        len,
        init,
        alpha,
        steps,
        burn_in,
        seed,
        replicates,
    };
    spec.validate()?;
    let est = montecarlo::run_flux(&spec)?;
    if let Some(path) = space_time {
        let traj = montecarlo::trajectory(
            &spec.initial(0)?,
            &spec.effective_rule(),
            alpha,
            montecarlo::replicate_seed(seed, 0),
            steps,
        );
        io::write_atomic(&resolve(path), &montecarlo::space_time_text(&traj))?;
    }
    let (m1, m110) = spec.conserved()?;
    let format = format_of(output, Format::Csv)?;
    let mut notes = vec![format!("rule={rule}")];
    if let Some(exact) = est.exact {
        notes.push(format!("exact={exact}"));
    }
    notes.push(format!("pattern_mean={} pattern_stderr={}", est.pattern_mean, est.pattern_stderr));
    let body = if per_replicate {
        #[derive(serde::Serialize)]
        struct Row<'a> {
            replicate: usize,
            initial: &'a str,
            flux: f64,
            pattern_flux: f64,
        }
        let rows: Vec<Row> = est
            .replicates
            .iter()
            .enumerate()
            .map(|(i, r)| Row {
                replicate: i,
                initial: &r.initial,
                flux: r.flux,
                pattern_flux: r.pattern_flux,
            })
            .collect();
        render(format, &["replicate", "initial", "flux", "pattern_flux"], &rows, &notes)?
    } else {
        let l = len as f64;
        let row = SweepRow {
            len,
            m1,
            m110,
            alpha,
            rho1: m1 as f64 / l,
            rho110: m110 as f64 / l,
            q_hat: est.mean,
            stderr: est.stderr,
            n_max: steps,
            n_burn: burn_in,
            replicates,
            seed,
        };
        render(format, &io::SWEEP_HEADER, &[row], &notes)?
    };
    Ok(Artifact {
        body,
        summary: format!(
            "simulate {rule}: L={len} m1={m1} m110={m110} alpha={alpha} Q_hat={:.6} stderr={:.2e}",
            est.mean, est.stderr
        ),
    })
}

fn omega_text(dec: &Decomposition) -> String {
    let mut s = String::new();
    for o in &dec.omegas {
        let members: Vec<String> = o.members.iter().map(|m| m.representative.to_string()).collect();
        s.push_str(&format!("Omega_{} ({} classes) = {{{}}}\n", o.id, o.size(), members.join(", ")));
    }
    if !dec.transient.is_empty() {
        let t: Vec<String> = dec.transient.iter().map(|m| m.representative.to_string()).collect();
        s.push_str(&format!("transient ({}) = {{{}}}\n", t.len(), t.join(", ")));
    }
    s
}

fn run(cli: Cli) -> Result<Artifact> {
    match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Sector { sector, output } => {
            let dec = decomposition(&sector)?;
            let mut rows = Vec::new();
            for o in &dec.omegas {
                for m in &o.members {
                    let (k1, k2) = m.representative.weight_exponents();
                    rows.push(io::SectorRow {
                        class: m.representative.to_string(),
                        orbit_size: m.orbit_size,
                        m1110: k1,
                        m010: k2,
                        membership: o.id.to_string(),
                    });
                }
            }
            for m in &dec.transient {
                let (k1, k2) = m.representative.weight_exponents();
                rows.push(io::SectorRow {
                    class: m.representative.to_string(),
                    orbit_size: m.orbit_size,
                    m1110: k1,
                    m010: k2,
                    membership: "transient".into(),
                });
            }
            rows.sort_by(|a, b| a.class.cmp(&b.class));
            let raw: usize = rows.iter().map(|r| r.orbit_size).sum();
            let notes = vec![format!(
                "L={} m1={} m110={} classes={} raw={raw}",
                sector.len,
                sector.m1,
                sector.m110,
                rows.len()
            )];
            Ok(Artifact {
                body: render(format_of(&output, Format::Csv)?, &io::SECTOR_HEADER, &rows, &notes)?,
                summary: format!(
                    "sector ({}, {}, {}): {} classes, {raw} configurations, {} irreducible sets, {} transient",
                    sector.len,
                    sector.m1,
                    sector.m110,
                    rows.len(),
                    dec.omegas.len(),
                    dec.transient.len()
                ),
            })
        }
        Command::Omega { sector, output } => {
            let dec = decomposition(&sector)?;
            let body = match output.format.as_deref().unwrap_or("text") {
                "text" => omega_text(&dec),
                "json" => io::to_json(&serde_json::json!({
                    "schema_version": io::SCHEMA_VERSION,
                    "L": sector.len, "m1": sector.m1, "m110": sector.m110,
                    "omegas": dec.omegas,
                    "transient": dec.transient.iter().map(|m| m.representative.to_string()).collect::<Vec<_>>(),
                }))?,
                "csv" => {
                    let rows: Vec<(usize, String)> = dec
                        .omegas
                        .iter()
                        .flat_map(|o| o.members.iter().map(move |m| (o.id, m.representative.to_string())))
                        .collect();
                    io::to_csv(&["omega_id", "class"], &rows, &[])?
                }
                other => return Err(Error::invalid(format!("unknown format {other:?} for omega"))),
            };
            let sizes: Vec<String> = dec.omegas.iter().map(|o| o.size().to_string()).collect();
            Ok(Artifact {
                body,
                summary: format!(
                    "omega ({}, {}, {}): {} irreducible sets of sizes [{}], {} transient classes",
                    sector.len,
                    sector.m1,
                    sector.m110,
                    dec.omegas.len(),
                    sizes.join(", "),
                    dec.transient.len()
                ),
            })
        }
        Command::Matrix { sector, omega, output } => {
            let dec = decomposition(&sector)?;
            let omegas = pick_omegas(&dec, omega)?;
            let mut mats = Vec::new();
            for o in &omegas {
                let m = markov::build_matrix(o)?;
                mats.push(serde_json::json!({
                    "omega_id": o.id,
                    "members": o.members.iter().map(|c| c.representative.to_string()).collect::<Vec<_>>(),
                    "rows_sum_to_one": m.rows_sum_to_one(),
                    "entries": m.entries.iter().map(|row| row.iter().map(|e| e.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
                }));
            }
            let body = match format_of(&output, Format::Json)? {
                Format::Json => io::to_json(&serde_json::json!({
                    "schema_version": io::SCHEMA_VERSION,
                    "matrices": mats,
                }))?,
                Format::Csv => {
                    let mut rows = Vec::new();
                    for o in &omegas {
                        let m = markov::build_matrix(o)?;
                        for (i, row) in m.entries.iter().enumerate() {
                            for (j, e) in row.iter().enumerate() {
                                if !e.is_zero() {
                                    rows.push((
                                        o.id,
                                        o.members[i].representative.to_string(),
                                        o.members[j].representative.to_string(),
                                        e.to_string(),
                                    ));
                                }
                            }
                        }
                    }
                    io::to_csv(&["omega_id", "from", "to", "probability"], &rows, &[])?
                }
            };
            Ok(Artifact {
                body,
                summary: format!("matrix: {} irreducible set(s)", omegas.len()),
            })
        }
        Command::Stationary {
            sector,
            omega,
            alpha,
            output,
        } => {
            check_alpha_open(alpha)?;
            let dec = decomposition(&sector)?;
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            for o in pick_omegas(&dec, omega)? {
                let m = markov::build_matrix(&o)?;
                let st = markov::stationary(&m, alpha)?;
                let conj = markov::conjecture_vector(&o, alpha)?;
                worst = worst.max(st.residual);
                for (i, c) in o.members.iter().enumerate() {
                    let (k1, k2) = c.representative.weight_exponents();
                    rows.push(io::StationaryRow {
                        omega_id: o.id,
                        class: c.representative.to_string(),
                        orbit_size: c.orbit_size,
                        m1110: k1,
                        m010: k2,
                        alpha,
                        probability: st.probabilities[i],
                        conjecture: conj[i],
                    });
                }
            }
            let notes = vec![
                "probabilities are per rotation class; conjecture = orbit_size * alpha^m010 / (1-alpha)^(m1110+m010), normalized".to_string(),
            ];
            Ok(Artifact {
                body: render(format_of(&output, Format::Csv)?, &io::STATIONARY_HEADER, &rows, &notes)?,
                summary: format!("stationary: {} classes, max residual {worst:.2e}", rows.len()),
            })
        }
        Command::VerifyConjecture {
            len,
            m1,
            m110,
            max_l,
            alphas,
            tol,
            output,
        } => {
            let alphas = alphas.unwrap_or_else(|| VERIFY_ALPHAS.to_vec());
            for &a in &alphas {
                check_alpha_open(a)?;
            }
            let omegas: Vec<OmegaSet> = match (max_l, len, m1, m110) {
                (Some(max_l), None, None, None) => {
                    let mut all = Vec::new();
                    for l in 1..=max_l {
                        for s in sectors_of_length(l)? {
                            all.extend(recurrent_classes(&s)?.omegas);
                        }
                    }
                    all
                }
                (None, Some(len), Some(m1), Some(m110)) => {
                    decomposition(&SectorArgs {
                        len,
                        m1,
                        m110,
                        bound: stochflux::ensemble::DEFAULT_ENUMERATION_BOUND,
                    })?
                    .omegas
                }
                _ => return Err(Error::invalid("give either --max-l or all of --L, --m1, --m110")),
            };
            let mut rows = Vec::new();
            let mut failures = 0usize;
            for o in &omegas {
                let rep = markov::verify_conjecture(o, &alphas, tol)?;
                if !rep.passed() {
                    failures += 1;
                }
                for c in &rep.checks {
                    rows.push(io::ConjectureRow {
                        len: rep.len,
                        m1: rep.m1,
                        m110: rep.m110,
                        omega_id: rep.omega_id,
                        size: rep.size,
                        alpha: c.alpha,
                        max_rel_error: c.max_rel_error,
                        residual: c.residual,
                        passed: c.passed,
                    });
                }
            }
            let notes = vec![format!(
                "weights include the orbit-size factor; tolerance={tol}; irreducible sets={} failing={failures}",
                omegas.len()
            )];
            Ok(Artifact {
                body: render(format_of(&output, Format::Csv)?, &io::CONJECTURE_HEADER, &rows, &notes)?,
                summary: format!(
                    "verify-conjecture: {} irreducible sets, {failures} failing at tol {tol:e}",
                    omegas.len()
                ),
            })
        }
        Command::Partition {
            len,
            m1,
            m110,
            scope,
            omega,
            output,
        } => {
            let table = match scope.parse::<Scope>()? {
                Scope::Sector => {
                    if m1 > len {
                        return Err(Error::invalid("m1 must not exceed L"));
                    }
                    theory::partition_sector_dp(len, m1, m110)?
                }
                Scope::Omega => {
                    let dec = decomposition(&SectorArgs {
                        len,
                        m1,
                        m110,
                        bound: stochflux::ensemble::DEFAULT_ENUMERATION_BOUND,
                    })?;
                    let id = match (omega, dec.omegas.len()) {
                        (Some(i), _) => i,
                        (None, 1) => 1,
                        (None, n) => {
                            return Err(Error::invalid(format!("sector has {n} irreducible sets; pick one with --omega")))
                        }
                    };
                    theory::partition_omega(&pick_omegas(&dec, Some(id))?[0])
                }
            };
            let notes = vec![format!(
                "scope={scope} L={len} m1={m1} m110={m110} kmax={} total={}",
                if sector_nonempty(len, m1, m110) { table.kmax().to_string() } else { "-".into() },
                table.total()
            )];
            Ok(Artifact {
                body: render(format_of(&output, Format::Csv)?, &io::PARTITION_HEADER, &io::partition_rows(&table), &notes)?,
                summary: format!("partition: {} nonzero entries, total {}", table.counts.len(), table.total()),
            })
        }
        Command::FluxTheory {
            len,
            m1,
            m110,
            alpha,
            scope,
            output,
        } => {
            check_alpha_open(alpha)?;
            let scope: Scope = scope.parse()?;
            let m1s: Vec<usize> = match m1 {
                Some(m) => {
                    if !sector_nonempty(len, m, m110) {
                        return Err(Error::InfeasibleSector { l: len, m1: m, m110 });
                    }
                    vec![m]
                }
                None => (0..=len).filter(|&m| sector_nonempty(len, m, m110)).collect(),
            };
            let format = format_of(&output, Format::Csv)?;
            let (body, n) = match scope {
                Scope::Sector => {
                    let points = m1s
                        .iter()
                        .map(|&m| theory::q_theory(&theory::partition_sector_dp(len, m, m110)?, alpha))
                        .collect::<Result<Vec<_>>>()?;
                    let notes = vec!["scope=sector".to_string()];
                    (render(format, &io::FLUX_THEORY_HEADER, &points, &notes)?, points.len())
                }
                Scope::Omega => {
                    #[derive(serde::Serialize)]
                    struct Row {
                        omega_id: usize,
                        #[serde(flatten)]
                        point: theory::FluxPoint,
                    }
                    let mut rows = Vec::new();
                    for &m in &m1s {
                        let dec = decomposition(&SectorArgs {
                            len,
                            m1: m,
                            m110,
                            bound: stochflux::ensemble::DEFAULT_ENUMERATION_BOUND,
                        })?;
                        for o in &dec.omegas {
                            rows.push(Row {
                                omega_id: o.id,
                                point: theory::q_theory(&theory::partition_omega(o), alpha)?,
                            });
                        }
                    }
                    let header = ["omega_id", "L", "m1", "m110", "alpha", "Q_v", "Q_u"];
                    let notes = vec!["scope=omega".to_string()];
                    let n = rows.len();
                    (render(format, &header, &rows, &notes)?, n)
                }
            };
            Ok(Artifact {
                body,
                summary: format!("flux-theory: {n} points at L={len} m110={m110} alpha={alpha}"),
            })
        }
        Command::Diagram {
            len,
            alpha,
            rule,
            m110,
            steps,
            burn_in,
            seed,
            replicates,
            output,
        } => {
            let template = SimulationSpec {
                rule: rule.parse()?,
                len,
                init: InitialCondition::Generated { m1: 0, m110: 0 },
                alpha,
                steps,
                burn_in,
                seed,
                replicates,
            };
            template.validate()?;
            let grid: Vec<(usize, usize)> = match m110 {
                Some(k) => (0..=len).map(|m| (m, k)).filter(|&(m, k)| 2 * k <= m && m + k <= len).collect(),
                None => montecarlo::full_grid(len),
            };
            let res = montecarlo::sweep_diagram(&template, &grid)?;
            let notes: Vec<String> = res
                .skipped
                .iter()
                .map(|(m1, m110)| format!("skipped empty sector m1={m1} m110={m110}"))
                .collect();
            Ok(Artifact {
                body: render(format_of(&output, Format::Csv)?, &io::SWEEP_HEADER, &res.rows, &notes)?,
                summary: format!(
                    "diagram: {} points, {} skipped, L={len} alpha={alpha}",
                    res.rows.len(),
                    res.skipped.len()
                ),
            })
        }
        Command::LimitCheck {
            len,
            m1,
            m110,
            alphas,
            output,
        } => {
            let alphas = alphas.unwrap_or_else(|| DEFAULT_LIMIT_ALPHAS.to_vec());
            let rep = theory::limit_check(len, m1, m110, &alphas)?;
            let rows: Vec<io::LimitCsvRow> = rep
                .rows
                .iter()
                .map(|r| io::LimitCsvRow {
                    alpha: r.alpha,
                    q_u: r.q_u,
                    target: rep.target,
                    deviation: r.deviation,
                })
                .collect();
            let notes = vec![
                format!("kmax={} dominant={} target={} dominant_matches={}", rep.kmax, rep.dominant, rep.target_exact, rep.dominant_matches()),
                format!("extrapolated={}", rep.extrapolated),
            ];
            Ok(Artifact {
                body: render(format_of(&output, Format::Csv)?, &io::LIMIT_HEADER, &rows, &notes)?,
                summary: format!(
                    "limit-check ({len}, {m1}, {m110}): dominant {} vs target {}, extrapolated {:.6}",
                    rep.dominant, rep.target_exact, rep.extrapolated
                ),
            })
        }
    }
}

fn output_of(cmd: &Command) -> &Output {
    match cmd {
        Command::Simulate(SimulateArgs { output, .. })
        | Command::Sector { output, .. }
        | Command::Omega { output, .. }
        | Command::Matrix { output, .. }
        | Command::Stationary { output, .. }
        | Command::VerifyConjecture { output, .. }
        | Command::Partition { output, .. }
        | Command::FluxTheory { output, .. }
        | Command::Diagram { output, .. }
        | Command::LimitCheck { output, .. } => output,
    }
}

fn resolve(path: &PathBuf) -> PathBuf {
    match std::env::var_os("STOCHFLUX_OUT_DIR") {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.clone(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }
    let out = output_of(&cli.command).out.clone();
    let result = run(cli).and_then(|artifact| {
        match out {
            Some(path) => {
                let path = resolve(&path);
                io::write_atomic(&path, &artifact.body)?;
                println!("{} -> {}", artifact.summary, path.display());
            }
            None => {
                print!("{}", artifact.body);
                eprintln!("{}", artifact.summary);
            }
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

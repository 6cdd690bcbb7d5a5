//! Command-line front end: exact pfaffian tools, representation builders,
//! projection constructions and the experiment pipelines.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use nctorus::appendix4d::{psi_commutation_residual, rieffel_type_4d, BumpProfile, KChoice};
use nctorus::harness::{
    run_condition_audit, run_exel_sweep, run_stability_probe, run_trace_audit, write_csv, write_json,
    ExperimentConfig, ThetaSource,
};
use nctorus::ncrep::{build_rep, clock_shift_tuple, perturb, DEFAULT_DIM_CAP};
use nctorus::projections::{default_epsilon, r_theta, rieffel_table, RieffelFunctions, Truncation};
use nctorus::scalar::{format_rational, parse_rational, rational_to_f64, Field};
use nctorus::schurflow::flow;
use nctorus::skewmat::{enumerate_index_sets, pfaffian_minor, AnySkew, IndexSet, JsonEntry, SkewMatrix};
use nctorus::superinc::{build_theta, monotone_chain_check, validate_u64, SuperIncreasingSeq, DEMO_ALPHA};
use nctorus::{Error, Result};

#[derive(Parser)]
#[command(name = "nctorus", version, about = "Projections and pfaffian invariants of noncommutative tori")]
struct Cli {
    /// Experiment configuration (TOML or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces the configured seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pfaffians of a skew matrix and its even minors.
    Pf {
        #[arg(long)]
        theta: PathBuf,
        /// Comma-separated 1-based index set; all even minors when absent.
        #[arg(long)]
        index: Option<String>,
    },
    /// Iterates of the Schur-complement flow.
    Flow {
        #[arg(long)]
        theta: PathBuf,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = DEMO_ALPHA)]
        alpha: f64,
    },
    /// Existence conditions on Θ and its even minors.
    CheckConditions {
        #[arg(long)]
        theta: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        /// Also require the strong condition on every minor.
        #[arg(long)]
        strong: bool,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// α-power phase matrix of a super-increasing sequence.
    Superinc {
        /// `pow2` or comma-separated terms.
        #[arg(long, default_value = "pow2")]
        seq: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEMO_ALPHA)]
        alpha: f64,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Exact (optionally perturbed) representation of a rational Θ.
    Rep {
        #[arg(long)]
        theta: PathBuf,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_DIM_CAP)]
        dim_cap: usize,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Rieffel projection on the clock and shift pair of θ = p/q.
    Rieffel(RieffelArgs),
    /// Four-torus projection for a rational 4×4 Θ.
    Bott4 {
        #[arg(long)]
        theta: PathBuf,
        #[arg(long)]
        q: usize,
        /// `auto` or an integer.
        #[arg(long, default_value = "auto")]
        k: String,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Exel-formula residuals over the configured cells, deltas and seeds.
    ExelSweep,
    /// Perturbation stability and empirical gap threshold.
    Stability,
    /// Lattice decomposition of construction traces.
    TraceAudit,
}

#[derive(Args)]
struct RieffelArgs {
    /// θ as p/q; the pair acts on C^q.
    #[arg(long)]
    theta: String,
    /// Matrix size; defaults to the denominator of θ.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Fourier truncation; the q-point grid when absent.
    #[arg(long)]
    n_trunc: Option<usize>,
    #[arg(long)]
    emit: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    Ok(cfg)
}

fn read_theta(path: &Path) -> Result<AnySkew> {
    AnySkew::from_json(&serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn emit(path: Option<&PathBuf>, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn pf_rows<T: JsonEntry>(m: &SkewMatrix<T>, sets: &[IndexSet]) -> Result<Vec<Value>> {
    sets.iter().map(|i| Ok(json!({ "I": i, "pf": pfaffian_minor(m, i)?.to_json() }))).collect()
}

fn flow_json<T: Field + JsonEntry>(m: &SkewMatrix<T>, steps: usize) -> Result<Value> {
    let f = flow(m, steps)?;
    let iterates: Vec<Value> = f.iterates.iter().map(|x| x.to_json()).collect();
    let ratios: Vec<Value> = f.ratios.iter().map(|x| x.to_json()).collect();
    Ok(json!({ "iterates": iterates, "ratios": ratios, "factorization_defects": f.factorization_defects }))
}

fn parse_fraction(s: &str) -> Result<(i64, usize)> {
    let r = parse_rational(s).ok_or_else(|| Error::Config(format!("{s:?} is not p/q")))?;
    let p: i64 = r.numer().try_into().map_err(|_| Error::Config("numerator too large".into()))?;
    let q: usize = r.denom().try_into().map_err(|_| Error::Config("denominator too large".into()))?;
    Ok((p, q))
}

fn to_value(x: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.cmd {
        Cmd::Pf { theta, index } => {
            let m = read_theta(theta)?;
            let sets = match index {
                Some(s) => {
                    let idx = s
                        .split(',')
                        .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad index {x:?}"))))
                        .collect::<Result<Vec<usize>>>()?;
                    let set = IndexSet::new(idx)?;
                    set.check(m.n())?;
                    vec![set]
                }
                None => enumerate_index_sets(m.n()),
            };
            let rows = match &m {
                AnySkew::Rational(a) => pf_rows(a, &sets)?,
                AnySkew::Float(a) => pf_rows(a, &sets)?,
                AnySkew::Alpha(a) => pf_rows(a, &sets)?,
            };
            emit(None, &json!({ "n": m.n(), "minors": rows }))?;
            Ok(true)
        }
        Cmd::Flow { theta, m, alpha } => {
            let v = match read_theta(theta)? {
                AnySkew::Rational(a) => flow_json(&a, *m)?,
                AnySkew::Float(a) => flow_json(&a, *m)?,
                a @ AnySkew::Alpha(_) => flow_json(&a.to_float(Some(*alpha))?, *m)?,
            };
            emit(None, &v)?;
            Ok(true)
        }
        Cmd::CheckConditions { theta, tol, strong, alpha } => {
            let mut cfg = config(cli)?;
            if let Some(p) = theta {
                cfg.theta = ThetaSource::File { path: p.clone() };
            }
            if let Some(t) = tol {
                cfg.tol.check = *t;
            }
            if let Some(a) = alpha {
                cfg.tol.alpha = *a;
            }
            cfg.validate()?;
            let report = run_condition_audit(&cfg)?;
            let pass = report.verdict && (!strong || report.strong.verdict);
            write_json(&cli.out_dir.join("conditions.json"), &report)?;
            emit(None, &to_value(&report)?)?;
            Ok(pass)
        }
        Cmd::Superinc { seq, n, alpha, emit: path } => {
            let s = if seq == "pow2" {
                SuperIncreasingSeq::pow2_for(*n)
            } else {
                let terms = seq
                    .split(',')
                    .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad term {x:?}"))))
                    .collect::<Result<Vec<u64>>>()?;
                validate_u64(&terms)?
            };
            let theta = build_theta(&s, *n)?;
            let float = theta.map(|p| p.eval_f64(*alpha));
            let chain = if *n >= 2 { Some(monotone_chain_check(&s, *n - *n % 2, *alpha)?) } else { None };
            let pass = chain.as_ref().is_none_or(|c| c.pass);
            match path {
                Some(p) => {
                    emit(Some(p), &theta.to_json())?;
                    emit(Some(&p.with_extension("float.json")), &float.to_json())?;
                    emit(None, &json!({ "alpha": alpha, "chain": chain }))?;
                }
                None => emit(None, &json!({ "theta": theta.to_json(), "float": float.to_json(), "alpha": alpha, "chain": chain }))?,
            }
            Ok(pass)
        }
        Cmd::Rep { theta, q, delta, dim_cap, emit: path } => {
            let m = match read_theta(theta)? {
                AnySkew::Rational(m) => m,
                _ => return Err(Error::NotRational("rep needs a rational theta".into())),
            };
            let exact = build_rep(&m, *q, *dim_cap)?;
            let seed = cli.seed.unwrap_or(0);
            let t = perturb(&exact, *delta, seed)?;
            let summary = json!({
                "n": t.n, "q": t.q, "dim": t.dim(), "delta": delta, "seed": seed,
                "relation_defect": t.relation_defect()?,
                "unitarity_defect": t.unitarity_defect()?,
            });
            match path {
                Some(p) => {
                    emit(Some(p), &t.to_json())?;
                    emit(None, &summary)?;
                }
                None => emit(None, &summary)?,
            }
            Ok(true)
        }
        Cmd::Rieffel(a) => {
            let (p, den) = parse_fraction(&a.theta)?;
            let q = a.q.unwrap_or(den);
            if q % den != 0 {
                return Err(Error::Config(format!("q = {q} is not a multiple of the denominator {den}")));
            }
            let p = p * (q / den) as i64;
            let t = clock_shift_tuple(p, q);
            let th = (p as f64 / q as f64).rem_euclid(1.0);
            let r = r_theta(t.u(1), t.u(2), th, a.eps)?;
            let mut out = json!({
                "theta": a.theta, "q": q,
                "eps": a.eps.unwrap_or_else(|| default_epsilon(th)),
                "projection": r.report.summary(),
                "class_trace": r.class_trace,
            });
            if th != 0.0 {
                let funcs = RieffelFunctions::new(th, a.eps.unwrap_or_else(|| default_epsilon(th)))?;
                let trunc = a.n_trunc.map_or(Truncation::Grid(q), Truncation::Fixed);
                let table = rieffel_table(IndexSet::pair(1, 2)?, &funcs, trunc)?;
                out["table"] = table.to_json();
            }
            emit(a.emit.as_ref(), &out)?;
            Ok(true)
        }
        Cmd::Bott4 { theta, q, k, emit: path } => {
            let m = match read_theta(theta)? {
                AnySkew::Rational(m) => m,
                _ => return Err(Error::NotRational("bott4 needs a rational theta".into())),
            };
            let k = match k.as_str() {
                "auto" => KChoice::Auto,
                s => KChoice::Fixed(s.parse().map_err(|_| Error::Config(format!("bad k {s:?}")))?),
            };
            let t = build_rep(&m, *q, DEFAULT_DIM_CAP)?;
            let profile = BumpProfile::with_default_eps(rational_to_f64(m.theta(1, 2)))?;
            let p = rieffel_type_4d(&t, &profile, k, None)?;
            let out = json!({
                "theta": m.to_json(),
                "pfaffian": format_rational(&nctorus::skewmat::pfaffian(&m)?),
                "summary": p.summary(),
                "psi_commutation_residual": psi_commutation_residual(&p)?,
            });
            emit(path.as_ref(), &out)?;
            Ok((p.trace - p.target).abs() <= 5e-3)
        }
        Cmd::ExelSweep => {
            let cfg = config(cli)?;
            let rows = run_exel_sweep(&cfg)?;
            let pass = rows.iter().all(|r| r.status != nctorus::harness::RowStatus::Failed);
            match cli.format {
                Format::Csv => write_csv(&cli.out_dir.join("exel_sweep.csv"), &rows)?,
                Format::Json => write_json(
                    &cli.out_dir.join("exel_sweep.json"),
                    &json!({ "meta": { "schema": nctorus::harness::SCHEMA_VERSION, "config_hash": cfg.hash(), "tol": cfg.tol }, "rows": rows }),
                )?,
            }
            Ok(pass)
        }
        Cmd::Stability => {
            let cfg = config(cli)?;
            let report = run_stability_probe(&cfg)?;
            match cli.format {
                Format::Csv => write_csv(&cli.out_dir.join("stability.csv"), &report.csv_rows())?,
                Format::Json => write_json(&cli.out_dir.join("stability.json"), &report)?,
            }
            eprintln!(
                "delta* ~ {} (failing at {:?}); max deviation below delta*/2: {:.3e}",
                report.delta_star.estimate, report.delta_star.failing, report.max_deviation_below_half
            );
            Ok(report.rigid)
        }
        Cmd::TraceAudit => {
            let cfg = config(cli)?;
            let report = run_trace_audit(&cfg)?;
            match cli.format {
                Format::Csv => write_csv(&cli.out_dir.join("trace_audit.csv"), &audit_csv(&report, &cfg))?,
                Format::Json => write_json(&cli.out_dir.join("trace_audit.json"), &report)?,
            }
            Ok(report.verdict)
        }
    }
}

#[derive(Serialize)]
struct AuditCsvRow {
    schema: &'static str,
    config_hash: String,
    label: String,
    value: f64,
    k0: Option<i64>,
    coeffs: String,
    residual: Option<f64>,
    full_lattice: String,
    pass: bool,
}

fn audit_csv(r: &nctorus::harness::TraceAuditReport, cfg: &ExperimentConfig) -> Vec<AuditCsvRow> {
    r.rows
        .iter()
        .map(|row| AuditCsvRow {
            schema: nctorus::harness::SCHEMA_VERSION,
            config_hash: cfg.hash(),
            label: row.label.clone(),
            value: row.value,
            k0: row.k0,
            coeffs: row.coeffs.iter().map(|(l, c)| format!("{l}={c}")).collect::<Vec<_>>().join(";"),
            residual: row.residual,
            full_lattice: format!("{:?}", row.full_lattice).to_lowercase(),
            pass: row.pass,
        })
        .collect()
}

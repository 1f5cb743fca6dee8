//! `ultrastab` command-line front end.
//!
//! Exit codes: 0 success or pass, 1 verification failure, 2 input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ultrastab::certificate::{
    defect_report, parse, run_repair, run_witness, verify_certificate, Certificate, Outcome, RepairMode, WitnessKind,
};
use ultrastab::config::{Caps, RunConfig};
use ultrastab::gbs::{criterion_report, GBSGraph};
use ultrastab::suites::{monomial_suite, norm_law_suite};
use ultrastab::witness::verify_claims_range;
use ultrastab::{ApproxRep, Error, Mode, RingSpec};

#[derive(Parser)]
#[command(name = "ultrastab", version, about = "Exact repair of approximate representations over finite local rings")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Ring family: zp (Z_p) or fpx (F_p[[X]]).
    #[arg(long, global = true, value_parser = ["zp", "fpx"])]
    ring: Option<String>,
    #[arg(long, global = true)]
    p: Option<u64>,
    #[arg(long, global = true)]
    precision: Option<u32>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    cap_closure: Option<u64>,
    #[arg(long, global = true)]
    cap_enumeration: Option<u64>,
    #[arg(long, global = true)]
    cap_matrix_dim: Option<u64>,
    #[arg(long, global = true)]
    cap_wreath_index: Option<u32>,
    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Defect of an approximate representation.
    Defect { rep: PathBuf },
    /// Repair an approximate representation and emit a certificate.
    Repair {
        #[arg(long)]
        mode: String,
        inputs: Vec<PathBuf>,
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Nearest matrix commuting with a monomial matrix.
    Monomial {
        p_file: PathBuf,
        d_file: PathBuf,
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Build a witness representation from a parameter file or flags.
    Witness {
        kind: String,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        i: Option<u32>,
        /// Digit code of `x`: its integer value in Z/p^K, or the base-p
        /// coefficient code in F_p[X]/(X^K) (p for X).
        #[arg(long)]
        x: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        a: Option<u32>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Re-derive a certificate from its inputs.
    Verify { certificate: PathBuf, inputs: Vec<PathBuf> },
    /// Stability criteria for a generalized Baumslag-Solitar graph.
    Gbs {
        graph: Option<PathBuf>,
        /// Use BS(m, n) instead of a graph file.
        #[arg(long, num_args = 2, value_names = ["M", "N"], allow_negative_numbers = true)]
        bs: Option<Vec<i64>>,
    },
    /// Check the wreath-construction claims for indices up to `max_i`.
    Claims {
        max_i: u32,
        #[arg(long, default_value_t = 1)]
        min_i: u32,
    },
    /// Seeded randomized property suite: norm-laws or monomial.
    Proptest {
        suite: String,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

enum Failure {
    Verification(String),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::VerificationFailed(m) => Failure::Verification(m),
            e => Failure::Input(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn read_json(path: &Path) -> Res<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_json(path: Option<&Path>, v: &Value) -> Res<()> {
    let text = serde_json::to_string_pretty(v).expect("json values serialize") + "\n";
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

impl Global {
    fn config(&self) -> Res<RunConfig> {
        let mut caps = Caps::from_env()?;
        let set = |v: Option<u64>, slot: &mut u64, name: &str| -> Res<()> {
            match v {
                Some(0) => Err(Failure::Input(format!("--cap-{name} must be positive"))),
                Some(v) => {
                    *slot = v;
                    Ok(())
                }
                None => Ok(()),
            }
        };
        set(self.cap_closure, &mut caps.closure, "closure")?;
        set(self.cap_enumeration, &mut caps.enumeration, "enumeration")?;
        set(self.cap_matrix_dim, &mut caps.matrix_dim, "matrix-dim")?;
        if let Some(w) = self.cap_wreath_index {
            if w == 0 {
                return Err(Failure::Input("--cap-wreath-index must be positive".into()));
            }
            caps.wreath_index = w;
        }
        let ring = match (&self.ring, self.p, self.precision) {
            // `--p` alone is enough for gbs and claims
            (_, _, None) => None,
            (r, Some(p), Some(k)) => {
                let mode = if r.as_deref() == Some("fpx") { Mode::EqualChar } else { Mode::MixedChar };
                Some(RingSpec::new(mode, p, k)?)
            }
            _ => return Err(Failure::Input("a ring needs both --p and --precision".into())),
        };
        Ok(RunConfig { ring, caps, seed: self.seed, output: self.output.as_ref().map(|p| p.display().to_string()) })
    }
}

fn need_ring(cfg: &RunConfig) -> Res<RingSpec> {
    cfg.ring.ok_or_else(|| Failure::Input("this command needs --p and --precision".into()))
}

fn emit(outcome: &Outcome, out: Option<&Path>, cert: Option<&Path>) -> Res<()> {
    let c = serde_json::to_value(&outcome.certificate).expect("certificates serialize");
    let output = outcome.output.clone().unwrap_or(Value::Null);
    match cert {
        Some(cp) => {
            write_json(Some(cp), &c)?;
            write_json(out, &output)
        }
        None if out.is_some() => write_json(out, &output),
        None => write_json(None, &json!({ "certificate": c, "output": output })),
    }
}

fn run(cli: Cli) -> Res<bool> {
    let cfg = cli.global.config()?;
    let out = cli.global.output.as_deref();
    match cli.cmd {
        Cmd::Defect { rep } => {
            let rep: ApproxRep = parse(&read_json(&rep)?, "representation")?;
            write_json(out, &serde_json::to_value(defect_report(&rep)).expect("reports serialize"))?;
            Ok(true)
        }
        Cmd::Repair { mode, inputs, certificate } => {
            let mode = RepairMode::parse(&mode)?;
            let vals = inputs.iter().map(|p| read_json(p)).collect::<Res<Vec<_>>>()?;
            let o = run_repair(mode, &vals, &cfg.caps)?;
            emit(&o, out, certificate.as_deref())?;
            Ok(o.certificate.verified)
        }
        Cmd::Monomial { p_file, d_file, certificate } => {
            let vals = vec![read_json(&p_file)?, read_json(&d_file)?];
            let o = run_repair(RepairMode::Monomial, &vals, &cfg.caps)?;
            emit(&o, out, certificate.as_deref())?;
            Ok(o.certificate.verified)
        }
        Cmd::Witness { kind, params, i, x, n, a, samples, certificate } => {
            let kind = WitnessKind::parse(&kind)?;
            let params = match params {
                Some(p) => read_json(&p)?,
                None => {
                    let ring = need_ring(&cfg)?;
                    let missing = |f: &str| Failure::Input(format!("--{f} is required without --params"));
                    let x = x.map(|c| ring.check_code(c).map(|c| ring.encode(c))).transpose()?;
                    match kind {
                        WitnessKind::Badestimate => {
                            json!({ "ring": ring, "i": i.ok_or_else(|| missing("i"))?, "x": x.ok_or_else(|| missing("x"))? })
                        }
                        WitnessKind::Wreath => json!({
                            "ring": ring,
                            "i": i.ok_or_else(|| missing("i"))?,
                            "x": x.ok_or_else(|| missing("x"))?,
                            "samples": samples.unwrap_or(10_000),
                            "seed": cfg.seed,
                        }),
                        WitnessKind::Commutator => {
                            json!({ "ring": ring, "n": n.unwrap_or(2), "a": a.ok_or_else(|| missing("a"))? })
                        }
                    }
                }
            };
            let o = run_witness(kind, &params, &cfg.caps)?;
            emit(&o, out, certificate.as_deref())?;
            Ok(o.certificate.verified)
        }
        Cmd::Verify { certificate, inputs } => {
            let cert: Certificate = parse(&read_json(&certificate)?, "certificate")?;
            let vals = inputs.iter().map(|p| read_json(p)).collect::<Res<Vec<_>>>()?;
            let report = verify_certificate(&cert, &vals, &cfg.caps)?;
            write_json(out, &serde_json::to_value(&report).expect("reports serialize"))?;
            Ok(report.passed)
        }
        Cmd::Gbs { graph, bs } => {
            let p = cli.global.p.ok_or_else(|| Failure::Input("--p is required".into()))?;
            let g = match (graph, bs) {
                (_, Some(mn)) => GBSGraph::baumslag_solitar(mn[0], mn[1])?,
                (Some(path), None) => parse(&read_json(&path)?, "GBS graph")?,
                (None, None) => return Err(Failure::Input("give a graph file or --bs M N".into())),
            };
            write_json(out, &serde_json::to_value(criterion_report(&g, p)).expect("reports serialize"))?;
            Ok(true)
        }
        Cmd::Claims { max_i, min_i } => {
            let p = cli.global.p.unwrap_or(2);
            let report = verify_claims_range(p, min_i, max_i, cfg.caps.closure)?;
            write_json(out, &serde_json::to_value(&report).expect("reports serialize"))?;
            Ok(report.all_passed)
        }
        Cmd::Proptest { suite, samples, n } => {
            let ring = need_ring(&cfg)?;
            let report = match suite.as_str() {
                "norm-laws" => norm_law_suite(ring, n, samples, cfg.seed)?,
                "monomial" => monomial_suite(ring, n, samples, cfg.seed)?,
                other => return Err(Failure::Input(format!("unknown suite {other:?}"))),
            };
            write_json(out, &serde_json::to_value(&report).expect("reports serialize"))?;
            Ok(report.total_violations() == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

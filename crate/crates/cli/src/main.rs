//! `certify`: decide sufficient optimality conditions for a candidate point
//! of a bilevel program and emit a machine-checkable report.
//!
//! Exit codes: 0 when at least one sufficient condition holds, 2 when none
//! holds, 3 when every requested condition is inapplicable or undetermined,
//! 1 on input errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use strictmin::scalar;
use strictmin::second_order::ScanParams;

use strictmin_cli::corpus;
use strictmin_cli::oracle::OracleParams;
use strictmin_cli::report::{render_report, run_on_text, RunConfig, ALL_CONDITIONS};

#[derive(Parser)]
#[command(name = "certify")]
#[command(about = "Certificates for sufficient optimality in optimistic bilevel programs")]
#[command(subcommand_negates_reqs = true)]
struct Cli {
    #[command(flatten)]
    certify: CertifyArgs,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Instance file (JSON).
    #[arg(long, required = true)]
    input: Option<PathBuf>,

    /// Comma-separated conditions:
    /// fo-vf,fo-vf-dual,fo-implicit,fo-va,fo-kkt,so,so-dual
    #[arg(long)]
    conditions: Option<String>,

    /// Report output file; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,

    /// Growth oracle: radius=R,step=S[,order=N] with rational R, S.
    #[arg(long)]
    oracle: Option<String>,

    /// Samples per cone piece in the second-order scan.
    #[arg(long)]
    scan_density: Option<usize>,

    /// Positivity margin for sampled (degree-two normalized) values.
    #[arg(long)]
    margin: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the regression corpus in a directory of instance and
    /// expectation files.
    Corpus {
        /// Directory holding NAME.json / NAME.expect.json pairs.
        #[arg(long, default_value = "corpus")]
        dir: PathBuf,
    },
}

fn parse_oracle(text: &str) -> Result<OracleParams, String> {
    let mut radius = None;
    let mut step = None;
    let mut order = 1u32;
    for part in text.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("oracle flag entry {part:?} is not key=value"))?;
        match key.trim() {
            "radius" => radius = Some(scalar::parse(value).map_err(|e| e.to_string())?),
            "step" => step = Some(scalar::parse(value).map_err(|e| e.to_string())?),
            "order" => {
                order = value
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad oracle order {value:?}"))?
            }
            other => return Err(format!("unknown oracle key {other:?}")),
        }
    }
    Ok(OracleParams {
        radius: radius.ok_or("oracle flag needs radius=R")?,
        step: step.ok_or("oracle flag needs step=S")?,
        order,
    })
}

fn certify(args: &CertifyArgs) -> Result<u8, String> {
    let input = args.input.as_ref().expect("clap enforces --input");
    let text =
        fs::read_to_string(input).map_err(|e| format!("cannot read {}: {e}", input.display()))?;
    let conditions: Vec<String> = match &args.conditions {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
        None => ALL_CONDITIONS.iter().map(|s| s.to_string()).collect(),
    };
    let mut scan = ScanParams::default();
    if let Some(density) = args.scan_density {
        scan.density = density;
    }
    if let Some(margin) = &args.margin {
        scan.margin = scalar::parse(margin).map_err(|e| e.to_string())?;
    }
    let oracle = match &args.oracle {
        Some(text) => Some(parse_oracle(text)?),
        None => None,
    };
    let config = RunConfig {
        conditions,
        scan,
        oracle,
    };
    let started = Instant::now();
    let report = run_on_text(&text, &config).map_err(|e| e.to_string())?;
    eprintln!("certify: {} in {:?}", report.instance, started.elapsed());
    let rendered = render_report(&report);
    match &args.report {
        Some(path) => fs::write(path, &rendered)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(report.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Some(Command::Corpus { dir }) => match corpus::run_corpus(dir) {
            Ok(summary) => {
                print!("{}", corpus::render_summary(&summary));
                if summary.all_ok() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(2)
                }
            }
            Err(e) => {
                eprintln!("certify corpus: {e}");
                ExitCode::from(1)
            }
        },
        None => match certify(&cli.certify) {
            Ok(code) => ExitCode::from(code),
            Err(e) => {
                eprintln!("certify: {e}");
                ExitCode::from(1)
            }
        },
    }
}

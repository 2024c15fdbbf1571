//! Command-line front end for the imitation-learning laboratory.
//!
//! Exit codes: 0 = success with no bound violations, 1 = at least one
//! finite-RHS violation (or a failed `verify`), 2 = configuration,
//! validation, or I/O error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use imlab_core::bounds::{
    check_js_tv, check_lemma1, check_lemma_a_chain, check_pinsker, check_thm1, BoundId,
    BoundReport,
};
use imlab_core::divergences::FDivKind;
use imlab_core::lab::{
    emit_report, report_csv, report_json, run_campaign, CampaignReport, ExperimentConfig,
    OutputFormat, OutputSpec,
};
use imlab_core::mdp::{state_action_occupancy, Policy, TabularMdp};
use imlab_core::worstcase;
use imlab_core::Error;

#[derive(Parser)]
#[command(name = "imlab", version, about = "Tabular imitation-learning laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign described by a JSON config file.
    Run {
        /// Path to the experiment config (JSON).
        config: PathBuf,
    },
    /// Check one bound on an MDP and an expert/imitator policy pair.
    Verify {
        /// MDP in the JSON interchange format.
        mdp: PathBuf,
        /// Expert policy as a JSON row-stochastic table.
        policy_e: PathBuf,
        /// Imitator policy as a JSON row-stochastic table.
        policy_i: PathBuf,
        /// Bound id (THM1, LEM_A_STATE, LEM_A_SA, LEM_A_VALUE, LEM1_JS,
        /// LEM1_KL, LEM1_RKL, LEM1_CHI2, LEM1_HELLINGER, PINSKER, JS_TV).
        #[arg(long)]
        bound: String,
    },
    /// Emit the closed-form discount sweep of the worst-case instance.
    Worstcase {
        /// Comma-separated discount factors.
        #[arg(long, value_delimiter = ',', required = true)]
        gammas: Vec<f64>,
        /// Write to this path instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-emit a raw JSON campaign report in another format.
    Report {
        /// Raw report produced by `run` with JSON output.
        raw: PathBuf,
        #[arg(long, value_enum)]
        format: ReportFormat,
        /// Write to this path instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)?;
            let config: ExperimentConfig =
                serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            let report = run_campaign(&config)?;
            if config.output.is_none() {
                print!("{}", report_csv(&report));
            }
            eprintln!(
                "campaign {}: {} rows, {} violations, {:.2}s",
                config.campaign.as_str(),
                report.rows.len(),
                report.violations,
                report.runtime_secs
            );
            Ok(if report.violations == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Verify {
            mdp,
            policy_e,
            policy_i,
            bound,
        } => {
            let mdp: TabularMdp = serde_json::from_str(&std::fs::read_to_string(&mdp)?)?;
            let pi_e: Policy = serde_json::from_str(&std::fs::read_to_string(&policy_e)?)?;
            let pi_i: Policy = serde_json::from_str(&std::fs::read_to_string(&policy_i)?)?;
            let id = BoundId::from_str(&bound)?;
            let report = verify_bound(&mdp, &pi_e, &pi_i, id)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.holds {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Worstcase { gammas, output } => {
            let csv = worstcase::sweep_csv(&gammas)?;
            write_or_print(&csv, output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Report {
            raw,
            format,
            output,
        } => {
            let report: CampaignReport = serde_json::from_str(&std::fs::read_to_string(&raw)?)?;
            match (format, output) {
                (ReportFormat::Csv, Some(path)) => emit_report(
                    &report,
                    &OutputSpec {
                        path,
                        format: OutputFormat::Csv,
                    },
                )?,
                (ReportFormat::Json, Some(path)) => emit_report(
                    &report,
                    &OutputSpec {
                        path,
                        format: OutputFormat::Json,
                    },
                )?,
                (ReportFormat::Csv, None) => print!("{}", report_csv(&report)),
                (ReportFormat::Json, None) => println!("{}", report_json(&report)?),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn write_or_print(body: &str, path: Option<&std::path::Path>) -> Result<(), Error> {
    match path {
        Some(p) => {
            std::fs::write(p, body)?;
            Ok(())
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// The bounds computable from an MDP and two policies alone.
fn verify_bound(
    mdp: &TabularMdp,
    pi_e: &Policy,
    pi_i: &Policy,
    id: BoundId,
) -> Result<BoundReport, Error> {
    let report = match id {
        BoundId::Thm1 => check_thm1(mdp, pi_e, pi_i)?,
        BoundId::LemAState => check_lemma_a_chain(mdp, pi_e, pi_i)?[0].clone(),
        BoundId::LemASa => check_lemma_a_chain(mdp, pi_e, pi_i)?[1].clone(),
        BoundId::LemAValue => check_lemma_a_chain(mdp, pi_e, pi_i)?[2].clone(),
        BoundId::Lem1Js => check_lemma1(mdp, pi_e, pi_i, FDivKind::Js)?,
        BoundId::Lem1Kl => check_lemma1(mdp, pi_e, pi_i, FDivKind::Kl)?,
        BoundId::Lem1Rkl => check_lemma1(mdp, pi_e, pi_i, FDivKind::ReverseKl)?,
        BoundId::Lem1Chi2 => check_lemma1(mdp, pi_e, pi_i, FDivKind::PearsonChi2)?,
        BoundId::Lem1Hellinger => check_lemma1(mdp, pi_e, pi_i, FDivKind::SquaredHellinger)?,
        BoundId::Pinsker => {
            let (e, i) = occupancies(mdp, pi_e, pi_i)?;
            check_pinsker(&i, &e)?
        }
        BoundId::JsTv => {
            let (e, i) = occupancies(mdp, pi_e, pi_i)?;
            check_js_tv(&i, &e)?
        }
        other => return Err(Error::UnsupportedBound(other.as_str().into())),
    };
    Ok(report)
}

fn occupancies(
    mdp: &TabularMdp,
    pi_e: &Policy,
    pi_i: &Policy,
) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let e = state_action_occupancy(mdp, pi_e)?;
    let i = state_action_occupancy(mdp, pi_i)?;
    Ok((e.rho_flat(), i.rho_flat()))
}

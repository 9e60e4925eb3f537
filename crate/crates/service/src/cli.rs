//! `rtb` subcommands. Everything except `serve` writes to the supplied
//! streams and returns the process exit code, so tests can drive it
//! without spawning a process.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rtb_core::admiralty::{decision_category, parse_rating, rate_state_set, AdmiraltyRating};
use rtb_core::assessment::QueryLevel;
use rtb_core::model::{validate_network, CausalNetwork};
use rtb_core::rates::RatesTable;
use rtb_core::{Error, Evidence};

use crate::surface;

#[derive(Debug, Parser)]
#[command(
    name = "rtb",
    version,
    about = "Risk, trust and bias assessment over causal networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a model file; prints `node<TAB>rule<TAB>detail` per violation.
    Validate { file: PathBuf },
    /// Posterior of one variable at the association, do or cf level.
    Query {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        target: String,
        /// Observations, `V=s,...`
        #[arg(long, default_value = "")]
        evidence: String,
        /// Interventions, `V=s,...`
        #[arg(long = "do", default_value = "")]
        interventions: String,
        #[arg(long, default_value = "assoc")]
        level: String,
    },
    /// Per-attribute risk of bias and the ensemble for one subject.
    Risk {
        #[arg(long)]
        rates: PathBuf,
        #[arg(long)]
        impact_fmr: f64,
        #[arg(long)]
        impact_fnmr: f64,
        /// `attribute=group,...`
        #[arg(long)]
        subject: String,
    },
    /// Classify an Admiralty rating, or a set of rated states.
    Admiralty {
        #[arg(long, required_unless_present = "states", conflicts_with = "states")]
        rating: Option<String>,
        /// `state=rating,...`
        #[arg(long)]
        states: Option<String>,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory of model JSON files; the bundled models when omitted.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Directory for per-session snapshot files.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
/// Unreadable or unparseable input file.
pub const EXIT_INPUT: i32 = 2;

fn report(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "{}: {e}", e.name());
    match e {
        Error::Io(_) | Error::Parse(_) => EXIT_INPUT,
        _ => EXIT_FAILURE,
    }
}

fn input_files(command: &Command) -> Vec<&PathBuf> {
    match command {
        Command::Validate { file } => vec![file],
        Command::Query { model, .. } => vec![model],
        Command::Risk { rates, .. } => vec![rates],
        _ => Vec::new(),
    }
}

/// Runs a non-`serve` subcommand.
pub fn run(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Some(missing) = input_files(command).into_iter().find(|p| !p.is_file()) {
        let _ = writeln!(err, "file-not-found: {}", missing.display());
        return EXIT_INPUT;
    }
    let result = match command {
        Command::Validate { file } => return validate(file, out, err),
        Command::Query {
            model,
            target,
            evidence,
            interventions,
            level,
        } => query(model, target, evidence, interventions, level, out),
        Command::Risk {
            rates,
            impact_fmr,
            impact_fnmr,
            subject,
        } => risk(rates, *impact_fmr, *impact_fnmr, subject, out),
        Command::Admiralty { rating, states } => admiralty(rating.as_deref(), states.as_deref(), out),
        Command::Serve { .. } => unreachable!("serve runs on the async runtime"),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => report(err, &e),
    }
}

fn validate(file: &PathBuf, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let net = match CausalNetwork::load(file) {
        Ok(net) => net,
        Err(e) => return report(err, &e),
    };
    let violations = validate_network(&net);
    for v in &violations {
        let _ = writeln!(out, "{v}");
    }
    if violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn query(
    model: &PathBuf,
    target: &str,
    evidence: &str,
    interventions: &str,
    level: &str,
    out: &mut dyn Write,
) -> rtb_core::Result<()> {
    let net = CausalNetwork::load(model)?;
    net.ensure_valid()?;
    let level: QueryLevel = level.parse()?;
    let evidence = Evidence::from(surface::parse_assignments(evidence, '=')?);
    let interventions = surface::parse_assignments(interventions, '=')?;
    let posterior = surface::posterior(&net, target, level, &interventions, &evidence)?;
    out.write_all(surface::format_posterior(&posterior).as_bytes())
        .map_err(io)
}

fn risk(
    rates: &PathBuf,
    impact_fmr: f64,
    impact_fnmr: f64,
    subject: &str,
    out: &mut dyn Write,
) -> rtb_core::Result<()> {
    let table = RatesTable::load(rates)?;
    let pairs = surface::parse_assignments_ordered(subject, '=')?;
    let risk = table.subject_risk(impact_fmr, impact_fnmr, &pairs)?;
    for (attribute, r) in &risk.per_attribute {
        writeln!(out, "{attribute} {}", surface::format_probability(*r)).map_err(io)?;
    }
    writeln!(out, "ensemble {}", surface::format_probability(risk.ensemble)).map_err(io)
}

fn admiralty(rating: Option<&str>, states: Option<&str>, out: &mut dyn Write) -> rtb_core::Result<()> {
    if let Some(text) = rating {
        let r = parse_rating(text)?;
        return writeln!(out, "{r}\t{:?}", decision_category(&r)).map_err(io);
    }
    let pairs = surface::parse_assignments_ordered(states.unwrap_or(""), '=')?;
    let rated = pairs
        .iter()
        .map(|(id, r)| Ok((id.as_str(), parse_rating(r)?)))
        .collect::<rtb_core::Result<Vec<(&str, AdmiraltyRating)>>>()?;
    let landscape = rate_state_set(&rated)?;
    for s in landscape.iter() {
        writeln!(out, "{}\t{}\t{:?}", s.state_id, s.rating, s.category).map_err(io)?;
    }
    Ok(())
}

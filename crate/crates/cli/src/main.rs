use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use finalg::MaltsevMode;
use finalg_cli::commands::{
    cmd_check, cmd_congruences, cmd_construct, cmd_replay, cmd_search, CheckOptions, CmdOutcome,
    ConstructOptions, SearchOptions,
};
use finalg_cli::CliError;

#[derive(Parser)]
#[command(
    name = "finalg",
    version,
    about = "Finite universal-algebra workbench: term conditions, congruences, clones, and certified constructions"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Check a property of an algebra document
    Check {
        /// Algebra document (JSON)
        file: PathBuf,
        /// abelian | strongly-rectangular | strongly-abelian | rectangular |
        /// affine | strongly-solvable | property-p | c11 |
        /// congruence-strongly-abelian
        #[arg(long)]
        property: String,
        /// Congruence: a name from the document, inline blocks like
        /// [[0,1],[2]], or full/identity
        #[arg(long)]
        theta: Option<String>,
        /// Order: a name from the document, inline pairs like [[1,0]]
        /// (read as a >= b), or diagonal
        #[arg(long)]
        order: Option<String>,
        /// Designated zero element (defaults to the document's)
        #[arg(long)]
        zero: Option<usize>,
        /// Clone mode for affine: term | polynomial
        #[arg(long, default_value = "polynomial")]
        mode: String,
        /// Also run the brute-force polynomial oracle and report agreement
        #[arg(long)]
        oracle: bool,
        /// Polynomial arity bound for the oracle
        #[arg(long, default_value_t = 3)]
        max_arity: usize,
        /// Write the report to a file as well
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a construction pipeline and emit the result with its certificate
    Construct {
        /// build-s | collapse-ordered | theorem2 | lemma-witness
        pipeline: String,
        /// Algebra document (JSON)
        file: PathBuf,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        zero: Option<usize>,
        /// Output path for the constructed algebra document; the certificate
        /// lands next to it with extension .cert.json
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a certificate from its stored witnesses
    Replay {
        /// Certificate file (JSON)
        file: PathBuf,
    },
    /// Enumerate operation tables and stream the algebras matching a predicate
    Search {
        /// Universe size
        #[arg(long)]
        size: usize,
        /// Comma-separated operation arities, e.g. 2 or 2,1
        #[arg(long)]
        signature: String,
        /// Predicate expression, e.g. "strongly-abelian and not affine(term)"
        #[arg(long)]
        predicate: String,
        /// Stop after this many matches
        #[arg(long)]
        limit: Option<usize>,
        /// Candidate budget; exceeding it flags the search inconclusive
        #[arg(long)]
        budget: Option<usize>,
        /// Keep only the lexicographically least member of each isomorphism
        /// class (naive table canonicalization)
        #[arg(long)]
        filter_isomorphs: bool,
        /// Write matching documents to a JSON-lines file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the whole congruence lattice of an algebra
    Congruences {
        /// Algebra document (JSON)
        file: PathBuf,
        /// Cap on the lattice size
        #[arg(long)]
        limit: Option<usize>,
    },
}

fn parse_mode(mode: &str) -> Result<MaltsevMode, CliError> {
    match mode {
        "term" => Ok(MaltsevMode::Term),
        "polynomial" => Ok(MaltsevMode::Polynomial),
        other => Err(CliError::input(format!(
            "unknown mode `{other}`; expected term or polynomial"
        ))),
    }
}

fn parse_signature(signature: &str) -> Result<Vec<usize>, CliError> {
    signature
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::input(format!("bad arity `{s}` in signature")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<CmdOutcome, CliError> {
    match cli.command {
        Commands::Check {
            file,
            property,
            theta,
            order,
            zero,
            mode,
            oracle,
            max_arity,
            out,
        } => cmd_check(
            &file,
            &CheckOptions {
                property,
                theta,
                order,
                zero,
                mode: parse_mode(&mode)?,
                oracle,
                max_arity,
                out,
            },
        ),
        Commands::Construct {
            pipeline,
            file,
            theta,
            order,
            zero,
            out,
        } => cmd_construct(
            &pipeline,
            &file,
            &ConstructOptions {
                theta,
                order,
                zero,
                out,
            },
        ),
        Commands::Replay { file } => cmd_replay(&file),
        Commands::Search {
            size,
            signature,
            predicate,
            limit,
            budget,
            filter_isomorphs,
            out,
        } => cmd_search(&SearchOptions {
            size,
            signature: parse_signature(&signature)?,
            predicate,
            limit,
            budget,
            filter_isomorphs,
            out,
        }),
        Commands::Congruences { file, limit } => cmd_congruences(&file, limit),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                // help and version displays are not errors
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                // usage problems are input errors in the exit-code contract
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.report.render());
            ExitCode::from(outcome.exit as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}

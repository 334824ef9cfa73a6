//! `mutalg`: batch front end for fiber analysis, certified rewriting, the
//! fcp greedy check, component maps and the law suites.
//!
//! Exit status: 0 success, 1 a checked property failed, 2 bad usage or input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "mutalg",
    version,
    about = "Mutual algebraicity on finite relational structures"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Output::Human, global = true)]
    output: Output,
    /// Seed for anything random; overrides the seed in a corpus spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Human,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fiber bounds of a relation or a formula on a structure.
    Analyze(AnalyzeArgs),
    /// Rewrite a formula into certified normal form.
    Rewrite(RewriteArgs),
    /// Run a law suite over a seeded corpus.
    Verify(VerifyArgs),
    /// Greedy inconsistent subfamily of a parameter family.
    Fcp(FcpArgs),
    /// Component decomposition and component-map checks.
    Components(ComponentsArgs),
    /// Write a corpus or a fixture to disk.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    structure: PathBuf,
    #[arg(long, conflicts_with_all = ["formula", "free"], required_unless_present = "formula")]
    relation: Option<String>,
    #[arg(long, requires = "free")]
    formula: Option<String>,
    /// Variable context, comma or space separated.
    #[arg(long)]
    free: Option<String>,
}

#[derive(Args, Debug)]
struct RewriteArgs {
    #[arg(long)]
    formula: String,
    /// Variable context of the formula; defaults to its free variables.
    #[arg(long)]
    free: Option<String>,
    /// Rewrite `E VAR. formula`; without it nested quantifiers are eliminated.
    #[arg(long)]
    eliminate: Option<String>,
    /// Asserted bound for a relation, as `NAME=K`; repeatable.
    #[arg(long = "bound", value_name = "NAME=K")]
    bounds: Vec<String>,
    /// Reference structure. Leaf bounds are measured on it and the result is
    /// verified against it.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Corpus spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    suite: String,
}

#[derive(Args, Debug)]
struct FcpArgs {
    #[arg(required_unless_present = "demo")]
    structure: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    formula: Option<String>,
    /// Object variables x̄.
    #[arg(long, required_unless_present = "demo")]
    x: Option<String>,
    /// Parameter variables ȳ; defaults to the remaining free variables.
    #[arg(long)]
    y: Option<String>,
    /// Parameter tuples, one per line.
    #[arg(long, required_unless_present = "demo")]
    params: Option<PathBuf>,
    /// Bound K for the hypothesis; defaults to the largest fiber plus one.
    #[arg(long)]
    k: Option<usize>,
    /// Print the threshold growth on the nested-classes fixture with M classes.
    #[arg(long, value_name = "M", conflicts_with_all = ["structure", "formula", "params"])]
    demo: Option<usize>,
}

#[derive(Args, Debug)]
struct ComponentsArgs {
    structure: PathBuf,
    /// Relations joining elements, comma or space separated; defaults to
    /// those with uniform bound at most `--max-k`.
    #[arg(long)]
    designate: Option<String>,
    #[arg(long, default_value_t = mutalg::components::DEFAULT_DESIGNATION_K)]
    max_k: usize,
    /// Use this decomposition instead of computing one.
    #[arg(long)]
    decomposition: Option<PathBuf>,
    /// Map file (`a -> b` per line) to check.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Target structure of the map; defaults to the source.
    #[arg(long, requires = "map")]
    target: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Corpus spec (JSON); defaults to the built-in signature.
    #[arg(long, conflicts_with = "mated_pairs")]
    spec: Option<PathBuf>,
    /// Number of cases when no spec is given.
    #[arg(long, default_value_t = 10, conflicts_with = "mated_pairs")]
    count: usize,
    /// Output directory for a corpus, or file for a fixture (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Build the mated-pairs fixture with M pairs.
    #[arg(long, value_name = "M")]
    mated_pairs: Option<usize>,
    /// Where to write the fixture's flip map.
    #[arg(long, requires = "mated_pairs")]
    map_out: Option<PathBuf>,
    /// Where to write the fixture's designated decomposition.
    #[arg(long, requires = "mated_pairs")]
    decomposition_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Rewrite(a) => commands::rewrite(a),
        Command::Verify(a) => commands::verify(a, cli.seed),
        Command::Fcp(a) => commands::fcp(a),
        Command::Components(a) => commands::components(a),
        Command::Generate(a) => commands::generate(a, cli.seed),
    };
    match result {
        Ok(report) => {
            match cli.output {
                Output::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&report.json).expect("reports serialize")
                ),
                Output::Human => print!("{}", report.human),
            }
            if report.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

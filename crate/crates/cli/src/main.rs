mod commands;
mod config;
mod error;

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causalrag_core::eval::{JudgeMode, System, DEFAULT_QUESTION_COUNT};
use causalrag_core::gateway::GatewayMode;
use clap::{Parser, Subcommand, ValueEnum};

use config::AppConfig;
use error::{CliError, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "causalrag", version, about = "Causal-graph retrieval and evaluation")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Answer provider calls from a JSON script instead of the network.
    #[arg(long, global = true, value_name = "SCRIPT")]
    mock: Option<PathBuf>,
    #[arg(long, global = true)]
    embedding_dim: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SystemArg {
    Causal,
    Baseline,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Annotated,
    Judge,
}

fn positive(raw: &str) -> Result<usize, String> {
    match raw.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, clap::Args)]
struct RetrievalArgs {
    /// Seed nodes taken from the vector index.
    #[arg(long, value_parser = positive)]
    k: Option<usize>,
    /// Hops expanded around each seed.
    #[arg(long)]
    s: Option<usize>,
}

#[derive(Debug, clap::Args)]
struct EvalInputs {
    #[arg(long)]
    index_root: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "causal")]
    system: SystemArg,
    #[arg(long, value_enum, default_value = "annotated")]
    mode: ModeArg,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build one index directory per document.
    Index {
        /// A text file or a directory of .txt/.md files.
        input: PathBuf,
        /// Output root; each document goes to `<out>/<id>`.
        out: PathBuf,
        #[arg(long, default_value = "general")]
        domain: String,
    },
    /// Answer a question against one document index.
    Ask {
        index: PathBuf,
        query: String,
        #[command(flatten)]
        retrieval: RetrievalArgs,
        #[arg(long)]
        response_type: Option<String>,
        /// Print seeds, frontier, paths and the prompt digest.
        #[arg(long)]
        trace: bool,
        /// Print the full answer record as JSON.
        #[arg(long, conflicts_with = "trace")]
        json: bool,
    },
    /// Generate question/answer pairs from a document.
    GenQuestions {
        doc: PathBuf,
        #[arg(short, long, default_value_t = DEFAULT_QUESTION_COUNT, value_parser = positive)]
        n: usize,
        /// Write the pairs as a JSONL dataset.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a dataset against a corpus of indexes.
    Eval {
        #[command(flatten)]
        inputs: EvalInputs,
        #[command(flatten)]
        retrieval: RetrievalArgs,
    },
    /// Composite score over a grid of k and s values.
    Sweep {
        #[command(flatten)]
        inputs: EvalInputs,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<usize>,
    },
}

fn resolve(cli: &Cli) -> Result<AppConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => AppConfig::load(path)?,
        None => AppConfig::default(),
    };
    if let Some(script) = &cli.mock {
        config.gateway.mode = GatewayMode::Mock;
        config.mock_script = Some(script.clone());
    }
    if let Some(dim) = cli.embedding_dim {
        config.embedding_dim = dim;
    }
    config.validate()?;
    Ok(config)
}

fn apply_retrieval(config: &mut AppConfig, args: &RetrievalArgs) {
    if let Some(k) = args.k {
        config.retrieval.k = k;
    }
    if let Some(s) = args.s {
        config.retrieval.s = s;
    }
}

fn required<'a>(flag: Option<&'a PathBuf>, file: Option<&'a PathBuf>, name: &str) -> Result<&'a Path, CliError> {
    flag.or(file)
        .map(PathBuf::as_path)
        .ok_or_else(|| CliError::usage(format!("--{name} is required (or set paths.{} in the config)", name.replace('-', "_"))))
}

fn eval_args<'a>(config: &'a AppConfig, inputs: &'a EvalInputs) -> Result<commands::EvalArgs<'a>, CliError> {
    Ok(commands::EvalArgs {
        index_root: required(inputs.index_root.as_ref(), config.paths.index_root.as_ref(), "index-root")?,
        dataset: required(inputs.dataset.as_ref(), config.paths.dataset.as_ref(), "dataset")?,
        system: match inputs.system {
            SystemArg::Causal => System::Causal,
            SystemArg::Baseline => System::Baseline,
        },
        mode: match inputs.mode {
            ModeArg::Annotated => JudgeMode::Annotated,
            ModeArg::Judge => JudgeMode::Judge,
        },
        report_out: inputs.report_out.as_deref().or(config.paths.report_out.as_deref()),
    })
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut config = resolve(&cli)?;
    match &cli.command {
        Command::Index { input, out, domain } => commands::index(&config, &config.gateway()?, input, out, domain),
        Command::Ask {
            index,
            query,
            retrieval,
            response_type,
            trace,
            json,
        } => {
            apply_retrieval(&mut config, retrieval);
            if let Some(rt) = response_type {
                config.response_type = rt.clone();
            }
            commands::ask(&config, &config.gateway()?, index, query, *trace, *json)
        }
        Command::GenQuestions { doc, n, out } => commands::gen_questions(&config.gateway()?, doc, *n, out.as_deref()),
        Command::Eval { inputs, retrieval } => {
            apply_retrieval(&mut config, retrieval);
            let gw = config.gateway()?;
            commands::eval(&config, &gw, &eval_args(&config, inputs)?)
        }
        Command::Sweep { inputs, k, s } => {
            let gw = config.gateway()?;
            commands::sweep_grid(&config, &gw, &eval_args(&config, inputs)?, k, s)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .without_time()
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prefsys_cli::terminal::run_session;
use prefsys_cli::{example1_report, simulate_example2, SimulationConfig, SimulationReport};
use prefsys_core::engine::{Guidance, Procedure, SessionConfig};
use prefsys_core::guided::{sample_corpus, total_order, MallowsModel, OrderSupport};
use prefsys_core::relation::Relation;
use prefsys_core::scenarios::{
    example1_pairs, example1_problem, Example1Variant, Example2Method, Example2Model, Strategy, EXAMPLE_LABELS,
    EXAMPLE_N,
};
use prefsys_service::{CorpusRecord, Provenance, ServiceConfig, Store};

#[derive(Parser)]
#[command(name = "prefsys", version, about = "Preference elicitation and decision making with preference systems")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Data directory of the service and of saved corpora.
    #[arg(long, global = true, env = "PREF_DATA_DIR", default_value = prefsys_service::DEFAULT_DATA_DIR)]
    data_dir: PathBuf,
    /// Emit JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replays the eight-consequence, two-act worked example.
    Example1 {
        #[arg(long, value_enum, default_value_t = Variant::Label)]
        variant: Variant,
    },
    /// Simulates guided elicitation on the three-act example.
    Example2(Example2Args),
    /// Order corpora.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Elicits preferences interactively in the terminal.
    Elicit(ElicitArgs),
    /// Runs the HTTP service.
    Serve {
        #[arg(long, env = "PREF_BIND_ADDR", default_value = prefsys_service::DEFAULT_BIND_ADDR)]
        bind: std::net::SocketAddr,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Label,
    Time,
    Credal,
}

impl From<Variant> for Example1Variant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Label => Example1Variant::Label,
            Variant::Time => Example1Variant::Time,
            Variant::Credal => Example1Variant::Credal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    UnimodalPartial,
    BimodalTotal,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Random,
    Proportion,
    Subgroup,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Labels,
    EfficientTime,
    BasicTime,
}

#[derive(Args)]
struct Example2Args {
    #[arg(long, value_enum, default_value_t = ModelArg::UnimodalPartial)]
    model: ModelArg,
    /// Strategies to compare; all three by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    strategy: Vec<StrategyArg>,
    #[arg(long, default_value_t = 100)]
    replications: usize,
    /// Corpus size; defaults to 100 (unimodal) or 250 (bimodal).
    #[arg(long)]
    corpus_size: Option<usize>,
    /// Mallows spread; defaults to 1.0 (unimodal) or 0.5 (bimodal).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Labels)]
    method: MethodArg,
    /// Break exact ties between guided suggestions at random.
    #[arg(long)]
    random_ties: bool,
    /// Also write the raw distribution as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Samples a corpus from a Mallows model.
    Gen(CorpusGenArgs),
}

#[derive(Args)]
struct CorpusGenArgs {
    /// Mode as a ranking, best first, e.g. `3,1,0,2`.
    #[arg(long, value_delimiter = ',', conflicts_with = "pairs")]
    ranking: Vec<usize>,
    /// Mode as strict pairs `i>j`, closed transitively; needs `--n`.
    #[arg(long, value_delimiter = ',', requires = "n")]
    pairs: Vec<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long)]
    bimodal: bool,
    /// Sample total orders instead of partial orders.
    #[arg(long)]
    total: bool,
    /// Store the corpus under the data directory.
    #[arg(long)]
    save: bool,
    /// Write the corpus JSON to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ElicitArgs {
    /// Session configuration as JSON; defaults to the worked example with
    /// scripted pairs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use timed comparisons instead of labels for the default session.
    #[arg(long)]
    time: bool,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn run(cli: Cli) -> AnyResult<ExitCode> {
    match cli.command {
        Command::Example1 { variant } => example1(variant.into(), cli.json),
        Command::Example2(args) => example2(args, cli.seed, cli.json),
        Command::Corpus(CorpusCommand::Gen(args)) => corpus_gen(args, cli.seed, &cli.data_dir),
        Command::Elicit(args) => elicit(args, cli.json),
        Command::Serve { bind } => {
            let config = ServiceConfig {
                data_dir: cli.data_dir,
                bind_addr: bind,
            };
            tokio::runtime::Runtime::new()?.block_on(prefsys_service::serve(config))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn example1(variant: Example1Variant, json: bool) -> AnyResult<ExitCode> {
    let report = example1_report(variant)?;
    let name = |k: usize| format!("a{}", k + 1);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("variant: {variant:?}");
        for (step, &(i, j)) in report.asked.iter().enumerate() {
            println!("  step {}: ({}, {})", step + 1, name(i), name(j));
        }
        let r1: Vec<String> = report.strict_r1.iter().map(|&(i, j)| format!("({},{})", name(i), name(j))).collect();
        println!("strict R1: {}", r1.join(" "));
        let r2: Vec<String> = report
            .strict_r2
            .iter()
            .map(|((a, b), (c, d))| format!("(e{}{},e{}{})", a + 1, b + 1, c + 1, d + 1))
            .collect();
        println!("strict R2: {}", r2.join(" "));
        println!("choice set: {{{}}} after {} answers", report.chosen.join(", "), report.steps);
    }
    if report.matches_golden {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("result deviates from the expected outcome ({{X1}} after 4 answers)");
        Ok(ExitCode::FAILURE)
    }
}

fn example2(args: Example2Args, seed: u64, json: bool) -> AnyResult<ExitCode> {
    let model = match args.model {
        ModelArg::UnimodalPartial => Example2Model::UnimodalPartial,
        ModelArg::BimodalTotal => Example2Model::BimodalTotal,
    };
    let mut config = SimulationConfig::standard(model);
    if let Some(c) = args.corpus_size {
        config.corpus_size = c;
    }
    if let Some(l) = args.lambda {
        config.lambda = l;
    }
    config.method = match args.method {
        MethodArg::Labels => Example2Method::Labels,
        MethodArg::EfficientTime => Example2Method::EfficientTime,
        MethodArg::BasicTime => Example2Method::BasicTime,
    };
    config.random_ties = args.random_ties;
    let strategies: Vec<Strategy> = if args.strategy.is_empty() {
        vec![Strategy::Random, Strategy::Proportion, Strategy::Subgroup]
    } else {
        args.strategy
            .iter()
            .map(|s| match s {
                StrategyArg::Random => Strategy::Random,
                StrategyArg::Proportion => Strategy::Proportion,
                StrategyArg::Subgroup => Strategy::Subgroup,
            })
            .collect()
    };
    let report = simulate_example2(config, &strategies, args.replications, seed)?;
    if let Some(path) = &args.csv {
        std::fs::write(path, report.to_csv()?)?;
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_table(&report);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_table(report: &SimulationReport) {
    println!(
        "{:?}, corpus {}, lambda {}, {} replications, seed {}",
        report.config.model, report.config.corpus_size, report.config.lambda, report.replications, report.seed
    );
    println!("{:<12} {:>7} {:>7} {:>7} {:>7} {:>5} {:>5}", "strategy", "median", "q1", "q3", "IQR", "min", "max");
    for s in &report.strategies {
        let m = &s.summary;
        println!(
            "{:<12} {:>7.1} {:>7.2} {:>7.2} {:>7.2} {:>5} {:>5}",
            format!("{:?}", s.strategy),
            m.median,
            m.q1,
            m.q3,
            m.iqr,
            m.min,
            m.max
        );
    }
}

fn corpus_gen(args: CorpusGenArgs, seed: u64, data_dir: &std::path::Path) -> AnyResult<ExitCode> {
    let mode = if !args.ranking.is_empty() {
        total_order(&args.ranking)
    } else if let Some(n) = args.n {
        let mut pairs = Vec::new();
        for p in &args.pairs {
            let (a, b) = p.split_once('>').ok_or_else(|| format!("pair {p:?} is not of the form i>j"))?;
            pairs.push((a.trim().parse::<usize>()?, b.trim().parse::<usize>()?));
        }
        Relation::from_pairs(n, pairs)?.with_diagonal().transitive_hull()
    } else {
        return Err("give the mode with --ranking or with --pairs and --n".into());
    };
    let support = if args.total { OrderSupport::TotalOrders } else { OrderSupport::PartialOrders };
    let model = MallowsModel::new(mode, args.lambda, args.bimodal, support)?;
    let corpus = sample_corpus(&model, args.count, seed)?;
    let json = serde_json::to_string(&corpus)?;
    if args.save {
        let record = CorpusRecord {
            id: format!("corpus-{seed}-{}", args.count),
            corpus: corpus.clone(),
            provenance: Provenance::Model { model, seed },
        };
        Store::open(data_dir)?.save_corpus(&record)?;
        eprintln!("saved as {}", record.id);
    }
    match args.out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn elicit(args: ElicitArgs, json: bool) -> AnyResult<ExitCode> {
    let config: SessionConfig = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => {
            let (procedure, variant) = if args.time {
                (
                    Procedure::Time {
                        mode: Default::default(),
                        c_inf: prefsys_core::time::DEFAULT_C_INF,
                    },
                    Example1Variant::Time,
                )
            } else {
                (
                    Procedure::Label {
                        r: EXAMPLE_LABELS,
                        hierarchical: false,
                    },
                    Example1Variant::Label,
                )
            };
            SessionConfig {
                n: EXAMPLE_N,
                procedure,
                guidance: Guidance::Scripted { pairs: example1_pairs() },
                decision: Some(example1_problem(variant)),
                check_every: 1,
            }
        }
    };
    let start = Instant::now();
    let mut clock = move || start.elapsed().as_secs_f64();
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut output = io::stderr();
    let transcript = run_session(config, &mut input, &mut output, &mut clock)?;
    output.flush()?;
    if json {
        println!("{}", serde_json::to_string_pretty(&transcript)?);
    } else {
        println!("status: {:?}", transcript.status);
        if let Some(step) = transcript.stopped_early_at {
            println!("stopped early at step {step}");
        }
        if let Some(chosen) = &transcript.chosen {
            println!("choice set: {{{}}}", chosen.join(", "));
        }
        println!("{}", serde_json::to_string_pretty(&transcript.system)?);
    }
    Ok(ExitCode::SUCCESS)
}

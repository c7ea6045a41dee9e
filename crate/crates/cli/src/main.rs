use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use civic_core::catalog::{egalitarian_optimum, pareto_frontier, utilitarian_optimum, Catalog, City, Direction, Metric};
use civic_core::gateway::{AgentMode, BackendKind};
use civic_core::oracle::{irv_fixtures, ols_fixtures};
use civic_core::regression::{run_lever_regressions, CommunityCovariates};
use civic_core::scenario::report::{self, completed_ballots, vote_sentiment, RunMeta};
use civic_core::scenario::{read_transcripts, replay_records, run_scenario, ScenarioConfig, ScenarioError, ScenarioRun};
use civic_core::voting::VotingRule;

#[derive(Parser)]
#[command(name = "civic", version, about = "Simulated transit-funding referendums with LLM voter agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Show the policy catalog, its optima and a Pareto frontier.
    Catalog {
        #[arg(long, default_value = "chicago")]
        city: City,
        /// Frontier axes: maximized x metric, y metric and y direction.
        #[arg(long, num_args = 3, value_names = ["X", "Y", "DIR"], default_values = ["u_total", "gini", "min"])]
        frontier: Vec<String>,
    },
    /// Run a scenario.
    Run(RunArgs),
    /// Recompute a run from its transcripts without calling any backend.
    Replay {
        transcripts: PathBuf,
        #[arg(long)]
        rule: Option<VotingRule>,
        /// Also rewrite the output tables into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate report files from a run directory.
    Report {
        run_dir: PathBuf,
        /// Baseline run directory for sentiment differences (and regression,
        /// with --covariates).
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        covariates: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score rationale sentiment in a transcript file, as CSV on stdout.
    Sentiment {
        transcripts: PathBuf,
        #[arg(long)]
        rule: Option<VotingRule>,
    },
    /// Borda scores and lever regressions for a treated and a baseline run.
    Regress {
        #[arg(long)]
        treated: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        covariates: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write randomized oracle fixtures as JSON lines.
    Oracle {
        #[arg(long, value_parser = ["irv", "ols"])]
        kind: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file; the flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mock backend seed.
    #[arg(long)]
    seed: Option<u64>,
    /// mock, openai or anthropic.
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long)]
    rounds: Option<u32>,
    /// ranked, approve5 or approve-all.
    #[arg(long)]
    rule: Option<VotingRule>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent agent queries.
    #[arg(long)]
    parallel: Option<usize>,
    #[arg(long)]
    city: Option<City>,
    /// community, knowledge_augmented or city_average.
    #[arg(long)]
    mode: Option<AgentMode>,
    #[arg(long)]
    name: Option<String>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

fn data_error(message: impl ToString) -> Failure {
    Failure { code: 4, message: message.to_string() }
}

fn config_error(message: impl ToString) -> Failure {
    Failure { code: 2, message: message.to_string() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Catalog { city, frontier } => catalog(city, &frontier),
        Command::Run(args) => run(args),
        Command::Replay { transcripts, rule, out } => {
            let run = load_run(&transcripts, rule)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| data_error(format!("{}: {e}", dir.display())))?;
                report::write_outputs(&dir, &run, &RunMeta::default())?;
            }
            print_json(serde_json::to_value(&run.summary))
        }
        Command::Report { run_dir, compare, covariates, out } => {
            let out = out.unwrap_or_else(|| run_dir.clone());
            let run = load_run(&run_dir.join("transcripts.jsonl"), None)?;
            std::fs::create_dir_all(&out).map_err(|e| data_error(format!("{}: {e}", out.display())))?;
            report::write_outputs(&out, &run, &RunMeta::default())?;
            if let Some(base_dir) = compare {
                let baseline = load_run(&base_dir.join("transcripts.jsonl"), Some(run.summary.rule))?;
                report::write_sentiment_delta(&out.join("sentiment_delta.csv"), &run, &baseline)?;
                if let Some(cov) = covariates {
                    regress_runs(&run, &baseline, &cov, &out)?;
                }
            } else if covariates.is_some() {
                return Err(config_error("--covariates needs --compare <baseline run>"));
            }
            println!("wrote reports to {}", out.display());
            Ok(())
        }
        Command::Sentiment { transcripts, rule } => {
            let run = load_run(&transcripts, rule)?;
            println!("round,agent_id,compound,pos,neg,neu");
            for (round, agent, _, s) in vote_sentiment(&run.rounds) {
                println!("{round},{agent},{:.6},{:.6},{:.6},{:.6}", s.compound, s.pos, s.neg, s.neu);
            }
            Ok(())
        }
        Command::Regress { treated, baseline, covariates, out } => {
            let treated = load_run(&treated, Some(VotingRule::Ranked))?;
            let baseline = load_run(&baseline, Some(VotingRule::Ranked))?;
            std::fs::create_dir_all(&out).map_err(|e| data_error(format!("{}: {e}", out.display())))?;
            regress_runs(&treated, &baseline, &covariates, &out)?;
            print!("{}", std::fs::read_to_string(out.join("regression.md")).unwrap_or_default());
            Ok(())
        }
        Command::Oracle { kind, count, seed, out } => {
            let lines: Vec<String> = match kind.as_str() {
                "irv" => irv_fixtures(seed, count).iter().map(|f| serde_json::to_string(f).expect("json")).collect(),
                _ => ols_fixtures(seed, count).iter().map(|f| serde_json::to_string(f).expect("json")).collect(),
            };
            let mut text = lines.join("\n");
            text.push('\n');
            std::fs::write(&out, text).map_err(|e| data_error(format!("{}: {e}", out.display())))?;
            println!("wrote {count} {kind} fixtures to {}", out.display());
            Ok(())
        }
    }
}

fn print_json(value: serde_json::Result<serde_json::Value>) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(&value.map_err(data_error)?).map_err(data_error)?);
    Ok(())
}

fn load_run(transcripts: &Path, rule: Option<VotingRule>) -> Result<ScenarioRun, Failure> {
    let records = read_transcripts(transcripts)?;
    let rule = match (rule, records.first()) {
        (Some(r), _) => r,
        (None, Some(rec)) => rec.rule,
        (None, None) => return Err(data_error(format!("{} has no records", transcripts.display()))),
    };
    Ok(replay_records(records, rule)?)
}

fn regress_runs(treated: &ScenarioRun, baseline: &ScenarioRun, covariates: &Path, out: &Path) -> Result<(), Failure> {
    let cov = CommunityCovariates::load(covariates).map_err(config_error)?;
    let fits = run_lever_regressions(&completed_ballots(treated), &completed_ballots(baseline), &cov).map_err(data_error)?;
    report::write_regression(out, &fits)?;
    Ok(())
}

fn catalog(city: City, frontier: &[String]) -> Result<(), Failure> {
    let cat = Catalog::bundled(city);
    println!("id  tax  fare  fee   drive_t  bus_t  drive_$  bus_$  transit%  U_total     u_min   gini");
    for e in cat.iter() {
        let (p, m) = (&e.policy, &e.metrics);
        println!(
            "{:>2}  {:.1}  {:.2}  {:.1}  {:>7.2}  {:>5.2}  {:>7.2}  {:>5.2}  {:>8.2}  {:>9.4}  {:.4}  {:.4}",
            p.id.get(),
            p.tax,
            p.fare,
            p.fee,
            m.drive_time,
            m.bus_time,
            m.drive_cost,
            m.bus_cost,
            m.transit_share,
            m.u_total,
            m.u_min,
            m.gini
        );
    }
    let show = |id: Option<civic_core::catalog::PolicyId>| id.map_or("-".to_string(), |i| i.get().to_string());
    println!("\nutilitarian optimum: {}", show(utilitarian_optimum(&cat)));
    println!("egalitarian optimum: {}", show(egalitarian_optimum(&cat)));
    println!("lowest gini:         {}", show(cat.argmin(Metric::Gini)));
    println!("highest transit %:   {}", show(cat.argmax(Metric::TransitPct)));
    let x: Metric = frontier[0].parse().map_err(config_error)?;
    let y: Metric = frontier[1].parse().map_err(config_error)?;
    let dir: Direction = frontier[2].parse().map_err(config_error)?;
    let ids: Vec<String> = pareto_frontier(&cat, x, y, dir).iter().map(|i| i.get().to_string()).collect();
    println!("pareto frontier ({x} max, {y} {}): {}", frontier[2], ids.join(", "));
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(v) = args.seed {
        config.backend.seed = v;
    }
    if let Some(v) = args.backend {
        config.backend.kind = v;
    }
    if let Some(v) = args.rounds {
        config.rounds = v;
    }
    if let Some(v) = args.rule {
        config.rule = v;
    }
    if let Some(v) = args.out {
        config.output_dir = v;
    }
    if let Some(v) = args.parallel {
        config.parallelism = v;
    }
    if let Some(v) = args.city {
        config.city = v;
    }
    if let Some(v) = args.mode {
        config.agent_mode = v;
    }
    if let Some(v) = args.name {
        config.name = v;
    }
    let run = run_scenario(&config)?;
    let s = &run.summary;
    println!(
        "{}: {} rounds, {} failed, coverage {:.1}%, winners {}, outputs in {}",
        s.scenario,
        s.rounds,
        s.failed_rounds.len(),
        100.0 * s.coverage,
        report::winner_label(s),
        config.output_dir.display()
    );
    Ok(())
}

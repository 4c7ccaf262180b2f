use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use flipbench::chickering::build_flip_chain;
use flipbench::ci::{AlphaSchedule, OracleSource};
use flipbench::discovery::{answer_of, Method, MethodKind};
use flipbench::format::{parse_dag, parse_scenario, render_chain, render_discovery};
use flipbench::lab::{builtin, curves_report, Execution, Learner, SampleGrid, ScenarioConfig, DEFAULT_SEED};
use flipbench::verify::{run_suite, SUITES};
use flipbench::Error;

#[derive(Parser)]
#[command(name = "flipbench", version, about = "Causal flips, PC/CPC discovery and retractions in chance")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample once and run one discovery method
    Discover(DiscoverArgs),
    /// Estimate output-frequency curves and retractions over a sample grid
    Curves(CurvesArgs),
    /// Build a flip chain of k flips for the focus pair of a DAG
    Chain(ChainArgs),
    /// Run a brute-force property suite
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file or built-in name (collider3, two-node, chain3, figure1-flip, figure2)
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum, default_value_t = AlphaMode::Fixed)]
    alpha_mode: AlphaMode,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Defaults to FLIPBENCH_SEED, then the scenario's seed
    #[arg(long, env = "FLIPBENCH_SEED")]
    seed: Option<u64>,
    /// Output directory; without it results go to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Pc)]
    method: MethodArg,
    /// Sample size
    #[arg(long, required_unless_present = "oracle")]
    n: Option<usize>,
    /// Answer CI queries by d-separation in the true graph instead of sampling
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct CurvesArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Pc, MethodArg::Cpc])]
    method: Vec<MethodArg>,
    /// lo:hi:points, geometrically spaced
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    trials: Option<u32>,
    /// Worker threads; defaults to the available parallelism
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ChainArgs {
    /// DAG file
    dag: PathBuf,
    x: String,
    y: String,
    /// Number of flips
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// prop1, chickering, covered-flip, oracle-pc, fisher-z or all
    suite: String,
    #[arg(long, env = "FLIPBENCH_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pc,
    Cpc,
}

impl MethodArg {
    fn kind(self) -> MethodKind {
        match self {
            MethodArg::Pc => MethodKind::Pc,
            MethodArg::Cpc => MethodKind::Cpc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlphaMode {
    Fixed,
    Decreasing,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Verify,
}

impl Failure {
    fn usage(e: impl ToString) -> Failure {
        Failure::Usage(e.to_string())
    }

    fn runtime(e: impl ToString) -> Failure {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Discover(a) => discover(a),
        Cmd::Curves(a) => curves(a),
        Cmd::Chain(a) => chain(a),
        Cmd::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Verify) => ExitCode::from(3),
    }
}

fn load_scenario(spec: &str) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{spec}: {e}")))?;
        return parse_scenario(&text).map_err(|e| Failure::usage(format!("{spec}: {e}")));
    }
    builtin(spec).map_err(|e| match e {
        Error::Invalid(_) => Failure::usage(format!("no scenario file or built-in named `{spec}`")),
        other => Failure::runtime(other),
    })
}

fn schedule(a: &ScenarioArgs) -> Result<AlphaSchedule, Failure> {
    match a.alpha_mode {
        AlphaMode::Fixed => AlphaSchedule::fixed(a.alpha),
        AlphaMode::Decreasing => AlphaSchedule::decreasing(a.alpha),
    }
    .map_err(Failure::usage)
}

fn out_dir(out: &Option<PathBuf>) -> Result<Option<&Path>, Failure> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    }
    Ok(out.as_deref())
}

fn write(dir: &Path, file: &str, text: &str) -> Outcome {
    let path = dir.join(file);
    fs::write(&path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn discover(a: DiscoverArgs) -> Outcome {
    let sc = load_scenario(&a.common.scenario)?;
    let method = Method::new(a.method.kind(), schedule(&a.common)?);
    let seed = a.common.seed.or(sc.seed).unwrap_or(DEFAULT_SEED);
    let out = out_dir(&a.common.out)?;
    let result = if a.oracle {
        let src = OracleSource::new(sc.sem.dag());
        method.run(&src, sc.sem.names().into())
    } else {
        let n = a.n.ok_or_else(|| Failure::usage("--n is required without --oracle"))?;
        sc.sem.sample(n, seed).and_then(|d| method.discover(&d))
    }
    .map_err(Failure::runtime)?;
    let (x, y) = sc.focus;
    let answer = answer_of(&result, x, y).map_err(Failure::runtime)?;
    let mut text = render_discovery(&result);
    text.push_str(&format!("answer: {answer}\n"));
    match out {
        Some(dir) => {
            write(dir, "discovery.txt", &text)?;
            let names = sc.sem.names();
            println!("{} {},{}: {answer} ({} CI tests)", method.kind.as_str(), names[x], names[y], result.ci_call_count);
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn curves(a: CurvesArgs) -> Outcome {
    let sc = load_scenario(&a.common.scenario)?;
    let sched = schedule(&a.common)?;
    let grid = match &a.grid {
        Some(g) => SampleGrid::parse(g).map_err(Failure::usage)?,
        None => sc.grid.clone().unwrap_or_else(SampleGrid::standard),
    };
    let trials = a.trials.or(sc.trials).unwrap_or(100);
    if trials == 0 {
        return Err(Failure::usage("--trials must be positive"));
    }
    let seed = a.common.seed.or(sc.seed).unwrap_or(DEFAULT_SEED);
    let exec = match a.threads {
        Some(0) => return Err(Failure::usage("--threads must be positive")),
        Some(n) => Execution::Threads(n),
        None => Execution::Parallel,
    };
    let out = out_dir(&a.common.out)?;
    let methods: Vec<Method> = a.method.iter().map(|m| Method::new(m.kind(), sched)).collect();
    let learners: Vec<&dyn Learner> = methods.iter().map(|m| m as &dyn Learner).collect();
    let label = scenario_label(&a.common.scenario);
    let report = curves_report(&label, &sc.sem, sc.focus, &learners, &grid, trials, seed, exec)
        .map_err(Failure::runtime)?;
    let totals: Vec<String> =
        report.runs.iter().map(|(m, _, r)| format!("{m} total retraction {:.3}", r.total)).collect();
    match out {
        Some(dir) => {
            write(dir, "curves.csv", &report.curves_csv)?;
            write(dir, "retractions.csv", &report.retraction_csv)?;
            for t in totals {
                println!("{t}");
            }
        }
        None => {
            print!("{}\n{}", report.curves_csv, report.retraction_csv);
            for t in totals {
                eprintln!("{t}");
            }
        }
    }
    Ok(())
}

/// Built-in names as given; files by their stem.
fn scenario_label(spec: &str) -> String {
    let p = Path::new(spec);
    if p.is_file() {
        p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.to_owned())
    } else {
        spec.to_owned()
    }
}

fn chain(a: ChainArgs) -> Outcome {
    let shown = a.dag.display();
    let text = fs::read_to_string(&a.dag).map_err(|e| Failure::usage(format!("{shown}: {e}")))?;
    let g = parse_dag(&text).map_err(|e| Failure::usage(format!("{shown}: {e}")))?;
    let x = g.index_of(&a.x).map_err(Failure::usage)?;
    let y = g.index_of(&a.y).map_err(Failure::usage)?;
    let out = out_dir(&a.out)?;
    let c = build_flip_chain(&g, x, y, a.k).map_err(Failure::runtime)?;
    let rendered = render_chain(&c);
    match out {
        Some(dir) => write(dir, "chain.txt", &rendered)?,
        None => print!("{rendered}"),
    }
    let answers: Vec<String> = c.answers().iter().map(|a| a.to_string()).collect();
    let line = format!("answers: {}", answers.join(" / "));
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Outcome {
    let names: Vec<&str> = if a.suite == "all" { SUITES.to_vec() } else { vec![a.suite.as_str()] };
    let mut ok = true;
    for name in names {
        let report = run_suite(name, a.seed).map_err(|e| match e {
            Error::Invalid(m) => Failure::Usage(m),
            other => Failure::runtime(other),
        })?;
        println!("{}", report.summary());
        for ex in &report.counterexamples {
            println!("counterexample:\n{ex}");
        }
        ok &= report.passed();
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

//! `softqos` command line: scenario runs, rate sweeps, catalog queries and
//! config validation.
//!
//! Exit codes are a stable contract: 0 success, 1 runtime/IO failure,
//! 2 usage or validation error. Results go to stdout, diagnostics to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use softqos_core::catalog::{Catalog, Layer, Service};
use softqos_core::metrics;
use softqos_core::scenario::{builtin_scenario_toml, Policy, Scenario, BUILTIN_SCENARIOS};
use softqos_core::simulator::{run, sweep, SweepAxis};

#[derive(Parser)]
#[command(
    name = "softqos",
    version,
    about = "Soft-QoS call admission control simulator",
    after_help = "Scenario arguments accept a file path or a built-in name \
                  (table2_default, table2_handoff_mix)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write the event log and report files.
    Run(RunArgs),
    /// Run a scenario once per point and record the terminal rate curve.
    Sweep(SweepArgs),
    /// Query the QoS parameter catalog.
    Catalog(CatalogArgs),
    /// Validate scenario and catalog files without running anything.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct OverrideArgs {
    /// Override the scenario's cell capacity, kbps.
    #[arg(long)]
    capacity: Option<f64>,
    /// Override the scenario's total request count.
    #[arg(long)]
    requests: Option<u64>,
    /// Override the scenario's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl OverrideArgs {
    fn apply(&self, scenario: &mut Scenario) {
        if let Some(capacity) = self.capacity {
            scenario.capacity = capacity;
        }
        if let Some(requests) = self.requests {
            scenario.workload.total_requests = requests;
        }
        if let Some(seed) = self.seed {
            scenario.seed = Some(seed);
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file path or built-in name.
    #[arg(long)]
    scenario: String,
    /// Directory the event log and reports are written to.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Override the scenario's admission policy.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<Policy>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario file path or built-in name.
    #[arg(long)]
    scenario: String,
    /// Directory curves.csv is written to.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Ascending request counts of the axis kind, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    points: Vec<u64>,
    /// Curve axis: number of requested new calls or handoff calls.
    #[arg(long, default_value = "new", value_parser = parse_axis)]
    axis: SweepAxis,
    /// Policy to sweep; repeat the flag to overlay several policies.
    #[arg(long = "policy", value_parser = parse_policy)]
    policies: Vec<Policy>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct CatalogArgs {
    /// Catalog JSON file; the embedded default when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    query: CatalogQuery,
}

#[derive(Subcommand)]
enum CatalogQuery {
    /// Print one (service, layer) parameter list in priority order.
    List {
        #[arg(long, value_parser = parse_service)]
        service: Service,
        #[arg(long, value_parser = parse_layer)]
        layer: Layer,
    },
    /// Everything whose degradation can degrade the given parameter.
    Influencers { parameter: String },
    /// Everything the given parameter's degradation can degrade.
    Dependents { parameter: String },
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file path or built-in name.
    #[arg(long)]
    scenario: Option<String>,
    /// Catalog JSON file path.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Override the scenario's admission policy before validating.
    #[arg(long, value_parser = parse_policy)]
    policy: Option<Policy>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse()
}

fn parse_service(s: &str) -> Result<Service, String> {
    s.parse()
}

fn parse_layer(s: &str) -> Result<Layer, String> {
    s.parse()
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    match s {
        "new" => Ok(SweepAxis::RequestedNewCalls),
        "handoff" => Ok(SweepAxis::RequestedHandoffCalls),
        other => Err(format!("unknown axis `{other}` (expected new or handoff)")),
    }
}

/// Failures split by exit code: usage/validation problems exit 2, runtime
/// and IO problems exit 1.
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Catalog(args) => cmd_catalog(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Load a scenario by built-in name or path. File problems are config
/// errors (exit 2) so a mistyped path is diagnosed with the path itself.
fn load_scenario(spec: &str) -> Result<Scenario, CliError> {
    let text = match builtin_scenario_toml(spec) {
        Some(text) => text.to_owned(),
        None => fs::read_to_string(spec)
            .map_err(|e| CliError::usage(format!("cannot read scenario `{spec}`: {e}")))?,
    };
    Scenario::parse_toml(&text).map_err(|e| CliError::usage(format!("scenario `{spec}`: {e}")))
}

fn validated(scenario: Scenario, origin: &str) -> Result<Scenario, CliError> {
    let violations = scenario.violations();
    if violations.is_empty() {
        return Ok(scenario);
    }
    let mut msg = format!("scenario `{origin}` is invalid:");
    for violation in violations {
        msg.push_str(&format!("\n  {violation}"));
    }
    Err(CliError::Usage(msg))
}

fn load_catalog(path: &Option<PathBuf>) -> Result<Catalog, CliError> {
    match path {
        None => Ok(Catalog::shipped_default()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::usage(format!("cannot read catalog `{}`: {e}", path.display()))
            })?;
            Catalog::from_json(&text)
                .map_err(|e| CliError::usage(format!("catalog `{}`: {e}", path.display())))
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::runtime(format!("cannot write `{}`: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(policy) = args.policy {
        scenario.policy = policy;
    }
    args.overrides.apply(&mut scenario);
    let scenario = validated(scenario, &args.scenario)?;

    let log = run(&scenario).map_err(|e| CliError::runtime(e.to_string()))?;
    let summary = metrics::summarize(&log).map_err(|e| CliError::runtime(e.to_string()))?;
    let curves = metrics::prefix_curves(&log).map_err(|e| CliError::runtime(e.to_string()))?;

    fs::create_dir_all(&args.output).map_err(|e| {
        CliError::runtime(format!("cannot create `{}`: {e}", args.output.display()))
    })?;
    let events_path = args.output.join("events.csv");
    write_file(&events_path, &log.to_csv())?;
    let paths = metrics::write_report(&summary, &curves, &args.output)
        .map_err(|e| CliError::runtime(e.to_string()))?;

    println!(
        "scenario {} (policy {}, capacity {} kbps, {} requests)",
        scenario.label,
        scenario.policy,
        scenario.capacity,
        log.len()
    );
    print!("{}", metrics::summary_text(&summary));
    println!("wrote {}", events_path.display());
    println!("wrote {}", paths.summary.display());
    println!("wrote {}", paths.curves.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let mut scenario = load_scenario(&args.scenario)?;
    args.overrides.apply(&mut scenario);
    let scenario = validated(scenario, &args.scenario)?;

    let policies = if args.policies.is_empty() {
        vec![scenario.policy]
    } else {
        args.policies.clone()
    };

    let mut csv = String::from("n,policy,rate\n");
    for &policy in &policies {
        let mut variant = scenario.clone();
        variant.policy = policy;
        let rows = sweep(&variant, args.axis, &args.points).map_err(|e| {
            // Bad points or an axis the pattern never produces are usage
            // errors; anything else at this stage is a runtime failure.
            use softqos_core::scenario::ScenarioError::{InvalidPoints, KindNeverOccurs};
            match e {
                InvalidPoints | KindNeverOccurs(_) => CliError::usage(e.to_string()),
                other => CliError::runtime(other.to_string()),
            }
        })?;
        for row in rows {
            csv.push_str(&format!("{},{},{}\n", row.n, policy, row.rate));
        }
    }

    fs::create_dir_all(&args.output).map_err(|e| {
        CliError::runtime(format!("cannot create `{}`: {e}", args.output.display()))
    })?;
    let curves_path = args.output.join("curves.csv");
    write_file(&curves_path, &csv)?;
    print!("{csv}");
    eprintln!("wrote {}", curves_path.display());
    Ok(())
}

fn cmd_catalog(args: CatalogArgs) -> Result<(), CliError> {
    let catalog = load_catalog(&args.catalog)?;
    match args.query {
        CatalogQuery::List { service, layer } => {
            for parameter in catalog.parameters_by_priority(service, layer) {
                println!("{}", parameter.display_name);
            }
        }
        CatalogQuery::Influencers { parameter } => {
            let parameter = catalog
                .resolve(&parameter)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let mut names: Vec<&str> = catalog
                .influencers_of(&parameter.id)
                .map_err(|e| CliError::usage(e.to_string()))?
                .iter()
                .map(|p| p.display_name.as_str())
                .collect();
            names.sort_unstable();
            for name in names {
                println!("{name}");
            }
        }
        CatalogQuery::Dependents { parameter } => {
            let parameter = catalog
                .resolve(&parameter)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let mut names: Vec<&str> = catalog
                .dependents_of(&parameter.id)
                .map_err(|e| CliError::usage(e.to_string()))?
                .iter()
                .map(|p| p.display_name.as_str())
                .collect();
            names.sort_unstable();
            for name in names {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    if args.scenario.is_none() && args.catalog.is_none() {
        return Err(CliError::usage(format!(
            "nothing to validate: pass --scenario and/or --catalog \
             (built-in scenarios: {})",
            BUILTIN_SCENARIOS.join(", ")
        )));
    }
    let mut failures = Vec::new();

    if let Some(spec) = &args.scenario {
        let mut scenario = load_scenario(spec)?;
        if let Some(policy) = args.policy {
            scenario.policy = policy;
        }
        args.overrides.apply(&mut scenario);
        let violations = scenario.violations();
        if violations.is_empty() {
            println!("scenario {spec}: ok");
        } else {
            for violation in &violations {
                eprintln!("scenario {spec}: {violation}");
            }
            failures.push(format!("scenario `{spec}`"));
        }
    }

    if let Some(path) = &args.catalog {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!("cannot read catalog `{}`: {e}", path.display()))
        })?;
        match Catalog::from_json(&text) {
            Ok(_) => println!("catalog {}: ok", path.display()),
            Err(e) => {
                eprintln!("catalog {}: {e}", path.display());
                failures.push(format!("catalog `{}`", path.display()));
            }
        }
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::usage(format!("invalid: {}", failures.join(", "))))
    }
}

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lqmd::amplitude::{parse_rational, Rational};
use lqmd::oracle::{bob_marginal, checkpoints};
use lqmd::output::{
    branches_json, summarize, to_pretty_json, write_branches_csv, write_groups_csv, SimulationOutput,
};
use lqmd::plans::{census, enumerate_branches, parse_plan_json, CpmPlan, MeasurementPlan, PlanParams, SpmPlan};
use lqmd::protocol::{discriminate, run_protocol, w_statistic, ProtocolConfig, Strategy, DEFAULT_THRESHOLD};

const OUT_DIR_ENV: &str = "LQMD_OUT_DIR";

#[derive(Parser)]
#[command(name = "lqmd", version, about = "Exact GHZ measurement-cascade simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write every branch of Alice's cascade with exact probabilities.
    Enumerate(EnumerateArgs),
    /// Run seeded group experiments and write Bob's counts.
    Simulate(SimulateArgs),
    /// Pick CPM or SPM at random per trial and score Bob's ratio rule.
    Discriminate(SimulateArgs),
    /// Print Bob's exact marginal distribution.
    Marginal(PlanArgs),
    /// Regenerate reference values and invariants; exit 0 iff all pass.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlanStrategy {
    Cpm,
    Spm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RunStrategy {
    Cpm,
    Spm,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct ParamArgs {
    /// Qubits per GHZ state (Alice holds all but the last).
    #[arg(long, default_value_t = 8)]
    qubits: usize,
    /// x² of the ν basis, as p/q or a decimal.
    #[arg(long, default_value = "2/3")]
    x_sq: String,
}

impl ParamArgs {
    fn params(&self) -> Result<PlanParams, Usage> {
        let x_sq = parse_rational(&self.x_sq).map_err(Usage::from)?;
        PlanParams::new(self.qubits, x_sq).map_err(Usage::from)
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, value_enum, default_value_t = PlanStrategy::Spm)]
    strategy: PlanStrategy,
    /// JSON decision table; overrides --strategy, --qubits and --x-sq.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

impl PlanArgs {
    fn build(&self) -> Result<(Box<dyn MeasurementPlan>, String), Usage> {
        if let Some(path) = &self.plan {
            let text = fs::read_to_string(path)
                .map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?;
            let plan = parse_plan_json(&text).map_err(Usage::from)?;
            let n = plan.params().qubits();
            return Ok((Box::new(plan), format!("table-n{n}")));
        }
        let params = self.params.params()?;
        let n = params.qubits();
        Ok(match self.strategy {
            PlanStrategy::Cpm => (Box::new(CpmPlan::new(params)), format!("cpm-n{n}")),
            PlanStrategy::Spm => (Box::new(SpmPlan::new(params)), format!("spm-n{n}")),
        })
    }
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    plan: PlanArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Required: runs are never seeded implicitly.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 30)]
    per_group: usize,
    #[arg(long, default_value_t = 20)]
    groups: usize,
    #[arg(long, value_enum, default_value_t = RunStrategy::Spm)]
    strategy: RunStrategy,
    /// Group ratio ones/zeros at or above which Bob declares SPM.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SimulateArgs {
    fn config(&self, default_trials: usize) -> Result<ProtocolConfig, Usage> {
        let seed = self.seed.ok_or_else(|| Usage("--seed is required".into()))?;
        let config = ProtocolConfig {
            n: self.params.qubits,
            x_sq: self.params.x_sq.clone(),
            per_group: self.per_group,
            groups: self.groups,
            strategy: match self.strategy {
                RunStrategy::Cpm => Strategy::Cpm,
                RunStrategy::Spm => Strategy::Spm,
                RunStrategy::Random => Strategy::RandomPerState,
            },
            seed,
            trials: self.trials.unwrap_or(default_trials),
            threshold: self.threshold,
        };
        config.validate().map_err(Usage::from)?;
        Ok(config)
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// Also write the checks as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad flags or parameters; reported with exit status 2.
#[derive(Debug)]
struct Usage(String);

impl From<lqmd::Error> for Usage {
    fn from(e: lqmd::Error) -> Self {
        Usage(e.to_string())
    }
}

enum Failure {
    Usage(Usage),
    Runtime(anyhow::Error),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

/// `--out`, else `$LQMD_OUT_DIR/<default_name>`, else standard output.
fn resolve_out(out: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(default_name))
    })
}

fn emit(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
        }
        None => io::stdout().write_all(bytes).context("writing to stdout"),
    }
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

fn cmd_enumerate(args: &EnumerateArgs) -> Result<(), Failure> {
    let (plan, tag) = args.plan.build()?;
    let records = enumerate_branches(plan.as_ref());
    let bytes = match args.format {
        Format::Json => branches_json(&records).map_err(anyhow::Error::from)?.into_bytes(),
        Format::Csv => {
            let mut buf = Vec::new();
            write_branches_csv(&records, &mut buf).map_err(anyhow::Error::from)?;
            buf
        }
    };
    let path = resolve_out(&args.out, &format!("enumerate-{tag}.{}", ext(args.format)));
    emit(path.as_ref(), &bytes)?;

    let mut summary = format!("{} branches\n", records.len());
    for ((level, class), count) in census(&records) {
        summary.push_str(&format!("level {level:>2} {class:<8} {count}\n"));
    }
    let total: Rational = records.iter().map(|r| r.probability.clone()).sum();
    summary.push_str(&format!("total probability {total}\n"));
    if path.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

fn oracle_p1(config: &ProtocolConfig) -> Result<Rational, Usage> {
    let params = config.params().map_err(Usage::from)?;
    let cpm = bob_marginal(&CpmPlan::new(params.clone())).1;
    let spm = bob_marginal(&SpmPlan::new(params)).1;
    Ok(match config.strategy {
        Strategy::Cpm => cpm,
        Strategy::Spm => spm,
        Strategy::RandomPerState => (cpm + spm) / Rational::from_integer(2.into()),
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let config = args.config(1)?;
    let trials = run_protocol(&config).map_err(Usage::from)?;
    let params = config.params().map_err(Usage::from)?;
    let w_values = (1..=config.per_group)
        .map(|l| w_statistic(l, &params, config.per_group).map(|w| (l, w)))
        .collect::<lqmd::Result<Vec<_>>>()
        .map_err(Usage::from)?;
    let summary = summarize(&trials, &oracle_p1(&config)?, w_values);
    let bytes = match args.format {
        Format::Json => {
            let out = SimulationOutput { config: &config, per_trial: &trials, summary: summary.clone() };
            to_pretty_json(&out).map_err(anyhow::Error::from)?.into_bytes()
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_groups_csv(&trials, &mut buf).map_err(anyhow::Error::from)?;
            buf
        }
    };
    let path = resolve_out(&args.out, &format!("simulate-seed{}.{}", config.seed, ext(args.format)));
    emit(path.as_ref(), &bytes)?;
    if path.is_some() {
        println!(
            "{} states, empirical P(1) = {:.6}, exact P(1) = {}, eta hits = {}",
            summary.states,
            summary.empirical_p1,
            summary.oracle_p1.num.clone() + "/" + &summary.oracle_p1.den,
            summary.eta_hits
        );
    }
    Ok(())
}

fn cmd_discriminate(args: &SimulateArgs) -> Result<(), Failure> {
    let config = args.config(200)?;
    let report = discriminate(&config).map_err(Usage::from)?;
    let bytes = match args.format {
        Format::Json => {
            #[derive(serde::Serialize)]
            struct Out<'a> {
                config: &'a ProtocolConfig,
                #[serde(flatten)]
                report: &'a lqmd::protocol::DiscriminationReport,
            }
            to_pretty_json(&Out { config: &config, report: &report }).map_err(anyhow::Error::from)?.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["trial", "truth", "decision", "zeros", "ones", "eta_hits"]).map_err(anyhow::Error::from)?;
            for (i, t) in report.trials.iter().enumerate() {
                w.write_record([
                    i.to_string(),
                    t.truth.to_string(),
                    t.decision.to_string(),
                    t.zeros.to_string(),
                    t.ones.to_string(),
                    t.eta_hits.to_string(),
                ])
                .map_err(anyhow::Error::from)?;
            }
            w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?
        }
    };
    let path = resolve_out(&args.out, &format!("discriminate-seed{}.{}", config.seed, ext(args.format)));
    emit(path.as_ref(), &bytes)?;
    let c = report.confusion;
    let summary = format!(
        "trials {}  accuracy {:.4}\n  truth CPM: decided CPM {:>4}  decided SPM {:>4}\n  truth SPM: decided CPM {:>4}  decided SPM {:>4}\n",
        c.total(),
        report.accuracy,
        c.cpm_as_cpm,
        c.cpm_as_spm,
        c.spm_as_cpm,
        c.spm_as_spm
    );
    if path.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

fn cmd_marginal(args: &PlanArgs) -> Result<(), Failure> {
    let (plan, _) = args.build()?;
    let (p0, p1) = bob_marginal(plan.as_ref());
    println!("{p0} {p1}");
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Failure> {
    let params = args.params.params()?;
    let report = checkpoints(&params);
    print!("{}", report.render_table());
    let failed = report.checks.iter().filter(|c| c.status == lqmd::oracle::CheckStatus::Fail).count();
    println!("{} checks, {} failed", report.checks.len(), failed);
    if let Some(path) = resolve_out(&args.out, "verify.json") {
        let json = to_pretty_json(&report.checks).map_err(anyhow::Error::from)?;
        emit(Some(&path), json.as_bytes())?;
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Enumerate(a) => cmd_enumerate(a).map(|_| true),
        Command::Simulate(a) => cmd_simulate(a).map(|_| true),
        Command::Discriminate(a) => cmd_discriminate(a).map(|_| true),
        Command::Marginal(a) => cmd_marginal(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(Failure::Usage(Usage(msg))) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! `boxprop`: evaluate, narrow and pave systems of inequalities.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use boxprop::{
    compile_system_with, gpa_with, parse_system, BcConfig, BcMode, CompileOptions, Discipline, Error, FloatFormat,
    GpaConfig, Outcome, PaveConfig, Pruner, RootRelation, System64,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{Emit, Format};

const EXIT_OK: u8 = 0;
const EXIT_INFEASIBLE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_USAGE: u8 = 4;

const BUDGET_ENV: &str = "BOXPROP_BUDGET";

#[derive(Parser)]
#[command(name = "boxprop", version, about = "Interval constraint propagation for systems of inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Natural interval value of every inequality, and the same value
    /// obtained by selectively initialized propagation
    Eval {
        #[command(flatten)]
        common: Common,
    },
    /// Narrow the declared domains to box consistency
    Consist {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bc: BcArgs,
    },
    /// Cover the solution set with boxes
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bc: BcArgs,
        /// Largest width of an undecided box
        #[arg(long)]
        epsilon: f64,
    },
}

#[derive(Args)]
struct Common {
    /// System file
    file: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Append propagation statistics
    #[arg(long)]
    stats: bool,
    /// Print floats as C99 hex literals
    #[arg(long)]
    hex_floats: bool,
    /// Compile repeated variables as shared nodes instead of splitting them
    #[arg(long)]
    no_rewrite: bool,
    /// Activation cap (eval, consist) or box cap (solve); overrides
    /// BOXPROP_BUDGET
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct BcArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Relational)]
    bc_mode: ModeArg,
    /// Stop bisections once the bracket is this narrow (0: adjacent floats)
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// Cap on narrowing sweeps
    #[arg(long, default_value_t = 1000)]
    max_rounds: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Functional,
    Relational,
}

impl From<ModeArg> for BcMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Functional => BcMode::Functional,
            ModeArg::Relational => BcMode::Relational,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BadEpsilon | Error::BadConfig => EXIT_USAGE,
            Error::BudgetExceeded => EXIT_BUDGET,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("boxprop: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn budget(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    let value = match flag {
        Some(b) => Some(b),
        None => match std::env::var(BUDGET_ENV) {
            Ok(text) => Some(
                text.trim()
                    .parse::<u64>()
                    .map_err(|_| Failure::usage(format!("{BUDGET_ENV} must be a positive integer, got `{text}`")))?,
            ),
            Err(_) => None,
        },
    };
    if value == Some(0) {
        return Err(Failure::usage("budget must be positive"));
    }
    Ok(value)
}

fn load(common: &Common) -> Result<System64, Failure> {
    let src = std::fs::read_to_string(&common.file)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", common.file.display())))?;
    parse_system::<f64>(&src).map_err(|e| Failure::input(format!("{}: {e}", common.file.display())))
}

fn style(common: &Common) -> FloatFormat {
    if common.hex_floats {
        FloatFormat::Hex
    } else {
        FloatFormat::Shortest
    }
}

fn bc_config(bc: &BcArgs, common: &Common, budget: Option<u64>) -> Result<BcConfig<f64>, Failure> {
    let mut cfg = BcConfig::<f64>::with_mode(bc.bc_mode.into());
    cfg.tau = bc.tau;
    cfg.max_rounds = bc.max_rounds;
    cfg.rewrite = !common.no_rewrite;
    if let Some(b) = budget {
        cfg.budget = b;
    }
    cfg.validate().map_err(|_| Failure::usage("--tau must be non-negative and --max-rounds positive"))?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Eval { common } => eval(common),
        Command::Consist { common, bc } => consist(common, bc),
        Command::Solve { common, bc, epsilon } => solve(common, bc, *epsilon),
    }
}

fn eval(common: &Common) -> Result<u8, Failure> {
    let budget = budget(common.budget)?;
    let s = load(common)?;
    let mut network = if common.no_rewrite {
        s.clone()
    } else {
        s.rewrite_single_occurrence()
    };
    // plain evaluation: copies stay independent
    network.classes.clear();
    let options = CompileOptions {
        allow_repeats: common.no_rewrite,
    };
    let csp = compile_system_with(&network, RootRelation::Free, options)?;
    let mut b = csp.initial_box();
    let config = GpaConfig {
        discipline: Discipline::DeepestFirst,
        budget: budget.unwrap_or(GpaConfig::default().budget),
    };
    // selective initialization: the same run as psi_evaluate, with a cap
    let stats = gpa_with(&csp, &mut b, &csp.peripheral_set(), &config);

    let bound = s.bind_all()?;
    let declared = s.initial_box();
    let mut rows = Vec::new();
    for (j, g) in s.inequalities.iter().enumerate() {
        let constraints: Vec<usize> =
            (0..csp.len()).filter(|&c| csp.constraint(c).expr == Some(j)).collect();
        rows.push(report::EvalRow {
            index: j,
            expr: g.to_string(),
            natural: bound[j].eval(declared.as_slice()),
            propagated: b[csp.roots()[j]],
            activations: constraints.iter().map(|&c| stats.activations[c]).sum(),
            constraints: constraints.len(),
        });
    }
    let out = report::EvalReport {
        variables: &s,
        rows,
        stats: common.stats.then_some(&stats),
    };
    out.emit(common.format, style(common));
    Ok(match stats.outcome {
        Outcome::BudgetExhausted => EXIT_BUDGET,
        _ => EXIT_OK,
    })
}

fn consist(common: &Common, bc: &BcArgs) -> Result<u8, Failure> {
    let budget = budget(common.budget)?;
    let cfg = bc_config(bc, common, budget)?;
    let s = load(common)?;
    let b = s.initial_box();
    let mut other_cfg = cfg;
    other_cfg.mode = match cfg.mode {
        BcMode::Functional => BcMode::Relational,
        BcMode::Relational => BcMode::Functional,
    };
    let main = Pruner::new(&s, cfg)?.prune(&b)?;
    let other = Pruner::new(&s, other_cfg)?.prune(&b)?;
    let (functional, relational) = match cfg.mode {
        BcMode::Functional => (&main, &other),
        BcMode::Relational => (&other, &main),
    };
    let out = report::ConsistReport {
        system: &s,
        mode: cfg.mode,
        selected: &main,
        functional,
        relational,
        stats: common.stats,
    };
    out.emit(common.format, style(common));
    Ok(match main.outcome {
        Outcome::Fixpoint => EXIT_OK,
        Outcome::Failure => EXIT_INFEASIBLE,
        Outcome::BudgetExhausted => EXIT_BUDGET,
    })
}

fn solve(common: &Common, bc: &BcArgs, epsilon: f64) -> Result<u8, Failure> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Failure::usage("--epsilon must be positive and finite"));
    }
    let budget = budget(common.budget)?;
    // the box budget governs solve; narrowing keeps its own default cap
    let cfg = bc_config(bc, common, None)?;
    let s = load(common)?;
    let mut pave_cfg = PaveConfig::new(epsilon);
    pave_cfg.bc = cfg;
    if let Some(b) = budget {
        pave_cfg.max_boxes = b;
    }
    let paving = boxprop::pave(&s, &s.initial_box(), &pave_cfg)?;
    let out = report::SolveReport {
        system: &s,
        mode: cfg.mode,
        paving: &paving,
        stats: common.stats,
    };
    out.emit(common.format, style(common));
    Ok(if !paving.is_complete() {
        EXIT_BUDGET
    } else if paving.is_empty() {
        EXIT_INFEASIBLE
    } else {
        EXIT_OK
    })
}

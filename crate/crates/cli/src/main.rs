//! `qdomain`: law suites, weakest preconditions, order and lub computations
//! and counterexample demos from the command line.
//!
//! Exit status: 0 when every check passes, 1 when one fails, 2 on usage
//! errors, 3 on unreadable or malformed input.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{CliError, Format, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "qdomain", version, about = "Executable quantum domain theory")]
struct Cli {
    /// Seed for every sampled element.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for numeric order and equality predicates.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Algebraic law suites.
    #[command(subcommand)]
    Laws(LawsCommand),
    /// Weakest preconditions of quantum programs.
    #[command(subcommand)]
    Wp(WpCommand),
    /// Löwner order, least upper bounds and finite posets.
    #[command(subcommand)]
    Order(OrderCommand),
    /// Counterexample demos.
    #[command(subcommand)]
    Demo(DemoCommand),
    /// Meet, join, order and atoms of two projections.
    Lattice(LatticeArgs),
    /// Commutant and bicommutant of a generator set.
    Commutant(CommutantArgs),
    /// Print the JSON report schema.
    Schema,
}

#[derive(Subcommand, Debug)]
enum LawsCommand {
    /// Effect algebra, effect module and GEA axioms on the built-in instances
    /// or on a finite table.
    EffectAlgebra(EffectAlgebraArgs),
    /// Subdistribution monad, Kleisli, wp and state-and-effect checks.
    Discrete(DiscreteArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TableMode {
    Pcm,
    Gea,
    Ea,
}

#[derive(Args, Debug)]
struct EffectAlgebraArgs {
    /// Finite table (`sum a b c`, `perp a b` lines); replaces the built-in instances.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Axioms checked on `--table`.
    #[arg(long, value_enum, default_value_t = TableMode::Ea)]
    mode: TableMode,
    /// Sampled elements per numeric carrier.
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

#[derive(Args, Debug)]
struct DiscreteArgs {
    #[arg(long, default_value_t = 200)]
    instances: usize,
    /// Largest carrier size.
    #[arg(long, default_value_t = 5)]
    max_size: usize,
}

#[derive(Subcommand, Debug)]
enum WpCommand {
    /// Weakest precondition of `--post`, with duality pairings when `--state` is given.
    Run(WpRunArgs),
}

#[derive(Args, Debug)]
struct WpRunArgs {
    #[arg(long)]
    program: PathBuf,
    #[arg(long)]
    post: PathBuf,
    #[arg(long)]
    state: Option<PathBuf>,
    /// Kleene iteration cap per loop.
    #[arg(long, default_value_t = 100_000)]
    max_iterations: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MapOrder {
    Choi,
    Sampled,
}

#[derive(Subcommand, Debug)]
enum OrderCommand {
    /// Decide `f ⊑ g` for two Kraus maps.
    Check(OrderCheckArgs),
    /// Least upper bound of a monotone sequence of effects or Kraus maps.
    Lub(OrderLubArgs),
    /// dcpo, way-below and atom report for a finite poset.
    Poset(PosetArgs),
}

#[derive(Args, Debug)]
struct OrderCheckArgs {
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long, value_enum, default_value_t = MapOrder::Choi)]
    mode: MapOrder,
    /// Positive samples in sampled mode.
    #[arg(long, default_value_t = 256)]
    samples: usize,
}

#[derive(Args, Debug)]
struct OrderLubArgs {
    /// Treat the files as Kraus maps instead of algebra elements.
    #[arg(long)]
    maps: bool,
    #[arg(long, default_value_t = 1_000_000)]
    max_iterations: usize,
    /// Sequence members, in order.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct PosetArgs {
    /// Poset file (`elem a`, `leq a b` lines).
    #[arg(long)]
    file: PathBuf,
    /// Also report on the monotone function poset into this poset.
    #[arg(long)]
    function_to: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum DemoCommand {
    /// Strictly improve a continuous upper bound of the step chain.
    NoLub(NoLubArgs),
    /// Joins of the truncated ℓ² family approaching e₁.
    Ell2(Ell2Args),
}

#[derive(Args, Debug)]
struct NoLubArgs {
    /// Piecewise-linear function (`x y` lines).
    #[arg(long)]
    g: PathBuf,
    #[arg(long, default_value = "1/8")]
    delta: String,
}

#[derive(Args, Debug)]
struct Ell2Args {
    /// Largest truncation.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Emit `N,distance` rows only.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct LatticeArgs {
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: PathBuf,
}

#[derive(Args, Debug)]
struct CommutantArgs {
    /// Generator matrices, one `dim n` block each.
    #[arg(long)]
    generators: PathBuf,
    /// Take the *-algebra generated with unit and adjoints.
    #[arg(long)]
    close: bool,
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if !(cli.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", cli.tol)));
    }
    let cfg = RunConfig {
        seed: cli.seed,
        tol: cli.tol,
        format: cli.format,
    };
    let outcome = match cli.command {
        Command::Laws(LawsCommand::EffectAlgebra(a)) => {
            let mode = match a.mode {
                TableMode::Pcm => qdomain::effect::LawMode::Pcm,
                TableMode::Gea => qdomain::effect::LawMode::Gea,
                TableMode::Ea => qdomain::effect::LawMode::Ea,
            };
            commands::laws_effect_algebra(&cfg, a.table.as_deref(), mode, a.samples)?
        }
        Command::Laws(LawsCommand::Discrete(a)) => commands::laws_discrete(&cfg, a.instances, a.max_size)?,
        Command::Wp(WpCommand::Run(a)) => {
            commands::wp_run(&cfg, &a.program, &a.post, a.state.as_deref(), a.max_iterations)?
        }
        Command::Order(OrderCommand::Check(a)) => {
            let sampled = matches!(a.mode, MapOrder::Sampled);
            commands::order_check(&cfg, &a.f, &a.g, sampled, a.samples)?
        }
        Command::Order(OrderCommand::Lub(a)) => commands::order_lub(&cfg, &a.files, a.maps, a.max_iterations)?,
        Command::Order(OrderCommand::Poset(a)) => commands::order_poset(&cfg, &a.file, a.function_to.as_deref())?,
        Command::Demo(DemoCommand::NoLub(a)) => commands::demo_no_lub(&cfg, &a.g, &a.delta)?,
        Command::Demo(DemoCommand::Ell2(a)) => commands::demo_ell2(&cfg, a.n, a.csv)?,
        Command::Lattice(a) => commands::lattice(&cfg, &a.p, &a.q)?,
        Command::Commutant(a) => commands::commutant(&cfg, &a.generators, a.close)?,
        Command::Schema => {
            println!("{}", output::SCHEMA);
            return Ok(ExitCode::SUCCESS);
        }
    };
    print!("{}", outcome.render(&cfg));
    Ok(if outcome.report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

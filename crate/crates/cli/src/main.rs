//! `capbox` command-line front end.
//!
//! Exit codes: 0 success, 1 type or adaptation failure (or a disagreement
//! between the two inference engines), 2 unreadable, unparsable or
//! ill-formed input, 3 fuel exhausted.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use capbox::{
    box_adapt, box_adapt_t, cv, erase_env, erase_term, fsub_typecheck, infer, infer_t, normalize,
    parse_env, parse_term, parse_type, subtype, subtype_capt, typecheck, wf_env, wf_type, AlphaEq,
    Env, Fuel, ParseError, Term, Type, TypeError, Var, DEFAULT_FUEL,
};
use capbox_harness::{run_differential, GenConfig, Mutation, Property, RunConfig, Settings};
use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Parser)]
#[command(
    name = "capbox",
    version,
    about = "Capture checking with box inference"
)]
struct Cli {
    /// Step budget for every judgment.
    #[arg(long, global = true, default_value_t = DEFAULT_FUEL)]
    fuel: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck a term and print its type.
    Check {
        file: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
    },
    /// Insert missing box operations.
    Infer {
        file: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = System::Both)]
        system: System,
        #[arg(long, value_enum, default_value_t = Emit::Both)]
        emit: Emit,
    },
    /// Decide subtyping between two types.
    Sub {
        sub: String,
        sup: String,
        #[arg(long)]
        env: Option<PathBuf>,
        /// Use the capture-set-directed variant of the judgment.
        #[arg(long)]
        capsets: bool,
    },
    /// Adapt a variable to an expected type.
    Adapt {
        #[arg(long)]
        env: Option<PathBuf>,
        #[arg(long = "var")]
        var: String,
        #[arg(long)]
        to: String,
        #[arg(long, value_enum, default_value_t = System::Term)]
        system: System,
    },
    /// Print the compacted form of a term.
    Normalize { file: PathBuf },
    /// Erase captures and boxes.
    Erase {
        file: PathBuf,
        #[arg(long)]
        env: Option<PathBuf>,
        /// Also typecheck the erased term in plain F-sub.
        #[arg(long)]
        check_fsub: bool,
    },
    /// Run properties over generated cases. Prints JSON lines on stdout and
    /// a summary on stderr.
    Fuzz(FuzzArgs),
}

#[derive(clap::Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cases per property.
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Comma-separated property names, or `all`.
    #[arg(long, default_value = "all")]
    check: String,
    /// Include bounds whose erased subtyping diverges.
    #[arg(long)]
    hostile: bool,
    #[arg(long, default_value_t = 7)]
    max_env: usize,
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    /// Used only with --fixed-bias; otherwise each case picks from 0, .3, .6, .9.
    #[arg(long, default_value_t = 0.5)]
    box_bias: f64,
    #[arg(long)]
    fixed_bias: bool,
    #[arg(long, default_value_t = 0.7)]
    drop_rate: f64,
    /// Report mirror cases that spend more than this multiple of the F-sub fuel.
    #[arg(long, default_value_t = 8)]
    ratio: u64,
    #[arg(long)]
    no_shrink: bool,
    /// Check against a deliberately broken captured-variable function.
    #[arg(long, value_enum)]
    mutation: Option<MutationArg>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum System {
    Term,
    Type,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Term,
    Type,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    BrokenCv,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Type(TypeError),
    #[error("{0}")]
    Rejected(String),
    #[error("fuel exhausted")]
    Fuel,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Type(_) | CliError::Rejected(_) => 1,
            CliError::Input(_) => 2,
            CliError::Fuel => 3,
        }
    }
}

impl From<TypeError> for CliError {
    fn from(e: TypeError) -> Self {
        match e {
            TypeError::FuelExhausted => CliError::Fuel,
            e if e.is_input_error() => CliError::Input(e.to_string()),
            e => CliError::Type(e),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn located(what: &str) -> impl Fn(ParseError) -> CliError + '_ {
    move |e| CliError::Input(format!("{what}:{e}"))
}

fn load_env(path: Option<&PathBuf>) -> CliResult<Env> {
    let Some(path) = path else {
        return Ok(Env::new());
    };
    let env = parse_env(&read(path)?).map_err(located(&path.display().to_string()))?;
    wf_env(&env).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(env)
}

fn load_term(path: &Path) -> CliResult<Term> {
    parse_term(&read(path)?).map_err(located(&path.display().to_string()))
}

fn load_type(env: &Env, src: &str) -> CliResult<Type> {
    let t = parse_type(src).map_err(located(src))?;
    wf_type(env, &t).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(t)
}

fn run(cli: Cli) -> CliResult<()> {
    let fuel = || Fuel::new(cli.fuel);
    match cli.command {
        Command::Check { file, env } => {
            let env = load_env(env.as_ref())?;
            let t = load_term(&file)?;
            println!("{}", typecheck(&env, &t, &mut fuel())?);
        }
        Command::Infer {
            file,
            env,
            system,
            emit,
        } => {
            let env = load_env(env.as_ref())?;
            let t = load_term(&file)?;
            infer_cmd(&env, &t, system, emit, cli.fuel)?;
        }
        Command::Sub {
            sub,
            sup,
            env,
            capsets,
        } => {
            let env = load_env(env.as_ref())?;
            let (t, u) = (load_type(&env, &sub)?, load_type(&env, &sup)?);
            let holds = if capsets {
                subtype_capt(&env, &t, &u, &mut fuel())?
            } else {
                subtype(&env, &t, &u, &mut fuel())?
            };
            println!("{holds}");
            if !holds {
                return Err(CliError::Rejected(format!(
                    "`{t}` is not a subtype of `{u}`"
                )));
            }
        }
        Command::Adapt {
            env,
            var,
            to,
            system,
        } => {
            let env = load_env(env.as_ref())?;
            let expected = load_type(&env, &to)?;
            let x = Var::new(&var);
            if system != System::Type {
                let t = box_adapt(&env, &x, &expected, &mut fuel())?;
                println!("term: {t}");
                println!("captures: {}", cv(&t));
            }
            if system != System::Term {
                let (kind, set) = box_adapt_t(&env, &x, &expected, &mut fuel())?;
                println!("kind: {kind:?}");
                println!("captures: {set}");
            }
        }
        Command::Normalize { file } => println!("{}", normalize(&load_term(&file)?)),
        Command::Erase {
            file,
            env,
            check_fsub,
        } => {
            let env = load_env(env.as_ref())?;
            let t = erase_term(&load_term(&file)?);
            println!("{t}");
            if check_fsub {
                println!("{}", fsub_typecheck(&erase_env(&env), &t, &mut fuel())?);
            }
        }
        Command::Fuzz(args) => fuzz(args, cli.fuel)?,
    }
    Ok(())
}

fn infer_cmd(env: &Env, t: &Term, system: System, emit: Emit, budget: u64) -> CliResult<()> {
    let term_level = (system != System::Type).then(|| infer(env, t, &mut Fuel::new(budget)));
    let type_level = (system != System::Term).then(|| infer_t(env, t, &mut Fuel::new(budget)));
    if let (Some(a), Some(b)) = (&term_level, &type_level) {
        let agree = match (a, b) {
            (Ok((t2, ty)), Ok((ty2, c))) => ty.alpha_eq(ty2) && cv(t2) == *c,
            (Err(e1), Err(e2)) => e1.class() == e2.class(),
            _ => false,
        };
        if !agree {
            let show = |r: Result<String, &TypeError>| match r {
                Ok(s) => serde_json::json!({ "ok": s }),
                Err(e) => serde_json::json!({ "error": e.class(), "message": e.to_string() }),
            };
            let diff = serde_json::json!({
                "divergence": {
                    "term_level": show(a.as_ref().map(|(t2, ty)| format!("{t2} : {ty} with captures {}", cv(t2)))),
                    "type_level": show(b.as_ref().map(|(ty, c)| format!("{ty} with captures {c}"))),
                }
            });
            println!("{diff}");
            return Err(CliError::Rejected(
                "the two inference engines disagree".into(),
            ));
        }
    }
    match (term_level, type_level) {
        (Some(r), _) => {
            let (t2, ty) = r?;
            if emit != Emit::Type {
                println!("term: {t2}");
            }
            if emit != Emit::Term {
                println!("type: {ty}");
            }
            println!("captures: {}", cv(&t2));
        }
        (None, Some(r)) => {
            let (ty, c) = r?;
            println!("type: {ty}");
            println!("captures: {c}");
        }
        (None, None) => unreachable!("at least one engine runs"),
    }
    Ok(())
}

fn fuzz(args: FuzzArgs, budget: u64) -> CliResult<()> {
    let props: Vec<Property> = if args.check == "all" {
        Property::ALL.to_vec()
    } else {
        args.check
            .split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|e| CliError::Input(format!("{e}")))
            })
            .collect::<CliResult<_>>()?
    };
    let rc = RunConfig {
        gen: GenConfig {
            seed: args.seed,
            max_env: args.max_env,
            max_depth: args.max_depth,
            box_bias: args.box_bias,
            drop_rate: args.drop_rate,
            hostile: args.hostile,
        },
        count: args.count,
        mixed_bias: !args.fixed_bias,
        settings: Settings {
            fuel: budget,
            ratio: args.ratio,
            mutation: args
                .mutation
                .map(|MutationArg::BrokenCv| Mutation::BrokenCv),
        },
        shrink: !args.no_shrink,
    };
    println!("{}", serde_json::json!({ "config": rc }));
    let report = run_differential(&rc, &props);
    print!("{}", report.json_lines());
    eprintln!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Rejected(format!(
            "{} failing cases",
            report.failures.len()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

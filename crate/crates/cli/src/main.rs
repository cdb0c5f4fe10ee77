use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use discfrac::acceptance::{run_suite, Fault, SuiteConfig};
use discfrac::fracops::{frac_apply, Method, OperatorSpec};
use discfrac::holder::{double_window_stability, holder_norm, HolderIndex};
use discfrac::kernel::{kernel_loggamma, kernel_recurrence};
use discfrac::schauder::{run_sweep, Case, FamilyKind, SweepConfig, TestFamily};
use discfrac::semigroup::apply_semigroup;
use discfrac::signal::{parse_signal, write_signal, Signal};
use discfrac::{Error, Extension, GridFunction, Side};

#[derive(Parser)]
#[command(name = "discfrac", version, about = "Discrete fractional calculus on uniform meshes")]
struct Cli {
    /// Tolerance for truncation bounds and validity flags.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Mesh step.
    #[arg(long, global = true, default_value_t = 1.0)]
    h: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the kernel table as CSV with header `n,lambda`.
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        max_index: usize,
        #[arg(long, value_enum, default_value_t = KernelMethodArg::Recurrence)]
        method: KernelMethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a fractional sum (negative order) or difference (positive order).
    Apply {
        #[arg(long, allow_hyphen_values = true)]
        order: f64,
        #[arg(long, value_enum, default_value_t = SideArg::Right)]
        side: SideArg,
        #[arg(long)]
        input: PathBuf,
        /// zero, constant, or decay:p:c
        #[arg(long, default_value = "zero")]
        extension: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Series)]
        method: MethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evolve by the Poisson semigroup for time t.
    Evolve {
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value_t = SideArg::Right)]
        side: SideArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Hölder norm report of a signal.
    Holder {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sweep a Schauder norm ratio over families, parameter pairs and mesh steps.
    Schauder {
        #[arg(long)]
        case: String,
        /// Comma-separated; paired with --beta-list entry by entry.
        #[arg(long, value_delimiter = ',')]
        alpha_list: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        beta_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25,0.125,0.0625,0.03125")]
        h_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "bump,cusp,random,impulse")]
        families: Vec<String>,
        /// Smoothness index of the inputs in case iii.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Selftest {
        /// Only run one module: kernel, semigroup, fracops, holder, schauder.
        #[arg(long)]
        filter: Option<String>,
        /// Corrupt the kernel tables to check that the suite notices.
        #[arg(long)]
        inject_fault: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelMethodArg {
    Recurrence,
    Loggamma,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SideArg {
    Right,
    Left,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Right => Side::Right,
            SideArg::Left => Side::Left,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Series,
    Fft,
    Quadrature,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Series => Method::Series,
            MethodArg::Fft => Method::Fft,
            MethodArg::Quadrature => Method::Quadrature,
        }
    }
}

enum Failure {
    Lib(Error),
    Usage(String),
    TestsFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::TestsFailed) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::QuadratureNotConverged(_) | Error::WindowTooSmall { .. } | Error::CrossCheck { .. } => 3,
        _ => 2,
    }
}

fn parse_extension(s: &str) -> std::result::Result<Extension, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["zero"] => Ok(Extension::ZeroOutside),
        ["constant"] => Ok(Extension::Constant),
        ["decay", p, c] => {
            let p: f64 = p
                .parse()
                .map_err(|_| Failure::Usage(format!("bad decay exponent {p:?}")))?;
            let c: f64 = c
                .parse()
                .map_err(|_| Failure::Usage(format!("bad decay constant {c:?}")))?;
            Ok(Extension::decay(p, c)?)
        }
        _ => Err(Failure::Usage(format!(
            "unknown extension {s:?}; expected zero, constant or decay:p:c"
        ))),
    }
}

fn report(command: &str, parameters: Value, results: Value, tolerances: Value, flags: Value) -> Value {
    json!({
        "command": command,
        "parameters": parameters,
        "results": results,
        "tolerances": tolerances,
        "flags": flags,
    })
}

fn emit_json(path: Option<&Path>, doc: &Value) -> CmdResult {
    let text = serde_json::to_string_pretty(doc).map_err(|e| Failure::Lib(Error::Io(e.to_string())))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(Error::from)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn emit_signal(path: Option<&Path>, u: &GridFunction) -> CmdResult {
    match path {
        Some(p) => write_signal(std::fs::File::create(p).map_err(Error::from)?, u)?,
        None => write_signal(std::io::stdout().lock(), u)?,
    }
    Ok(())
}

fn invalid_indices(u: &GridFunction) -> Vec<i64> {
    u.grid()
        .indices()
        .zip(u.valid())
        .filter(|(_, &ok)| !ok)
        .map(|(n, _)| n)
        .collect()
}

fn load(path: &Path, h: f64) -> std::result::Result<Signal, Failure> {
    let s = parse_signal(path, h)?;
    if !s.filled.is_empty() {
        eprintln!("warning: {} missing indices zero-filled", s.filled.len());
    }
    Ok(s)
}

fn run(cli: &Cli) -> CmdResult {
    let tol = cli.tol;
    let h = cli.h;
    match &cli.command {
        Command::Kernel {
            alpha,
            max_index,
            method,
            out,
        } => {
            let table = match method {
                KernelMethodArg::Recurrence => kernel_recurrence(*alpha, *max_index),
                KernelMethodArg::Loggamma => kernel_loggamma(*alpha, *max_index)?,
            };
            let sink: Box<dyn Write> = match out {
                Some(p) => Box::new(std::fs::File::create(p).map_err(Error::from)?),
                None => Box::new(std::io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            let io = |e: csv::Error| Failure::Lib(Error::Io(e.to_string()));
            w.write_record(["n", "lambda"]).map_err(io)?;
            for (n, v) in table.values().iter().enumerate() {
                w.write_record([n.to_string(), v.to_string()]).map_err(io)?;
            }
            w.flush().map_err(Error::from)?;
            Ok(())
        }
        Command::Apply {
            order,
            side,
            input,
            extension,
            method,
            out,
            report: report_path,
        } => {
            let ext = parse_extension(extension)?;
            let signal = load(input, h)?;
            let u = signal.function.with_extension(ext);
            let spec = OperatorSpec::new((*side).into(), *order, h)?;
            let v = frac_apply(&u, &spec, (*method).into(), tol)?;
            emit_signal(out.as_deref(), &v)?;
            if let Some(p) = report_path {
                let doc = report(
                    "apply",
                    json!({"order": order, "side": side, "h": h, "extension": extension, "method": method,
                           "input": input}),
                    json!({"window": v.grid(), "max_abs": v.max_abs()}),
                    json!({"tol": tol}),
                    json!({"zero_filled": signal.filled, "invalid_indices": invalid_indices(&v)}),
                );
                emit_json(Some(p), &doc)?;
            }
            Ok(())
        }
        Command::Evolve {
            t,
            side,
            input,
            out,
            report: report_path,
        } => {
            let signal = load(input, h)?;
            let v = apply_semigroup(&signal.function, *t, (*side).into(), tol)?;
            emit_signal(out.as_deref(), &v)?;
            if let Some(p) = report_path {
                let doc = report(
                    "evolve",
                    json!({"t": t, "side": side, "h": h, "input": input}),
                    json!({"window": v.grid(), "max_abs": v.max_abs()}),
                    json!({"tol": tol}),
                    json!({"zero_filled": signal.filled, "invalid_indices": invalid_indices(&v)}),
                );
                emit_json(Some(p), &doc)?;
            }
            Ok(())
        }
        Command::Holder {
            k,
            beta,
            input,
            report: report_path,
        } => {
            let signal = load(input, h)?;
            let idx = HolderIndex::new(*k, *beta)?;
            let rep = holder_norm(&signal.function, idx)?;
            let stability = double_window_stability(&signal.function, idx)?;
            let doc = report(
                "holder",
                json!({"k": k, "beta": beta, "h": h, "input": input}),
                json!({
                    "norm": rep.norm,
                    "seminorms": rep.seminorms,
                    "sup_terms": rep.sup_terms,
                    "window": rep.window,
                    "stability": stability,
                }),
                json!({"stability_flag": discfrac::holder::STABILITY_FLAG}),
                json!({"zero_filled": signal.filled, "unstable_window": stability.flagged}),
            );
            emit_json(report_path.as_deref(), &doc)
        }
        Command::Schauder {
            case,
            alpha_list,
            beta_list,
            h_list,
            families,
            k,
            report: report_path,
        } => {
            let case: Case = case.parse()?;
            let fams = families
                .iter()
                .map(|f| Ok(TestFamily::new(f.parse::<FamilyKind>()?, cli.seed)))
                .collect::<discfrac::Result<Vec<_>>>()?;
            let mut cfg = SweepConfig::new(case);
            cfg.options.tol = tol;
            if case == Case::III {
                cfg.k = *k;
            }
            let rep = run_sweep(&cfg, &fams, alpha_list, beta_list, h_list)?;
            let doc = report(
                "schauder",
                json!({"case": case, "k": cfg.k, "alpha_list": alpha_list, "beta_list": beta_list,
                       "h_list": h_list, "families": families, "seed": cli.seed, "options": cfg.options}),
                json!({
                    "ratios": rep.ratios,
                    "spreads": rep.spreads,
                    "max_ratio": rep.max_ratio,
                    "min_ratio": rep.min_ratio,
                    "max_spread": rep.max_spread,
                    "max_identity_residual": rep.max_identity_residual,
                }),
                json!({"identity": discfrac::schauder::IDENTITY_TOL, "spread": 2.0, "stability": 1e-3}),
                json!({
                    "max_ratio_undefined": rep.max_ratio.is_none(),
                    "max_stability": rep.max_stability,
                    "unstable": rep.max_stability.is_some_and(|s| s > 1e-3),
                }),
            );
            emit_json(report_path.as_deref(), &doc)
        }
        Command::Selftest {
            filter,
            inject_fault,
            report: report_path,
        } => {
            if let Some(f) = filter {
                let known = discfrac::acceptance::modules();
                if !known.contains(&f.as_str()) {
                    return Err(Failure::Usage(format!(
                        "unknown module {f:?}; expected one of {known:?}"
                    )));
                }
            }
            let cfg = SuiteConfig {
                filter: filter.clone(),
                fault: inject_fault.then_some(Fault::CorruptKernel),
                seed: cli.seed,
            };
            let outcomes = run_suite(&cfg);
            for o in &outcomes {
                println!("{}", o.line());
            }
            let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
            println!(
                "{} of {} criteria passed; failed: {:?}",
                outcomes.len() - failed.len(),
                outcomes.len(),
                failed
            );
            if let Some(p) = report_path {
                let doc = report(
                    "selftest",
                    json!({"filter": filter, "inject_fault": inject_fault, "seed": cli.seed}),
                    json!({"criteria": outcomes}),
                    json!({}),
                    json!({"failed": failed}),
                );
                emit_json(Some(p), &doc)?;
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::TestsFailed)
            }
        }
    }
}

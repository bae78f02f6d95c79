//! Command-line front end. `run` returns the process exit code:
//! 0 success, 2 invalid input, 3 solver failure, 4 unreadable or malformed file.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde_json::{json, Value};

use invlp::gof::{self, Axis};
use invlp::io::{self, FileError, ProblemFile};
use invlp::lp::{solve_forward, LpStatus};
use invlp::model::{FitConfig, Norm, Variant};
use invlp::oracle;
use invlp::structured;
use invlp::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_FILE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "invlp", version, about = "Impute LP cost vectors from observed decisions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a cost vector and print the report.
    Fit(FitArgs),
    /// Fit and score with the coefficient of complementarity.
    Gof(GofArgs),
    /// ρ over a grid of positions for one extra point (n = 2).
    Sweep(SweepArgs),
    /// Solve the forward problem for a given cost or weight vector.
    Forward(ForwardArgs),
    /// Generate observations from perturbed objective weights.
    Gen(GenArgs),
    /// Compare the three losses and the bounds between them.
    Check(CheckArgs),
    /// Brute-force reference value.
    Oracle(OracleArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum VariantArg {
    Adg,
    Rdg,
    Dsp,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Adg => Variant::Adg,
            VariantArg::Rdg => Variant::Rdg,
            VariantArg::Dsp => Variant::Dsp,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum NormArg {
    L1,
    Linf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum LossArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "inf")]
    Inf,
}

#[derive(Args, Debug)]
struct SolverOpts {
    /// Normalization norm on the cost vector.
    #[arg(long, value_enum, default_value = "l1")]
    norm: NormArg,
    /// Distance used by the decision-space loss.
    #[arg(long, value_enum, default_value = "2")]
    p: LossArg,
    /// Comma-separated 0/1 flags; zeros force the cost entry to zero.
    #[arg(long, value_delimiter = ',')]
    support_mask: Option<Vec<u8>>,
    /// Restrict the cost vector to be nonnegative.
    #[arg(long)]
    nonneg_cost: bool,
}

impl SolverOpts {
    fn config(&self, skip_zero_rhs: bool) -> FitConfig {
        FitConfig {
            normalization: match self.norm {
                NormArg::L1 => Norm::L1,
                NormArg::Linf => Norm::Linf,
            },
            nonneg_cost: self.nonneg_cost,
            support_mask: self.support_mask.as_ref().map(|m| m.iter().map(|v| *v != 0).collect()),
            ds_p: match self.p {
                LossArg::One => Norm::L1,
                LossArg::Two => Norm::L2,
                LossArg::Inf => Norm::Linf,
            },
            skip_zero_rhs,
        }
    }
}

#[derive(Args, Debug)]
struct Output {
    /// Write here instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[command(flatten)]
    opts: SolverOpts,
    /// Fit weights over the rows of C instead of a free cost vector.
    #[arg(long)]
    structured: bool,
    problem: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct GofArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[command(flatten)]
    opts: SolverOpts,
    /// Leave rows with zero right-hand side out of the relative baseline.
    #[arg(long)]
    skip_zero_rhs: bool,
    problem: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[command(flatten)]
    opts: SolverOpts,
    #[arg(long)]
    skip_zero_rhs: bool,
    /// First coordinate axis as lo:hi:steps.
    #[arg(long, default_value = "-2:10:61")]
    g1: String,
    /// Second coordinate axis as lo:hi:steps.
    #[arg(long, default_value = "-2:10:61")]
    g2: String,
    problem: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false, id = "objective")]
struct ObjectiveArg {
    /// Comma-separated cost vector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    cost: Option<Vec<f64>>,
    /// Comma-separated weights over the rows of C.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct ForwardArgs {
    #[command(flatten)]
    objective: ObjectiveArg,
    problem: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    true_alpha: Vec<f64>,
    #[arg(long)]
    q: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Problem file with A, b and C; its points are replaced.
    problem: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    opts: SolverOpts,
    problem: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[command(flatten)]
    opts: SolverOpts,
    /// Angular step for cost directions, or grid step along faces.
    #[arg(long, default_value_t = oracle::DEFAULT_ANGULAR_STEP)]
    step: f64,
    problem: PathBuf,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    Solver(Error),
    File(FileError),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::File(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn load(path: &Path) -> Outcome<(ProblemFile, invlp::model::ForwardProblem)> {
    let file = ProblemFile::read(path)?;
    let fp = file.problem()?;
    Ok((file, fp))
}

fn checked(file: &ProblemFile, fp: &invlp::model::ForwardProblem) -> Outcome<invlp::model::EnsembleData> {
    let data = file.data();
    let report = invlp::model::validate_problem(fp, &data);
    if !report.ok() {
        return Err(Error::Invalid(report.to_string()).into());
    }
    Ok(data)
}

fn parse_axis(text: &str) -> Outcome<Axis> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::Solver(Error::Invalid(format!("axis must be lo:hi:steps, got {text:?}")));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo = parts[0].parse().map_err(|_| bad())?;
    let hi = parts[1].parse().map_err(|_| bad())?;
    let steps = parts[2].parse().map_err(|_| bad())?;
    Ok(Axis::new(lo, hi, steps))
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn execute(command: Command) -> Outcome<(String, Option<PathBuf>)> {
    match command {
        Command::Fit(a) => {
            let (file, fp) = load(&a.problem)?;
            let cfg = a.opts.config(false);
            let text = if a.structured {
                let fit = match Variant::from(a.variant) {
                    Variant::Adg => structured::solve_structured_adg(&fp, &file.observations())?,
                    Variant::Rdg => structured::solve_structured_rdg(&fp, &file.observations())?,
                    Variant::Dsp => return Err(Error::Unsupported("structured decision-space fits".into()).into()),
                };
                json_text(&io::structured_json(&fit))
            } else {
                let data = checked(&file, &fp)?;
                json_text(&io::fit_json(&gof::fit(&fp, &data, a.variant.into(), &cfg)?))
            };
            Ok((text, a.output.out))
        }
        Command::Gof(a) => {
            let (file, fp) = load(&a.problem)?;
            let data = checked(&file, &fp)?;
            let (fit, report) = gof::rho_with_fit(&fp, &data, a.variant.into(), &a.opts.config(a.skip_zero_rhs))?;
            Ok((json_text(&io::gof_json(&fit, &report)), a.output.out))
        }
        Command::Sweep(a) => {
            let (file, fp) = load(&a.problem)?;
            let data = checked(&file, &fp)?;
            let (g1, g2) = (parse_axis(&a.g1)?, parse_axis(&a.g2)?);
            let grid = gof::rho_sweep(&fp, &data, g1, g2, a.variant.into(), &a.opts.config(a.skip_zero_rhs))?;
            Ok((io::sweep_csv(&grid), a.output.out))
        }
        Command::Forward(a) => {
            let (_, fp) = load(&a.problem)?;
            let value = match (a.objective.cost, a.objective.alpha) {
                (Some(c), _) => {
                    let sol = solve_forward(&fp, &DVector::from_vec(c))?;
                    match sol.status {
                        LpStatus::Optimal => json!({ "status": "optimal", "x": sol.x, "objective": sol.objective }),
                        LpStatus::Infeasible => return Err(Error::InfeasibleForward.into()),
                        LpStatus::Unbounded => return Err(Error::UnboundedForward.into()),
                        LpStatus::Stalled => return Err(Error::NumericFailure("forward LP stalled".into()).into()),
                    }
                }
                (None, Some(alpha)) => {
                    let alpha = DVector::from_vec(alpha);
                    let x = structured::forward_with_alpha(&fp, &alpha)?;
                    let c = &fp.cost_structure().expect("checked by forward_with_alpha").c;
                    let values: Vec<f64> = (c * &x).iter().copied().collect();
                    json!({ "status": "optimal", "x": x.iter().copied().collect::<Vec<f64>>(), "objectives": values })
                }
                (None, None) => unreachable!("clap requires one of --cost and --alpha"),
            };
            Ok((json_text(&value), a.output.out))
        }
        Command::Gen(a) => {
            let (file, fp) = load(&a.problem)?;
            let data = structured::gen_ensemble(&fp, &DVector::from_vec(a.true_alpha), a.q, a.noise, a.seed)?;
            let mut out = ProblemFile::from_parts(&fp, &data);
            out.row_labels = file.row_labels;
            Ok((out.to_json() + "\n", a.output.out))
        }
        Command::Check(a) => {
            let (file, fp) = load(&a.problem)?;
            let data = checked(&file, &fp)?;
            let report = gof::check_dominance(&fp, &data, &a.opts.config(false))?;
            Ok((json_text(&json!(report)), a.output.out))
        }
        Command::Oracle(a) => {
            let (file, fp) = load(&a.problem)?;
            let data = checked(&file, &fp)?;
            let cfg = a.opts.config(false);
            let (value, direction) = match Variant::from(a.variant) {
                Variant::Adg => {
                    let r = oracle::oracle_adg(&fp, &data, cfg.normalization, a.step)?;
                    (r.value, r.direction)
                }
                Variant::Rdg => {
                    let r = oracle::oracle_rdg(&fp, &data, a.step)?;
                    (r.value, r.direction)
                }
                Variant::Dsp => (oracle::oracle_dsp(&fp, &data, cfg.ds_p, a.step)?, None),
            };
            let direction = direction.map(|d| d.iter().copied().collect::<Vec<f64>>());
            let value = if value.is_finite() { json!(value) } else { Value::Null };
            Ok((json_text(&json!({ "variant": Variant::from(a.variant), "value": value, "direction": direction })), a.output.out))
        }
    }
}

/// Parses `args` (program name first), runs the command and reports errors
/// as one line on `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(cli.command) {
        Ok((text, None)) => match out.write_all(text.as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: cannot write output: {e}");
                EXIT_FILE
            }
        },
        Ok((text, Some(path))) => match std::fs::write(&path, text) {
            Ok(()) => EXIT_OK,
            Err(source) => {
                let _ = writeln!(err, "error: {}", FileError::Write { path, source });
                EXIT_FILE
            }
        },
        Err(Failure::File(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FILE
        }
        Err(Failure::Solver(e)) => {
            let _ = writeln!(err, "error: {}", e.to_string().replace('\n', "; "));
            if e.is_validation() {
                EXIT_INVALID
            } else {
                EXIT_SOLVER
            }
        }
    }
}

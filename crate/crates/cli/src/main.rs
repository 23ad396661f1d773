use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use dichotomy::bounded::{residuals, solution_window, bounded_solution, ConstantForcing, Forcing, FnForcing, TableForcing, TrigForcing};
use dichotomy::experiment::{run_experiment, ExperimentConfig, ExperimentResult};
use dichotomy::quadrature::QuadratureSpec;
use dichotomy::sensitivity::condition_bound;
use dichotomy::{ComplexMatrix, Error, GreensFunction};

const EXIT_USAGE: u8 = 2;
const EXIT_DICHOTOMY: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

/// Green's function, spectral projectors, sensitivity and bounded solutions
/// of x' = Ax + f for matrices with an exponential dichotomy.
///
/// Time lists are comma separated; a list that starts with a negative value
/// goes after `--`, e.g. `dichotomy greens a.csv -- -1,1`.
#[derive(Parser, Debug)]
#[command(name = "dichotomy", version, about, long_about = None)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Eigenvalues with |Re λ| at or below this are treated as on the
    /// imaginary axis [default: 1e-8·max(1, ‖A‖)]
    #[arg(long, global = true)]
    axis_tol: Option<f64>,
    /// Truncation length beyond the jumps of the integrands [default: 40/gap]
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Relative tolerance of the adaptive quadrature
    #[arg(long, global = true, default_value_t = 1e-10)]
    rel_tol: f64,
    /// Base seed for random experiments
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of standard output
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Green's function G(t) at the given nonzero times
    #[command(allow_negative_numbers = true)]
    Greens {
        matrix: PathBuf,
        #[arg(required = true, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Spectral projectors P+ and P- (P+ - P- = I)
    Projectors { matrix: PathBuf },
    /// Norm bound, spectral extent and truncation estimate of the differential of A ↦ G(t)
    #[command(allow_negative_numbers = true)]
    Condition {
        matrix: PathBuf,
        #[arg(required = true, value_delimiter = ',')]
        times: Vec<f64>,
    },
    /// Bounded solution x(t) with its differential-equation residual
    #[command(allow_negative_numbers = true)]
    Solve {
        matrix: PathBuf,
        /// Forcing table (CSV: t, re f1, im f1, ...) or a builtin:
        /// `const:v1,v2,...`, `trig[:omega]` (cos, sin, cos, ...),
        /// `harmonic[:omega]` (e^{iωt} in every component)
        #[arg(long)]
        forcing: String,
        #[arg(required = true, value_delimiter = ',')]
        times: Vec<f64>,
        /// Central-difference step of the residual
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Random-ensemble experiment: identities, oracle deviation and norm bound per trial
    #[command(allow_negative_numbers = true)]
    Experiment {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Nonzero times for the oracle comparison; identities are checked at each |t|
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_values_t = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])]
        t_grid: Vec<f64>,
        /// Skip the norm bound (the most expensive column)
        #[arg(long)]
        no_bound: bool,
    },
    /// Residuals of the Green's-function identities
    Verify {
        matrix: PathBuf,
        /// Positive sample times; each is checked at ±t
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        samples: Vec<f64>,
        /// Exit with status 4 when the largest residual exceeds this
        #[arg(long)]
        threshold: Option<f64>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    Threshold { worst: f64, threshold: f64 },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Threshold { .. } => EXIT_NUMERICAL,
            Failure::Lib(e) => match e {
                Error::Dichotomy { .. } => EXIT_DICHOTOMY,
                Error::InvalidInput(_)
                | Error::Parse(_)
                | Error::Io(_)
                | Error::DimensionMismatch(_)
                | Error::SizeGuard(_) => EXIT_USAGE,
                _ => EXIT_NUMERICAL,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
            Failure::Threshold { worst, threshold } => {
                format!("largest residual {worst:.3e} exceeds threshold {threshold:.3e}")
            }
        }
    }
}

type Outcome = Result<String, Failure>;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn quad_spec(g: &Global) -> Result<QuadratureSpec, Failure> {
    let q = QuadratureSpec {
        horizon: g.horizon,
        rel_tol: g.rel_tol,
        ..Default::default()
    };
    q.validate()?;
    Ok(q)
}

fn load(path: &Path, g: &Global) -> Result<GreensFunction, Failure> {
    let a = ComplexMatrix::read_file(path).map_err(|e| match e {
        Error::Io(io) => Failure::Usage(format!("cannot read matrix file {}: {io}", path.display())),
        other => Failure::Lib(other),
    })?;
    Ok(GreensFunction::new(a, g.axis_tol)?)
}

fn check_times(times: &[f64]) -> Result<(), Failure> {
    match times.iter().find(|&&t| t == 0.0 || !t.is_finite()) {
        Some(t) => Err(Failure::Usage(format!(
            "t = {t} is not allowed: G(t) is defined for finite nonzero t only"
        ))),
        None => Ok(()),
    }
}

fn entry_header(prefix: &str, n: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(2 * n * n);
    for i in 1..=n {
        for j in 1..=n {
            h.push(format!("{prefix}{i}_{j}_re"));
            h.push(format!("{prefix}{i}_{j}_im"));
        }
    }
    h
}

fn entry_fields(m: &ComplexMatrix) -> Vec<String> {
    m.as_slice().iter().flat_map(|z| [num(z.re), num(z.im)]).collect()
}

fn csv_line(fields: impl IntoIterator<Item = String>) -> String {
    let mut s = fields.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn cmd_greens(g: &Global, matrix: &Path, times: &[f64]) -> Outcome {
    check_times(times)?;
    let gf = load(matrix, g)?;
    let values = times.iter().map(|&t| gf.at(t)).collect::<Result<Vec<_>, _>>()?;
    Ok(match g.format {
        Format::Csv => {
            let mut out = csv_line(std::iter::once("t".to_string()).chain(entry_header("g", gf.dim())));
            for (t, m) in times.iter().zip(&values) {
                out += &csv_line(std::iter::once(num(*t)).chain(entry_fields(m)));
            }
            out
        }
        Format::Json => pretty(&Value::Array(
            times
                .iter()
                .zip(&values)
                .map(|(t, m)| json!({ "t": t, "matrix": m.to_file_repr() }))
                .collect(),
        )),
    })
}

fn cmd_projectors(g: &Global, matrix: &Path) -> Outcome {
    let gf = load(matrix, g)?;
    let (p_plus, p_minus) = gf.projectors()?;
    let eye = ComplexMatrix::identity(gf.dim());
    let partition = (&(&p_plus - &p_minus) - &eye).spectral_norm();
    Ok(match g.format {
        Format::Csv => {
            let mut out = csv_line(["projector", "row", "col", "re", "im"].map(String::from));
            for (name, p) in [("plus", &p_plus), ("minus", &p_minus)] {
                for i in 0..p.rows() {
                    for j in 0..p.cols() {
                        let z = p[(i, j)];
                        out += &csv_line([name.to_string(), (i + 1).to_string(), (j + 1).to_string(), num(z.re), num(z.im)]);
                    }
                }
            }
            out + &format!("# partition_residual ‖P+ - P- - I‖ = {}\n", num(partition))
        }
        Format::Json => pretty(&json!({
            "p_plus": p_plus.to_file_repr(),
            "p_minus": p_minus.to_file_repr(),
            "partition_residual": partition,
        })),
    })
}

fn cmd_condition(g: &Global, matrix: &Path, times: &[f64]) -> Outcome {
    check_times(times)?;
    let q = quad_spec(g)?;
    let gf = load(matrix, g)?;
    let rows = times.iter().map(|&t| condition_bound(&gf, t, &q)).collect::<Result<Vec<_>, _>>()?;
    Ok(match g.format {
        Format::Csv => {
            let mut out = csv_line(["t", "bound", "spectrum_extent", "truncation_error_est"].map(String::from));
            for r in &rows {
                out += &csv_line([num(r.t), num(r.bound), num(r.spectrum_extent), num(r.truncation_error_est)]);
            }
            out
        }
        Format::Json => pretty(&serde_json::to_value(&rows).expect("serializable")),
    })
}

fn parse_omega(rest: Option<&str>) -> Result<f64, Failure> {
    match rest {
        None => Ok(1.0),
        Some(s) => s
            .parse::<f64>()
            .ok()
            .filter(|w| w.is_finite())
            .ok_or_else(|| Failure::Usage(format!("invalid frequency `{s}`"))),
    }
}

/// A forcing together with the table window it is known on, if any.
fn forcing_from_arg(spec: &str, dim: usize) -> Result<(Box<dyn Forcing>, Option<TableForcing>), Failure> {
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (spec, None),
    };
    match kind {
        "const" => {
            let values = rest
                .unwrap_or("")
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure::Usage(format!("invalid constant forcing `{spec}`: {e}")))?;
            let values = if values.len() == 1 { vec![values[0]; dim] } else { values };
            Ok((Box::new(ConstantForcing::from_real(&values)), None))
        }
        "trig" => Ok((Box::new(TrigForcing { dim, omega: parse_omega(rest)? }), None)),
        "harmonic" => {
            let omega = parse_omega(rest)?;
            let f = FnForcing::new(dim, move |t| vec![Complex64::new(0.0, omega * t).exp(); dim]).with_bound((dim as f64).sqrt());
            Ok((Box::new(f), None))
        }
        _ => {
            let table = TableForcing::read_file(spec)?;
            Ok((Box::new(table.clone()), Some(table)))
        }
    }
}

fn cmd_solve(g: &Global, matrix: &Path, forcing: &str, times: &[f64], step: f64) -> Outcome {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Failure::Usage("times must be finite".into()));
    }
    let q = quad_spec(g)?;
    let gf = load(matrix, g)?;
    let (f, table) = forcing_from_arg(forcing, gf.dim())?;
    let mut solutions = Vec::with_capacity(times.len());
    for &t in times {
        let x = bounded_solution(&gf, f.as_ref(), t, &q)?;
        let res = residuals(&gf, f.as_ref(), &q, &[t], step)?[0];
        solutions.push((t, x, res));
    }
    let extended = table.as_ref().and_then(|tab| {
        let lo = times.iter().map(|&t| solution_window(&gf, t - step, &q).0).fold(f64::INFINITY, f64::min);
        let hi = times.iter().map(|&t| solution_window(&gf, t + step, &q).1).fold(f64::NEG_INFINITY, f64::max);
        tab.extends_beyond(lo, hi).then(|| tab.window())
    });
    Ok(match g.format {
        Format::Csv => {
            let n = gf.dim();
            let mut header = vec!["t".to_string()];
            for i in 1..=n {
                header.push(format!("x{i}_re"));
                header.push(format!("x{i}_im"));
            }
            header.push("residual".into());
            let mut out = String::new();
            if let Some((a, b)) = extended {
                out += &format!("# forcing extended by constant continuation outside [{}, {}]\n", num(a), num(b));
            }
            out += &csv_line(header);
            for (t, x, r) in &solutions {
                let fields = std::iter::once(num(*t))
                    .chain(x.iter().flat_map(|z| [num(z.re), num(z.im)]))
                    .chain(std::iter::once(num(*r)));
                out += &csv_line(fields);
            }
            out
        }
        Format::Json => pretty(&json!({
            "forcing_extended": extended.map(|(a, b)| json!([a, b])),
            "rows": solutions.iter().map(|(t, x, r)| json!({
                "t": t,
                "x": x.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                "residual": r,
            })).collect::<Vec<_>>(),
        })),
    })
}

fn experiment_csv(res: &ExperimentResult) -> String {
    let mut header: Vec<String> = ["trial", "n", "seed", "resamples", "residual_max", "oracle_deviation", "bound_t+1", "bound_t-1"]
        .map(String::from)
        .to_vec();
    header.extend(res.config.t_grid.iter().map(|t| format!("deviation_t{t:+}")));
    let opt = |v: Option<f64>| v.map_or_else(String::new, num);
    let mut out = format!("# rng={} base_seed={}\n", res.rng, res.config.seed);
    out += &csv_line(header);
    for r in &res.rows {
        let mut fields = vec![
            r.trial.to_string(),
            r.n.to_string(),
            r.seed.to_string(),
            r.resamples.to_string(),
            num(r.residual_max()),
            num(r.oracle_deviation),
            opt(r.bound_plus),
            opt(r.bound_minus),
        ];
        fields.extend(r.oracle_by_t.iter().map(|p| num(p.1)));
        out += &csv_line(fields);
    }
    let s = &res.summary;
    out += &format!(
        "# summary trials={} resampled={} median_bound={} median_oracle_deviation={} residual_q50={} residual_q90={} residual_max={}\n",
        s.trials,
        s.resampled,
        opt(s.median_bound),
        num(s.median_oracle_deviation),
        num(s.residual_q50),
        num(s.residual_q90),
        num(s.residual_max)
    );
    out
}

fn cmd_experiment(g: &Global, n: usize, trials: usize, t_grid: &[f64], no_bound: bool) -> Outcome {
    let config = ExperimentConfig {
        t_grid: t_grid.to_vec(),
        axis_tol: g.axis_tol,
        quad: QuadratureSpec {
            horizon: g.horizon,
            rel_tol: g.rel_tol,
            ..Default::default()
        },
        with_bound: !no_bound,
        ..ExperimentConfig::new(n, trials, g.seed)
    };
    let res = run_experiment(&config)?;
    Ok(match g.format {
        Format::Csv => experiment_csv(&res),
        Format::Json => pretty(&serde_json::to_value(&res).expect("serializable")),
    })
}

fn cmd_verify(g: &Global, matrix: &Path, samples: &[f64], threshold: Option<f64>) -> Result<(String, Option<Failure>), Failure> {
    let gf = load(matrix, g)?;
    let report = gf.verify(samples)?;
    let worst = report.max();
    let out = match g.format {
        Format::Csv => {
            let mut s = format!("Green's function identities, samples ±{samples:?}\n");
            for (name, v) in report.fields() {
                s += &format!("{name:>22}: {}\n", num(v));
            }
            s += &format!("{:>22}: {}\n", "max", num(worst));
            s
        }
        Format::Json => {
            let mut v = serde_json::to_value(report).expect("serializable");
            v["max"] = json!(worst);
            v["samples"] = json!(samples);
            pretty(&v)
        }
    };
    let failure = threshold.filter(|&th| worst > th).map(|threshold| Failure::Threshold { worst, threshold });
    Ok((out, failure))
}

fn emit(g: &Global, text: &str) -> Result<(), Failure> {
    match &g.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("cannot write output: {e}"))),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let g = &cli.global;
    let text = match &cli.command {
        Command::Greens { matrix, times } => cmd_greens(g, matrix, times)?,
        Command::Projectors { matrix } => cmd_projectors(g, matrix)?,
        Command::Condition { matrix, times } => cmd_condition(g, matrix, times)?,
        Command::Solve { matrix, forcing, times, step } => cmd_solve(g, matrix, forcing, times, *step)?,
        Command::Experiment { n, trials, t_grid, no_bound } => cmd_experiment(g, *n, *trials, t_grid, *no_bound)?,
        Command::Verify { matrix, samples, threshold } => {
            let (text, failure) = cmd_verify(g, matrix, samples, *threshold)?;
            emit(g, &text)?;
            return failure.map_or(Ok(()), Err);
        }
    };
    emit(g, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

//! Command-line front end: kernel inspection, differentiation, state
//! reconstruction, exact verification, simulation studies, expanding-horizon
//! filtering, and parameter identification.
//!
//! Exit codes: 0 success, 1 validation problem, 2 numerical failure,
//! 3 I/O or data-format problem.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use gramdiff::gramian::{weighted_estimator_kernels, WeightSpec};
use gramdiff::horizon::{run_info_filter, write_trajectory_csv};
use gramdiff::identify::{identify_with_threshold, RegressorSeries, DEFAULT_PE_THRESHOLD};
use gramdiff::kernel::{float_conditioning_note, KernelPoly, KernelSpec};
use gramdiff::runtime::{differentiate_series, reconstruct_state};
use gramdiff::signal::{
    add_noise, error_metrics, polynomial_series, sine_series, std_dev, NoiseKind, NoiseSpec,
};
use gramdiff::verify::run_exact_suite;
use gramdiff::{Error, Result, SignalSeries};

#[derive(Parser)]
#[command(
    name = "gramdiff",
    version,
    about = "Finite-window derivative estimation and deadbeat state reconstruction \
             for polynomial signal models"
)]
struct Cli {
    /// Degree cap for floating pipelines; exact paths are uncapped.
    #[arg(
        long = "max-N",
        env = "GRAMDIFF_MAX_N",
        default_value_t = gramdiff::kernel::FLOAT_DEGREE_CAP,
        global = true,
        value_name = "N"
    )]
    max_degree: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Algebraic,
    Gramian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SignalArg {
    Poly,
    Sine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    None,
    Uniform,
    Gaussian,
}

#[derive(Subcommand)]
enum Command {
    /// Print a convolution kernel, exactly (JSON) or sampled (CSV).
    #[command(group(ArgGroup::new("mode").required(true).args(["samples", "exact"])))]
    Kernel {
        /// Polynomial model degree N.
        #[arg(short = 'N', value_name = "DEGREE")]
        degree: usize,
        /// Derivative order j (0 <= j <= N).
        #[arg(short = 'j', value_name = "ORDER")]
        order: usize,
        /// Window length T in seconds.
        #[arg(short = 'T', value_name = "SECONDS")]
        window: f64,
        /// Kernel construction to use; the two families are identical.
        #[arg(long, value_enum, default_value_t = FamilyArg::Algebraic)]
        family: FamilyArg,
        /// Extra integration weight exponent m; 0 is the plain kernel.
        #[arg(short = 'm', long = "weight", default_value_t = 0, value_name = "M")]
        weight: u32,
        /// Emit K evenly spaced (sigma, value) samples over [0, T].
        #[arg(long, value_name = "K")]
        samples: Option<usize>,
        /// Emit the exact rational coefficients as JSON.
        #[arg(long)]
        exact: bool,
        /// Output file; stdout when omitted.
        #[arg(short = 'o', long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Differentiate a sampled signal: reads `t,y`, writes `t,yhat_j`.
    Diff {
        /// Input CSV with header `t,y` on a uniform grid.
        #[arg(short = 'i', long, value_name = "FILE")]
        input: PathBuf,
        /// Polynomial model degree N.
        #[arg(short = 'N', value_name = "DEGREE")]
        degree: usize,
        /// Derivative order j (0 <= j <= N).
        #[arg(short = 'j', value_name = "ORDER")]
        order: usize,
        /// Window length T in seconds.
        #[arg(short = 'T', value_name = "SECONDS")]
        window: f64,
        /// Output file; stdout when omitted.
        #[arg(short = 'o', long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Reconstruct the full derivative state: writes `t,x0..xN`.
    #[command(group(ArgGroup::new("when").required(true).args(["at", "all"])))]
    Reconstruct {
        /// Input CSV with header `t,y` on a uniform grid.
        #[arg(short = 'i', long, value_name = "FILE")]
        input: PathBuf,
        /// Polynomial model degree N.
        #[arg(short = 'N', value_name = "DEGREE")]
        degree: usize,
        /// Window length T in seconds.
        #[arg(short = 'T', value_name = "SECONDS")]
        window: f64,
        /// Reconstruct at one time (snapped to the sample grid).
        #[arg(long, value_name = "SECONDS")]
        at: Option<f64>,
        /// Reconstruct at every grid point with a full window of history.
        #[arg(long)]
        all: bool,
        /// Output file; stdout when omitted.
        #[arg(short = 'o', long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Run the exact identity suites and print a PASS/FAIL table.
    Verify,
    /// Generate a signal, add noise, estimate, and report accuracy JSON.
    Simulate {
        /// Test signal shape.
        #[arg(long, value_enum, default_value_t = SignalArg::Poly)]
        signal: SignalArg,
        /// Polynomial coefficients a0,a1,... in the convention
        /// y(t) = sum a_i t^i / i! (poly signal only).
        #[arg(long, value_delimiter = ',', value_name = "A0,A1,...")]
        coeffs: Vec<f64>,
        /// Sine amplitude (sine signal only).
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// Sine angular frequency in rad/s (sine signal only).
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Sine phase in rad (sine signal only).
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
        /// Additive measurement noise model.
        #[arg(long, value_enum, default_value_t = NoiseArg::None)]
        noise: NoiseArg,
        /// Noise amplitude (uniform) or standard deviation (gaussian).
        #[arg(long, default_value_t = 0.0, value_name = "LEVEL")]
        noise_level: f64,
        /// Seed for the ChaCha12 noise stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Polynomial model degree N of the estimator.
        #[arg(short = 'N', value_name = "DEGREE")]
        degree: usize,
        /// Derivative order j to estimate.
        #[arg(short = 'j', value_name = "ORDER")]
        order: usize,
        /// Window length T in seconds.
        #[arg(short = 'T', value_name = "SECONDS")]
        window: f64,
        /// Sample step in seconds.
        #[arg(long, default_value_t = 0.01, value_name = "SECONDS")]
        dt: f64,
        /// Start time of the generated grid.
        #[arg(long, default_value_t = 0.0, value_name = "SECONDS")]
        t0: f64,
        /// Number of generated samples.
        #[arg(long, default_value_t = 1000, value_name = "COUNT")]
        samples: usize,
        /// Output file; stdout when omitted.
        #[arg(short = 'o', long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Expanding-horizon information filter: writes `t,x0..xN,s_logdet`.
    Infofilter {
        /// Input CSV with header `t,y` on a uniform grid.
        #[arg(short = 'i', long, value_name = "FILE")]
        input: PathBuf,
        /// Polynomial model degree N.
        #[arg(short = 'N', value_name = "DEGREE")]
        degree: usize,
        /// Warm-start time: the filter begins from the closed-form Gramian
        /// at this time (snapped to the grid).
        #[arg(long = "warm-up", value_name = "SECONDS")]
        warm_up: f64,
        /// Output file; stdout when omitted.
        #[arg(short = 'o', long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Receding-horizon parameter identification from `t,w1..wp,y` data.
    Identify {
        /// Input CSV with header `t,w1..wp,y` on a uniform grid.
        #[arg(short = 'i', long, value_name = "FILE")]
        input: PathBuf,
        /// Window length T in seconds.
        #[arg(short = 'T', value_name = "SECONDS")]
        window: f64,
        /// Identification time (window end, snapped to the grid).
        #[arg(long, value_name = "SECONDS")]
        at: f64,
        /// Relative persistent-excitation threshold.
        #[arg(long, default_value_t = DEFAULT_PE_THRESHOLD, value_name = "RATIO")]
        pe_threshold: f64,
        /// Output file; stdout when omitted.
        #[arg(short = 'o', long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(serde::Serialize)]
struct SimulateReport {
    rmse: f64,
    max_abs: f64,
    mean: f64,
    noise_gain: Option<f64>,
    effective_window: f64,
}

#[derive(serde::Serialize)]
struct IdentifyReport {
    phi: Vec<f64>,
    pe_metric: f64,
    window: [f64; 2],
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidSpec(_) | Error::OutOfRange(_) | Error::Config(_) => 1,
        Error::Numerical(_) | Error::Excitation(_) => 2,
        Error::Io(_) | Error::Parse(_) => 3,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cap = cli.max_degree;
    match cli.command {
        Command::Kernel {
            degree,
            order,
            window,
            family,
            weight,
            samples,
            exact,
            output,
        } => cmd_kernel(
            degree, order, window, family, weight, samples, exact, output, cap,
        ),
        Command::Diff {
            input,
            degree,
            order,
            window,
            output,
        } => cmd_diff(&input, degree, order, window, output, cap),
        Command::Reconstruct {
            input,
            degree,
            window,
            at,
            all,
            output,
        } => cmd_reconstruct(&input, degree, window, at, all, output, cap),
        Command::Verify => cmd_verify(cap),
        Command::Simulate {
            signal,
            coeffs,
            amplitude,
            omega,
            phase,
            noise,
            noise_level,
            seed,
            degree,
            order,
            window,
            dt,
            t0,
            samples,
            output,
        } => cmd_simulate(SimArgs {
            signal,
            coeffs,
            amplitude,
            omega,
            phase,
            noise,
            noise_level,
            seed,
            degree,
            order,
            window,
            dt,
            t0,
            samples,
            output,
            cap,
        }),
        Command::Infofilter {
            input,
            degree,
            warm_up,
            output,
        } => cmd_infofilter(&input, degree, warm_up, output, cap),
        Command::Identify {
            input,
            window,
            at,
            pe_threshold,
            output,
        } => cmd_identify(&input, window, at, pe_threshold, output),
    }
}

/// Validates the float-path degree cap and surfaces the conditioning note.
fn enforce_float_cap(degree: usize, cap: usize) -> Result<()> {
    if degree > cap {
        return Err(Error::InvalidSpec(format!(
            "degree {degree} exceeds the floating-pipeline cap {cap}; raise it with \
             --max-N or the GRAMDIFF_MAX_N environment variable"
        )));
    }
    if let Some(note) = float_conditioning_note(degree) {
        eprintln!("warning: {note}");
    }
    Ok(())
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_kernel(
    degree: usize,
    order: usize,
    window: f64,
    family: FamilyArg,
    weight: u32,
    samples: Option<usize>,
    exact: bool,
    output: Option<PathBuf>,
    cap: usize,
) -> Result<ExitCode> {
    let spec = KernelSpec::new(degree, order, window)?;
    let kernel = if weight > 0 {
        let wk = weighted_estimator_kernels(degree, window, WeightSpec::new(weight))?;
        if let Some(note) = wk.conditioning {
            eprintln!("warning: {note}");
        }
        wk.kernels.into_iter().nth(order).expect("order <= degree")
    } else {
        match family {
            FamilyArg::Algebraic => KernelPoly::algebraic(&spec),
            FamilyArg::Gramian => KernelPoly::gramian(&spec),
        }
    };
    let mut out = sink(output.as_deref())?;
    if exact {
        writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&kernel.dump()).expect("serializable")
        )?;
        return Ok(ExitCode::SUCCESS);
    }
    let k = samples.expect("clap enforces --samples or --exact");
    if k == 0 {
        return Err(Error::Config("--samples must be at least 1".into()));
    }
    enforce_float_cap(degree, cap)?;
    writeln!(out, "sigma,value")?;
    for i in 0..k {
        let sigma = if k == 1 {
            0.0
        } else {
            window * i as f64 / (k - 1) as f64
        };
        writeln!(out, "{sigma},{}", kernel.eval(sigma)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_diff(
    input: &Path,
    degree: usize,
    order: usize,
    window: f64,
    output: Option<PathBuf>,
    cap: usize,
) -> Result<ExitCode> {
    enforce_float_cap(degree, cap)?;
    let spec = KernelSpec::new(degree, order, window)?;
    let series = SignalSeries::read_csv_path(input)?;
    let estimate = differentiate_series(&series, &spec)?;
    let effective = estimate.t0() - series.t0();
    if (effective - window).abs() > 1e-9 * window {
        eprintln!(
            "effective T snapped to {effective} ({} steps of {})",
            (effective / series.dt()).round(),
            series.dt()
        );
    }
    estimate.write_csv(sink(output.as_deref())?, &format!("yhat_{order}"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_reconstruct(
    input: &Path,
    degree: usize,
    window: f64,
    at: Option<f64>,
    all: bool,
    output: Option<PathBuf>,
    cap: usize,
) -> Result<ExitCode> {
    enforce_float_cap(degree, cap)?;
    let series = SignalSeries::read_csv_path(input)?;
    let steps = (window / series.dt()).round();
    let effective = steps * series.dt();
    if (effective - window).abs() > 1e-9 * window {
        eprintln!(
            "effective T snapped to {effective} ({steps} steps of {})",
            series.dt()
        );
    }
    let mut out = sink(output.as_deref())?;
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..=degree).map(|k| format!("x{k}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    let mut write_state = |sv: &gramdiff::runtime::StateVec| -> Result<()> {
        let mut row = vec![format!("{}", sv.t)];
        row.extend(sv.x.iter().map(|v| format!("{v}")));
        writeln!(out, "{}", row.join(","))?;
        Ok(())
    };
    if all {
        // One tap set per order, slid over the series; identical arithmetic
        // to the single-time reconstruction.
        let columns: Vec<SignalSeries> = (0..=degree)
            .map(|order| differentiate_series(&series, &KernelSpec::new(degree, order, window)?))
            .collect::<Result<_>>()?;
        let rows = columns[0].len();
        for k in 0..rows {
            let sv = gramdiff::runtime::StateVec {
                t: columns[0].time_at(k),
                x: columns.iter().map(|c| c.values()[k]).collect(),
            };
            write_state(&sv)?;
        }
    } else {
        let t = at.expect("clap enforces --at or --all");
        let sv = reconstruct_state(&series, degree, window, t)?;
        if (sv.t - t).abs() > 1e-9 * series.dt() {
            eprintln!("snapped --at {t} to grid time {}", sv.t);
        }
        write_state(&sv)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(max_degree: usize) -> Result<ExitCode> {
    let outcomes = run_exact_suite(max_degree);
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    let mut all_passed = true;
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        all_passed &= o.passed;
        if o.passed {
            println!("{:<width$}  {verdict}", o.name);
        } else {
            println!("{:<width$}  {verdict}  {}", o.name, o.detail);
        }
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

struct SimArgs {
    signal: SignalArg,
    coeffs: Vec<f64>,
    amplitude: f64,
    omega: f64,
    phase: f64,
    noise: NoiseArg,
    noise_level: f64,
    seed: u64,
    degree: usize,
    order: usize,
    window: f64,
    dt: f64,
    t0: f64,
    samples: usize,
    output: Option<PathBuf>,
    cap: usize,
}

fn cmd_simulate(args: SimArgs) -> Result<ExitCode> {
    enforce_float_cap(args.degree, args.cap)?;
    let spec = KernelSpec::new(args.degree, args.order, args.window)?;
    let (clean, truth) = match args.signal {
        SignalArg::Poly => {
            if args.coeffs.is_empty() {
                return Err(Error::Config(
                    "--signal poly needs --coeffs a0,a1,...".into(),
                ));
            }
            let clean = polynomial_series(&args.coeffs, args.t0, args.dt, args.samples)?;
            // d^j/dt^j of sum a_i t^i/i! drops the first j coefficients.
            let truth = if args.order < args.coeffs.len() {
                polynomial_series(&args.coeffs[args.order..], args.t0, args.dt, args.samples)?
            } else {
                SignalSeries::new(args.t0, args.dt, vec![0.0; args.samples])?
            };
            (clean, truth)
        }
        SignalArg::Sine => {
            let clean = sine_series(
                args.amplitude,
                args.omega,
                args.phase,
                args.t0,
                args.dt,
                args.samples,
            )?;
            let truth = sine_series(
                args.amplitude * args.omega.powi(args.order as i32),
                args.omega,
                args.phase + args.order as f64 * std::f64::consts::FRAC_PI_2,
                args.t0,
                args.dt,
                args.samples,
            )?;
            (clean, truth)
        }
    };
    let noisy = match args.noise {
        NoiseArg::None => clean.clone(),
        NoiseArg::Uniform => add_noise(
            &clean,
            &NoiseSpec {
                kind: NoiseKind::Uniform,
                magnitude: args.noise_level,
                seed: args.seed,
            },
        ),
        NoiseArg::Gaussian => add_noise(
            &clean,
            &NoiseSpec {
                kind: NoiseKind::Gaussian,
                magnitude: args.noise_level,
                seed: args.seed,
            },
        ),
    };
    let estimate = differentiate_series(&noisy, &spec)?;
    let metrics = error_metrics(&estimate, &truth)?;
    let effective_window = estimate.t0() - noisy.t0();
    if (effective_window - args.window).abs() > 1e-9 * args.window {
        eprintln!("effective T snapped to {effective_window}");
    }
    let noise_gain = if args.noise != NoiseArg::None && args.noise_level > 0.0 {
        let injected: Vec<f64> = noisy
            .values()
            .iter()
            .zip(clean.values())
            .map(|(n, c)| n - c)
            .collect();
        let err = estimate.map_with(&truth, |e, t| e - t)?;
        Some(std_dev(err.values()) / std_dev(&injected))
    } else {
        None
    };
    let report = SimulateReport {
        rmse: metrics.rmse,
        max_abs: metrics.max_abs,
        mean: metrics.mean,
        noise_gain,
        effective_window,
    };
    let mut out = sink(args.output.as_deref())?;
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&report).expect("serializable")
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_infofilter(
    input: &Path,
    degree: usize,
    warm_up: f64,
    output: Option<PathBuf>,
    cap: usize,
) -> Result<ExitCode> {
    enforce_float_cap(degree, cap)?;
    let series = SignalSeries::read_csv_path(input)?;
    let states = run_info_filter(&series, degree, warm_up)?;
    let started = states
        .first()
        .expect("trajectory includes the warm start")
        .t;
    if (started - warm_up).abs() > 1e-9 * series.dt() {
        eprintln!("warm-up snapped to grid time {started}");
    }
    write_trajectory_csv(&states, sink(output.as_deref())?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_identify(
    input: &Path,
    window: f64,
    at: f64,
    pe_threshold: f64,
    output: Option<PathBuf>,
) -> Result<ExitCode> {
    let series = RegressorSeries::read_csv_path(input)?;
    let id = identify_with_threshold(&series, window, at, pe_threshold)?;
    let report = IdentifyReport {
        phi: id.phi,
        pe_metric: id.pe,
        window: [id.window.0, id.window.1],
    };
    let mut out = sink(output.as_deref())?;
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&report).expect("serializable")
    )?;
    Ok(ExitCode::SUCCESS)
}

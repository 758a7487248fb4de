//! `hankel`: signal generation, exponential fitting, mode-1 singular value
//! studies and the Hankel product benchmark.
//!
//! Exit codes: 0 success, 2 bad input, 3 numerical degeneracy.

mod io;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hankel_core::bench::{run_bench, BenchConfig, BenchRecord};
use hankel_core::expfit::{
    estimate_poles_1d, estimate_poles_2d, mode1_singular_values, square_shape, synth_1d, synth_2d, Noise,
};
use hankel_core::{Complex64, ComplexMatrix, ExpModel1D, ExpModel2D, PoleEstimate};
use serde::Serialize;

use crate::io::{complex, pair, Model, Pair, Signal, Truth};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl From<hankel_core::Error> for CliError {
    fn from(e: hankel_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "hankel", version, about = "Fast Hankel tensor products and exponential data fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time naive (dense) against fast Hankel tensor-vector products.
    Bench {
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Comma-separated dimensions to time.
        #[arg(long, value_delimiter = ',', default_values_t = [16, 32, 64, 128])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Products per repetition.
        #[arg(long, default_value_t = 100)]
        products: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the dense algorithm.
        #[arg(long)]
        fast_only: bool,
        /// Pad the FFT length to a power of two.
        #[arg(long)]
        pad_pow2: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic signal as CSV (two-peak 2D example by default).
    Gen {
        /// `N` for a 1D signal or `N1,N2` for a 2D one.
        #[arg(long, value_delimiter = ',', default_values_t = [16, 13])]
        dims: Vec<usize>,
        /// JSON model: `{"terms": [{"c": [re, im], "z": [re, im]}]}` or with `z1`/`z2`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the true poles to this JSON file.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the poles of a 1D signal.
    Fit1d {
        input: PathBuf,
        /// Number of exponential components K.
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Hankel tensor sizes (default: as square as possible).
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the pole pairs of a 2D signal; with `--noise`, repeat on noisy copies.
    Fit2d {
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Full mode sizes `I_p·J_p`.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Block sizes `I_p`.
        #[arg(long, value_delimiter = ',')]
        block_dims: Option<Vec<usize>>,
        /// Noise levels added to the input, one batch of `--reps` trials each.
        #[arg(long, value_delimiter = ',')]
        noise: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mode-1 singular values of the BHHB tensor of a 2D signal under noise.
    Svals {
        /// Signal CSV (two-peak example when omitted).
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        block_dims: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
        noise: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per noise level.
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Number of singular values to report (all when omitted).
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Input(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn noise(sigma: f64, seed: u64) -> Result<Option<Noise>, CliError> {
    Ok(if sigma == 0.0 { None } else { Some(Noise::new(sigma, seed)?) })
}

fn positive(name: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        return Err(CliError::Input(format!("--{name} must be at least 1")));
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    algorithm: &'static str,
    order: usize,
    dim: usize,
    seconds_per_product: Option<f64>,
    repetitions: usize,
    products: usize,
    skipped: bool,
    agreement: Option<f64>,
}

impl From<&BenchRecord> for BenchRow {
    fn from(r: &BenchRecord) -> Self {
        Self {
            algorithm: r.algorithm.name(),
            order: r.order,
            dim: r.dim,
            seconds_per_product: (!r.skipped).then_some(r.seconds_per_product),
            repetitions: r.repetitions,
            products: r.products,
            skipped: r.skipped,
            agreement: r.agreement,
        }
    }
}

fn write_rows<T: Serialize>(out: &mut dyn Write, rows: &[T], format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => write_json(out, &rows),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Input(e.to_string()))?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct EstimateJson {
    poles: Vec<Pair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    second_poles: Option<Vec<Pair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    relative_errors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    second_relative_errors: Option<Vec<f64>>,
    hooi_iterations: usize,
    hooi_converged: bool,
    warnings: Vec<String>,
}

impl From<&PoleEstimate> for EstimateJson {
    fn from(e: &PoleEstimate) -> Self {
        Self {
            poles: e.poles.iter().copied().map(pair).collect(),
            second_poles: e.second_poles.as_ref().map(|s| s.iter().copied().map(pair).collect()),
            relative_errors: e.relative_errors.clone(),
            second_relative_errors: e.second_relative_errors.clone(),
            hooi_iterations: e.hooi_iterations,
            hooi_converged: e.hooi_converged,
            warnings: e.warnings.clone(),
        }
    }
}

#[derive(Serialize)]
struct PoleRow {
    noise: f64,
    trial: usize,
    seed: u64,
    k: usize,
    re: f64,
    im: f64,
    second_re: Option<f64>,
    second_im: Option<f64>,
    relative_error: Option<f64>,
    second_relative_error: Option<f64>,
}

fn pole_rows(e: &PoleEstimate, noise: f64, trial: usize, seed: u64) -> Vec<PoleRow> {
    (0..e.poles.len())
        .map(|k| PoleRow {
            noise,
            trial,
            seed,
            k,
            re: e.poles[k].re,
            im: e.poles[k].im,
            second_re: e.second_poles.as_ref().map(|s| s[k].re),
            second_im: e.second_poles.as_ref().map(|s| s[k].im),
            relative_error: e.relative_errors.as_ref().map(|r| r[k]),
            second_relative_error: e.second_relative_errors.as_ref().map(|r| r[k]),
        })
        .collect()
}

fn apply_truth(est: &mut PoleEstimate, truth: Option<&Truth>) -> Result<(), CliError> {
    let Some(t) = truth else { return Ok(()) };
    let z: Vec<Complex64> = t.poles.iter().copied().map(complex).collect();
    let z2: Option<Vec<Complex64>> = t.second_poles.as_ref().map(|s| s.iter().copied().map(complex).collect());
    est.compare(&z, z2.as_deref()).map_err(|e| CliError::Input(format!("truth file does not match the fit: {e}")))
}

/// Block and outer sizes for a 2D signal from `--dims` / `--block-dims`.
fn layout_2d(
    n1: usize,
    n2: usize,
    order: usize,
    dims: Option<&[usize]>,
    block: Option<&[usize]>,
) -> Result<(Vec<usize>, Vec<usize>), CliError> {
    positive("order", order)?;
    let block = match block {
        Some(b) => b.to_vec(),
        None => square_shape(n1, order)?,
    };
    let outer = match dims {
        Some(d) => {
            if d.len() != block.len() {
                return Err(CliError::Input("--dims and --block-dims must have the same length".into()));
            }
            d.iter()
                .zip(&block)
                .map(|(&d, &b)| {
                    if b == 0 || d % b != 0 {
                        Err(CliError::Input(format!("mode size {d} is not a multiple of block size {b}")))
                    } else {
                        Ok(d / b)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        None => square_shape(n2, block.len())?,
    };
    let m = block.len();
    if block.iter().sum::<usize>() + 1 != n1 + m || outer.iter().sum::<usize>() + 1 != n2 + m {
        return Err(CliError::Input(format!(
            "block sizes {block:?} and outer sizes {outer:?} do not fit a {n1} × {n2} signal"
        )));
    }
    Ok((block, outer))
}

fn read_2d(path: &Path) -> Result<ComplexMatrix, CliError> {
    match io::read_signal(path)? {
        Signal::TwoD(x) => Ok(x),
        Signal::OneD(_) => Err(CliError::Input(format!("{}: expected a 2D signal (n1,n2,re,im)", path.display()))),
    }
}

fn add_noise(x: &ComplexMatrix, sigma: f64, seed: u64) -> Result<ComplexMatrix, CliError> {
    let Some(n) = noise(sigma, seed)? else { return Ok(x.clone()) };
    let cols = x.cols();
    let mut rowmajor: Vec<Complex64> = (0..x.rows() * cols).map(|k| x.get(k / cols, k % cols)).collect();
    n.apply(&mut rowmajor);
    Ok(ComplexMatrix::from_fn(x.rows(), cols, |i, j| rowmajor[i * cols + j]))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bench { order, dims, reps, products, seed, fast_only, pad_pow2, format, out } => {
            positive("reps", reps)?;
            positive("products", products)?;
            let cfg = BenchConfig { sizes: dims, order, reps, products, seed, include_naive: !fast_only, pad_pow2 };
            let records = run_bench(&cfg)?;
            let rows: Vec<BenchRow> = records.iter().map(BenchRow::from).collect();
            let mut w = output(out.as_deref())?;
            write_rows(&mut *w, &rows, format)?;
            w.flush()?;
        }
        Command::Gen { dims, model, noise: sigma, seed, truth, out } => {
            let model = match model {
                Some(p) => io::read_model(&p)?,
                None if dims.len() == 1 => {
                    let two = ExpModel2D::two_peak();
                    Model::OneD(ExpModel1D::from_poles(&two.amplitudes(), &two.first_poles())?)
                }
                None => Model::TwoD(ExpModel2D::two_peak()),
            };
            let mut w = output(out.as_deref())?;
            let truth_value = match (&model, dims.as_slice()) {
                (Model::OneD(m), &[n]) => {
                    positive("dims", n)?;
                    io::write_signal_1d(&mut *w, &synth_1d(m, n, noise(sigma, seed)?))?;
                    Truth {
                        poles: m.poles().into_iter().map(pair).collect(),
                        second_poles: None,
                        amplitudes: Some(m.amplitudes().into_iter().map(pair).collect()),
                    }
                }
                (Model::TwoD(m), &[n1, n2]) => {
                    positive("dims", n1.min(n2))?;
                    io::write_signal_2d(&mut *w, &synth_2d(m, n1, n2, noise(sigma, seed)?))?;
                    Truth {
                        poles: m.first_poles().into_iter().map(pair).collect(),
                        second_poles: Some(m.second_poles().into_iter().map(pair).collect()),
                        amplitudes: Some(m.amplitudes().into_iter().map(pair).collect()),
                    }
                }
                _ => return Err(CliError::Input("--dims must have one entry for 1D models and two for 2D models".into())),
            };
            w.flush()?;
            if let Some(path) = truth {
                let mut t = output(Some(&path))?;
                write_json(&mut *t, &truth_value)?;
                t.flush()?;
            }
        }
        Command::Fit1d { input, rank, order, dims, truth, format, out } => {
            let x = match io::read_signal(&input)? {
                Signal::OneD(x) => x,
                Signal::TwoD(_) => {
                    return Err(CliError::Input(format!("{}: expected a 1D signal (n,re,im)", input.display())))
                }
            };
            let truth = truth.as_deref().map(io::read_truth).transpose()?;
            positive("order", order)?;
            let shape = match dims {
                Some(d) => d,
                None => square_shape(x.len(), order)?,
            };
            let mut est = estimate_poles_1d(&x, &shape, rank, None)?;
            apply_truth(&mut est, truth.as_ref())?;
            let mut w = output(out.as_deref())?;
            match format {
                Format::Json => write_json(&mut *w, &EstimateJson::from(&est))?,
                Format::Csv => write_rows(&mut *w, &pole_rows(&est, 0.0, 0, 0), Format::Csv)?,
            }
            w.flush()?;
        }
        Command::Fit2d { input, rank, order, dims, block_dims, noise: levels, seed, reps, truth, format, out } => {
            let x = read_2d(&input)?;
            let truth = truth.as_deref().map(io::read_truth).transpose()?;
            let (block, outer) = layout_2d(x.rows(), x.cols(), order, dims.as_deref(), block_dims.as_deref())?;
            let mut w = output(out.as_deref())?;
            match levels {
                None => {
                    let mut est = estimate_poles_2d(&x, &block, &outer, rank, None)?;
                    apply_truth(&mut est, truth.as_ref())?;
                    match format {
                        Format::Json => write_json(&mut *w, &EstimateJson::from(&est))?,
                        Format::Csv => write_rows(&mut *w, &pole_rows(&est, 0.0, 0, 0), Format::Csv)?,
                    }
                }
                Some(levels) => {
                    positive("reps", reps)?;
                    let mut rows = Vec::new();
                    let mut json = Vec::new();
                    for &sigma in &levels {
                        for trial in 0..reps {
                            let s = seed.wrapping_add(trial as u64);
                            let noisy = add_noise(&x, sigma, s)?;
                            let mut est = estimate_poles_2d(&noisy, &block, &outer, rank, None)?;
                            apply_truth(&mut est, truth.as_ref())?;
                            rows.extend(pole_rows(&est, sigma, trial, s));
                            json.push(serde_json::json!({
                                "noise": sigma,
                                "trial": trial,
                                "seed": s,
                                "estimate": EstimateJson::from(&est),
                            }));
                        }
                    }
                    match format {
                        Format::Json => write_json(&mut *w, &json)?,
                        Format::Csv => write_rows(&mut *w, &rows, Format::Csv)?,
                    }
                }
            }
            w.flush()?;
        }
        Command::Svals { input, order, dims, block_dims, noise: levels, seed, reps, rank, format, out } => {
            positive("reps", reps)?;
            let base = match input {
                Some(p) => read_2d(&p)?,
                None => {
                    let (n1, n2) = match (dims.as_deref(), block_dims.as_deref()) {
                        (Some(d), Some(b)) if d.len() == b.len() && b.iter().all(|&v| v > 0) => {
                            let m = b.len();
                            (b.iter().sum::<usize>() + 1 - m, d.iter().zip(b).map(|(d, b)| d / b).sum::<usize>() + 1 - m)
                        }
                        (None, None) => (7, 4),
                        _ => return Err(CliError::Input("give both --dims and --block-dims, or neither".into())),
                    };
                    synth_2d(&ExpModel2D::two_peak(), n1, n2, None)
                }
            };
            let (block, outer) = layout_2d(base.rows(), base.cols(), order, dims.as_deref(), block_dims.as_deref())?;
            let mut table: Vec<(f64, usize, u64, Vec<f64>)> = Vec::new();
            for &sigma in &levels {
                for trial in 0..reps {
                    let s = seed.wrapping_add(trial as u64);
                    let x = add_noise(&base, sigma, s)?;
                    let mut sv = mode1_singular_values(&x, &block, &outer)?;
                    if let Some(r) = rank {
                        sv.truncate(r);
                    }
                    table.push((sigma, trial, s, sv));
                }
            }
            let mut w = output(out.as_deref())?;
            match format {
                Format::Json => {
                    let rows: Vec<_> = table
                        .iter()
                        .map(|(n, t, s, v)| serde_json::json!({"noise": n, "trial": t, "seed": s, "singular_values": v}))
                        .collect();
                    write_json(&mut *w, &rows)?;
                }
                Format::Csv => {
                    let width = table.iter().map(|r| r.3.len()).max().unwrap_or(0);
                    let mut cw = csv::Writer::from_writer(&mut *w);
                    let mut header = vec!["noise".to_string(), "trial".into(), "seed".into()];
                    header.extend((1..=width).map(|k| format!("sigma_{k}")));
                    cw.write_record(&header).map_err(|e| CliError::Input(e.to_string()))?;
                    for (n, t, s, v) in &table {
                        let mut rec = vec![n.to_string(), t.to_string(), s.to_string()];
                        rec.extend(v.iter().map(f64::to_string));
                        cw.write_record(&rec).map_err(|e| CliError::Input(e.to_string()))?;
                    }
                    cw.flush()?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(3)
        }
    }
}

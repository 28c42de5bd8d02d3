//! Batch front end: ingest data, run the identification pipeline, persist
//! the model, render modes, and report fit quality.
//!
//! Exit codes: 0 success, 1 runtime failure (single-line machine-parsable
//! message on stderr), 2 usage error.

pub mod formats;
pub mod ingest;
pub mod model_io;
pub mod render;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::baselines::{truncated_dmd_factored, upc_identify};
use crate::embedding::{hankel_embed, OutputSequence};
use crate::error::{Error, Result};
use crate::sysid::identify_embedded;

use ingest::{ingest, InputFormat};
use model_io::{ComplexEntry, ModelFile};

#[derive(Parser)]
#[command(
    name = "siddmd",
    version,
    about = "Low-order state-space models and spatiotemporal modes from output-only time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identify a low-order model and its modes from recorded data
    Identify(IdentifyArgs),
    /// Generate the synthetic diffusion-surrogate dataset
    Surrogate(SurrogateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Frames,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    None,
    Upc,
    Tdmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportArg {
    Text,
    Json,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Input CSV file or directory of PGM frames
    #[arg(long)]
    input: PathBuf,

    #[arg(long, value_enum)]
    format: FormatArg,

    /// Model order n
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    order: u64,

    /// Delay order s
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    delay: u64,

    /// Sampling interval in seconds
    #[arg(long, default_value_t = 1.0)]
    dt: f64,

    /// Output directory for model.json, modes/, trends.csv and the report
    #[arg(long)]
    out: PathBuf,

    /// Baseline method to compare objectives against
    #[arg(long, value_enum, default_value_t = BaselineArg::None)]
    baseline: BaselineArg,

    #[arg(long, value_enum, default_value_t = ReportArg::Text)]
    report: ReportArg,

    /// Seed for randomized diagnostics; recorded in the report
    #[arg(long)]
    seed: Option<u64>,

    /// Subtract the temporal mean before identification (recorded in
    /// model.json)
    #[arg(long)]
    center: bool,
}

#[derive(Args)]
struct SurrogateArgs {
    /// Output CSV file, or directory when --format frames
    #[arg(long)]
    out: PathBuf,

    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    #[arg(long, default_value_t = 34, value_parser = clap::value_parser!(u64).range(1..))]
    width: u64,

    #[arg(long, default_value_t = 31, value_parser = clap::value_parser!(u64).range(1..))]
    height: u64,

    #[arg(long, default_value_t = 71, value_parser = clap::value_parser!(u64).range(2..))]
    frames: u64,

    /// Growth speed of the brightening mode
    #[arg(long, default_value_t = 1.0)]
    speed: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = err.exit_code();
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Identify(args) => run_identify(&args),
        Command::Surrogate(args) => run_surrogate(&args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

#[derive(Serialize)]
struct BaselineReport {
    method: String,
    objective: f64,
    identified_objective: f64,
}

#[derive(Serialize)]
struct RunReport {
    input: String,
    format: String,
    samples: usize,
    output_dim: usize,
    order: usize,
    delay: usize,
    dt: f64,
    effective_rank: usize,
    degenerate_truncation: bool,
    residual_frobenius: f64,
    relative_residual: f64,
    real_modes: usize,
    conjugate_pairs: usize,
    eigenvalues: Vec<ComplexEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<BaselineReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl RunReport {
    fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("input: {}\n", self.input));
        out.push_str(&format!("format: {}\n", self.format));
        out.push_str(&format!("samples: {}\n", self.samples));
        out.push_str(&format!("output_dim: {}\n", self.output_dim));
        out.push_str(&format!("order: {}\n", self.order));
        out.push_str(&format!("delay: {}\n", self.delay));
        out.push_str(&format!("dt: {}\n", self.dt));
        out.push_str(&format!("effective_rank: {}\n", self.effective_rank));
        out.push_str(&format!(
            "degenerate_truncation: {}\n",
            self.degenerate_truncation
        ));
        out.push_str(&format!("residual_frobenius: {:e}\n", self.residual_frobenius));
        out.push_str(&format!("relative_residual: {:e}\n", self.relative_residual));
        out.push_str(&format!(
            "modes: {} real, {} conjugate pair(s)\n",
            self.real_modes, self.conjugate_pairs
        ));
        for (k, z) in self.eigenvalues.iter().enumerate() {
            let modulus = (z.re * z.re + z.im * z.im).sqrt();
            out.push_str(&format!(
                "eigenvalue {}: {:+.9} {:+.9}i (modulus {:.9})\n",
                k + 1,
                z.re,
                z.im,
                modulus
            ));
        }
        if let Some(b) = &self.baseline {
            out.push_str(&format!(
                "baseline {}: objective {:e} vs identified {:e}\n",
                b.method, b.objective, b.identified_objective
            ));
        }
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed: {seed}\n"));
        }
        out
    }
}

fn run_identify(args: &IdentifyArgs) -> Result<()> {
    if !(args.dt.is_finite() && args.dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "--dt must be positive and finite, got {}",
            args.dt
        )));
    }
    let format = match args.format {
        FormatArg::Csv => InputFormat::Csv,
        FormatArg::Frames => InputFormat::Frames,
    };
    let ingested = ingest(&args.input, format)?;
    let mut seq = ingested.seq;

    let center = if args.center {
        let (centered, mean) = subtract_temporal_mean(&seq)?;
        seq = centered;
        Some(mean.iter().copied().collect::<Vec<f64>>())
    } else {
        None
    };

    let n = args.order as usize;
    let s = args.delay as usize;
    let h = hankel_embed(&seq, s)?;
    let id = identify_embedded(&h, n, args.dt)?;

    std::fs::create_dir_all(&args.out)?;

    let model = ModelFile::from_identification(&id, center);
    model.save(&args.out.join("model.json"))?;

    let (width, height) = ingested.frame_dims.unwrap_or((seq.dim(), 1));
    render::render_mode_images(&id.modes, width, height, &args.out.join("modes"))?;
    render::write_trends_csv(&id.modes, seq.len(), &args.out.join("trends.csv"))?;

    let baseline = match args.baseline {
        BaselineArg::None => None,
        BaselineArg::Upc => {
            let upc = upc_identify(&h, n)?;
            let x_past = upc.x.columns(0, h.ell);
            let objective = (&h.y_future - &upc.gamma * x_past).norm();
            Some(BaselineReport {
                method: "upc".into(),
                objective,
                identified_objective: id.map.residual_frobenius,
            })
        }
        BaselineArg::Tdmd => {
            let tdmd = truncated_dmd_factored(&h, n)?;
            Some(BaselineReport {
                method: "tdmd".into(),
                objective: tdmd.objective(&h),
                identified_objective: id.map.residual_frobenius,
            })
        }
    };

    let (real_modes, conjugate_pairs) = id.modes.census();
    let report = RunReport {
        input: args.input.display().to_string(),
        format: match args.format {
            FormatArg::Csv => "csv".into(),
            FormatArg::Frames => "frames".into(),
        },
        samples: seq.len(),
        output_dim: seq.dim(),
        order: n,
        delay: s,
        dt: args.dt,
        effective_rank: id.map.rank,
        degenerate_truncation: id.map.degenerate_truncation,
        residual_frobenius: id.map.residual_frobenius,
        relative_residual: id.relative_residual,
        real_modes,
        conjugate_pairs,
        eigenvalues: model.eigenvalues.clone(),
        baseline,
        seed: args.seed,
    };

    match args.report {
        ReportArg::Text => {
            let text = report.to_text();
            formats::atomic_write(&args.out.join("report.txt"), text.as_bytes())?;
            print!("{text}");
        }
        ReportArg::Json => {
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Format(format!("serialize report: {e}")))?;
            formats::atomic_write(&args.out.join("report.json"), json.as_bytes())?;
            println!("{json}");
        }
    }
    Ok(())
}

fn run_surrogate(args: &SurrogateArgs) -> Result<()> {
    let seq = crate::datagen::lc_surrogate(
        args.width as usize,
        args.height as usize,
        args.frames as usize,
        args.speed,
        args.seed,
    )?;
    match args.format {
        FormatArg::Csv => {
            if let Some(parent) = args.out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            formats::write_csv(&seq, &args.out)?;
        }
        FormatArg::Frames => {
            formats::write_frames(&seq, &args.out, args.width as usize, args.height as usize)?;
        }
    }
    println!(
        "wrote {} frames of {}x{} pixels to {} (sampling interval 1/30 s)",
        args.frames,
        args.width,
        args.height,
        args.out.display()
    );
    Ok(())
}

fn subtract_temporal_mean(seq: &OutputSequence) -> Result<(OutputSequence, DVector<f64>)> {
    let m = seq.dim();
    let mut mean = DVector::zeros(m);
    for y in seq.samples() {
        mean += y;
    }
    mean /= seq.len() as f64;
    let centered: Vec<DVector<f64>> = seq.samples().iter().map(|y| y - &mean).collect();
    Ok((OutputSequence::new(centered, seq.dt())?, mean))
}

/// Re-export for integration tests that drive the pipeline through the
/// library rather than the binary.
pub use ingest::Ingested;

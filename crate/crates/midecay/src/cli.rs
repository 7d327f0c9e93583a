//! Command-line front-end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use midecay_core::fit::classify_with;
use midecay_core::{
    build_grid, default_lag_grid, max_dilation, schedule_for, BiasCorrection, EstimatorConfig,
    FitConfig, PermutationSpec, ScheduleConfig, TokenMode,
};

use crate::error::{Error, Result};
use crate::idx::IdxImages;
use crate::io;
use crate::parallel::par_decay_curve;

#[derive(Debug, Parser)]
#[command(
    name = "midecay",
    version,
    about = "Mutual-information decay curves and dilation schedules"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the MI decay curve of a corpus.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        max_lag: usize,
        #[arg(long, default_value_t = 1000)]
        min_pairs: u64,
        #[arg(long, value_enum, default_value_t = BiasArg::None)]
        bias_correction: BiasArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify a curve CSV.
    Fit {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-5)]
        threshold: f64,
    },
    /// One dilation schedule for a given layer count.
    Schedule {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        layers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid-search specification over a range of layer counts.
    Grid {
        #[arg(long)]
        fit: PathBuf,
        /// `LO..HI` (inclusive), a single count, or a comma-separated list.
        #[arg(long, value_parser = parse_layer_sweep)]
        layers: LayerSweep,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a seeded pixel permutation to every image of an IDX file.
    Permute {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Byte,
    Char,
    Word,
    Pixel,
}

impl From<ModeArg> for TokenMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Byte => TokenMode::Byte,
            ModeArg::Char => TokenMode::Char,
            ModeArg::Word => TokenMode::Word,
            ModeArg::Pixel => TokenMode::Pixel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BiasArg {
    None,
    MillerMadow,
}

impl From<BiasArg> for BiasCorrection {
    fn from(b: BiasArg) -> Self {
        match b {
            BiasArg::None => BiasCorrection::None,
            BiasArg::MillerMadow => BiasCorrection::MillerMadow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSweep(pub Vec<usize>);

pub fn parse_layer_sweep(s: &str) -> std::result::Result<LayerSweep, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("`{t}` is not a layer count"))
    };
    let layers = if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi.strip_prefix('=').unwrap_or(hi))?);
        (lo..=hi).collect()
    } else {
        s.split(',')
            .map(num)
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if layers.is_empty() {
        return Err(format!("`{s}` is an empty layer sweep"));
    }
    if layers.contains(&0) {
        return Err("layer counts must be at least 1".into());
    }
    Ok(LayerSweep(layers))
}

pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Analyze {
            input,
            mode,
            max_lag,
            min_pairs,
            bias_correction,
            out,
        } => {
            let config = EstimatorConfig {
                bias_correction: bias_correction.into(),
                min_pair_count: min_pairs,
            };
            config.validate()?;
            let corpus = io::load_corpus(&input, mode.into())?;
            if max_lag >= corpus.max_sequence_len() {
                return Err(Error::Data(format!(
                    "--max-lag {max_lag} must be below the longest sequence length {}",
                    corpus.max_sequence_len()
                )));
            }
            let grid = default_lag_grid(max_lag)?;
            let curve = par_decay_curve(&corpus, &grid, &config)?;
            io::write_curve(&out, &curve, &io::CurveSidecar::new(&curve, &corpus, &grid))?;
            Ok(format!(
                "{} lags written to {} ({} dropped for too few pairs)",
                curve.points().len(),
                out.display(),
                curve.dropped().len()
            ))
        }
        Command::Fit {
            curve,
            out,
            threshold,
        } => {
            if threshold.is_nan() || threshold <= 0.0 {
                return Err(Error::Usage("--threshold must be positive".into()));
            }
            let curve = io::read_curve(&curve)?;
            let config = FitConfig {
                noise_threshold: threshold,
                ..FitConfig::default()
            };
            let fit = classify_with(&curve, &config)?;
            let summary = format!(
                "{} (break {:?}, period {:?}, noise crossing {:?})",
                fit.decay_class,
                fit.break_d(),
                fit.period(),
                fit.noise_crossing_d
            );
            io::write_json(&out, &io::FitDocument::new(fit))?;
            Ok(summary)
        }
        Command::Schedule { fit, layers, out } => {
            if layers == 0 {
                return Err(Error::Usage("--layers must be at least 1".into()));
            }
            let fit = io::read_fit(&fit)?;
            let config = ScheduleConfig {
                n_layers: layers,
                mi_threshold: fit.noise_threshold,
                ..ScheduleConfig::default()
            };
            let md = max_dilation(&fit, &config)?;
            let schedule = schedule_for(&fit, &config)?;
            let summary = format!("{:?}", schedule.dilations);
            io::write_json(
                &out,
                &io::ScheduleDocument {
                    format_version: midecay_core::schedule::GRID_FORMAT_VERSION,
                    dataset_meta: fit.curve_meta.source.clone(),
                    decay_class: fit.decay_class,
                    max_dilation: md,
                    n_layers: layers,
                    schedule,
                },
            )?;
            Ok(summary)
        }
        Command::Grid { fit, layers, out } => {
            let fit = io::read_fit(&fit)?;
            let config = ScheduleConfig {
                mi_threshold: fit.noise_threshold,
                layer_sweep: layers.0,
                ..ScheduleConfig::default()
            };
            let grid = build_grid(&fit, &config)?;
            let summary = format!("{} schedules", grid.schedules.len());
            io::write_json(&out, &grid)?;
            Ok(summary)
        }
        Command::Permute { input, seed, out } => {
            let images = io::read_idx(&input)?;
            let corpus = io::corpus_from_idx(&images, input.display().to_string())?;
            let permuted = corpus.permute(&PermutationSpec::new(seed, images.image_len()))?;
            let pixels = permuted
                .pixel_bytes()
                .expect("pixel corpus decodes to bytes");
            io::write_idx(&out, &IdxImages { pixels, ..images })?;
            Ok(format!("permuted with seed {seed} into {}", out.display()))
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(summary) => {
            eprintln!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

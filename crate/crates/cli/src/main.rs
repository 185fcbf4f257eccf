//! `oddm`: run Monte-Carlo experiments and analyse LLR dumps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oddm_core::harness::{
    analyze_dump, resolve_code, write_results, AnalysisSpec, Experiment, ExperimentConfig, LlrDump, SnrDb,
};
use oddm_core::receiver::Scheme;
use oddm_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "oddm", version, about = "Coded ODDM link-level simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the Monte-Carlo sweep described by a JSON config.
    Simulate(SimulateArgs),
    /// Fit mixtures to an LLR dump and predict BER by density evolution.
    Analyze(AnalyzeArgs),
}

#[derive(clap::Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated SNRs in dB; `inf` for noiseless.
    #[arg(long, value_delimiter = ',')]
    snr: Option<Vec<SnrDb>>,
    /// Restrict to one scheme.
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    turbo_iters: Option<usize>,
    #[arg(long)]
    bp_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    target_frame_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress per-point progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(clap::Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    llr_dump: PathBuf,
    /// Builtin code name or alist file.
    #[arg(long)]
    code: String,
    /// Mixture components for the pooled fit.
    #[arg(long = "J", default_value_t = 3)]
    j: usize,
    /// Mixture components per codeword for the finite-length prediction.
    #[arg(long, default_value_t = 1)]
    codeword_j: usize,
    /// Noise level relative to the threshold for the residual error fraction.
    #[arg(long, default_value_t = oddm_core::analysis::ALPHA_NOISE_OFFSET)]
    alpha_offset: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn apply_overrides(cfg: &mut ExperimentConfig, a: &SimulateArgs) -> Result<()> {
    if let Some(s) = &a.snr {
        cfg.snr_db = s.clone();
    }
    if let Some(s) = a.scheme {
        cfg.schemes = vec![s];
    }
    if let Some(v) = a.turbo_iters {
        cfg.turbo_iters = v;
    }
    if let Some(v) = a.bp_iters {
        cfg.bp_iters = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.target_frame_errors {
        cfg.stop.target_frame_errors = v;
    }
    if let Some(v) = a.max_frames {
        cfg.stop.max_frames = v;
    }
    if let Some(v) = a.workers {
        cfg.workers = v;
    }
    if let Some(v) = &a.out {
        cfg.output.dir = v.clone();
    }
    cfg.validate()
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    apply_overrides(&mut cfg, a)?;
    let exp = Experiment::new(cfg)?;
    let quiet = a.quiet;
    let results = exp.run_with(|p| {
        if quiet {
            return;
        }
        let last = p.stats.iterations.last().cloned().unwrap_or_default();
        eprintln!(
            "{} snr={} frames={} ber={:.3e} fer={:.3e} (final iteration)",
            p.scheme,
            p.snr_db,
            p.stats.frames(),
            last.ber(),
            last.fer()
        );
    })?;
    let dir = exp.config().output.dir.clone();
    let files = write_results(&exp, &results, &dir)?;
    if let Some(spec) = exp.config().analysis {
        let mut reports = Vec::new();
        for p in &results.points {
            if let Some(d) = &p.llrs {
                reports.push(analyze_dump(d, exp.code(p.scheme)?, &spec)?);
            }
        }
        let path = dir.join("analysis.json");
        std::fs::write(&path, serde_json::to_string_pretty(&reports)?).map_err(|e| Error::io(&path, e))?;
    }
    if !quiet {
        eprintln!("wrote {} and {}", files.csv.display(), files.summary.display());
    }
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let dump = LlrDump::load(&a.llr_dump)?;
    let base = Path::new(".");
    let code = resolve_code(&a.code, dump.shape[2], Some(base))?;
    let spec = AnalysisSpec {
        components: a.j,
        codeword_components: a.codeword_j,
        alpha_noise_offset: a.alpha_offset,
    };
    if spec.components == 0 || spec.codeword_components == 0 {
        return Err(Error::Config("--J must be positive".into()));
    }
    if spec.alpha_noise_offset.is_nan() || spec.alpha_noise_offset < 1.0 {
        return Err(Error::Config("--alpha-offset must be at least 1".into()));
    }
    let report = analyze_dump(&dump, &code, &spec)?;
    let text = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

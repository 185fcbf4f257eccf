//! Frame-parallel Monte-Carlo runner.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ChannelKind, ExperimentConfig, SnrDb};
use super::output::LlrDump;
use super::seeds::{frame_seed, stream_seed, Stream};
use crate::analysis::sign_fold;
use crate::channel::{apply_channel, draw_channel, ChannelRealization};
use crate::detector::SicMmseDetector;
use crate::error::{Error, Result};
use crate::frame::Interleaver;
use crate::ldpc::{ira_code, DecoderConfig, LdpcCode, IEEE80211N_648_R12};
use crate::modem::{modulate, DdGrid};
use crate::receiver::{collect_stats, run_pce_sdf, run_sce_pdf, BpCodewordDecoder, RunStats, Scheme, TurboConfig};

/// Frames per synchronisation point of the stop rule.
pub const BATCH_FRAMES: u64 = 16;

/// Seed of the builtin IRA construction, fixed so the code is reproducible.
pub const IRA_SEED: u64 = 0x1a2b_3c4d;

/// Resolves a builtin code name or an alist path (relative to `base_dir`)
/// and checks its length.
pub fn resolve_code(spec: &str, n_required: usize, base_dir: Option<&Path>) -> Result<LdpcCode> {
    let code = match spec {
        "ieee80211n-648-r12" => IEEE80211N_648_R12.build(),
        "ira-r12" => {
            if !n_required.is_multiple_of(2) {
                return Err(Error::Config(format!("ira-r12 needs an even length, got {n_required}")));
            }
            ira_code(n_required, n_required / 2, IRA_SEED)?
        }
        path => {
            let p = Path::new(path);
            match base_dir {
                Some(base) if p.is_relative() => LdpcCode::load_alist(base.join(p))?,
                _ => LdpcCode::load_alist(p)?,
            }
        }
    };
    if code.n() != n_required {
        return Err(Error::Config(format!(
            "code {spec:?} has length {} but the frame carries {n_required} coded bits per codeword",
            code.n()
        )));
    }
    Ok(code)
}

/// One simulated frame.
#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub stats: RunStats,
    /// First-iteration detector LLRs per codeword, sign-folded.
    pub llrs: Option<Vec<Vec<f64>>>,
}

/// Aggregate over all frames of one `(scheme, SNR)` point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub scheme: Scheme,
    pub snr_db: SnrDb,
    pub stats: RunStats,
    pub wall_s: f64,
    pub llrs: Option<LlrDump>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub points: Vec<PointResult>,
}

/// A configuration with its codes resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    cfg: ExperimentConfig,
    pce_code: Option<LdpcCode>,
    sce_code: Option<LdpcCode>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let rows = cfg.frame.data_rows();
        let row_bits = cfg.frame.bits_per_row();
        let mut pce_code = None;
        let mut sce_code = None;
        if cfg.schemes.contains(&Scheme::Pce) {
            pce_code = Some(resolve_code(&cfg.codes.pce, row_bits, cfg.base_dir.as_deref())?);
        }
        if cfg.schemes.contains(&Scheme::Sce) {
            sce_code = Some(resolve_code(&cfg.codes.sce, rows * row_bits, cfg.base_dir.as_deref())?);
        }
        Ok(Experiment {
            cfg,
            pce_code,
            sce_code,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn code(&self, scheme: Scheme) -> Result<&LdpcCode> {
        match scheme {
            Scheme::Pce => self.pce_code.as_ref(),
            Scheme::Sce => self.sce_code.as_ref(),
        }
        .ok_or_else(|| Error::Config(format!("scheme {scheme} is not configured")))
    }

    /// Information bits per frame.
    pub fn info_bits(&self, scheme: Scheme) -> Result<usize> {
        let code = self.code(scheme)?;
        Ok(match scheme {
            Scheme::Pce => code.k() * self.cfg.frame.data_rows(),
            Scheme::Sce => code.k(),
        })
    }

    pub fn channel(&self, frame_index: u64) -> Result<ChannelRealization> {
        let frame = &self.cfg.frame;
        let ch = &self.cfg.channel;
        match ch.kind {
            ChannelKind::Identity => Ok(ChannelRealization::identity(frame)),
            ChannelKind::Random => {
                let fs = frame_seed(self.cfg.seed, frame_index);
                draw_channel(stream_seed(fs, Stream::Channel), ch.paths, ch.l_max, ch.k_max, frame)
            }
        }
    }

    pub fn simulate_frame(
        &self,
        scheme: Scheme,
        snr: SnrDb,
        frame_index: u64,
        record_llrs: bool,
    ) -> Result<FrameOutcome> {
        let frame = &self.cfg.frame;
        let code = self.code(scheme)?;
        let c = frame.constellation();
        let fs = frame_seed(self.cfg.seed, frame_index);
        let mut bit_rng = ChaCha8Rng::seed_from_u64(stream_seed(fs, Stream::Bits));
        let il_seed = stream_seed(fs, Stream::Interleaver);
        let rows = frame.data_rows();
        let row_bits = frame.bits_per_row();
        let mut random_bits = |k: usize| -> Vec<u8> { (0..k).map(|_| bit_rng.random_range(0..2u8)).collect() };

        let mut grid = DdGrid::zeros(frame);
        let mut info = Vec::new();
        let mut codewords = Vec::new();
        let mut interleavers = Vec::new();
        match scheme {
            Scheme::Pce => {
                for row in 0..rows {
                    let u = random_bits(code.k());
                    let cw = code.encode(&u)?;
                    let il = Interleaver::for_row(code.n(), il_seed, row);
                    grid.row_mut(row).copy_from_slice(&c.map(&il.interleave(&cw)?)?);
                    info.push(u);
                    codewords.push(cw);
                    interleavers.push(il);
                }
            }
            Scheme::Sce => {
                let u = random_bits(code.k());
                let cw = code.encode(&u)?;
                let il = Interleaver::new(code.n(), il_seed);
                let bits = il.interleave(&cw)?;
                for row in 0..rows {
                    grid.row_mut(row)
                        .copy_from_slice(&c.map(&bits[row * row_bits..(row + 1) * row_bits])?);
                }
                info.push(u);
                codewords.push(cw);
                interleavers.push(il);
            }
        }

        let channel = self.channel(frame_index)?;
        let tx = modulate(&grid)?;
        let mut noise_rng = ChaCha8Rng::seed_from_u64(stream_seed(fs, Stream::Noise));
        let (rx, var) = apply_channel(&channel, &tx, snr.0, &mut noise_rng)?;
        let mut det = SicMmseDetector::new(frame, &channel, rx, var)?;
        let turbo = TurboConfig {
            scheme,
            max_turbo: self.cfg.turbo_iters,
            decoder: DecoderConfig {
                max_iters: self.cfg.bp_iters,
                early_stop: true,
            },
            skip_converged: self.cfg.skip_converged,
            record_llrs,
        };
        let mut decoder = BpCodewordDecoder::new(code, turbo.decoder);
        let out = match scheme {
            Scheme::Pce => run_pce_sdf(&mut det, &mut decoder, &interleavers, &c, &turbo)?,
            Scheme::Sce => run_sce_pdf(&mut det, &mut decoder, &interleavers[0], &c, &turbo)?,
        };
        let stats = collect_stats(&out, &info);
        let llrs = out.iterations[0]
            .detector_llrs
            .as_ref()
            .map(|l| l.iter().zip(&codewords).map(|(l, cw)| sign_fold(l, cw)).collect());
        Ok(FrameOutcome { stats, llrs })
    }

    /// Simulates one `(scheme, SNR)` point until the final turbo iteration
    /// has collected the target number of frame errors or the frame budget is
    /// spent. The rule is checked every [`BATCH_FRAMES`] frames.
    pub fn run_point(&self, scheme: Scheme, snr: SnrDb) -> Result<PointResult> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let start = Instant::now();
        let stop = self.cfg.stop;
        let dump_cap = if self.cfg.output.dump_llrs {
            self.cfg.output.dump_max_frames as u64
        } else {
            0
        };
        let mut stats = RunStats::default();
        let mut dumped: Vec<Vec<f64>> = Vec::new();
        let mut dump_frames = 0usize;
        let mut next = 0u64;
        loop {
            let end = (next + BATCH_FRAMES).min(stop.max_frames);
            let batch: Vec<FrameOutcome> = pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|i| self.simulate_frame(scheme, snr, i, i < dump_cap))
                    .collect::<Result<Vec<_>>>()
            })?;
            for outcome in batch {
                stats.merge(&outcome.stats);
                if let Some(l) = outcome.llrs {
                    dumped.extend(l);
                    dump_frames += 1;
                }
            }
            next = end;
            let errors = stats.iterations.last().map_or(0, |s| s.frame_errors);
            if errors >= stop.target_frame_errors || next >= stop.max_frames {
                break;
            }
        }
        let wall_s = if self.cfg.output.record_wall_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        let llrs = (dump_frames > 0).then(|| {
            let per_frame = dumped.len() / dump_frames;
            let n_c = dumped[0].len();
            LlrDump {
                shape: [dump_frames, per_frame, n_c],
                sign_folded: true,
                scheme: Some(scheme),
                snr_db: Some(snr),
                turbo_iter: 1,
                data: dumped.into_iter().flatten().collect(),
            }
        });
        Ok(PointResult {
            scheme,
            snr_db: snr,
            stats,
            wall_s,
            llrs,
        })
    }

    /// Runs every scheme at every SNR, calling `progress` after each point.
    pub fn run_with(&self, mut progress: impl FnMut(&PointResult)) -> Result<ExperimentResults> {
        let mut points = Vec::new();
        for &scheme in &self.cfg.schemes {
            for &snr in &self.cfg.snr_db {
                let p = self.run_point(scheme, snr)?;
                progress(&p);
                points.push(p);
            }
        }
        Ok(ExperimentResults { points })
    }

    pub fn run(&self) -> Result<ExperimentResults> {
        self.run_with(|_| {})
    }
}

//! Turbo receivers.
//!
//! * SCE-PDF: one long codeword per frame. Every iteration detects the whole
//!   frame, then decodes once and feeds all rows back in parallel.
//! * PCE-SDF: one codeword per data row. Each layer is decoded as soon as it
//!   is detected and the decoder output becomes the prior for the next layer.
//!
//! Decoders feed back a-posteriori LLRs, never extrinsic ones.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detector::{dd_posterior, detect_frame_sce, SicMmseDetector};
use crate::error::{Error, Result};
use crate::frame::{soft_symbols_from_llrs, Interleaver, QamConstellation, SoftSymbolVector};
use crate::ldpc::{hard_decisions, BpDecoder, DecodeOutput, DecoderConfig, LdpcCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Single codeword, parallel decoding feedback.
    Sce,
    /// Parallel (per-row) codewords, successive decoding feedback.
    Pce,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Sce => "sce",
            Scheme::Pce => "pce",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sce" | "sce-pdf" | "sce_pdf" => Ok(Scheme::Sce),
            "pce" | "pce-sdf" | "pce_sdf" => Ok(Scheme::Pce),
            _ => Err(Error::Config(format!("unknown scheme {s:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurboConfig {
    pub scheme: Scheme,
    pub max_turbo: usize,
    pub decoder: DecoderConfig,
    /// PCE: freeze rows once their parity holds. SCE: stop the frame once the
    /// codeword is valid.
    pub skip_converged: bool,
    /// Keep the detector LLRs (code order) of every decoded codeword.
    pub record_llrs: bool,
}

impl TurboConfig {
    pub fn new(scheme: Scheme, max_turbo: usize) -> Self {
        TurboConfig {
            scheme,
            max_turbo,
            decoder: DecoderConfig::default(),
            skip_converged: true,
            record_llrs: false,
        }
    }
}

/// Soft-in soft-out decoding of codeword `index`.
pub trait CodewordDecoder {
    fn codeword_len(&self) -> usize;
    fn decode(&mut self, index: usize, llr_in: &[f64]) -> Result<DecodeOutput>;
    /// Information bits carried by a hard-decided codeword.
    fn info_bits(&self, hard: &[u8]) -> Vec<u8>;
}

/// Sum-product decoding with a fixed configuration.
#[derive(Debug, Clone)]
pub struct BpCodewordDecoder<'a> {
    inner: BpDecoder<'a>,
    cfg: DecoderConfig,
}

impl<'a> BpCodewordDecoder<'a> {
    pub fn new(code: &'a LdpcCode, cfg: DecoderConfig) -> Self {
        BpCodewordDecoder {
            inner: BpDecoder::new(code),
            cfg,
        }
    }
}

impl CodewordDecoder for BpCodewordDecoder<'_> {
    fn codeword_len(&self) -> usize {
        self.inner.code().n()
    }

    fn decode(&mut self, _index: usize, llr_in: &[f64]) -> Result<DecodeOutput> {
        self.inner.decode(llr_in, &self.cfg)
    }

    fn info_bits(&self, hard: &[u8]) -> Vec<u8> {
        self.inner.code().extract_info(hard)
    }
}

/// Returns its input unchanged; never reports a valid codeword.
#[derive(Debug, Clone)]
pub struct PassThroughDecoder {
    pub len: usize,
}

impl CodewordDecoder for PassThroughDecoder {
    fn codeword_len(&self) -> usize {
        self.len
    }

    fn decode(&mut self, _index: usize, llr_in: &[f64]) -> Result<DecodeOutput> {
        Ok(DecodeOutput {
            llr_out: llr_in.to_vec(),
            hard: hard_decisions(llr_in),
            parity_ok: false,
            iterations: 0,
        })
    }

    fn info_bits(&self, hard: &[u8]) -> Vec<u8> {
        hard.to_vec()
    }
}

/// Outputs the transmitted codewords with saturated LLRs.
#[derive(Debug, Clone)]
pub struct GenieDecoder {
    pub codewords: Vec<Vec<u8>>,
    pub info_positions: Vec<usize>,
}

impl CodewordDecoder for GenieDecoder {
    fn codeword_len(&self) -> usize {
        self.codewords.first().map_or(0, Vec::len)
    }

    fn decode(&mut self, index: usize, _llr_in: &[f64]) -> Result<DecodeOutput> {
        let cw = &self.codewords[index];
        Ok(DecodeOutput {
            llr_out: cw
                .iter()
                .map(|&b| {
                    if b == 0 {
                        crate::frame::LLR_CLAMP
                    } else {
                        -crate::frame::LLR_CLAMP
                    }
                })
                .collect(),
            hard: cw.clone(),
            parity_ok: true,
            iterations: 1,
        })
    }

    fn info_bits(&self, hard: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| hard[p]).collect()
    }
}

/// State of the receiver after one turbo iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    /// Decided information bits per codeword.
    pub info: Vec<Vec<u8>>,
    pub parity_ok: Vec<bool>,
    pub mmse_solves: u64,
    pub bp_iterations: u64,
    pub decodes: u64,
    /// Detector LLRs fed to each decoder in this iteration, in code order.
    pub detector_llrs: Option<Vec<Vec<f64>>>,
    /// False when early termination made this iteration a no-op.
    pub executed: bool,
}

impl IterationReport {
    pub fn unconverged(&self) -> usize {
        self.parity_ok.iter().filter(|&&ok| !ok).count()
    }

    /// Fraction of codewords failing their parity checks.
    pub fn beta(&self) -> f64 {
        self.unconverged() as f64 / self.parity_ok.len().max(1) as f64
    }

    fn carried(&self) -> Self {
        IterationReport {
            info: self.info.clone(),
            parity_ok: self.parity_ok.clone(),
            mmse_solves: 0,
            bp_iterations: 0,
            decodes: 0,
            detector_llrs: None,
            executed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    pub iterations: Vec<IterationReport>,
}

impl ReceiverOutput {
    pub fn last(&self) -> &IterationReport {
        self.iterations.last().expect("at least one turbo iteration")
    }
}

fn check_turbo(cfg: &TurboConfig) -> Result<()> {
    if cfg.max_turbo == 0 {
        return Err(Error::Config("at least one turbo iteration is required".into()));
    }
    Ok(())
}

/// PCE-SDF: detect layer, decode it, feed the decoded row back, next layer.
///
/// `interleavers[m]` maps row `m`'s codeword onto its `N` symbols.
pub fn run_pce_sdf<D: CodewordDecoder>(
    det: &mut SicMmseDetector,
    decoder: &mut D,
    interleavers: &[Interleaver],
    constellation: &QamConstellation,
    cfg: &TurboConfig,
) -> Result<ReceiverOutput> {
    check_turbo(cfg)?;
    let rows = det.data_rows();
    if interleavers.len() != rows {
        return Err(Error::Size {
            expected: rows,
            actual: interleavers.len(),
        });
    }
    let n_c = decoder.codeword_len();
    if let Some(il) = interleavers.iter().find(|il| il.len() != n_c) {
        return Err(Error::Size {
            expected: n_c,
            actual: il.len(),
        });
    }

    det.reset_priors();
    let mut info = vec![Vec::new(); rows];
    let mut parity = vec![false; rows];
    let mut frozen = vec![false; rows];
    let mut reports: Vec<IterationReport> = Vec::with_capacity(cfg.max_turbo);

    for _ in 0..cfg.max_turbo {
        if cfg.skip_converged && frozen.iter().all(|&f| f) {
            let carried = reports.last().expect("rows freeze only after decoding").carried();
            reports.push(carried);
            continue;
        }
        let solves0 = det.mmse_solves();
        let mut bp_iterations = 0;
        let mut decodes = 0;
        let mut llr_log = cfg.record_llrs.then(|| vec![Vec::new(); rows]);
        for row in 0..rows {
            if cfg.skip_converged && frozen[row] {
                continue;
            }
            let layer = det.detect_layer(row);
            let post = dd_posterior(&layer.dd, layer.dd_var, None, constellation)?;
            let llr_in = interleavers[row].deinterleave(&post.llrs)?;
            let out = decoder.decode(row, &llr_in)?;
            bp_iterations += out.iterations as u64;
            decodes += 1;
            info[row] = decoder.info_bits(&out.hard);
            parity[row] = out.parity_ok;
            if let Some(log) = llr_log.as_mut() {
                log[row] = llr_in;
            }

            let soft = if cfg.skip_converged && out.parity_ok {
                frozen[row] = true;
                let bits = interleavers[row].interleave(&out.hard)?;
                SoftSymbolVector::known(&constellation.map(&bits)?)
            } else {
                let llr_out = interleavers[row].interleave(&out.llr_out)?;
                soft_symbols_from_llrs(&llr_out, constellation)?
            };
            det.set_row_dd(row, &soft)?;
        }
        reports.push(IterationReport {
            info: info.clone(),
            parity_ok: parity.clone(),
            mmse_solves: det.mmse_solves() - solves0,
            bp_iterations,
            decodes,
            detector_llrs: llr_log,
            executed: true,
        });
    }
    Ok(ReceiverOutput { iterations: reports })
}

/// SCE-PDF: detect the whole frame, then decode the single codeword and feed
/// every row back for the next sweep.
pub fn run_sce_pdf<D: CodewordDecoder>(
    det: &mut SicMmseDetector,
    decoder: &mut D,
    interleaver: &Interleaver,
    constellation: &QamConstellation,
    cfg: &TurboConfig,
) -> Result<ReceiverOutput> {
    check_turbo(cfg)?;
    let rows = det.data_rows();
    let n_c = decoder.codeword_len();
    let bps = constellation.bits_per_symbol();
    let row_bits = n_c / rows.max(1);
    if row_bits * rows != n_c || interleaver.len() != n_c || !row_bits.is_multiple_of(bps) {
        return Err(Error::Size {
            expected: n_c,
            actual: interleaver.len(),
        });
    }
    let q = constellation.order();
    let symbols = row_bits / bps;

    let mut reports: Vec<IterationReport> = Vec::with_capacity(cfg.max_turbo);
    let mut feedback: Option<Vec<f64>> = None;
    let mut converged = false;
    for _ in 0..cfg.max_turbo {
        if converged && cfg.skip_converged {
            let carried = reports.last().expect("converged after a decode").carried();
            reports.push(carried);
            continue;
        }
        let solves0 = det.mmse_solves();
        det.reset_priors();
        let priors = match &feedback {
            None => None,
            Some(llr_out) => {
                let mut probs = vec![0.0; rows * symbols * q];
                for row in 0..rows {
                    let bits = &llr_out[row * row_bits..(row + 1) * row_bits];
                    det.set_row_dd(row, &soft_symbols_from_llrs(bits, constellation)?)?;
                    for (s, group) in bits.chunks_exact(bps).enumerate() {
                        let at = (row * symbols + s) * q;
                        constellation.label_probabilities(group, &mut probs[at..at + q]);
                    }
                }
                Some(probs)
            }
        };
        let sweep = detect_frame_sce(det, constellation, priors.as_deref())?;
        let llr_in = interleaver.deinterleave(&sweep.llrs)?;
        let out = decoder.decode(0, &llr_in)?;
        converged = out.parity_ok;
        feedback = Some(interleaver.interleave(&out.llr_out)?);
        reports.push(IterationReport {
            info: vec![decoder.info_bits(&out.hard)],
            parity_ok: vec![out.parity_ok],
            mmse_solves: det.mmse_solves() - solves0,
            bp_iterations: out.iterations as u64,
            decodes: 1,
            detector_llrs: cfg.record_llrs.then(|| vec![llr_in]),
            executed: true,
        });
    }
    Ok(ReceiverOutput { iterations: reports })
}

/// Error and complexity tallies for one turbo iteration, summed over frames.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub codewords: u64,
    pub unconverged: u64,
    pub mmse_solves: u64,
    pub bp_iterations: u64,
    pub decodes: u64,
}

impl IterationStats {
    pub fn ber(&self) -> f64 {
        ratio(self.bit_errors, self.bits)
    }

    pub fn fer(&self) -> f64 {
        ratio(self.frame_errors, self.frames)
    }

    pub fn beta(&self) -> f64 {
        ratio(self.unconverged, self.codewords)
    }

    pub fn merge(&mut self, other: &IterationStats) {
        self.frames += other.frames;
        self.bits += other.bits;
        self.bit_errors += other.bit_errors;
        self.frame_errors += other.frame_errors;
        self.codewords += other.codewords;
        self.unconverged += other.unconverged;
        self.mmse_solves += other.mmse_solves;
        self.bp_iterations += other.bp_iterations;
        self.decodes += other.decodes;
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Per-iteration statistics of one or more frames.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub iterations: Vec<IterationStats>,
}

impl RunStats {
    pub fn merge(&mut self, other: &RunStats) {
        if self.iterations.len() < other.iterations.len() {
            self.iterations
                .resize(other.iterations.len(), IterationStats::default());
        }
        for (a, b) in self.iterations.iter_mut().zip(&other.iterations) {
            a.merge(b);
        }
    }

    pub fn frames(&self) -> u64 {
        self.iterations.first().map_or(0, |s| s.frames)
    }
}

/// Scores one frame against the transmitted information bits.
pub fn collect_stats(run: &ReceiverOutput, truth: &[Vec<u8>]) -> RunStats {
    let iterations = run
        .iterations
        .iter()
        .map(|it| {
            let bit_errors: u64 = it
                .info
                .iter()
                .zip(truth)
                .map(|(a, b)| a.iter().zip(b).filter(|(x, y)| x != y).count() as u64)
                .sum();
            IterationStats {
                frames: 1,
                bits: truth.iter().map(|t| t.len() as u64).sum(),
                bit_errors,
                frame_errors: u64::from(bit_errors > 0),
                codewords: it.parity_ok.len() as u64,
                unconverged: it.unconverged() as u64,
                mmse_solves: it.mmse_solves,
                bp_iterations: it.bp_iterations,
                decodes: it.decodes,
            }
        })
        .collect();
    RunStats { iterations }
}

/// Time-domain symbols of one row after feedback, for inspection in tests.
pub fn row_time_means(det: &SicMmseDetector, row: usize, blocks: usize) -> Vec<Complex64> {
    (0..blocks).map(|n| det.prior(n, row).0).collect()
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, draw_channel, ChannelRealization};
    use crate::frame::FrameConfig;
    use crate::ldpc::IEEE80211N_648_R12;
    use crate::modem::{modulate, DdGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Small PCE frame: BPSK, N = 648 so each row holds one codeword.
    struct PceFrame {
        frame: FrameConfig,
        ch: ChannelRealization,
        info: Vec<Vec<u8>>,
        codewords: Vec<Vec<u8>>,
        interleavers: Vec<Interleaver>,
        rx: Vec<Vec<Complex64>>,
        var: f64,
    }

    fn pce_frame(code: &LdpcCode, m: usize, l: usize, paths: usize, snr: f64, seed: u64) -> PceFrame {
        let frame = FrameConfig::new(m, code.n(), l, 2).unwrap();
        let c = frame.constellation();
        let ch = if paths == 0 {
            ChannelRealization::identity(&frame)
        } else {
            draw_channel(seed, paths, l, 2.0, &frame).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grid = DdGrid::zeros(&frame);
        let mut info = Vec::new();
        let mut codewords = Vec::new();
        let mut interleavers = Vec::new();
        for row in 0..frame.data_rows() {
            let u: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
            let cw = code.encode(&u).unwrap();
            let il = Interleaver::for_row(code.n(), seed, row);
            let syms = c.map(&il.interleave(&cw).unwrap()).unwrap();
            grid.row_mut(row).copy_from_slice(&syms);
            info.push(u);
            codewords.push(cw);
            interleavers.push(il);
        }
        let tx = modulate(&grid).unwrap();
        let (rx, var) = apply_channel(&ch, &tx, snr, &mut rng).unwrap();
        PceFrame {
            frame,
            ch,
            info,
            codewords,
            interleavers,
            rx,
            var,
        }
    }

    fn detector(f: &PceFrame) -> SicMmseDetector {
        SicMmseDetector::new(&f.frame, &f.ch, f.rx.clone(), f.var).unwrap()
    }

    #[test]
    fn pce_noiseless_identity_converges_first_iteration() {
        let code = IEEE80211N_648_R12.build();
        let f = pce_frame(&code, 6, 2, 0, f64::INFINITY, 1);
        let mut det = detector(&f);
        let mut dec = BpCodewordDecoder::new(&code, DecoderConfig::default());
        let cfg = TurboConfig::new(Scheme::Pce, 2);
        let out = run_pce_sdf(&mut det, &mut dec, &f.interleavers, &f.frame.constellation(), &cfg).unwrap();
        assert!(out.iterations[0].parity_ok.iter().all(|&p| p));
        assert_eq!(out.iterations[0].info, f.info);
        let stats = collect_stats(&out, &f.info);
        assert_eq!(stats.iterations[0].bit_errors, 0);
        assert_eq!(stats.iterations[0].beta(), 0.0);
        assert!(!out.iterations[1].executed);
        assert_eq!(out.iterations[1].mmse_solves, 0);
    }

    #[test]
    fn sce_noiseless_identity_converges_first_iteration() {
        let code = IEEE80211N_648_R12.build();
        // 4 data rows of 81 4QAM symbols carry one 648-bit codeword
        let frame = FrameConfig::new(6, 81, 2, 4).unwrap();
        let c = frame.constellation();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u: Vec<u8> = (0..324).map(|_| rng.random_range(0..2)).collect();
        let cw = code.encode(&u).unwrap();
        let il = Interleaver::new(648, 77);
        let syms = c.map(&il.interleave(&cw).unwrap()).unwrap();
        let mut grid = DdGrid::zeros(&frame);
        for row in 0..4 {
            grid.row_mut(row).copy_from_slice(&syms[row * 81..(row + 1) * 81]);
        }
        let ch = ChannelRealization::identity(&frame);
        let (rx, var) = apply_channel(&ch, &modulate(&grid).unwrap(), f64::INFINITY, &mut rng).unwrap();
        let mut det = SicMmseDetector::new(&frame, &ch, rx, var).unwrap();
        let mut dec = BpCodewordDecoder::new(&code, DecoderConfig::default());
        let out = run_sce_pdf(&mut det, &mut dec, &il, &c, &TurboConfig::new(Scheme::Sce, 3)).unwrap();
        assert!(out.iterations[0].parity_ok[0]);
        assert_eq!(out.iterations[0].info[0], u);
        assert!(!out.iterations[2].executed);

        // pass-through decoding reproduces the detector's own decisions
        let mut det2 = SicMmseDetector::new(&frame, &ch, det.received_blocks(), var).unwrap();
        let mut pass = PassThroughDecoder { len: 648 };
        let cfg = TurboConfig {
            skip_converged: false,
            record_llrs: true,
            ..TurboConfig::new(Scheme::Sce, 1)
        };
        let out = run_sce_pdf(&mut det2, &mut pass, &il, &c, &cfg).unwrap();
        let llrs = &out.iterations[0].detector_llrs.as_ref().unwrap()[0];
        assert_eq!(out.iterations[0].info[0], hard_decisions(llrs));
        assert_eq!(out.iterations[0].info[0], cw);
    }

    #[test]
    fn genie_feedback_never_hurts_next_layer() {
        let code = IEEE80211N_648_R12.build();
        let f = pce_frame(&code, 10, 3, 4, 6.0, 5);
        let c = f.frame.constellation();
        let mut genie = GenieDecoder {
            codewords: f.codewords.clone(),
            info_positions: code.info_positions().to_vec(),
        };
        let mut det_g = detector(&f);
        let cfg = TurboConfig {
            record_llrs: true,
            ..TurboConfig::new(Scheme::Pce, 1)
        };
        let mut post_var_genie = Vec::new();
        // replay the genie run layer by layer to capture post-MMSE variances
        det_g.reset_priors();
        for row in 0..f.frame.data_rows() {
            let layer = det_g.detect_layer(row);
            post_var_genie.push(layer.mean_post_var());
            let out = genie.decode(row, &[]).unwrap();
            let bits = f.interleavers[row].interleave(&out.hard).unwrap();
            det_g
                .set_row_dd(row, &SoftSymbolVector::known(&c.map(&bits).unwrap()))
                .unwrap();
        }
        let mut det_n = detector(&f);
        let sweep = detect_frame_sce(&mut det_n, &c, None).unwrap();
        for row in 1..f.frame.data_rows() {
            assert!(
                post_var_genie[row] <= sweep.layers[row].mean_post_var() + 1e-12,
                "row {row}"
            );
        }
        let out = run_pce_sdf(&mut detector(&f), &mut genie, &f.interleavers, &c, &cfg).unwrap();
        assert_eq!(out.iterations[0].info, f.info);
    }

    #[test]
    fn feedback_is_a_posteriori() {
        // instrument the decoder: the fed-back row must equal soft symbols of llr_out
        struct Probe<'a> {
            inner: BpCodewordDecoder<'a>,
            outputs: Vec<Vec<f64>>,
        }
        impl CodewordDecoder for Probe<'_> {
            fn codeword_len(&self) -> usize {
                self.inner.codeword_len()
            }
            fn decode(&mut self, index: usize, llr_in: &[f64]) -> Result<DecodeOutput> {
                let out = self.inner.decode(index, llr_in)?;
                self.outputs.push(out.llr_out.clone());
                Ok(DecodeOutput {
                    parity_ok: false,
                    ..out
                })
            }
            fn info_bits(&self, hard: &[u8]) -> Vec<u8> {
                self.inner.info_bits(hard)
            }
        }
        let code = IEEE80211N_648_R12.build();
        let f = pce_frame(&code, 6, 2, 3, 3.0, 6);
        let c = f.frame.constellation();
        let mut probe = Probe {
            inner: BpCodewordDecoder::new(&code, DecoderConfig::default()),
            outputs: Vec::new(),
        };
        let mut det = detector(&f);
        run_pce_sdf(
            &mut det,
            &mut probe,
            &f.interleavers,
            &c,
            &TurboConfig::new(Scheme::Pce, 1),
        )
        .unwrap();
        let dft = crate::modem::UnitaryDft::new(648);
        for row in 0..f.frame.data_rows() {
            let soft =
                soft_symbols_from_llrs(&f.interleavers[row].interleave(&probe.outputs[row]).unwrap(), &c).unwrap();
            let want = dft.inverse(&soft.means).unwrap();
            let got = row_time_means(&det, row, 648);
            for (a, b) in want.iter().zip(&got) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pce_row_independence_in_first_iteration() {
        let code = IEEE80211N_648_R12.build();
        let f = pce_frame(&code, 12, 2, 3, 2.0, 8);
        let c = f.frame.constellation();
        let cfg = TurboConfig::new(Scheme::Pce, 1);
        let mut dec = BpCodewordDecoder::new(&code, DecoderConfig::default());
        let a = run_pce_sdf(&mut detector(&f), &mut dec, &f.interleavers, &c, &cfg).unwrap();
        let corrupt_from = 7;
        let mut rx = f.rx.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for block in rx.iter_mut() {
            for v in block[corrupt_from..].iter_mut() {
                *v += Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            }
        }
        let mut det = SicMmseDetector::new(&f.frame, &f.ch, rx, f.var).unwrap();
        let b = run_pce_sdf(&mut det, &mut dec, &f.interleavers, &c, &cfg).unwrap();
        for row in 0..corrupt_from - 2 {
            assert_eq!(a.iterations[0].info[row], b.iterations[0].info[row], "row {row}");
        }
    }

    #[test]
    fn skip_converged_counts_only_open_rows() {
        let code = IEEE80211N_648_R12.build();
        for seed in 0..4 {
            let f = pce_frame(&code, 10, 3, 4, 1.0, 20 + seed);
            let c = f.frame.constellation();
            let mut dec = BpCodewordDecoder::new(&code, DecoderConfig::default());
            let out = run_pce_sdf(
                &mut detector(&f),
                &mut dec,
                &f.interleavers,
                &c,
                &TurboConfig::new(Scheme::Pce, 3),
            )
            .unwrap();
            for w in out.iterations.windows(2) {
                let open = w[0].unconverged() as u64;
                assert!(w[1].unconverged() <= w[0].unconverged());
                if w[1].executed {
                    assert_eq!(w[1].mmse_solves, open * 648);
                    assert_eq!(w[1].decodes, open);
                } else {
                    assert_eq!(open, 0);
                }
            }
        }
    }

    #[test]
    fn stats_merge_and_ratios() {
        let mut a = RunStats {
            iterations: vec![IterationStats {
                frames: 1,
                bits: 10,
                bit_errors: 2,
                frame_errors: 1,
                codewords: 2,
                unconverged: 1,
                ..Default::default()
            }],
        };
        let b = a.clone();
        a.merge(&b);
        let s = &a.iterations[0];
        assert_eq!((s.frames, s.bits, s.bit_errors), (2, 20, 4));
        assert!((s.ber() - 0.2).abs() < 1e-12 && (s.fer() - 1.0).abs() < 1e-12 && (s.beta() - 0.5).abs() < 1e-12);
        assert_eq!(IterationStats::default().ber(), 0.0);
        assert_eq!("PCE-SDF".parse::<Scheme>().unwrap(), Scheme::Pce);
        assert!("x".parse::<Scheme>().is_err());
    }
}

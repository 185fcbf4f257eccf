//! Gaussian-approximation density evolution for LDPC decoding fed by
//! symmetric-Gaussian-mixture channel LLRs, with optional turbo coupling to a
//! detector model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::mixture::GaussianMixture;
use super::psi::{psi, psi_inv};
use super::q_function;
use crate::channel::BandedMatrix;
use crate::detector::SicMmseDetector;
use crate::error::{Error, Result};
use crate::frame::FrameConfig;
use crate::ldpc::DegreeProfiles;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    /// Decoder iterations per turbo iteration.
    pub dec_iters: usize,
    /// Turbo iterations (detector passes).
    pub turbo_iters: usize,
    /// A check-to-bit mean above this counts as decoded.
    pub decode_limit: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            dec_iters: 1000,
            turbo_iters: 1,
            decode_limit: 100.0,
        }
    }
}

/// Mean and weight of one Gaussian in a bit-to-check message density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
}

/// Bit-node update: component `(j, i)` has weight `π_j λ_i` and mean
/// `μ_j + (i - 1) m_bc`.
pub fn de_bit_update(mix: &GaussianMixture, m_bc: f64, profiles: &DegreeProfiles) -> Vec<Component> {
    let mut out = Vec::with_capacity(mix.len() * profiles.lambda.len());
    for (&w, &mu) in mix.weights.iter().zip(&mix.means) {
        for &(i, lam) in &profiles.lambda {
            out.push(Component {
                weight: w * lam,
                mean: mu + (i as f64 - 1.0) * m_bc,
            });
        }
    }
    out
}

/// Check-node update `Σ_j ρ_j ψ⁻¹[(Σ w ψ(m))^{j-1}]`.
pub fn de_check_update(components: &[Component], profiles: &DegreeProfiles) -> f64 {
    let s: f64 = components.iter().map(|c| c.weight * psi(c.mean)).sum();
    profiles
        .rho
        .iter()
        .map(|&(j, r)| r * psi_inv(s.powi(j as i32 - 1)))
        .sum()
}

/// Runs the decoder recursion from `m_bc = 0`. Returns the trajectory of
/// `m_bc`; stops early once it exceeds `decode_limit` or stalls.
pub fn de_decode(mix: &GaussianMixture, profiles: &DegreeProfiles, iters: usize, decode_limit: f64) -> Vec<f64> {
    let mut traj = Vec::with_capacity(iters.min(4096));
    let mut m = 0.0;
    for _ in 0..iters {
        let next = de_check_update(&de_bit_update(mix, m, profiles), profiles);
        traj.push(next);
        let stalled = (next - m).abs() <= 1e-12 * next.max(1.0);
        m = next;
        if m > decode_limit || stalled {
            break;
        }
    }
    traj
}

/// Maps the prior variance fed back to the detector to the detector's output
/// LLR mixture.
pub trait DetectorModel {
    fn output_mixture(&mut self, prior_var: f64) -> Result<GaussianMixture>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeOutcome {
    /// Final check-to-bit mean of each turbo iteration.
    pub m_bc: Vec<f64>,
    /// Decoder-to-detector mean `Σ λ̃_i i m_bc` of each turbo iteration.
    pub m_to_detector: Vec<f64>,
    pub m_intrinsic: f64,
    pub p_b: f64,
    pub decoded: bool,
}

/// Turbo density evolution. Without a model the channel mixture is reused in
/// every turbo iteration; with one, iteration `k > 1` feeds the detector the
/// prior variance `1 - ψ(m_to_detector)`.
pub fn de_run(
    mix: &GaussianMixture,
    profiles: &DegreeProfiles,
    cfg: &DeConfig,
    mut model: Option<&mut dyn DetectorModel>,
) -> Result<DeOutcome> {
    if cfg.turbo_iters == 0 || cfg.dec_iters == 0 {
        return Err(Error::Analysis(
            "need at least one turbo and one decoder iteration".into(),
        ));
    }
    let mut channel = mix.clone();
    let mut out = DeOutcome {
        m_bc: Vec::new(),
        m_to_detector: Vec::new(),
        m_intrinsic: 0.0,
        p_b: 0.5,
        decoded: false,
    };
    for k in 0..cfg.turbo_iters {
        if k > 0 {
            if let Some(m) = model.as_deref_mut() {
                let prev = *out.m_to_detector.last().expect("previous iteration");
                channel = m.output_mixture(1.0 - psi(prev))?;
            }
        }
        let traj = de_decode(&channel, profiles, cfg.dec_iters, cfg.decode_limit);
        let m_bc = traj.last().copied().unwrap_or(0.0);
        let to_det: f64 = profiles.lambda_node.iter().map(|&(i, f)| f * i as f64 * m_bc).sum();
        out.m_bc.push(m_bc);
        out.m_to_detector.push(to_det);
        out.m_intrinsic = to_det + channel.mean();
        out.decoded = m_bc > cfg.decode_limit;
    }
    out.p_b = 1.0 / (1.0 + out.m_intrinsic.exp());
    Ok(out)
}

/// Whether a single-component channel of mean `2/σ²` decodes.
fn decodes(profiles: &DegreeProfiles, sigma: f64, cfg: &DeConfig) -> bool {
    let mix = GaussianMixture::single(2.0 / (sigma * sigma));
    let traj = de_decode(&mix, profiles, cfg.dec_iters, cfg.decode_limit);
    traj.last().is_some_and(|&m| m > cfg.decode_limit)
}

/// BI-AWGN noise threshold `σ*` by bisection to relative width `1e-4`.
pub fn bi_awgn_threshold(profiles: &DegreeProfiles, cfg: &DeConfig) -> Result<f64> {
    let (mut lo, mut hi) = (0.05, 0.5);
    while decodes(profiles, hi, cfg) {
        lo = hi;
        hi *= 2.0;
        if hi > 100.0 {
            return Err(Error::Analysis("ensemble decodes at any noise level".into()));
        }
    }
    if !decodes(profiles, lo, cfg) {
        return Err(Error::Analysis("ensemble does not decode at low noise".into()));
    }
    while (hi - lo) > 1e-4 * lo {
        let mid = 0.5 * (lo + hi);
        if decodes(profiles, mid, cfg) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Residual bit error fraction `α = Σ λ̃_i Q(sqrt((m_μ0 + i m_bc)/2))` at the
/// BI-AWGN noise level `sigma`, with `m_bc` the DE fixed point there.
pub fn residual_fraction(profiles: &DegreeProfiles, sigma: f64, cfg: &DeConfig) -> f64 {
    let m0 = 2.0 / (sigma * sigma);
    let traj = de_decode(&GaussianMixture::single(m0), profiles, cfg.dec_iters, cfg.decode_limit);
    let m_bc = traj.last().copied().unwrap_or(0.0);
    profiles
        .lambda_node
        .iter()
        .map(|&(i, f)| f * q_function(((m0 + i as f64 * m_bc) / 2.0).sqrt()))
        .sum()
}

/// Detector model built from the SIC-MMSE filter for BPSK and 4QAM: every
/// data symbol's interferers get the same prior variance and each layer of
/// each sampled channel contributes one component of mean `c / σ̄²`, with
/// `σ̄²` the layer's mean post-detection variance and `c = 4` (BPSK) or `2`
/// (4QAM, per bit).
#[derive(Debug, Clone)]
pub struct MmseDetectorModel {
    frame: FrameConfig,
    channels: Vec<Vec<BandedMatrix>>,
    noise_var: f64,
    scale: f64,
}

impl MmseDetectorModel {
    pub fn new(frame: &FrameConfig, channels: Vec<Vec<BandedMatrix>>, noise_var: f64) -> Result<Self> {
        let scale = match frame.mod_order {
            2 => 4.0,
            4 => 2.0,
            q => {
                return Err(Error::Analysis(format!(
                    "the MMSE detector model supports BPSK and 4QAM, not {q}-QAM"
                )))
            }
        };
        if channels.is_empty() {
            return Err(Error::Analysis("need at least one channel sample".into()));
        }
        Ok(MmseDetectorModel {
            frame: frame.clone(),
            channels,
            noise_var,
            scale,
        })
    }
}

impl DetectorModel for MmseDetectorModel {
    fn output_mixture(&mut self, prior_var: f64) -> Result<GaussianMixture> {
        let rows = self.frame.data_rows();
        let zeros = vec![Complex64::new(0.0, 0.0); self.frame.n];
        let vars = vec![prior_var.clamp(0.0, 1.0); self.frame.n];
        let mut means = Vec::new();
        for h in &self.channels {
            let rx = vec![vec![Complex64::new(0.0, 0.0); self.frame.m]; self.frame.n];
            let mut det = SicMmseDetector::with_matrices(&self.frame, h.clone(), rx, self.noise_var)?;
            for row in 0..rows {
                det.set_row_time(row, &zeros, &vars)?;
            }
            for row in 0..rows {
                let layer = det.detect_layer(row);
                means.push(self.scale / layer.mean_post_var().max(1e-12));
            }
        }
        let w = vec![1.0; means.len()];
        GaussianMixture::new(w, means)
    }
}

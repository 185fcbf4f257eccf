//! Semi-analytical performance prediction: the `ψ` function, Gaussian mixture
//! fits of detector LLRs, density evolution and the finite-length model.

mod de;
mod finite;
mod mixture;
mod psi;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::ldpc::DegreeProfiles;

pub use de::{
    bi_awgn_threshold, de_bit_update, de_check_update, de_decode, de_run, residual_fraction, Component, DeConfig,
    DeOutcome, DetectorModel, MmseDetectorModel,
};
pub use finite::{FiniteLengthModel, ALPHA_NOISE_OFFSET};
pub use mixture::{fit_mixture_em, ks_distance, sample_mixture, EmConfig, EmFit, GaussianMixture, MIN_MEAN};
pub use psi::{gauss_hermite, ln_phi, psi, psi_inv, PSI_CLAMP, PSI_GRID_MAX, PSI_GRID_MIN};

/// Gaussian tail `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

pub fn q_inv(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Folds LLRs so positive means correct: `llr * (1 - 2 b)`.
pub fn sign_fold(llrs: &[f64], bits: &[u8]) -> Vec<f64> {
    llrs.iter()
        .zip(bits)
        .map(|(&l, &b)| if b == 0 { l } else { -l })
        .collect()
}

/// Predictions from one set of sign-folded detector LLRs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub label: String,
    pub samples: usize,
    pub mixture: GaussianMixture,
    pub ks: f64,
    pub sigma_threshold: Option<f64>,
    /// Raw channel error rate of the mixture.
    pub p0: f64,
    /// Plain density evolution prediction.
    pub p_b_de: f64,
    /// Finite-length prediction averaged over codewords, when per-codeword
    /// LLRs were given.
    pub p_b_finite: Option<f64>,
    /// Finite-length prediction per codeword position within a frame (the
    /// data row for per-row coding), averaged over frames.
    pub p_b_finite_rows: Option<Vec<f64>>,
}

/// Fits the pooled mixture and runs density evolution; with a finite-length
/// model, also fits one mixture per codeword and averages its prediction.
/// `codewords` holds `per_frame` consecutive codewords for each frame.
#[allow(clippy::too_many_arguments)]
pub fn analyze_llrs(
    label: &str,
    codewords: &[Vec<f64>],
    per_frame: usize,
    profiles: &DegreeProfiles,
    em: &EmConfig,
    codeword_em: &EmConfig,
    de_cfg: &DeConfig,
    finite: Option<&FiniteLengthModel>,
) -> Result<AnalysisReport> {
    let pooled: Vec<f64> = codewords.iter().flatten().copied().collect();
    if pooled.is_empty() {
        return Err(Error::Analysis("no LLRs to analyse".into()));
    }
    let fit = fit_mixture_em(&pooled, em)?;
    let de = de_run(&fit.mixture, profiles, de_cfg, None)?;
    if per_frame == 0 || !codewords.len().is_multiple_of(per_frame) {
        return Err(Error::Analysis(format!(
            "{} codewords do not split into frames of {per_frame}",
            codewords.len()
        )));
    }
    let (p_b_finite, p_b_finite_rows) = match finite {
        Some(model) => {
            let per: Vec<f64> = codewords
                .iter()
                .map(|cw| fit_mixture_em(cw, codeword_em).map(|f| model.bit_error(f.mixture.error_probability())))
                .collect::<Result<_>>()?;
            let frames = (codewords.len() / per_frame) as f64;
            let rows = (0..per_frame)
                .map(|r| per.iter().skip(r).step_by(per_frame).sum::<f64>() / frames)
                .collect();
            (Some(per.iter().sum::<f64>() / per.len() as f64), Some(rows))
        }
        None => (None, None),
    };
    Ok(AnalysisReport {
        label: label.to_string(),
        samples: pooled.len(),
        ks: ks_distance(&pooled, &fit.mixture),
        p0: fit.mixture.error_probability(),
        mixture: fit.mixture,
        sigma_threshold: finite.map(|f| f.sigma_th),
        p_b_de: de.p_b,
        p_b_finite,
        p_b_finite_rows,
    })
}

/// SNR at which a curve first crosses `target`, by linear interpolation of
/// `log10` values between adjacent points. Points must be sorted by SNR.
pub fn crossing_snr(snr_db: &[f64], values: &[f64], target: f64) -> Option<f64> {
    let lg = |v: f64| v.max(1e-300).log10();
    let t = lg(target);
    for i in 1..snr_db.len().min(values.len()) {
        let (a, b) = (lg(values[i - 1]), lg(values[i]));
        if a >= t && b <= t {
            if a == b {
                return Some(snr_db[i - 1]);
            }
            return Some(snr_db[i - 1] + (a - t) / (a - b) * (snr_db[i] - snr_db[i - 1]));
        }
    }
    None
}

//! Finite-length bit error prediction for per-row decoding.
//!
//! A codeword of length `n_c` sees an observed raw error rate `p_obs` spread
//! around its mean `p0` with variance `p0 (1 - p0) / n_c`. The codeword fails
//! when `p_obs` exceeds the threshold error rate `p_th`, and a failed codeword
//! leaves a fraction `α` of its bits in error.

use serde::{Deserialize, Serialize};

use super::de::{bi_awgn_threshold, residual_fraction, DeConfig};
use super::mixture::GaussianMixture;
use super::q_function;
use crate::error::{Error, Result};
use crate::ldpc::DegreeProfiles;

/// How far above the threshold noise level `α` is evaluated.
pub const ALPHA_NOISE_OFFSET: f64 = 1.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteLengthModel {
    pub n_c: usize,
    /// BI-AWGN threshold `σ*` of the ensemble.
    pub sigma_th: f64,
    /// Raw error rate at the threshold, `Q(1/σ*)`.
    pub p_th: f64,
    pub alpha: f64,
}

impl FiniteLengthModel {
    pub fn new(profiles: &DegreeProfiles, n_c: usize, cfg: &DeConfig) -> Result<Self> {
        Self::with_offset(profiles, n_c, cfg, ALPHA_NOISE_OFFSET)
    }

    /// As [`FiniteLengthModel::new`], with `α` taken at `noise_offset · σ*`.
    pub fn with_offset(profiles: &DegreeProfiles, n_c: usize, cfg: &DeConfig, noise_offset: f64) -> Result<Self> {
        if !(noise_offset >= 1.0 && noise_offset.is_finite()) {
            return Err(Error::Analysis(format!(
                "noise offset {noise_offset} must be at least 1"
            )));
        }
        let sigma_th = bi_awgn_threshold(profiles, cfg)?;
        let alpha = residual_fraction(profiles, noise_offset * sigma_th, cfg);
        Self::from_parts(n_c, sigma_th, alpha)
    }

    pub fn from_parts(n_c: usize, sigma_th: f64, alpha: f64) -> Result<Self> {
        if n_c == 0 {
            return Err(Error::Analysis("codeword length must be positive".into()));
        }
        let p_th = q_function(1.0 / sigma_th);
        if !(p_th > 0.0 && p_th < 1.0) {
            return Err(Error::Analysis(format!(
                "threshold error rate {p_th} is outside (0, 1)"
            )));
        }
        Ok(FiniteLengthModel {
            n_c,
            sigma_th,
            p_th,
            alpha,
        })
    }

    /// Block error probability `Q((p_th - p0) / σ_obs)` for mean raw error
    /// rate `p0`.
    pub fn block_error(&self, p0: f64) -> f64 {
        let p0 = p0.clamp(0.0, 1.0);
        let sd = (p0 * (1.0 - p0) / self.n_c as f64).sqrt();
        if sd == 0.0 {
            return if p0 > self.p_th { 1.0 } else { 0.0 };
        }
        q_function((self.p_th - p0) / sd)
    }

    pub fn bit_error(&self, p0: f64) -> f64 {
        self.alpha * self.block_error(p0)
    }

    /// Average predicted bit error over per-codeword LLR mixtures.
    pub fn predict(&self, mixtures: &[GaussianMixture]) -> Result<f64> {
        if mixtures.is_empty() {
            return Err(Error::Analysis("no mixtures to predict from".into()));
        }
        let sum: f64 = mixtures.iter().map(|m| self.bit_error(m.error_probability())).sum();
        Ok(sum / mixtures.len() as f64)
    }
}

//! Cross-domain SIC-MMSE detection.
//!
//! Each data symbol `s[n, m]` is seen by the `L + 1` received samples
//! `r_n[m..=m+L]`. Layers (delay rows) are detected in ascending order: soft
//! interference cancellation and an MMSE filter per block in the time domain,
//! then a symbol-wise posterior in the Doppler domain, whose soft estimates
//! are carried back to the time domain as priors for the following layers.
//!
//! The detector keeps `residual[n] = r_n - H_n s̄_n` up to date so that the
//! cancellation for one symbol only has to add back its own contribution.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{extract_subchannel, BandedMatrix, ChannelRealization, SubChannel};
use crate::error::{Error, Result};
use crate::frame::{FrameConfig, QamConstellation, SoftSymbolVector, LLR_CLAMP, SYMBOL_ENERGY, VAR_FLOOR};
use crate::modem::UnitaryDft;

/// `μ` below which a symbol is treated as erased.
pub const MU_ERASURE: f64 = 1e-9;

const RIDGE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Output of the MMSE filter for one symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmseOutput {
    /// Bias-normalised estimate `ŝ / μ`.
    pub estimate: Complex64,
    pub mu: f64,
    /// `σ²_z̃ = (μ - μ²) / μ² · E_s`.
    pub post_var: f64,
    pub erased: bool,
}

/// Time-domain detection of one layer across all blocks, plus its
/// Doppler-domain view.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerEstimate {
    pub row: usize,
    pub time: Vec<MmseOutput>,
    /// Unitary DFT of the normalised time-domain estimates.
    pub dd: Vec<Complex64>,
    /// Common Doppler-domain noise variance (mean of the time-domain ones).
    pub dd_var: f64,
}

impl LayerEstimate {
    pub fn mean_post_var(&self) -> f64 {
        self.time.iter().map(|o| o.post_var).sum::<f64>() / self.time.len() as f64
    }
}

/// Symbol posteriors and bit LLRs of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DdPosterior {
    pub soft: SoftSymbolVector,
    /// `log2 |Q|` LLRs per symbol, symbol-major, positive favouring bit 0.
    pub llrs: Vec<f64>,
}

/// Per-symbol Doppler-domain decision.
///
/// The posterior is `p(q | y) ∝ prior(q) exp(-|y - q|² / σ²)`; `label_priors`
/// holds `|Q|` probabilities per symbol or `None` for uniform priors. The bit
/// LLRs use the likelihood alone (natural log), clamped to `±LLR_CLAMP`.
pub fn dd_posterior(
    y: &[Complex64],
    var: f64,
    label_priors: Option<&[f64]>,
    constellation: &QamConstellation,
) -> Result<DdPosterior> {
    let q = constellation.order();
    let bps = constellation.bits_per_symbol();
    if let Some(p) = label_priors {
        if p.len() != y.len() * q {
            return Err(Error::Size {
                expected: y.len() * q,
                actual: p.len(),
            });
        }
    }
    let var = var.max(VAR_FLOOR);
    let points = constellation.points();
    let mut soft = SoftSymbolVector::with_capacity(y.len());
    let mut llrs = Vec::with_capacity(y.len() * bps);
    let mut metric = vec![0.0; q];
    let mut post = vec![0.0; q];
    for (i, &yi) in y.iter().enumerate() {
        for (mt, pt) in metric.iter_mut().zip(points) {
            *mt = -(yi - pt).norm_sqr() / var;
        }
        for p in 0..bps {
            let (mut a, mut b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (label, &mt) in metric.iter().enumerate() {
                if constellation.bit(label, p) == 0 {
                    a = log_add(a, mt);
                } else {
                    b = log_add(b, mt);
                }
            }
            llrs.push((a - b).clamp(-LLR_CLAMP, LLR_CLAMP));
        }

        let mut best = f64::NEG_INFINITY;
        for (label, (ps, &mt)) in post.iter_mut().zip(&metric).enumerate() {
            *ps = match label_priors {
                Some(pr) => {
                    let p = pr[i * q + label];
                    if p > 0.0 {
                        mt + p.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                }
                None => mt,
            };
            best = best.max(*ps);
        }
        let mut total = 0.0;
        for ps in post.iter_mut() {
            *ps = (*ps - best).exp();
            total += *ps;
        }
        let mut mean = ZERO;
        let mut energy = 0.0;
        for (ps, pt) in post.iter().zip(points) {
            let w = ps / total;
            mean += pt * w;
            energy += pt.norm_sqr() * w;
        }
        soft.means.push(mean);
        soft.variances
            .push((energy - mean.norm_sqr()).clamp(VAR_FLOOR, SYMBOL_ENERGY));
    }
    Ok(DdPosterior { soft, llrs })
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Diagonal of `F† diag(v) F` for the unitary DFT `F`: every entry equals the
/// mean of `v`. The same holds in the other direction.
pub fn transport_covariance(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    vec![mean; v.len()]
}

/// Iterative SIC-MMSE detector state for one frame.
#[derive(Debug, Clone)]
pub struct SicMmseDetector {
    m: usize,
    n: usize,
    l: usize,
    noise_var: f64,
    h: Vec<BandedMatrix>,
    rx: Vec<Vec<Complex64>>,
    /// Time-domain prior means, `[n * m + row]`.
    means: Vec<Complex64>,
    vars: Vec<f64>,
    residual: Vec<Vec<Complex64>>,
    dft: UnitaryDft,
    mmse_solves: u64,
}

impl SicMmseDetector {
    pub fn new(
        frame: &FrameConfig,
        channel: &ChannelRealization,
        rx: Vec<Vec<Complex64>>,
        noise_var: f64,
    ) -> Result<Self> {
        if channel.m != frame.m || channel.n != frame.n {
            return Err(Error::Channel("channel dimensions do not match the frame".into()));
        }
        if channel.l_max > frame.l {
            return Err(Error::Channel(format!(
                "maximum delay {} exceeds the zero padding {}",
                channel.l_max, frame.l
            )));
        }
        Self::with_matrices(frame, channel.block_matrices(), rx, noise_var)
    }

    pub fn with_matrices(
        frame: &FrameConfig,
        h: Vec<BandedMatrix>,
        rx: Vec<Vec<Complex64>>,
        noise_var: f64,
    ) -> Result<Self> {
        if rx.len() != frame.n || h.len() != frame.n {
            return Err(Error::Size {
                expected: frame.n,
                actual: rx.len().min(h.len()),
            });
        }
        if let Some(b) = rx.iter().find(|b| b.len() != frame.m) {
            return Err(Error::Size {
                expected: frame.m,
                actual: b.len(),
            });
        }
        let mut det = SicMmseDetector {
            m: frame.m,
            n: frame.n,
            l: frame.l,
            noise_var: noise_var.max(0.0),
            h,
            residual: rx.clone(),
            rx,
            means: vec![ZERO; frame.m * frame.n],
            vars: vec![0.0; frame.m * frame.n],
            dft: UnitaryDft::new(frame.n),
            mmse_solves: 0,
        };
        det.reset_priors();
        Ok(det)
    }

    pub fn data_rows(&self) -> usize {
        self.m - self.l
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Number of per-symbol MMSE solves so far.
    pub fn mmse_solves(&self) -> u64 {
        self.mmse_solves
    }

    /// Zero mean and variance `E_s` for every data symbol; padding stays
    /// known to be zero.
    pub fn reset_priors(&mut self) {
        for n in 0..self.n {
            for row in 0..self.m {
                let i = n * self.m + row;
                self.means[i] = ZERO;
                self.vars[i] = if row < self.data_rows() { SYMBOL_ENERGY } else { 0.0 };
            }
        }
        self.residual.clone_from(&self.rx);
    }

    pub fn prior(&self, n: usize, row: usize) -> (Complex64, f64) {
        let i = n * self.m + row;
        (self.means[i], self.vars[i])
    }

    pub fn residual(&self, n: usize) -> &[Complex64] {
        &self.residual[n]
    }

    pub fn block_matrix(&self, n: usize) -> &BandedMatrix {
        &self.h[n]
    }

    pub fn received(&self, n: usize) -> &[Complex64] {
        &self.rx[n]
    }

    pub fn received_blocks(&self) -> Vec<Vec<Complex64>> {
        self.rx.clone()
    }

    /// Replaces the time-domain priors of one row and updates the residuals.
    pub fn set_row_time(&mut self, row: usize, means: &[Complex64], vars: &[f64]) -> Result<()> {
        if row >= self.data_rows() {
            return Err(Error::Frame(format!("row {row} is not a data row")));
        }
        if means.len() != self.n || vars.len() != self.n {
            return Err(Error::Size {
                expected: self.n,
                actual: means.len().min(vars.len()),
            });
        }
        for n in 0..self.n {
            let i = n * self.m + row;
            let delta = means[n] - self.means[i];
            self.means[i] = means[n];
            self.vars[i] = vars[n].clamp(0.0, SYMBOL_ENERGY);
            if delta != ZERO {
                let h = &self.h[n];
                let (lo, hi) = h.column_rows(row);
                for q in lo..=hi {
                    self.residual[n][q] -= h.get(q, row) * delta;
                }
            }
        }
        Ok(())
    }

    /// Carries Doppler-domain soft symbols of one row to the time domain:
    /// means by the unitary IDFT, variances by [`transport_covariance`].
    pub fn set_row_dd(&mut self, row: usize, soft: &SoftSymbolVector) -> Result<()> {
        if soft.len() != self.n {
            return Err(Error::Size {
                expected: self.n,
                actual: soft.len(),
            });
        }
        let mut means = soft.means.clone();
        self.dft.inverse_in_place(&mut means);
        let vars = transport_covariance(&soft.variances);
        self.set_row_time(row, &means, &vars)
    }

    /// Soft interference cancellation for symbol `(n, row)`: the received
    /// window with every other symbol's prior mean removed.
    pub fn soft_cancel(&self, n: usize, row: usize) -> (Vec<Complex64>, SubChannel) {
        let sub = extract_subchannel(&self.h[n], row, self.l);
        let (mean, _) = self.prior(n, row);
        let r = (0..=self.l)
            .map(|i| self.residual[n][row + i] + sub.matrix[(i, sub.target)] * mean)
            .collect();
        (r, sub)
    }

    /// MMSE filter for symbol `(n, row)` with the current priors.
    pub fn mmse_filter(&mut self, n: usize, row: usize) -> MmseOutput {
        let (r, sub) = self.soft_cancel(n, row);
        let col_vars: Vec<f64> = (0..sub.matrix.ncols())
            .map(|c| {
                if c == sub.target {
                    SYMBOL_ENERGY
                } else {
                    self.vars[n * self.m + sub.col_offset + c]
                }
            })
            .collect();
        self.mmse_solves += 1;
        mmse_solve(&sub, &col_vars, self.noise_var, &r)
    }

    /// Detects one layer in every block and moves it to the Doppler domain.
    pub fn detect_layer(&mut self, row: usize) -> LayerEstimate {
        let time: Vec<MmseOutput> = (0..self.n).map(|n| self.mmse_filter(n, row)).collect();
        let mut dd: Vec<Complex64> = time.iter().map(|o| o.estimate).collect();
        self.dft.forward_in_place(&mut dd);
        let dd_var = time.iter().map(|o| o.post_var).sum::<f64>() / self.n as f64;
        LayerEstimate { row, time, dd, dd_var }
    }
}

/// `w = h† Σ⁻¹` with `Σ = H diag(v) H† + σ² I`, then `ŝ = w r / μ`.
fn mmse_solve(sub: &SubChannel, col_vars: &[f64], noise_var: f64, r: &[Complex64]) -> MmseOutput {
    let h = &sub.matrix;
    let d = h.nrows();
    let mut sigma = DMatrix::<Complex64>::zeros(d, d);
    for (c, &v) in col_vars.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let col = h.column(c);
        for j in 0..d {
            let hj = col[j].conj() * v;
            if hj == ZERO {
                continue;
            }
            for i in j..d {
                sigma[(i, j)] += col[i] * hj;
            }
        }
    }
    for i in 0..d {
        sigma[(i, i)] += noise_var;
        for j in 0..i {
            sigma[(j, i)] = sigma[(i, j)].conj();
        }
    }

    let target = DVector::from_iterator(d, h.column(sub.target).iter().copied());
    let chol = if noise_var > 0.0 {
        Cholesky::new(sigma.clone())
    } else {
        None
    };
    let chol = chol.or_else(|| {
        let trace: f64 = (0..d).map(|i| sigma[(i, i)].re).sum();
        let eps = RIDGE * trace.max(f64::MIN_POSITIVE) / d as f64;
        let mut reg = sigma;
        for i in 0..d {
            reg[(i, i)] += eps;
        }
        Cholesky::new(reg)
    });
    let Some(chol) = chol else {
        return erased();
    };
    let u = chol.solve(&target);
    let mu = target.dotc(&u).re;
    if !mu.is_finite() || mu < MU_ERASURE {
        return erased();
    }
    let mu = mu.min(1.0);
    let s: Complex64 = u.iter().zip(r).map(|(ui, ri)| ui.conj() * ri).sum();
    MmseOutput {
        estimate: s / mu,
        mu,
        post_var: ((mu - mu * mu) / (mu * mu) * SYMBOL_ENERGY).max(0.0),
        erased: false,
    }
}

fn erased() -> MmseOutput {
    MmseOutput {
        estimate: ZERO,
        mu: 0.0,
        post_var: SYMBOL_ENERGY,
        erased: true,
    }
}

/// One detection sweep with Doppler-domain posterior feedback between layers.
#[derive(Debug, Clone, PartialEq)]
pub struct SceSweep {
    /// Row-major LLRs: row, then symbol, then bit.
    pub llrs: Vec<f64>,
    pub posteriors: Vec<SoftSymbolVector>,
    pub layers: Vec<LayerEstimate>,
}

/// Detects every layer in order, feeding each layer's Doppler-domain
/// posterior back as the time-domain prior of that row before moving on.
///
/// `label_priors` holds `N |Q|` label probabilities per data row (row-major)
/// or `None` for uniform symbol priors.
pub fn detect_frame_sce(
    det: &mut SicMmseDetector,
    constellation: &QamConstellation,
    label_priors: Option<&[f64]>,
) -> Result<SceSweep> {
    let rows = det.data_rows();
    let per_row = det.n * constellation.order();
    if let Some(p) = label_priors {
        if p.len() != rows * per_row {
            return Err(Error::Size {
                expected: rows * per_row,
                actual: p.len(),
            });
        }
    }
    let mut sweep = SceSweep {
        llrs: Vec::with_capacity(rows * det.n * constellation.bits_per_symbol()),
        posteriors: Vec::with_capacity(rows),
        layers: Vec::with_capacity(rows),
    };
    for row in 0..rows {
        let layer = det.detect_layer(row);
        let priors = label_priors.map(|p| &p[row * per_row..(row + 1) * per_row]);
        let post = dd_posterior(&layer.dd, layer.dd_var, priors, constellation)?;
        det.set_row_dd(row, &post.soft)?;
        sweep.llrs.extend_from_slice(&post.llrs);
        sweep.posteriors.push(post.soft);
        sweep.layers.push(layer);
    }
    Ok(sweep)
}

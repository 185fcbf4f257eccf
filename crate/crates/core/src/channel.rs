//! Delay-Doppler multipath channel: random realizations, the per-block
//! time-domain matrices `H_n`, the per-symbol sub-channels and AWGN.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{FrameConfig, SYMBOL_ENERGY};

/// One resolvable path: complex gain, integer delay tap (units of `T/M`) and
/// real Doppler tap (units of `1/(NT)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub gain: Complex64,
    pub delay_tap: usize,
    pub doppler_tap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub paths: Vec<Path>,
    pub l_max: usize,
    pub m: usize,
    pub n: usize,
}

impl ChannelRealization {
    /// Single unit path with neither delay nor Doppler.
    pub fn identity(frame: &FrameConfig) -> Self {
        ChannelRealization {
            paths: vec![Path {
                gain: Complex64::new(1.0, 0.0),
                delay_tap: 0,
                doppler_tap: 0.0,
            }],
            l_max: 0,
            m: frame.m,
            n: frame.n,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ch: ChannelRealization = serde_json::from_str(s)?;
        if ch.paths.is_empty() {
            return Err(Error::Channel("no paths".into()));
        }
        if ch.paths.iter().any(|p| p.delay_tap > ch.l_max) {
            return Err(Error::Channel("delay tap beyond l_max".into()));
        }
        Ok(ch)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn block_matrix(&self, n: usize) -> BandedMatrix {
        build_block_matrix(self, n)
    }

    pub fn block_matrices(&self) -> Vec<BandedMatrix> {
        (0..self.n).map(|n| build_block_matrix(self, n)).collect()
    }
}

/// Draws `paths` paths: delay tap 0 for the first path and distinct taps from
/// `1..=l_max` for the rest, Doppler taps iid `U(-k_max, k_max)`, complex
/// Gaussian gains normalised to unit total power.
pub fn draw_channel(
    seed: u64,
    paths: usize,
    l_max: usize,
    k_max: f64,
    frame: &FrameConfig,
) -> Result<ChannelRealization> {
    if paths == 0 {
        return Err(Error::Channel("need at least one path".into()));
    }
    if l_max > frame.l {
        return Err(Error::Channel(format!(
            "l_max = {l_max} exceeds the zero padding L = {}",
            frame.l
        )));
    }
    if paths > l_max + 1 {
        return Err(Error::Channel(format!(
            "{paths} paths cannot take distinct delay taps in 0..={l_max}"
        )));
    }
    if k_max.is_nan() || k_max < 0.0 {
        return Err(Error::Channel("k_max must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delays = vec![0usize];
    if paths > 1 {
        delays.extend(sample(&mut rng, l_max, paths - 1).into_iter().map(|d| d + 1));
    }
    let mut out: Vec<Path> = delays
        .into_iter()
        .map(|delay_tap| {
            let doppler_tap = if k_max > 0.0 {
                rng.random_range(-k_max..=k_max)
            } else {
                0.0
            };
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Path {
                gain: Complex64::new(re, im),
                delay_tap,
                doppler_tap,
            }
        })
        .collect();
    let power: f64 = out.iter().map(|p| p.gain.norm_sqr()).sum();
    let scale = power.sqrt().recip();
    for p in &mut out {
        p.gain *= scale;
    }
    Ok(ChannelRealization {
        paths: out,
        l_max,
        m: frame.m,
        n: frame.n,
    })
}

/// Square lower-banded matrix; entry `(q, q - d)` for `d in 0..=bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    dim: usize,
    bandwidth: usize,
    data: Vec<Complex64>,
}

impl BandedMatrix {
    pub fn zeros(dim: usize, bandwidth: usize) -> Self {
        BandedMatrix {
            dim,
            bandwidth,
            data: vec![Complex64::new(0.0, 0.0); dim * (bandwidth + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if col > row || row - col > self.bandwidth {
            return Complex64::new(0.0, 0.0);
        }
        self.data[row * (self.bandwidth + 1) + (row - col)]
    }

    fn add(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * (self.bandwidth + 1) + (row - col)] += v;
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |r, c| self.get(r, c))
    }

    pub fn apply(&self, s: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|q| {
                let lo = q.saturating_sub(self.bandwidth);
                (lo..=q).map(|c| self.get(q, c) * s[c]).sum()
            })
            .collect()
    }

    /// Non-zero span of column `col` as `(first_row, last_row)`.
    pub fn column_rows(&self, col: usize) -> (usize, usize) {
        (col, (col + self.bandwidth).min(self.dim - 1))
    }
}

/// `[H_n]_{q, q - l_p} += h_p exp(j 2 pi k_p (nM + q - l_p) / (MN))`.
pub fn build_block_matrix(ch: &ChannelRealization, n: usize) -> BandedMatrix {
    let dim = ch.m;
    let mut h = BandedMatrix::zeros(dim, ch.l_max);
    let mn = (ch.m * ch.n) as f64;
    for path in &ch.paths {
        let l = path.delay_tap;
        for q in l..dim {
            let t = (n * ch.m + q - l) as f64;
            let phase = 2.0 * std::f64::consts::PI * path.doppler_tap * t / mn;
            h.add(q, q - l, path.gain * Complex64::from_polar(1.0, phase));
        }
    }
    h
}

/// Block of `H_n` seen by the symbol in layer `m`: rows `m..=m+L`, columns
/// `m'..=m+L` with `m' = max(m - L, 0)`; column `target = min(m, L)` holds the
/// symbol itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SubChannel {
    pub matrix: DMatrix<Complex64>,
    pub row_offset: usize,
    pub col_offset: usize,
    pub target: usize,
}

impl SubChannel {
    pub fn target_column(&self) -> nalgebra::DVectorView<'_, Complex64> {
        self.matrix.column(self.target)
    }
}

pub fn extract_subchannel(h: &BandedMatrix, m: usize, zp_len: usize) -> SubChannel {
    let col_offset = m.saturating_sub(zp_len);
    let target = m.min(zp_len);
    let rows = zp_len + 1;
    let cols = target + zp_len + 1;
    debug_assert!(m + zp_len < h.dim(), "layer {m} outside the data rows");
    let matrix = DMatrix::from_fn(rows, cols, |r, c| h.get(m + r, col_offset + c));
    SubChannel {
        matrix,
        row_offset: m,
        col_offset,
        target,
    }
}

/// Noise variance per complex sample for a per-symbol `E_s/N_0` in dB.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        SYMBOL_ENERGY / 10f64.powf(snr_db / 10.0)
    }
}

/// Circularly-symmetric complex Gaussian samples of variance `var`.
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R, len: usize, var: f64) -> Vec<Complex64> {
    let sd = (var / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * sd, im * sd)
        })
        .collect()
}

/// `r_n = H_n s_n + z_n` for every block. Returns the received blocks and the
/// noise variance used.
pub fn apply_channel<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    blocks: &[Vec<Complex64>],
    snr_db: f64,
    rng: &mut R,
) -> Result<(Vec<Vec<Complex64>>, f64)> {
    if blocks.len() != ch.n {
        return Err(Error::Size {
            expected: ch.n,
            actual: blocks.len(),
        });
    }
    let var = noise_variance(snr_db);
    let mut out = Vec::with_capacity(blocks.len());
    for (n, s) in blocks.iter().enumerate() {
        if s.len() != ch.m {
            return Err(Error::Size {
                expected: ch.m,
                actual: s.len(),
            });
        }
        let mut r = build_block_matrix(ch, n).apply(s);
        if var > 0.0 {
            for (ri, zi) in r.iter_mut().zip(complex_noise(rng, ch.m, var)) {
                *ri += zi;
            }
        }
        out.push(r);
    }
    Ok((out, var))
}

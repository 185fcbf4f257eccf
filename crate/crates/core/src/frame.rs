//! Frame geometry, Gray-labelled QAM constellations, interleaving and the
//! LLR / soft-symbol conversions shared by the detector and the decoders.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude at which every LLR in the crate is saturated.
pub const LLR_CLAMP: f64 = 30.0;

/// Floor applied to symbol variances.
pub const VAR_FLOOR: f64 = 1e-12;

/// Average symbol energy of every constellation built here.
pub const SYMBOL_ENERGY: f64 = 1.0;

/// Geometry of one zero-padded ODDM frame.
///
/// Rows `0..m - l` of the delay-Doppler grid carry data; the last `l` rows are
/// null symbols that isolate the `n` time-domain blocks from each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Delay bins per frame.
    pub m: usize,
    /// Doppler bins (subcarriers).
    pub n: usize,
    /// Zero-padding length in delay bins.
    pub l: usize,
    /// Subcarrier spacing in Hz.
    #[serde(default = "default_delta_f")]
    pub delta_f: f64,
    /// Symbol interval in seconds, `1 / delta_f`.
    #[serde(default = "default_symbol_period")]
    pub symbol_period: f64,
    #[serde(default = "default_carrier")]
    pub carrier_hz: f64,
    pub mod_order: usize,
}

fn default_delta_f() -> f64 {
    15e3
}

fn default_symbol_period() -> f64 {
    1.0 / 15e3
}

fn default_carrier() -> f64 {
    4e9
}

impl FrameConfig {
    pub fn new(m: usize, n: usize, l: usize, mod_order: usize) -> Result<Self> {
        let cfg = FrameConfig {
            m,
            n,
            l,
            delta_f: default_delta_f(),
            symbol_period: default_symbol_period(),
            carrier_hz: default_carrier(),
            mod_order,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m <= self.l {
            return Err(Error::Frame(format!("need M > L, got M = {}, L = {}", self.m, self.l)));
        }
        if self.n == 0 {
            return Err(Error::Frame("N must be at least 1".into()));
        }
        if !matches!(self.mod_order, 2 | 4 | 16 | 64) {
            return Err(Error::Frame(format!(
                "unsupported constellation size {}",
                self.mod_order
            )));
        }
        if self.delta_f.is_nan() || self.delta_f <= 0.0 || ((self.symbol_period * self.delta_f) - 1.0).abs() > 1e-12 {
            return Err(Error::Frame(format!(
                "T * delta_f must equal 1 (T = {}, delta_f = {})",
                self.symbol_period, self.delta_f
            )));
        }
        Ok(())
    }

    pub fn data_rows(&self) -> usize {
        self.m - self.l
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.mod_order.trailing_zeros() as usize
    }

    /// Coded bits carried by one data row.
    pub fn bits_per_row(&self) -> usize {
        self.n * self.bits_per_symbol()
    }

    pub fn data_symbols(&self) -> usize {
        self.data_rows() * self.n
    }

    pub fn constellation(&self) -> QamConstellation {
        QamConstellation::new(self.mod_order).expect("validated order")
    }
}

/// Square QAM (or BPSK) with axis-separable Gray labelling and unit average
/// energy. `points[label]` is the point carrying `label`; bit `p` of a label is
/// the `p`-th bit of the symbol in stream order (bit 0 is the most significant).
#[derive(Debug, Clone)]
pub struct QamConstellation {
    order: usize,
    bits: usize,
    points: Vec<Complex64>,
}

fn gray_to_index(mut g: usize) -> usize {
    let mut i = 0;
    while g != 0 {
        i ^= g;
        g >>= 1;
    }
    i
}

/// Gray-labelled PAM level for `label` on an axis with `bits` bits; label 0
/// sits on the most positive level.
fn pam_level(label: usize, bits: usize) -> f64 {
    let levels = 1usize << bits;
    let i = gray_to_index(label);
    (levels - 1) as f64 - 2.0 * i as f64
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        let bits = match order {
            2 => 1,
            4 => 2,
            16 => 4,
            64 => 6,
            _ => return Err(Error::Frame(format!("unsupported constellation size {order}"))),
        };
        let points = if bits == 1 {
            vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]
        } else {
            let half = bits / 2;
            let mask = (1usize << half) - 1;
            let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
            (0..order)
                .map(|label| {
                    let re = pam_level(label >> half, half);
                    let im = pam_level(label & mask, half);
                    Complex64::new(re, im) / scale
                })
                .collect()
        };
        Ok(QamConstellation { order, bits, points })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Value of bit `p` in `label`.
    #[inline]
    pub fn bit(&self, label: usize, p: usize) -> u8 {
        ((label >> (self.bits - 1 - p)) & 1) as u8
    }

    /// Labels whose bit `p` equals `value` (the sets Q_0^p and Q_1^p).
    pub fn subset(&self, p: usize, value: u8) -> Vec<usize> {
        (0..self.order).filter(|&q| self.bit(q, p) == value).collect()
    }

    pub fn label_of_bits(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if !bits.len().is_multiple_of(self.bits) {
            return Err(Error::Size {
                expected: bits.len().div_ceil(self.bits) * self.bits,
                actual: bits.len(),
            });
        }
        Ok(bits
            .chunks_exact(self.bits)
            .map(|chunk| self.points[self.label_of_bits(chunk)])
            .collect())
    }

    /// Nearest-point label.
    pub fn nearest(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (q, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    pub fn hard_demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits);
        for &y in symbols {
            let q = self.nearest(y);
            out.extend((0..self.bits).map(|p| self.bit(q, p)));
        }
        out
    }

    /// Label probabilities implied by independent bit LLRs (positive means 0).
    pub fn label_probabilities(&self, llrs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(llrs.len(), self.bits);
        let mut p0 = [0.0f64; 6];
        for (p, &l) in llrs.iter().enumerate() {
            let t = (l.clamp(-LLR_CLAMP, LLR_CLAMP) / 2.0).tanh();
            p0[p] = 0.5 * (1.0 + t);
        }
        for (q, slot) in out.iter_mut().enumerate().take(self.order) {
            let mut prob = 1.0;
            for (p, &pz) in p0.iter().enumerate().take(self.bits) {
                prob *= if self.bit(q, p) == 0 { pz } else { 1.0 - pz };
            }
            *slot = prob;
        }
    }

    /// Mean and variance of the symbol whose bits carry the given LLRs.
    pub fn soft_symbol(&self, llrs: &[f64]) -> (Complex64, f64) {
        let mut probs = [0.0f64; 64];
        self.label_probabilities(llrs, &mut probs);
        let mut mean = Complex64::new(0.0, 0.0);
        let mut energy = 0.0;
        for (q, pt) in self.points.iter().enumerate() {
            mean += pt * probs[q];
            energy += pt.norm_sqr() * probs[q];
        }
        let var = (energy - mean.norm_sqr()).clamp(VAR_FLOOR, SYMBOL_ENERGY);
        (mean, var)
    }
}

/// Maps a bit stream onto constellation points.
pub fn map_bits_to_symbols(bits: &[u8], constellation: &QamConstellation) -> Result<Vec<Complex64>> {
    constellation.map(bits)
}

/// Converts per-bit LLRs (one group of `log2 |Q|` per symbol) into soft symbols.
pub fn soft_symbols_from_llrs(llrs: &[f64], constellation: &QamConstellation) -> Result<SoftSymbolVector> {
    let bps = constellation.bits_per_symbol();
    if !llrs.len().is_multiple_of(bps) {
        return Err(Error::Size {
            expected: llrs.len().div_ceil(bps) * bps,
            actual: llrs.len(),
        });
    }
    let mut out = SoftSymbolVector::with_capacity(llrs.len() / bps);
    for group in llrs.chunks_exact(bps) {
        let (m, v) = constellation.soft_symbol(group);
        out.means.push(m);
        out.variances.push(v);
    }
    Ok(out)
}

/// Per-symbol posterior means and variances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SoftSymbolVector {
    pub means: Vec<Complex64>,
    pub variances: Vec<f64>,
}

impl SoftSymbolVector {
    pub fn with_capacity(n: usize) -> Self {
        SoftSymbolVector {
            means: Vec::with_capacity(n),
            variances: Vec::with_capacity(n),
        }
    }

    /// Uninformative estimates: zero mean, full symbol energy.
    pub fn uninformative(n: usize) -> Self {
        SoftSymbolVector {
            means: vec![Complex64::new(0.0, 0.0); n],
            variances: vec![SYMBOL_ENERGY; n],
        }
    }

    /// Perfectly known symbols.
    pub fn known(symbols: &[Complex64]) -> Self {
        SoftSymbolVector {
            means: symbols.to_vec(),
            variances: vec![0.0; symbols.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// Seeded Fisher-Yates permutation; `interleave` gathers `out[i] = v[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    seed: u64,
}

impl Interleaver {
    pub fn new(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Interleaver { perm, seed }
    }

    /// Interleaver of row `row` in a frame seeded with `frame_seed`.
    pub fn for_row(len: usize, frame_seed: u64, row: usize) -> Self {
        Self::new(len, frame_seed ^ row as u64)
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn interleave<T: Copy>(&self, v: &[T]) -> Result<Vec<T>> {
        self.check(v.len())?;
        Ok(self.perm.iter().map(|&j| v[j]).collect())
    }

    pub fn deinterleave<T: Copy + Default>(&self, v: &[T]) -> Result<Vec<T>> {
        self.check(v.len())?;
        let mut out = vec![T::default(); v.len()];
        for (i, &j) in self.perm.iter().enumerate() {
            out[j] = v[i];
        }
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.perm.len() {
            return Err(Error::Size {
                expected: self.perm.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

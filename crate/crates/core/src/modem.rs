//! Discrete ODDM modulation: per-delay-row normalised IDFT across Doppler
//! bins, read out column-wise as `N` time-domain blocks of length `M`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::frame::FrameConfig;

/// Delay-Doppler grid, row-major: `values[m * n + k]` is `x[m, k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdGrid {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub values: Vec<Complex64>,
}

impl DdGrid {
    pub fn zeros(frame: &FrameConfig) -> Self {
        DdGrid {
            m: frame.m,
            n: frame.n,
            l: frame.l,
            values: vec![Complex64::new(0.0, 0.0); frame.m * frame.n],
        }
    }

    pub fn row(&self, m: usize) -> &[Complex64] {
        &self.values[m * self.n..(m + 1) * self.n]
    }

    pub fn row_mut(&mut self, m: usize) -> &mut [Complex64] {
        &mut self.values[m * self.n..(m + 1) * self.n]
    }

    pub fn check_padding(&self) -> Result<()> {
        for row in self.m - self.l..self.m {
            if self.row(row).iter().any(|v| *v != Complex64::new(0.0, 0.0)) {
                return Err(Error::NonZeroPadding { row });
            }
        }
        Ok(())
    }
}

/// Unitary N-point DFT / IDFT pair backed by planned FFTs.
#[derive(Clone)]
pub struct UnitaryDft {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnitaryDft").field("len", &self.len).finish()
    }
}

impl UnitaryDft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        UnitaryDft {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward_in_place(&self, v: &mut [Complex64]) {
        self.forward.process(v);
        v.iter_mut().for_each(|x| *x *= self.scale);
    }

    pub fn inverse_in_place(&self, v: &mut [Complex64]) {
        self.inverse.process(v);
        v.iter_mut().for_each(|x| *x *= self.scale);
    }

    pub fn forward(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(v.len())?;
        let mut out = v.to_vec();
        self.forward_in_place(&mut out);
        Ok(out)
    }

    pub fn inverse(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(v.len())?;
        let mut out = v.to_vec();
        self.inverse_in_place(&mut out);
        Ok(out)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.len {
            return Err(Error::Size {
                expected: self.len,
                actual: len,
            });
        }
        Ok(())
    }
}

/// Normalised DFT, `X[k] = N^{-1/2} sum_n x[n] e^{-j 2 pi nk/N}`.
pub fn dft_row(v: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    UnitaryDft::new(n).forward(v)
}

/// Normalised IDFT.
pub fn idft_row(v: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    UnitaryDft::new(n).inverse(v)
}

/// Time-domain blocks `s_n[m] = N^{-1/2} sum_k x[m, k] e^{j 2 pi nk / N}`.
#[allow(clippy::needless_range_loop)]
pub fn modulate(grid: &DdGrid) -> Result<Vec<Vec<Complex64>>> {
    grid.check_padding()?;
    let dft = UnitaryDft::new(grid.n);
    let mut blocks = vec![vec![Complex64::new(0.0, 0.0); grid.m]; grid.n];
    let mut row = vec![Complex64::new(0.0, 0.0); grid.n];
    for m in 0..grid.m - grid.l {
        row.copy_from_slice(grid.row(m));
        dft.inverse_in_place(&mut row);
        for (n, v) in row.iter().enumerate() {
            blocks[n][m] = *v;
        }
    }
    Ok(blocks)
}

/// Inverse of [`modulate`]: a per-row normalised DFT over the block index.
pub fn demodulate(blocks: &[Vec<Complex64>], frame: &FrameConfig) -> Result<DdGrid> {
    if blocks.len() != frame.n {
        return Err(Error::Size {
            expected: frame.n,
            actual: blocks.len(),
        });
    }
    if let Some(b) = blocks.iter().find(|b| b.len() != frame.m) {
        return Err(Error::Size {
            expected: frame.m,
            actual: b.len(),
        });
    }
    let dft = UnitaryDft::new(frame.n);
    let mut grid = DdGrid::zeros(frame);
    for m in 0..frame.m {
        let row = grid.row_mut(m);
        for (n, b) in blocks.iter().enumerate() {
            row[n] = b[m];
        }
        dft.forward_in_place(row);
    }
    Ok(grid)
}

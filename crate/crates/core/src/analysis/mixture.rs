//! Mixtures of symmetric Gaussians `N(μ, 2μ)` and their EM fit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::q_function;
use crate::error::{Error, Result};

/// Smallest component mean; keeps the variance `2μ` positive.
pub const MIN_MEAN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() {
            return Err(Error::Analysis(
                "mixture needs matching, non-empty weights and means".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) || total.is_nan() || total <= 0.0 {
            return Err(Error::Analysis("mixture weights must be non-negative".into()));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Analysis("mixture means must be finite".into()));
        }
        let mut pairs: Vec<(f64, f64)> = weights
            .iter()
            .zip(&means)
            .map(|(&w, &m)| (w / total, m.max(MIN_MEAN)))
            .collect();
        pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (weights, means) = pairs.into_iter().unzip();
        Ok(GaussianMixture { weights, means })
    }

    pub fn single(mean: f64) -> Self {
        GaussianMixture {
            weights: vec![1.0],
            means: vec![mean.max(MIN_MEAN)],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(&w, &m)| w * normal_pdf(x, m, 2.0 * m))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(&w, &m)| w * 0.5 * erfc(-(x - m) / (2.0 * m.sqrt())))
            .sum()
    }

    /// Probability that a sample is negative: `Σ π_j Q(sqrt(μ_j / 2))`.
    pub fn error_probability(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(&w, &m)| w * q_function((m / 2.0).sqrt()))
            .sum()
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| self.pdf(x).max(f64::MIN_POSITIVE).ln()).sum()
    }
}

fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -(x - mean).powi(2) / (2.0 * var) - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub components: usize,
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop when the per-sample log-likelihood gain falls below this.
    pub tol: f64,
    pub seed: u64,
    /// Restarts run on at most this many samples before the full refinement.
    pub restart_subsample: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            components: 3,
            restarts: 5,
            max_iters: 500,
            tol: 1e-8,
            seed: 0x5eed,
            restart_subsample: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmFit {
    pub mixture: GaussianMixture,
    /// Mean log-likelihood per sample after each iteration of the final run.
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Fits a `J`-component symmetric mixture to sign-folded LLRs.
pub fn fit_mixture_em(samples: &[f64], cfg: &EmConfig) -> Result<EmFit> {
    if samples.is_empty() {
        return Err(Error::Analysis("no samples to fit".into()));
    }
    if cfg.components == 0 {
        return Err(Error::Analysis("need at least one component".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Analysis("samples must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sub: Vec<f64> = if samples.len() > cfg.restart_subsample && cfg.restart_subsample > 0 {
        let stride = samples.len() as f64 / cfg.restart_subsample as f64;
        (0..cfg.restart_subsample)
            .map(|i| samples[(i as f64 * stride) as usize])
            .collect()
    } else {
        samples.to_vec()
    };
    let mut best: Option<(f64, GaussianMixture)> = None;
    for _ in 0..cfg.restarts.max(1) {
        let init = kmeans_pp_seed(&sub, cfg.components, &mut rng);
        let fit = em_run(&sub, init, cfg.max_iters, cfg.tol);
        let ll = *fit.trace.last().unwrap_or(&f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, fit.mixture));
        }
    }
    let start = best.map(|b| b.1).expect("at least one restart");
    Ok(em_run(samples, start, cfg.max_iters, cfg.tol))
}

fn kmeans_pp_seed(samples: &[f64], k: usize, rng: &mut ChaCha8Rng) -> GaussianMixture {
    let abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    let mut centers = vec![abs[rng.random_range(0..abs.len())]];
    let mut d2: Vec<f64> = abs.iter().map(|&a| (a - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = abs.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            abs[pick]
        } else {
            abs[rng.random_range(0..abs.len())] * (1.0 + centers.len() as f64)
        };
        for (d, &a) in d2.iter_mut().zip(&abs) {
            *d = d.min((a - next).powi(2));
        }
        centers.push(next);
    }
    let w = vec![1.0 / k as f64; k];
    GaussianMixture::new(w, centers.into_iter().map(|c| c.max(1e-3)).collect()).expect("valid seed")
}

#[allow(clippy::needless_range_loop)]
fn em_run(samples: &[f64], mut mix: GaussianMixture, max_iters: usize, tol: f64) -> EmFit {
    let n = samples.len() as f64;
    let j = mix.len();
    let mut resp = vec![0.0; j];
    let mut trace = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    for _ in 0..max_iters.max(1) {
        iterations += 1;
        let mut r_sum = vec![0.0; j];
        let mut s2 = vec![0.0; j];
        let mut ll = 0.0;
        for &x in samples {
            let mut top = f64::NEG_INFINITY;
            for c in 0..j {
                resp[c] = if mix.weights[c] > 0.0 {
                    mix.weights[c].ln() + log_normal_pdf(x, mix.means[c], 2.0 * mix.means[c])
                } else {
                    f64::NEG_INFINITY
                };
                top = top.max(resp[c]);
            }
            let z: f64 = resp.iter().map(|&l| (l - top).exp()).sum();
            ll += top + z.ln();
            for c in 0..j {
                let r = (resp[c] - top).exp() / z;
                r_sum[c] += r;
                s2[c] += r * x * x;
            }
        }
        let ll = ll / n;
        // the likelihood is evaluated for the parameters before this M-step
        trace.push(ll);
        if ll - prev < tol && iterations > 1 {
            break;
        }
        prev = ll;
        for c in 0..j {
            mix.weights[c] = r_sum[c] / n;
            if r_sum[c] > 0.0 {
                mix.means[c] = (-1.0 + (1.0 + s2[c] / r_sum[c]).sqrt()).max(MIN_MEAN);
            }
        }
    }
    let mixture = GaussianMixture::new(mix.weights, mix.means).expect("EM keeps a valid mixture");
    EmFit {
        mixture,
        trace,
        iterations,
    }
}

/// Kolmogorov-Smirnov distance between the samples and the mixture CDF.
pub fn ks_distance(samples: &[f64], mix: &GaussianMixture) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = mix.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Draws `count` samples from the mixture.
pub fn sample_mixture<R: Rng + ?Sized>(mix: &GaussianMixture, count: usize, rng: &mut R) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..count)
        .map(|_| {
            let mut u: f64 = rng.random();
            let mut c = mix.len() - 1;
            for (i, &w) in mix.weights.iter().enumerate() {
                if u < w {
                    c = i;
                    break;
                }
                u -= w;
            }
            let z: f64 = StandardNormal.sample(rng);
            mix.means[c] + (2.0 * mix.means[c]).sqrt() * z
        })
        .collect()
}

//! `ψ(x) = E[tanh(Z / 2)]`, `Z ~ N(x, 2x)`, and its inverse.
//!
//! The complement `φ = 1 - ψ` is tabulated as `ln φ` against `ln x` on
//! `[1e-4, 100]` from 64-node Gauss-Hermite quadrature and interpolated with
//! a monotone cubic. Below the grid `ψ` is linear in `x`; above it the
//! asymptotic `φ(x) ≈ sqrt(π/x) e^{-x/4} (1 - 10/(7x))` takes over.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

pub const PSI_GRID_MIN: f64 = 1e-4;
pub const PSI_GRID_MAX: f64 = 100.0;
/// Arguments of `ψ⁻¹` are clamped to `[PSI_CLAMP, 1 - PSI_CLAMP]`.
pub const PSI_CLAMP: f64 = 1e-12;

const GH_NODES: usize = 64;
const GRID_POINTS: usize = 2401;

/// Gauss-Hermite nodes and weights for `∫ e^{-t²} f(t) dt` (Golub-Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `φ(x) = E[1 - tanh(Z/2)]`.
///
/// The density of `Z` factors as `e^{z/2}` times an even function, which gives
/// `φ(x) = e^{-x/4} / sqrt(π) ∫ e^{-t²} sech(sqrt(x) t) dt`. Small `x` uses
/// Gauss-Hermite on that integral; larger `x` a trapezoid rule in
/// `s = sqrt(x) t`, where the integrand is smooth on a unit scale.
pub fn phi_quadrature(x: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let rx = x.sqrt();
    let integral = if x <= 1.0 {
        nodes
            .iter()
            .zip(weights)
            .map(|(&t, &w)| w / (rx * t).cosh())
            .sum::<f64>()
    } else {
        let h = 0.1;
        let steps = (40.0 / h) as i32;
        let sum: f64 = (-steps..=steps)
            .map(|k| {
                let s = h * k as f64;
                (-s * s / x).exp() / s.cosh()
            })
            .sum();
        sum * h / rx
    };
    (-x / 4.0).exp() * integral / PI.sqrt()
}

fn ln_phi_asymptotic(x: f64) -> f64 {
    0.5 * (PI / x).ln() - x / 4.0 + (-10.0 / (7.0 * x)).ln_1p()
}

struct Table {
    u: Vec<f64>,
    g: Vec<f64>,
    slope: Vec<f64>,
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let (nodes, weights) = gauss_hermite(GH_NODES);
        let (u0, u1) = (PSI_GRID_MIN.ln(), PSI_GRID_MAX.ln());
        let u: Vec<f64> = (0..GRID_POINTS)
            .map(|i| u0 + (u1 - u0) * i as f64 / (GRID_POINTS - 1) as f64)
            .collect();
        let mut g: Vec<f64> = u
            .iter()
            .map(|&ui| phi_quadrature(ui.exp(), &nodes, &weights).ln())
            .collect();
        // quadrature noise must not break monotonicity
        for i in 1..g.len() {
            if g[i] > g[i - 1] {
                g[i] = g[i - 1];
            }
        }
        let slope = fritsch_carlson(&u, &g);
        Table { u, g, slope }
    })
}

/// Monotone cubic Hermite tangents.
fn fritsch_carlson(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k])).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for k in 1..n - 1 {
        m[k] = if d[k - 1] * d[k] <= 0.0 {
            0.0
        } else {
            0.5 * (d[k - 1] + d[k])
        };
    }
    for k in 0..n - 1 {
        if d[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / d[k];
        let b = m[k + 1] / d[k];
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            m[k] = t * a * d[k];
            m[k + 1] = t * b * d[k];
        }
    }
    m
}

fn interpolate(t: &Table, u: f64) -> f64 {
    let h = t.u[1] - t.u[0];
    let k = (((u - t.u[0]) / h).floor() as usize).min(t.u.len() - 2);
    let s = (u - t.u[k]) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * t.g[k] + h10 * h * t.slope[k] + h01 * t.g[k + 1] + h11 * h * t.slope[k + 1]
}

/// `ln(1 - ψ(x))`.
pub fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < PSI_GRID_MIN {
        let edge = -(table().g[0]).exp_m1();
        return (-edge * x / PSI_GRID_MIN).ln_1p();
    }
    if x > PSI_GRID_MAX {
        // shifted to meet the table at the grid edge
        let t = table();
        return ln_phi_asymptotic(x) - ln_phi_asymptotic(PSI_GRID_MAX) + t.g[t.g.len() - 1];
    }
    interpolate(table(), x.ln())
}

pub fn psi(x: f64) -> f64 {
    -ln_phi(x).exp_m1()
}

/// Inverse of [`psi`] with the argument clamped to `[1e-12, 1 - 1e-12]`.
pub fn psi_inv(y: f64) -> f64 {
    let y = if y.is_nan() {
        PSI_CLAMP
    } else {
        y.clamp(PSI_CLAMP, 1.0 - PSI_CLAMP)
    };
    let target = (-y).ln_1p();
    let (mut lo, mut hi) = (0.0, 1.0);
    while ln_phi(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

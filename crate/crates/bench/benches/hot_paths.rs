use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use oddm_core::analysis::{de_decode, psi, psi_inv, GaussianMixture};
use oddm_core::channel::{apply_channel, draw_channel};
use oddm_core::detector::SicMmseDetector;
use oddm_core::ldpc::{DecoderConfig, DegreeProfiles, IEEE80211N_648_R12};
use oddm_core::modem::modulate;
use oddm_core::{DdGrid, FrameConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn detector(c: &mut Criterion) {
    let frame = FrameConfig::new(36, 648, 9, 2).unwrap();
    let ch = draw_channel(1, 5, 9, 3.79, &frame).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut grid = DdGrid::zeros(&frame);
    for row in 0..frame.data_rows() {
        for v in grid.row_mut(row) {
            *v = Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0);
        }
    }
    let (rx, var) = apply_channel(&ch, &modulate(&grid).unwrap(), 2.0, &mut rng).unwrap();
    let mut det = SicMmseDetector::new(&frame, &ch, rx, var).unwrap();
    c.bench_function("detect_layer m=36 n=648 l=9", |b| {
        b.iter(|| black_box(det.detect_layer(black_box(13))))
    });
}

fn bp(c: &mut Criterion) {
    let code = IEEE80211N_648_R12.build();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
    let cw = code.encode(&info).unwrap();
    let llr: Vec<f64> = cw
        .iter()
        .map(|&b| (if b == 0 { 2.0 } else { -2.0 }) + rng.random_range(-2.5..2.5))
        .collect();
    let cfg = DecoderConfig {
        max_iters: 10,
        early_stop: false,
    };
    c.bench_function("bp 648 x10 iterations", |b| {
        b.iter(|| black_box(code.decode_bp(black_box(&llr), &cfg).unwrap()))
    });
}

fn density_evolution(c: &mut Criterion) {
    let p = DegreeProfiles::regular(3, 6);
    let mix = GaussianMixture::new(vec![0.3, 0.7], vec![1.5, 4.0]).unwrap();
    c.bench_function("de 200 iterations", |b| {
        b.iter(|| black_box(de_decode(&mix, &p, 200, 1e9)))
    });
    c.bench_function("psi + psi_inv", |b| b.iter(|| black_box(psi_inv(psi(black_box(3.7))))));
}

criterion_group!(benches, detector, bp, density_evolution);
criterion_main!(benches);

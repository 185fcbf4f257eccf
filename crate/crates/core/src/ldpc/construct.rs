//! Built-in code constructions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LdpcCode;
use crate::error::{Error, Result};

/// Quasi-cyclic base matrix: `-1` is the all-zero block, `s >= 0` the identity
/// cyclically shifted right by `s`.
#[derive(Debug, Clone, Copy)]
pub struct QcSpec {
    pub z: usize,
    pub base: &'static [&'static [i16]],
}

impl QcSpec {
    pub fn build(&self) -> LdpcCode {
        quasi_cyclic(self.base, self.z).expect("built-in base matrix is valid")
    }
}

const X: i16 = -1;

/// IEEE 802.11n, n = 648, rate 1/2, Z = 27.
pub const IEEE80211N_648_R12: QcSpec = QcSpec {
    z: 27,
    base: &[
        &[0, X, X, X, 0, 0, X, X, 0, X, X, 0, 1, 0, X, X, X, X, X, X, X, X, X, X],
        &[
            22, 0, X, X, 17, X, 0, 0, 12, X, X, X, X, 0, 0, X, X, X, X, X, X, X, X, X,
        ],
        &[6, X, 0, X, 10, X, X, X, 24, X, 0, X, X, X, 0, 0, X, X, X, X, X, X, X, X],
        &[2, X, X, 0, 20, X, X, X, 25, 0, X, X, X, X, X, 0, 0, X, X, X, X, X, X, X],
        &[23, X, X, X, 3, X, X, X, 0, X, 9, 11, X, X, X, X, 0, 0, X, X, X, X, X, X],
        &[
            24, X, 23, 1, 17, X, 3, X, 10, X, X, X, X, X, X, X, X, 0, 0, X, X, X, X, X,
        ],
        &[25, X, X, X, 8, X, X, X, 7, 18, X, X, 0, X, X, X, X, X, 0, 0, X, X, X, X],
        &[13, 24, X, X, 0, X, 8, X, 6, X, X, X, X, X, X, X, X, X, X, 0, 0, X, X, X],
        &[
            7, 20, X, 16, 22, 10, X, X, 23, X, X, X, X, X, X, X, X, X, X, X, 0, 0, X, X,
        ],
        &[
            11, X, X, X, 19, X, X, X, 13, X, 3, 17, X, X, X, X, X, X, X, X, X, 0, 0, X,
        ],
        &[
            25, X, 8, X, 23, 18, X, 14, 9, X, X, X, X, X, X, X, X, X, X, X, X, X, 0, 0,
        ],
        &[3, X, X, X, 16, X, X, 2, 25, 5, X, X, 1, X, X, X, X, X, X, X, X, X, X, 0],
    ],
};

/// Expands a quasi-cyclic base matrix with lifting size `z`.
pub fn quasi_cyclic(base: &[&[i16]], z: usize) -> Result<LdpcCode> {
    let cols = base.first().map_or(0, |r| r.len());
    if z == 0 || cols == 0 || base.iter().any(|r| r.len() != cols) {
        return Err(Error::Code("ragged or empty base matrix".into()));
    }
    let mut checks = Vec::with_capacity(base.len() * z);
    for row in base {
        for i in 0..z {
            let vars = row
                .iter()
                .enumerate()
                .filter(|(_, &s)| s >= 0)
                .map(|(j, &s)| j * z + (i + s as usize) % z)
                .collect();
            checks.push(vars);
        }
    }
    LdpcCode::from_checks(cols * z, checks)
}

/// Seeded irregular repeat-accumulate code with a dual-diagonal parity part.
///
/// Information bits get degree 8 (40 %) or 3 (60 %); parity bits form the
/// accumulator. Repeated edges within a check are resolved by swaps.
pub fn ira_code(n: usize, k: usize, seed: u64) -> Result<LdpcCode> {
    if k == 0 || k >= n {
        return Err(Error::Code(format!("invalid IRA dimensions n={n} k={k}")));
    }
    let m = n - k;
    let heavy = (k * 2) / 5;
    let mut sockets: Vec<usize> = Vec::new();
    for v in 0..k {
        let d = if v < heavy { 8 } else { 3 };
        sockets.extend(std::iter::repeat_n(v, d.min(m)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sockets.shuffle(&mut rng);

    // check j owns sockets[bounds[j]..bounds[j + 1]]
    let e = sockets.len();
    let bounds: Vec<usize> = (0..=m).map(|j| j * e / m).collect();
    let owner = |pos: usize| bounds.partition_point(|&b| b <= pos) - 1;
    let holds = |s: &[usize], c: usize, v: usize| s[bounds[c]..bounds[c + 1]].contains(&v);

    for _ in 0..100 {
        let mut clean = true;
        for c in 0..m {
            for pos in bounds[c]..bounds[c + 1] {
                let v = sockets[pos];
                if !sockets[bounds[c]..pos].contains(&v) {
                    continue;
                }
                clean = false;
                for _ in 0..1000 {
                    let other = rng.random_range(0..e);
                    let oc = owner(other);
                    let w = sockets[other];
                    if oc != c && !holds(&sockets, c, w) && !holds(&sockets, oc, v) {
                        sockets.swap(pos, other);
                        break;
                    }
                }
            }
        }
        if clean {
            break;
        }
    }

    let checks: Vec<Vec<usize>> = (0..m)
        .map(|j| {
            let mut vars: Vec<usize> = sockets[bounds[j]..bounds[j + 1]].to_vec();
            vars.sort_unstable();
            vars.dedup();
            vars.push(k + j);
            if j > 0 {
                vars.push(k + j - 1);
            }
            vars
        })
        .collect();
    LdpcCode::from_checks(n, checks)
}

//! Systematic encoding over GF(2).

/// Encoder derived from the parity-check matrix.
///
/// `Staircase` is used when the last `m` columns form a dual-diagonal block;
/// otherwise Gaussian elimination picks pivots from the right-most columns so
/// that the information bits land in the left-most free positions.
#[derive(Debug, Clone)]
pub(super) enum Encoder {
    Staircase {
        info: Vec<usize>,
    },
    Dense {
        info: Vec<usize>,
        /// `(pivot column, mask over information indices)`.
        rows: Vec<(usize, Vec<u64>)>,
    },
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

fn is_staircase(n: usize, check_vars: &[Vec<usize>]) -> bool {
    let m = check_vars.len();
    if m >= n {
        return false;
    }
    let k = n - m;
    let mut parity_rows = vec![Vec::new(); m];
    for (r, vars) in check_vars.iter().enumerate() {
        for &v in vars {
            if v >= k {
                parity_rows[v - k].push(r);
            }
        }
    }
    parity_rows.iter().enumerate().all(|(j, rows)| {
        if j + 1 < m {
            rows.as_slice() == [j, j + 1]
        } else {
            rows.as_slice() == [j]
        }
    })
}

impl Encoder {
    pub(super) fn new(n: usize, check_vars: &[Vec<usize>]) -> Self {
        if is_staircase(n, check_vars) {
            return Encoder::Staircase {
                info: (0..n - check_vars.len()).collect(),
            };
        }
        let w = words(n);
        let mut rows: Vec<Vec<u64>> = check_vars
            .iter()
            .map(|vars| {
                let mut r = vec![0u64; w];
                for &v in vars {
                    r[v / 64] ^= 1 << (v % 64);
                }
                r
            })
            .collect();

        // reduced row echelon form, pivots searched from the last column
        let mut pivots: Vec<usize> = Vec::new();
        let mut rank = 0;
        for col in (0..n).rev() {
            if rank == rows.len() {
                break;
            }
            let (wi, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..rows.len()).find(|&r| rows[r][wi] & bit != 0) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[wi] & bit != 0 {
                    row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                }
            }
            pivots.push(col);
            rank += 1;
        }

        let mut is_pivot = vec![false; n];
        pivots.iter().for_each(|&p| is_pivot[p] = true);
        let info: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let kw = words(info.len());
        let rows = pivots
            .iter()
            .zip(&rows)
            .map(|(&p, row)| {
                let mut mask = vec![0u64; kw];
                for (i, &c) in info.iter().enumerate() {
                    if row[c / 64] >> (c % 64) & 1 == 1 {
                        mask[i / 64] |= 1 << (i % 64);
                    }
                }
                (p, mask)
            })
            .collect();
        Encoder::Dense { info, rows }
    }

    pub(super) fn info_positions(&self) -> &[usize] {
        match self {
            Encoder::Staircase { info } | Encoder::Dense { info, .. } => info,
        }
    }

    pub(super) fn info_len(&self) -> usize {
        self.info_positions().len()
    }

    pub(super) fn encode(&self, n: usize, check_vars: &[Vec<usize>], data: &[u8]) -> Vec<u8> {
        let mut cw = vec![0u8; n];
        match self {
            Encoder::Staircase { info } => {
                let k = info.len();
                cw[..k].iter_mut().zip(data).for_each(|(c, &d)| *c = d & 1);
                let mut acc = 0u8;
                for (j, vars) in check_vars.iter().enumerate() {
                    let s = vars.iter().filter(|&&v| v < k).fold(0u8, |a, &v| a ^ cw[v]);
                    acc ^= s;
                    cw[k + j] = acc;
                }
            }
            Encoder::Dense { info, rows } => {
                let mut packed = vec![0u64; words(info.len())];
                for (i, (&pos, &d)) in info.iter().zip(data).enumerate() {
                    cw[pos] = d & 1;
                    packed[i / 64] |= u64::from(d & 1) << (i % 64);
                }
                for (p, mask) in rows {
                    let ones: u32 = mask.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
                    cw[*p] = (ones & 1) as u8;
                }
            }
        }
        cw
    }
}

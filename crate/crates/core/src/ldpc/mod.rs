//! LDPC codes: sparse parity-check representation, alist I/O, encoding,
//! flooding sum-product decoding and degree profiles.

mod alist;
mod construct;
mod decode;
mod encode;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use construct::{ira_code, quasi_cyclic, QcSpec, IEEE80211N_648_R12};
pub use decode::{check_node_update, BpDecoder, DecodeOutput, DecoderConfig};
use encode::Encoder;

/// Fractions by degree, sorted by degree.
pub type DegreeFractions = Vec<(usize, f64)>;

/// Edge-perspective bit (`lambda`) and check (`rho`) degree distributions plus
/// the node-perspective bit distribution (`lambda_node`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeProfiles {
    pub lambda: DegreeFractions,
    pub rho: DegreeFractions,
    pub lambda_node: DegreeFractions,
}

impl DegreeProfiles {
    /// Regular `(dv, dc)` ensemble.
    pub fn regular(dv: usize, dc: usize) -> Self {
        DegreeProfiles {
            lambda: vec![(dv, 1.0)],
            rho: vec![(dc, 1.0)],
            lambda_node: vec![(dv, 1.0)],
        }
    }

    pub fn max_bit_degree(&self) -> usize {
        self.lambda.last().map_or(0, |d| d.0)
    }

    pub fn max_check_degree(&self) -> usize {
        self.rho.last().map_or(0, |d| d.0)
    }

    /// Design rate `1 - (sum rho_j / j) / (sum lambda_i / i)`.
    pub fn design_rate(&self) -> f64 {
        let l: f64 = self.lambda.iter().map(|&(i, f)| f / i as f64).sum();
        let r: f64 = self.rho.iter().map(|&(j, f)| f / j as f64).sum();
        1.0 - r / l
    }

    /// Drops degree-one bit nodes and renormalises `lambda` and
    /// `lambda_node`. Mean-only density evolution averages ψ over edge
    /// classes, so a single accumulator tail bit would otherwise cap the
    /// check-to-bit mean.
    pub fn without_degree_one(&self) -> Self {
        let strip = |d: &DegreeFractions| -> DegreeFractions {
            let kept: DegreeFractions = d.iter().copied().filter(|&(i, _)| i > 1).collect();
            let total: f64 = kept.iter().map(|p| p.1).sum();
            if kept.is_empty() {
                return d.clone();
            }
            kept.into_iter().map(|(i, f)| (i, f / total)).collect()
        };
        DegreeProfiles {
            lambda: strip(&self.lambda),
            rho: self.rho.clone(),
            lambda_node: strip(&self.lambda_node),
        }
    }

    fn from_degrees(var_degrees: &[usize], check_degrees: &[usize]) -> Self {
        let edges: usize = var_degrees.iter().sum();
        let tally = |degs: &[usize]| {
            let max = degs.iter().copied().max().unwrap_or(0);
            let mut counts = vec![0usize; max + 1];
            for &d in degs {
                counts[d] += 1;
            }
            counts
        };
        let vc = tally(var_degrees);
        let cc = tally(check_degrees);
        let edge_frac = |counts: &[usize]| -> DegreeFractions {
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(d, &c)| (d, (d * c) as f64 / edges as f64))
                .collect()
        };
        DegreeProfiles {
            lambda: edge_frac(&vc),
            rho: edge_frac(&cc),
            lambda_node: vc
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(d, &c)| (d, c as f64 / var_degrees.len() as f64))
                .collect(),
        }
    }
}

/// Binary LDPC code defined by a sparse parity-check matrix.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    n: usize,
    k: usize,
    check_vars: Vec<Vec<usize>>,
    var_checks: Vec<Vec<usize>>,
    profiles: DegreeProfiles,
    encoder: Encoder,
}

impl LdpcCode {
    /// Builds a code from the column indices of each parity check.
    pub fn from_checks(n: usize, check_vars: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 || check_vars.is_empty() {
            return Err(Error::Code("empty parity-check matrix".into()));
        }
        let mut var_checks = vec![Vec::new(); n];
        let mut check_vars = check_vars;
        for (c, vars) in check_vars.iter_mut().enumerate() {
            vars.sort_unstable();
            if vars.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Code(format!("check {c} lists a column twice")));
            }
            for &v in vars.iter() {
                if v >= n {
                    return Err(Error::Code(format!("check {c} references column {v} >= {n}")));
                }
                var_checks[v].push(c);
            }
        }
        let var_deg: Vec<usize> = var_checks.iter().map(Vec::len).collect();
        let check_deg: Vec<usize> = check_vars.iter().map(Vec::len).collect();
        if var_deg.contains(&0) {
            return Err(Error::Code("a column has no checks".into()));
        }
        let profiles = DegreeProfiles::from_degrees(&var_deg, &check_deg);
        let encoder = Encoder::new(n, &check_vars);
        let k = encoder.info_len();
        Ok(LdpcCode {
            n,
            k,
            check_vars,
            var_checks,
            profiles,
            encoder,
        })
    }

    pub fn load_alist(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_alist(&text)
    }

    pub fn parse_alist(text: &str) -> Result<Self> {
        let (n, checks) = alist::parse(text)?;
        Self::from_checks(n, checks)
    }

    pub fn to_alist(&self) -> String {
        alist::write(self.n, &self.check_vars, &self.var_checks)
    }

    pub fn save_alist(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_alist()).map_err(|e| Error::io(path, e))
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Information length.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_checks(&self) -> usize {
        self.check_vars.len()
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn check_vars(&self) -> &[Vec<usize>] {
        &self.check_vars
    }

    pub fn var_checks(&self) -> &[Vec<usize>] {
        &self.var_checks
    }

    pub fn num_edges(&self) -> usize {
        self.check_vars.iter().map(Vec::len).sum()
    }

    pub fn profiles(&self) -> &DegreeProfiles {
        &self.profiles
    }

    /// Codeword positions that carry the information bits, in order.
    pub fn info_positions(&self) -> &[usize] {
        self.encoder.info_positions()
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return Err(Error::Size {
                expected: self.k,
                actual: info.len(),
            });
        }
        Ok(self.encoder.encode(self.n, &self.check_vars, info))
    }

    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions().iter().map(|&p| codeword[p]).collect()
    }

    /// True iff every parity check is satisfied.
    pub fn parity_check(&self, bits: &[u8]) -> bool {
        bits.len() == self.n
            && self
                .check_vars
                .iter()
                .all(|vars| vars.iter().fold(0u8, |acc, &v| acc ^ (bits[v] & 1)) == 0)
    }

    pub fn decode_bp(&self, llr_in: &[f64], cfg: &DecoderConfig) -> Result<DecodeOutput> {
        BpDecoder::new(self).decode(llr_in, cfg)
    }
}

/// Hard decisions (`1` for negative LLRs).
pub fn hard_decisions(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| u8::from(l < 0.0)).collect()
}

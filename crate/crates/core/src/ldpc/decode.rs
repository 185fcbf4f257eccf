//! Flooding sum-product decoding in the LLR domain.

use serde::{Deserialize, Serialize};

use super::LdpcCode;
use crate::error::{Error, Result};
use crate::frame::LLR_CLAMP;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub max_iters: usize,
    /// Stop as soon as the hard decisions satisfy every check.
    pub early_stop: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            max_iters: 50,
            early_stop: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// A-posteriori LLRs: channel LLR plus all incoming check messages.
    pub llr_out: Vec<f64>,
    pub hard: Vec<u8>,
    pub parity_ok: bool,
    pub iterations: usize,
}

/// Extrinsic check-node rule `2 atanh(prod_{j != i} tanh(x_j / 2))` for every
/// edge, computed with prefix and suffix products.
pub fn check_node_update(inputs: &[f64], outputs: &mut [f64]) {
    let d = inputs.len();
    debug_assert_eq!(d, outputs.len());
    if d == 0 {
        return;
    }
    let t: Vec<f64> = inputs.iter().map(|&x| (0.5 * x).tanh()).collect();
    check_from_tanh(&t, outputs);
}

#[inline]
fn check_from_tanh(t: &[f64], outputs: &mut [f64]) {
    // outputs first holds the prefix products
    let mut acc = 1.0;
    for (o, &ti) in outputs.iter_mut().zip(t) {
        *o = acc;
        acc *= ti;
    }
    let mut suffix = 1.0;
    for (o, &ti) in outputs.iter_mut().zip(t).rev() {
        let p = *o * suffix;
        // atanh is not exactly odd in libm; keep the rule sign-symmetric
        let mag = (2.0 * p.abs().min(1.0).atanh()).min(LLR_CLAMP);
        *o = if p < 0.0 { -mag } else { mag };
        suffix *= ti;
    }
}

/// Decoder state bound to one code; buffers are reused across calls.
#[derive(Debug, Clone)]
pub struct BpDecoder<'a> {
    code: &'a LdpcCode,
    check_start: Vec<usize>,
    edge_var: Vec<usize>,
    /// Edge ids grouped by variable.
    var_edges: Vec<usize>,
    var_start: Vec<usize>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    tanh_buf: Vec<f64>,
}

impl<'a> BpDecoder<'a> {
    pub fn new(code: &'a LdpcCode) -> Self {
        let mut check_start = Vec::with_capacity(code.num_checks() + 1);
        let mut edge_var = Vec::with_capacity(code.num_edges());
        check_start.push(0);
        for vars in code.check_vars() {
            edge_var.extend_from_slice(vars);
            check_start.push(edge_var.len());
        }
        let mut var_start = vec![0usize; code.n() + 1];
        for &v in &edge_var {
            var_start[v + 1] += 1;
        }
        for i in 0..code.n() {
            var_start[i + 1] += var_start[i];
        }
        let mut fill = var_start.clone();
        let mut var_edges = vec![0usize; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v]] = e;
            fill[v] += 1;
        }
        let e = edge_var.len();
        let max_dc = code.check_vars().iter().map(Vec::len).max().unwrap_or(0);
        BpDecoder {
            code,
            check_start,
            edge_var,
            var_edges,
            var_start,
            v2c: vec![0.0; e],
            c2v: vec![0.0; e],
            tanh_buf: vec![0.0; max_dc],
        }
    }

    pub fn code(&self) -> &LdpcCode {
        self.code
    }

    /// Check-to-variable messages after the last call to [`decode`](Self::decode),
    /// in check-major edge order.
    pub fn check_messages(&self) -> &[f64] {
        &self.c2v
    }

    /// `(check, variable)` for each edge, in check-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.check_start
            .windows(2)
            .enumerate()
            .flat_map(move |(c, w)| self.edge_var[w[0]..w[1]].iter().map(move |&v| (c, v)))
    }

    pub fn decode(&mut self, llr_in: &[f64], cfg: &DecoderConfig) -> Result<DecodeOutput> {
        let n = self.code.n();
        if llr_in.len() != n {
            return Err(Error::Size {
                expected: n,
                actual: llr_in.len(),
            });
        }
        for (m, &v) in self.v2c.iter_mut().zip(&self.edge_var) {
            *m = llr_in[v].clamp(-LLR_CLAMP, LLR_CLAMP);
        }
        self.c2v.iter_mut().for_each(|m| *m = 0.0);
        let mut total = llr_in.to_vec();
        let mut hard = vec![0u8; n];
        let mut iterations = 0;
        let mut parity_ok = false;
        for _ in 0..cfg.max_iters.max(1) {
            iterations += 1;
            for w in self.check_start.windows(2) {
                let (a, b) = (w[0], w[1]);
                let t = &mut self.tanh_buf[..b - a];
                t.iter_mut()
                    .zip(&self.v2c[a..b])
                    .for_each(|(t, &x)| *t = (0.5 * x).tanh());
                check_from_tanh(t, &mut self.c2v[a..b]);
            }
            for v in 0..n {
                let edges = &self.var_edges[self.var_start[v]..self.var_start[v + 1]];
                let sum: f64 = llr_in[v] + edges.iter().map(|&e| self.c2v[e]).sum::<f64>();
                total[v] = sum;
                hard[v] = u8::from(sum < 0.0);
                for &e in edges {
                    self.v2c[e] = (sum - self.c2v[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
                }
            }
            parity_ok = self.code.parity_check(&hard);
            if cfg.early_stop && parity_ok {
                break;
            }
        }
        Ok(DecodeOutput {
            llr_out: total,
            hard,
            parity_ok,
            iterations,
        })
    }
}

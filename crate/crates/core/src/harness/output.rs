//! Result tables, the JSON summary, and LLR dumps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SnrDb};
use super::runner::{Experiment, ExperimentResults};
use crate::error::{Error, Result};
use crate::receiver::Scheme;

pub const CSV_HEADER: &str = "scheme,snr_db,turbo_iter,frames,bit_errors,frame_errors,ber,fer,beta,wall_s";
pub const SNR_AXIS: &str = "Es/N0 [dB] per data symbol";

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub snr_db: SnrDb,
    pub turbo_iter: usize,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub beta: f64,
    pub wall_s: f64,
}

/// A CSV row plus the operation counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub snr_db: SnrDb,
    pub turbo_iter: usize,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub beta: f64,
    pub wall_s: f64,
    pub codewords: u64,
    pub unconverged: u64,
    pub mmse_solves: u64,
    pub bp_iterations: u64,
    pub decodes: u64,
}

impl SummaryRow {
    pub fn csv_row(&self) -> ResultRow {
        ResultRow {
            scheme: self.scheme,
            snr_db: self.snr_db,
            turbo_iter: self.turbo_iter,
            frames: self.frames,
            bit_errors: self.bit_errors,
            frame_errors: self.frame_errors,
            ber: self.ber,
            fer: self.fer,
            beta: self.beta,
            wall_s: self.wall_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeInfo {
    pub info_bits_per_frame: usize,
    pub code_length: usize,
    pub code_rate: f64,
    /// `Eb/N0 [dB] = Es/N0 [dB] + eb_n0_offset_db`.
    pub eb_n0_offset_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub snr_axis: String,
    pub schemes: BTreeMap<String, SchemeInfo>,
    pub config: ExperimentConfig,
    pub rows: Vec<SummaryRow>,
}

impl ExperimentSummary {
    pub fn build(exp: &Experiment, results: &ExperimentResults) -> Result<Self> {
        let cfg = exp.config();
        let mut schemes = BTreeMap::new();
        for &s in &cfg.schemes {
            let code = exp.code(s)?;
            let info = exp.info_bits(s)?;
            let symbols = cfg.frame.data_symbols() as f64;
            schemes.insert(
                s.name().to_string(),
                SchemeInfo {
                    info_bits_per_frame: info,
                    code_length: code.n(),
                    code_rate: code.rate(),
                    eb_n0_offset_db: 10.0 * (symbols / info as f64).log10(),
                },
            );
        }
        let mut rows = Vec::new();
        for p in &results.points {
            for (i, it) in p.stats.iterations.iter().enumerate() {
                rows.push(SummaryRow {
                    scheme: p.scheme,
                    snr_db: p.snr_db,
                    turbo_iter: i + 1,
                    frames: it.frames,
                    bits: it.bits,
                    bit_errors: it.bit_errors,
                    frame_errors: it.frame_errors,
                    ber: it.ber(),
                    fer: it.fer(),
                    beta: it.beta(),
                    wall_s: p.wall_s,
                    codewords: it.codewords,
                    unconverged: it.unconverged,
                    mmse_solves: it.mmse_solves,
                    bp_iterations: it.bp_iterations,
                    decodes: it.decodes,
                });
            }
        }
        Ok(ExperimentSummary {
            snr_axis: SNR_AXIS.into(),
            schemes,
            config: cfg.clone(),
            rows,
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r.csv_row())?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Rows of one scheme and turbo iteration, in SNR order of the run.
    pub fn curve(&self, scheme: Scheme, turbo_iter: usize) -> Vec<&SummaryRow> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.turbo_iter == turbo_iter)
            .collect()
    }
}

pub fn read_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Paths of the files written by [`write_results`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub llr_dumps: Vec<PathBuf>,
}

pub fn dump_file_name(scheme: Scheme, snr: SnrDb) -> String {
    format!("llr_{}_{}.f64", scheme.name(), snr.to_string().replace('-', "m"))
}

/// Writes `results.csv`, `summary.json` and any LLR dumps into `dir`.
pub fn write_results(exp: &Experiment, results: &ExperimentResults, dir: impl AsRef<Path>) -> Result<WrittenFiles> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let summary = ExperimentSummary::build(exp, results)?;
    let csv = dir.join("results.csv");
    std::fs::write(&csv, summary.to_csv()?).map_err(|e| Error::io(&csv, e))?;
    let json = dir.join("summary.json");
    summary.save(&json)?;
    let mut llr_dumps = Vec::new();
    for p in &results.points {
        if let Some(d) = &p.llrs {
            let path = dir.join(dump_file_name(p.scheme, p.snr_db));
            d.save(&path)?;
            llr_dumps.push(path);
        }
    }
    Ok(WrittenFiles {
        csv,
        summary: json,
        llr_dumps,
    })
}

/// Sidecar of a flat little-endian `f64` LLR file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DumpSidecar {
    /// `[frames, codewords per frame, codeword length]`.
    shape: [usize; 3],
    sign_folded: bool,
    dtype: String,
    #[serde(default)]
    scheme: Option<Scheme>,
    #[serde(default)]
    snr_db: Option<SnrDb>,
    #[serde(default = "one")]
    turbo_iter: usize,
}

fn one() -> usize {
    1
}

/// Detector LLRs in code order, `shape = [frames, codewords, n_c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrDump {
    pub shape: [usize; 3],
    pub sign_folded: bool,
    pub scheme: Option<Scheme>,
    pub snr_db: Option<SnrDb>,
    pub turbo_iter: usize,
    pub data: Vec<f64>,
}

impl LlrDump {
    pub fn sidecar_path(path: &Path) -> PathBuf {
        path.with_extension("json")
    }

    pub fn codewords(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.shape[2].max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self.data.iter().flat_map(|v| v.to_le_bytes()).collect();
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let side = DumpSidecar {
            shape: self.shape,
            sign_folded: self.sign_folded,
            dtype: "f64le".into(),
            scheme: self.scheme,
            snr_db: self.snr_db,
            turbo_iter: self.turbo_iter,
        };
        let sp = Self::sidecar_path(path);
        std::fs::write(&sp, serde_json::to_string_pretty(&side)?).map_err(|e| Error::io(&sp, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let sp = Self::sidecar_path(path);
        let side: DumpSidecar = serde_json::from_str(&std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?)?;
        if side.dtype != "f64le" {
            return Err(Error::Config(format!("unsupported dump dtype {:?}", side.dtype)));
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let expected: usize = side.shape.iter().product();
        if bytes.len() != expected * 8 {
            return Err(Error::Size {
                expected: expected * 8,
                actual: bytes.len(),
            });
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(LlrDump {
            shape: side.shape,
            sign_folded: side.sign_folded,
            scheme: side.scheme,
            snr_db: side.snr_db,
            turbo_iter: side.turbo_iter,
            data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn llr_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = LlrDump {
            shape: [2, 3, 4],
            sign_folded: true,
            scheme: Some(Scheme::Pce),
            snr_db: Some(SnrDb(f64::INFINITY)),
            turbo_iter: 1,
            data: (0..24).map(|i| i as f64 * 0.5 - 3.0).collect(),
        };
        let p = dir.path().join("x.f64");
        d.save(&p).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 24 * 8);
        let back = LlrDump::load(&p).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.codewords().len(), 6);
        std::fs::write(&p, [0u8; 16]).unwrap();
        assert!(LlrDump::load(&p).is_err());
    }

    #[test]
    fn csv_rows_parse_back() {
        let text = format!("{CSV_HEADER}\npce,inf,1,3,0,0,0.0,0.0,0.0,0.0\nsce,-2.5,2,10,7,1,0.1,0.1,0.5,0.0\n");
        let rows = read_csv(&text).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].snr_db.is_noiseless());
        assert_eq!(rows[1].snr_db, SnrDb(-2.5));
        assert_eq!(rows[1].scheme, Scheme::Sce);
    }

    #[test]
    fn dump_names() {
        assert_eq!(dump_file_name(Scheme::Sce, SnrDb(-1.5)), "llr_sce_m1.5.f64");
        assert_eq!(dump_file_name(Scheme::Pce, SnrDb(f64::INFINITY)), "llr_pce_inf.f64");
    }
}

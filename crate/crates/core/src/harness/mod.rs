//! Configuration-driven Monte-Carlo experiments: seeding, the parallel
//! runner, result files and the analysis of LLR dumps.

mod config;
mod output;
mod runner;
pub mod seeds;

pub use config::{AnalysisSpec, ChannelKind, ChannelSpec, CodesSpec, ExperimentConfig, OutputSpec, SnrDb, StopRule};
pub use output::{
    dump_file_name, read_csv, write_results, ExperimentSummary, LlrDump, ResultRow, SchemeInfo, SummaryRow,
    WrittenFiles, CSV_HEADER, SNR_AXIS,
};
pub use runner::{resolve_code, Experiment, ExperimentResults, FrameOutcome, PointResult, BATCH_FRAMES, IRA_SEED};

use crate::analysis::{analyze_llrs, AnalysisReport, DeConfig, EmConfig, FiniteLengthModel};
use crate::error::{Error, Result};
use crate::ldpc::LdpcCode;

/// Fits mixtures to a dump and predicts the bit error rate by plain density
/// evolution (pooled LLRs) and by the finite-length model (one mixture per
/// codeword).
pub fn analyze_dump(dump: &LlrDump, code: &LdpcCode, spec: &AnalysisSpec) -> Result<AnalysisReport> {
    if !dump.sign_folded {
        return Err(Error::Analysis("the dump must hold sign-folded LLRs".into()));
    }
    if dump.shape[2] != code.n() {
        return Err(Error::Analysis(format!(
            "dump codewords have length {} but the code has length {}",
            dump.shape[2],
            code.n()
        )));
    }
    let de = DeConfig::default();
    let profiles = code.profiles().without_degree_one();
    let finite = FiniteLengthModel::with_offset(&profiles, code.n(), &de, spec.alpha_noise_offset)?;
    let label = match (dump.scheme, dump.snr_db) {
        (Some(s), Some(snr)) => format!("{s}@{snr}"),
        _ => "dump".to_string(),
    };
    let em = EmConfig {
        components: spec.components,
        ..EmConfig::default()
    };
    let cw_em = EmConfig {
        components: spec.codeword_components,
        restarts: 1,
        max_iters: 200,
        ..EmConfig::default()
    };
    analyze_llrs(
        &label,
        &dump.codewords(),
        dump.shape[1],
        &profiles,
        &em,
        &cw_em,
        &de,
        Some(&finite),
    )
}

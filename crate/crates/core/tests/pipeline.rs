//! Simulation harness end to end: result files, reloading, reproducibility
//! and the analysis of dumped LLRs.

use oddm_core::analysis::crossing_snr;
use oddm_core::harness::{
    analyze_dump, dump_file_name, read_csv, write_results, AnalysisSpec, Experiment, ExperimentConfig,
    ExperimentSummary, LlrDump, SnrDb, CSV_HEADER,
};
use oddm_core::receiver::Scheme;
use proptest::prelude::*;

fn small(workers: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(
        r#"{
            "frame": {"m": 6, "n": 648, "l": 2, "mod_order": 2},
            "channel": {"paths": 3, "l_max": 2, "k_max": 1.5},
            "schemes": ["sce", "pce"],
            "snr_db": [-3, 0, "inf"],
            "turbo_iters": 2,
            "bp_iters": 20,
            "stop": {"target_frame_errors": 5, "max_frames": 32},
            "seed": 99,
            "output": {"dump_llrs": true, "dump_max_frames": 3}
        }"#,
    )
    .unwrap();
    cfg.workers = workers;
    cfg
}

#[test]
fn results_reload_and_rates_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let exp = Experiment::new(small(1)).unwrap();
    let results = exp.run().unwrap();
    let files = write_results(&exp, &results, dir.path()).unwrap();

    let text = std::fs::read_to_string(&files.csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    let rows = read_csv(&text).unwrap();
    let summary = ExperimentSummary::load(&files.summary).unwrap();
    assert_eq!(rows.len(), 2 * 3 * 2);
    assert_eq!(summary.rows.len(), rows.len());
    assert_eq!(summary.config.seed, 99);
    for (csv_row, full) in rows.iter().zip(&summary.rows) {
        assert_eq!(&full.csv_row(), csv_row);
        assert_eq!(full.ber, full.bit_errors as f64 / full.bits as f64);
        assert_eq!(full.fer, full.frame_errors as f64 / full.frames as f64);
        assert!(full.unconverged <= full.codewords);
        assert_eq!(full.wall_s, 0.0);
    }
    for r in summary.rows.iter().filter(|r| r.snr_db.is_noiseless()) {
        assert_eq!(r.bit_errors, 0);
    }
    // at -3 dB every frame fails, so the stop rule fires after one batch
    let low = summary.curve(Scheme::Pce, 2);
    assert_eq!(low[0].frames, 16);

    let sce = &summary.schemes["sce"];
    assert_eq!(sce.code_length, 4 * 648);
    assert!((sce.eb_n0_offset_db - 10.0 * 2f64.log10()).abs() < 1e-9);

    assert_eq!(files.llr_dumps.len(), 6);
    let dump_path = dir.path().join(dump_file_name(Scheme::Pce, SnrDb(0.0)));
    let dump = LlrDump::load(&dump_path).unwrap();
    assert_eq!(dump.shape, [3, 4, 648]);
    assert!(dump.sign_folded);
}

#[test]
fn csv_does_not_depend_on_worker_count() {
    let mut out = Vec::new();
    for workers in [1, 3] {
        let dir = tempfile::tempdir().unwrap();
        let exp = Experiment::new(small(workers)).unwrap();
        let files = write_results(&exp, &exp.run().unwrap(), dir.path()).unwrap();
        out.push(std::fs::read(&files.csv).unwrap());
    }
    assert_eq!(out[0], out[1]);
}

#[test]
fn dumped_llrs_feed_the_analysis() {
    let mut cfg = small(1);
    cfg.schemes = vec![Scheme::Pce];
    cfg.snr_db = vec![SnrDb(0.0)];
    let exp = Experiment::new(cfg).unwrap();
    let p = exp.run_point(Scheme::Pce, SnrDb(0.0)).unwrap();
    let dump = p.llrs.unwrap();
    let report = analyze_dump(&dump, exp.code(Scheme::Pce).unwrap(), &AnalysisSpec::default()).unwrap();
    assert_eq!(report.samples, 3 * 4 * 648);
    assert!(report.ks < 0.05, "{}", report.ks);
    assert!(report.p0 > 0.0 && report.p0 < 0.5);
    let fin = report.p_b_finite.unwrap();
    assert!((0.0..=1.0).contains(&fin));
    assert!((report.sigma_threshold.unwrap() - 0.92).abs() < 0.05);

    let mut unfolded = dump.clone();
    unfolded.sign_folded = false;
    assert!(analyze_dump(&unfolded, exp.code(Scheme::Pce).unwrap(), &AnalysisSpec::default()).is_err());
}

#[test]
fn summary_survives_json_round_trip() {
    let mut cfg = small(1);
    cfg.snr_db = vec![SnrDb(f64::INFINITY)];
    let exp = Experiment::new(cfg).unwrap();
    let summary = ExperimentSummary::build(&exp, &exp.run().unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    summary.save(&path).unwrap();
    let back = ExperimentSummary::load(&path).unwrap();
    assert_eq!(back.rows, summary.rows);
    assert_eq!(back.to_csv().unwrap(), summary.to_csv().unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snr_text_round_trips(v in -50.0f64..50.0) {
        let s = SnrDb(v);
        prop_assert_eq!(s.to_string().parse::<SnrDb>().unwrap(), s);
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<SnrDb>(&json).unwrap(), s);
    }

    #[test]
    fn crossing_lies_between_bracketing_points(
        start in -5.0f64..5.0,
        logs in proptest::collection::vec(0.1f64..1.5, 2..8),
        target_exp in 0.0f64..1.0,
    ) {
        // strictly falling curve from 1e-1 downwards
        let mut v = 1e-1;
        let mut values = vec![v];
        for d in &logs {
            v *= 10f64.powf(-d);
            values.push(v);
        }
        let snr: Vec<f64> = (0..values.len()).map(|i| start + 0.5 * i as f64).collect();
        let lo = values.last().unwrap().log10();
        let target = 10f64.powf(-1.0 + target_exp * (lo + 1.0));
        let x = crossing_snr(&snr, &values, target).unwrap();
        let i = values.iter().position(|&b| b <= target).unwrap();
        prop_assert!(x >= snr[i.saturating_sub(1)] - 1e-12 && x <= snr[i] + 1e-12);
    }
}

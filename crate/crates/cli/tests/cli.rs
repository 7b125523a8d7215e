use std::path::Path;
use std::process::{Command, Output};

use nrpos::dataset::{NOISE, SRS_CHF};

fn nrpos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrpos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|c| c == name).expect("column present")
}

#[test]
fn generate_srs_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let prefix = tmp.path().join("srs");
    let o = nrpos(&["generate", "srs", "--output", p(&prefix)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("# nrpos generate srs seed=1"), "{out}");
    assert!(out.contains("mapped_res=624"), "{out}");
    let grid = std::fs::read(tmp.path().join("srs.txdataF")).unwrap();
    assert_eq!(grid.len(), 1536 * 4);
    let iq = std::fs::read(tmp.path().join("srs.iq")).unwrap();
    assert_eq!(iq.len(), (1536 + 132) * 4);
    let map = std::fs::read_to_string(tmp.path().join("srs_re_map.csv")).unwrap();
    assert_eq!(csv_rows(&map).len(), 1 + 624);
}

#[test]
fn generate_prach_and_prs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nrpos(&["generate", "prach", "--output", p(&tmp.path().join("pr"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("sequence_length=839"));

    let cfg = tmp.path().join("prs.cfg");
    std::fs::write(&cfg, "num_symbols = 4\ncomb_size = 4\ngold_seed = 77\n").unwrap();
    let o = nrpos(&["--seed", "9", "generate", "prs", "--config", p(&cfg), "--output", p(&tmp.path().join("prs"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("seed=9") && out.contains("mapped_res=1272"), "{out}");
}

#[test]
fn generate_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nrpos(&["generate", "ssb", "--output", p(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));

    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "comb_sise = 2\n").unwrap();
    let o = nrpos(&["generate", "srs", "--config", p(&cfg), "--output", p(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("comb_sise"), "{}", stderr(&o));

    assert_eq!(nrpos(&[]).status.code(), Some(1));
    assert_eq!(nrpos(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_then_estimate() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("sweep.cfg");
    std::fs::write(&sc, "# full grid, few snapshots\nsnapshots = 3\n").unwrap();
    let root = tmp.path().join("data");
    let o = nrpos(&["simulate", "--scenario", p(&sc), "--output", p(&root), "--jobs", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dirs = std::fs::read_dir(&root).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).count();
    assert_eq!(dirs, 30);

    let csv_path = tmp.path().join("est.csv");
    let o = nrpos(&["estimate", p(&root), "--output", p(&csv_path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("# nrpos estimate seed=1\nfile,peak_index,frac_offset,toa_ns,range_m,peak_to_noise_db,reliable"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 31);
    let (file, range) = (column(&rows, "file"), column(&rows, "range_m"));
    let row = rows.iter().find(|r| r[file] == "10m_ue_att_0").expect("10 m record");
    let r: f64 = row[range].parse().unwrap();
    assert!((r - 10.0).abs() <= 1.0, "{r}");
}

#[test]
fn simulate_rejects_ambiguous_distance() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = tmp.path().join("far.cfg");
    std::fs::write(&sc, "distances_m = 10, 500\nattenuations_db = 0\n").unwrap();
    let o = nrpos(&["simulate", "--scenario", p(&sc), "--output", p(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cyclic prefix") || stderr(&o).contains("CP"), "{}", stderr(&o));
}

#[test]
fn estimate_noise_only_record_is_unreliable() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nrpos(&["dataset", "make", "--distance", "9", "--snapshots", "4", "--output", p(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = tmp.path().join("9m_ue_att_0");
    std::fs::copy(dir.join(NOISE), dir.join(SRS_CHF)).unwrap();
    let o = nrpos(&["estimate", p(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][column(&rows, "reliable")], "false");
}

#[test]
fn estimate_empty_root_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nrpos(&["estimate", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(csv_rows(&stdout(&o)).len(), 1);
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn estimate_fails_when_every_record_is_broken() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("10m_ue_att_0");
    std::fs::create_dir(&dir).unwrap();
    for f in nrpos::dataset::DATA_FILES {
        std::fs::write(dir.join(f), [0u8; 3]).unwrap();
    }
    let o = nrpos(&["estimate", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn trace_record_extract_matches_dataset_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nrpos(&["dataset", "make", "--distance", "8", "--attenuation", "10", "--snapshots", "3", "--output", p(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec = tmp.path().join("8m_ue_att_10");
    let trace = tmp.path().join("run.nrpt");
    let o = nrpos(&["trace", "record", p(&rec), "--output", p(&trace)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let out = tmp.path().join("srschF.raw");
    let o = nrpos(&[
        "trace",
        "extract",
        p(&trace),
        "--id",
        "GNB_PHY_UL_FREQ_CHANNEL_ESTIMATE",
        "--field",
        "chest_f",
        "--output",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(rec.join(SRS_CHF)).unwrap());

    let o = nrpos(&["trace", "extract", p(&trace), "--id", "NOPE", "--field", "x", "--output", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trace_extract_from_empty_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let defs = tmp.path().join("T_messages.txt");
    std::fs::write(&defs, "ID = GNB_PHY_UL_FREQ_CHANNEL_ESTIMATE\n    GROUP = PHY\n    FORMAT = int,frame : buffer,chest_f\n").unwrap();
    let trace = tmp.path().join("empty.nrpt");
    std::fs::write(&trace, b"NRPT\x01\x00").unwrap();
    let out = tmp.path().join("out.raw");
    let o = nrpos(&[
        "trace",
        "extract",
        p(&trace),
        "--defs",
        p(&defs),
        "--id",
        "GNB_PHY_UL_FREQ_CHANNEL_ESTIMATE",
        "--field",
        "chest_f",
        "--output",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(std::fs::read(&out).unwrap().is_empty());
}

#[test]
fn metrics_and_scan() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nrpos(&["dataset", "make", "--distance", "7", "--snr", "20", "--snapshots", "2", "--output", p(tmp.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec = tmp.path().join("7m_ue_att_0");
    let o = nrpos(&["metrics", p(&rec.join(SRS_CHF)), "--noise", p(&rec.join(NOISE))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    let snr: f64 = rows[1][column(&rows, "snr_db")].parse().unwrap();
    assert!((snr - 20.0).abs() < 0.5, "{snr}");

    std::fs::create_dir(tmp.path().join("notes")).unwrap();
    let o = nrpos(&["dataset", "scan", p(tmp.path())]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "7m_ue_att_0");
    assert!(stderr(&o).contains("notes"));
    assert_eq!(nrpos(&["metrics", p(&rec.join(SRS_CHF)), "--device", "nope"]).status.code(), Some(1));
}

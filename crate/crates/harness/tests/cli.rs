use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ringsig::classifier::dataset::{Manifest, MANIFEST_FILE};
use ringsig::classifier::pmi::parse_pmi_csv;
use ringsig::classifier::ClassifierModel;
use ringsig::iqfile::{read_dump, read_iq_file, sidecar_path, IqMeta};
use ringsig::ModScheme;

fn ringsig(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringsig"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run ringsig")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn ber_table_shape_and_noiseless_row() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("ber.cfg"),
        "schemes = BPSK, QPSK, 8PSK\nes_n0_db = 2, 6, inf\ndata_bits = 3000\n",
    )
    .unwrap();
    ok(ringsig(dir.path(), &["ber", "--config", "ber.cfg", "--trials", "3"]));
    let csv = fs::read_to_string(dir.path().join("out/ber.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    let header = csv.lines().nth(1).unwrap();
    assert!(header.starts_with("scheme,es_n0_db,ber_measured,ber_theory,bits,errors"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 9);
    for r in rows.iter().filter(|r| r[1] == "inf") {
        assert_eq!(r[2], "0", "{r:?}");
        assert_eq!(r[3], "0");
    }
    assert!(rows.iter().all(|r| r[4] == "9000"));
}

#[test]
fn runs_are_reproducible_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), "es_n0_db = 3\ndata_bits = 2000\n").unwrap();
    let run = |seed: &str, out: &str| {
        ok(ringsig(
            dir.path(),
            &["ber", "--config", "c.cfg", "--seed", seed, "--out", out, "--trials", "4"],
        ));
        fs::read_to_string(dir.path().join(out).join("ber.csv")).unwrap()
    };
    let a = run("5", "a");
    let b = run("5", "b");
    let c = run("6", "c");
    assert_eq!(a, b);
    assert_ne!(data_rows(&a), data_rows(&c));
    assert!(c.contains("seed=6"));
}

#[test]
fn factor_sweep_reports_attacker() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("f.cfg"),
        "experiment = ber_vs_ip\nes_n0_db = inf\ni_m = 0.3\ni_p = 0, 4\ndata_bits = 4000\nsearch_window = 128\n",
    )
    .unwrap();
    ok(ringsig(dir.path(), &["ber-factors", "--config", "f.cfg", "--trials", "2"]));
    let csv = fs::read_to_string(dir.path().join("out/ber_factors.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r[4], "0", "key holder must decode noiseless frames");
    }
    // Magnitude factors alone do not move PSK decisions; phase factors do.
    assert_eq!(rows[0][5], "0");
    let attacker: f64 = rows[1][5].parse().unwrap();
    assert!((attacker - 0.5).abs() < 0.05, "{:?}", rows[1]);
}

#[test]
fn dump_writes_four_variants_with_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(ringsig(dir.path(), &["dump-iq", "--out", "d"]));
    assert_eq!(out.lines().count(), 4);
    for kind in ["unshaped", "phase_only", "magnitude_only", "shaped"] {
        let path = dir.path().join("d").join(format!("{kind}.iq"));
        let meta = IqMeta::read_file(sidecar_path(&path)).unwrap();
        let samples = read_iq_file(&path).unwrap();
        assert_eq!(samples.len(), meta.sample_count);
        assert_eq!(meta.scheme, ModScheme::Qpsk);
        assert!(meta.es_n0_db.is_infinite());
    }
    let (shaped, meta) = read_dump(dir.path().join("d/shaped.iq")).unwrap();
    assert_eq!((meta.i_p, meta.i_m), (4, 0.3));
    let lo = shaped.iter().map(|s| s.norm()).fold(f64::MAX, f64::min);
    assert!(lo >= 0.3 - 1e-6);
    let (plain, _) = read_dump(dir.path().join("d/unshaped.iq")).unwrap();
    assert!(plain.iter().all(|s| (s.norm() - 1.0).abs() < 1e-6));
}

#[test]
fn pmi_without_model_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = ringsig(dir.path(), &["pmi", "--out", "nothing"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model") && err.contains("model.txt"), "{err}");
}

#[test]
fn rejects_mismatched_config_and_zero_trials() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.cfg"), "experiment = pmi_sweep\n").unwrap();
    let out = ringsig(dir.path(), &["ber", "--config", "p.cfg"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("pmi_sweep"));
    let out = ringsig(dir.path(), &["ber", "--trials", "0"]);
    assert!(!out.status.success());
    fs::write(dir.path().join("bad.cfg"), "colour = blue\n").unwrap();
    let out = ringsig(dir.path(), &["ber", "--config", "bad.cfg"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn dataset_train_and_pmi_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("ds.cfg"),
        "blocks_per_class = 100\nsnr_grid = 15, 20, 25\nseed = 3\n",
    )
    .unwrap();
    ok(ringsig(dir.path(), &["gen-dataset", "--config", "ds.cfg", "--out", "ds"]));
    ok(ringsig(dir.path(), &["gen-dataset", "--config", "ds.cfg", "--out", "ds2"]));

    let manifest_text = fs::read_to_string(dir.path().join("ds").join(MANIFEST_FILE)).unwrap();
    assert_eq!(
        manifest_text,
        fs::read_to_string(dir.path().join("ds2").join(MANIFEST_FILE)).unwrap()
    );
    let manifest: Manifest = manifest_text.parse().unwrap();
    assert_eq!(manifest.entries.len(), 1000);
    for scheme in ModScheme::ALL {
        assert_eq!(manifest.split_counts(scheme), [80, 10, 10]);
        let name = format!("{scheme}.iq");
        let bytes = fs::read(dir.path().join("ds").join(&name)).unwrap();
        assert_eq!(bytes.len(), 100 * 1024 * 8);
        assert_eq!(bytes, fs::read(dir.path().join("ds2").join(&name)).unwrap());
    }

    fs::write(
        dir.path().join("train.cfg"),
        "dataset = ds\nmodel = m/model.txt\n",
    )
    .unwrap();
    let out = ok(ringsig(dir.path(), &["train-clf", "--config", "train.cfg", "--out", "t"]));
    assert!(out.contains("held-out accuracy"));
    let model = ClassifierModel::load(dir.path().join("m/model.txt")).unwrap();
    assert_eq!(model.classes.len(), 10);
    let confusion = fs::read_to_string(dir.path().join("t/confusion.csv")).unwrap();
    assert_eq!(data_rows(&confusion).len(), 10);

    fs::write(
        dir.path().join("pmi.cfg"),
        "model = m/model.txt\ni_p = 1, 4\ni_m = 1, 0.3\n",
    )
    .unwrap();
    ok(ringsig(dir.path(), &["pmi", "--config", "pmi.cfg", "--trials", "200", "--out", "p"]));
    let reports = parse_pmi_csv(&fs::read_to_string(dir.path().join("p/pmi.csv")).unwrap()).unwrap();
    assert_eq!(reports.len(), 4);
    assert!(reports.iter().all(|r| r.trials == 200 && r.point.es_n0_db == 20.0));
}

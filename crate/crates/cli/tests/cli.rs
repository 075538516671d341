//! Exit-code contract and byte-level determinism of the CLI.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pbmo-lab"))
}

fn repo_config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn read_csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        if name.ends_with(".csv") {
            out.insert(name, std::fs::read(entry.path()).unwrap());
        }
    }
    out
}

#[test]
fn accept_11_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("run1");
    let out2 = tmp.path().join("run2");
    for out in [&out1, &out2] {
        let status = bin()
            .args([
                "--config",
                &repo_config("heat.conf"),
                "--seed",
                "42",
                "--out",
            ])
            .arg(out)
            .arg("all")
            .status()
            .unwrap();
        assert!(status.success(), "run all failed: {status:?}");
    }
    let a = read_csvs(&out1);
    let b = read_csvs(&out2);
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    let mut bytes = 0usize;
    for (name, data) in &a {
        assert_eq!(
            Some(data),
            b.get(name).as_deref(),
            "{name} differs between runs"
        );
        bytes += data.len();
    }
    println!(
        "ACCEPTANCE 11 rerun determinism: PASS ({} CSV files, {bytes} bytes byte-identical)",
        a.len()
    );
}

#[test]
fn constant_field_seminorm_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("const.conf");
    std::fs::write(
        &conf,
        "seed = 1\n[domain]\nkind = interval\nh = 0.0625\n[cylinder]\nT = 1\np = 2\nnt = 32\n[field]\nkind = constant\nvalue = 3\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let status = bin()
        .args(["--config"])
        .arg(&conf)
        .args(["--out"])
        .arg(&out)
        .arg("pbmo")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("seminorm.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert_eq!(row.split(',').nth(1), Some("0"));
}

#[test]
fn chain_past_horizon_is_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("bad.conf");
    // delta q^p far beyond the horizon
    std::fs::write(
        &conf,
        "seed = 1\n[domain]\nkind = lshape\nsize = 1\nh = 0.03125\n[cylinder]\nT = 0.1\np = 2\nnt = 16\n[point]\nzx = 0.25\nzy = 0.25\n[chain]\ndelta = 50\neta = 40\n",
    )
    .unwrap();
    let status = bin()
        .args(["--config"])
        .arg(&conf)
        .args(["--out"])
        .arg(tmp.path().join("out"))
        .arg("chain")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn malformed_config_is_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("broken.conf");
    std::fs::write(&conf, "this is not a config\n").unwrap();
    let status = bin()
        .args(["--config"])
        .arg(&conf)
        .args(["--out"])
        .arg(tmp.path().join("out"))
        .arg("qh")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let missing = bin()
        .args(["--config", "/nonexistent.conf", "--out"])
        .arg(tmp.path().join("out2"))
        .arg("qh")
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_input_error() {
    let status = bin().arg("frobnicate").status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn mask_file_domain() {
    let tmp = tempfile::tempdir().unwrap();
    let mask = tmp.path().join("dom.mask");
    std::fs::write(&mask, "2 4 4 0.25\n##..\n##..\n####\n####\n").unwrap();
    let conf = tmp.path().join("m.conf");
    std::fs::write(
        &conf,
        format!(
            "seed = 1\n[domain]\nkind = file\npath = {}\n[cylinder]\nT = 1\np = 2\nnt = 8\n",
            mask.display()
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let status = bin()
        .args(["--config"])
        .arg(&conf)
        .args(["--out"])
        .arg(&out)
        .arg("qh")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("qh.csv")).unwrap();
    assert_eq!(csv.lines().count() - 1, 12); // interior cells of the mask
}

#[test]
fn refine_halves_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("r.conf");
    std::fs::write(
        &conf,
        "seed = 1\n[domain]\nkind = interval\nh = 0.0625\n[cylinder]\nT = 1\np = 2\nnt = 16\n[field]\nkind = constant\nvalue = 2\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let status = bin()
        .args(["--config"])
        .arg(&conf)
        .args(["--out"])
        .arg(&out)
        .args(["--refine", "1", "qh"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("qh.csv")).unwrap();
    // 16 cells at the base resolution become 32
    assert_eq!(csv.lines().count() - 1, 32);
}

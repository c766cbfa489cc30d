use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lfglt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfglt"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn lfglt")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = lfglt(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("qp,bpp,psnr_r,psnr_g,psnr_b,psnr_avg"));
    lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn synth_train_encode_decode_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let synth = ["--views", "3", "--size", "32", "--noise", "1"];
    ok(
        &[&["synth", "--output", "train", "--seed", "2"][..], &synth].concat(),
        d,
    );
    ok(
        &[&["synth", "--output", "scene", "--seed", "1"][..], &synth].concat(),
        d,
    );
    assert!(
        d.join("scene.lfraw").exists()
            && d.join("scene.calib.json").exists()
            && d.join("scene.lfscene").exists()
    );
    ok(
        &[
            "train",
            "--input",
            "train.lfraw",
            "--output",
            "modes.lfbank",
        ],
        d,
    );

    ok(
        &[
            "encode",
            "--input",
            "scene.lfraw",
            "--output",
            "lossless.lfgc",
            "--qp",
            "4",
            "--bank",
            "modes.lfbank",
        ],
        d,
    );
    ok(
        &[
            "decode",
            "--input",
            "lossless.lfgc",
            "--output",
            "restored.lfraw",
            "--bank",
            "modes.lfbank",
        ],
        d,
    );
    assert_eq!(
        fs::read(d.join("restored.lfraw")).unwrap(),
        fs::read(d.join("scene.lfraw")).unwrap()
    );

    ok(
        &[
            "encode",
            "--input",
            "scene.lfraw",
            "--output",
            "lossy.lfgc",
            "--qp",
            "22",
            "--bank",
            "modes.lfbank",
        ],
        d,
    );
    ok(
        &[
            "decode",
            "--input",
            "lossy.lfgc",
            "--output",
            "views.lfscene",
            "--bank",
            "modes.lfbank",
            "--demosaic",
        ],
        d,
    );
    let stdout = ok(
        &[
            "eval",
            "--input",
            "views.lfscene",
            "--reference",
            "scene.lfscene",
            "--stream",
            "lossy.lfgc",
            "--csv",
            "rd.csv",
        ],
        d,
    );
    let rows = csv_rows(&fs::read_to_string(d.join("rd.csv")).unwrap());
    assert_eq!(csv_rows(&stdout), rows);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 22.0);
    assert!(rows[0][1] > 0.0 && rows[0][5] > 20.0, "{:?}", rows[0]);

    // A second evaluation appends.
    ok(
        &[
            "eval",
            "--input",
            "views.lfscene",
            "--reference",
            "scene.lfscene",
            "--csv",
            "rd.csv",
        ],
        d,
    );
    assert_eq!(
        csv_rows(&fs::read_to_string(d.join("rd.csv")).unwrap()).len(),
        2
    );
}

#[test]
fn rd_sweep_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(
        &[
            "synth", "--output", "scene", "--seed", "4", "--views", "3", "--size", "32", "--noise",
            "1",
        ],
        d,
    );
    let stdout = ok(
        &[
            "rd-sweep",
            "--input",
            "scene.lfraw",
            "--graph",
            "distance",
            "--csv",
            "rd.csv",
        ],
        d,
    );
    let rows = csv_rows(&fs::read_to_string(d.join("rd.csv")).unwrap());
    assert_eq!(csv_rows(&stdout), rows);
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec![4.0, 10.0, 16.0, 22.0, 28.0, 34.0]
    );
    for w in rows.windows(2) {
        assert!(w[1][1] < w[0][1], "bpp not decreasing: {w:?}");
        assert!(w[1][5] < w[0][5], "PSNR not decreasing: {w:?}");
    }
}

#[test]
fn synth_seed_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let run = |prefix: &str, seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_lfglt"))
            .args([
                "synth", "--output", prefix, "--views", "3", "--size", "16", "--noise", "2",
            ])
            .env("LFGLT_SEED", seed)
            .current_dir(d)
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(d.join(format!("{prefix}.lfraw"))).unwrap()
    };
    assert_eq!(run("a", "9"), run("b", "9"));
    assert_ne!(run("a", "9"), run("c", "10"));
}

#[test]
fn usage_and_runtime_errors_have_distinct_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(
        lfglt(&["encode", "--no-such-flag"], d).status.code(),
        Some(2)
    );
    assert_eq!(lfglt(&[], d).status.code(), Some(2));

    ok(
        &["synth", "--output", "scene", "--views", "3", "--size", "16"],
        d,
    );
    let bad_qp = lfglt(
        &[
            "encode",
            "--input",
            "scene.lfraw",
            "--output",
            "x.lfgc",
            "--qp",
            "40",
            "--graph",
            "distance",
        ],
        d,
    );
    assert_eq!(bad_qp.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_qp.stderr).starts_with("error:"));

    // Learned graphs need a bank.
    let no_bank = lfglt(
        &[
            "encode",
            "--input",
            "scene.lfraw",
            "--output",
            "x.lfgc",
            "--qp",
            "22",
        ],
        d,
    );
    assert_eq!(no_bank.status.code(), Some(1));

    let missing = lfglt(
        &["decode", "--input", "absent.lfgc", "--output", "x.lfraw"],
        d,
    );
    assert_eq!(missing.status.code(), Some(1));

    fs::write(d.join("junk.lfgc"), b"LFGC but not really a stream").unwrap();
    let junk = lfglt(
        &["decode", "--input", "junk.lfgc", "--output", "x.lfraw"],
        d,
    );
    assert_eq!(junk.status.code(), Some(1));
}

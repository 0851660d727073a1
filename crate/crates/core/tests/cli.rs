use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pseudo_pca::io::table::{parse_feature_csv, parse_ohlc_csv, read_eigenvalues, read_loadings, read_scores_ohlc};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn cli(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseudo-pca")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_well_formed_svg(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    text
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(cli(&[&"frobnicate"]).status.code(), Some(1));
    assert_eq!(cli(&[&"ppca", &"--bogus"]).status.code(), Some(1));
    assert_eq!(cli(&[]).status.code(), Some(1));
    let o = cli(&[&"transform", &"--input", &"x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--output"));
}

#[test]
fn help_and_version_exit_with_zero() {
    let o = cli(&[&"--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("simulate"));
    assert_eq!(cli(&[&"--version"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_with_two_and_report_location() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cli(&[&"inverse", &"--input", &dir.path().join("nope.csv"), &"--output", &dir.path().join("o.csv")]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("nope.csv"));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "entity,variable,open,high,low,close\nA,beef,1,2,1,1.5\nB,beef,1,2,x,1.5\n").unwrap();
    let o = cli(&[&"transform", &"--input", &bad, &"--output", &dir.path().join("o.csv")]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 3") && msg.contains("low"), "{msg}");

    let inconsistent = dir.path().join("inc.csv");
    fs::write(&inconsistent, "entity,variable,open,high,low,close\nA,beef,3,2,1,1.5\n").unwrap();
    let o = cli(&[&"transform", &"--input", &inconsistent, &"--output", &dir.path().join("o.csv")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("A/beef"), "{}", stderr(&o));

    let o = cli(&[
        &"ppca",
        &"--input",
        &fixture("raw_ohlc.csv"),
        &"--components",
        &"7",
        &"--outdir",
        &dir.path().join("m"),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn transform_then_inverse_recovers_interior_bars() {
    let dir = tempfile::tempdir().unwrap();
    let (feat, back) = (dir.path().join("feat.csv"), dir.path().join("back.csv"));
    assert!(cli(&[&"transform", &"--input", &fixture("raw_ohlc.csv"), &"--output", &feat]).status.success());
    assert!(cli(&[&"inverse", &"--input", &feat, &"--output", &back]).status.success());
    let raw = parse_ohlc_csv(&fixture("raw_ohlc.csv")).unwrap();
    let round = parse_ohlc_csv(&back).unwrap();
    assert_eq!(raw.records.len(), 120);
    assert_eq!(round.records.len(), 120);
    let mut interior = 0;
    for (a, b) in raw.records.iter().zip(&round.records) {
        assert_eq!((&a.entity, &a.variable), (&b.entity, &b.variable));
        let x = a.bar;
        if x.low < x.open && x.open < x.high && x.low < x.close && x.close < x.high {
            interior += 1;
            for (u, v) in [(x.open, b.bar.open), (x.high, b.bar.high), (x.low, b.bar.low), (x.close, b.bar.close)] {
                assert!((u - v).abs() <= 1e-9 * u.abs(), "{}/{}: {u} vs {v}", a.entity, a.variable);
            }
        }
    }
    assert!(interior > 60, "only {interior} interior bars");
}

#[test]
fn transform_honours_preprocessing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    fs::write(&input, "entity,variable,open,high,low,close\nA,lamb,58,58,58,58\nB,lamb,0,0,0,0\n").unwrap();
    let up = dir.path().join("up.csv");
    let down = dir.path().join("down.csv");
    let o = cli(&[&"transform", &"--input", &input, &"--output", &up]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("dropped"));
    assert!(cli(&[&"transform", &"--input", &input, &"--output", &down, &"--flat-policy", &"limit-down"])
        .status
        .success());
    let up = parse_feature_csv(&up).unwrap();
    let down = parse_feature_csv(&down).unwrap();
    assert_eq!(up.records.len(), 1);
    // Limit-up pushes the close to the top of the range, limit-down the open.
    assert!(up.records[0].features.y4() > 0.0 && up.records[0].features.y3() < 0.0);
    assert!(down.records[0].features.y3() > 0.0 && down.records[0].features.y4() < 0.0);
    let bad_eps =
        cli(&[&"transform", &"--input", &input, &"--output", &dir.path().join("e.csv"), &"--epsilon", &"0.7"]);
    assert_eq!(bad_eps.status.code(), Some(2));
}

#[test]
fn ppca_on_standardized_fixture_writes_model_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("model");
    let o = cli(&[
        &"ppca",
        &"--input",
        &fixture("features_std.csv"),
        &"--input-kind",
        &"standardized",
        &"--components",
        &"2",
        &"--outdir",
        &out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let eig = read_eigenvalues(&out.join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.len(), 6);
    assert_eq!(eig[0].component, 1);
    assert!((eig[0].eigenvalue - 2.065).abs() < 0.05);
    assert!((eig[0].cvcr - 0.344).abs() < 0.005);
    assert!((eig[1].cvcr - 0.574).abs() < 0.01);
    let text = fs::read_to_string(out.join("eigenvalues.csv")).unwrap();
    assert!(text.trim_end().ends_with(",1.000000"), "{text}");

    let loadings = read_loadings(&out.join("loadings.csv")).unwrap();
    let pc1: Vec<f64> = loadings.iter().map(|r| r.loadings[0]).collect();
    for (g, want) in pc1.iter().zip([0.222, 0.115, 0.248, 0.543, 0.599, 0.471]) {
        assert!((g - want).abs() < 0.05);
    }

    let scores = read_scores_ohlc(&out.join("scores_ohlc.csv")).unwrap();
    assert_eq!(scores.len(), 40);
    assert_eq!((scores[0].entity.as_str(), scores[0].component), ("Baotou", 1));
    assert_eq!((scores[1].entity.as_str(), scores[1].component), ("Baotou", 2));

    for name in ["scree.svg", "candles_pc1.svg", "candles_pc2.svg", "loadings_pc1.svg", "loadings_pc2.svg"] {
        assert_well_formed_svg(&out.join(name));
    }
    let candles = assert_well_formed_svg(&out.join("candles_pc1.svg"));
    assert_eq!(candles.matches("class=\"candle ").count(), 20);
    assert!(candles.contains(">Zhangjiajie<"));
    let scree = assert_well_formed_svg(&out.join("scree.svg"));
    assert!(scree.contains(">34.4%<"));
}

#[test]
fn ppca_with_all_components_reaches_full_contribution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    assert!(cli(&[&"ppca", &"--input", &fixture("raw_ohlc.csv"), &"--components", &"6", &"--outdir", &out])
        .status
        .success());
    let eig = read_eigenvalues(&out.join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.last().unwrap().cvcr, 1.0);
    assert!((eig.iter().map(|r| r.eigenvalue).sum::<f64>() - 6.0).abs() < 1e-4);
    assert_eq!(read_loadings(&out.join("loadings.csv")).unwrap()[0].loadings.len(), 6);
}

#[test]
fn plot_subcommands_render_from_model_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    assert!(cli(&[&"ppca", &"--input", &fixture("features_std.csv"), &"--input-kind", &"features", &"--outdir", &out])
        .status
        .success());

    let scree = dir.path().join("scree.svg");
    assert!(cli(&[&"plot", &"scree", &"--model", &out, &"--output", &scree]).status.success());
    assert_eq!(fs::read(&scree).unwrap(), fs::read(out.join("scree.svg")).unwrap());

    let candles = dir.path().join("c2.svg");
    let o = cli(&[
        &"plot",
        &"candles",
        &"--scores",
        &out.join("scores_ohlc.csv"),
        &"--component",
        &"2",
        &"--output",
        &candles,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(assert_well_formed_svg(&candles).matches("class=\"candle ").count(), 20);

    let o = cli(&[
        &"plot",
        &"candles",
        &"--scores",
        &out.join("scores_ohlc.csv"),
        &"--component",
        &"3",
        &"--output",
        &candles,
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_report_has_full_contribution() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("sim.csv");
    let svg = dir.path().join("sim.svg");
    let o = cli(&[
        &"simulate",
        &"--n",
        &"200",
        &"--repeats",
        &"300",
        &"--seed",
        &"42",
        &"--output",
        &report,
        &"--svg",
        &svg,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sample_size,pc_index,mape_mean_pct,mape_sd,q4_mean"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[6][1], "mean");
    for r in &rows {
        assert_eq!(r[0], "200");
        assert_eq!(r[4].parse::<f64>().unwrap(), 1.0);
    }
    let chart = assert_well_formed_svg(&svg);
    assert!(chart.contains("n = 200"));
}

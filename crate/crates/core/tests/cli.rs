mod common;

use std::fs;
use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use common::{TOY, TOY_F1, TOY_F2};
use lineup_spectral::cli::{fmt_sig6, parse_plant, run, CliError, RunConfig};

fn config(args: &[&str]) -> RunConfig {
    RunConfig::try_parse_from(std::iter::once("lineup-spectral").chain(args.iter().copied()))
        .unwrap()
}

fn read_csv(path: &Path) -> (String, Vec<csv::StringRecord>, csv::StringRecord) {
    let text = fs::read_to_string(path).unwrap();
    let header_line = text.lines().next().unwrap().to_string();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = r.headers().unwrap().clone();
    (
        header_line,
        r.records().map(|x| x.unwrap()).collect(),
        headers,
    )
}

fn synth_season(dir: &Path, seed: u64) -> String {
    let out = dir.join("synth");
    let seed = seed.to_string();
    run(&config(&[
        "synth",
        "--output",
        out.to_str().unwrap(),
        "--seed",
        &seed,
        "--plant",
        "3;7=0.6",
        "--plant",
        "2;5;10=1.2",
    ]))
    .unwrap();
    out.join("plays.csv").to_str().unwrap().to_string()
}

#[test]
fn sig6_formatting() {
    assert_eq!(fmt_sig6(0.0), "0");
    assert_eq!(fmt_sig6(1.0), "1");
    assert_eq!(fmt_sig6(-15.333333333), "-15.3333");
    assert_eq!(fmt_sig6(123456789.0), "1.23457e+08");
    assert_eq!(fmt_sig6(0.000012345678), "1.23457e-05");
    assert_eq!(fmt_sig6(0.00033300033), "0.000333");
    assert_eq!(fmt_sig6(999999.7), "1e+06");
    assert_eq!(fmt_sig6(f64::NAN), "NA");
}

#[test]
fn plant_flag_parsing() {
    let p = parse_plant("3;7=0.6").unwrap();
    assert_eq!(p.members, vec![2, 6]);
    assert_eq!(p.effect, 0.6);
    for bad in ["3;7", "0;2=1", "a=1", "3;7=x"] {
        assert!(
            matches!(parse_plant(bad), Err(CliError::Config(_))),
            "{bad}"
        );
    }
}

#[test]
fn toy_decompose_reproduces_components() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("toy.csv");
    fs::write(&input, common::toy_play_csv()).unwrap();
    let out = dir.path().join("out");
    run(&config(&[
        "decompose",
        "--input",
        input.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--n",
        "5",
        "--k",
        "2",
    ]))
    .unwrap();

    let (meta, rows, headers) = read_csv(&out.join("components.csv"));
    assert!(meta.starts_with("# command=decompose version="));
    assert!(meta.contains("seed=none") && meta.contains("input_sha256="));
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["lineup", "f", "f0", "f1", "f2"]
    );
    for (idx, ((i, j), val)) in TOY.iter().enumerate() {
        let label = format!("{i};{j}");
        let row = rows.iter().find(|r| r[0] == label).unwrap();
        let num = |c: usize| row[c].parse::<f64>().unwrap();
        assert!((num(1) - val).abs() < 1e-9);
        assert!((num(2) - 36.6).abs() < 0.01);
        assert!((num(3) - TOY_F1[idx]).abs() < 0.01, "{label} f1 {}", num(3));
        assert!((num(4) - TOY_F2[idx]).abs() < 0.01, "{label} f2 {}", num(4));
    }
    let (_, sf, _) = read_csv(&out.join("success_function.csv"));
    assert_eq!(sf.len(), 10);
    assert!(sf.iter().all(|r| &r[2] == "1"));
}

#[test]
fn mass_null_row_matches_reference_null() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_season(dir.path(), 4);
    let out = dir.path().join("mass");
    run(&config(&[
        "mass",
        "--input",
        &input,
        "--output",
        out.to_str().unwrap(),
        "--trials",
        "20",
        "--seed",
        "1",
    ]))
    .unwrap();
    let (meta, rows, _) = read_csv(&out.join("mass.csv"));
    assert!(meta.contains("seed=1"));
    let names: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    assert_eq!(names, ["observed", "null", "permutation_null"]);
    let reference = [0.000, 0.005, 0.030, 0.117, 0.303, 0.545];
    for (c, p) in reference.iter().enumerate() {
        let x: f64 = rows[1][c + 1].parse().unwrap();
        assert_eq!(format!("{x:.3}"), format!("{p:.3}"));
    }
    for r in &rows {
        let total: f64 = (1..=6).map(|c| r[c].parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-4);
    }
}

#[test]
fn synth_then_contributions_recovers_planted_pair() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_season(dir.path(), 2);
    let out = dir.path().join("contrib");
    run(&config(&[
        "contributions",
        "--input",
        &input,
        "--output",
        out.to_str().unwrap(),
        "--min-poss",
        "200",
    ]))
    .unwrap();
    let (_, pairs, _) = read_csv(&out.join("contributions_order2.csv"));
    assert_eq!(&pairs[0][1], "P03;P07");
    let (_, triples, _) = read_csv(&out.join("contributions_order3.csv"));
    assert_eq!(&triples[0][1], "P02;P05;P10");
    let (_, scatter, headers) = read_csv(&out.join("scatter.csv"));
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["group", "order", "sclp", "pm_per_log_poss"]
    );
    assert!(scatter.len() >= pairs.len() + triples.len());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = synth_season(dir.path(), 6);
    for format in ["csv", "json"] {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{format}{rep}"));
            let o = out.to_str().unwrap();
            let mut files = Vec::new();
            for args in [
                vec![
                    "stability",
                    "--order",
                    "2",
                    "--min-poss",
                    "1500",
                    "--trials",
                    "6",
                    "--seed",
                    "9",
                ],
                vec!["mass", "--trials", "10", "--seed", "9"],
                vec!["contributions", "--order", "2"],
            ] {
                let mut full = args.clone();
                full.extend(["--input", &input, "--output", o, "--format", format]);
                files.extend(run(&config(&full)).unwrap());
            }
            outputs.push(
                files
                    .iter()
                    .map(|f| fs::read(f).unwrap())
                    .collect::<Vec<_>>(),
            );
        }
        assert_eq!(outputs[0], outputs[1], "{format}");
    }
}

#[test]
fn json_metadata_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("toy.csv");
    fs::write(&input, common::toy_play_csv()).unwrap();
    let out = dir.path().join("out");
    run(&config(&[
        "decompose",
        "--input",
        input.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "--n",
        "5",
        "--k",
        "2",
        "--format",
        "json",
    ]))
    .unwrap();
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("decompose.json")).unwrap()).unwrap();
    assert_eq!(doc["metadata"]["command"], "decompose");
    assert_eq!(doc["metadata"]["seed"], "none");
    assert_eq!(doc["metadata"]["input_sha256"].as_str().unwrap().len(), 64);
    let lineups = doc["data"]["lineups"].as_array().unwrap();
    let last = lineups.iter().find(|l| l["lineup"] == "4;5").unwrap();
    let f2 = last["components"][2].as_f64().unwrap();
    assert!((f2 + 46.0 / 3.0).abs() < 1e-12);
}

#[test]
fn randomized_commands_require_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("toy.csv");
    fs::write(&input, common::toy_play_csv()).unwrap();
    let i = input.to_str().unwrap();
    let o = dir.path().to_str().unwrap();
    for args in [
        vec!["mass", "--trials", "5"],
        vec!["stability", "--trials", "5", "--order", "1"],
        vec!["ridge"],
        vec!["synth"],
    ] {
        let mut full = args.clone();
        full.extend(["--input", i, "--output", o, "--n", "5", "--k", "2"]);
        let err = run(&config(&full)).unwrap_err();
        assert!(
            matches!(err, CliError::Config(ref m) if m.contains("--seed")),
            "{args:?}: {err}"
        );
    }
}

#[test]
fn binary_exit_codes_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_lineup-spectral");
    let o = dir.path().join("o");
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "game_id,sequence\nG,1\n").unwrap();
    let malformed = dir.path().join("malformed.csv");
    let mut text = common::toy_play_csv();
    text.push_str("toy9,2,4;5,a;b,zero,0,1,0\n");
    fs::write(&malformed, text).unwrap();
    let toy = dir.path().join("toy.csv");
    fs::write(&toy, common::toy_play_csv()).unwrap();

    let cases: [(Vec<&str>, i32, &str); 4] = [
        (
            vec![
                "mass",
                "--input",
                toy.to_str().unwrap(),
                "--n",
                "5",
                "--k",
                "2",
            ],
            2,
            "config error",
        ),
        (
            vec!["decompose", "--input", bad.to_str().unwrap()],
            3,
            "parse error",
        ),
        (
            vec![
                "decompose",
                "--input",
                malformed.to_str().unwrap(),
                "--n",
                "5",
                "--k",
                "2",
            ],
            3,
            "parse error",
        ),
        (
            vec![
                "decompose",
                "--input",
                toy.to_str().unwrap(),
                "--n",
                "3",
                "--k",
                "2",
            ],
            2,
            "config error",
        ),
    ];
    for (args, code, class) in cases {
        let res = Process::new(exe)
            .args(&args)
            .arg("--output")
            .arg(&o)
            .output()
            .unwrap();
        let stderr = String::from_utf8(res.stderr).unwrap();
        assert_eq!(res.status.code(), Some(code), "{args:?}: {stderr}");
        assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
        assert!(stderr.contains(class), "{stderr}");
    }
    let ok = Process::new(exe)
        .args([
            "decompose",
            "--input",
            toy.to_str().unwrap(),
            "--n",
            "5",
            "--k",
            "2",
            "--output",
        ])
        .arg(&o)
        .output()
        .unwrap();
    assert!(ok.status.success());
}

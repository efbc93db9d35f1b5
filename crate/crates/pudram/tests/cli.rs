// SPDX-License-Identifier: Apache-2.0
use std::path::{Path, PathBuf};
use std::process::Command;

use pudram::formats::{parse_dump, parse_microprogram, parse_trace, report_value};
use pudram_core::reliability::{monobit_p, pack_bits};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn pudram(args: &[&str]) -> Out {
    let o = Command::new(env!("CARGO_BIN_EXE_pudram")).args(args).output().unwrap();
    Out {
        code: o.status.code().unwrap(),
        stdout: String::from_utf8(o.stdout).unwrap(),
        stderr: String::from_utf8(o.stderr).unwrap(),
    }
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).to_str().unwrap().to_string()
}

fn tmp(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn compile_full_adder() {
    let d = tempfile::tempdir().unwrap();
    let out = tmp(d.path(), "fa.mp");
    let r = pudram(&["compile", &data("full_adder.net"), "-o", &out]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let acts: usize = report_value(&r.stdout, "activations").unwrap().parse().unwrap();
    let prog = parse_microprogram(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(prog.declared_activations, acts);
    assert_eq!(prog.opcode, "bbop_full_adder");
    assert!(report_value(&r.stdout, "nodes_before").is_some());
    assert!(report_value(&r.stdout, "nodes_after").is_some());

    let r0 = pudram(&["compile", &data("full_adder.net"), "--no-optimize", "-o", &tmp(d.path(), "fa0.mp")]);
    let acts0: usize = report_value(&r0.stdout, "activations").unwrap().parse().unwrap();
    assert!(acts0 >= acts);

    // Without -o the program goes to stdout and the report to stderr.
    let r = pudram(&["compile", &data("full_adder.net")]);
    assert_eq!(parse_microprogram(&r.stdout).unwrap(), prog);
    assert!(r.stderr.contains("activations="));
}

#[test]
fn malformed_netlist_reports_the_line() {
    let d = tempfile::tempdir().unwrap();
    let p = tmp(d.path(), "bad.net");
    std::fs::write(&p, "INPUT a b\nOUTPUT y\ny = NAND a b\n").unwrap();
    let r = pudram(&["compile", &p]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 3"), "{}", r.stderr);
    assert!(r.stdout.is_empty());
}

#[test]
fn run_add_demo() {
    let d = tempfile::tempdir().unwrap();
    let (trace, dump) = (tmp(d.path(), "t.txt"), tmp(d.path(), "d.txt"));
    let r = pudram(&["run", &data("add_demo.bbop"), "--trace", &trace, "--dump", &dump]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let lanes: Vec<u64> = r
        .stdout
        .lines()
        .next()
        .unwrap()
        .strip_prefix("r16: ")
        .unwrap()
        .split(' ')
        .map(|x| x.parse().unwrap())
        .collect();
    let want: Vec<u64> = (0..64u64).map(|i| (if i == 63 { 255 } else { i } + 3) & 0xff).collect();
    assert_eq!(lanes, want);
    assert!(r.stdout.contains("reduce total=130 "));
    assert!(report_value(&r.stdout, "total.activations").is_some());
    assert_eq!(report_value(&r.stdout, "stmt2.simd_utilization"), Some("1"));

    let text = std::fs::read_to_string(&trace).unwrap();
    let t = parse_trace(&text, 4).unwrap();
    assert_eq!(t.counters().acts.to_string(), report_value(&r.stdout, "total.activations").unwrap());
    assert_eq!(pudram::formats::format_trace(&t), text);
    let (g, rows) = parse_dump(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(rows.len(), g.total_rows());
}

#[test]
fn run_errors() {
    let d = tempfile::tempdir().unwrap();
    let p = tmp(d.path(), "p.bbop");
    std::fs::write(&p, "load r=0 w=4 fill=1\nbbop_mul dst=8 s1=0 s2=0 mats=0:0 w=4 n=4\n").unwrap();
    let r = pudram(&["run", &p]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("unknown opcode") && r.stderr.contains("line 2"), "{}", r.stderr);

    std::fs::write(&p, "bbop_add dst=8 s1=0 s2=4 mats=0:9 w=4 n=4\n").unwrap();
    assert_eq!(pudram(&["run", &p]).code, 1);
}

#[test]
fn run_with_a_compiled_microprogram() {
    let d = tempfile::tempdir().unwrap();
    let mp = tmp(d.path(), "fa.mp");
    assert_eq!(pudram(&["compile", &data("full_adder.net"), "-o", &mp]).code, 0);
    let p = tmp(d.path(), "fa.bbop");
    std::fs::write(
        &p,
        "load r=0 w=1 v=0,0,0,0,1,1,1,1\nload r=1 w=1 v=0,0,1,1,0,0,1,1\nload r=2 w=1 v=0,1,0,1,0,1,0,1\n\
         bbop_full_adder dst=10 s1=0 s2=1 s3=2 mats=0:0 w=1 n=8\nprint r=10 w=1 n=8\nprint r=11 w=1 n=8\n",
    )
    .unwrap();
    let r = pudram(&["run", &p, "--microprogram", &mp]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.starts_with("r10: 0 1 1 0 1 0 0 1\nr11: 0 0 0 1 0 1 1 1\n"), "{}", r.stdout);
}

#[test]
fn primitives() {
    let r = pudram(&["primitive", "multicopy", "--n", "31"]);
    assert_eq!(r.code, 0);
    assert_eq!(report_value(&r.stdout, "rows_equal"), Some("31/31"));
    for bad in [&["primitive", "multicopy", "--n", "32"][..], &["primitive", "nand16", "--n", "x"], &["primitive"]] {
        let r = pudram(bad);
        assert_eq!(r.code, 1, "{bad:?}");
        assert!(!r.stderr.is_empty());
    }
    // A balanced activation without noise is a sensing tie.
    assert_eq!(pudram(&["primitive", "trng-sample"]).code, 2);
    assert_eq!(pudram(&["primitive", "trng-sample", "--sigma", "0.05"]).code, 0);
}

#[test]
fn golden_trace_check() {
    let d = tempfile::tempdir().unwrap();
    let t = tmp(d.path(), "not.trace");
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/not.trace");
    let golden = golden.to_str().unwrap();
    assert_eq!(pudram(&["primitive", "not", "--trace", &t]).code, 0);
    let r = pudram(&["trace-check", &t, golden]);
    assert_eq!((r.code, r.stdout.as_str()), (0, "ok commands=4\n"));
    let other = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/and16.trace");
    let r = pudram(&["trace-check", &t, other.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 1"));
}

#[test]
fn sweep_table() {
    let r = pudram(&["--config", &data("demo.toml"), "sweep", "--trials", "50"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], pudram::formats::SWEEP_HEADER);
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1].starts_with("not,0,random,50,50,"));
    let r = pudram(&["sweep", "--trials", "0"]);
    assert_eq!(r.code, 1);
    assert!(r.stdout.is_empty());
}

#[test]
fn trng_writes_stream_and_report() {
    let d = tempfile::tempdir().unwrap();
    let (out, raw) = (tmp(d.path(), "c.bin"), tmp(d.path(), "r.bin"));
    let r = pudram(&["trng", "--sigma", "0.05", "--bits", "8192", "-o", &out, "--raw-out", &raw]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(std::fs::read(&out).unwrap().len(), 512);
    let raw_bytes = std::fs::read(&raw).unwrap();
    assert_eq!(raw_bytes.len(), 1024);
    let bits: Vec<bool> = raw_bytes.iter().flat_map(|&b| (0..8).map(move |i| b >> i & 1 == 1)).collect();
    assert_eq!(pack_bits(&bits), raw_bytes);
    let p: f64 = report_value(&r.stdout, "raw.monobit_p").unwrap().parse().unwrap();
    assert_eq!(p, monobit_p(&bits));
    assert!(report_value(&r.stdout, "conditioned.runs_p").is_some());
    assert_eq!(pudram(&["trng", "-o", &out]).code, 2);
}

#[test]
fn strict_config() {
    let d = tempfile::tempdir().unwrap();
    let p = tmp(d.path(), "c.toml");
    std::fs::write(&p, "[noise]\nsigmaa = 0.1\n").unwrap();
    let r = pudram(&["--config", &p, "primitive", "not"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("sigmaa"), "{}", r.stderr);
}

#[test]
fn output_dir_from_config() {
    let d = tempfile::tempdir().unwrap();
    let p = tmp(d.path(), "c.toml");
    let outdir = d.path().join("out");
    std::fs::write(&p, format!("[paths]\noutput_dir = {:?}\nprogram = {:?}\n", outdir, data("add_demo.bbop"))).unwrap();
    let r = pudram(&["--config", &p, "run", "--trace", "t.txt", "--stats", "s.txt"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(outdir.join("t.txt").exists());
    assert!(std::fs::read_to_string(outdir.join("s.txt")).unwrap().contains("total.simd_utilization="));
}

#[test]
fn every_subcommand_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["compile".into(), data("full_adder.net")],
        vec!["run".into(), data("add_demo.bbop"), "--trace".into(), tmp(d.path(), "T")],
        vec!["primitive".into(), "nand16".into(), "--sigma".into(), "0.02".into()],
        vec!["--config".into(), data("demo.toml"), "sweep".into(), "--trials".into(), "100".into()],
        vec![
            "trng".into(),
            "--sigma".into(),
            "0.05".into(),
            "--bits".into(),
            "4096".into(),
            "-o".into(),
            tmp(d.path(), "B"),
        ],
    ];
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = pudram(&args);
        let files: Vec<Vec<u8>> =
            ["T", "B"].iter().map(|f| std::fs::read(d.path().join(f)).unwrap_or_default()).collect();
        let b = pudram(&args);
        let again: Vec<Vec<u8>> =
            ["T", "B"].iter().map(|f| std::fs::read(d.path().join(f)).unwrap_or_default()).collect();
        assert_eq!(a.code, 0, "{args:?}: {}", a.stderr);
        assert_eq!((a.stdout, a.stderr), (b.stdout, b.stderr), "{args:?}");
        assert_eq!(files, again, "{args:?}");
    }
}

// SPDX-License-Identifier: Apache-2.0
use std::path::PathBuf;

use pudram::demo::{run_demo, Demo};
use pudram::formats::{format_trace, parse_trace};
use pudram_core::primitives::OpKind;
use pudram_core::{ChipGeometry, ChipState, CommandKind, DataPattern, NoiseModel};

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

fn demo_trace(d: Demo) -> String {
    let mut c = ChipState::new(ChipGeometry::default(), NoiseModel::noiseless(0), DataPattern::AllZeros).unwrap();
    let out = run_demo(&mut c, d, 1).unwrap();
    assert!(out.ok, "{}", out.report);
    format_trace(&out.trace)
}

#[test]
fn traces_match_goldens() {
    for (file, d) in [
        ("not.trace", Demo::Not),
        ("multicopy31.trace", Demo::MultiCopy(31)),
        ("and16.trace", Demo::MultiInput(OpKind::And, 16)),
    ] {
        assert_eq!(demo_trace(d), golden(file), "{file}");
    }
}

#[test]
fn golden_data_does_not_matter() {
    for seed in [2, 3, 99] {
        let mut c = ChipState::new(ChipGeometry::default(), NoiseModel::noiseless(0), DataPattern::AllZeros).unwrap();
        let out = run_demo(&mut c, Demo::Not, seed).unwrap();
        assert_eq!(format_trace(&out.trace), golden("not.trace"));
    }
}

/// ACT (source) ... PRE within the violation window, then ACT of the
/// destination set, then a regular PRE.
#[test]
fn goldens_have_the_interrupted_precharge_shape() {
    let t = pudram_core::TimingParams::default();
    for (file, first, second) in [("not.trace", 1, 1), ("multicopy31.trace", 1, 31), ("and16.trace", 16, 16)] {
        let tr = parse_trace(&golden(file), 4).unwrap();
        let c = tr.commands();
        assert_eq!(c.len(), 4, "{file}");
        match (&c[0].kind, &c[1].kind, &c[2].kind, &c[3].kind) {
            (CommandKind::Act(a), CommandKind::Pre(None), CommandKind::Act(b), CommandKind::Pre(None)) => {
                assert_eq!((a.len(), b.len()), (first, second), "{file}");
            }
            other => panic!("{file}: {other:?}"),
        }
        assert!(t.is_violated(c[1].delay_after_ns), "{file}");
        assert!(!t.is_violated(c[3].delay_after_ns), "{file}");
        assert_eq!(format_trace(&tr), golden(file));
    }
}

// SPDX-License-Identifier: Apache-2.0
use proptest::prelude::*;

use pudram::formats::{format_program, format_trace, parse_program, parse_trace, LoadValues, Program, Statement};
use pudram_core::command::Wordline;
use pudram_core::control::{BbopInstruction, ReduceSpec};
use pudram_core::geometry::MatMask;
use pudram_core::{Command, CommandTrace, RowAddr};

const MATS: usize = 4;

fn delay() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.5), Just(35.0), 0.0f64..1e4]
}

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        (prop::collection::btree_map(0u32..512, any::<bool>(), 1..6), delay()).prop_map(|(rows, d)| {
            Command::act_wordlines(
                rows.into_iter().map(|(r, negated)| Wordline { row: RowAddr(r), negated }).collect(),
                d,
            )
        }),
        (prop::option::of(1u64..(1 << MATS)), delay()).prop_map(|(m, d)| Command::pre_sectors(m.map(MatMask), d)),
        (0u32..512, 0usize..64, delay()).prop_map(|(r, c, d)| Command::rd(RowAddr(r), c, d)),
        (0u32..512, 0usize..64, any::<u64>(), delay()).prop_map(|(r, c, v, d)| Command::wr(RowAddr(r), c, v, d)),
        delay().prop_map(Command::nop),
    ]
}

fn mats() -> impl Strategy<Value = (usize, usize)> {
    (0usize..8, 0usize..8).prop_map(|(a, b)| (a.min(b), a.max(b)))
}

fn statement() -> impl Strategy<Value = Statement> {
    let row = || (0u32..256).prop_map(RowAddr);
    let load = (row(), 1usize..=64, any::<bool>(), prop::collection::vec(any::<u64>(), 1..10)).prop_map(
        |(row, width, fill, raw)| {
            let mask = if width == 64 { u64::MAX } else { (1 << width) - 1 };
            let mut v: Vec<u64> = raw.into_iter().map(|x| x & mask).collect();
            let values = if fill { LoadValues::Fill(v.remove(0)) } else { LoadValues::Lanes(v) };
            Statement::Load { row, width, values }
        },
    );
    let bbop = ("[a-z][a-z0-9_]{0,8}", row(), prop::collection::vec(row(), 0..4), mats(), 1usize..=64, 0usize..512)
        .prop_map(|(op, dst, srcs, (mat_begin, mat_end), width, vector_len)| {
            Statement::Bbop(BbopInstruction {
                opcode: format!("bbop_{op}"),
                dst,
                srcs,
                mat_begin,
                mat_end,
                width,
                vector_len,
            })
        });
    let reduce = (row(), row(), row(), row(), 1usize..=32, mats(), 0usize..512).prop_map(
        |(a, b, out, scratch, width, (mat_begin, mat_end), n)| {
            Statement::Reduce(ReduceSpec { a, b, out, scratch, width, mat_begin, mat_end, n })
        },
    );
    let print = (row(), 1usize..=64, 0usize..512).prop_map(|(row, width, n)| Statement::Print { row, width, n });
    prop_oneof![load, bbop, reduce, print]
}

proptest! {
    #[test]
    fn trace_text_round_trips(cmds in prop::collection::vec(command(), 0..30)) {
        let t = CommandTrace::from_commands(MATS, cmds);
        let text = format_trace(&t);
        let back = parse_trace(&text, MATS).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(format_trace(&back), text);
    }

    #[test]
    fn program_text_round_trips(sts in prop::collection::vec(statement(), 0..20)) {
        let p = Program { statements: sts.into_iter().enumerate().map(|(i, s)| (i + 1, s)).collect() };
        let text = format_program(&p);
        prop_assert_eq!(parse_program(&text).unwrap(), p);
    }
}

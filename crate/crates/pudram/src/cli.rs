// SPDX-License-Identifier: Apache-2.0
//! The `pudram` command line.
//!
//! Data goes to stdout, diagnostics to stderr. Exit codes: 0 success, 1
//! validation, parse or usage error, 2 error raised by the simulated chip.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use pudram_core::control::{
    execute_program, load_vertical, store_vertical, utilization, vector_reduce, ExecStats, MicroProgramStore,
};
use pudram_core::mig::{
    compile, compile_bitserial, parse_netlist, BitserialOp, CompileOptions, MicroProgram, RegionConfig,
};
use pudram_core::reliability::trng_run;

use crate::demo::{run_demo, Demo};
use crate::error::{read, write, Error, Result};
use crate::formats::config::Mode;
use crate::formats::{
    bitstream_bytes, compile_report, format_dump, format_microprogram, format_trace, parse_microprogram, parse_program,
    parse_trace, stats_report, sweep_csv, trng_report, LoadValues, RunConfig, Statement,
};
use crate::sweep::parallel_sweep;

#[derive(Debug, Parser)]
#[command(name = "pudram", version, about = "Processing-using-DRAM simulator and bbop compiler")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Execution mode override.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
    /// Sensing noise sigma override.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Per-bitline offset sigma override.
    #[arg(long, global = true)]
    pub offset_sigma: Option<f64>,
    /// Noise seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Compile a netlist to a micro-program.
    Compile {
        /// Netlist file; defaults to `paths.netlist` of the config.
        netlist: Option<PathBuf>,
        /// Micro-program output; stdout when absent (the report then goes to stderr).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Opcode; defaults to `bbop_<file stem>`.
        #[arg(long)]
        opcode: Option<String>,
        /// Skip the MIG rewrites.
        #[arg(long)]
        no_optimize: bool,
        /// Compute rows available to triple-row activations.
        #[arg(long, default_value_t = RegionConfig::default().b_rows)]
        b_rows: usize,
    },
    /// Execute a bbop program.
    Run {
        /// Program file; defaults to `paths.program` of the config.
        program: Option<PathBuf>,
        /// Extra micro-programs to register.
        #[arg(long = "microprogram")]
        microprograms: Vec<PathBuf>,
        /// Write the issued command trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the final chip state here.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Write the statistics report here instead of stdout.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Run one primitive demo: not, maj3, multicopy, nand16, trng-sample.
    Primitive {
        /// not, maj3, multicopy, nand16 or trng-sample.
        name: String,
        /// Destinations (multicopy), inputs (nand16) or rows (trng-sample).
        #[arg(long)]
        n: Option<usize>,
        /// Seed of the input data.
        #[arg(long, default_value_t = 1)]
        data_seed: u64,
        /// Write the command trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Success-rate sweep, CSV on stdout.
    Sweep {
        /// not, maj3, and<N>, nand<N>, or<N>, nor<N> or multicopy<N>.
        #[arg(long)]
        primitive: Option<String>,
        /// Comma-separated sigma values.
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        /// Trials per table cell.
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated: zeros, ones, checkerboard, random.
        #[arg(long, value_delimiter = ',')]
        patterns: Option<Vec<String>>,
        /// Trial seed override.
        #[arg(long)]
        sweep_seed: Option<u64>,
        /// Write the CSV here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Profile, harvest and test a TRNG bitstream.
    Trng {
        /// Rows activated per sample: 2, 4, 8, 16 or 32.
        #[arg(long)]
        rows: Option<usize>,
        /// Raw bits to harvest.
        #[arg(long)]
        bits: Option<usize>,
        /// Profiling activations per bitline.
        #[arg(long)]
        probes: Option<usize>,
        /// Skip hash conditioning.
        #[arg(long)]
        no_condition: bool,
        /// Packed bitstream output (conditioned when conditioning is on).
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the raw stream.
        #[arg(long)]
        raw_out: Option<PathBuf>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare a command trace against a golden trace, byte for byte.
    TraceCheck { trace: PathBuf, golden: PathBuf },
}

struct Ctx {
    cfg: RunConfig,
}

impl Ctx {
    fn new(g: &Global) -> Result<Self> {
        let mut cfg = match &g.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = g.mode {
            cfg.mode = m;
        }
        if let Some(s) = g.sigma {
            cfg.noise.sigma = s;
        }
        if let Some(s) = g.offset_sigma {
            cfg.noise.offset_sigma = s;
        }
        if let Some(s) = g.seed {
            cfg.noise.seed = s;
        }
        Ok(Ctx { cfg })
    }

    /// Relative output paths land in `paths.output_dir` when it is set.
    fn out(&self, p: &Path) -> Result<PathBuf> {
        match &self.cfg.paths.output_dir {
            Some(d) if p.is_relative() => {
                std::fs::create_dir_all(d).map_err(|source| Error::Io { path: d.clone(), source })?;
                Ok(d.join(p))
            }
            _ => Ok(p.to_path_buf()),
        }
    }

    fn emit(&self, path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
        match path {
            Some(p) => write(&self.out(p)?, text),
            None => put(stdout, text),
        }
    }
}

fn put(w: &mut dyn Write, text: &str) -> Result<()> {
    w.write_all(text.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
}

fn input_path(arg: Option<PathBuf>, cfg: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    arg.or_else(|| cfg.cloned())
        .ok_or_else(|| Error::Config(format!("no {what} given on the command line or in the config")))
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code.
pub fn main_with(args: impl IntoIterator<Item = String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let ctx = Ctx::new(&cli.global)?;
    match cli.command {
        Cmd::Compile { netlist, out, opcode, no_optimize, b_rows } => {
            let path = input_path(netlist, ctx.cfg.paths.netlist.as_ref(), "netlist")?;
            let nl = parse_netlist(&read(&path)?).map_err(|e| match e {
                pudram_core::Error::Netlist { line, msg } => Error::Parse { what: "netlist", line, msg },
                e => e.into(),
            })?;
            let opcode = opcode.unwrap_or_else(|| {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("prog");
                let clean: String = stem.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
                format!("bbop_{clean}")
            });
            let opts = CompileOptions {
                optimize: !no_optimize,
                region: RegionConfig { b_rows, dcc_rows: ctx.cfg.geometry().dcc_rows, ..Default::default() },
            };
            let (prog, report) = compile(&nl, &opcode, &opts)?;
            let report = compile_report(&opcode, &report);
            let text = format_microprogram(&prog);
            match out {
                Some(p) => {
                    write(&ctx.out(&p)?, text)?;
                    put(stdout, &report)
                }
                None => {
                    put(stdout, &text)?;
                    put(stderr, &report)
                }
            }
        }
        Cmd::Run { program, microprograms, trace, dump, stats } => {
            let path = input_path(program, ctx.cfg.paths.program.as_ref(), "program")?;
            let prog = parse_program(&read(&path)?)?;
            let mut store = MicroProgramStore::new();
            for m in &microprograms {
                store.register(parse_microprogram(&read(m)?)?)?;
            }
            let mut chip = ctx.cfg.chip()?;
            let (report, printed) = execute(&mut chip, &prog, &store, ctx.cfg.mode)?;
            put(stdout, &printed)?;
            if let Some(t) = trace {
                write(&ctx.out(&t)?, format_trace(chip.log()))?;
            }
            if let Some(d) = dump {
                write(&ctx.out(&d)?, format_dump(&chip))?;
            }
            ctx.emit(stats.as_deref(), &report, stdout)
        }
        Cmd::Primitive { name, n, data_seed, trace } => {
            let demo = Demo::from_cli(&name, n)?;
            let mut chip = ctx.cfg.chip()?;
            let out = run_demo(&mut chip, demo, data_seed)?;
            if let Some(t) = trace {
                write(&ctx.out(&t)?, format_trace(&out.trace))?;
            }
            put(stdout, &out.report)
        }
        Cmd::Sweep { primitive, sigmas, trials, patterns, sweep_seed, out } => {
            let mut cfg = ctx.cfg.clone();
            let s = &mut cfg.sweep;
            if let Some(p) = primitive {
                s.primitive = p;
            }
            if let Some(v) = sigmas {
                s.sigmas = v;
            }
            if let Some(t) = trials {
                s.trials = t;
            }
            if let Some(p) = patterns {
                s.patterns = p;
            }
            if let Some(x) = sweep_seed {
                s.seed = x;
            }
            let rows = parallel_sweep(&cfg.sweep_config()?)?;
            ctx.emit(out.as_deref(), &sweep_csv(&rows), stdout)
        }
        Cmd::Trng { rows, bits, probes, no_condition, out, raw_out, report } => {
            let mut tc = ctx.cfg.trng_config();
            if let Some(r) = rows {
                tc.n_rows = r;
            }
            if let Some(b) = bits {
                tc.nbits = b;
            }
            if let Some(p) = probes {
                tc.probes = p;
            }
            if no_condition {
                tc.condition = false;
            }
            let mut chip = ctx.cfg.chip()?;
            let r = trng_run(&mut chip, &tc)?;
            let stream = r.conditioned.as_deref().unwrap_or(&r.raw);
            write(&ctx.out(&out)?, bitstream_bytes(stream))?;
            if let Some(p) = raw_out {
                write(&ctx.out(&p)?, bitstream_bytes(&r.raw))?;
            }
            ctx.emit(report.as_deref(), &trng_report(&r.report), stdout)
        }
        Cmd::TraceCheck { trace, golden } => {
            let mats = ctx.cfg.geometry().mats_per_subarray;
            let (a, b) = (read(&trace)?, read(&golden)?);
            let (ta, _) = (parse_trace(&a, mats)?, parse_trace(&b, mats)?);
            if a != b {
                let line = a
                    .lines()
                    .zip(b.lines())
                    .position(|(x, y)| x != y)
                    .unwrap_or(a.lines().count().min(b.lines().count()));
                return Err(Error::Check(format!(
                    "{} differs from {} at line {}",
                    trace.display(),
                    golden.display(),
                    line + 1
                )));
            }
            put(stdout, &format!("ok commands={}\n", ta.len()))
        }
    }
}

/// Runs every statement of `prog`; returns the statistics report and the
/// output of `print`/`reduce` statements.
pub fn execute(
    chip: &mut pudram_core::ChipState,
    prog: &crate::formats::Program,
    store: &MicroProgramStore,
    mode: Mode,
) -> Result<(String, String)> {
    let g = chip.geometry().clone();
    let mut builtin: HashMap<(BitserialOp, usize), MicroProgram> = HashMap::new();
    let mut total = ExecStats::default();
    let (mut used, mut useful) = (0, 0);
    let mut report = String::new();
    let mut printed = String::new();
    let at = |line: usize, e: Error| match e {
        Error::Core(c) if !c.is_simulation() => Error::Parse { what: "program", line, msg: c.to_string() },
        e => e,
    };
    for (idx, (line, st)) in prog.statements.iter().enumerate() {
        let line = *line;
        match st {
            Statement::Load { row, width, values } => {
                let cols = g.columns();
                let image = match values {
                    LoadValues::Fill(v) => vec![*v; cols],
                    LoadValues::Lanes(v) if v.len() <= cols => {
                        let mut img = v.clone();
                        img.resize(cols, 0);
                        img
                    }
                    LoadValues::Lanes(v) => {
                        return Err(Error::parse("program", line, format!("{} values for {cols} lanes", v.len())))
                    }
                };
                store_vertical(chip, *row, *width, &image).map_err(|e| at(line, e.into()))?;
            }
            Statement::Print { row, width, n } => {
                let v = load_vertical(chip, *row, *width).map_err(|e| at(line, e.into()))?;
                if *n > v.len() {
                    return Err(Error::parse("program", line, format!("{n} lanes requested, chip has {}", v.len())));
                }
                let lanes: Vec<String> = v[..*n].iter().map(u64::to_string).collect();
                printed += &format!("r{row}: {}\n", lanes.join(" "));
            }
            Statement::Reduce(spec) => {
                let r = vector_reduce(chip, spec).map_err(|e| at(line, e.into()))?;
                let lanes: Vec<String> = r.lanes.iter().map(u64::to_string).collect();
                printed += &format!("reduce total={} lanes={}\n", r.total, lanes.join(","));
                report += &stats_report(&format!("stmt{idx}."), &r.stats);
                used += r.stats.lanes_used;
                useful += r.stats.lanes_useful;
                total.absorb(&r.stats);
            }
            Statement::Bbop(insn) => {
                let prog = match store.lookup(&insn.opcode) {
                    Ok(p) => p,
                    Err(_) => match BitserialOp::from_name(&insn.opcode) {
                        Some(op) if insn.opcode == op.opcode() => {
                            let key = (op, insn.width);
                            if let std::collections::hash_map::Entry::Vacant(e) = builtin.entry(key) {
                                let (p, _) = compile_bitserial(op, insn.width, &CompileOptions::default())
                                    .map_err(|e| at(line, e.into()))?;
                                e.insert(p);
                            }
                            &builtin[&key]
                        }
                        _ => return Err(Error::parse("program", line, format!("unknown opcode `{}`", insn.opcode))),
                    },
                };
                let st = execute_program(chip, prog, mode.into(), insn).map_err(|e| at(line, e.into()))?;
                report += &stats_report(&format!("stmt{idx}."), &st);
                used += st.lanes_used;
                useful += st.lanes_useful;
                total.absorb(&st);
            }
        }
    }
    total.lanes_used = used;
    total.lanes_useful = useful;
    total.simd_utilization = utilization(useful, used);
    report += &stats_report("total.", &total);
    Ok((report, printed))
}

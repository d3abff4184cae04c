//! `dimcodec` command-line tool.
//!
//! Exit codes: 0 success, 1 a verification reported failure, 2 bad input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dimcodec::bitio::{read_bits_file, write_bits_file};
use dimcodec::blockcodec::{BlockCodec, BlockSchedule, CodecOptions};
use dimcodec::gale::{counting_bound_check, verify_fairness, Fairness, FairnessViolation};
use dimcodec::gen::{GenSpec, SeqKind};
use dimcodec::ilfst::{self, Fst, IlVerdict};
use dimcodec::oracle::{ratio_profile, DecoderSpec};
use dimcodec::{BitString, Dyadic, Error, MartingaleModel};

#[derive(Parser)]
#[command(name = "dimcodec", version, about = "Martingale block codecs, oracle decoders and transducers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compress a bit file with the block codec.
    Encode(CodecArgs),
    /// Decompress a block-codec stream.
    Decode {
        #[command(flatten)]
        codec: CodecArgs,
        /// Number of bits the stream encodes.
        #[arg(long)]
        n: usize,
    },
    /// Query usage of an oracle decoder, as CSV.
    Ratio(RatioArgs),
    /// Martingale checks.
    Gale {
        #[command(subcommand)]
        cmd: GaleCmd,
    },
    /// Finite-state transducers.
    Ilfst {
        #[command(subcommand)]
        cmd: IlfstCmd,
    },
    /// Write a test sequence.
    Gen {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-block index-mass report for a generated sequence, as CSV.
    Report {
        #[command(flatten)]
        seq: SeqArgs,
        #[arg(long)]
        model: String,
        #[arg(long)]
        schedule: String,
        #[arg(long, default_value_t = CodecOptions::default().k_max)]
        k_max: usize,
    },
}

#[derive(Args)]
struct CodecArgs {
    #[arg(long)]
    model: String,
    /// `A:N=<k>` or `B`.
    #[arg(long)]
    schedule: String,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Widest block the encoder will try to code.
    #[arg(long, default_value_t = CodecOptions::default().k_max)]
    k_max: usize,
}

#[derive(Args)]
struct SeqArgs {
    /// Sequence descriptor, e.g. `tripled(lcg)`.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderKind {
    Copier,
    Constant,
    Blockcodec,
    Fst,
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long, value_enum)]
    decoder: DecoderKind,
    /// Oracle bit file.
    #[arg(long)]
    oracle: PathBuf,
    /// Output length to measure up to (at least 16).
    #[arg(long)]
    n: usize,
    /// Block codec model.
    #[arg(long)]
    model: Option<String>,
    /// Block codec schedule.
    #[arg(long)]
    schedule: Option<String>,
    /// Length the block-codec stream encodes; defaults to `--n`.
    #[arg(long)]
    len: Option<usize>,
    #[arg(long, default_value_t = CodecOptions::default().k_max)]
    k_max: usize,
    /// Transducer: built-in name or `fst v1` file.
    #[arg(long)]
    fst: Option<String>,
    /// Pattern for the constant decoder.
    #[arg(long, default_value = "0")]
    pattern: String,
}

#[derive(Subcommand)]
enum GaleCmd {
    /// Check the fairness law and level sums to a depth.
    Verify {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
    /// Count the extensions that reach a capital threshold.
    Counting {
        #[arg(long)]
        model: String,
        /// Base string; empty by default.
        #[arg(long, default_value = "")]
        w: String,
        #[arg(long)]
        k: usize,
        /// Dyadic factor, e.g. `1/2`.
        #[arg(long, default_value = "1")]
        alpha: String,
        /// Rational `l` as `a` or `a/b`.
        #[arg(long)]
        l: String,
    },
}

#[derive(Subcommand)]
enum IlfstCmd {
    /// Run a transducer.
    Run {
        #[arg(long)]
        fst: String,
        #[command(flatten)]
        input: BitsIn,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Information-losslessness verdict.
    Check {
        #[arg(long)]
        fst: String,
        #[arg(long, default_value_t = 1 << 20)]
        bound: usize,
    },
    /// Write `outer ∘ inner` in `fst v1` form.
    Compose {
        #[arg(long)]
        outer: String,
        #[arg(long)]
        inner: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the input from an output.
    Invert {
        #[arg(long)]
        fst: String,
        #[command(flatten)]
        input: BitsIn,
        #[arg(long, default_value_t = 64)]
        lookahead: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compression ratio series, as CSV.
    Ratio {
        #[arg(long)]
        fst: String,
        #[command(flatten)]
        input: BitsIn,
    },
    /// Extraction report over the default battery, as CSV.
    Extract {
        #[arg(long)]
        fst: String,
        #[command(flatten)]
        input: BitsIn,
        #[arg(long, default_value_t = 1 << 20)]
        bound: usize,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct BitsIn {
    /// Bit file (BSTR, or text for `.txt`).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Inline bit string.
    #[arg(long)]
    bits: Option<String>,
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let result = run(cli.cmd, &mut out);
    print!("{out}");
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type Res<T> = Result<T, Error>;

fn is_text(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "txt")
}

fn read_bits(path: &Path) -> Res<BitString> {
    if !path.exists() {
        return Err(Error::FileMissing(path.display().to_string()));
    }
    read_bits_file(path, is_text(path))
}

fn write_bits(path: &Path, bits: &BitString) -> Res<()> {
    write_bits_file(path, bits, is_text(path))
}

impl BitsIn {
    fn load(&self) -> Res<BitString> {
        match (&self.input, &self.bits) {
            (Some(p), _) => read_bits(p),
            (None, Some(s)) => BitString::parse(s),
            (None, None) => Err(Error::Parse("no input given".into())),
        }
    }
}

fn load_fst(name: &str) -> Res<Fst> {
    match ilfst::builtin(name) {
        Some(f) => Ok(f),
        None => Fst::read(Path::new(name)),
    }
}

fn codec(model: &str, schedule: &str, k_max: usize) -> Res<BlockCodec> {
    let opts = CodecOptions {
        k_max,
        ..CodecOptions::default()
    };
    Ok(BlockCodec::with_options(
        MartingaleModel::parse(model)?,
        BlockSchedule::parse(schedule)?,
        opts,
    ))
}

fn emit_bits(out: &mut String, path: Option<&Path>, bits: &BitString) -> Res<()> {
    match path {
        Some(p) => write_bits(p, bits),
        None => {
            let _ = writeln!(out, "{bits}");
            Ok(())
        }
    }
}

fn parse_rational(s: &str) -> Res<(i64, u64)> {
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    let (a, b) = s.split_once('/').unwrap_or((s, "1"));
    let a: i64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn run(cmd: Cmd, out: &mut String) -> Res<Outcome> {
    match cmd {
        Cmd::Encode(a) => {
            let c = codec(&a.model, &a.schedule, a.k_max)?;
            let s = read_bits(&a.input)?;
            let enc = c.encode_with_report(&s)?;
            write_bits(&a.out, &enc.stream)?;
            let coded = enc.blocks.iter().filter(|b| b.coded.is_some()).count();
            let _ = writeln!(out, "n,stream_bits,blocks,coded_blocks,tail_bits");
            let _ = writeln!(
                out,
                "{},{},{},{coded},{}",
                s.len(),
                enc.stream.len(),
                enc.blocks.len(),
                enc.tail_bits
            );
        }
        Cmd::Decode { codec: a, n } => {
            let c = codec(&a.model, &a.schedule, a.k_max)?;
            let stream = read_bits(&a.input)?;
            let s = c.decode(&stream, n)?;
            write_bits(&a.out, &s)?;
        }
        Cmd::Ratio(a) => ratio(a, out)?,
        Cmd::Gale { cmd } => return gale(cmd, out),
        Cmd::Ilfst { cmd } => return ilfst_cmd(cmd, out),
        Cmd::Gen { seq, out: path } => {
            let s = GenSpec::new(SeqKind::parse(&seq.kind)?, seq.seed, seq.n).generate()?;
            write_bits(&path, &s)?;
        }
        Cmd::Report {
            seq,
            model,
            schedule,
            k_max,
        } => {
            let s = GenSpec::new(SeqKind::parse(&seq.kind)?, seq.seed, seq.n).generate()?;
            let c = codec(&model, &schedule, k_max)?;
            let p = c.index_mass_profile(&s)?;
            let _ = writeln!(out, "block,start,width,end,set_size,mass,l,g,bound_holds,cumulative");
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            for r in &p.rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{:.6},{},{},{},{:.6}",
                    r.block.index,
                    r.block.start(),
                    r.block.width,
                    r.block.end,
                    r.set_size.map(|v| v.to_string()).unwrap_or_default(),
                    r.mass,
                    opt(r.l),
                    opt(r.g),
                    r.bound_holds.map(|v| v.to_string()).unwrap_or_default(),
                    r.cumulative
                );
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "n,ratio,coded_blocks,bound_violations,tail_bits,stream_bits");
            let _ = writeln!(
                out,
                "{},{:.6},{},{},{},{}",
                s.len(),
                p.ratio,
                p.coded_blocks(),
                p.bound_violations(),
                p.tail_bits,
                p.stream_bits
            );
            if p.bound_violations() > 0 {
                return Ok(Outcome::Fail);
            }
        }
    }
    Ok(Outcome::Pass)
}

fn ratio(a: RatioArgs, out: &mut String) -> Res<()> {
    let oracle = read_bits(&a.oracle)?;
    let need = |v: Option<String>, flag: &str| {
        v.ok_or_else(|| Error::Parse(format!("--{flag} is required for this decoder")))
    };
    let spec = match a.decoder {
        DecoderKind::Copier => DecoderSpec::BitCopier,
        DecoderKind::Constant => DecoderSpec::Constant(BitString::parse(&a.pattern)?),
        DecoderKind::Blockcodec => DecoderSpec::BlockCodec {
            codec: codec(&need(a.model, "model")?, &need(a.schedule, "schedule")?, a.k_max)?,
            len: a.len.unwrap_or(a.n),
        },
        DecoderKind::Fst => DecoderSpec::FstRunner(load_fst(&need(a.fst, "fst")?)?),
    };
    let p = ratio_profile(&spec, &oracle, a.n)?;
    let _ = writeln!(out, "n,queries,ratio");
    for n in 1..=a.n {
        let _ = writeln!(out, "{n},{},{:.6}", p.trace.counts[n], p.series[n - 1]);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "decoder,window_lo,window_hi,rho_minus_hat,rho_plus_hat");
    let _ = writeln!(
        out,
        "{},{},{},{:.6},{:.6}",
        spec.descriptor(),
        p.window.0,
        p.window.1,
        p.rho_minus_hat,
        p.rho_plus_hat
    );
    Ok(())
}

fn gale(cmd: GaleCmd, out: &mut String) -> Res<Outcome> {
    match cmd {
        GaleCmd::Verify { model, depth } => {
            let m = MartingaleModel::parse(&model)?;
            let v = verify_fairness(&m, depth)?;
            let _ = writeln!(out, "model,depth,verdict,detail");
            let detail = match &v {
                Fairness::Pass => String::new(),
                Fairness::Fail(FairnessViolation::Node { w, .. }) => format!("node {w}"),
                Fairness::Fail(FairnessViolation::Level { level, .. }) => format!("level {level}"),
            };
            let verdict = if v.passed() { "pass" } else { "fail" };
            let _ = writeln!(out, "\"{m}\",{depth},{verdict},{detail}");
            Ok(if v.passed() { Outcome::Pass } else { Outcome::Fail })
        }
        GaleCmd::Counting { model, w, k, alpha, l } => {
            let m = MartingaleModel::parse(&model)?;
            let w = BitString::parse(&w)?;
            let alpha = Dyadic::parse(&alpha)?;
            let (ln, ld) = parse_rational(&l)?;
            let r = counting_bound_check(&m, &w, k, &alpha, ln, ld)?;
            let _ = writeln!(out, "model,w,k,alpha,l,count,holds");
            let _ = writeln!(out, "\"{m}\",{w},{k},{alpha},{l},{},{}", r.count, r.holds);
            Ok(if r.holds { Outcome::Pass } else { Outcome::Fail })
        }
    }
}

fn ilfst_cmd(cmd: IlfstCmd, out: &mut String) -> Res<Outcome> {
    match cmd {
        IlfstCmd::Run { fst, input, out: path } => {
            let t = load_fst(&fst)?;
            let (y, _) = t.run(&input.load()?);
            emit_bits(out, path.as_deref(), &y)?;
        }
        IlfstCmd::Check { fst, bound } => {
            let t = load_fst(&fst)?;
            let v = ilfst::il_check(&t, bound);
            let _ = writeln!(out, "verdict,x,y");
            match &v {
                IlVerdict::NotIl { x, y } => {
                    let _ = writeln!(out, "NotIL,{x},{y}");
                }
                other => {
                    let _ = writeln!(out, "{},,", other.label());
                }
            }
            return Ok(if v.is_il() { Outcome::Pass } else { Outcome::Fail });
        }
        IlfstCmd::Compose { outer, inner, out: path } => {
            let c = ilfst::compose_fst(&load_fst(&outer)?, &load_fst(&inner)?);
            match path {
                Some(p) => std::fs::write(p, c.to_text())?,
                None => out.push_str(&c.to_text()),
            }
        }
        IlfstCmd::Invert {
            fst,
            input,
            lookahead,
            out: path,
        } => {
            let t = load_fst(&fst)?;
            let d = ilfst::il_decode(&t, &input.load()?, lookahead)?;
            emit_bits(out, path.as_deref(), &d.x)?;
            if d.pending > 0 {
                eprintln!("pending: {} input bits not forced by the output", d.pending);
            }
        }
        IlfstCmd::Ratio { fst, input } => {
            let t = load_fst(&fst)?;
            let s = input.load()?;
            let r = ilfst::ratio_fst(&t, &s);
            let _ = writeln!(out, "n,output_bits,ratio");
            for n in 1..=s.len() {
                let _ = writeln!(out, "{n},{},{:.6}", r.lengths[n], r.ratio(n));
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "window_lo,window_hi,min,max");
            let _ = writeln!(out, "{},{},{:.6},{:.6}", r.window.0, r.window.1, r.min, r.max);
        }
        IlfstCmd::Extract { fst, input, bound } => {
            let c = load_fst(&fst)?;
            let s = input.load()?;
            let r = ilfst::extract_fs(&s, &c, &ilfst::default_battery(), bound)?;
            let pair = |v: Option<(f64, f64)>| match v {
                Some((a, b)) => format!("{a:.6},{b:.6}"),
                None => ",".into(),
            };
            let _ = writeln!(out, "member,verdict,min_on_output,max_on_output,min_composed,max_composed");
            let _ = writeln!(out, "compressor,IL,{:.6},{:.6},,", r.compressor.0, r.compressor.1);
            for m in &r.members {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    m.name,
                    m.verdict.label(),
                    pair(m.on_output),
                    pair(m.composed)
                );
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "battery_version,output_bits,quality");
            let _ = writeln!(out, "{},{},{:.6}", ilfst::BATTERY_VERSION, r.output.len(), r.quality);
        }
    }
    Ok(Outcome::Pass)
}

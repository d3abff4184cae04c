//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use dimcodec::bitio::{dec_enc, enc, enc_nat};
use dimcodec::blockcodec::{BlockCodec, BlockSchedule, CodecOptions, ExtensionSet};
use dimcodec::dyadic::{threshold_decode, ThresholdCodec, ThresholdScheme};
use dimcodec::gale::{counting_bound_check, verify_fairness};
use dimcodec::gen::{GenSpec, SeqKind};
use dimcodec::ilfst::{compose_fst, default_battery, extract_fs, il_check, il_decode, labeled_suite, Fst, IlVerdict};
use dimcodec::oracle::{check_composition, DecoderSpec};
use dimcodec::{BitString, Dyadic, Error, MartingaleModel};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn model(d: &str) -> MartingaleModel {
    MartingaleModel::parse(d).unwrap()
}

fn seq(kind: &str, seed: u64, n: usize) -> BitString {
    GenSpec::new(SeqKind::parse(kind).unwrap(), seed, n).generate().unwrap()
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitString {
    (0..n).map(|_| rng.gen::<bool>()).collect()
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

/// Runs `f` over `0..count` on every core, collecting failures.
fn parallel<F>(count: usize, f: F) -> Vec<String>
where
    F: Fn(usize) -> Result<(), String> + Sync,
{
    let next = AtomicUsize::new(0);
    let failures = Mutex::new(Vec::new());
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get());
    std::thread::scope(|sc| {
        for _ in 0..threads {
            sc.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                if let Err(e) = f(i) {
                    failures.lock().unwrap().push(e);
                }
            });
        }
    });
    failures.into_inner().unwrap()
}

const MODELS: [&str; 5] = ["fixed:p0=3/4", "markov:k=2,g=8", "phase:period=3,g=8", "allin:0", "uniform"];
const KINDS: [&str; 6] = ["lcg", "tripled(lcg)", "diluted(lcg,1/3)", "champernowne", "periodic(0010111)", "zeros"];
const SCHEDULES: [&str; 3] = ["A:N=1", "A:N=2", "B"];

fn codec_for(sched: &str, m: &str) -> BlockCodec {
    let schedule = BlockSchedule::parse(sched).unwrap();
    let opts = match schedule {
        BlockSchedule::B => CodecOptions {
            k_max: 63,
            ..CodecOptions::default()
        },
        _ => CodecOptions::default(),
    };
    BlockCodec::with_options(model(m), schedule, opts)
}

// Criteria 1 and 2 share the runs.
fn round_trips() -> (Outcome, Outcome) {
    let start = Instant::now();
    let coded = AtomicUsize::new(0);
    let violations = Mutex::new(Vec::new());
    let failures = parallel(200, |i| {
        let sched = SCHEDULES[i % 3];
        let m = MODELS[(i / 3) % 5];
        let kind = KINDS[(i / 15) % 6];
        let n = 1 + (i * 977 + 311) % 2048;
        let s = seq(kind, i as u64 + 1, n);
        let c = codec_for(sched, m);
        let tag = format!("{sched} {m} {kind} n={n}");
        let enc = c.encode_with_report(&s).map_err(|e| format!("{tag}: encode: {e}"))?;
        let back = c.decode(&enc.stream, n).map_err(|e| format!("{tag}: decode: {e}"))?;
        if back != s {
            return Err(format!("{tag}: mismatch"));
        }
        for rep in &enc.blocks {
            let Some(cb) = &rep.coded else { continue };
            coded.fetch_add(1, Ordering::Relaxed);
            // |A|·c ≤ 2^k·d(before) is |A| ≤ 2^l/g
            let lhs = &Dyadic::from_u64(cb.set_size) * &cb.threshold;
            let rhs = rep.capital_before.shl(rep.block.width as i64);
            let mut ok = lhs <= rhs;
            if rep.block.width <= 12 {
                let prefix = s.prefix(rep.block.start());
                let set = ExtensionSet::new(c.model(), &prefix, rep.block.width, cb.threshold.clone()).unwrap();
                ok &= set.size_naive() == cb.set_size;
            }
            if !ok {
                violations.lock().unwrap().push(format!("{tag} block {}", rep.block.index));
            }
        }
        Ok(())
    });
    let elapsed = start.elapsed();
    let c1 = if failures.is_empty() && elapsed < Duration::from_secs(60) {
        Ok(format!("200 sequences, 0 mismatches, {}", secs(elapsed)))
    } else {
        Err(format!(
            "{} failures ({}), {}",
            failures.len(),
            failures.first().cloned().unwrap_or_default(),
            secs(elapsed)
        ))
    };
    let v = violations.into_inner().unwrap();
    let coded = coded.into_inner();
    let c2 = if v.is_empty() && coded > 0 {
        Ok(format!("{coded} coded blocks, 0 violations"))
    } else {
        Err(format!("{coded} coded blocks, {} violations ({})", v.len(), v.first().cloned().unwrap_or_default()))
    };
    (c1, c2)
}

fn index_mass() -> Outcome {
    let start = Instant::now();
    let c = codec_for("A:N=2", "phase:period=3,g=8");
    let tripled = c.index_mass_profile(&seq("tripled(lcg)", 1, 3072)).map_err(|e| e.to_string())?;
    let raw = c.index_mass_profile(&seq("lcg", 1, 3072)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let msg = format!(
        "tripled-LCG {:.4} (≤ 0.55), LCG {:.4} (≥ 0.85), {}",
        tripled.ratio,
        raw.ratio,
        secs(elapsed)
    );
    if tripled.ratio <= 0.55 && raw.ratio >= 0.85 && elapsed < Duration::from_secs(300) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn gale_models() -> Vec<(String, MartingaleModel)> {
    let mut base: Vec<(String, MartingaleModel)> = [
        "fixed:p0=3/4",
        "fixed:p0=1/8",
        "markov:k=2,g=8",
        "markov:k=0,g=4",
        "phase:period=3,g=8",
        "allin:0",
        "allin:1",
        "uniform",
        "uniform:init=5",
        "fixed:p0=5/8,init=13/4",
    ]
    .iter()
    .map(|d| (d.to_string(), model(d)))
    .collect();
    let table = MartingaleModel::table(
        [("0", "3/2"), ("00", "0"), ("01", "3"), ("1", "1/2")]
            .iter()
            .map(|(w, v)| (BitString::from(*w), Dyadic::parse(v).unwrap()))
            .collect(),
    );
    base.push(("table".into(), table));
    let mut out = base.clone();
    for (name, m) in &base {
        out.push((format!("normalize({name})"), m.normalize().unwrap()));
        if let Ok(s) = m.with_side_account() {
            out.push((format!("side({name})"), s));
        }
    }
    for (i, (a, ma)) in base.iter().enumerate() {
        let (b, mb) = &base[(i + 3) % base.len()];
        let w = Dyadic::parse(["1/4", "1/2", "3/4"][i % 3]).unwrap();
        out.push((format!("combine({a},{b})"), MartingaleModel::combine_accounts(ma, mb, w).unwrap()));
    }
    out
}

fn gale_algebra() -> Outcome {
    let models = gale_models();
    let mut bad = Vec::new();
    for (name, m) in &models {
        match verify_fairness(m, 10) {
            Ok(f) if f.passed() => {}
            other => bad.push(format!("{name}: {other:?}")),
        }
        // level sums recomputed from scratch
        let d0 = m.eval(&BitString::new());
        for level in [1usize, 5, 10] {
            let mut sum = Dyadic::zero();
            for x in 0..1u64 << level {
                sum = &sum + &m.eval(&BitString::from_u64(x, level));
            }
            if sum != d0.shl(level as i64) {
                bad.push(format!("{name}: level {level}"));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let alphas = ["1", "1/2", "3/4", "2", "1/8", "5/4"].map(|a| Dyadic::parse(a).unwrap());
    let mut instances = 0;
    while instances < 500 {
        let (name, m) = &models[rng.gen_range(0..models.len())];
        let wl = rng.gen_range(0..7);
        let w = random_bits(&mut rng, wl);
        let k = rng.gen_range(1..=10usize);
        let alpha = &alphas[rng.gen_range(0..alphas.len())];
        let den = rng.gen_range(1..=4u64);
        let num = rng.gen_range(0..=(k as i64 * den as i64));
        let dw = m.eval(&w);
        let report = match counting_bound_check(m, &w, k, alpha, num, den) {
            Err(Error::ZeroCapital) if dw.is_zero() => continue,
            Err(e) => {
                bad.push(format!("{name}: {e}"));
                instances += 1;
                continue;
            }
            Ok(r) => r,
        };
        // d(wu)^den ≥ (α·d(w))^den · 2^{k·den − num}
        let target = (alpha * &dw).pow(den as u32).shl(k as i64 * den as i64 - num);
        let count = (0..1u64 << k)
            .filter(|&x| m.eval(&w.concat(&BitString::from_u64(x, k))).pow(den as u32) >= target)
            .count() as u64;
        // (count·α)^den ≤ 2^num
        let holds = (&Dyadic::from_u64(count) * alpha).pow(den as u32) <= Dyadic::pow2(num);
        if report.count != count || report.holds != holds || !holds {
            bad.push(format!("{name} w={w} k={k} α={alpha} l={num}/{den}: {report:?} vs {count}"));
        }
        instances += 1;
    }
    if bad.is_empty() {
        Ok(format!("{} models to depth 10, 500 counting instances, 0 violations", models.len()))
    } else {
        Err(format!("{} violations ({})", bad.len(), bad[0]))
    }
}

fn random_r(rng: &mut ChaCha8Rng) -> Dyadic {
    let int_bits = rng.gen_range(1..=64u32);
    let frac_bits = rng.gen_range(0..=32u32);
    let total = int_bits + frac_bits;
    let mut m = BigUint::from(1u8) << (total - 1);
    for b in 0..total - 1 {
        if rng.gen::<bool>() {
            m |= BigUint::from(1u8) << b;
        }
    }
    Dyadic::new(m, -(frac_bits as i64))
}

fn in_bracket(r: &Dyadic, c: &Dyadic, ctx: u64) -> bool {
    let sq = Dyadic::from_u64(ctx * ctx);
    let sq_less = Dyadic::from_u64(ctx * ctx - 1);
    c < r && &(c * &sq) >= &(r * &sq_less)
}

fn threshold_brackets() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = Vec::new();
    let (mut worst_a, mut worst_b) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for _ in 0..10_000 {
        let r = random_r(&mut rng);
        let k = rng.gen_range(2..=32u64);
        let code = ThresholdCodec::new(ThresholdScheme::A, false).encode(&r, k).unwrap();
        let back = threshold_decode(&code.payload, ThresholdScheme::A, k, None);
        // the N = 2 bound is the tighter of the two schedules used
        let limit = 2.0 * k as f64 / 2.0 + 16.0;
        worst_a = worst_a.max(code.payload.len() as f64 - limit);
        if !in_bracket(&r, &code.value, k) || back.as_ref() != Ok(&code.value) || code.payload.len() as f64 > limit {
            bad.push(format!("A r={r} k={k}"));
        }

        let r = random_r(&mut rng);
        let i = rng.gen_range(2..=64u64);
        let code = ThresholdCodec::new(ThresholdScheme::B, false).encode(&r, i).unwrap();
        let back = threshold_decode(&code.payload, ThresholdScheme::B, i, None);
        let limit = 24.0 * (i as f64).log2();
        worst_b = worst_b.max(code.payload.len() as f64 - limit);
        if !in_bracket(&r, &code.value, i) || back.as_ref() != Ok(&code.value) || code.payload.len() as f64 > limit {
            bad.push(format!("B r={r} i={i}"));
        }
    }
    let elapsed = start.elapsed();
    let msg = format!(
        "2×10^4 instances, worst slack A {:.1} bits, B {:.1} bits, {}",
        -worst_a,
        -worst_b,
        secs(elapsed)
    );
    if bad.is_empty() && elapsed < Duration::from_secs(30) {
        Ok(msg)
    } else {
        Err(format!("{} failures ({}); {msg}", bad.len(), bad.first().cloned().unwrap_or_default()))
    }
}

fn pruned_search() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let models: Vec<MartingaleModel> = ["fixed:p0=3/4", "markov:k=2,g=8", "phase:period=3,g=8", "uniform", "fixed:p0=1/8"]
        .iter()
        .map(|d| model(d))
        .collect();
    let mut bad = Vec::new();
    let mut nonempty = 0;
    for _ in 0..500 {
        let m = &models[rng.gen_range(0..models.len())];
        let sl = rng.gen_range(0..24);
        let s = random_bits(&mut rng, sl);
        let k = rng.gen_range(1..=12usize);
        let ds = m.eval(&s);
        // threshold between d(s)/4 and d(s)·4 on a 1/16 grid
        let c = (&ds * &Dyadic::from_frac(rng.gen_range(4..=64u64), 4)).shl(-2);
        let set = ExtensionSet::new(m, &s, k, c.clone()).unwrap();
        let members: Vec<BitString> = (0..1u64 << k)
            .map(|x| BitString::from_u64(x, k))
            .filter(|u| m.eval(&s.concat(u)) > c)
            .collect();
        if set.size() != members.len() as u64 {
            bad.push(format!("size k={k} s={s}"));
            continue;
        }
        nonempty += usize::from(!members.is_empty());
        for (rank, u) in members.iter().enumerate() {
            if set.ind_lex(u) != Ok(rank as u64) || set.str_lex(rank as u64).as_ref() != Ok(u) {
                bad.push(format!("rank {rank} k={k} s={s}"));
                break;
            }
        }
    }
    if bad.is_empty() && nonempty > 100 {
        Ok(format!("500 instances ({nonempty} nonempty), 0 mismatches"))
    } else {
        Err(format!("{} mismatches ({}), {nonempty} nonempty", bad.len(), bad.first().cloned().unwrap_or_default()))
    }
}

fn composition_accounting() -> Outcome {
    let s = seq("tripled(lcg)", 7, 1500);
    let codec_a = codec_for("A:N=2", "phase:period=3,g=8");
    let codec_b = codec_for("B", "markov:k=2,g=8");
    let stream_a = codec_a.encode(&s).unwrap();
    let stream_b = codec_b.encode(&s).unwrap();
    let block_a = DecoderSpec::BlockCodec { codec: codec_a.clone(), len: s.len() };
    let block_b = DecoderSpec::BlockCodec { codec: codec_b, len: s.len() };
    let copier = DecoderSpec::BitCopier;
    let constant = DecoderSpec::Constant(BitString::from("01"));
    let fst3 = DecoderSpec::FstRunner(Fst::block_coder(3));
    let id = DecoderSpec::FstRunner(Fst::identity());
    let cases = [
        (copier.clone(), copier.clone(), &stream_a),
        (copier.clone(), block_a.clone(), &stream_a),
        (constant.clone(), block_a.clone(), &stream_a),
        (fst3.clone(), block_a.clone(), &stream_a),
        (fst3.clone(), block_b.clone(), &stream_b),
        (block_a.clone(), copier.clone(), &stream_a),
        (block_a.clone(), id.clone(), &stream_a),
        (block_b.clone(), copier.clone(), &stream_b),
        (fst3.clone(), copier.clone(), &stream_a),
        (copier.clone(), constant.clone(), &stream_a),
    ];
    let mut bad = Vec::new();
    for (outer, inner, oracle) in &cases {
        match check_composition(outer, inner, oracle, 512) {
            Ok(chk) if chk.first_mismatch.is_none() => {}
            Ok(chk) => bad.push(format!("{outer} ∘ {inner}: n = {:?}", chk.first_mismatch)),
            Err(e) => bad.push(format!("{outer} ∘ {inner}: {e}")),
        }
    }
    if bad.is_empty() {
        Ok(format!("{} decoder pairs, every n ≤ 512 exact", cases.len()))
    } else {
        Err(format!("{} failures ({})", bad.len(), bad[0]))
    }
}

fn ilfst_suite() -> Outcome {
    let battery = default_battery();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = Vec::new();

    let il: Vec<_> = battery.iter().filter(|m| il_check(&m.fst, 1 << 20).is_il()).collect();
    let mut inverted = 0;
    for m in &il {
        for len in [0usize, 1, 5, 17, 999, 10_000] {
            let x = random_bits(&mut rng, len);
            // bits that emit nothing yet come out once the input is extended
            let padded = x.concat(&BitString::repeat(false, 64));
            let y = m.fst.run(&x).0;
            let short = il_decode(&m.fst, &y, 128);
            let long = il_decode(&m.fst, &m.fst.run(&padded).0, 128);
            match (short, long) {
                (Ok(s), Ok(l)) if s.x.is_prefix_of(&x) && x.is_prefix_of(&l.x) => inverted += 1,
                other => bad.push(format!("invert {} |x|={len}: {other:?}", m.name)),
            }
        }
    }

    let mut composed = 0;
    for outer in &battery {
        for inner in &battery {
            let c = compose_fst(&outer.fst, &inner.fst);
            for _ in 0..100 {
                let len = rng.gen_range(0..=10_000);
                let x = random_bits(&mut rng, len);
                if c.run(&x).0 != outer.fst.run(&inner.fst.run(&x).0).0 {
                    bad.push(format!("compose {} ∘ {}", outer.name, inner.name));
                    break;
                }
                composed += 1;
            }
        }
    }

    for (m, label) in labeled_suite() {
        match il_check(&m.fst, 1 << 20) {
            IlVerdict::Il if label => {}
            IlVerdict::NotIl { x, y } if !label => {
                if x == y || m.fst.run(&x) != m.fst.run(&y) {
                    bad.push(format!("witness for {} fails replay", m.name));
                }
            }
            v => bad.push(format!("{}: {v:?}, label {label}", m.name)),
        }
    }
    if bad.is_empty() {
        Ok(format!(
            "{} IL members inverted on {inverted} inputs, {composed} composition runs, 10/10 labels"
            ,
            il.len()
        ))
    } else {
        Err(format!("{} failures ({})", bad.len(), bad[0]))
    }
}

fn extraction() -> Outcome {
    let start = Instant::now();
    let s = seq("tripled(lcg)", 1, 30_000);
    let r = extract_fs(&s, &Fst::block_coder(3), &default_battery(), 1 << 20).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let worst = r
        .members
        .iter()
        .filter_map(|m| m.on_output.map(|o| (m.name.clone(), o.0.min(m.composed.unwrap().0))))
        .fold((String::new(), f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let msg = format!(
        "C ratio max {:.4} (≤ 0.70), |P| = {}, battery min {:.4} at {} (≥ 0.85), {}",
        r.compressor.1,
        r.output.len(),
        r.quality,
        worst.0,
        secs(elapsed)
    );
    if r.compressor.1 <= 0.70 && r.quality >= 0.85 && elapsed < Duration::from_secs(60) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn enc_codes() -> Outcome {
    let mut bad = Vec::new();
    let tail = BitString::from("1011");
    let mut strings = 0;
    for len in 0..=16usize {
        for v in 0..1u64 << len {
            let w = BitString::from_u64(v, len);
            let code = enc(&w);
            match dec_enc(&code.concat(&tail)) {
                Ok((back, used)) if back == w && used == code.len() => {}
                other => bad.push(format!("w={w}: {other:?}")),
            }
            strings += 1;
        }
    }
    for n in 2..=1_000_000u64 {
        let len = enc_nat(n).len() as f64;
        let log = (n as f64).log2();
        if len > log + 2.0 * log.log2() + 3.0 + 1e-9 {
            bad.push(format!("|enc({n})| = {len}"));
        }
    }
    if bad.is_empty() {
        Ok(format!("{strings} strings round trip, length bound holds for 2 ≤ n ≤ 10^6"))
    } else {
        Err(format!("{} failures ({})", bad.len(), bad[0]))
    }
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let (c1, c2) = round_trips();
    results.push((1, "codec round trip", c1));
    results.push((2, "per-block counting bound", c2));
    results.push((3, "index-mass separation", index_mass()));
    results.push((4, "gale algebra", gale_algebra()));
    results.push((5, "threshold brackets and payloads", threshold_brackets()));
    results.push((6, "pruned search vs naive scan", pruned_search()));
    results.push((7, "composition accounting", composition_accounting()));
    results.push((8, "transducer suite", ilfst_suite()));
    results.push((9, "finite-state extraction", extraction()));
    results.push((10, "enc round trip and length bound", enc_codes()));

    let mut failed = 0;
    for (i, name, r) in &results {
        match r {
            Ok(msg) => println!("PASS {i:>2} {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {i:>2} {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed, {}", results.len() - failed, secs(start.elapsed()));
    if failed > 0 {
        std::process::exit(1);
    }
}

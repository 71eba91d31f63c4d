//! End-to-end acceptance criteria. Runs without the libtest harness so that
//! every criterion prints a PASS/FAIL line; exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nttkit::modarith::{find_ntt_primes, shoup_mulmod, shoup_precompute, Prime};
use nttkit::rns::{from_rns, rns_polymul, to_rns, ModulusChain, ParamFile};
use nttkit::traffic::{instrument_counters, model, model_table_resident, model_two_pass};
use nttkit::transform::{self, Order, OtConfig, TransformConfig};
use nttkit::twiddle::{build_ot_schedule, build_table, ot_apply, TwiddleTable};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    (a as u128 * b as u128 % p as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit inputs.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let small = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if small.contains(&n) {
        return true;
    }
    if small.iter().any(|&q| n.is_multiple_of(q)) {
        return false;
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &small {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Negacyclic schoolbook product with u128 accumulation. Positive and
/// negative wraps are kept apart and reduced every 255 terms.
fn schoolbook(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len();
    let pp = p as u128;
    (0..n)
        .map(|k| {
            let (mut pos, mut neg) = (0u128, 0u128);
            let (mut pos_terms, mut neg_terms) = (0, 0);
            for i in 0..n {
                if i <= k {
                    pos += a[i] as u128 * b[k - i] as u128;
                    pos_terms += 1;
                    if pos_terms == 255 {
                        pos %= pp;
                        pos_terms = 0;
                    }
                } else {
                    neg += a[i] as u128 * b[n + k - i] as u128;
                    neg_terms += 1;
                    if neg_terms == 255 {
                        neg %= pp;
                        neg_terms = 0;
                    }
                }
            }
            ((pos % pp + pp - neg % pp) % pp) as u64
        })
        .collect()
}

fn big_schoolbook(a: &[BigUint], b: &[BigUint], q: &BigUint) -> Vec<BigUint> {
    let n = a.len();
    let mut pos = vec![BigUint::default(); n];
    let mut neg = vec![BigUint::default(); n];
    for i in 0..n {
        for j in 0..n {
            if i + j < n {
                pos[i + j] += &a[i] * &b[j];
            } else {
                neg[i + j - n] += &a[i] * &b[j];
            }
        }
    }
    pos.into_iter()
        .zip(neg)
        .map(|(p, m)| (p + q - m % q) % q)
        .collect()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, p: u64) -> Vec<u64> {
    (0..n).map(|_| rng.random_range(0..p)).collect()
}

fn random_big(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    let digits = (bound.bits() / 32 + 2) as usize;
    BigUint::new((0..digits).map(|_| rng.random()).collect()) % bound
}

fn parse(token: &str) -> TransformConfig {
    token.parse().unwrap_or_else(|e| panic!("{token}: {e}"))
}

/// Every variant at size `n`: radix-2, Stockham, high-radix 4..32, every valid
/// two-pass split with per-thread sizes 2/4/8, and OT on radix-2 and two-pass.
fn variants(n: usize) -> Vec<TransformConfig> {
    let log_n = n.trailing_zeros();
    let mut tokens = vec!["radix2".to_string(), "stockham".to_string()];
    for r in [4, 8, 16, 32] {
        tokens.push(format!("highradix:{r}"));
    }
    let min_factor = if n >= 1 << 12 { 64 } else { 2 };
    for l1 in 1..log_n {
        let (n1, n2) = (1usize << l1, n >> l1);
        if n1 < min_factor || n2 < min_factor {
            continue;
        }
        for pt in [2, 4, 8] {
            tokens.push(format!("twopass:{n1}x{n2}:{pt}"));
        }
        let base = if n >= 1 << 11 { 1024 } else { 1 << log_n.div_ceil(2) };
        for stages in 1..=2.min(n2.trailing_zeros()) {
            tokens.push(format!("twopass:{n1}x{n2}:8+ot:{base}:{stages}"));
            tokens.push(format!("twopass:{n1}x{n2}:2+ot:2:{stages}"));
        }
    }
    for stages in 1..=2.min(log_n) {
        tokens.push(format!("radix2+ot:{}:{stages}", 1 << (log_n / 2)));
        tokens.push(format!("radix2+ot:{n}:{stages}"));
    }
    tokens.iter().map(|t| parse(t)).collect()
}

/// Forward transform, reported in bit-reversed order.
fn forward_bitrev(a: &[u64], t: &TwiddleTable, config: &TransformConfig) -> Vec<u64> {
    let mut r = a.to_vec();
    if transform::forward(&mut r, t, config, None).unwrap() == Order::Natural {
        transform::bit_reverse_permute(&mut r).unwrap();
    }
    r
}

fn primes(log_n: u32, count: usize) -> Vec<Prime> {
    find_ntt_primes(1 << log_n, count, 59, 60).unwrap()
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn c1_polymul_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for log_n in 1..=10 {
        for prime in primes(log_n, 3) {
            let t = build_table(prime);
            for _ in 0..100 {
                let a = random_vec(&mut rng, t.n(), t.p());
                let b = random_vec(&mut rng, t.n(), t.p());
                let got = transform::negacyclic_polymul(&a, &b, &t, &TransformConfig::radix2()).unwrap();
                check(got == schoolbook(&a, &b, t.p()), || format!("N={} p={}", t.n(), t.p()))?;
            }
        }
    }
    Ok("N = 2..2^10, 3 primes, 100 pairs each".into())
}

fn roundtrip(a: &[u64], t: &TwiddleTable, config: &TransformConfig) -> Result<(), String> {
    let mut r = a.to_vec();
    let order = transform::forward(&mut r, t, config, None).unwrap();
    transform::inverse(&mut r, t, order).unwrap();
    check(r == a, || format!("N={} p={} {config}", t.n(), t.p()))
}

fn big_configs() -> Vec<TransformConfig> {
    [
        "radix2",
        "stockham",
        "highradix:4",
        "highradix:8",
        "highradix:16",
        "highradix:32",
        "twopass:128x1024:2",
        "twopass:128x1024:4",
        "twopass:128x1024:8",
        "twopass:256x512:8",
        "twopass:128x1024:8+ot:1024:1",
        "twopass:128x1024:8+ot:1024:2",
        "radix2+ot:1024:2",
    ]
    .iter()
    .map(|t| parse(t))
    .collect()
}

fn c2_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut count = 0;
    for log_n in 2..=12 {
        let t = build_table(primes(log_n, 1)[0]);
        for config in variants(t.n()) {
            for _ in 0..3 {
                roundtrip(&random_vec(&mut rng, t.n(), t.p()), &t, &config)?;
                count += 1;
            }
        }
    }
    let configs = big_configs();
    for prime in primes(17, 21) {
        let t = build_table(prime);
        for _ in 0..10 {
            let a = random_vec(&mut rng, t.n(), t.p());
            for config in &configs {
                roundtrip(&a, &t, config)?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} roundtrips incl. 2^17 x 21 primes x 10 vectors x {} variants", configs.len()))
}

fn c3_cross_algorithm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut count = 0;
    let mut compare = |t: &TwiddleTable, configs: &[TransformConfig], rng: &mut ChaCha8Rng| {
        let a = random_vec(rng, t.n(), t.p());
        let mut want = a.clone();
        transform::ntt_radix2_ct(&mut want, t).unwrap();
        for config in configs {
            check(forward_bitrev(&a, t, config) == want, || format!("N={} {config}", t.n()))?;
            count += 1;
        }
        let mut st = a.clone();
        transform::ntt_stockham(&mut st, &mut vec![0; t.n()], t).unwrap();
        transform::bit_reverse_permute(&mut st).unwrap();
        check(st == want, || format!("N={} stockham", t.n()))
    };
    for log_n in 1..=12 {
        let t = build_table(primes(log_n, 1)[0]);
        let configs = variants(t.n());
        for _ in 0..4 {
            compare(&t, &configs, &mut rng)?;
        }
    }
    let configs = big_configs();
    for prime in primes(17, 3) {
        compare(&build_table(prime), &configs, &mut rng)?;
    }
    Ok(format!("{count} buffer comparisons, N = 2..2^12 and 2^17"))
}

fn c4_shoup() -> Outcome {
    let p = 17;
    for w in 0..p {
        let pair = shoup_precompute(w, p).unwrap();
        for b in 0..4 * p {
            check(shoup_mulmod(b, pair, p) == b % p * w % p, || format!("{b}*{w} mod 17"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let chain = primes(17, 21);
    for prime in &chain {
        let p = prime.p();
        for _ in 0..1_000_000 {
            let w = rng.random_range(0..p);
            let b = rng.random_range(0..4 * p);
            let got = shoup_mulmod(b, shoup_precompute(w, p).unwrap(), p);
            check(got == mulmod(b, w, p), || format!("{b}*{w} mod {p}"))?;
        }
    }
    Ok(format!("exhaustive p=17, 10^6 trials x {} primes", chain.len()))
}

fn c5_ot_count() -> Outcome {
    let prime = primes(17, 1)[0];
    let schedule = build_ot_schedule(&prime, 1024, 2).unwrap();
    let count = schedule.entry_count();
    check(count == 1152, || format!("got {count}"))?;
    check(schedule.coarse().len() + schedule.fine().len() == 1152, || "table lengths".into())?;
    Ok(format!("{count} entries"))
}

fn c6_ot_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for log_n in 1..=10u32 {
        let n = 1usize << log_n;
        let t = build_table(primes(log_n, 1)[0]);
        let (p, psi) = (t.p(), t.prime().psi());
        for log_b in 0..=log_n {
            for stages in 1..=2.min(log_n) {
                let schedule = build_ot_schedule(t.prime(), 1 << log_b, stages).unwrap();
                let x = rng.random_range(0..p);
                for e in 0..n {
                    let got = ot_apply(x, e, &schedule, p);
                    check(got < 2 * p && got % p == mulmod(x, powmod(psi, e as u64, p), p), || {
                        format!("N={n} B={} e={e}", 1 << log_b)
                    })?;
                }
                let a = random_vec(&mut rng, n, p);
                let mut plain = a.clone();
                transform::ntt_radix2_ct(&mut plain, &t).unwrap();
                let mut with_ot = a.clone();
                transform::ntt_radix2_ct_ot(&mut with_ot, &t, &schedule).unwrap();
                check(with_ot == plain, || format!("N={n} B={} S={stages} transform", 1 << log_b))?;
            }
        }
    }
    for prime in primes(17, 2) {
        let t = build_table(prime);
        let (p, psi) = (t.p(), t.prime().psi());
        let schedule = build_ot_schedule(&prime, 1024, 2).unwrap();
        for _ in 0..100_000 {
            let e = rng.random_range(0..t.n());
            let x = rng.random_range(0..p);
            check(ot_apply(x, e, &schedule, p) % p == mulmod(x, powmod(psi, e as u64, p), p), || format!("2^17 e={e}"))?;
        }
        let a = random_vec(&mut rng, t.n(), p);
        let plain = forward_bitrev(&a, &t, &TransformConfig::radix2());
        for token in ["radix2+ot:1024:1", "radix2+ot:1024:2", "twopass:128x1024:8+ot:1024:2", "twopass:128x1024:4+ot:512:1"] {
            check(forward_bitrev(&a, &t, &parse(token)) == plain, || format!("2^17 {token}"))?;
        }
    }
    Ok("all e at N <= 2^10 (every base), 2x10^5 samples and 4 OT transforms at 2^17".into())
}

fn c7_table_size() -> Outcome {
    let spot = [
        ((1usize << 17, 45usize, 1usize), 94_371_840u64),
        ((1 << 17, 21, 2), 88_080_384),
        ((1 << 17, 45, 2), 188_743_680),
        ((1 << 14, 21, 1), 5_505_024),
    ];
    for ((n, np, dirs), want) in spot {
        let got = model_table_resident(n, np, dirs, true, None);
        check(got == want, || format!("({n}, {np}, {dirs}) -> {got}, want {want}"))?;
    }
    for log_n in 1..=17 {
        let n = 1usize << log_n;
        for np in [1, 7, 21, 45] {
            for dirs in [1, 2] {
                let words = 2 * n as u64 * np as u64 * dirs as u64;
                check(model_table_resident(n, np, dirs, true, None) == words * 8, || format!("N={n}"))?;
            }
        }
    }
    Ok("94,371,840 B and 88,080,384 B exact; 2*N*np words per direction for N = 2..2^17".into())
}

fn c8_traffic_model() -> Outcome {
    let ot = Some(OtConfig { base: 1024, stages: 2 });
    let mut values = Vec::new();
    for log_n in 14..=17u32 {
        let n = 1usize << log_n;
        let n1 = if log_n == 17 { 128 } else { 1 << (log_n / 2) };
        let report = model_two_pass(n, n1, n / n1, 21, ot, true).unwrap();
        let pct = report.ot_reduction_pct;
        check((13.5..=35.1).contains(&pct), || format!("N=2^{log_n}: {pct:.2}% outside 23.5-25.1% +/- 10pp"))?;
        values.push(format!("2^{log_n}: {pct:.2}%"));
    }
    let mut compared = 0;
    for log_n in 1..=12u32 {
        let t = build_table(primes(log_n, 1)[0]);
        for config in variants(t.n()) {
            for companions in [false, true] {
                let mut a: Vec<u64> = (0..t.n() as u64).collect();
                let measured = instrument_counters(&mut a, &t, &config, None, companions).unwrap();
                let report = model(&config, t.n(), 1, companions).unwrap();
                let modeled: Vec<_> = report.per_stage.iter().map(|p| p.words).collect();
                check(measured.passes == modeled, || format!("N={} {config}", t.n()))?;
                compared += 1;
            }
        }
    }
    Ok(format!("OT reduction {}; {compared} model/counter comparisons exact", values.join(", ")))
}

fn c9_rns_end_to_end() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let configs = [TransformConfig::radix2(), TransformConfig::stockham(), parse("highradix:8")];
    let mut count = 0;
    for log_n in 1..=8u32 {
        for np in 1..=4 {
            let chain = ModulusChain::generate(1 << log_n, np).unwrap();
            let pairs = if np == 4 { 50 } else { 5 };
            for i in 0..pairs {
                let a: Vec<BigUint> = (0..chain.n()).map(|_| random_big(&mut rng, chain.q())).collect();
                let b: Vec<BigUint> = (0..chain.n()).map(|_| random_big(&mut rng, chain.q())).collect();
                let config = &configs[i % configs.len()];
                let c = rns_polymul(&to_rns(&a, &chain).unwrap(), &to_rns(&b, &chain).unwrap(), &chain, config, 2).unwrap();
                let got = from_rns(&c, &chain).unwrap();
                check(got == big_schoolbook(&a, &b, chain.q()), || format!("N={} np={np} {config}", chain.n()))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} products, N = 2..256, np = 1..4 (50 pairs at np = 4)"))
}

fn c10_crt_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let all = primes(17, 45);
    for np in [1, 2, 4, 21, 45] {
        let chain = ModulusChain::new(all[..np].iter().map(|p| Prime::new(p.p(), 1).unwrap()).collect()).unwrap();
        for i in 0..10_000 {
            let x = if i == 0 { chain.q() - 1u32 } else { random_big(&mut rng, chain.q()) };
            let back = from_rns(&to_rns(std::slice::from_ref(&x), &chain).unwrap(), &chain).unwrap();
            check(back[0] == x, || format!("np={np} x={x}"))?;
        }
    }
    Ok("10^4 values per chain, np = 1, 2, 4, 21, 45".into())
}

fn c11_gen_params() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_nttkit"))
            .args(["gen-params", "--logn", "17", "--np", "45", "--out"])
            .arg(&path)
            .output()
            .unwrap();
        (out.status.code(), std::fs::read(&path).unwrap_or_default())
    };
    let (c1, first) = run("a.json");
    let (c2, second) = run("b.json");
    check(c1 == Some(0) && c2 == Some(0), || format!("exit codes {c1:?} {c2:?}"))?;
    check(first == second, || "files differ between runs".into())?;
    let params = ParamFile::from_json(std::str::from_utf8(&first).unwrap()).unwrap();
    check(params.n == 1 << 17 && params.primes.len() == 45, || "shape".into())?;
    for (&p, &psi) in params.primes.iter().zip(&params.psi) {
        check((1 << 59..1 << 60).contains(&p), || format!("{p} out of range"))?;
        check(p % (1 << 18) == 1, || format!("{p} not 1 mod 2^18"))?;
        check(is_prime(p), || format!("{p} composite"))?;
        check(powmod(psi, 1 << 17, p) == p - 1, || format!("psi for {p}"))?;
    }
    let mut sorted = params.primes.clone();
    sorted.dedup();
    check(sorted.len() == 45, || "duplicate primes".into())?;
    Ok(format!("45 primes, {} byte file, identical across runs", first.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 negacyclic polymul == schoolbook", c1_polymul_oracle),
        ("2 roundtrip", c2_roundtrip),
        ("3 cross-algorithm bit-exactness", c3_cross_algorithm),
        ("4 Shoup == native", c4_shoup),
        ("5 OT entry count", c5_ot_count),
        ("6 OT == table", c6_ot_equivalence),
        ("7 table-size accounting", c7_table_size),
        ("8 traffic model", c8_traffic_model),
        ("9 RNS polymul == big-integer schoolbook", c9_rns_end_to_end),
        ("10 CRT roundtrip", c10_crt_roundtrip),
        ("11 parameter generation", c11_gen_params),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{secs:6.2}s] criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{secs:6.2}s] criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

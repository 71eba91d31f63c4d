//! Self-check suites behind `nttkit verify`.

use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Level;
use crate::error::Result;
use crate::modarith::{
    find_ntt_primes, mulmod_native, pow_mod, shoup_mulmod, shoup_mulmod_lazy, shoup_precompute,
    Prime,
};
use crate::rns::{from_rns, rns_polymul, to_rns, ModulusChain};
use crate::transform::{self, Order, TransformConfig};
use crate::twiddle::{
    bit_reverse, build_ot_schedule, build_table, default_ot_base, ot_apply, TwiddleTable,
};

type Outcome = std::result::Result<(), String>;

struct Suite<'a> {
    out: &'a mut dyn Write,
    failed: usize,
}

impl Suite<'_> {
    fn check<F: FnOnce() -> Outcome>(&mut self, name: &str, f: F) -> Result<()> {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => writeln!(self.out, "PASS {name} ({secs:.2}s)")?,
            Err(detail) => {
                self.failed += 1;
                writeln!(self.out, "FAIL {name}: {detail}")?;
            }
        }
        Ok(())
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, p: u64) -> Vec<u64> {
    (0..n).map(|_| rng.random_range(0..p)).collect()
}

/// Every forward variant the crate supports at size `n`.
fn variants(n: usize) -> Vec<TransformConfig> {
    let log_n = n.trailing_zeros();
    let mut out = vec![TransformConfig::radix2(), TransformConfig::stockham()];
    for r in [4, 8, 16, 32] {
        out.push(TransformConfig::high_radix(r));
    }
    let min_factor = if n >= 1 << 12 { 64 } else { 2 };
    for l1 in 1..log_n {
        let (n1, n2) = (1usize << l1, n >> l1);
        if n1 < min_factor || n2 < min_factor {
            continue;
        }
        for pt in [2, 4, 8] {
            out.push(TransformConfig::two_pass(n1, n2, pt));
        }
        for stages in 1..=2u32.min(n2.trailing_zeros()) {
            out.push(TransformConfig::two_pass(n1, n2, 8).with_ot(default_ot_base(n), stages));
        }
    }
    for stages in 1..=2u32.min(log_n) {
        out.push(TransformConfig::radix2().with_ot(default_ot_base(n), stages));
        out.push(TransformConfig::radix2().with_ot(2, stages));
    }
    out.retain(|c| c.validate(n).is_ok());
    out
}

fn reference(a: &[u64], table: &TwiddleTable) -> Vec<u64> {
    let mut r = a.to_vec();
    transform::ntt_radix2_ct(&mut r, table).expect("reference transform");
    r
}

fn run_variant(a: &[u64], table: &TwiddleTable, config: &TransformConfig) -> std::result::Result<Vec<u64>, String> {
    let mut r = a.to_vec();
    let order = transform::forward(&mut r, table, config, None).map_err(|e| format!("{config}: {e}"))?;
    if order == Order::Natural {
        transform::bit_reverse_permute(&mut r).map_err(|e| e.to_string())?;
    }
    Ok(r)
}

fn schoolbook(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len();
    let mut c = vec![0u64; n];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let prod = (x as u128 * y as u128 % p as u128) as u64;
            let k = (i + j) % n;
            c[k] = if i + j < n {
                (c[k] + prod) % p
            } else {
                (c[k] + p - prod) % p
            };
        }
    }
    c
}

struct Fixture {
    table: TwiddleTable,
}

fn fixtures(sizes: &[u32], per_size: usize, inject_fault: bool) -> Result<Vec<Fixture>> {
    let mut out = Vec::new();
    for &l in sizes {
        for prime in find_ntt_primes(1 << l, per_size, 59, 60)? {
            let mut table = build_table(prime);
            if inject_fault {
                let last = table.n() - 1;
                table.forward_mut()[last].w_bar ^= 1 << 40;
            }
            out.push(Fixture { table });
        }
    }
    Ok(out)
}

/// Runs the suites for `level`, printing one line per check, and returns the
/// number of failed checks.
pub(crate) fn run(level: Level, inject_fault: bool, out: &mut dyn Write) -> Result<usize> {
    let full = level == Level::Full;
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let result = run_suites(full, inject_fault, out);
    panic::set_hook(hook);
    result
}

fn run_suites(full: bool, inject_fault: bool, out: &mut dyn Write) -> Result<usize> {
    let mut suite = Suite { out, failed: 0 };
    let small: Vec<u32> = (1..=10).collect();
    let fx = fixtures(&small, if full { 3 } else { 1 }, inject_fault)?;

    suite.check("shoup-exhaustive-p17", || {
        let p = 17;
        for w in 0..p {
            let pair = shoup_precompute(w, p).map_err(|e| e.to_string())?;
            for b in 0..4 * p {
                let lazy = shoup_mulmod_lazy(b, pair, p);
                ensure(lazy < 2 * p && lazy % p == b * w % p, || format!("lazy {b}*{w}"))?;
                ensure(shoup_mulmod(b, pair, p) == b * w % p, || format!("{b}*{w}"))?;
            }
        }
        Ok(())
    })?;

    let trials = if full { 1_000_000 } else { 100_000 };
    let big_primes = find_ntt_primes(1 << 10, 3, 59, 60)?;
    suite.check("shoup-random-60bit", || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for prime in &big_primes {
            let p = prime.p();
            for _ in 0..trials {
                let w = rng.random_range(0..p);
                let b = rng.random_range(0..4 * p);
                let pair = shoup_precompute(w, p).map_err(|e| e.to_string())?;
                let native = mulmod_native(b, w, p).map_err(|e| e.to_string())?;
                ensure(shoup_mulmod(b, pair, p) == native, || format!("{b}*{w} mod {p}"))?;
            }
        }
        Ok(())
    })?;

    suite.check("table-consistency", || {
        for f in &fx {
            let t = &f.table;
            let (p, psi, bits) = (t.p(), t.prime().psi(), t.log_n());
            for (i, (fw, iv)) in t.forward().iter().zip(t.inverse()).enumerate() {
                let e = bit_reverse(i, bits).map_err(|e| e.to_string())? as u64;
                ensure(fw.w == pow_mod(psi, e, p), || format!("N={} forward[{i}]", t.n()))?;
                ensure(
                    fw.w_bar == shoup_precompute(fw.w, p).unwrap().w_bar,
                    || format!("N={} forward[{i}] companion", t.n()),
                )?;
                ensure(mulmod_native(fw.w, iv.w, p).unwrap() == 1, || format!("N={} inverse[{i}]", t.n()))?;
            }
        }
        Ok(())
    })?;

    suite.check("ot-table-equivalence", || {
        for f in &fx {
            let t = &f.table;
            let n = t.n();
            let (p, psi) = (t.p(), t.prime().psi());
            let base = default_ot_base(n);
            let stages = 2u32.min(t.log_n());
            let schedule = build_ot_schedule(t.prime(), base, stages).map_err(|e| e.to_string())?;
            let x = rng_value(n as u64, p);
            for e in 0..n {
                ensure(
                    ot_apply(x, e, &schedule, p) % p == mulmod_native(x, pow_mod(psi, e as u64, p), p).unwrap(),
                    || format!("N={n} e={e}"),
                )?;
            }
            let a: Vec<u64> = (0..n as u64).map(|i| rng_value(i * 7 + 3, p)).collect();
            let plain = reference(&a, t);
            let mut with_ot = a.clone();
            transform::ntt_radix2_ct_ot(&mut with_ot, t, &schedule).map_err(|e| e.to_string())?;
            ensure(with_ot == plain, || format!("N={n}: OT transform differs from table transform"))?;
        }
        Ok(())
    })?;

    suite.check("roundtrip", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for f in &fx {
            let t = &f.table;
            let a = random_vec(&mut rng, t.n(), t.p());
            for config in variants(t.n()) {
                let mut r = a.clone();
                let order = transform::forward(&mut r, t, &config, None).map_err(|e| e.to_string())?;
                transform::inverse(&mut r, t, order).map_err(|e| e.to_string())?;
                ensure(r == a, || format!("N={} {config}", t.n()))?;
            }
        }
        Ok(())
    })?;

    suite.check("cross-variant", || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in &fx {
            let t = &f.table;
            let a = random_vec(&mut rng, t.n(), t.p());
            let want = reference(&a, t);
            for config in variants(t.n()) {
                ensure(run_variant(&a, t, &config)? == want, || format!("N={} {config}", t.n()))?;
            }
        }
        Ok(())
    })?;

    let pairs = if full { 100 } else { 3 };
    suite.check("negacyclic-vs-schoolbook", || {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for f in &fx {
            let t = &f.table;
            for _ in 0..pairs {
                let a = random_vec(&mut rng, t.n(), t.p());
                let b = random_vec(&mut rng, t.n(), t.p());
                let got = transform::negacyclic_polymul(&a, &b, t, &TransformConfig::radix2())
                    .map_err(|e| e.to_string())?;
                ensure(got == schoolbook(&a, &b, t.p()), || format!("N={}", t.n()))?;
            }
        }
        Ok(())
    })?;

    let (crt_np, crt_values) = if full { (45, 10_000) } else { (8, 1_000) };
    let crt_primes = find_ntt_primes(1 << 17, crt_np, 59, 60)?;
    suite.check("crt-roundtrip", || {
        let primes = crt_primes
            .iter()
            .map(|p| Prime::new(p.p(), 1))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let chain = ModulusChain::new(primes).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..crt_values {
            let x = random_big(&mut rng, chain.q());
            let back = from_rns(&to_rns(std::slice::from_ref(&x), &chain).unwrap(), &chain).unwrap();
            ensure(back[0] == x, || format!("{x}"))?;
        }
        Ok(())
    })?;

    suite.check("rns-polymul-vs-bigint", || {
        let chain = ModulusChain::generate(32, 3).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..if full { 20 } else { 3 } {
            let a: Vec<BigUint> = (0..32).map(|_| random_big(&mut rng, chain.q())).collect();
            let b: Vec<BigUint> = (0..32).map(|_| random_big(&mut rng, chain.q())).collect();
            let c = rns_polymul(
                &to_rns(&a, &chain).unwrap(),
                &to_rns(&b, &chain).unwrap(),
                &chain,
                &TransformConfig::two_pass(4, 8, 4),
                2,
            )
            .map_err(|e| e.to_string())?;
            ensure(from_rns(&c, &chain).unwrap() == big_schoolbook(&a, &b, chain.q()), || "product".into())?;
        }
        Ok(())
    })?;

    if full {
        let primes = find_ntt_primes(1 << 17, 21, 59, 60)?;
        suite.check("sampled-2^17-21-primes", || {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let configs: Vec<TransformConfig> = [
                "stockham",
                "highradix:16",
                "twopass:128x1024:8",
                "twopass:128x1024:8+ot:1024:2",
                "radix2+ot:1024:1",
            ]
            .iter()
            .map(|t| t.parse().unwrap())
            .collect();
            for prime in &primes {
                let mut t = build_table(*prime);
                if inject_fault {
                    t.forward_mut()[(1 << 17) - 1].w_bar ^= 1 << 40;
                }
                let a = random_vec(&mut rng, t.n(), t.p());
                let want = reference(&a, &t);
                for config in &configs {
                    ensure(run_variant(&a, &t, config)? == want, || format!("p={} {config}", t.p()))?;
                }
                let mut back = want.clone();
                transform::intt_radix2_gs(&mut back, &t).map_err(|e| e.to_string())?;
                ensure(back == a, || format!("p={} roundtrip", t.p()))?;
                let schedule = build_ot_schedule(t.prime(), 1024, 2).unwrap();
                for _ in 0..1024 {
                    let e = rng.random_range(0..t.n());
                    let x = rng.random_range(0..t.p());
                    let direct = mulmod_native(x, pow_mod(t.prime().psi(), e as u64, t.p()), t.p()).unwrap();
                    ensure(ot_apply(x, e, &schedule, t.p()) % t.p() == direct, || format!("e={e}"))?;
                }
            }
            Ok(())
        })?;
    }

    writeln!(suite.out, "{} check(s) failed", suite.failed)?;
    Ok(suite.failed)
}

/// Deterministic value below `p` derived from `seed` (splitmix-style).
fn rng_value(seed: u64, p: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (z ^ (z >> 31)) % p
}

fn random_big(rng: &mut ChaCha8Rng, bound: &BigUint) -> BigUint {
    let digits = (bound.bits() / 32 + 2) as usize;
    BigUint::new((0..digits).map(|_| rng.random()).collect()) % bound
}

fn big_schoolbook(a: &[BigUint], b: &[BigUint], q: &BigUint) -> Vec<BigUint> {
    let n = a.len();
    let mut pos = vec![BigUint::default(); n];
    let mut neg = vec![BigUint::default(); n];
    for i in 0..n {
        for j in 0..n {
            let prod = &a[i] * &b[j];
            if i + j < n {
                pos[i + j] += prod;
            } else {
                neg[i + j - n] += prod;
            }
        }
    }
    pos.into_iter()
        .zip(neg)
        .map(|(p, m)| {
            let m = m % q;
            (p + q - m) % q
        })
        .collect()
}

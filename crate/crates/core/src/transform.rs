//! Forward and inverse negacyclic NTT in several execution strategies.
//!
//! Every forward variant computes `A_k = Σ_n a_n ψ^{n(2k+1)} mod p`, i.e. the
//! transform with the `ψ` twist merged into the twiddles. The Cooley-Tukey
//! family (radix-2, high-radix, two-pass) leaves the result in bit-reversed
//! order; Stockham produces natural order. The inverse is a radix-2
//! Gentleman-Sande pass consuming bit-reversed input, with `N^{-1}` folded into
//! the final normalization.
//!
//! The blocked variants all run the same radix-2 butterflies as the plain
//! Cooley-Tukey loop, only grouped differently: a block covering stages
//! `s0 .. s0+r` holds the indices that share their top `s0−1` bits and their
//! low bits, so it can be transformed independently in local storage.

use std::fmt;
use std::str::FromStr;

use crate::error::{NttError, Result};
use crate::modarith::{
    butterfly_ct, butterfly_ct_scaled, butterfly_gs, mul_mod, normalize, shoup_mulmod, ShoupPair,
};
use crate::twiddle::{bitrev, build_ot_schedule, ot_apply_with, OtSchedule, TwiddleTable};

/// Largest local block a high-radix work item holds.
const MAX_RADIX: usize = 128;
const PER_THREAD_SIZES: [usize; 3] = [2, 4, 8];

/// Order of NTT-domain coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    Natural,
    BitReversed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Radix2Ct,
    Stockham,
    /// Register-style blocking: each pass loads `radix` points per work item.
    HighRadix { radix: usize },
    /// Kernel-1 over `n1`-point sub-transforms (stride `n2`), then Kernel-2 over
    /// `n2`-point contiguous ones; each sub-transform runs as rounds of
    /// `per_thread`-point transforms over a staging buffer.
    TwoPass { n1: usize, n2: usize, per_thread: usize },
}

/// On-the-fly twiddling over the trailing `stages` radix-2 stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct OtConfig {
    pub base: usize,
    pub stages: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TransformConfig {
    pub algo: Algorithm,
    pub ot: Option<OtConfig>,
}

impl TransformConfig {
    pub const fn new(algo: Algorithm) -> Self {
        Self { algo, ot: None }
    }

    pub const fn radix2() -> Self {
        Self::new(Algorithm::Radix2Ct)
    }

    pub const fn stockham() -> Self {
        Self::new(Algorithm::Stockham)
    }

    pub const fn high_radix(radix: usize) -> Self {
        Self::new(Algorithm::HighRadix { radix })
    }

    pub const fn two_pass(n1: usize, n2: usize, per_thread: usize) -> Self {
        Self::new(Algorithm::TwoPass { n1, n2, per_thread })
    }

    pub const fn with_ot(mut self, base: usize, stages: u32) -> Self {
        self.ot = Some(OtConfig { base, stages });
        self
    }

    pub fn output_order(&self) -> Order {
        match self.algo {
            Algorithm::Stockham => Order::Natural,
            _ => Order::BitReversed,
        }
    }

    /// Checks the configuration against ring degree `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 || !n.is_power_of_two() {
            return Err(NttError::Config(format!("ring degree {n} is not a power of two")));
        }
        let log_n = n.trailing_zeros();
        match self.algo {
            Algorithm::Radix2Ct | Algorithm::Stockham => {}
            Algorithm::HighRadix { radix } => {
                if !radix.is_power_of_two() || !(4..=MAX_RADIX).contains(&radix) {
                    return Err(NttError::Config(format!(
                        "radix {radix} must be one of 4, 8, 16, 32, 64, 128"
                    )));
                }
            }
            Algorithm::TwoPass { n1, n2, per_thread } => {
                if !n1.is_power_of_two() || !n2.is_power_of_two() || n1.checked_mul(n2) != Some(n) {
                    return Err(NttError::Config(format!("{n1} x {n2} is not a factorization of {n}")));
                }
                let min = if n >= 1 << 12 { 64 } else { 2 };
                if n1 < min || n2 < min {
                    return Err(NttError::Config(format!(
                        "both two-pass factors must be at least {min} for N = {n}"
                    )));
                }
                if !PER_THREAD_SIZES.contains(&per_thread) {
                    return Err(NttError::Config(format!(
                        "per-thread size {per_thread} must be 2, 4 or 8"
                    )));
                }
            }
        }
        if let Some(ot) = self.ot {
            let limit = match self.algo {
                Algorithm::Radix2Ct => log_n,
                Algorithm::TwoPass { n2, .. } => n2.trailing_zeros(),
                _ => {
                    return Err(NttError::Config(
                        "on-the-fly twiddling needs radix2 or twopass".into(),
                    ))
                }
            };
            if !(1..=2).contains(&ot.stages) || ot.stages > limit {
                return Err(NttError::Config(format!(
                    "OT cannot cover {} stages here (at most {})",
                    ot.stages,
                    limit.min(2)
                )));
            }
            if ot.base == 0 || !ot.base.is_power_of_two() || ot.base > n {
                return Err(NttError::Config(format!("OT base {} does not divide {n}", ot.base)));
            }
        }
        Ok(())
    }

    /// Short algorithm name used in CSV output.
    pub fn algo_name(&self) -> &'static str {
        match self.algo {
            Algorithm::Radix2Ct => "radix2",
            Algorithm::Stockham => "stockham",
            Algorithm::HighRadix { .. } => "highradix",
            Algorithm::TwoPass { .. } => "twopass",
        }
    }
}

impl fmt::Display for TransformConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.algo {
            Algorithm::Radix2Ct => write!(f, "radix2")?,
            Algorithm::Stockham => write!(f, "stockham")?,
            Algorithm::HighRadix { radix } => write!(f, "highradix:{radix}")?,
            Algorithm::TwoPass { n1, n2, per_thread } => write!(f, "twopass:{n1}x{n2}:{per_thread}")?,
        }
        if let Some(ot) = self.ot {
            write!(f, "+ot:{}:{}", ot.base, ot.stages)?;
        }
        Ok(())
    }
}

/// Parses `radix2 | stockham | highradix:R | twopass:N1xN2:PT`, optionally
/// followed by `+ot:BASE:STAGES`.
impl FromStr for TransformConfig {
    type Err = NttError;

    fn from_str(token: &str) -> Result<Self> {
        let bad = || NttError::Config(format!("cannot parse transform token `{token}`"));
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let (algo_part, ot_part) = match token.split_once('+') {
            Some((a, o)) => (a, Some(o)),
            None => (token, None),
        };
        let fields: Vec<&str> = algo_part.split(':').collect();
        let algo = match fields.as_slice() {
            ["radix2"] => Algorithm::Radix2Ct,
            ["stockham"] => Algorithm::Stockham,
            ["highradix", r] => Algorithm::HighRadix { radix: num(r)? },
            ["twopass", split, pt] => {
                let (n1, n2) = split.split_once('x').ok_or_else(bad)?;
                Algorithm::TwoPass {
                    n1: num(n1)?,
                    n2: num(n2)?,
                    per_thread: num(pt)?,
                }
            }
            _ => return Err(bad()),
        };
        let ot = match ot_part {
            None => None,
            Some(ot) => match ot.split(':').collect::<Vec<_>>().as_slice() {
                ["ot", base, stages] => Some(OtConfig {
                    base: num(base)?,
                    stages: stages.parse().map_err(|_| bad())?,
                }),
                _ => return Err(bad()),
            },
        };
        Ok(Self { algo, ot })
    }
}

/// Observer of the memory traffic a transform generates. The no-op
/// implementation compiles away; `traffic` supplies a counting one.
pub trait Probe {
    /// `words` data words loaded from the transform buffer.
    #[inline(always)]
    fn data_read(&mut self, _words: usize) {}
    #[inline(always)]
    fn data_write(&mut self, _words: usize) {}
    /// A precomputed-table entry (word plus companion) was used.
    #[inline(always)]
    fn twiddle(&mut self, _index: usize) {}
    /// The OT schedule (`entries` pairs) was staged for the current pass.
    #[inline(always)]
    fn ot_preload(&mut self, _entries: usize) {}
    #[inline(always)]
    fn end_pass(&mut self) {}
}

pub struct NoProbe;

impl Probe for NoProbe {}

/// Where a butterfly's twiddle comes from.
struct Twiddles<'a> {
    table: &'a [ShoupPair],
    log_n: u32,
    /// First (1-based) stage served by OT; beyond the last stage when OT is off.
    ot_from_stage: u32,
    coarse: &'a [ShoupPair],
    fine: &'a [ShoupPair],
    log_base: u32,
}

impl<'a> Twiddles<'a> {
    fn table_only(table: &'a TwiddleTable) -> Self {
        Self {
            table: table.forward(),
            log_n: table.log_n(),
            ot_from_stage: u32::MAX,
            coarse: &[],
            fine: &[],
            log_base: 0,
        }
    }

    fn with_ot(
        table: &'a TwiddleTable,
        schedule: &OtSchedule,
        coarse: &'a [ShoupPair],
        fine: &'a [ShoupPair],
    ) -> Self {
        Self {
            table: table.forward(),
            log_n: table.log_n(),
            ot_from_stage: table.log_n() + 1 - schedule.stages_covered(),
            coarse,
            fine,
            log_base: schedule.log_base(),
        }
    }

    #[inline(always)]
    fn uses_ot(&self, stage: u32) -> bool {
        stage >= self.ot_from_stage
    }
}

/// Staging copies of an OT schedule, refreshed at the start of every pass that
/// reads it.
#[derive(Default)]
struct OtStaging {
    coarse: Vec<ShoupPair>,
    fine: Vec<ShoupPair>,
}

impl OtStaging {
    fn load<P: Probe>(&mut self, schedule: &OtSchedule, probe: &mut P) {
        schedule.stage_into(&mut self.coarse, &mut self.fine);
        probe.ot_preload(schedule.entry_count());
    }
}

/// Runs the `width`-point butterflies of one stage for a group that shares
/// table index `idx`: pairs `(k, k + width)` for `k` in `range`.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn stage_group<P: Probe>(
    block: &mut [u64],
    start: usize,
    half: usize,
    stage: u32,
    idx: usize,
    tw: &Twiddles<'_>,
    p: u64,
    probe: &mut P,
) {
    let (lo, hi) = block[start..start + 2 * half].split_at_mut(half);
    if tw.uses_ot(stage) {
        let e = bitrev(idx, tw.log_n);
        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
            let scaled = ot_apply_with(*y, e, tw.coarse, tw.fine, tw.log_base, p);
            (*x, *y) = butterfly_ct_scaled(*x, scaled, p);
        }
    } else {
        probe.twiddle(idx);
        let w = tw.table[idx];
        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
            (*x, *y) = butterfly_ct(*x, *y, w, p);
        }
    }
}

/// Cooley-Tukey stages `first_stage .. first_stage + log2(len)` on a local
/// block whose indices share the global top bits `hi`.
fn ct_block<P: Probe>(
    block: &mut [u64],
    first_stage: u32,
    hi: usize,
    tw: &Twiddles<'_>,
    p: u64,
    probe: &mut P,
) {
    let r = block.len().trailing_zeros();
    for u in 0..r {
        let stage = first_stage + u;
        let half = block.len() >> (u + 1);
        let m = 1usize << (stage - 1);
        for g in 0..1usize << u {
            stage_group(block, g * 2 * half, half, stage, m + (hi << u) + g, tw, p, probe);
        }
    }
}

/// Transforms `block` (stages `first_stage..`) as rounds of `per_thread`-point
/// sub-transforms, the last round taking whatever stages remain. Each round
/// gathers strided points into a register-sized array and scatters them back.
fn rounds_in_staging<P: Probe>(
    block: &mut [u64],
    first_stage: u32,
    hi: usize,
    per_thread: usize,
    tw: &Twiddles<'_>,
    p: u64,
    probe: &mut P,
) {
    let r = block.len().trailing_zeros();
    let lp = per_thread.trailing_zeros();
    let mut regs = [0u64; 8];
    let mut u0 = 0;
    while u0 < r {
        let q = lp.min(r - u0);
        let size = 1usize << q;
        let stride = 1usize << (r - u0 - q);
        for h in 0..1usize << u0 {
            for lo in 0..stride {
                let base = (h << (r - u0)) | lo;
                for (t, reg) in regs[..size].iter_mut().enumerate() {
                    *reg = block[base + t * stride];
                }
                ct_block(&mut regs[..size], first_stage + u0, (hi << u0) | h, tw, p, probe);
                for (t, reg) in regs[..size].iter().enumerate() {
                    block[base + t * stride] = *reg;
                }
            }
        }
        u0 += q;
    }
}

fn check_len(a: &[u64], table: &TwiddleTable) -> Result<()> {
    if a.len() != table.n() {
        return Err(NttError::SizeMismatch {
            expected: table.n(),
            actual: a.len(),
        });
    }
    Ok(())
}

fn radix2_ct<P: Probe>(
    a: &mut [u64],
    table: &TwiddleTable,
    ot: Option<&OtSchedule>,
    probe: &mut P,
) {
    let n = a.len();
    let p = table.p();
    let mut staging = OtStaging::default();
    let mut t = n / 2;
    let mut m = 1;
    let mut stage = 1;
    while m < n {
        let tw = match ot {
            Some(schedule) if stage + schedule.stages_covered() > table.log_n() => {
                staging.load(schedule, probe);
                Twiddles::with_ot(table, schedule, &staging.coarse, &staging.fine)
            }
            _ => Twiddles::table_only(table),
        };
        for j in 0..m {
            probe.data_read(2 * t);
            stage_group(a, j * 2 * t, t, stage, m + j, &tw, p, probe);
            probe.data_write(2 * t);
        }
        probe.end_pass();
        t /= 2;
        m *= 2;
        stage += 1;
    }
    normalize(a, p);
}

fn high_radix<P: Probe>(a: &mut [u64], table: &TwiddleTable, radix: usize, probe: &mut P) {
    let p = table.p();
    let log_n = table.log_n();
    let r = radix.trailing_zeros();
    let tw = Twiddles::table_only(table);
    let mut local = [0u64; MAX_RADIX];
    let mut s0 = 1;
    while s0 <= log_n {
        let q = r.min(log_n - s0 + 1);
        let size = 1usize << q;
        let stride = 1usize << (log_n - s0 + 1 - q);
        for hi in 0..1usize << (s0 - 1) {
            for lo in 0..stride {
                let base = (hi << (log_n - s0 + 1)) | lo;
                for (t, v) in local[..size].iter_mut().enumerate() {
                    *v = a[base + t * stride];
                }
                probe.data_read(size);
                ct_block(&mut local[..size], s0, hi, &tw, p, probe);
                for (t, v) in local[..size].iter().enumerate() {
                    a[base + t * stride] = *v;
                }
                probe.data_write(size);
            }
        }
        probe.end_pass();
        s0 += q;
    }
    normalize(a, p);
}

fn two_pass<P: Probe>(
    a: &mut [u64],
    table: &TwiddleTable,
    n1: usize,
    n2: usize,
    per_thread: usize,
    ot: Option<&OtSchedule>,
    probe: &mut P,
) {
    let p = table.p();
    let l1 = n1.trailing_zeros();
    let mut staging = vec![0u64; n1.max(n2)];

    // Kernel-1: n2 independent n1-point transforms over stride-n2 columns.
    let tw = Twiddles::table_only(table);
    for col in 0..n2 {
        let block = &mut staging[..n1];
        for (t, v) in block.iter_mut().enumerate() {
            *v = a[t * n2 + col];
        }
        probe.data_read(n1);
        rounds_in_staging(block, 1, 0, per_thread, &tw, p, probe);
        for (t, v) in block.iter().enumerate() {
            a[t * n2 + col] = *v;
        }
        probe.data_write(n1);
    }
    probe.end_pass();

    // Kernel-2: n1 contiguous n2-point transforms.
    let mut ot_staging = OtStaging::default();
    let tw = match ot {
        Some(schedule) => {
            ot_staging.load(schedule, probe);
            Twiddles::with_ot(table, schedule, &ot_staging.coarse, &ot_staging.fine)
        }
        None => Twiddles::table_only(table),
    };
    for (row, chunk) in a.chunks_exact_mut(n2).enumerate() {
        let block = &mut staging[..n2];
        block.copy_from_slice(chunk);
        probe.data_read(n2);
        rounds_in_staging(block, l1 + 1, row, per_thread, &tw, p, probe);
        chunk.copy_from_slice(block);
        probe.data_write(n2);
    }
    probe.end_pass();
    normalize(a, p);
}

fn stockham<P: Probe>(a: &mut [u64], scratch: &mut [u64], table: &TwiddleTable, probe: &mut P) {
    let n = a.len();
    let p = table.p();
    let log_n = table.log_n();
    let forward = table.forward();
    let half_n = n / 2;
    let mut in_scratch = false;
    let mut stage_tw = Vec::with_capacity(half_n);
    let mut m = 1;
    for stage in 1..=log_n {
        let (src, dst): (&[u64], &mut [u64]) = if in_scratch {
            (&*scratch, &mut *a)
        } else {
            (&*a, &mut *scratch)
        };
        // Output pair (j, j + m) of every length-2m run uses ψ^{(N/2m)(2j+1)}.
        stage_tw.clear();
        stage_tw.extend((0..m).map(|j| {
            let idx = m + bitrev(j, stage - 1);
            probe.twiddle(idx);
            forward[idx]
        }));
        let (src_lo, src_hi) = src.split_at(half_n);
        for (lo, out) in dst.chunks_exact_mut(2 * m).enumerate() {
            let (out_x, out_y) = out.split_at_mut(m);
            let xs = &src_lo[lo * m..(lo + 1) * m];
            let ys = &src_hi[lo * m..(lo + 1) * m];
            for j in 0..m {
                (out_x[j], out_y[j]) = butterfly_ct(xs[j], ys[j], stage_tw[j], p);
            }
        }
        probe.data_read(n);
        probe.data_write(n);
        probe.end_pass();
        in_scratch = !in_scratch;
        m *= 2;
    }
    if in_scratch {
        a.copy_from_slice(scratch);
        probe.data_read(n);
        probe.data_write(n);
        probe.end_pass();
    }
    normalize(a, p);
}

/// Radix-2 Cooley-Tukey NTT, in place, output in bit-reversed order.
pub fn ntt_radix2_ct(a: &mut [u64], table: &TwiddleTable) -> Result<()> {
    check_len(a, table)?;
    radix2_ct(a, table, None, &mut NoProbe);
    Ok(())
}

/// Radix-2 Cooley-Tukey NTT whose trailing stages take their twiddles from an
/// OT schedule.
pub fn ntt_radix2_ct_ot(a: &mut [u64], table: &TwiddleTable, ot: &OtSchedule) -> Result<()> {
    check_len(a, table)?;
    check_schedule(ot, table, table.log_n())?;
    radix2_ct(a, table, Some(ot), &mut NoProbe);
    Ok(())
}

/// Inverse of [`ntt_radix2_ct`]: bit-reversed input, natural-order output,
/// scaled by `N^{-1}`.
pub fn intt_radix2_gs(a: &mut [u64], table: &TwiddleTable) -> Result<()> {
    check_len(a, table)?;
    let n = a.len();
    let p = table.p();
    let inverse = table.inverse();
    let mut t = 1;
    let mut m = n / 2;
    while m >= 1 {
        for j in 0..m {
            let w = inverse[m + j];
            let (lo, hi) = a[j * 2 * t..(j + 1) * 2 * t].split_at_mut(t);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                (*x, *y) = butterfly_gs(*x, *y, w, p);
            }
        }
        t *= 2;
        m /= 2;
    }
    let n_inv = table.n_inv_pair();
    for v in a.iter_mut() {
        *v = shoup_mulmod(*v, n_inv, p);
    }
    Ok(())
}

/// Out-of-place Stockham NTT; `scratch` must have the same length as `a` and
/// the natural-order result is left in `a`.
pub fn ntt_stockham(a: &mut [u64], scratch: &mut [u64], table: &TwiddleTable) -> Result<()> {
    check_len(a, table)?;
    check_len(scratch, table)?;
    stockham(a, scratch, table, &mut NoProbe);
    Ok(())
}

/// High-radix NTT: each pass moves `radix` points per work item through a
/// local block. Output identical to [`ntt_radix2_ct`].
pub fn ntt_high_radix(a: &mut [u64], table: &TwiddleTable, radix: usize) -> Result<()> {
    check_len(a, table)?;
    TransformConfig::high_radix(radix).validate(a.len())?;
    high_radix(a, table, radix, &mut NoProbe);
    Ok(())
}

/// Two-pass (Kernel-1 / Kernel-2) NTT with optional on-the-fly twiddling.
/// Output identical to [`ntt_radix2_ct`].
pub fn ntt_two_pass(
    a: &mut [u64],
    table: &TwiddleTable,
    n1: usize,
    n2: usize,
    per_thread: usize,
    ot: Option<&OtSchedule>,
) -> Result<()> {
    check_len(a, table)?;
    let mut config = TransformConfig::two_pass(n1, n2, per_thread);
    if let Some(schedule) = ot {
        config = config.with_ot(schedule.base(), schedule.stages_covered());
        check_schedule(schedule, table, n2.trailing_zeros())?;
    }
    config.validate(a.len())?;
    two_pass(a, table, n1, n2, per_thread, ot, &mut NoProbe);
    Ok(())
}

fn check_schedule(schedule: &OtSchedule, table: &TwiddleTable, max_stages: u32) -> Result<()> {
    if schedule.n() != table.n() {
        return Err(NttError::Config(format!(
            "OT schedule built for N = {} used with N = {}",
            schedule.n(),
            table.n()
        )));
    }
    if schedule.stages_covered() > max_stages {
        return Err(NttError::Config(format!(
            "OT cannot cover {} stages here",
            schedule.stages_covered()
        )));
    }
    Ok(())
}

/// Runs the forward transform selected by `config` and reports the order of
/// the result. A matching prebuilt OT schedule is used when supplied;
/// otherwise one is built on demand.
pub fn forward(
    a: &mut [u64],
    table: &TwiddleTable,
    config: &TransformConfig,
    ot: Option<&OtSchedule>,
) -> Result<Order> {
    forward_probed(a, table, config, ot, &mut NoProbe)
}

pub(crate) fn forward_probed<P: Probe>(
    a: &mut [u64],
    table: &TwiddleTable,
    config: &TransformConfig,
    ot: Option<&OtSchedule>,
    probe: &mut P,
) -> Result<Order> {
    check_len(a, table)?;
    config.validate(a.len())?;
    let built;
    let schedule = match config.ot {
        None => None,
        Some(want) => match ot {
            Some(s) if s.base() == want.base && s.stages_covered() == want.stages && s.n() == table.n() => Some(s),
            _ => {
                built = build_ot_schedule(table.prime(), want.base, want.stages)?;
                Some(&built)
            }
        },
    };
    match config.algo {
        Algorithm::Radix2Ct => radix2_ct(a, table, schedule, probe),
        Algorithm::Stockham => {
            let mut scratch = vec![0u64; a.len()];
            stockham(a, &mut scratch, table, probe);
        }
        Algorithm::HighRadix { radix } => high_radix(a, table, radix, probe),
        Algorithm::TwoPass { n1, n2, per_thread } => {
            two_pass(a, table, n1, n2, per_thread, schedule, probe)
        }
    }
    Ok(config.output_order())
}

/// Inverse transform of a buffer produced in `order`.
pub fn inverse(a: &mut [u64], table: &TwiddleTable, order: Order) -> Result<()> {
    check_len(a, table)?;
    if order == Order::Natural {
        bit_reverse_permute(a)?;
    }
    intt_radix2_gs(a, table)
}

/// `out[i] = in[bitrev(i)]`, in place.
pub fn bit_reverse_permute(a: &mut [u64]) -> Result<()> {
    let n = a.len();
    if !n.is_power_of_two() {
        return Err(NttError::Length(format!("length {n} is not a power of two")));
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = bitrev(i, bits);
        if i < j {
            a.swap(i, j);
        }
    }
    Ok(())
}

/// Element-wise product mod `p` (both operands vary, so the native 128-bit
/// path is used).
pub fn pointwise_mul(a: &[u64], b: &[u64], p: u64) -> Result<Vec<u64>> {
    let mut out = a.to_vec();
    pointwise_mul_assign(&mut out, b, p)?;
    Ok(out)
}

pub fn pointwise_mul_assign(a: &mut [u64], b: &[u64], p: u64) -> Result<()> {
    if a.len() != b.len() {
        return Err(NttError::Length(format!(
            "operand lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    for (x, &y) in a.iter_mut().zip(b) {
        *x = mul_mod(*x, y, p);
    }
    Ok(())
}

/// `a·b mod (X^N + 1, p)` through forward transform, pointwise product and
/// inverse transform.
pub fn negacyclic_polymul(
    a: &[u64],
    b: &[u64],
    table: &TwiddleTable,
    config: &TransformConfig,
) -> Result<Vec<u64>> {
    check_len(a, table)?;
    check_len(b, table)?;
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    let order = forward(&mut fa, table, config, None)?;
    forward(&mut fb, table, config, None)?;
    pointwise_mul_assign(&mut fa, &fb, table.p())?;
    inverse(&mut fa, table, order)?;
    Ok(fa)
}

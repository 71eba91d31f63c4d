//! Analytic model of table sizes and main-memory traffic, plus a counting probe
//! that measures the same quantities on a real transform run.
//!
//! Counting convention, per prime and per pass over the data:
//! - every data word is counted once when read and once when written;
//! - every distinct table twiddle the pass uses is counted once, as one word or
//!   two with its Shoup companion, however many butterflies share it;
//! - a pass that applies on-the-fly twiddling loads the whole OT schedule
//!   (`base + n/base` entries) once.
//!
//! Caches and coalescing are not modeled.

use serde::Serialize;

use crate::error::{NttError, Result};
use crate::transform::{forward_probed, Algorithm, OtConfig, Probe, TransformConfig};
use crate::twiddle::{table_bytes, OtSchedule, TwiddleTable};

const WORD_BYTES: u64 = 8;

/// Word counts of one pass over the data (or of a whole run when summed).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WordCounts {
    pub data_read: u64,
    pub data_write: u64,
    /// Distinct table twiddle words, companions included when enabled.
    pub twiddle: u64,
    /// OT schedule words loaded.
    pub ot: u64,
}

impl WordCounts {
    pub fn data(&self) -> u64 {
        self.data_read + self.data_write
    }

    pub fn twiddle_total(&self) -> u64 {
        self.twiddle + self.ot
    }
}

impl std::ops::Add for WordCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            data_read: self.data_read + rhs.data_read,
            data_write: self.data_write + rhs.data_write,
            twiddle: self.twiddle + rhs.twiddle,
            ot: self.ot + rhs.ot,
        }
    }
}

impl std::iter::Sum for WordCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// One pass of a modeled transform, covering radix-2 stages
/// `first_stage .. first_stage + stages` (a copy pass covers none).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PassTraffic {
    pub first_stage: u32,
    pub stages: u32,
    /// Per prime.
    pub words: WordCounts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrafficReport {
    pub config: TransformConfig,
    pub n: usize,
    pub np: usize,
    pub with_companions: bool,
    /// One entry per pass; for radix-2 and Stockham a pass is a single stage.
    pub per_stage: Vec<PassTraffic>,
    pub data_bytes: u64,
    /// Table twiddles plus OT schedule loads.
    pub twiddle_bytes: u64,
    /// Forward and inverse tables (OT-shrunk forward table when OT is on).
    pub table_resident_bytes: u64,
    /// Reduction of `total()` relative to the same config without OT, in percent.
    pub ot_reduction_pct: f64,
}

impl TrafficReport {
    pub fn total(&self) -> u64 {
        self.data_bytes + self.twiddle_bytes
    }

    /// Summed per-prime word counts.
    pub fn words_per_prime(&self) -> WordCounts {
        self.per_stage.iter().map(|p| p.words).sum()
    }
}

fn words_per_entry(with_companions: bool) -> u64 {
    if with_companions {
        2
    } else {
        1
    }
}

fn ot_schedule_entries(n: usize, base: usize) -> u64 {
    (base + n / base) as u64
}

/// Distinct table indices used by stages `first .. first + count`: `[2^{first-1}, 2^{first+count-1})`.
fn distinct_indices(first: u32, count: u32) -> u64 {
    (1u64 << (first + count - 1)) - (1u64 << (first - 1))
}

/// Per-prime passes of `config` at size `n`.
fn passes(n: usize, config: &TransformConfig, with_companions: bool) -> Vec<PassTraffic> {
    let log_n = n.trailing_zeros();
    let w = words_per_entry(with_companions);
    let data = n as u64;
    let ot_from = config.ot.map_or(u32::MAX, |ot| log_n + 1 - ot.stages);
    let ot_words = config.ot.map_or(0, |ot| ot_schedule_entries(n, ot.base) * w);
    let pass = |first_stage: u32, stages: u32, twiddle: u64, ot: u64| PassTraffic {
        first_stage,
        stages,
        words: WordCounts {
            data_read: data,
            data_write: data,
            twiddle,
            ot,
        },
    };
    // Table twiddles for stages [first, first + count), with the OT-covered tail
    // replaced by a schedule load.
    let mixed = |first: u32, count: u32| {
        let last = first + count;
        let table_stages = last.min(ot_from).saturating_sub(first);
        let twiddle = if table_stages > 0 { distinct_indices(first, table_stages) * w } else { 0 };
        let ot = if last > ot_from { ot_words } else { 0 };
        pass(first, count, twiddle, ot)
    };
    match config.algo {
        Algorithm::Radix2Ct => (1..=log_n).map(|s| mixed(s, 1)).collect(),
        Algorithm::Stockham => {
            let mut out: Vec<_> = (1..=log_n).map(|s| mixed(s, 1)).collect();
            if log_n % 2 == 1 {
                out.push(pass(log_n + 1, 0, 0, 0));
            }
            out
        }
        Algorithm::HighRadix { radix } => {
            let r = radix.trailing_zeros();
            let mut out = Vec::new();
            let mut s0 = 1;
            while s0 <= log_n {
                let q = r.min(log_n - s0 + 1);
                out.push(mixed(s0, q));
                s0 += q;
            }
            out
        }
        Algorithm::TwoPass { n1, .. } => {
            let l1 = n1.trailing_zeros();
            vec![mixed(1, l1), mixed(l1 + 1, log_n - l1)]
        }
    }
}

fn report_without_pct(
    n: usize,
    np: usize,
    config: &TransformConfig,
    with_companions: bool,
) -> TrafficReport {
    let per_stage = passes(n, config, with_companions);
    let words: WordCounts = per_stage.iter().map(|p| p.words).sum();
    let scale = np as u64 * WORD_BYTES;
    TrafficReport {
        config: *config,
        n,
        np,
        with_companions,
        per_stage,
        data_bytes: words.data() * scale,
        twiddle_bytes: words.twiddle_total() * scale,
        table_resident_bytes: model_table_resident(n, np, 2, with_companions, config.ot),
        ot_reduction_pct: 0.0,
    }
}

/// Traffic of `config` at size `n` over `np` primes.
pub fn model(
    config: &TransformConfig,
    n: usize,
    np: usize,
    with_companions: bool,
) -> Result<TrafficReport> {
    config.validate(n)?;
    let mut report = report_without_pct(n, np, config, with_companions);
    if config.ot.is_some() {
        let base = report_without_pct(n, np, &TransformConfig::new(config.algo), with_companions);
        if base.total() > 0 {
            report.ot_reduction_pct =
                100.0 * (base.total() as f64 - report.total() as f64) / base.total() as f64;
        }
    }
    Ok(report)
}

pub fn model_radix2(n: usize, np: usize, with_companions: bool) -> Result<TrafficReport> {
    if !n.is_power_of_two() {
        return Err(NttError::Domain(format!("N = {n} is not a power of two")));
    }
    model(&TransformConfig::radix2(), n, np, with_companions)
}

/// Two-pass traffic; the per-thread size does not change the counts, so the
/// report's config uses 8.
pub fn model_two_pass(
    n: usize,
    n1: usize,
    n2: usize,
    np: usize,
    ot: Option<OtConfig>,
    with_companions: bool,
) -> Result<TrafficReport> {
    if n1.checked_mul(n2) != Some(n) {
        return Err(NttError::Config(format!("{n1} x {n2} is not a split of {n}")));
    }
    let mut config = TransformConfig::two_pass(n1, n2, 8);
    config.ot = ot;
    model(&config, n, np, with_companions)
}

/// Resident precomputed-table bytes. With OT the forward table drops the
/// segment of the covered stages (`n − n/2^stages` entries) and holds the
/// schedule (`base + n/base` entries) instead; the inverse table is unchanged.
pub fn model_table_resident(
    n: usize,
    np: usize,
    directions: usize,
    with_companions: bool,
    ot: Option<OtConfig>,
) -> u64 {
    let Some(ot) = ot.filter(|_| directions > 0 && n > 0) else {
        return table_bytes(n, np, directions, with_companions);
    };
    let forward_entries = (n >> ot.stages.min(usize::BITS - 1)) as u64 + ot_schedule_entries(n, ot.base.max(1));
    let entries = forward_entries + (directions as u64 - 1) * n as u64;
    entries * np as u64 * words_per_entry(with_companions) * WORD_BYTES
}

/// Counts from an instrumented transform run, per pass.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Measured {
    pub passes: Vec<WordCounts>,
}

impl Measured {
    pub fn total(&self) -> WordCounts {
        self.passes.iter().copied().sum()
    }
}

struct CountingProbe {
    words_per_entry: u64,
    seen: Vec<bool>,
    touched: Vec<usize>,
    current: WordCounts,
    passes: Vec<WordCounts>,
}

impl Probe for CountingProbe {
    fn data_read(&mut self, words: usize) {
        self.current.data_read += words as u64;
    }

    fn data_write(&mut self, words: usize) {
        self.current.data_write += words as u64;
    }

    fn twiddle(&mut self, index: usize) {
        if !self.seen[index] {
            self.seen[index] = true;
            self.touched.push(index);
            self.current.twiddle += self.words_per_entry;
        }
    }

    fn ot_preload(&mut self, entries: usize) {
        self.current.ot += entries as u64 * self.words_per_entry;
    }

    fn end_pass(&mut self) {
        for i in self.touched.drain(..) {
            self.seen[i] = false;
        }
        self.passes.push(std::mem::take(&mut self.current));
    }
}

/// Runs the forward transform of `config` on `a` and counts the words it
/// touches, for one prime.
pub fn instrument_counters(
    a: &mut [u64],
    table: &TwiddleTable,
    config: &TransformConfig,
    ot: Option<&OtSchedule>,
    with_companions: bool,
) -> Result<Measured> {
    let mut probe = CountingProbe {
        words_per_entry: words_per_entry(with_companions),
        seen: vec![false; table.n()],
        touched: Vec::new(),
        current: WordCounts::default(),
        passes: Vec::new(),
    };
    forward_probed(a, table, config, ot, &mut probe)?;
    Ok(Measured {
        passes: probe.passes,
    })
}

/// One CSV row of a traffic report.
#[derive(Clone, Debug, Serialize)]
pub struct TrafficRow {
    pub config_id: String,
    pub algo: &'static str,
    pub n: usize,
    pub np: usize,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub per_thread: Option<usize>,
    pub ot_base: Option<usize>,
    pub ot_stages: Option<u32>,
    pub data_bytes: u64,
    pub twiddle_bytes: u64,
    pub table_resident_bytes: u64,
    pub total_bytes: u64,
    /// Blank for configs without OT.
    pub ot_reduction_pct: Option<String>,
}

impl From<&TrafficReport> for TrafficRow {
    fn from(r: &TrafficReport) -> Self {
        let (n1, n2, per_thread) = match r.config.algo {
            Algorithm::TwoPass { n1, n2, per_thread } => (Some(n1), Some(n2), Some(per_thread)),
            _ => (None, None, None),
        };
        Self {
            config_id: r.config.to_string(),
            algo: r.config.algo_name(),
            n: r.n,
            np: r.np,
            n1,
            n2,
            per_thread,
            ot_base: r.config.ot.map(|o| o.base),
            ot_stages: r.config.ot.map(|o| o.stages),
            data_bytes: r.data_bytes,
            twiddle_bytes: r.twiddle_bytes,
            table_resident_bytes: r.table_resident_bytes,
            total_bytes: r.total(),
            ot_reduction_pct: r.config.ot.map(|_| format!("{:.4}", r.ot_reduction_pct)),
        }
    }
}

pub fn write_csv<W: std::io::Write>(reports: &[TrafficReport], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for report in reports {
        writer
            .serialize(TrafficRow::from(report))
            .map_err(|e| NttError::Internal(format!("csv: {e}")))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modarith::Prime;
    use crate::twiddle::{build_ot_schedule, build_table};

    #[test]
    fn radix2_per_stage_series() {
        let r = model_radix2(4, 1, false).unwrap();
        let tw: Vec<u64> = r.per_stage.iter().map(|p| p.words.twiddle).collect();
        assert_eq!(tw, vec![1, 2]);

        let n = 1 << 12;
        let r = model_radix2(n, 3, true).unwrap();
        let words = r.words_per_prime();
        assert_eq!(words.twiddle, 2 * (n as u64 - 1));
        assert_eq!(r.per_stage.last().unwrap().words.twiddle, n as u64);
        assert_eq!(r.data_bytes, 12 * 2 * n as u64 * 3 * 8);
        assert_eq!(r.ot_reduction_pct, 0.0);
        assert_eq!(r.total(), r.data_bytes + r.twiddle_bytes);
    }

    #[test]
    fn two_pass_data_is_four_n() {
        let r = model_two_pass(1 << 10, 32, 32, 1, None, true).unwrap();
        assert_eq!(r.words_per_prime().data(), 4 << 10);
        assert_eq!(r.data_bytes, 32 << 10);
        assert!(model_two_pass(1 << 10, 32, 16, 1, None, true).is_err());
    }

    #[test]
    fn two_pass_ot_numbers() {
        let ot = Some(OtConfig { base: 1024, stages: 2 });
        let n = 1 << 17;
        let r = model_two_pass(n, 128, 1024, 21, ot, true).unwrap();
        let words = r.words_per_prime();
        assert_eq!(words.ot, 2 * 1152);
        assert_eq!(words.twiddle, 2 * ((n as u64 >> 2) - 1));
        let off = model_two_pass(n, 128, 1024, 21, None, true).unwrap();
        assert_eq!(off.words_per_prime().twiddle, 2 * (n as u64 - 1));
        let expected = 100.0 * (off.total() - r.total()) as f64 / off.total() as f64;
        assert!((r.ot_reduction_pct - expected).abs() < 1e-12);
    }

    #[test]
    fn table_resident_values() {
        assert_eq!(model_table_resident(1 << 17, 45, 2, true, None), 188_743_680);
        assert_eq!(model_table_resident(1 << 14, 21, 1, true, None), 5_505_024);
        assert_eq!(model_table_resident(1 << 17, 45, 1, true, None), 94_371_840);
        assert_eq!(model_table_resident(1 << 17, 21, 2, true, None), 88_080_384);
        assert_eq!(model_table_resident(1 << 17, 0, 2, true, None), 0);
        let ot = Some(OtConfig { base: 1024, stages: 2 });
        let entries = (1u64 << 15) + 1152 + (1 << 17);
        assert_eq!(model_table_resident(1 << 17, 1, 2, true, ot), entries * 16);
        assert_eq!(model_table_resident(1 << 17, 0, 2, true, ot), 0);
    }

    #[test]
    fn model_matches_counters_small() {
        let n = 256;
        let table = build_table(Prime::new(7681, n).unwrap());
        for token in [
            "radix2",
            "radix2+ot:16:1",
            "radix2+ot:4:2",
            "stockham",
            "highradix:4",
            "highradix:32",
            "twopass:16x16:2",
            "twopass:16x16:4+ot:16:2",
            "twopass:8x32:8+ot:2:1",
        ] {
            let config: TransformConfig = token.parse().unwrap();
            let schedule = config
                .ot
                .map(|o| build_ot_schedule(table.prime(), o.base, o.stages).unwrap());
            let mut a: Vec<u64> = (0..n as u64).collect();
            for companions in [false, true] {
                let measured =
                    instrument_counters(&mut a, &table, &config, schedule.as_ref(), companions)
                        .unwrap();
                let report = model(&config, n, 1, companions).unwrap();
                let modeled: Vec<WordCounts> = report.per_stage.iter().map(|p| p.words).collect();
                assert_eq!(measured.passes, modeled, "{token}");
            }
        }
    }

    #[test]
    fn csv_rows() {
        let on = model_two_pass(1 << 17, 128, 1024, 21, Some(OtConfig { base: 1024, stages: 2 }), true).unwrap();
        let off = model_two_pass(1 << 17, 128, 1024, 21, None, true).unwrap();
        let mut out = Vec::new();
        write_csv(&[off, on], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "config_id,algo,n,np,n1,n2,per_thread,ot_base,ot_stages,data_bytes,twiddle_bytes,table_resident_bytes,total_bytes,ot_reduction_pct"
        );
        assert!(lines[1].ends_with(','));
        assert!(!lines[2].ends_with(','));
    }
}

//! Precomputed twiddle tables and on-the-fly twiddling (OT) schedules.
//!
//! The forward table stores `ψ^{bitrev(i)}` at index `i`, which is exactly the
//! order in which a radix-2 Cooley-Tukey pass visits its twiddles (`Ψ[m + j]`
//! at stage `m`). The inverse table uses the same indexing with `ψ^{-1}`, so
//! `forward[i].w · inverse[i].w ≡ 1` and the Gentleman-Sande pass at stage `m`
//! reads `inverse[m..2m]` sequentially.
//!
//! An OT schedule replaces the table for the last one or two stages with two
//! short tables: every exponent `e < N` is split as `e = q·B + r` and the
//! operand is multiplied by `fine[r]` and then by `coarse[q]`, each with its
//! own Shoup companion.

use std::io::{Read, Write};

use crate::error::{NttError, Result};
use crate::modarith::{mul_mod, pow_mod, shoup_mulmod_lazy, shoup_pair, Prime, ShoupPair};

const TABLE_MAGIC: &[u8; 4] = b"NTTT";
const TABLE_VERSION: u32 = 1;
const TABLE_HEADER_LEN: usize = 32;

/// Bit-reversal of `i` over `bits` bits.
pub fn bit_reverse(i: usize, bits: u32) -> Result<usize> {
    if bits < usize::BITS && i >> bits != 0 {
        return Err(NttError::Domain(format!("index {i} does not fit in {bits} bits")));
    }
    Ok(bitrev(i, bits))
}

#[inline(always)]
pub(crate) fn bitrev(i: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - bits)
    }
}

/// Successive powers `1, x, x², …` (`len` of them).
fn powers(x: u64, len: usize, p: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 1 % p;
    for _ in 0..len {
        out.push(acc);
        acc = mul_mod(acc, x, p);
    }
    out
}

/// Forward and inverse twiddles for one prime, in bit-reversed order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwiddleTable {
    prime: Prime,
    log_n: u32,
    forward: Vec<ShoupPair>,
    inverse: Vec<ShoupPair>,
    n_inv: ShoupPair,
}

impl TwiddleTable {
    pub fn new(prime: Prime) -> Self {
        build_table(prime)
    }

    pub fn prime(&self) -> &Prime {
        &self.prime
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.prime.p()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.forward.len()
    }

    #[inline]
    pub fn log_n(&self) -> u32 {
        self.log_n
    }

    /// `forward[i] = ψ^{bitrev(i)}` with its companion.
    #[inline]
    pub fn forward(&self) -> &[ShoupPair] {
        &self.forward
    }

    /// `inverse[i] = ψ^{-bitrev(i)}` with its companion.
    #[inline]
    pub fn inverse(&self) -> &[ShoupPair] {
        &self.inverse
    }

    #[inline]
    pub fn n_inv_pair(&self) -> ShoupPair {
        self.n_inv
    }

    /// Mutable access to the forward entries, used by `verify` for fault
    /// injection.
    #[doc(hidden)]
    pub fn forward_mut(&mut self) -> &mut [ShoupPair] {
        &mut self.forward
    }

    /// Writes the debug dump: a 32-byte header (`NTTT`, version, N, p, zero
    /// padding) followed by forward `w`, forward `w_bar`, inverse `w` and
    /// inverse `w_bar`, all little-endian 64-bit words.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = [0u8; TABLE_HEADER_LEN];
        header[..4].copy_from_slice(TABLE_MAGIC);
        header[4..8].copy_from_slice(&TABLE_VERSION.to_le_bytes());
        header[8..16].copy_from_slice(&(self.n() as u64).to_le_bytes());
        header[16..24].copy_from_slice(&self.p().to_le_bytes());
        out.write_all(&header)?;
        let sections: [&dyn Fn(&ShoupPair) -> u64; 2] = [&|e| e.w, &|e| e.w_bar];
        for entries in [&self.forward, &self.inverse] {
            for field in &sections {
                let mut buf = Vec::with_capacity(entries.len() * 8);
                for entry in entries.iter() {
                    buf.extend_from_slice(&field(entry).to_le_bytes());
                }
                out.write_all(&buf)?;
            }
        }
        Ok(())
    }

    /// Reads a dump written by [`write_dump`](Self::write_dump) and checks it
    /// against a freshly built table for the same prime.
    pub fn read_dump<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; TABLE_HEADER_LEN];
        input
            .read_exact(&mut header)
            .map_err(|e| NttError::Format(format!("table header: {e}")))?;
        if &header[..4] != TABLE_MAGIC {
            return Err(NttError::Format("bad table magic".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != TABLE_VERSION {
            return Err(NttError::Format(format!("unsupported table version {version}")));
        }
        let n = u64::from_le_bytes(header[8..16].try_into().unwrap());
        let p = u64::from_le_bytes(header[16..24].try_into().unwrap());
        if n == 0 || !n.is_power_of_two() || n > 1 << 24 {
            return Err(NttError::Format(format!("bad table length {n}")));
        }
        let n = n as usize;
        let mut body = vec![0u8; 4 * n * 8];
        input
            .read_exact(&mut body)
            .map_err(|e| NttError::Format(format!("table body: {e}")))?;
        let words: Vec<u64> = body
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let prime = if n >= 2 {
            Prime::with_root(p, n, words[n / 2])
        } else {
            Prime::new(p, n)
        }
        .map_err(|e| NttError::Format(format!("table prime: {e}")))?;
        let table = build_table(prime);
        let pairs = |w: &[u64], w_bar: &[u64]| -> Vec<ShoupPair> {
            w.iter().zip(w_bar).map(|(&w, &w_bar)| ShoupPair { w, w_bar }).collect()
        };
        let forward = pairs(&words[..n], &words[n..2 * n]);
        let inverse = pairs(&words[2 * n..3 * n], &words[3 * n..]);
        if forward != table.forward || inverse != table.inverse {
            return Err(NttError::Format("table entries do not match the prime".into()));
        }
        Ok(table)
    }
}

/// Builds the bit-reversed forward and inverse tables for `prime`.
pub fn build_table(prime: Prime) -> TwiddleTable {
    let n = prime.n();
    let p = prime.p();
    let log_n = n.trailing_zeros();
    let fwd_powers = powers(prime.psi(), n, p);
    let inv_powers = powers(prime.psi_inv(), n, p);
    let forward = (0..n).map(|i| shoup_pair(fwd_powers[bitrev(i, log_n)], p)).collect();
    let inverse = (0..n).map(|i| shoup_pair(inv_powers[bitrev(i, log_n)], p)).collect();
    TwiddleTable {
        prime,
        log_n,
        forward,
        inverse,
        n_inv: shoup_pair(prime.n_inv(), p),
    }
}

/// Coarse/fine factor tables for on-the-fly twiddling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtSchedule {
    base: usize,
    log_base: u32,
    stages_covered: u32,
    coarse: Vec<ShoupPair>,
    fine: Vec<ShoupPair>,
}

impl OtSchedule {
    pub fn base(&self) -> usize {
        self.base
    }

    #[inline]
    pub(crate) fn log_base(&self) -> u32 {
        self.log_base
    }

    /// Number of trailing radix-2 stages whose twiddles come from this schedule.
    pub fn stages_covered(&self) -> u32 {
        self.stages_covered
    }

    /// `coarse[q] = ψ^{qB}`.
    pub fn coarse(&self) -> &[ShoupPair] {
        &self.coarse
    }

    /// `fine[r] = ψ^r`.
    pub fn fine(&self) -> &[ShoupPair] {
        &self.fine
    }

    /// Stored factor count, `B + N/B`.
    pub fn entry_count(&self) -> usize {
        self.coarse.len() + self.fine.len()
    }

    /// Ring degree the schedule was built for.
    pub fn n(&self) -> usize {
        self.coarse.len() * self.base
    }

    /// Copies the factors into a caller-owned staging area; models the
    /// per-pass preload of the schedule into fast memory.
    pub(crate) fn stage_into(&self, coarse: &mut Vec<ShoupPair>, fine: &mut Vec<ShoupPair>) {
        coarse.clear();
        coarse.extend_from_slice(&self.coarse);
        fine.clear();
        fine.extend_from_slice(&self.fine);
    }

    #[doc(hidden)]
    pub fn fine_mut(&mut self) -> &mut [ShoupPair] {
        &mut self.fine
    }
}

/// Default OT base: 1024 at HE scale, otherwise `√N` rounded up to a power of
/// two.
pub fn default_ot_base(n: usize) -> usize {
    if n >= 1 << 11 {
        1024
    } else {
        let log_n = n.max(1).trailing_zeros();
        1 << log_n.div_ceil(2)
    }
}

pub fn build_ot_schedule(prime: &Prime, base: usize, stages_covered: u32) -> Result<OtSchedule> {
    let n = prime.n();
    if base == 0 || !base.is_power_of_two() || base > n {
        return Err(NttError::Domain(format!(
            "OT base {base} must be a power of two dividing N = {n}"
        )));
    }
    if !(1..=2).contains(&stages_covered) {
        return Err(NttError::Domain(format!(
            "OT must cover 1 or 2 stages, got {stages_covered}"
        )));
    }
    let p = prime.p();
    let fine_powers = powers(prime.psi(), base, p);
    let step = pow_mod(prime.psi(), base as u64, p);
    let coarse_powers = powers(step, n / base, p);
    Ok(OtSchedule {
        base,
        log_base: base.trailing_zeros(),
        stages_covered,
        coarse: coarse_powers.into_iter().map(|w| shoup_pair(w, p)).collect(),
        fine: fine_powers.into_iter().map(|w| shoup_pair(w, p)).collect(),
    })
}

/// `x·ψ^e` as `coarse[e / B]·(fine[e % B]·x)`, returned in `[0, 2p)`.
#[inline(always)]
pub fn ot_apply(x: u64, e: usize, schedule: &OtSchedule, p: u64) -> u64 {
    ot_apply_with(x, e, &schedule.coarse, &schedule.fine, schedule.log_base, p)
}

#[inline(always)]
pub(crate) fn ot_apply_with(
    x: u64,
    e: usize,
    coarse: &[ShoupPair],
    fine: &[ShoupPair],
    log_base: u32,
    p: u64,
) -> u64 {
    let partial = shoup_mulmod_lazy(x, fine[e & ((1 << log_base) - 1)], p);
    shoup_mulmod_lazy(partial, coarse[e >> log_base], p)
}

/// Bytes of precomputed twiddles: `n·np·directions` entries, doubled when
/// Shoup companions are stored.
pub fn table_bytes(n: usize, np: usize, directions: usize, with_companions: bool) -> u64 {
    let words_per_entry = if with_companions { 2 } else { 1 };
    n as u64 * np as u64 * directions as u64 * words_per_entry * 8
}

//! 64-bit modular arithmetic for NTT-friendly primes.
//!
//! Everything here works on plain `u64` residues. Multiplication by a fixed
//! factor uses Shoup's precomputed quotient ([`ShoupPair`]), which needs
//! `p < 2^62` so that the lazy domain `[0, 4p)` still fits in a word. The
//! butterflies follow Harvey's lazy-reduction scheme: the forward butterfly
//! keeps values in `[0, 4p)`, the inverse one in `[0, 2p)`.

use crate::error::{NttError, Result};

/// Upper bound on every modulus handled by the Shoup routines (`p < β/4`).
pub const MAX_MODULUS: u64 = 1 << 62;

/// Witnesses that make Miller-Rabin deterministic for every `u64`.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Bound on the quadratic non-residue search used for root generation. The
/// least non-residue of any 64-bit prime is far below this.
const NON_RESIDUE_SEARCH_LIMIT: u64 = 1 << 16;

/// An NTT-friendly prime `p = k·2N + 1` together with the constants the
/// negacyclic transform of length `N` needs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Prime {
    p: u64,
    k: u64,
    n: usize,
    psi: u64,
    psi_inv: u64,
    n_inv: u64,
}

impl Prime {
    /// Validates `p` for ring degree `n` and derives the smallest primitive
    /// `2n`-th root of unity.
    pub fn new(p: u64, n: usize) -> Result<Self> {
        Self::check_modulus(p, n)?;
        let psi = find_primitive_root_2n(p, n)?;
        Self::with_root(p, n, psi)
    }

    /// Builds a prime from an externally supplied root (e.g. a parameter
    /// file). The root must be a primitive `2n`-th root of unity mod `p`.
    pub fn with_root(p: u64, n: usize, psi: u64) -> Result<Self> {
        Self::check_modulus(p, n)?;
        let two_n = 2 * n as u64;
        if psi >= p || pow_mod(psi, two_n, p) != 1 || pow_mod(psi, n as u64, p) != p - 1 {
            return Err(NttError::Domain(format!(
                "{psi} is not a primitive {two_n}-th root of unity mod {p}"
            )));
        }
        Ok(Self {
            p,
            k: (p - 1) / two_n,
            n,
            psi,
            psi_inv: inv_mod(psi, p),
            n_inv: inv_mod(n as u64 % p, p),
        })
    }

    fn check_modulus(p: u64, n: usize) -> Result<()> {
        if n == 0 || !n.is_power_of_two() {
            return Err(NttError::Domain(format!("ring degree {n} is not a power of two")));
        }
        if p >= MAX_MODULUS {
            return Err(NttError::Domain(format!("modulus {p} is not below 2^62")));
        }
        let two_n = 2 * n as u64;
        if p < 3 || !(p - 1).is_multiple_of(two_n) {
            return Err(NttError::Domain(format!("{p} is not congruent to 1 mod {two_n}")));
        }
        if !is_prime(p) {
            return Err(NttError::Domain(format!("{p} is not prime")));
        }
        Ok(())
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    /// Cofactor with `p = k·2N + 1`.
    pub fn k(&self) -> u64 {
        self.k
    }

    /// Ring degree `N`.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Primitive `2N`-th root of unity.
    pub fn psi(&self) -> u64 {
        self.psi
    }

    pub fn psi_inv(&self) -> u64 {
        self.psi_inv
    }

    /// `N^{-1} mod p`.
    pub fn n_inv(&self) -> u64 {
        self.n_inv
    }
}

/// A fixed multiplicand `w < p` with its Shoup companion `⌊w·2^64/p⌋`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ShoupPair {
    pub w: u64,
    pub w_bar: u64,
}

/// Exact `(a·b) mod p` through a 128-bit product.
#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

/// Reference modular multiplication using the native 128-bit remainder.
pub fn mulmod_native(a: u64, b: u64, p: u64) -> Result<u64> {
    if p < 2 {
        return Err(NttError::Domain(format!("modulus {p} is below 2")));
    }
    Ok(mul_mod(a, b, p))
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Inverse modulo a prime (Fermat).
pub fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Deterministic Miller-Rabin for the full `u64` range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &MR_WITNESSES {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Returns `count` distinct primes `p ≡ 1 (mod 2n)` in `[2^bit_lo, 2^bit_hi)`,
/// scanning downward from the top of the range, largest first.
pub fn find_ntt_primes(n: usize, count: usize, bit_lo: u32, bit_hi: u32) -> Result<Vec<Prime>> {
    if !n.is_power_of_two() || !(2..=1 << 17).contains(&n) {
        return Err(NttError::Domain(format!("ring degree {n} must be a power of two in [2, 2^17]")));
    }
    if count == 0 {
        return Err(NttError::Domain("prime count must be positive".into()));
    }
    if bit_lo == 0 || bit_lo >= bit_hi || bit_hi > 62 {
        return Err(NttError::Domain(format!(
            "bit range [{bit_lo}, {bit_hi}) must satisfy 1 <= lo < hi <= 62"
        )));
    }
    let step = 2 * n as u64;
    let lo = 1u64 << bit_lo;
    let hi = 1u64 << bit_hi;
    let mut primes = Vec::with_capacity(count);
    if step < hi {
        let mut candidate = hi - step + 1;
        while candidate >= lo && primes.len() < count {
            if is_prime(candidate) {
                primes.push(Prime::new(candidate, n)?);
            }
            match candidate.checked_sub(step) {
                Some(next) => candidate = next,
                None => break,
            }
        }
    }
    if primes.len() < count {
        return Err(NttError::RangeExhausted {
            n,
            requested: count,
            found: primes.len(),
            bit_lo,
            bit_hi,
        });
    }
    Ok(primes)
}

/// Smallest `ψ ≥ 2` with `ψ^(2n) ≡ 1` and `ψ^n ≡ −1 (mod p)`.
///
/// The primitive `2n`-th roots are exactly the odd powers of `g = x^((p−1)/2n)`
/// for any quadratic non-residue `x`, so the minimum is taken over those `n`
/// candidates instead of scanning the whole field.
pub fn find_primitive_root_2n(p: u64, n: usize) -> Result<u64> {
    if n == 0 || !n.is_power_of_two() {
        return Err(NttError::Domain(format!("ring degree {n} is not a power of two")));
    }
    let two_n = 2 * n as u64;
    if p < 3 || !(p - 1).is_multiple_of(two_n) {
        return Err(NttError::Domain(format!("{p} is not congruent to 1 mod {two_n}")));
    }
    let minus_one = p - 1;
    let non_residue = (2..p.min(NON_RESIDUE_SEARCH_LIMIT))
        .find(|&x| pow_mod(x, (p - 1) / 2, p) == minus_one)
        .ok_or_else(|| NttError::Internal(format!("no quadratic non-residue found mod {p}; is it prime?")))?;

    let g = pow_mod(non_residue, (p - 1) / two_n, p);
    let g_sq = mul_mod(g, g, p);
    let mut current = g;
    let mut best = u64::MAX;
    for _ in 0..n {
        best = best.min(current);
        current = mul_mod(current, g_sq, p);
    }
    if best < 2 || pow_mod(best, two_n, p) != 1 || pow_mod(best, n as u64, p) != minus_one {
        return Err(NttError::Internal(format!("root search failed for {p}; is it prime?")));
    }
    Ok(best)
}

/// Pairs `w` with its Shoup companion `⌊w·2^64/p⌋`.
pub fn shoup_precompute(w: u64, p: u64) -> Result<ShoupPair> {
    if w >= p {
        return Err(NttError::Domain(format!("{w} is not reduced mod {p}")));
    }
    Ok(shoup_pair(w, p))
}

#[inline]
pub(crate) fn shoup_pair(w: u64, p: u64) -> ShoupPair {
    debug_assert!(w < p);
    ShoupPair {
        w,
        w_bar: (((w as u128) << 64) / p as u128) as u64,
    }
}

/// `b·w mod p` left in `[0, 2p)`.
#[inline(always)]
pub fn shoup_mulmod_lazy(b: u64, pair: ShoupPair, p: u64) -> u64 {
    debug_assert!(p < MAX_MODULUS && b < 4 * p);
    let q = ((b as u128 * pair.w_bar as u128) >> 64) as u64;
    b.wrapping_mul(pair.w).wrapping_sub(q.wrapping_mul(p))
}

/// `b·w mod p` fully reduced, for `b < 4p`.
#[inline(always)]
pub fn shoup_mulmod(b: u64, pair: ShoupPair, p: u64) -> u64 {
    let r = shoup_mulmod_lazy(b, pair, p);
    if r >= p {
        r - p
    } else {
        r
    }
}

/// Harvey's forward (Cooley-Tukey) butterfly: `(A + BΨ, A − BΨ)`, inputs and
/// outputs in `[0, 4p)`.
#[inline(always)]
pub fn butterfly_ct(a: u64, b: u64, psi: ShoupPair, p: u64) -> (u64, u64) {
    butterfly_ct_scaled(a, shoup_mulmod_lazy(b, psi, p), p)
}

/// Forward butterfly on an already multiplied `B̄ = B·Ψ < 2p`.
#[inline(always)]
pub(crate) fn butterfly_ct_scaled(a: u64, b_scaled: u64, p: u64) -> (u64, u64) {
    let two_p = p << 1;
    debug_assert!(a < 2 * two_p && b_scaled < two_p);
    let a = if a >= two_p { a - two_p } else { a };
    (a + b_scaled, a + two_p - b_scaled)
}

/// Gentleman-Sande butterfly: `(A + B, (A − B)Ψ^{-1})`, inputs and outputs in
/// `[0, 2p)`.
#[inline(always)]
pub fn butterfly_gs(a: u64, b: u64, psi_inv: ShoupPair, p: u64) -> (u64, u64) {
    let two_p = p << 1;
    debug_assert!(a < two_p && b < two_p);
    let sum = a + b;
    let sum = if sum >= two_p { sum - two_p } else { sum };
    (sum, shoup_mulmod_lazy(a + two_p - b, psi_inv, p))
}

/// Brings lazy values from `[0, 4p)` back to `[0, p)`.
pub fn normalize(values: &mut [u64], p: u64) {
    let two_p = p << 1;
    for v in values.iter_mut() {
        debug_assert!(*v < 2 * two_p);
        if *v >= two_p {
            *v -= two_p;
        }
        if *v >= p {
            *v -= p;
        }
    }
}

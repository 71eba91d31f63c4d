//! Residue number system representation of polynomials in `Z_Q[X]/(X^N + 1)`.
//!
//! `Q` is the product of a chain of NTT-friendly primes. Big-integer
//! arithmetic only appears at the boundary (`to_rns` / `from_rns` and the
//! chain's CRT constants); everything in between works row by row on 64-bit
//! residues, one row per prime.

use std::io::{Read, Write};
use std::thread;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{NttError, Result};
use crate::modarith::{find_ntt_primes, inv_mod, Prime};
use crate::transform::{self, Order, TransformConfig};
use crate::twiddle::{build_ot_schedule, build_table, OtSchedule, TwiddleTable};

const POLY_MAGIC: &[u8; 4] = b"NTTP";
const POLY_VERSION: u32 = 1;
const POLY_HEADER_LEN: usize = 32;

/// Default bit range of generated primes.
pub const DEFAULT_PRIME_BITS: (u32, u32) = (59, 60);

/// Primes sharing one ring degree, their product `Q`, and the per-prime tables.
#[derive(Clone, Debug)]
pub struct ModulusChain {
    n: usize,
    primes: Vec<Prime>,
    q: BigUint,
    tables: Vec<TwiddleTable>,
    ot_schedules: Option<Vec<OtSchedule>>,
    /// `(Q/p_i, (Q/p_i)^{-1} mod p_i)` for CRT reconstruction.
    crt: Vec<(BigUint, u64)>,
}

impl ModulusChain {
    pub fn new(primes: Vec<Prime>) -> Result<Self> {
        let n = primes
            .first()
            .map(Prime::n)
            .ok_or_else(|| NttError::Domain("modulus chain needs at least one prime".into()))?;
        for (i, prime) in primes.iter().enumerate() {
            if prime.n() != n {
                return Err(NttError::Domain(format!(
                    "prime {} is set up for N = {}, chain uses N = {n}",
                    prime.p(),
                    prime.n()
                )));
            }
            if primes[..i].iter().any(|other| other.p() == prime.p()) {
                return Err(NttError::Domain(format!("prime {} appears twice", prime.p())));
            }
        }
        let q: BigUint = primes.iter().map(|prime| BigUint::from(prime.p())).product();
        let crt = primes
            .iter()
            .map(|prime| {
                let p = prime.p();
                let cofactor = &q / p;
                let residue = (&cofactor % p).to_u64().expect("residue fits in u64");
                (cofactor, inv_mod(residue, p))
            })
            .collect();
        let tables = primes.iter().copied().map(build_table).collect();
        Ok(Self {
            n,
            primes,
            q,
            tables,
            ot_schedules: None,
            crt,
        })
    }

    /// `np` primes in `[2^59, 2^60)` for ring degree `n`.
    pub fn generate(n: usize, np: usize) -> Result<Self> {
        let (lo, hi) = DEFAULT_PRIME_BITS;
        Self::new(find_ntt_primes(n, np, lo, hi)?)
    }

    /// Attaches one OT schedule per prime.
    pub fn with_ot(mut self, base: usize, stages: u32) -> Result<Self> {
        let schedules = self
            .primes
            .iter()
            .map(|prime| build_ot_schedule(prime, base, stages))
            .collect::<Result<Vec<_>>>()?;
        self.ot_schedules = Some(schedules);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn np(&self) -> usize {
        self.primes.len()
    }

    pub fn primes(&self) -> &[Prime] {
        &self.primes
    }

    /// `Q = Π p_i`.
    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn tables(&self) -> &[TwiddleTable] {
        &self.tables
    }

    pub fn ot_schedules(&self) -> Option<&[OtSchedule]> {
        self.ot_schedules.as_deref()
    }

    #[doc(hidden)]
    pub fn tables_mut(&mut self) -> &mut [TwiddleTable] {
        &mut self.tables
    }

    fn schedule_for(&self, row: usize) -> Option<&OtSchedule> {
        self.ot_schedules.as_ref().map(|s| &s[row])
    }
}

/// Whether a polynomial holds coefficients or NTT-domain values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Coefficient,
    Ntt(Order),
}

/// An `np × N` residue matrix, row `i` reduced modulo `p_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RnsPolynomial {
    n: usize,
    np: usize,
    residues: Vec<u64>,
    domain: Domain,
}

impl RnsPolynomial {
    pub fn zero(chain: &ModulusChain) -> Self {
        Self {
            n: chain.n(),
            np: chain.np(),
            residues: vec![0; chain.n() * chain.np()],
            domain: Domain::Coefficient,
        }
    }

    /// Builds a polynomial from explicit rows, checking them against `chain`.
    pub fn from_rows(rows: Vec<Vec<u64>>, domain: Domain, chain: &ModulusChain) -> Result<Self> {
        let n = chain.n();
        let np = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(NttError::ChainMismatch(format!("every row must have {n} entries")));
        }
        let poly = Self {
            n,
            np,
            residues: rows.concat(),
            domain,
        };
        poly.check_chain(chain)?;
        Ok(poly)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.residues[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u64> {
        self.residues.chunks_exact(self.n.max(1))
    }

    /// Row-major residues.
    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    /// Confirms shape and residue ranges against `chain`.
    pub fn check_chain(&self, chain: &ModulusChain) -> Result<()> {
        if self.n != chain.n() || self.np != chain.np() {
            return Err(NttError::ChainMismatch(format!(
                "polynomial is {} x {}, chain is {} x {}",
                self.np,
                self.n,
                chain.np(),
                chain.n()
            )));
        }
        for (i, (row, prime)) in self.rows().zip(chain.primes()).enumerate() {
            if let Some(j) = row.iter().position(|&r| r >= prime.p()) {
                return Err(NttError::ChainMismatch(format!(
                    "residue [{i}][{j}] = {} is not reduced mod {}",
                    row[j],
                    prime.p()
                )));
            }
        }
        Ok(())
    }

    /// Serializes in the `NTTP` format: a 32-byte header (magic, version u32,
    /// N u64, np u64, domain byte, order byte, 6 reserved bytes) and then
    /// `np·N` little-endian words, row-major.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let (domain, order) = match self.domain {
            Domain::Coefficient => (0u8, 0u8),
            Domain::Ntt(Order::Natural) => (1, 0),
            Domain::Ntt(Order::BitReversed) => (1, 1),
        };
        let mut header = [0u8; POLY_HEADER_LEN];
        header[..4].copy_from_slice(POLY_MAGIC);
        header[4..8].copy_from_slice(&POLY_VERSION.to_le_bytes());
        header[8..16].copy_from_slice(&(self.n as u64).to_le_bytes());
        header[16..24].copy_from_slice(&(self.np as u64).to_le_bytes());
        header[24] = domain;
        header[25] = order;
        out.write_all(&header)?;
        let mut body = Vec::with_capacity(self.residues.len() * 8);
        for word in &self.residues {
            body.extend_from_slice(&word.to_le_bytes());
        }
        out.write_all(&body)?;
        Ok(())
    }

    /// Parses an `NTTP` stream. Residue ranges are not checked here; use
    /// [`check_chain`](Self::check_chain).
    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; POLY_HEADER_LEN];
        input
            .read_exact(&mut header)
            .map_err(|e| NttError::Format(format!("polynomial header: {e}")))?;
        if &header[..4] != POLY_MAGIC {
            return Err(NttError::Format("bad polynomial magic".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != POLY_VERSION {
            return Err(NttError::Format(format!("unsupported polynomial version {version}")));
        }
        let n = u64::from_le_bytes(header[8..16].try_into().unwrap());
        let np = u64::from_le_bytes(header[16..24].try_into().unwrap());
        if n == 0 || !n.is_power_of_two() || n > 1 << 24 || np == 0 || np > 1 << 10 {
            return Err(NttError::Format(format!("implausible dimensions {np} x {n}")));
        }
        let domain = match (header[24], header[25]) {
            (0, 0) => Domain::Coefficient,
            (1, 0) => Domain::Ntt(Order::Natural),
            (1, 1) => Domain::Ntt(Order::BitReversed),
            (d, o) => return Err(NttError::Format(format!("bad domain/order flags {d}/{o}"))),
        };
        if header[26..].iter().any(|&b| b != 0) {
            return Err(NttError::Format("reserved header bytes are not zero".into()));
        }
        let (n, np) = (n as usize, np as usize);
        let mut body = vec![0u8; n * np * 8];
        input
            .read_exact(&mut body)
            .map_err(|e| NttError::Format(format!("polynomial body: {e}")))?;
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(NttError::Format("trailing bytes after polynomial body".into()));
        }
        let residues = body
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            n,
            np,
            residues,
            domain,
        })
    }
}

/// Reduces each big-integer coefficient modulo every prime of the chain.
pub fn to_rns(coeffs: &[BigUint], chain: &ModulusChain) -> Result<RnsPolynomial> {
    if coeffs.len() != chain.n() {
        return Err(NttError::SizeMismatch {
            expected: chain.n(),
            actual: coeffs.len(),
        });
    }
    if let Some(j) = coeffs.iter().position(|c| c >= chain.q()) {
        return Err(NttError::Domain(format!("coefficient {j} is not below Q")));
    }
    let mut poly = RnsPolynomial::zero(chain);
    for (row, prime) in poly.residues.chunks_exact_mut(chain.n()).zip(chain.primes()) {
        let p = prime.p();
        for (r, c) in row.iter_mut().zip(coeffs) {
            *r = (c % p).to_u64().expect("residue fits in u64");
        }
    }
    Ok(poly)
}

/// CRT reconstruction: `Σ r_i·(Q/p_i)·((Q/p_i)^{-1} mod p_i) mod Q`.
pub fn from_rns(poly: &RnsPolynomial, chain: &ModulusChain) -> Result<Vec<BigUint>> {
    if poly.domain != Domain::Coefficient {
        return Err(NttError::Domain("CRT needs a coefficient-domain polynomial".into()));
    }
    poly.check_chain(chain)?;
    let out = (0..poly.n)
        .map(|j| {
            let mut acc = BigUint::zero();
            for (i, (prime, (cofactor, inv))) in chain.primes().iter().zip(&chain.crt).enumerate() {
                let r = poly.residues[i * poly.n + j];
                let scaled = crate::modarith::mul_mod(r, *inv, prime.p());
                acc += cofactor * scaled;
            }
            acc % chain.q()
        })
        .collect();
    Ok(out)
}

/// Applies `job` to every (row, row index) pair using up to `workers` threads.
/// Rows are split into contiguous groups, so the result does not depend on the
/// worker count.
fn for_each_row<F>(poly: &mut RnsPolynomial, workers: usize, job: F) -> Result<()>
where
    F: Fn(usize, &mut [u64]) -> Result<()> + Sync,
{
    let n = poly.n;
    let rows: Vec<(usize, &mut [u64])> = poly.residues.chunks_exact_mut(n).enumerate().collect();
    let workers = workers.clamp(1, rows.len().max(1));
    if workers == 1 {
        return rows.into_iter().try_for_each(|(i, row)| job(i, row));
    }
    let per_worker = rows.len().div_ceil(workers);
    let mut groups: Vec<Vec<(usize, &mut [u64])>> = Vec::new();
    let mut rows = rows.into_iter().peekable();
    while rows.peek().is_some() {
        groups.push(rows.by_ref().take(per_worker).collect());
    }
    let job = &job;
    thread::scope(|scope| {
        let handles: Vec<_> = groups
            .into_iter()
            .map(|group| scope.spawn(move || group.into_iter().try_for_each(|(i, row)| job(i, row))))
            .collect();
        handles
            .into_iter()
            .try_for_each(|h| h.join().expect("transform worker panicked"))
    })
}

/// Forward transform of every row with its prime's table.
pub fn batch_ntt_forward_in_place(
    poly: &mut RnsPolynomial,
    chain: &ModulusChain,
    config: &TransformConfig,
    workers: usize,
) -> Result<()> {
    if poly.domain != Domain::Coefficient {
        return Err(NttError::Domain("forward transform needs coefficient domain".into()));
    }
    poly.check_chain(chain)?;
    config.validate(chain.n())?;
    for_each_row(poly, workers, |i, row| {
        transform::forward(row, &chain.tables[i], config, chain.schedule_for(i)).map(|_| ())
    })?;
    poly.domain = Domain::Ntt(config.output_order());
    Ok(())
}

pub fn batch_ntt_inverse_in_place(
    poly: &mut RnsPolynomial,
    chain: &ModulusChain,
    workers: usize,
) -> Result<()> {
    let order = match poly.domain {
        Domain::Ntt(order) => order,
        Domain::Coefficient => {
            return Err(NttError::Domain("inverse transform needs NTT domain".into()))
        }
    };
    poly.check_chain(chain)?;
    for_each_row(poly, workers, |i, row| transform::inverse(row, &chain.tables[i], order))?;
    poly.domain = Domain::Coefficient;
    Ok(())
}

pub fn batch_ntt_forward(
    poly: &RnsPolynomial,
    chain: &ModulusChain,
    config: &TransformConfig,
    workers: usize,
) -> Result<RnsPolynomial> {
    let mut out = poly.clone();
    batch_ntt_forward_in_place(&mut out, chain, config, workers)?;
    Ok(out)
}

/// Inverse of [`batch_ntt_forward`]; the row order is taken from the domain
/// flag, so `config` only needs to be the one used going forward.
pub fn batch_ntt_inverse(
    poly: &RnsPolynomial,
    chain: &ModulusChain,
    config: &TransformConfig,
    workers: usize,
) -> Result<RnsPolynomial> {
    if let Domain::Ntt(order) = poly.domain {
        if order != config.output_order() {
            return Err(NttError::Config(format!(
                "polynomial is in {order:?} order but {config} produces {:?}",
                config.output_order()
            )));
        }
    }
    let mut out = poly.clone();
    batch_ntt_inverse_in_place(&mut out, chain, workers)?;
    Ok(out)
}

/// `a·b` in `Z_Q[X]/(X^N + 1)`, computed independently in each residue ring.
pub fn rns_polymul(
    a: &RnsPolynomial,
    b: &RnsPolynomial,
    chain: &ModulusChain,
    config: &TransformConfig,
    workers: usize,
) -> Result<RnsPolynomial> {
    for poly in [a, b] {
        if poly.domain != Domain::Coefficient {
            return Err(NttError::Domain("polymul needs coefficient-domain inputs".into()));
        }
        poly.check_chain(chain)?;
    }
    let mut fa = batch_ntt_forward(a, chain, config, workers)?;
    let fb = batch_ntt_forward(b, chain, config, workers)?;
    for ((row, other), prime) in fa
        .residues
        .chunks_exact_mut(chain.n())
        .zip(fb.rows())
        .zip(chain.primes())
    {
        transform::pointwise_mul_assign(row, other, prime.p())?;
    }
    batch_ntt_inverse_in_place(&mut fa, chain, workers)?;
    Ok(fa)
}

/// JSON parameter file: ring degree, primes and their roots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamFile {
    pub n: usize,
    pub primes: Vec<u64>,
    pub psi: Vec<u64>,
}

impl ParamFile {
    pub fn from_chain(chain: &ModulusChain) -> Self {
        Self {
            n: chain.n(),
            primes: chain.primes().iter().map(Prime::p).collect(),
            psi: chain.primes().iter().map(Prime::psi).collect(),
        }
    }

    pub fn to_chain(&self) -> Result<ModulusChain> {
        if self.primes.len() != self.psi.len() {
            return Err(NttError::Format("primes and psi have different lengths".into()));
        }
        let primes = self
            .primes
            .iter()
            .zip(&self.psi)
            .map(|(&p, &psi)| Prime::with_root(p, self.n, psi))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| NttError::Format(format!("parameter file: {e}")))?;
        ModulusChain::new(primes).map_err(|e| NttError::Format(format!("parameter file: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("parameter file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| NttError::Format(format!("parameter file: {e}")))
    }
}

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{NttError, Result};
use crate::rns::{batch_ntt_forward, Domain, ModulusChain, RnsPolynomial};
use crate::transform::TransformConfig;

#[derive(Clone, Debug, Serialize)]
pub(crate) struct BenchRecord {
    pub config_id: String,
    pub algo: &'static str,
    pub n: usize,
    pub np: usize,
    pub repetitions: usize,
    pub wall_nanoseconds_total: u128,
    pub nanoseconds_per_transform: f64,
    /// First 8 bytes of SHA-256 over the output residues, hex.
    pub checksum: String,
    pub seed: u64,
}

pub(crate) fn seeded_input(chain: &ModulusChain, seed: u64) -> Result<RnsPolynomial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = chain
        .primes()
        .iter()
        .map(|prime| (0..chain.n()).map(|_| rng.random_range(0..prime.p())).collect())
        .collect();
    RnsPolynomial::from_rows(rows, Domain::Coefficient, chain)
}

fn checksum(poly: &RnsPolynomial) -> String {
    let mut hasher = Sha256::new();
    for word in poly.residues() {
        hasher.update(word.to_le_bytes());
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn run(
    chain: &ModulusChain,
    configs: &[TransformConfig],
    reps: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<BenchRecord>> {
    let input = seeded_input(chain, seed)?;
    let mut records = Vec::with_capacity(configs.len());
    for config in configs {
        let chain = match config.ot {
            Some(ot) => chain.clone().with_ot(ot.base, ot.stages)?,
            None => chain.clone(),
        };
        let mut sum = None;
        let mut total = 0u128;
        for _ in 0..reps {
            let start = Instant::now();
            let out = batch_ntt_forward(&input, &chain, config, workers)?;
            total += start.elapsed().as_nanos();
            let this = checksum(&out);
            match &sum {
                None => sum = Some(this),
                Some(prev) if *prev != this => {
                    return Err(NttError::Internal(format!(
                        "{config}: output changed between repetitions"
                    )))
                }
                Some(_) => {}
            }
        }
        records.push(BenchRecord {
            config_id: config.to_string(),
            algo: config.algo_name(),
            n: chain.n(),
            np: chain.np(),
            repetitions: reps,
            wall_nanoseconds_total: total,
            nanoseconds_per_transform: total as f64 / (reps * chain.np()) as f64,
            checksum: sum.unwrap_or_default(),
            seed,
        });
    }
    Ok(records)
}

pub(crate) fn write_csv(records: &[BenchRecord], out: &mut dyn Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for record in records {
        writer
            .serialize(record)
            .map_err(|e| NttError::Internal(format!("csv: {e}")))?;
    }
    writer.flush()?;
    Ok(())
}

//! Seeded random streams.
//!
//! Every chain owns one ChaCha8 key derived from the user seed. Each parameter
//! block of a chain draws from its own stream of that key, so turning a block
//! off never shifts the draws of another block. Stream ids are
//! `chain * BLOCKS + block`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Block {
    Beta = 0,
    Kappa = 1,
    Sigma2 = 2,
    G = 3,
    Indicator = 4,
    Data = 5,
}

const BLOCKS: u64 = 8;

pub fn stream(seed: u64, chain: u64, block: Block) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain * BLOCKS + block as u64);
    rng
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

/// Derives one independent stream per path from a seed and a domain tag.
#[derive(Clone, Debug)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl StreamFactory {
    pub fn new(seed: u64, domain: u64) -> Self {
        let mut s = seed ^ domain.rotate_left(32);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix(&mut s).to_le_bytes());
        }
        Self {
            base: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn path(&self, index: u64) -> PathRng {
        let mut r = self.base.clone();
        r.set_stream(index);
        r
    }
}

/// Domain tags keep estimators that share a seed on unrelated streams.
pub(crate) mod domain {
    pub const ONE_DIM: u64 = 1;
    pub const TWO_DIM: u64 = 2;
    pub const CONSTANT: u64 = 3;
    pub const CONSTANT_LATTICE: u64 = 4;
    pub const LEVY: u64 = 5;
}

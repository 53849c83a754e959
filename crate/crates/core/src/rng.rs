//! Seeded random streams. Replica `i` of a run with master seed `s` always
//! draws from stream `i` of the ChaCha8 generator keyed by `s`, so results do
//! not depend on how replicas are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[inline]
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Position of a stream, enough to resume it exactly.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StreamPosition {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl StreamPosition {
    pub fn of(rng: &Stream) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> Stream {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_differ_and_restore() {
        let mut a = stream(7, 0);
        let mut b = stream(7, 1);
        assert_ne!(a.next_u64(), b.next_u64());
        let pos = StreamPosition::of(&a);
        let x = a.next_u64();
        let mut c = pos.restore();
        assert_eq!(c.next_u64(), x);
    }
}

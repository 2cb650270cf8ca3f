//! Reproducible random streams.
//!
//! Every random draw in the crate comes from a [`Stream`] identified by
//! `(master seed, replication, stream id)`. Neuron `i` of replication `r`
//! always reads stream id `i`, so the same driving noise can be replayed for
//! the finite network and for its mean-field limit. A few ids at the top of
//! the `u64` range are reserved for non-neuron consumers.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1};

/// Stream used by the global-clock network simulator.
pub const NETWORK_STREAM: u64 = u64::MAX;
/// Stream used to draw i.i.d. positions.
pub const ENVIRONMENT_STREAM: u64 = u64::MAX - 1;
/// Stream used by Monte-Carlo oracles and auxiliary samplers.
pub const AUX_STREAM: u64 = u64::MAX - 2;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Master seed plus the replication index; the key from which all streams of
/// one replication are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedKey {
    pub master: u64,
    pub replication: u64,
}

impl SeedKey {
    pub fn new(master: u64, replication: u64) -> Self {
        Self {
            master,
            replication,
        }
    }

    fn key_bytes(&self) -> [u8; 32] {
        let mut rep = self.replication;
        let mut state = (self.master ^ 0x6a09_e667_f3bc_c908).wrapping_add(splitmix64(&mut rep));
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        bytes
    }

    pub fn stream(&self, id: u64) -> Stream {
        let mut rng = ChaCha12Rng::from_seed(self.key_bytes());
        rng.set_stream(id);
        Stream { rng }
    }

    /// Disjoint segment `segment` of stream `id`. Segments are `2^48` words
    /// apart, far more than any single consumer reads.
    pub fn segment(&self, id: u64, segment: u64) -> Stream {
        let mut s = self.stream(id);
        s.rng.set_word_pos((segment as u128) << SEGMENT_SHIFT);
        s
    }
}

const SEGMENT_SHIFT: u32 = 48;

/// One independent source of uniforms and unit exponentials.
#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha12Rng,
}

impl Stream {
    pub fn new(master: u64, replication: u64, id: u64) -> Self {
        SeedKey::new(master, replication).stream(id)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Unit-rate exponential.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }

    /// Exponential waiting time with the given rate (`inf` for rate 0).
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        if rate > 0.0 {
            self.exp1() / rate
        } else {
            f64::INFINITY
        }
    }

    pub fn rng(&mut self) -> &mut impl RngCore {
        &mut self.rng
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

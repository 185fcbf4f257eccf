//! Hierarchical seeding.
//!
//! `frame_seed = mix(master, frame_index)`, then one stream per purpose:
//! `stream_seed(frame_seed, Stream::X)`. Frames never share a generator, so
//! results do not depend on which worker ran which frame. The same frame
//! index draws the same channel, noise and bits at every SNR and for every
//! scheme.

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b.rotate_left(32) ^ 0x6a09_e667_f3bc_c909)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Channel = 1,
    Noise = 2,
    Bits = 3,
    Interleaver = 4,
}

pub fn frame_seed(master: u64, frame_index: u64) -> u64 {
    mix(master, frame_index)
}

pub fn stream_seed(frame_seed: u64, stream: Stream) -> u64 {
    mix(frame_seed, stream as u64)
}

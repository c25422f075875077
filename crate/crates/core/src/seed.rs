//! Seed derivation so every stochastic component hangs off one experiment seed.

/// Mixes `stream` into `seed` with the SplitMix64 finalizer.
pub fn derive(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Named streams used across the workspace.
pub mod stream {
    pub const SERVICE: u64 = 1;
    pub const AGENT: u64 = 2;
    pub const ADVISOR: u64 = 3;
    pub const SESSION: u64 = 4;
}

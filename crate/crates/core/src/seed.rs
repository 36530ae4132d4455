//! Stable seed derivation.
//!
//! Every random stream in the crate is keyed by a master seed plus a path of
//! labels (system name, purpose, member index, ...). The mixing is fixed
//! (FNV-1a over the labels followed by a SplitMix64 finalizer) so derived
//! seeds never change between platforms, toolchains or execution orders.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One component of a seed-derivation path.
#[derive(Debug, Clone, Copy)]
pub enum Label<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for Label<'a> {
    fn from(s: &'a str) -> Self {
        Label::Str(s)
    }
}

impl From<u64> for Label<'_> {
    fn from(v: u64) -> Self {
        Label::Int(v)
    }
}

impl From<usize> for Label<'_> {
    fn from(v: usize) -> Self {
        Label::Int(v as u64)
    }
}

/// Derives a child seed from `master` and an ordered label path.
pub fn derive(master: u64, labels: &[Label<'_>]) -> u64 {
    let mut h = FNV_OFFSET ^ splitmix64(master);
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    for label in labels {
        match label {
            // tag bytes keep ("ab", "c") distinct from ("a", "bc")
            Label::Str(s) => {
                eat(&[0x01]);
                eat(&(s.len() as u64).to_le_bytes());
                eat(s.as_bytes());
            }
            Label::Int(v) => {
                eat(&[0x02]);
                eat(&v.to_le_bytes());
            }
        }
    }
    splitmix64(h)
}

/// Seeded generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[macro_export]
#[doc(hidden)]
macro_rules! derive_seed {
    ($master:expr $(, $label:expr)* $(,)?) => {
        $crate::seed::derive($master, &[$($crate::seed::Label::from($label)),*])
    };
}

use crate::architectures::Architecture;
use crate::series::SplitSpec;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Seed of one grid cell, independent of every other cell.
///
/// FNV-1a (64-bit) over the little-endian bytes of `global`, the canonical
/// architecture name (`"LSTM100"`), a `0x1f` separator and the split label
/// (`"1/2"`), followed by the SplitMix64 finaliser to spread the bits.
pub fn cell_seed(global: u64, architecture: Architecture, split: SplitSpec) -> u64 {
    let mut h = FNV_OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    feed(&global.to_le_bytes());
    feed(architecture.to_string().as_bytes());
    feed(&[0x1f]);
    feed(split.to_string().as_bytes());
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

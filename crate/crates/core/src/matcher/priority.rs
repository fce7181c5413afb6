//! Seeded total orders on ordered tuples with distinct coordinates.

use std::cmp::Ordering;

use serde::Serialize;

use super::MatchError;

const LANE_A: u64 = 0x243F_6A88_85A3_08D3;
const LANE_B: u64 = 0x1319_8A2E_0370_7344;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn lane(start: u64, arity: usize, coords: &[u32]) -> u64 {
    let mut h = splitmix64(start ^ (arity as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    for &c in coords {
        h = splitmix64(h ^ u64::from(c));
    }
    h
}

/// Position of a tuple in the order `≺_m`: pseudo-random key first, then the
/// coordinates lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TuplePriority {
    pub key: u128,
    pub coords: Vec<u32>,
}

impl Ord for TuplePriority {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key).then_with(|| self.coords.cmp(&other.coords))
    }
}

impl PartialOrd for TuplePriority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Key of a tuple under the seeded order for its arity. Coordinates are used
/// as given (the caller picks 0- or 1-based labels consistently).
#[inline]
pub(crate) fn raw_key(seed: u64, coords: &[u32]) -> u128 {
    let m = coords.len();
    let hi = lane(seed ^ LANE_A, m, coords);
    let lo = lane(seed.rotate_left(32) ^ LANE_B, m, coords);
    (u128::from(hi) << 64) | u128::from(lo)
}

/// Priority of a 1-indexed tuple. Repeated coordinates are rejected.
pub fn tuple_priority(seed: u64, tuple: &[usize]) -> Result<TuplePriority, MatchError> {
    let mut sorted = tuple.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(MatchError::RepeatedCoordinate(tuple.to_vec()));
    }
    if sorted.first() == Some(&0) || sorted.last().is_some_and(|&v| v > u32::MAX as usize) {
        return Err(MatchError::Contract(format!("tuple {tuple:?} is not 1-indexed")));
    }
    let coords: Vec<u32> = tuple.iter().map(|&v| (v - 1) as u32).collect();
    Ok(TuplePriority { key: raw_key(seed, &coords), coords: coords.iter().map(|&c| c + 1).collect() })
}

/// `(key, coords)` comparison on 0-based tuples, as used inside the matcher.
#[inline]
pub(crate) fn cmp_keyed(a: (u128, &[u32]), b: (u128, &[u32])) -> Ordering {
    a.0.cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

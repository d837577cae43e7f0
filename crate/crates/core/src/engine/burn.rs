use std::time::{Duration, Instant};

/// Outcome of a [`burn`] call. `digest` is `burn_digest(iterations)`, so the
/// work can be checked after the fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurnReport {
    pub iterations: u64,
    pub digest: u64,
    pub elapsed: Duration,
}

const CHUNK: u64 = 4096;

fn mix(state: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn burn_digest(iterations: u64) -> u64 {
    (0..iterations).fold(0u64, |acc, _| mix(acc))
}

/// Keeps the calling thread busy for at least `duration`.
pub fn burn(duration: Duration) -> BurnReport {
    let start = Instant::now();
    let mut state = 0u64;
    let mut iterations = 0u64;
    while start.elapsed() < duration {
        for _ in 0..CHUNK {
            state = mix(state);
        }
        iterations += CHUNK;
        std::thread::yield_now();
    }
    BurnReport {
        iterations,
        digest: std::hint::black_box(state),
        elapsed: start.elapsed(),
    }
}

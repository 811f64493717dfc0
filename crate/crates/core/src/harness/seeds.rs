/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one trial. Keyed on the SNR value rather than its grid position,
/// so reordering or extending the grid leaves every cell's blocks unchanged.
pub fn trial_seed(master: u64, snr_db: f64, class: usize, trial: usize) -> u64 {
    let mut h = mix(master);
    h = mix(h ^ snr_db.to_bits());
    h = mix(h ^ class as u64);
    mix(h ^ trial as u64)
}

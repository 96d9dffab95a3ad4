//! Brute-force dechirp search on a Nyquist-rate capture against the
//! sub-Nyquist decomposition of the same chirp.

use std::f64::consts::PI;

use chirpdec::{
    decompose, oracle_dechirp, sample_capture, DecomposeConfig, LfmComponent, NoiseSpec,
    SamplingGrid,
};

fn main() -> chirpdec::Result<()> {
    let truth = LfmComponent::new(1.0, 200.0, 4500.25, 0.3)?;
    let slow = sample_capture(
        &[truth],
        SamplingGrid::new(0.0, 1e-3, 127)?,
        NoiseSpec::noiseless(),
    )?;
    let est = decompose(&slow, &DecomposeConfig::default())?.components[0].component;

    let fast = sample_capture(
        &[truth],
        SamplingGrid::new(0.0, 4e-5, 3151)?,
        NoiseSpec::noiseless(),
    )?;
    // k and f trade off along a ridge; stepping the frequency at the middle of
    // the capture instead of f keeps the grid maximum next to the true peak.
    let mid = 0.5 * fast.grid.end();
    let mut best = oracle_dechirp(&fast, &[0.0], &[0.0])?;
    for k in (0..=80).map(|i| 5.0 * i as f64) {
        let fs: Vec<f64> = (0..=400)
            .map(|i| 4400.0 + 0.5 * i as f64 - k * mid / PI)
            .collect();
        let hit = oracle_dechirp(&fast, &[k], &fs)?;
        if hit.correlation > best.correlation {
            best = hit;
        }
    }
    println!(
        "oracle     k {:>8.3} f {:>9.3} corr {:.4}",
        best.k, best.f, best.correlation
    );
    println!(
        "decompose  k {:>8.3} f {:>9.3} a {:.4}",
        est.k, est.f, est.a
    );
    Ok(())
}

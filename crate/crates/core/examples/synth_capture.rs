//! Sample a two-chirp signal far below its Nyquist rate and print the capture.

use chirpdec::format::capture_to_csv;
use chirpdec::{nyquist_deficit, sample_capture, LfmComponent, NoiseSpec, SamplingGrid};

fn main() -> chirpdec::Result<()> {
    let comps = [
        LfmComponent::new(1.0, 1.1e4, 4210.0, 0.1)?,
        LfmComponent::new(0.5, -7e3, 9870.0, 1.2)?,
    ];
    let grid = SamplingGrid::new(0.0, 1e-3, 127)?;
    println!("nyquist deficit {:.2}", nyquist_deficit(&comps, &grid)?);

    let clean = sample_capture(&comps, grid, NoiseSpec::noiseless())?;
    let noisy = sample_capture(&comps, grid, NoiseSpec::new(20.0, 1))?;
    for line in capture_to_csv(&clean).lines().take(4) {
        println!("{line}");
    }
    let err: f64 = clean
        .x
        .iter()
        .zip(&noisy.x)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    println!("noise norm at 20 dB: {err:.3}");
    Ok(())
}

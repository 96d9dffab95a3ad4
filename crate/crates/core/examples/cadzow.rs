//! Cadzow denoising of a noisy capture before decomposition.

use num_complex::Complex64;

use chirpdec::{cadzow_denoise, sample_capture, LfmComponent, NoiseSpec, SamplingGrid};

fn main() -> chirpdec::Result<()> {
    let tone = [LfmComponent::new(1.0, 0.0, 77.0, 0.4)?];
    let grid = SamplingGrid::new(0.0, 1e-3, 63)?;
    let clean = sample_capture(&tone, grid, NoiseSpec::noiseless())?.x;
    let noisy = sample_capture(&tone, grid, NoiseSpec::new(10.0, 3))?.x;
    let dist = |a: &[Complex64]| {
        a.iter()
            .zip(&clean)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    for iters in [0, 1, 3, 10] {
        println!(
            "{iters:>2} iterations: distance to clean {:.4}",
            dist(&cadzow_denoise(&noisy, 1, iters)?)
        );
    }
    Ok(())
}

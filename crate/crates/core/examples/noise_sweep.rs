//! Small Monte Carlo noise sweep with the noisy preset.

use chirpdec::experiments::{run_noise_sweep, SweepConfig};
use chirpdec::{DecomposeConfig, LfmComponent, SamplingGrid};

fn main() -> chirpdec::Result<()> {
    let truth = [
        LfmComponent::new(1.0, 3.04e4, -450.0, 0.4)?,
        LfmComponent::new(0.8, -1.77e4, 400.0, -2.0)?,
    ];
    let cfg = SweepConfig {
        snr_db: vec![20.0, 30.0, 40.0],
        trials: 10,
        base_seed: 7,
        grid: SamplingGrid::new(0.0, 1e-3, 127)?,
        decompose: DecomposeConfig::noisy(),
        success_tol: 5e-2,
    };
    let report = run_noise_sweep(&truth, &cfg, 0)?;
    for s in &report.summary.per_snr {
        println!(
            "{:>4} dB: {}/{} ok, median k err {:.1e}, f err {:.1e}",
            s.snr_db, s.successes, s.trials, s.median_k_rel_err, s.median_f_rel_err
        );
    }
    Ok(())
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chirpdec::experiments::{
    rank_scan_csv, run_noise_sweep, sweep_rows_csv, threads_from_env, SweepConfig,
};
use chirpdec::format::{capture_from_csv, capture_to_csv, to_json_string, write_atomic};
use chirpdec::{
    decompose, nyquist_deficit, rank_ratio_scan, sample_capture, DecomposeConfig, Error, NoiseSpec,
    Result, SamplingGrid, SignalSpec,
};

#[derive(Parser)]
#[command(
    name = "chirpdec",
    version,
    about = "Sub-Nyquist decomposition of multicomponent chirp signals"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a signal spec into a capture CSV.
    Synth(SynthArgs),
    /// Estimate chirp components from a capture CSV.
    Decompose(DecomposeArgs),
    /// Numerical rank of single-chirp Hankel matrices over a (k, dt) grid.
    RankScan(RankScanArgs),
    /// Monte Carlo estimation errors over a list of SNRs.
    NoiseSweep(NoiseSweepArgs),
    /// Run the fast invariant suite.
    Verify,
}

#[derive(Args)]
struct SynthArgs {
    /// Signal spec JSON: {"components": [{"a", "k_rad_s2", "f_hz", "phi_rad"}, ...]}
    spec: PathBuf,
    /// Sampling rate in Hz.
    #[arg(long)]
    fs: f64,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long, default_value_t = 127)]
    samples: usize,
    /// SNR in dB for both channels; `inf` for noiseless.
    #[arg(long, default_value = "inf")]
    snr: f64,
    /// Separate SNR for the derivative channel.
    #[arg(long)]
    dx_snr: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Configuration preset: `default` or `noisy`.
    #[arg(long, default_value = "default")]
    preset: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    offset_q: Option<usize>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    max_components: Option<usize>,
    #[arg(long)]
    denoise_iters: Option<usize>,
    /// Output JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankScanArgs {
    /// Comma-separated chirp rates in rad/s^2.
    #[arg(long, value_delimiter = ',', required = true)]
    k_list: Vec<f64>,
    /// Comma-separated sampling intervals in seconds.
    #[arg(long, value_delimiter = ',', required = true)]
    dt_list: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NoiseSweepArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Comma-separated SNRs in dB; `inf` allowed.
    #[arg(long, value_delimiter = ',', required = true)]
    snr_list: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Trial i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "noisy")]
    preset: String,
    #[arg(long, default_value_t = 1000.0)]
    fs: f64,
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long, default_value_t = 127)]
    samples: usize,
    /// Relative k and f error below which a component counts as recovered.
    #[arg(long, default_value_t = 5e-2)]
    success_tol: f64,
    /// Output prefix; writes PREFIX.csv (rows) and PREFIX.json (summary).
    #[arg(long)]
    out: PathBuf,
}

fn grid(fs: f64, t0: f64, samples: usize) -> Result<SamplingGrid> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::Input(format!(
            "sampling rate must be positive, got {fs}"
        )));
    }
    SamplingGrid::new(t0, 1.0 / fs, samples)
}

fn read_spec(path: &Path) -> Result<SignalSpec> {
    SignalSpec::from_json(&std::fs::read_to_string(path)?)
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = read_spec(&a.spec)?;
    let grid = grid(a.fs, a.t0, a.samples)?;
    let noise = NoiseSpec {
        xdot_snr_db: a.dx_snr,
        ..NoiseSpec::new(a.snr, a.seed)
    };
    let capture = sample_capture(&spec.components, grid, noise)?;
    if !spec.components.is_empty() {
        eprintln!(
            "nyquist deficit: {:.6}",
            nyquist_deficit(&spec.components, &grid)?
        );
    }
    write_atomic(&a.out, &capture_to_csv(&capture))
}

fn decompose_cmd(a: DecomposeArgs) -> Result<()> {
    let capture = capture_from_csv(&std::fs::read_to_string(&a.input)?)?;
    let mut cfg = DecomposeConfig::preset(&a.preset)?;
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if a.offset_q.is_some() {
        cfg.offset_q = a.offset_q;
    }
    if let Some(t) = a.rank_tol {
        cfg.rank_tol = t;
        cfg.ladder_start = cfg.ladder_start.max(t);
    }
    if a.max_components.is_some() {
        cfg.max_components = a.max_components;
    }
    if let Some(d) = a.denoise_iters {
        cfg.denoise_iters = d;
    }
    let result = decompose(&capture, &cfg)?;
    if result.components.is_empty() {
        return Err(Error::NoComponents);
    }
    if result.premise_warning {
        eprintln!(
            "warning: estimated model order is too large for n = {}",
            cfg.n
        );
    }
    let json = result.to_json()?;
    match a.out {
        Some(p) => write_atomic(&p, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn rank_scan(a: RankScanArgs) -> Result<()> {
    let rows = rank_ratio_scan(&a.k_list, &a.dt_list, a.n, a.tol)?;
    write_atomic(&a.out, &rank_scan_csv(&rows))
}

fn noise_sweep(a: NoiseSweepArgs) -> Result<()> {
    let spec = read_spec(&a.spec)?;
    let cfg = SweepConfig {
        snr_db: a.snr_list,
        trials: a.trials,
        base_seed: a.seed,
        grid: grid(a.fs, a.t0, a.samples)?,
        decompose: DecomposeConfig::preset(&a.preset)?,
        success_tol: a.success_tol,
    };
    let report = run_noise_sweep(&spec.components, &cfg, threads_from_env()?)?;
    let csv = sweep_rows_csv(&report.rows);
    let json = to_json_string(&report.summary)?;
    write_atomic(&a.out.with_extension("csv"), &csv)?;
    write_atomic(&a.out.with_extension("json"), &json)
}

fn verify() -> ExitCode {
    #[cfg(debug_assertions)]
    if std::env::var("CHIRPDEC_MUTATE").as_deref() == Ok("delta2_sign") {
        chirpdec::verify::set_delta2_sign_mutation(true);
    }
    let checks = chirpdec::verify::run_checks();
    print!("{}", chirpdec::verify::format_table(&checks));
    if checks.iter().all(|c| c.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Synth(a) => synth(a),
        Cmd::Decompose(a) => decompose_cmd(a),
        Cmd::RankScan(a) => rank_scan(a),
        Cmd::NoiseSweep(a) => noise_sweep(a),
        Cmd::Verify => return verify(),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

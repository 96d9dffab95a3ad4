//! Experiment harnesses: random scenarios, rank scans and noise sweeps.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decompose::{decompose, DecomposeConfig};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, lenient_f64};
use crate::hankel::RankScanRow;
use crate::signal::{phase_distance, sample_capture, LfmComponent, NoiseSpec, SamplingGrid};

/// Ranges of the random noiseless scenarios.
///
/// Components are placed so that their aliased frequencies `f dt mod 1` are
/// at least `min_alias_separation` apart on the unit circle; the method's
/// conditioning depends on that separation, not on the raw frequencies. The
/// first component sets the Nyquist deficit; the others sit at random
/// aliasing multiples below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRanges {
    pub dt: f64,
    pub count: usize,
    /// Largest normalized chirp rate `|k| dt^2`; draws are uniform in [0.1, 1] times this, random sign.
    pub max_norm_rate: f64,
    pub min_alias_separation: f64,
    /// Minimum relative separation between chirp rates.
    pub min_rate_separation: f64,
    pub amp_range: (f64, f64),
}

impl Default for ScenarioRanges {
    fn default() -> Self {
        ScenarioRanges {
            dt: 1e-3,
            count: 127,
            max_norm_rate: 3e-4,
            min_alias_separation: 0.15,
            min_rate_separation: 0.01,
            amp_range: (0.5, 2.0),
        }
    }
}

impl ScenarioRanges {
    pub fn grid(&self) -> SamplingGrid {
        SamplingGrid {
            t0: 0.0,
            dt: self.dt,
            count: self.count,
        }
    }
}

/// Draws `m` components whose peak instantaneous frequency is just below
/// `deficit` times the grid's Nyquist frequency.
pub fn random_components<R: Rng>(
    rng: &mut R,
    m: usize,
    deficit: f64,
    ranges: &ScenarioRanges,
) -> Vec<LfmComponent> {
    let dt = ranges.dt;
    let span = dt * (ranges.count - 1) as f64;
    let nu: Vec<f64> = loop {
        let nu: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let ok = (0..m).all(|i| {
            (0..i).all(|j| {
                let d = (nu[i] - nu[j]).abs();
                d.min(1.0 - d) >= ranges.min_alias_separation
            })
        });
        if ok {
            break nu;
        }
    };
    let rates: Vec<f64> = loop {
        let r: Vec<f64> = (0..m)
            .map(|_| {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * rng.random_range(0.1..=1.0) * ranges.max_norm_rate / (dt * dt)
            })
            .collect();
        let ok = (0..m).all(|i| {
            (0..i).all(|j| {
                (r[i] - r[j]).abs() >= ranges.min_rate_separation * r[i].abs().max(r[j].abs())
            })
        });
        if ok {
            break r;
        }
    };
    let fmax = deficit / (2.0 * dt);
    (0..m)
        .map(|i| {
            let k = rates[i];
            let mult = if i == 0 {
                // Peak of f + k t / pi over the capture equals fmax at most.
                let sweep = (k * span / PI).max(0.0);
                ((fmax - sweep) * dt - nu[i]).floor()
            } else {
                let top = ((fmax * dt - 1.0).floor() as i64).max(1);
                rng.random_range(0..top) as f64
            };
            let f = (mult + nu[i]) / dt;
            let a = rng.random_range(ranges.amp_range.0..=ranges.amp_range.1);
            let phi = rng.random_range(-PI..PI);
            LfmComponent {
                a,
                k,
                f,
                phi: crate::signal::wrap_phase(phi),
            }
        })
        .collect()
}

/// CSV of a rank scan with header `k_rad_s2,dt_s,rank,ratio`.
pub fn rank_scan_csv(rows: &[RankScanRow]) -> String {
    let mut out = String::from("k_rad_s2,dt_s,rank,ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(r.k),
            fmt_f64(r.dt),
            r.rank,
            fmt_f64(r.ratio)
        ));
    }
    out
}

/// Relative error with a guard for zero truth values.
pub fn rel_err(est: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        est.abs()
    } else {
        (est - truth).abs() / truth.abs()
    }
}

/// Errors of one true component against its matched estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchErrors {
    #[serde(with = "lenient_f64")]
    pub k_rel_err: f64,
    #[serde(with = "lenient_f64")]
    pub f_rel_err: f64,
    #[serde(with = "lenient_f64")]
    pub a_rel_err: f64,
    #[serde(with = "lenient_f64")]
    pub phi_abs_err: f64,
}

impl MatchErrors {
    pub fn missing() -> Self {
        MatchErrors {
            k_rel_err: f64::INFINITY,
            f_rel_err: f64::INFINITY,
            a_rel_err: f64::INFINITY,
            phi_abs_err: f64::INFINITY,
        }
    }

    pub fn worst(&self) -> f64 {
        self.k_rel_err
            .max(self.f_rel_err)
            .max(self.a_rel_err)
            .max(self.phi_abs_err)
    }
}

/// Matches each true component to the nearest estimate in
/// `|dk|/|k| + |df|/|f|`. Returns per-truth errors and whether the matching
/// is one-to-one with no extra estimates.
pub fn match_components(truth: &[LfmComponent], est: &[LfmComponent]) -> (Vec<MatchErrors>, bool) {
    let mut used = vec![false; est.len()];
    let mut one_to_one = est.len() == truth.len();
    let errs = truth
        .iter()
        .map(|t| {
            let dist = |e: &LfmComponent| rel_err(e.k, t.k) + rel_err(e.f, t.f);
            let best = (0..est.len()).min_by(|&i, &j| dist(&est[i]).total_cmp(&dist(&est[j])));
            match best {
                None => {
                    one_to_one = false;
                    MatchErrors::missing()
                }
                Some(j) => {
                    if used[j] {
                        one_to_one = false;
                    }
                    used[j] = true;
                    let e = &est[j];
                    MatchErrors {
                        k_rel_err: rel_err(e.k, t.k),
                        f_rel_err: rel_err(e.f, t.f),
                        a_rel_err: rel_err(e.a, t.a),
                        phi_abs_err: phase_distance(e.phi, t.phi),
                    }
                }
            }
        })
        .collect();
    (errs, one_to_one)
}

/// Noise sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(with = "lenient_f64::vec")]
    pub snr_db: Vec<f64>,
    pub trials: usize,
    /// Trial `i` uses seed `base_seed + i` at every SNR.
    pub base_seed: u64,
    pub grid: SamplingGrid,
    pub decompose: DecomposeConfig,
    /// A trial succeeds when every component is matched one-to-one with k
    /// and f relative errors at or below this.
    pub success_tol: f64,
}

/// One (snr, trial, component) row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(with = "lenient_f64")]
    pub snr_db: f64,
    pub trial: usize,
    pub seed: u64,
    pub component: usize,
    pub errors: MatchErrors,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrSummary {
    #[serde(with = "lenient_f64")]
    pub snr_db: f64,
    pub trials: usize,
    pub successes: usize,
    #[serde(with = "lenient_f64")]
    pub median_k_rel_err: f64,
    #[serde(with = "lenient_f64")]
    pub median_f_rel_err: f64,
    #[serde(with = "lenient_f64")]
    pub median_a_rel_err: f64,
    #[serde(with = "lenient_f64")]
    pub median_phi_abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub components: Vec<LfmComponent>,
    pub trials: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub success_tol: f64,
    pub config: DecomposeConfig,
    pub per_snr: Vec<SnrSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

/// Median; infinities count as large values, NaN never appears.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn run_trial(
    truth: &[LfmComponent],
    snr: f64,
    seed: u64,
    cfg: &SweepConfig,
) -> Result<(Vec<MatchErrors>, bool)> {
    let capture = sample_capture(truth, cfg.grid, NoiseSpec::new(snr, seed))?;
    match decompose(&capture, &cfg.decompose) {
        Ok(r) => {
            let (errs, one_to_one) = match_components(truth, &r.lfm_components());
            let ok = one_to_one
                && errs
                    .iter()
                    .all(|e| e.k_rel_err <= cfg.success_tol && e.f_rel_err <= cfg.success_tol);
            Ok((errs, ok))
        }
        Err(Error::NoComponents) | Err(Error::Numerical { .. }) => {
            Ok((vec![MatchErrors::missing(); truth.len()], false))
        }
        Err(e) => Err(e),
    }
}

/// Decomposes independently noised captures of `truth` at every SNR.
///
/// Trials run on up to `threads` workers (0 = one per core); rows come back
/// ordered by SNR, trial and component regardless of completion order.
pub fn run_noise_sweep(
    truth: &[LfmComponent],
    cfg: &SweepConfig,
    threads: usize,
) -> Result<SweepReport> {
    if cfg.trials == 0 {
        return Err(Error::input("trials must be at least 1"));
    }
    if truth.is_empty() {
        return Err(Error::input("sweep needs at least one component"));
    }
    let jobs: Vec<(f64, usize)> = cfg
        .snr_db
        .iter()
        .flat_map(|&s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::input(format!("thread pool: {e}")))?;
    let results: Vec<Result<(Vec<MatchErrors>, bool)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(snr, t)| run_trial(truth, snr, cfg.base_seed.wrapping_add(t as u64), cfg))
            .collect()
    });
    let mut rows = Vec::with_capacity(jobs.len() * truth.len());
    for (&(snr, trial), res) in jobs.iter().zip(results) {
        let (errs, success) = res?;
        for (component, errors) in errs.into_iter().enumerate() {
            rows.push(SweepRow {
                snr_db: snr,
                trial,
                seed: cfg.base_seed.wrapping_add(trial as u64),
                component,
                errors,
                success,
            });
        }
    }
    let per_snr = summarize(&rows, &cfg.snr_db, cfg.trials);
    Ok(SweepReport {
        rows,
        summary: SweepSummary {
            components: truth.to_vec(),
            trials: cfg.trials,
            base_seed: cfg.base_seed,
            seeds: (0..cfg.trials)
                .map(|t| cfg.base_seed.wrapping_add(t as u64))
                .collect(),
            success_tol: cfg.success_tol,
            config: cfg.decompose.clone(),
            per_snr,
        },
    })
}

/// Per-SNR medians over all (trial, component) rows.
pub fn summarize(rows: &[SweepRow], snrs: &[f64], trials: usize) -> Vec<SnrSummary> {
    snrs.iter()
        .map(|&snr| {
            let sel: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.snr_db.to_bits() == snr.to_bits())
                .collect();
            let col = |f: fn(&MatchErrors) -> f64| {
                median(&sel.iter().map(|r| f(&r.errors)).collect::<Vec<_>>())
            };
            let mut ok_trials: Vec<usize> =
                sel.iter().filter(|r| r.success).map(|r| r.trial).collect();
            ok_trials.dedup();
            SnrSummary {
                snr_db: snr,
                trials,
                successes: ok_trials.len(),
                median_k_rel_err: col(|e| e.k_rel_err),
                median_f_rel_err: col(|e| e.f_rel_err),
                median_a_rel_err: col(|e| e.a_rel_err),
                median_phi_abs_err: col(|e| e.phi_abs_err),
            }
        })
        .collect()
}

pub const SWEEP_HEADER: &str =
    "snr_db,trial,seed,component,k_rel_err,f_rel_err,a_rel_err,phi_abs_err,success";

pub fn sweep_rows_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let e = &r.errors;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.snr_db),
            r.trial,
            r.seed,
            r.component,
            fmt_f64(e.k_rel_err),
            fmt_f64(e.f_rel_err),
            fmt_f64(e.a_rel_err),
            fmt_f64(e.phi_abs_err),
            r.success
        ));
    }
    out
}

/// Parses rows written by [`sweep_rows_csv`].
pub fn sweep_rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == SWEEP_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                detail: "unexpected sweep header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let bad = |d: &str| Error::Parse {
            line: i + 1,
            detail: d.to_string(),
        };
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 9 {
            return Err(bad("expected 9 fields"));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        let u = |s: &str| s.parse::<u64>().map_err(|_| bad("bad integer"));
        rows.push(SweepRow {
            snr_db: f(c[0])?,
            trial: u(c[1])? as usize,
            seed: u(c[2])?,
            component: u(c[3])? as usize,
            errors: MatchErrors {
                k_rel_err: f(c[4])?,
                f_rel_err: f(c[5])?,
                a_rel_err: f(c[6])?,
                phi_abs_err: f(c[7])?,
            },
            success: c[8].parse::<bool>().map_err(|_| bad("bad flag"))?,
        });
    }
    Ok(rows)
}

/// Seeded RNG used by the scenario generators.
pub fn scenario_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Reads `CHIRPDEC_THREADS` (0 or unset = automatic).
pub fn threads_from_env() -> Result<usize> {
    match std::env::var("CHIRPDEC_THREADS") {
        Err(_) => Ok(0),
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::input(format!("CHIRPDEC_THREADS must be an integer, got `{s}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::nyquist_deficit;

    #[test]
    fn scenarios_respect_ranges() {
        let ranges = ScenarioRanges::default();
        let mut rng = scenario_rng(5);
        for &d in &[10.0, 25.0, 50.0] {
            for m in 1..=3 {
                let c = random_components(&mut rng, m, d, &ranges);
                assert_eq!(c.len(), m);
                let def = nyquist_deficit(&c, &ranges.grid()).unwrap();
                assert!(
                    def <= d + 1e-9 && def > d - 2.5,
                    "deficit {def} for target {d}"
                );
                for x in &c {
                    let kappa = x.k.abs() * ranges.dt * ranges.dt;
                    assert!((0.1 * 3e-4 - 1e-18..=3e-4 + 1e-18).contains(&kappa));
                }
            }
        }
    }

    #[test]
    fn matching_flags_missing_and_extra() {
        let c = |k, f| LfmComponent {
            a: 1.0,
            k,
            f,
            phi: 0.0,
        };
        let truth = [c(100.0, 50.0), c(-200.0, 80.0)];
        let (e, ok) = match_components(&truth, &[c(100.0, 50.0), c(-200.0, 80.0)]);
        assert!(ok && e.iter().all(|x| x.worst() == 0.0));
        let (_, ok) = match_components(&truth, &[c(100.0, 50.0)]);
        assert!(!ok);
        let (e, ok) = match_components(&truth, &[]);
        assert!(!ok && e[0].k_rel_err.is_infinite());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[1.0, f64::INFINITY, f64::INFINITY]), f64::INFINITY);
    }
}

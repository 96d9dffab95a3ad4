//! Decomposition of multicomponent linear-FM signals sampled far below the
//! Nyquist rate, from samples of the signal and of its first derivative.
//!
//! The chirp rate `k` and start frequency `f` of every component come out of a
//! two-parameter eigenvalue problem built from Hankel matrices over two time
//! intervals. Amplitudes and phases follow from a generalized eigenvalue
//! pencil, cross-checked by least squares.
//!
//! ```
//! use chirpdec::{decompose, sample_capture, DecomposeConfig, LfmComponent, NoiseSpec, SamplingGrid};
//!
//! let truth = [LfmComponent::new(1.0, 2.0e4, 12_345.0, 0.3).unwrap()];
//! let grid = SamplingGrid::new(0.0, 1e-3, 127).unwrap();
//! let capture = sample_capture(&truth, grid, NoiseSpec::noiseless()).unwrap();
//! let result = decompose(&capture, &DecomposeConfig::default()).unwrap();
//! let c = result.components[0].component;
//! assert!((c.f - 12_345.0).abs() < 1e-4);
//! ```

pub mod amplitude;
pub mod decompose;
pub mod error;
pub mod experiments;
pub mod format;
pub mod hankel;
pub mod linalg;
pub mod signal;
pub mod twoparam;
pub mod verify;

pub use amplitude::{
    amplitude_pencil, least_squares_amplitudes, to_amp_phase, unit_chirp_hankel,
    AmplitudeCandidate, AmplitudeSource, UnitChirpMatrix,
};
pub use decompose::{
    decompose, estimate_model_order, oracle_dechirp, reconstruct, ComponentEstimate,
    DecomposeConfig, DecompositionResult, Diagnostics, OracleHit,
};
pub use error::{Error, Result};
pub use hankel::{
    cadzow_denoise, hadamard, hankel, numerical_rank, rank_ratio_scan, takagi, time_hankel,
    time_weight_factors, HankelMatrix, HankelTriplet, RankScanRow, TakagiFactors, TimeHankel,
    TimeWeightFactors,
};
pub use signal::{
    eval_derivative, eval_signal, nyquist_deficit, phase_distance, sample_capture, wrap_phase,
    LfmComponent, NoiseSpec, Provenance, SamplingGrid, SignalCapture, SignalSpec,
};
pub use twoparam::{
    build_problem, coupled_residual, filter_and_map, operator_determinants,
    operator_determinants_projected, solve_pencils, ClusterCenter, EigenEstimate, FilterConfig,
    MappedComponent, OperatorDeterminants, Pencil3, TwoParamProblem,
};

//! Compensating composite pulse sequences for robust quantum control.
//!
//! This crate synthesizes the classic compensating sequence families
//! (Solovay-Kitaev, Wimperis/Trotter-Suzuki, CORPSE and their concatenations,
//! plus two-qubit Ising variants), simulates them under systematic
//! control-error models, and verifies their claimed cancellation orders with
//! a numeric Magnus/BCH engine and log-log infidelity slope fits.
//!
//! The library is the primary interface; start with the runnable examples:
//!
//! ```text
//! examples/
//! ├── catalog_synthesis.rs   # build every sequence family, print pulse trains
//! ├── error_models.rs        # imperfect propagators and fidelity under each model
//! ├── algebra_paths.rs       # vector paths on su(2): closure and signed area
//! ├── magnus_terms.rs        # interaction-frame Magnus terms for SK1 and CORPSE
//! ├── slope_scaling.rs       # infidelity slope fits across the catalog
//! ├── error_grid.rs          # 2D simultaneous-error grids (B2CORPSE vs plain)
//! ├── shaped_corpse.rs       # continuous waveforms, compensation residuals
//! └── two_qubit_ising.rs     # B2-J / B2-WJ compensated Ising gates
//! ```
//!
//! Run one with `cargo run --example slope_scaling`. A thin CLI binary
//! (`pulseseq`) exposes the same operations as subcommands; see the README.
//!
//! # Conventions
//!
//! Generators are written as `-i v . H` with `H_mu = sigma_mu / 2`, so an
//! algebra vector `v` exponentiates to a Bloch rotation by `|v|` about
//! `v / |v|`. Pulse lists are stored in application order (first pulse first)
//! and composed right-to-left as matrices. All angles are radians, all error
//! parameters dimensionless.

pub mod bench;
pub mod cli;
pub mod error_model;
pub mod expansion;
pub mod sequences;
pub mod shaped;
pub mod su2;
pub mod twoqubit;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation angle {theta} outside the valid range |theta| <= {max}")]
    ThetaOutOfRange { theta: f64, max: f64 },

    #[error("recursion order {0} outside the supported range {1}..={2}")]
    OrderOutOfRange(u32, u32, u32),

    #[error("{model} does not support {axis}-axis pulses")]
    UnsupportedPulse { model: String, axis: String },

    #[error("error model {0} is not a single-parameter su(2) model")]
    UnsupportedModel(String),

    #[error("matrix is not unitary within {0:e}")]
    NotUnitary(f64),

    #[error("matrix is not special (|det - 1| = {0:e})")]
    NotSpecial(f64),

    #[error("rotation branch is ambiguous (U = -I); supply an axis hint")]
    AmbiguousBranch,

    #[error("retarget would lift pulse axes out of the Hx-Hy plane")]
    UnsupportedRetarget,

    #[error("sequence '{family}' was not synthesized for a matching planar rotation")]
    RetargetMismatch { family: String },

    #[error("leading-term extraction failed at order {order}: {detail}")]
    ExtractionFailure { order: u32, detail: String },

    #[error("quadrature failed to converge (estimate {0:e} above tolerance {1:e})")]
    QuadratureNonConvergence(f64, f64),

    #[error("negative pulse angle {0} in CORPSE synthesis; increase n1/n2/n3")]
    NegativeAngle(f64),

    #[error("scan grid must be sorted, positive and non-empty")]
    BadGrid,

    #[error("slope fit needs at least {need} usable points, found {found}")]
    TooFewPoints { need: usize, found: usize },

    #[error("waveform time {t} outside [0, {tau}]")]
    TimeOutOfRange { t: f64, tau: f64 },

    #[error("waveform samples must be time-monotone on [0, tau]")]
    BadSamples,

    #[error("unknown sequence family '{0}'")]
    UnknownFamily(String),

    #[error("invalid input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

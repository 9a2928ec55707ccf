//! Systematic control-error models and imperfect propagators.
//!
//! Each model deforms an ideal square pulse `R(theta, phi)` into the
//! propagator that is actually applied when the control is miscalibrated.
//! Error parameters are dimensionless; detuning is expressed as
//! `delta = offset / Rabi frequency` so pulses of different angle share one
//! convention.

use serde::{Deserialize, Serialize};

use crate::sequences::Sequence;
use crate::su2::{exp_su2, rotation, AlgebraVec3, Unitary2, UnitaryProduct};
use crate::{Error, Result};

/// Rotation-axis tag for a square pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Axis `(cos phi, sin phi, 0)` in the Hx-Hy plane.
    Planar,
    /// Software frame rotation about Hz.
    Z,
}

/// A square pulse: nominal rotation angle, axis phase, axis tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub theta: f64,
    pub phi: f64,
    pub axis: Axis,
}

impl Pulse {
    /// Planar pulse at phase `phi`.
    pub fn planar(theta: f64, phi: f64) -> Self {
        Self { theta, phi, axis: Axis::Planar }
    }

    pub fn z(theta: f64) -> Self {
        Self { theta, phi: 0.0, axis: Axis::Z }
    }

    /// Ideal propagator of this pulse.
    pub fn ideal(&self) -> Unitary2 {
        match self.axis {
            Axis::Planar => rotation(self.theta, self.phi),
            Axis::Z => exp_su2(AlgebraVec3::new(0.0, 0.0, self.theta)),
        }
    }
}

/// Systematic error model. Serializes as `{"model": "...", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum ErrorModel {
    /// Rabi-frequency offset: `V = U(u (1 + eps))`.
    Amplitude { eps: f64 },
    /// Clock offset on square pulses; acts like an amplitude error.
    PulseLength { eps: f64 },
    /// Spatial addressing: addressed spins see the ideal pulse, unaddressed
    /// spins the scaled-down rotation `U(eps u)`.
    Addressing { eps: f64, addressed: bool },
    /// Constant frequency offset lifting the rotation axis toward Hz.
    Detuning { delta: f64 },
    /// Independent amplitude and detuning errors.
    AmplitudeDetuning { eps: f64, delta: f64 },
    /// Coupled pulse-length and detuning errors: the timing error scales the
    /// lifted axis as well.
    PulseLengthDetuning { eps: f64, delta: f64 },
    /// Ising coupling strength error (two-qubit gates only).
    IsingCoupling { eps: f64 },
}

impl ErrorModel {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorModel::Amplitude { .. } => "amplitude",
            ErrorModel::PulseLength { .. } => "pulse_length",
            ErrorModel::Addressing { .. } => "addressing",
            ErrorModel::Detuning { .. } => "detuning",
            ErrorModel::AmplitudeDetuning { .. } => "amplitude_detuning",
            ErrorModel::PulseLengthDetuning { .. } => "pulse_length_detuning",
            ErrorModel::IsingCoupling { .. } => "ising_coupling",
        }
    }

    /// Series expansions are guaranteed only for |parameters| < 1.
    pub fn in_series_regime(&self) -> bool {
        match *self {
            ErrorModel::Amplitude { eps }
            | ErrorModel::PulseLength { eps }
            | ErrorModel::Addressing { eps, .. }
            | ErrorModel::IsingCoupling { eps } => eps.abs() < 1.0,
            ErrorModel::Detuning { delta } => delta.abs() < 1.0,
            ErrorModel::AmplitudeDetuning { eps, delta }
            | ErrorModel::PulseLengthDetuning { eps, delta } => {
                eps.abs() < 1.0 && delta.abs() < 1.0
            }
        }
    }
}

/// One-parameter model templates, used by scans and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Amplitude,
    PulseLength,
    Addressing,
    Detuning,
}

impl ModelKind {
    pub fn at(&self, eps: f64) -> ErrorModel {
        match self {
            ModelKind::Amplitude => ErrorModel::Amplitude { eps },
            ModelKind::PulseLength => ErrorModel::PulseLength { eps },
            ModelKind::Addressing => ErrorModel::Addressing { eps, addressed: false },
            ModelKind::Detuning => ErrorModel::Detuning { delta: eps },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Amplitude => "amplitude",
            ModelKind::PulseLength => "pulse_length",
            ModelKind::Addressing => "addressing",
            ModelKind::Detuning => "detuning",
        }
    }
}

/// Two-parameter model templates for simultaneous-error grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind2 {
    AmplitudeDetuning,
    PulseLengthDetuning,
}

impl ModelKind2 {
    pub fn at(&self, eps: f64, delta: f64) -> ErrorModel {
        match self {
            ModelKind2::AmplitudeDetuning => ErrorModel::AmplitudeDetuning { eps, delta },
            ModelKind2::PulseLengthDetuning => ErrorModel::PulseLengthDetuning { eps, delta },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind2::AmplitudeDetuning => "amplitude_detuning",
            ModelKind2::PulseLengthDetuning => "pulse_length_detuning",
        }
    }
}

/// Imperfect propagator `M(theta, phi)` of a pulse under an error model.
///
/// Z-axis pulses are software frame rotations: they are exact under the
/// detuning-family models and unsupported under the rf-field models
/// (amplitude, pulse-length, addressing), which only deform physical planar
/// pulses.
pub fn imperfect(p: &Pulse, m: &ErrorModel) -> Result<Unitary2> {
    if p.axis == Axis::Z {
        return match m {
            ErrorModel::Detuning { .. }
            | ErrorModel::AmplitudeDetuning { .. }
            | ErrorModel::PulseLengthDetuning { .. } => {
                Ok(exp_su2(AlgebraVec3::new(0.0, 0.0, p.theta)))
            }
            _ => Err(Error::UnsupportedPulse {
                model: m.name().to_string(),
                axis: "z".to_string(),
            }),
        };
    }
    let (theta, phi) = (p.theta, p.phi);
    let u = match *m {
        ErrorModel::Amplitude { eps } | ErrorModel::PulseLength { eps } => {
            rotation(theta * (1.0 + eps), phi)
        }
        ErrorModel::Addressing { eps, addressed } => {
            if addressed {
                rotation(theta, phi)
            } else {
                rotation(theta * eps, phi)
            }
        }
        ErrorModel::Detuning { delta } => exp_su2(AlgebraVec3::new(
            theta * phi.cos(),
            theta * phi.sin(),
            theta * delta,
        )),
        // At delta = 0 the simultaneous models reduce bit-exactly to the
        // pure angle error.
        ErrorModel::AmplitudeDetuning { eps, delta } => {
            if delta == 0.0 {
                rotation(theta * (1.0 + eps), phi)
            } else {
                exp_su2(AlgebraVec3::new(
                    theta * (1.0 + eps) * phi.cos(),
                    theta * (1.0 + eps) * phi.sin(),
                    theta * delta,
                ))
            }
        }
        ErrorModel::PulseLengthDetuning { eps, delta } => {
            if delta == 0.0 {
                rotation(theta * (1.0 + eps), phi)
            } else {
                exp_su2(AlgebraVec3::new(
                    theta * (1.0 + eps) * phi.cos(),
                    theta * (1.0 + eps) * phi.sin(),
                    theta * (1.0 + eps) * delta,
                ))
            }
        }
        ErrorModel::IsingCoupling { .. } => {
            return Err(Error::UnsupportedModel(m.name().to_string()))
        }
    };
    Ok(u)
}

/// Left-ordered product of the imperfect pulse propagators (first pulse acts
/// first); re-projects to SU(2) every 64 factors.
pub fn apply_sequence(s: &Sequence, m: &ErrorModel) -> Result<Unitary2> {
    let mut acc = UnitaryProduct::new();
    for p in &s.pulses {
        acc.push(&imperfect(p, m)?);
    }
    Ok(acc.finish())
}

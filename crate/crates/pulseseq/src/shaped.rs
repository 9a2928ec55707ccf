//! Continuous control waveforms: representation, detuning propagation, and
//! the first-order shaped-pulse compensation conditions.
//!
//! A waveform drives `H(t) = u_x(t) Hx + delta Hz` over `[0, tau]` in
//! dimensionless units (the Rabi scale is folded into `u_x`, matching the
//! dimensionless detuning convention of the square-pulse models).

use serde::{Deserialize, Serialize};

use crate::sequences::corpse_angles;
use crate::su2::{exp_su2, AlgebraVec3, Unitary2, UnitaryProduct};
use crate::{Error, Result};

/// Control waveform, either time-sampled or Fourier-parameterized.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Waveform {
    /// `u_x(t) = w sum_n a_n cos(n w (t - tau/2)) + b_n sin(n w (t - tau/2))`
    /// with `w = 2 pi / tau`.
    Fourier { tau: f64, a: Vec<f64>, b: Vec<f64> },
    /// Samples `(t, u_x)` connected by linear interpolation; duplicate time
    /// stamps encode steps exactly. Times must be monotone on `[0, tau]`.
    Samples { samples: Vec<(f64, f64)> },
}

impl Waveform {
    pub fn samples(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2
            || samples[0].0 != 0.0
            || samples.windows(2).any(|w| w[1].0 < w[0].0)
        {
            return Err(Error::BadSamples);
        }
        Ok(Waveform::Samples { samples })
    }

    pub fn fourier(tau: f64, a: Vec<f64>, b: Vec<f64>) -> Self {
        Waveform::Fourier { tau, a, b }
    }

    /// Total duration.
    pub fn tau(&self) -> f64 {
        match self {
            Waveform::Samples { samples } => samples.last().map(|s| s.0).unwrap_or(0.0),
            Waveform::Fourier { tau, .. } => *tau,
        }
    }

    /// Control amplitude at time `t`.
    pub fn amplitude(&self, t: f64) -> f64 {
        match self {
            Waveform::Samples { samples } => {
                match samples.binary_search_by(|s| s.0.total_cmp(&t)) {
                    Ok(i) => samples[i].1,
                    Err(0) => samples[0].1,
                    Err(i) if i >= samples.len() => samples[samples.len() - 1].1,
                    Err(i) => {
                        let (t0, u0) = samples[i - 1];
                        let (t1, u1) = samples[i];
                        if t1 > t0 {
                            u0 + (u1 - u0) * (t - t0) / (t1 - t0)
                        } else {
                            u1
                        }
                    }
                }
            }
            Waveform::Fourier { tau, a, b } => {
                let w = std::f64::consts::TAU / tau;
                let x = t - 0.5 * tau;
                let mut u = 0.0;
                for (n, &an) in a.iter().enumerate() {
                    u += an * (n as f64 * w * x).cos();
                }
                for (n, &bn) in b.iter().enumerate() {
                    u += bn * (n as f64 * w * x).sin();
                }
                w * u
            }
        }
    }

    /// Render to `n` evenly spaced samples (primarily for format conversion).
    pub fn render_samples(&self, n: usize) -> Result<Waveform> {
        let n = n.max(2);
        let tau = self.tau();
        let samples = (0..n)
            .map(|i| {
                let t = tau * i as f64 / (n - 1) as f64;
                (t, self.amplitude(t))
            })
            .collect();
        Waveform::samples(samples)
    }

    /// CSV export for the Samples form: `t,u_x` rows.
    pub fn to_csv(&self) -> Result<String> {
        match self {
            Waveform::Samples { samples } => {
                let mut out = String::from("t,u_x\n");
                for (t, u) in samples {
                    out.push_str(&format!("{t},{u}\n"));
                }
                Ok(out)
            }
            Waveform::Fourier { .. } => {
                Err(Error::Parse("CSV holds sampled waveforms; convert first".into()))
            }
        }
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('t')) {
                continue;
            }
            let (t, u) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad CSV row '{line}'")))?;
            samples.push((
                t.trim().parse().map_err(|_| Error::Parse(format!("bad time '{t}'")))?,
                u.trim().parse().map_err(|_| Error::Parse(format!("bad value '{u}'")))?,
            ));
        }
        Waveform::samples(samples)
    }
}

/// CORPSE rendered as an exact piecewise-constant waveform with unit Rabi
/// amplitude: `+1 / -1 / +1` segments of the CORPSE durations, with
/// duplicated breakpoints encoding the steps.
pub fn corpse_waveform(theta: f64) -> Result<Waveform> {
    let (t1, t2, t3) = corpse_angles(theta, 1, 1, 0);
    if t1 < 0.0 || t2 < 0.0 || t3 < 0.0 {
        return Err(Error::NegativeAngle(t1.min(t2).min(t3)));
    }
    Waveform::samples(vec![
        (0.0, 1.0),
        (t1, 1.0),
        (t1, -1.0),
        (t1 + t2, -1.0),
        (t1 + t2, 1.0),
        (t1 + t2 + t3, 1.0),
    ])
}

/// Accumulated flip angle `int_0^t u_x`, exact for both representations
/// (term-by-term antiderivative for Fourier, trapezoid for Samples).
pub fn accumulated_angle(w: &Waveform, t: f64) -> Result<f64> {
    let tau = w.tau();
    if !(0.0..=tau + 1e-12).contains(&t) {
        return Err(Error::TimeOutOfRange { t, tau });
    }
    match w {
        Waveform::Samples { samples } => {
            let mut acc = 0.0;
            for win in samples.windows(2) {
                let (t0, u0) = win[0];
                let (t1, u1) = win[1];
                if t <= t0 {
                    break;
                }
                let end = t.min(t1);
                if end > t0 {
                    let ue = if t1 > t0 {
                        u0 + (u1 - u0) * (end - t0) / (t1 - t0)
                    } else {
                        u1
                    };
                    acc += 0.5 * (u0 + ue) * (end - t0);
                }
            }
            Ok(acc)
        }
        Waveform::Fourier { tau, a, b } => {
            let w0 = std::f64::consts::TAU / tau;
            let x = t - 0.5 * tau;
            let x0 = -0.5 * tau;
            let mut acc = if a.is_empty() { 0.0 } else { a[0] * w0 * t };
            for (n, &an) in a.iter().enumerate().skip(1) {
                let nf = n as f64;
                acc += an / nf * ((nf * w0 * x).sin() - (nf * w0 * x0).sin());
            }
            for (n, &bn) in b.iter().enumerate().skip(1) {
                let nf = n as f64;
                acc += -bn / nf * ((nf * w0 * x).cos() - (nf * w0 * x0).cos());
            }
            Ok(acc)
        }
    }
}

/// The two first-order detuning compensation integrals
/// `(int cos(theta(t)) dt, int sin(theta(t)) dt)`; a waveform cancels the
/// first-order detuning term iff both vanish.
///
/// Constant sample segments integrate in closed form; ramps and Fourier
/// forms use midpoint panels dense enough for ~1e-10 accuracy.
pub fn first_order_residuals(w: &Waveform) -> (f64, f64) {
    match w {
        Waveform::Samples { samples } => {
            let mut c = 0.0f64;
            let mut s = 0.0f64;
            let mut phase = 0.0f64;
            for win in samples.windows(2) {
                let (t0, u0) = win[0];
                let (t1, u1) = win[1];
                let dt = t1 - t0;
                if dt <= 0.0 {
                    continue;
                }
                if (u1 - u0).abs() < 1e-14 * u0.abs().max(1.0) {
                    // Constant segment: exact trig integral.
                    let u = u0;
                    if u.abs() < 1e-14 {
                        c += phase.cos() * dt;
                        s += phase.sin() * dt;
                    } else {
                        let p1 = phase + u * dt;
                        c += (p1.sin() - phase.sin()) / u;
                        s += (phase.cos() - p1.cos()) / u;
                    }
                    phase += u * dt;
                } else {
                    let du = (u1 - u0) / dt;
                    let n = ((dt * (u0.abs() + u1.abs()) * 64.0) as usize).max(64);
                    let step = dt / n as f64;
                    for k in 0..n {
                        let tm = (k as f64 + 0.5) * step;
                        let ph = phase + u0 * tm + 0.5 * du * tm * tm;
                        c += ph.cos() * step;
                        s += ph.sin() * step;
                    }
                    phase += 0.5 * (u0 + u1) * dt;
                }
            }
            (c, s)
        }
        Waveform::Fourier { tau, .. } => {
            let mut c = 0.0;
            let mut s = 0.0;
            let n = 1 << 14;
            let step = tau / n as f64;
            for k in 0..n {
                let tm = (k as f64 + 0.5) * step;
                let ph = accumulated_angle(w, tm).unwrap_or(0.0);
                c += ph.cos() * step;
                s += ph.sin() * step;
            }
            (c, s)
        }
    }
}

/// Default propagation step count.
pub const DEFAULT_STEPS: usize = 2048;

/// Time-ordered propagation of the waveform under a constant dimensionless
/// detuning: per-step exact exponentials of the midpoint-sampled generator.
/// Sample breakpoints are respected, so piecewise-constant waveforms
/// propagate exactly; smooth waveforms converge at second order in the step
/// size.
pub fn propagate(w: &Waveform, delta: f64, steps: usize) -> Unitary2 {
    let steps = steps.max(1);
    let tau = w.tau();
    let mut acc = UnitaryProduct::new();
    match w {
        Waveform::Samples { samples } => {
            // Distribute steps over the inter-sample intervals, at least one
            // per interval, so discontinuities never straddle a step.
            for win in samples.windows(2) {
                let (t0, u0) = win[0];
                let (t1, u1) = win[1];
                let dt = t1 - t0;
                if dt <= 0.0 {
                    continue;
                }
                let n = ((dt / tau * steps as f64).ceil() as usize).max(1);
                let h = dt / n as f64;
                for k in 0..n {
                    let frac = (k as f64 + 0.5) / n as f64;
                    let um = u0 + (u1 - u0) * frac;
                    acc.push(&exp_su2(AlgebraVec3::new(um * h, 0.0, delta * h)));
                }
            }
        }
        Waveform::Fourier { .. } => {
            let h = tau / steps as f64;
            for k in 0..steps {
                let um = w.amplitude((k as f64 + 0.5) * h);
                acc.push(&exp_su2(AlgebraVec3::new(um * h, 0.0, delta * h)));
            }
        }
    }
    acc.finish()
}

/// First-order interaction-frame detuning term of a waveform, computed from
/// the propagated frame, independently of [`first_order_residuals`]: the
/// integral of the frame-conjugated Hz over the pulse. Sample breakpoints
/// are respected so steps never straddle a discontinuity.
pub fn waveform_omega1(w: &Waveform, steps: usize) -> AlgebraVec3 {
    let steps = steps.max(16);
    let tau = w.tau();
    let mut frame = Unitary2::identity();
    let mut acc = AlgebraVec3::ZERO;
    let z = AlgebraVec3::new(0.0, 0.0, 1.0);
    let mut advance = |u0: f64, u1: f64, dt: f64, n: usize| {
        let h = dt / n as f64;
        for k in 0..n {
            let frac = (k as f64 + 0.5) / n as f64;
            let um = u0 + (u1 - u0) * frac;
            let half = exp_su2(AlgebraVec3::new(um * 0.5 * h, 0.0, 0.0));
            let mid = half.mul(&frame);
            acc = acc + crate::su2::conj_rotate(&mid.dagger(), z).scale(h);
            frame = half.mul(&mid);
        }
    };
    match w {
        Waveform::Samples { samples } => {
            for win in samples.windows(2) {
                let (t0, u0) = win[0];
                let (t1, u1) = win[1];
                let dt = t1 - t0;
                if dt <= 0.0 {
                    continue;
                }
                let n = ((dt / tau * steps as f64).ceil() as usize).max(1);
                advance(u0, u1, dt, n);
            }
        }
        Waveform::Fourier { .. } => {
            let h = tau / steps as f64;
            for k in 0..steps {
                let um = w.amplitude((k as f64 + 0.5) * h);
                advance(um, um, h, 1);
            }
        }
    }
    acc
}

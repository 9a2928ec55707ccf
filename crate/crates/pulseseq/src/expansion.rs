//! Numeric BCH/Magnus engine for interaction-frame error terms, Lie-algebra
//! vector paths, and the Trotter / balanced-commutator product builders.
//!
//! For a sequence applied under a linear error model the imperfect propagator
//! factors as `V = U_ideal * exp(sum_n eps^n W_n)` with `W_n` the standard
//! Magnus terms of the interaction-frame error Hamiltonian. The terms
//! reported here are oriented as *correction generators*: `omega_n = -W_n`
//! (coefficients of `-i v . H`), i.e. the vector a correction block must
//! realize at order `n` to cancel the error. With this orientation `omega2`
//! equals the geometric signed area of the error path traversed in time
//! order, and the first-order term of a single over-rotated `theta` pulse is
//! `(-theta, 0, 0)`.

use serde::Serialize;

use crate::error_model::{apply_sequence, Axis, ErrorModel};
use crate::sequences::Sequence;
use crate::su2::{
    conj_rotate, exp_su2, log_su2, AlgebraVec3, Unitary2, UnitaryProduct,
};
use crate::{Error, Result};

/// Leading interaction-frame Magnus terms of a sequence under a linear model,
/// in the correction orientation described in the module docs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MagnusTerms {
    pub omega1: AlgebraVec3,
    pub omega2: AlgebraVec3,
    /// Third-order term; computed only when depth 3 is requested.
    pub omega3: Option<AlgebraVec3>,
    /// Absolute quadrature error estimate for the reported terms.
    pub truncation_estimate: f64,
}

/// Error-vector path of a sequence on su(2).
#[derive(Debug, Clone, Serialize)]
pub struct AlgebraPath {
    /// Cumulative path positions `(t, P(t))`, starting from the origin.
    /// Curved (detuning-frame) segments carry interior samples for plotting.
    pub samples: Vec<(f64, AlgebraVec3)>,
    /// Norm of the endpoint displacement, `|W1|`.
    pub closure_residual: f64,
    /// Geometric signed area `1/2 closed-integral P x dP` including the
    /// curvature of arc segments; agrees with `omega2`.
    pub signed_area: AlgebraVec3,
}

impl AlgebraPath {
    /// CSV export: header plus one `t,vx,vy,vz` row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,vx,vy,vz\n");
        for (t, v) in &self.samples {
            out.push_str(&format!("{t},{},{},{}\n", v.x, v.y, v.z));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Interaction-frame error segments
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum SegKind {
    /// Error density constant over the pulse (angle-type models).
    Const(AlgebraVec3),
    /// Detuning density `cos(l) z + sin(l) e` in the local pulse angle `l`.
    Trig { z: AlgebraVec3, e: AlgebraVec3 },
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    t0: f64,
    dur: f64,
    p0: AlgebraVec3,
    kind: SegKind,
}

impl Segment {
    fn h(&self, l: f64) -> AlgebraVec3 {
        match self.kind {
            SegKind::Const(v) => v,
            SegKind::Trig { z, e } => z.scale(l.cos()) + e.scale(l.sin()),
        }
    }

    /// `int_0^l h` within the segment.
    fn prefix(&self, l: f64) -> AlgebraVec3 {
        match self.kind {
            SegKind::Const(v) => v.scale(l),
            SegKind::Trig { z, e } => z.scale(l.sin()) + e.scale(1.0 - l.cos()),
        }
    }

    fn full(&self) -> AlgebraVec3 {
        self.prefix(self.dur)
    }

    /// Closed-form intra-segment ordered double integral
    /// `1/2 int int_{l > l'} h(l) x h(l')`.
    fn intra2(&self) -> AlgebraVec3 {
        match self.kind {
            SegKind::Const(_) => AlgebraVec3::ZERO,
            SegKind::Trig { z, e } => {
                z.cross(&e).scale(0.5 * (self.dur.sin() - self.dur))
            }
        }
    }
}

/// Decompose a sequence under a linear model into interaction-frame error
/// segments with exact per-segment prefix integrals.
fn segments(s: &Sequence, m: &ErrorModel) -> Result<Vec<Segment>> {
    enum Mode {
        Angle { framed: bool },
        None,
        Detuning,
    }
    let mode = match m {
        ErrorModel::Amplitude { .. } | ErrorModel::PulseLength { .. } => Mode::Angle { framed: true },
        ErrorModel::Addressing { addressed, .. } => {
            if *addressed {
                Mode::None
            } else {
                Mode::Angle { framed: false }
            }
        }
        ErrorModel::Detuning { .. } => Mode::Detuning,
        other => return Err(Error::UnsupportedModel(other.name().to_string())),
    };
    let mut frame = Unitary2::identity();
    let mut t = 0.0;
    let mut p = AlgebraVec3::ZERO;
    let mut out = Vec::with_capacity(s.pulses.len());
    for pulse in &s.pulses {
        if pulse.axis == Axis::Z {
            match mode {
                Mode::Detuning => {
                    // Software frame rotation: exact, zero duration.
                    frame = exp_su2(AlgebraVec3::new(0.0, 0.0, pulse.theta)).mul(&frame);
                    continue;
                }
                _ => {
                    return Err(Error::UnsupportedPulse {
                        model: m.name().to_string(),
                        axis: "z".to_string(),
                    })
                }
            }
        }
        let dur = pulse.theta;
        let inv = frame.dagger();
        let kind = match mode {
            Mode::None => SegKind::Const(AlgebraVec3::ZERO),
            Mode::Angle { framed } => {
                let eta = AlgebraVec3::planar(1.0, pulse.phi);
                SegKind::Const(if framed { conj_rotate(&inv, eta) } else { eta })
            }
            Mode::Detuning => {
                let zc = conj_rotate(&inv, AlgebraVec3::new(0.0, 0.0, 1.0));
                let ec = conj_rotate(&inv, AlgebraVec3::new(-pulse.phi.sin(), pulse.phi.cos(), 0.0));
                SegKind::Trig { z: zc, e: ec }
            }
        };
        if dur > 0.0 {
            let seg = Segment { t0: t, dur, p0: p, kind };
            p = p + seg.full();
            t += dur;
            out.push(seg);
        }
        frame = pulse.ideal().mul(&frame);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Composite Gauss quadrature with per-pulse panels
// ---------------------------------------------------------------------------

const GAUSS_X: [f64; 6] = [
    0.125_233_408_511_468_9,
    0.367_831_498_998_180_2,
    0.587_317_954_286_617_5,
    0.769_902_674_194_304_7,
    0.904_117_256_370_474_9,
    0.981_560_634_246_719_2,
];
const GAUSS_W: [f64; 6] = [
    0.249_147_045_813_402_8,
    0.233_492_536_538_354_8,
    0.203_167_426_723_065_9,
    0.160_078_328_543_346_2,
    0.106_939_325_995_318_4,
    0.047_175_336_386_511_8,
];

/// 12-point Gauss-Legendre on `[a, b]`.
fn gauss12<F: FnMut(f64) -> AlgebraVec3>(a: f64, b: f64, f: &mut F) -> AlgebraVec3 {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let mut acc = AlgebraVec3::ZERO;
    for i in 0..6 {
        let d = hw * GAUSS_X[i];
        acc = acc + (f(c + d) + f(c - d)).scale(GAUSS_W[i]);
    }
    acc.scale(hw)
}

/// Composite rule over all segments, `panels` panels per unit angle
/// (at least one per segment).
fn composite<F: FnMut(&Segment, f64) -> AlgebraVec3>(
    segs: &[Segment],
    per_unit: f64,
    f: &mut F,
) -> AlgebraVec3 {
    let mut acc = AlgebraVec3::ZERO;
    for seg in segs {
        let n = ((seg.dur * per_unit).ceil() as usize).max(1);
        let step = seg.dur / n as f64;
        for k in 0..n {
            let a = k as f64 * step;
            let b = a + step;
            let mut g = |l: f64| f(seg, l);
            acc = acc + gauss12(a, b, &mut g);
        }
    }
    acc
}

/// Adaptive refinement: double the panel density until two successive levels
/// agree to `tol`; returns the value and the final delta.
fn refine<F: FnMut(&Segment, f64) -> AlgebraVec3>(
    segs: &[Segment],
    tol: f64,
    mut f: F,
) -> Result<(AlgebraVec3, f64)> {
    let mut per_unit = 2.0;
    let mut prev = composite(segs, per_unit, &mut f);
    for _ in 0..7 {
        per_unit *= 2.0;
        let next = composite(segs, per_unit, &mut f);
        let delta = (next - prev).norm();
        if delta <= tol {
            return Ok((next, delta));
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence((prev).norm(), tol))
}

const QUAD_TOL: f64 = 1e-10;

fn omega1_exact(segs: &[Segment]) -> AlgebraVec3 {
    let mut acc = AlgebraVec3::ZERO;
    for s in segs {
        acc = acc + s.full();
    }
    acc
}

/// Closed-form second-order term (cross products of exact segment integrals
/// plus intra-segment arcs), in the same correction orientation as
/// [`MagnusTerms`]. Independent of the quadrature route and used to check it.
pub fn omega2_closed(segs_src: &Sequence, m: &ErrorModel) -> Result<AlgebraVec3> {
    let segs = segments(segs_src, m)?;
    let mut acc = AlgebraVec3::ZERO;
    for s in &segs {
        acc = acc + s.full().cross(&s.p0).scale(0.5) + s.intra2();
    }
    Ok(-acc)
}

/// Interaction-frame Magnus terms at the default depth (orders one and two).
pub fn interaction_terms(s: &Sequence, m: &ErrorModel) -> Result<MagnusTerms> {
    interaction_terms_depth(s, m, 2)
}

/// Magnus terms up to `depth` (2 or 3). First order is integrated exactly
/// piecewise; higher orders use the adaptive composite Gauss rule with
/// per-pulse breakpoints.
pub fn interaction_terms_depth(s: &Sequence, m: &ErrorModel, depth: u32) -> Result<MagnusTerms> {
    let segs = segments(s, m)?;
    let w1 = omega1_exact(&segs);
    let (w2, d2) = refine(&segs, QUAD_TOL, |seg, l| {
        seg.h(l).cross(&(seg.p0 + seg.prefix(l))).scale(0.5)
    })?;
    let mut trunc = d2;
    let omega3 = if depth >= 3 {
        let total = omega1_exact(&segs);
        let (w3, d3) = refine(&segs, QUAD_TOL, |seg, l| {
            let h = seg.h(l);
            let p = seg.p0 + seg.prefix(l);
            let rest = total - p;
            (rest.cross(&h.cross(&p)) + p.cross(&h.cross(&rest))).scale(1.0 / 6.0)
        })?;
        trunc = trunc.max(d3);
        Some(-w3)
    } else {
        None
    };
    Ok(MagnusTerms {
        omega1: -w1,
        omega2: -w2,
        omega3,
        truncation_estimate: trunc,
    })
}

/// Error-vector path of the sequence under a linear model.
pub fn path(s: &Sequence, m: &ErrorModel) -> Result<AlgebraPath> {
    let segs = segments(s, m)?;
    let mut samples = vec![(0.0, AlgebraVec3::ZERO)];
    for seg in &segs {
        match seg.kind {
            SegKind::Const(_) => {
                samples.push((seg.t0 + seg.dur, seg.p0 + seg.full()));
            }
            SegKind::Trig { .. } => {
                // Interior samples resolve the arc for plotting.
                let n = ((seg.dur / 0.2).ceil() as usize).max(2);
                for k in 1..=n {
                    let l = seg.dur * k as f64 / n as f64;
                    samples.push((seg.t0 + l, seg.p0 + seg.prefix(l)));
                }
            }
        }
    }
    let w1 = omega1_exact(&segs);
    // Polygon shoelace over exact segment chords, plus the arc corrections.
    let mut area = AlgebraVec3::ZERO;
    for seg in &segs {
        area = area + seg.p0.cross(&seg.full()).scale(0.5) - seg.intra2();
    }
    Ok(AlgebraPath {
        samples,
        closure_residual: w1.norm(),
        signed_area: area,
    })
}

// ---------------------------------------------------------------------------
// BCH and product builders
// ---------------------------------------------------------------------------

/// Truncated BCH series for `log(exp(a) exp(b))` on su(2), where the bracket
/// is the vector cross product. `order` must lie in `1..=3`.
pub fn bch_pair(a: AlgebraVec3, b: AlgebraVec3, order: u32) -> AlgebraVec3 {
    assert!((1..=3).contains(&order), "bch_pair supports orders 1..=3");
    let mut acc = a + b;
    if order >= 2 {
        acc = acc + a.cross(&b).scale(0.5);
    }
    if order >= 3 {
        let ab = a.cross(&b);
        acc = acc + (a.cross(&ab) + b.cross(&b.cross(&a))).scale(1.0 / 12.0);
    }
    acc
}

/// Lie-Trotter product `(exp(a/n) exp(b/n))^n`.
pub fn trotter(a: AlgebraVec3, b: AlgebraVec3, n: u32) -> Unitary2 {
    let n = n.max(1);
    let step = exp_su2(a.scale(1.0 / n as f64)).mul(&exp_su2(b.scale(1.0 / n as f64)));
    let mut acc = UnitaryProduct::new();
    for _ in 0..n {
        acc.push(&step);
    }
    acc.finish()
}

/// Balanced group commutator
/// `(exp(a/n) exp(b/n) exp(-a/n) exp(-b/n))^(n^2)`, converging to
/// `exp_su2(a x b)`.
pub fn balanced_commutator(a: AlgebraVec3, b: AlgebraVec3, n: u32) -> Unitary2 {
    let n = n.max(1);
    let inv = 1.0 / n as f64;
    let step = exp_su2(a.scale(inv))
        .mul(&exp_su2(b.scale(inv)))
        .mul(&exp_su2(a.scale(-inv)))
        .mul(&exp_su2(b.scale(-inv)));
    let mut acc = UnitaryProduct::new();
    for _ in 0..(n as usize * n as usize) {
        acc.push(&step);
    }
    acc.finish()
}

/// Least-squares extraction of the `eps^k` coefficient of `log V(eps)` on
/// the unaddressed-spin frame, for orders beyond the quadrature engine.
///
/// Resonant pulse trains obey an exact parity rule: even-order terms are
/// even in `eps` and aligned along Hz, odd-order terms are odd and planar.
/// Symmetrizing the log over `+-eps` therefore isolates the wanted parity
/// class exactly, and the fit only has to separate same-parity neighbours
/// (`k`, `k+2`, `k+4`).
pub fn richardson_log_term(s: &Sequence, k: u32) -> Result<AlgebraVec3> {
    let mut eps = Vec::new();
    let mut e = 1.5e-3;
    for _ in 0..6 {
        eps.push(e);
        e *= 1.4;
    }
    let even = k % 2 == 0;
    let mut logs = Vec::with_capacity(eps.len());
    for &ei in &eps {
        let vp = apply_sequence(s, &ErrorModel::Addressing { eps: ei, addressed: false })?;
        let vm = apply_sequence(s, &ErrorModel::Addressing { eps: -ei, addressed: false })?;
        let (lp, _) = log_su2(&vp);
        let (lm, _) = log_su2(&vm);
        let sym = if even { lp + lm } else { lp - lm }.scale(0.5);
        logs.push(sym);
    }
    // Normal equations for L(e) = c0 e^k + c1 e^(k+2) + c2 e^(k+4).
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [AlgebraVec3::ZERO; 3];
    for (i, &ei) in eps.iter().enumerate() {
        let powers = [ei.powi(k as i32), ei.powi(k as i32 + 2), ei.powi(k as i32 + 4)];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += powers[r] * powers[c];
            }
            rhs[r] = rhs[r] + logs[i].scale(powers[r]);
        }
    }
    let fit = solve3_vec(&m, &rhs).ok_or_else(|| Error::ExtractionFailure {
        order: k,
        detail: "singular normal equations in log-term fit".into(),
    })?;
    Ok(if even {
        AlgebraVec3::new(0.0, 0.0, fit.z)
    } else {
        AlgebraVec3::new(fit.x, fit.y, 0.0)
    })
}

/// 3x3 linear solve by Gaussian elimination with partial pivoting.
pub(crate) fn solve3(a: &[[f64; 3]; 3], b: AlgebraVec3) -> Option<AlgebraVec3> {
    let mut m = [
        [a[0][0], a[0][1], a[0][2], b.x],
        [a[1][0], a[1][1], a[1][2], b.y],
        [a[2][0], a[2][1], a[2][2], b.z],
    ];
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some(AlgebraVec3::new(
        m[0][3] / m[0][0],
        m[1][3] / m[1][1],
        m[2][3] / m[2][2],
    ))
}

fn solve3_vec(a: &[[f64; 3]; 3], b: &[AlgebraVec3; 3]) -> Option<AlgebraVec3> {
    let x = solve3(a, AlgebraVec3::new(b[0].x, b[1].x, b[2].x))?;
    let y = solve3(a, AlgebraVec3::new(b[0].y, b[1].y, b[2].y))?;
    let z = solve3(a, AlgebraVec3::new(b[0].z, b[1].z, b[2].z))?;
    Some(AlgebraVec3::new(x.x, y.x, z.x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_model::Pulse;
    use crate::sequences::{corpse, sk1, sk1_phase, wimperis, Sequence, WimperisKind};
    use crate::su2::rotation;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const ADDR: ErrorModel = ErrorModel::Addressing { eps: 0.0, addressed: false };

    #[test]
    fn sk1_terms_match_printed_values() {
        for theta in [0.25 * PI, 0.5 * PI, PI] {
            let s = sk1(theta, 0.0).unwrap();
            let t = interaction_terms(&s, &ADDR).unwrap();
            assert!(t.omega1.norm() < 1e-12, "omega1 {}", t.omega1.norm());
            let want = -2.0 * PI * PI * (2.0 * sk1_phase(theta)).sin();
            assert!((t.omega2.z - want).abs() < 1e-8, "{} vs {want}", t.omega2.z);
            assert!(f64::hypot(t.omega2.x, t.omega2.y) < 1e-9);
        }
    }

    #[test]
    fn single_pulse_amplitude_terms() {
        let theta = 1.3;
        let s = Sequence::new(
            vec![Pulse::planar(theta, 0.0)],
            rotation(theta, 0.0),
            "plain",
            0,
        );
        let t = interaction_terms_depth(&s, &ErrorModel::Amplitude { eps: 0.0 }, 3).unwrap();
        assert!((t.omega1.x + theta).abs() < 1e-12, "{:?}", t.omega1);
        assert!(t.omega1.y.abs() < 1e-12 && t.omega1.z.abs() < 1e-12);
        assert!(t.omega2.norm() < 1e-12);
        assert!(t.omega3.unwrap().norm() < 1e-10);
    }

    #[test]
    fn corpse_first_order_closes() {
        let s = corpse(0.5 * PI, 1, 1, 0).unwrap();
        let t = interaction_terms(&s, &ErrorModel::Detuning { delta: 0.0 }).unwrap();
        assert!(t.omega1.norm() < 1e-10, "omega1 {}", t.omega1.norm());
        // Quadrature and closed-form second order agree.
        let closed = omega2_closed(&s, &ErrorModel::Detuning { delta: 0.0 }).unwrap();
        assert!((t.omega2 - closed).norm() < 1e-9);
    }

    #[test]
    fn plain_pulse_detuning_first_order_open() {
        let s = Sequence::new(
            vec![Pulse::planar(0.5 * PI, 0.0)],
            rotation(0.5 * PI, 0.0),
            "plain",
            0,
        );
        let t = interaction_terms(&s, &ErrorModel::Detuning { delta: 0.0 }).unwrap();
        // |W1| = |(sin t, 1 - cos t)| for a theta = pi/2 pulse.
        let want = f64::hypot(1.0, 1.0);
        assert!((t.omega1.norm() - want).abs() < 1e-12);
    }

    #[test]
    fn bch_pair_base_cases() {
        let a = AlgebraVec3::new(0.3, -0.1, 0.2);
        assert!((bch_pair(a, AlgebraVec3::ZERO, 3) - a).norm() < 1e-15);
        let b = a.scale(-2.5);
        assert!((bch_pair(a, b, 3) - (a + b)).norm() < 1e-15);
    }

    #[test]
    fn two_pulse_terms_match_bch() {
        let s = Sequence::new(
            vec![Pulse::planar(0.8, 0.0), Pulse::planar(1.1, 1.0)],
            Unitary2::identity(),
            "pair",
            0,
        );
        let t = interaction_terms_depth(&s, &ADDR, 3).unwrap();
        let s1 = AlgebraVec3::planar(0.8, 0.0);
        let s2 = AlgebraVec3::planar(1.1, 1.0);
        // The correction orientation equals the BCH series of the inverse
        // product exp(-s1) exp(-s2), order by order.
        let f1 = -s1 - s2;
        let f2 = s1.cross(&s2).scale(0.5);
        let neg1 = -s1;
        let neg2 = -s2;
        let f3 = (neg1.cross(&neg1.cross(&neg2)) + neg2.cross(&neg2.cross(&neg1))).scale(1.0 / 12.0);
        assert!((t.omega1 - f1).norm() < 1e-12);
        assert!((t.omega2 - f2).norm() < 1e-9);
        assert!((t.omega3.unwrap() - f3).norm() < 1e-8);
    }

    #[test]
    fn magnus_consistency_and_convergence_rate() {
        let s = sk1(0.5 * PI, 0.0).unwrap();
        let model = |e: f64| ErrorModel::Amplitude { eps: e };
        let t = interaction_terms_depth(&s, &model(0.0), 3).unwrap();
        let resid = |e: f64| {
            let v = apply_sequence(&s, &model(e)).unwrap();
            let ui = s.target.dagger().mul(&v);
            let (l, _) = log_su2(&ui);
            // log U^I = -(e w1 + e^2 w2 + e^3 w3) in the correction basis.
            (l + t.omega1.scale(e) + t.omega2.scale(e * e) + t.omega3.unwrap().scale(e * e * e))
                .norm()
        };
        let r1 = resid(1e-3);
        let r2 = resid(5e-4);
        assert!(r1 < (10.0 * t.truncation_estimate).max(1e-11) + 1e-9, "r1 = {r1:e}");
        assert!(r1 / r2 > 15.0, "reduction {}", r1 / r2);
    }

    #[test]
    fn path_sk1_triangle() {
        let s = sk1(0.5 * PI, 0.0).unwrap();
        let p = path(&s, &ADDR).unwrap();
        assert_eq!(p.samples.len(), 4); // origin + 3 vertices
        assert!(p.closure_residual < 1e-12);
        let t = interaction_terms(&s, &ADDR).unwrap();
        assert!((p.signed_area - t.omega2).norm() < 1e-8);
    }

    #[test]
    fn path_n2_closed_with_zero_area() {
        let s = wimperis(WimperisKind::N2, 0.5 * PI).unwrap();
        let p = path(&s, &ADDR).unwrap();
        assert_eq!(p.samples.len(), 5);
        assert!(p.closure_residual < 1e-12);
        assert!(p.signed_area.norm() < 1e-9, "area {}", p.signed_area.norm());
    }

    #[test]
    fn path_single_pulse_open() {
        let theta = 1.2;
        let s = Sequence::new(
            vec![Pulse::planar(theta, 0.3)],
            rotation(theta, 0.3),
            "plain",
            0,
        );
        let p = path(&s, &ADDR).unwrap();
        assert!((p.closure_residual - theta).abs() < 1e-12);
    }

    #[test]
    fn corpse_path_matches_omega2_with_arcs() {
        let s = corpse(PI, 1, 1, 0).unwrap();
        let m = ErrorModel::Detuning { delta: 0.0 };
        let p = path(&s, &m).unwrap();
        let t = interaction_terms(&s, &m).unwrap();
        assert!(p.closure_residual < 1e-10);
        assert!((p.signed_area - t.omega2).norm() < 1e-8);
    }

    #[test]
    fn time_symmetric_trains_cancel_second_order() {
        // Palindromic pulse train => time-symmetric error Hamiltonian on the
        // unaddressed frame => all even orders vanish.
        let mut pulses = vec![
            Pulse::planar(0.7, 0.2),
            Pulse::planar(1.9, -1.1),
            Pulse::planar(0.4, 2.5),
        ];
        let mirror: Vec<Pulse> = pulses.iter().rev().cloned().collect();
        pulses.extend(mirror);
        let s = Sequence::new(pulses, Unitary2::identity(), "palindrome", 0);
        let t = interaction_terms(&s, &ADDR).unwrap();
        assert!(t.omega2.norm() < 1e-9, "omega2 {}", t.omega2.norm());
    }

    #[test]
    fn trotter_examples() {
        let a = AlgebraVec3::new(0.5, 0.0, 0.0);
        let b = AlgebraVec3::new(0.0, 0.5, 0.0);
        // n = 1 is the bare product.
        let t1 = trotter(a, b, 1);
        assert!(t1.frobenius_distance(&exp_su2(a).mul(&exp_su2(b))) < 1e-14);
        // Commuting case is exact for any n.
        let t = trotter(a, a.scale(0.3), 7);
        assert!(t.frobenius_distance(&exp_su2(a.scale(1.3))) < 1e-12);
        // First-order convergence.
        let exact = exp_su2(a + b);
        let e64 = trotter(a, b, 64).frobenius_distance(&exact);
        let e128 = trotter(a, b, 128).frobenius_distance(&exact);
        assert!(e64 / e128 > 1.6 && e64 / e128 < 2.4, "ratio {}", e64 / e128);
    }

    #[test]
    fn balanced_commutator_examples() {
        let a = AlgebraVec3::new(0.3, 0.0, 0.0);
        let b = AlgebraVec3::new(0.0, 0.3, 0.0);
        // Parallel arguments commute away.
        let p = balanced_commutator(a, a.scale(2.0), 5);
        assert!(p.frobenius_distance(&Unitary2::identity()) < 1e-12);
        // Converges toward exp(a x b).
        let exact = exp_su2(a.cross(&b));
        let d16 = balanced_commutator(a, b, 16).frobenius_distance(&exact);
        let d32 = balanced_commutator(a, b, 32).frobenius_distance(&exact);
        assert!(d32 < d16);
        // Swapping the arguments inverts the product exactly.
        let fwd = balanced_commutator(a, b, 8);
        let rev = balanced_commutator(b, a, 8);
        assert!(fwd.mul(&rev).frobenius_distance(&Unitary2::identity()) < 1e-12);
    }

    proptest! {
        #[test]
        fn bch_matches_exact_log(
            ax in -0.05f64..0.05, ay in -0.05f64..0.05, az in -0.05f64..0.05,
            bx in -0.05f64..0.05, by in -0.05f64..0.05, bz in -0.05f64..0.05,
        ) {
            let a = AlgebraVec3::new(ax, ay, az);
            let b = AlgebraVec3::new(bx, by, bz);
            let (exact, _) = log_su2(&exp_su2(a).mul(&exp_su2(b)));
            prop_assert!((bch_pair(a, b, 3) - exact).norm() < 1e-6);
        }
    }
}

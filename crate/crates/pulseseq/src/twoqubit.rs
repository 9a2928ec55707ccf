//! SU(4) product-operator arithmetic, Ising-generated gates, KAK synthesis,
//! and the compensated two-qubit sequences B2-J and B2-WJ.
//!
//! The product-operator basis is `H_uv = 2 H_u (x) H_v` with
//! `u, v in {1, x, y, z}` and the identity pair excluded; it is orthonormal
//! under the Hilbert-Schmidt product. The subalgebra spanned by
//! `{H_x1, H_yz, H_zz}` is a copy of su(2), which is what lets the
//! single-qubit compensating sequences transplant onto Ising gates.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::su2::{rotation, Unitary2};
use crate::{Error, Result};

pub type CMat4 = [[Complex64; 4]; 4];

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn mat4_identity() -> CMat4 {
    let mut m = [[czero(); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn mat4_mul(a: &CMat4, b: &CMat4) -> CMat4 {
    let mut out = [[czero(); 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == czero() {
                continue;
            }
            for j in 0..4 {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn mat4_dagger(a: &CMat4) -> CMat4 {
    let mut out = [[czero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub fn mat4_trace(a: &CMat4) -> Complex64 {
    a[0][0] + a[1][1] + a[2][2] + a[3][3]
}

pub fn mat4_sub(a: &CMat4, b: &CMat4) -> CMat4 {
    let mut out = [[czero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}

pub fn mat4_frobenius(a: &CMat4) -> f64 {
    let mut s = 0.0;
    for row in a {
        for v in row {
            s += v.norm_sqr();
        }
    }
    s.sqrt()
}

/// Hilbert-Schmidt inner product `tr(A^dag B)` on 4x4 matrices.
pub fn hs_inner4(a: &CMat4, b: &CMat4) -> Complex64 {
    let mut s = czero();
    for i in 0..4 {
        for j in 0..4 {
            s += a[i][j].conj() * b[i][j];
        }
    }
    s
}

pub fn mat4_commutator(a: &CMat4, b: &CMat4) -> CMat4 {
    mat4_sub(&mat4_mul(a, b), &mat4_mul(b, a))
}

/// Kronecker product of two 2x2 matrices.
pub fn kron(a: &Unitary2, b: &Unitary2) -> CMat4 {
    let ae = a.entries();
    let be = b.entries();
    let mut out = [[czero(); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = ae[i][j] * be[k][l];
                }
            }
        }
    }
    out
}

/// Dense 4x4 unitary with determinant normalized to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary4 {
    e: CMat4,
}

impl Unitary4 {
    pub fn identity() -> Self {
        Self { e: mat4_identity() }
    }

    /// Validated constructor; normalizes the global phase by the principal
    /// fourth root of the determinant so fidelities are reproducible.
    pub fn from_entries(e: CMat4) -> Result<Self> {
        let u = Self { e };
        let defect = mat4_frobenius(&mat4_sub(&mat4_mul(&mat4_dagger(&u.e), &u.e), &mat4_identity()));
        if defect > 1e-12 {
            return Err(Error::NotUnitary(defect));
        }
        Ok(u.phase_normalized())
    }

    pub(crate) fn from_entries_unchecked(e: CMat4) -> Self {
        Self { e }
    }

    pub fn entries(&self) -> &CMat4 {
        &self.e
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self { e: mat4_mul(&self.e, &rhs.e) }
    }

    pub fn dagger(&self) -> Self {
        Self { e: mat4_dagger(&self.e) }
    }

    pub fn frobenius_distance(&self, o: &Self) -> f64 {
        mat4_frobenius(&mat4_sub(&self.e, &o.e))
    }

    pub fn det(&self) -> Complex64 {
        // Laplace expansion over the first row with 3x3 minors.
        let m = &self.e;
        let minor = |r: [usize; 3], c: [usize; 3]| -> Complex64 {
            m[r[0]][c[0]] * (m[r[1]][c[1]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[1]])
                - m[r[0]][c[1]] * (m[r[1]][c[0]] * m[r[2]][c[2]] - m[r[1]][c[2]] * m[r[2]][c[0]])
                + m[r[0]][c[2]] * (m[r[1]][c[0]] * m[r[2]][c[1]] - m[r[1]][c[1]] * m[r[2]][c[0]])
        };
        m[0][0] * minor([1, 2, 3], [1, 2, 3]) - m[0][1] * minor([1, 2, 3], [0, 2, 3])
            + m[0][2] * minor([1, 2, 3], [0, 1, 3])
            - m[0][3] * minor([1, 2, 3], [0, 1, 2])
    }

    /// Divide out `det^(1/4)` (principal root).
    pub fn phase_normalized(&self) -> Self {
        let det = self.det();
        let phase = Complex64::from_polar(det.norm().powf(0.25), det.arg() / 4.0);
        let inv = phase.conj() / phase.norm_sqr();
        let mut e = self.e;
        for row in e.iter_mut() {
            for v in row.iter_mut() {
                *v *= inv;
            }
        }
        Self { e }
    }

    /// Re-orthonormalize the columns (modified Gram-Schmidt); bounds drift
    /// in long products.
    pub fn renormalized(&self) -> Self {
        let mut cols: Vec<Vec<Complex64>> = (0..4)
            .map(|j| (0..4).map(|i| self.e[i][j]).collect())
            .collect();
        for j in 0..4 {
            for k in 0..j {
                let proj: Complex64 = (0..4).map(|i| cols[k][i].conj() * cols[j][i]).sum();
                for i in 0..4 {
                    let c = cols[k][i];
                    cols[j][i] -= proj * c;
                }
            }
            let norm: f64 = cols[j].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            for v in cols[j].iter_mut() {
                *v /= norm;
            }
        }
        let mut e = [[czero(); 4]; 4];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..4 {
                e[i][j] = col[i];
            }
        }
        Self { e }
    }
}

// Row-major [re, im] pairs, matching the 2x2 convention.
impl Serialize for Unitary4 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .e
            .iter()
            .map(|r| r.iter().map(|c| [c.re, c.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Unitary4 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
            return Err(D::Error::custom("expected a 4x4 complex matrix"));
        }
        let mut e = [[czero(); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                e[i][j] = Complex64::new(rows[i][j][0], rows[i][j][1]);
            }
        }
        Unitary4::from_entries(e).map_err(D::Error::custom)
    }
}

/// Gate fidelity `|tr(U^dag V)| / 4`, global-phase invariant.
pub fn fidelity4(u: &Unitary4, v: &Unitary4) -> f64 {
    1.0 - infidelity4(u, v)
}

/// Infidelity `1 - |tr(U^dag V)| / 4` evaluated without cancellation: near
/// the identity the deficit is read off the Hermitian generator extracted
/// from the skew part of the phase-aligned difference.
pub fn infidelity4(u: &Unitary4, v: &Unitary4) -> f64 {
    let d = mat4_mul(&mat4_dagger(&u.e), &v.e);
    let tr = mat4_trace(&d);
    let direct = 1.0 - tr.norm() / 4.0;
    if direct > 1e-8 {
        return direct.clamp(0.0, 1.0);
    }
    // D = e^{i g} exp(-i G): align the phase, take G from the skew part,
    // and use |tr D|/4 = 1 - tr(G0^2)/8 + O(G^4) with G0 traceless.
    let phase = tr / tr.norm();
    let inv = phase.conj();
    let mut em = [[czero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            em[i][j] = inv * d[i][j];
            if i == j {
                em[i][j] -= Complex64::new(1.0, 0.0);
            }
        }
    }
    // G = i (E - E^dag) / 2, then remove the trace.
    let ed = mat4_dagger(&em);
    let mut g = [[czero(); 4]; 4];
    let i_c = Complex64::new(0.0, 1.0);
    for r in 0..4 {
        for c in 0..4 {
            g[r][c] = i_c * (em[r][c] - ed[r][c]) * 0.5;
        }
    }
    let gtr = mat4_trace(&g) / 4.0;
    for (r, row) in g.iter_mut().enumerate() {
        row[r] -= gtr;
    }
    let mut norm_sq = 0.0;
    for row in &g {
        for v in row {
            norm_sq += v.norm_sqr();
        }
    }
    norm_sq / 8.0
}

/// Index labels of the 15 product operators, `H_uv = 2 H_u (x) H_v`.
pub const BASIS_LABELS: [&str; 15] = [
    "x1", "y1", "z1", "1x", "1y", "1z", "xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz",
];

/// The product-operator basis as dense matrices, in [`BASIS_LABELS`] order.
pub struct ProductOperatorBasis {
    pub mats: Vec<CMat4>,
}

fn pauli_half(which: usize) -> [[Complex64; 2]; 2] {
    let z = czero();
    match which {
        0 => [[Complex64::new(0.5, 0.0), z], [z, Complex64::new(0.5, 0.0)]], // H_1
        1 => [[z, Complex64::new(0.5, 0.0)], [Complex64::new(0.5, 0.0), z]], // Hx
        2 => [[z, Complex64::new(0.0, -0.5)], [Complex64::new(0.0, 0.5), z]], // Hy
        _ => [[Complex64::new(0.5, 0.0), z], [z, Complex64::new(-0.5, 0.0)]], // Hz
    }
}

fn kron_raw(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> CMat4 {
    let mut out = [[czero(); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

impl ProductOperatorBasis {
    pub fn new() -> Self {
        let mut mats = Vec::with_capacity(15);
        // Singles first (x1, y1, z1, 1x, 1y, 1z), then the 9 doubles in
        // (x,y,z) x (x,y,z) order, matching BASIS_LABELS.
        for u in 1..4 {
            let m = kron_raw(&pauli_half(u), &pauli_half(0));
            mats.push(scale2(m));
        }
        for v in 1..4 {
            let m = kron_raw(&pauli_half(0), &pauli_half(v));
            mats.push(scale2(m));
        }
        for u in 1..4 {
            for v in 1..4 {
                let m = kron_raw(&pauli_half(u), &pauli_half(v));
                mats.push(scale2(m));
            }
        }
        Self { mats }
    }

    /// Coefficients of a (skew-)Hermitian matrix in the orthonormal basis.
    pub fn project(&self, g: &CMat4) -> Vec<Complex64> {
        self.mats.iter().map(|m| hs_inner4(m, g)).collect()
    }
}

impl Default for ProductOperatorBasis {
    fn default() -> Self {
        Self::new()
    }
}

fn scale2(mut m: CMat4) -> CMat4 {
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v *= 2.0;
        }
    }
    m
}

/// Ising evolution `exp(-i theta H_zz)`: diagonal phases
/// `(e^{-i t/2}, e^{i t/2}, e^{i t/2}, e^{-i t/2})`.
pub fn u_zz(theta: f64) -> Unitary4 {
    let mut e = [[czero(); 4]; 4];
    let minus = Complex64::from_polar(1.0, -0.5 * theta);
    let plus = Complex64::from_polar(1.0, 0.5 * theta);
    e[0][0] = minus;
    e[1][1] = plus;
    e[2][2] = plus;
    e[3][3] = minus;
    Unitary4::from_entries_unchecked(e)
}

/// Single-qubit rotation embedded on qubit 1 or 2.
pub fn local(qubit: u8, theta: f64, phi: f64) -> Unitary4 {
    let r = rotation(theta, phi);
    let id = Unitary2::identity();
    let e = match qubit {
        1 => kron(&r, &id),
        _ => kron(&id, &r),
    };
    Unitary4::from_entries_unchecked(e)
}

/// `K_x = R1(pi/2, 0) R2(pi/2, 0)` and `K_y = R1(pi/2, pi/2) R2(pi/2, pi/2)`,
/// the conjugations turning `U_zz` into `U_yy` and `U_xx`.
pub fn k_x() -> Unitary4 {
    local(1, 0.5 * std::f64::consts::PI, 0.0).mul(&local(2, 0.5 * std::f64::consts::PI, 0.0))
}

pub fn k_y() -> Unitary4 {
    local(1, 0.5 * std::f64::consts::PI, 0.5 * std::f64::consts::PI)
        .mul(&local(2, 0.5 * std::f64::consts::PI, 0.5 * std::f64::consts::PI))
}

/// Commuting nonlocal core `A = U_xx(axx) U_yy(ayy) U_zz(azz)` built from
/// the printed conjugations of `U_zz`.
pub fn cartan_a(axx: f64, ayy: f64, azz: f64) -> Unitary4 {
    let ky = k_y();
    let kx = k_x();
    let uxx = ky.mul(&u_zz(axx)).mul(&ky.dagger());
    let uyy = kx.dagger().mul(&u_zz(ayy)).mul(&kx);
    uxx.mul(&uyy).mul(&u_zz(azz))
}

/// Local layer: independent axis-angle rotations on the two qubits.
pub fn local_layer(v1: crate::su2::AlgebraVec3, v2: crate::su2::AlgebraVec3) -> Unitary4 {
    Unitary4::from_entries_unchecked(kron(&crate::su2::exp_su2(v1), &crate::su2::exp_su2(v2)))
}

/// KAK synthesis `U = K2 A K1` from local layers and the nonlocal core.
/// (Synthesis direction only; this does not factor arbitrary gates.)
pub fn kak_synthesize(
    k2: (crate::su2::AlgebraVec3, crate::su2::AlgebraVec3),
    a: (f64, f64, f64),
    k1: (crate::su2::AlgebraVec3, crate::su2::AlgebraVec3),
) -> Unitary4 {
    local_layer(k2.0, k2.1)
        .mul(&cartan_a(a.0, a.1, a.2))
        .mul(&local_layer(k1.0, k1.1))
}

/// Ising-frame rotation
/// `cal_R(theta, phi) = R1^dag(phi, 0) U_zz(theta) R1(phi, 0)
///  = exp(-i theta (cos(phi) H_zz + sin(phi) H_yz))`.
pub fn cal_r(theta: f64, phi: f64) -> Unitary4 {
    let r1 = local(1, phi, 0.0);
    r1.dagger().mul(&u_zz(theta)).mul(&r1)
}

/// Imperfect Ising block `V_zz(theta) = U_zz(theta (1 + eps_j))`.
pub fn v_zz(theta: f64, eps_j: f64) -> Unitary4 {
    u_zz(theta * (1.0 + eps_j))
}

fn cal_m(theta: f64, phi: f64, eps_j: f64) -> Unitary4 {
    let r1 = local(1, phi, 0.0);
    r1.dagger().mul(&v_zz(theta, eps_j)).mul(&r1)
}

/// B2-J: the Wimperis broadband pattern transplanted onto the Ising
/// subalgebra, with exact single-qubit conjugations and `eps_j`-deformed
/// couplings. Equals `u_zz(theta)` up to third order in `eps_j`.
pub fn b2j(theta: f64, eps_j: f64) -> Result<Unitary4> {
    if theta.abs() > 4.0 * std::f64::consts::PI + 1e-12 {
        return Err(Error::ThetaOutOfRange { theta, max: 4.0 * std::f64::consts::PI });
    }
    let phi = (-theta / (4.0 * std::f64::consts::PI)).acos();
    let u = cal_m(theta, 0.0, eps_j);
    let u = cal_m(std::f64::consts::PI, phi, eps_j).mul(&u);
    let u = cal_m(2.0 * std::f64::consts::PI, 3.0 * phi, eps_j).mul(&u);
    Ok(cal_m(std::f64::consts::PI, phi, eps_j).mul(&u))
}

/// Imperfect single-qubit B2 block on qubit 1 for the target `R(x, 0)` (or
/// its inverse `R(x, pi)` when `inverse` is set), built from
/// amplitude-deformed pulses.
///
/// The inverse is a phase-advanced B2 train of its own, not the reversed
/// dagger of the forward train: a literal dagger would make the conjugation
/// exactly amplitude-immune (any unitary `b` gives `(b^dag sz b)^2 = 1` and
/// the 2 pi Ising block is scalar), whereas independently compensated
/// inverses leave the third-order residue the scaling claim refers to.
fn b2_block_q1(x: f64, eps_a: f64, inverse: bool) -> Result<Unitary4> {
    let seq = crate::sequences::wimperis(crate::sequences::WimperisKind::B2, x)?;
    let shift = if inverse { std::f64::consts::PI } else { 0.0 };
    let mut u = Unitary4::identity();
    for p in &seq.pulses {
        u = local(1, p.theta * (1.0 + eps_a), p.phi + shift).mul(&u);
    }
    Ok(u)
}

/// B2-WJ: the B2-J pattern with every qubit-1 conjugation replaced by a B2
/// sequence of amplitude-deformed pulses. Scales as `O(eps_j^3)` at
/// `eps_a = 0` and `O(eps_a^3)` at `eps_j = 0`.
pub fn b2wj(theta: f64, eps_j: f64, eps_a: f64) -> Result<Unitary4> {
    if theta.abs() > 4.0 * std::f64::consts::PI + 1e-12 {
        return Err(Error::ThetaOutOfRange { theta, max: 4.0 * std::f64::consts::PI });
    }
    let phi = (-theta / (4.0 * std::f64::consts::PI)).acos();
    let mut u = v_zz(theta, eps_j);
    for (tzz, conj_angle) in [
        (std::f64::consts::PI, phi),
        (2.0 * std::f64::consts::PI, 3.0 * phi),
        (std::f64::consts::PI, phi),
    ] {
        u = b2_block_q1(conj_angle, eps_a, false)?.mul(&u);
        u = v_zz(tzz, eps_j).mul(&u);
        u = b2_block_q1(conj_angle, eps_a, true)?.mul(&u);
    }
    Ok(u)
}

/// Exponential of a generator inside the Ising su(2) subalgebra
/// `j = span{-i H_x1, -i H_yz, -i H_zz}`, with coordinates `(a, b, c)` on
/// `(H_x1, H_yz, H_zz)`: conjugates `u_zz` by the subgroup rotations that
/// map the iso-z axis onto the requested direction.
pub fn exp4_j(a: f64, b: f64, c: f64) -> Unitary4 {
    let r = (a * a + b * b + c * c).sqrt();
    if r == 0.0 {
        return Unitary4::identity();
    }
    // iso-z -> target: rotate about iso-y by beta, then about iso-x by omega.
    let omega = (-b).atan2(c);
    let beta = (a / r).asin();
    let wy = cal_r(beta, 0.5 * std::f64::consts::PI); // exp(-i beta J_y)
    let wx = local(1, omega, 0.0); // exp(-i omega J_x)
    let w = wx.mul(&wy);
    w.mul(&u_zz(r)).mul(&w.dagger())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::AlgebraVec3;
    use std::f64::consts::PI;

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
    }

    #[test]
    fn basis_is_orthonormal() {
        let basis = ProductOperatorBasis::new();
        for (i, a) in basis.mats.iter().enumerate() {
            for (j, b) in basis.mats.iter().enumerate() {
                let g = hs_inner4(a, b);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g.re - want).abs() < 1e-14 && g.im.abs() < 1e-14,
                    "gram[{i}][{j}] = {g}"
                );
            }
        }
    }

    #[test]
    fn cartan_bracket_closure() {
        // k = singles (first 6), m = doubles (last 9):
        // [k,k] in k, [m,k] in m, [m,m] in k.
        let basis = ProductOperatorBasis::new();
        let proj_residual = |g: &CMat4, keep: std::ops::Range<usize>| -> f64 {
            let coeffs = basis.project(g);
            let mut out = 0.0f64;
            for (idx, c) in coeffs.iter().enumerate() {
                if !keep.contains(&idx) {
                    out += c.norm_sqr();
                }
            }
            out.sqrt()
        };
        for i in 0..6 {
            for j in 0..6 {
                let c = mat4_commutator(&basis.mats[i], &basis.mats[j]);
                assert!(proj_residual(&c, 0..6) < 1e-12, "[k,k] leak at {i},{j}");
            }
        }
        for i in 6..15 {
            for j in 0..6 {
                let c = mat4_commutator(&basis.mats[i], &basis.mats[j]);
                assert!(proj_residual(&c, 6..15) < 1e-12, "[m,k] leak at {i},{j}");
            }
        }
        for i in 6..15 {
            for j in 6..15 {
                let c = mat4_commutator(&basis.mats[i], &basis.mats[j]);
                assert!(proj_residual(&c, 0..6) < 1e-12, "[m,m] leak at {i},{j}");
            }
        }
    }

    #[test]
    fn u_zz_diagonal_and_abelian() {
        let u = u_zz(0.0);
        assert!(u.frobenius_distance(&Unitary4::identity()) < 1e-15);
        let t = 0.9;
        let u = u_zz(t);
        let e = u.entries();
        assert_close(e[0][0].arg(), -t / 2.0, 1e-15, "phase 00");
        assert_close(e[1][1].arg(), t / 2.0, 1e-15, "phase 11");
        assert_close(e[2][2].arg(), t / 2.0, 1e-15, "phase 22");
        assert_close(e[3][3].arg(), -t / 2.0, 1e-15, "phase 33");
        let sum = u_zz(0.4).mul(&u_zz(0.5));
        assert!(sum.frobenius_distance(&u_zz(0.9)) < 1e-14);
    }

    #[test]
    fn locals_commute_across_qubits() {
        let a = local(1, 1.2, 0.3);
        let b = local(2, 0.7, -0.9);
        assert!(a.mul(&b).frobenius_distance(&b.mul(&a)) < 1e-14);
        assert!(local(1, 0.0, 0.4).frobenius_distance(&Unitary4::identity()) < 1e-15);
    }

    #[test]
    fn cartan_a_identity_and_conjugation() {
        assert!(cartan_a(0.0, 0.0, 0.0).frobenius_distance(&Unitary4::identity()) < 1e-13);
        // Order independence of the commuting factors.
        let a = cartan_a(0.3, 0.0, 0.7);
        let ky = k_y();
        let uxx = ky.mul(&u_zz(0.3)).mul(&ky.dagger());
        let alt = u_zz(0.7).mul(&uxx);
        assert!(a.frobenius_distance(&alt) < 1e-12);
    }

    #[test]
    fn kak_layers_are_unitary_and_local() {
        let u = kak_synthesize(
            (AlgebraVec3::new(0.1, 0.7, -0.2), AlgebraVec3::new(1.0, 0.0, 0.3)),
            (0.4, -0.2, 0.9),
            (AlgebraVec3::new(-0.5, 0.2, 0.2), AlgebraVec3::new(0.0, 0.8, -0.1)),
        );
        let defect = mat4_frobenius(&mat4_sub(
            &mat4_mul(&mat4_dagger(u.entries()), u.entries()),
            &mat4_identity(),
        ));
        assert!(defect < 1e-12);
        // All-identity parameters collapse.
        let id = kak_synthesize(
            (AlgebraVec3::ZERO, AlgebraVec3::ZERO),
            (0.0, 0.0, 0.0),
            (AlgebraVec3::ZERO, AlgebraVec3::ZERO),
        );
        assert!(id.frobenius_distance(&Unitary4::identity()) < 1e-13);
    }

    #[test]
    fn cal_r_matches_subalgebra_exponential() {
        for (theta, phi) in [(0.7, 0.0), (1.3, 0.9), (2.0 * PI, 0.4)] {
            let direct = cal_r(theta, phi);
            let via_j = exp4_j(0.0, theta * phi.sin(), theta * phi.cos());
            assert!(
                direct.frobenius_distance(&via_j) < 1e-12,
                "theta {theta} phi {phi}: {}",
                direct.frobenius_distance(&via_j)
            );
        }
        // phi = 0 reduces to the bare Ising gate.
        assert!(cal_r(0.8, 0.0).frobenius_distance(&u_zz(0.8)) < 1e-14);
        // Full turn inside the subgroup is -identity.
        let full = cal_r(2.0 * PI, 0.3);
        let minus: CMat4 = {
            let mut m = mat4_identity();
            for (i, row) in m.iter_mut().enumerate() {
                row[i] *= -1.0;
            }
            m
        };
        assert!(mat4_frobenius(&mat4_sub(full.entries(), &minus)) < 1e-13);
    }

    #[test]
    fn subalgebra_brackets_are_su2() {
        // [J_x, J_y] = i J_z and cyclic, with J = (H_x1, H_yz, H_zz).
        let basis = ProductOperatorBasis::new();
        let jx = basis.mats[0]; // x1
        let jy = basis.mats[11]; // yz
        let jz = basis.mats[14]; // zz
        let pairs = [(jx, jy, jz), (jy, jz, jx), (jz, jx, jy)];
        for (a, b, c) in pairs {
            let com = mat4_commutator(&a, &b);
            let mut want = c;
            for row in want.iter_mut() {
                for v in row.iter_mut() {
                    *v *= Complex64::new(0.0, 1.0);
                }
            }
            assert!(mat4_frobenius(&mat4_sub(&com, &want)) < 1e-12);
        }
    }

    #[test]
    fn b2j_collapses_and_uses_b2_phase() {
        let theta = PI;
        let u = b2j(theta, 0.0).unwrap();
        assert!(fidelity4(&u_zz(theta), &u) > 1.0 - 1e-12);
        let phi = (-theta / (4.0 * PI)).acos();
        assert_close(phi, (-0.25f64).acos(), 1e-15, "phase");
    }

    #[test]
    fn b2j_suppresses_coupling_error() {
        let theta = PI;
        let eps = 0.1;
        let bare = infidelity4(&u_zz(theta), &v_zz(theta, eps));
        let comp = infidelity4(&u_zz(theta), &b2j(theta, eps).unwrap());
        assert!(comp < 1e-3 * bare, "{comp} vs {bare}");
    }

    #[test]
    fn b2wj_collapses_and_improves_on_bare() {
        let theta = PI;
        let u = b2wj(theta, 0.0, 0.0).unwrap();
        assert!(fidelity4(&u_zz(theta), &u) > 1.0 - 1e-12);
        let both = b2wj(theta, 0.1, 0.1).unwrap();
        let bare = infidelity4(&u_zz(theta), &v_zz(theta, 0.1));
        let comp = infidelity4(&u_zz(theta), &both);
        assert!(comp < bare, "{comp} vs {bare}");
    }

    #[test]
    fn infidelity4_accurate_for_tiny_errors() {
        let u = u_zz(1.0);
        let v = u_zz(1.0 + 1e-9);
        let inf = infidelity4(&u, &v);
        // G = (eps/2) H_zz-like diag; infidelity = eps^2/8 in this basis.
        let want = (1e-9f64 / 2.0).powi(2) / 2.0;
        assert!((inf / want - 1.0).abs() < 1e-5, "{inf} vs {want}");
    }

    #[test]
    fn serialization_round_trip() {
        let u = cal_r(0.7, 0.3);
        let s = serde_json::to_string(&u).unwrap();
        let back: Unitary4 = serde_json::from_str(&s).unwrap();
        assert!(u.frobenius_distance(&back) < 1e-9);
    }
}

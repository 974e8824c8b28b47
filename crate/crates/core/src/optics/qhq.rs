//! Quarter–half–quarter plate sequences.
//!
//! On the Bloch sphere a plate at angle θ rotates about `(sin 2θ, 0, cos 2θ)`
//! (π/2 for a QWP, π for a HWP). Commuting the rotations through each other
//! collapses the sequence into a Y–X–Y Euler product:
//!
//! ```text
//! QWP(α)·HWP(β)·QWP(γ)  ≅  R_y(2α) · R_x(4β − 2α − 2γ) · R_y(−2γ)
//! ```
//!
//! so any SU(2) element (any unitary up to global phase) is reachable, and the
//! angles follow from a closed-form Euler extraction.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::waveplate::{jones_hwp, jones_qwp};
use crate::error::Result;
use crate::state::{bloch_rotation, check_unitary, phase_distance, Jones, UNITARY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QhqAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl QhqAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn unitary(&self) -> Jones {
        qhq_unitary(self.alpha, self.beta, self.gamma)
    }

    pub fn to_degrees(&self) -> [f64; 3] {
        [
            self.alpha.to_degrees(),
            self.beta.to_degrees(),
            self.gamma.to_degrees(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QhqDecomposition {
    pub angles: QhqAngles,
    /// `min_φ ‖U − e^{iφ}·QHQ(angles)‖_F`
    pub residual: f64,
}

/// `QWP(α)·HWP(β)·QWP(γ)`; the rightmost plate acts first, so a photon
/// crosses the γ plate, then β, then α.
pub fn qhq_unitary(alpha: f64, beta: f64, gamma: f64) -> Jones {
    jones_qwp(alpha) * jones_hwp(beta) * jones_qwp(gamma)
}

/// Finds plate angles in `[0, π)` reproducing `u` up to global phase.
pub fn qhq_decompose(u: &Jones) -> Result<QhqDecomposition> {
    check_unitary(u, UNITARY_TOL)?;
    let m = bloch_rotation(u);
    let mut best: Option<QhqDecomposition> = None;
    for (a, b, c) in euler_yxy(&m) {
        let angles = QhqAngles::new(
            (a / 2.0).rem_euclid(PI),
            ((b + a - c) / 4.0).rem_euclid(PI),
            (-c / 2.0).rem_euclid(PI),
        );
        let residual = phase_distance(u, &angles.unitary());
        if best.map_or(true, |b| residual < b.residual) {
            best = Some(QhqDecomposition { angles, residual });
        }
    }
    let mut best = best.expect("at least one Euler candidate");
    if best.residual > 1e-12 {
        best = polish(u, best);
    }
    Ok(best)
}

/// Candidate `(a, b, c)` with `m = R_y(a)·R_x(b)·R_y(c)`. Near gimbal lock
/// (`b ≈ 0` or `π`) only `a ± c` is determined, so the degenerate solutions
/// are offered alongside the generic one.
fn euler_yxy(m: &Matrix3<f64>) -> Vec<(f64, f64, f64)> {
    let s = (m[(0, 1)].powi(2) + m[(2, 1)].powi(2)).sqrt();
    let b = s.atan2(m[(1, 1)]);
    let mut out = Vec::with_capacity(2);
    if s > 1e-12 {
        let a = m[(0, 1)].atan2(m[(2, 1)]);
        let c = m[(1, 0)].atan2(-m[(1, 2)]);
        out.push((a, b, c));
    }
    if s < 1e-6 {
        if m[(1, 1)] > 0.0 {
            out.push((m[(0, 2)].atan2(m[(0, 0)]), 0.0, 0.0));
        } else {
            out.push(((-m[(2, 0)]).atan2(m[(0, 0)]), PI, 0.0));
        }
    }
    out
}

/// Gauss–Newton refinement on the real and imaginary parts of
/// `U − e^{iφ}·QHQ(θ)`, used only when the closed form loses precision.
fn polish(u: &Jones, start: QhqDecomposition) -> QhqDecomposition {
    let residual_vec = |x: &[f64; 3]| -> [f64; 8] {
        let v = qhq_unitary(x[0], x[1], x[2]);
        let overlap = (v.adjoint() * u).trace();
        let ph = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            1.0.into()
        };
        let d = u - v * ph;
        let mut r = [0.0; 8];
        for (k, z) in d.iter().enumerate() {
            r[2 * k] = z.re;
            r[2 * k + 1] = z.im;
        }
        r
    };
    let mut x = [start.angles.alpha, start.angles.beta, start.angles.gamma];
    let mut best = start;
    for _ in 0..50 {
        let r0 = residual_vec(&x);
        let h = 1e-7;
        let mut jac = nalgebra::SMatrix::<f64, 8, 3>::zeros();
        for j in 0..3 {
            let mut xp = x;
            xp[j] += h;
            let mut xm = x;
            xm[j] -= h;
            let (rp, rm) = (residual_vec(&xp), residual_vec(&xm));
            for i in 0..8 {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let r = nalgebra::SVector::<f64, 8>::from_column_slice(&r0);
        let jt = jac.transpose();
        let normal = jt * jac + nalgebra::Matrix3::identity() * 1e-14;
        let Some(step) = normal.lu().solve(&(jt * r)) else {
            break;
        };
        for j in 0..3 {
            x[j] -= step[j];
        }
        let angles = QhqAngles::new(
            x[0].rem_euclid(PI),
            x[1].rem_euclid(PI),
            x[2].rem_euclid(PI),
        );
        let residual = phase_distance(u, &angles.unitary());
        if residual < best.residual {
            best = QhqDecomposition { angles, residual };
        }
        if best.residual < 1e-13 {
            break;
        }
    }
    best
}

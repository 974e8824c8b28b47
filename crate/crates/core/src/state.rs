//! Single-qubit polarization states, their Bloch-sphere picture, and 2×2
//! density matrices.
//!
//! The computational basis is identified with linear polarization:
//! `|0⟩ ≡ |H⟩`, `|1⟩ ≡ |V⟩`. Bloch coordinates follow
//! `(2·Re(α*β), 2·Im(α*β), |α|² − |β|²)`, which places `|D⟩` on +x,
//! `|−i⟩ = (|H⟩ − i|V⟩)/√2` on −y and `|H⟩` on +z.

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A 2×2 Jones matrix acting on `(H, V)` amplitudes.
pub type Jones = Matrix2<C64>;

pub const NORM_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

pub(crate) const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry-wise deviation of `m·m†` from the identity.
pub fn unitarity_deviation(m: &Jones) -> f64 {
    let p = m * m.adjoint() - Jones::identity();
    p.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn check_unitary(m: &Jones, tol: f64) -> Result<()> {
    let deviation = unitarity_deviation(m);
    if deviation > tol || !deviation.is_finite() {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(())
}

/// `min_φ ‖a − e^{iφ} b‖_F`: distance between two matrices up to a global
/// phase. Evaluated entry-wise so it stays accurate far below √ε.
pub fn phase_distance(a: &Jones, b: &Jones) -> f64 {
    let overlap: C64 = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    (a - b * phase).norm()
}

/// Draws a Haar-random 2×2 unitary: a uniform point on S³ gives SU(2),
/// multiplied by a uniform global phase.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> Jones {
    let mut q = [0.0f64; 4];
    loop {
        for x in q.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            q.iter_mut().for_each(|x| *x /= n);
            break;
        }
    }
    let a = c(q[0], q[1]);
    let b = c(q[2], q[3]);
    let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    Jones::new(a, -b.conj(), b, a.conj()) * phase
}

/// Pure polarization state `α|H⟩ + β|V⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationState {
    #[serde(rename = "h")]
    pub alpha: C64,
    #[serde(rename = "v")]
    pub beta: C64,
}

impl PolarizationState {
    pub const H: Self = Self {
        alpha: c(1.0, 0.0),
        beta: c(0.0, 0.0),
    };
    pub const V: Self = Self {
        alpha: c(0.0, 0.0),
        beta: c(1.0, 0.0),
    };

    /// Builds a state, rejecting amplitudes that are not normalized to 1e-12.
    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let s = Self { alpha, beta };
        s.check_normalized()?;
        Ok(s)
    }

    /// Builds a state from arbitrary non-zero amplitudes, normalizing them.
    pub fn normalized(alpha: C64, beta: C64) -> Result<Self> {
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n * n });
        }
        Ok(Self {
            alpha: alpha / n,
            beta: beta / n,
        })
    }

    pub fn diagonal() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: c(s, 0.0),
            beta: c(s, 0.0),
        }
    }

    pub fn antidiagonal() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: c(s, 0.0),
            beta: c(-s, 0.0),
        }
    }

    /// `(|H⟩ + i|V⟩)/√2`
    pub fn plus_i() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: c(s, 0.0),
            beta: c(0.0, s),
        }
    }

    /// `(|H⟩ − i|V⟩)/√2`
    pub fn minus_i() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: c(s, 0.0),
            beta: c(0.0, -s),
        }
    }

    /// Linear polarization at `angle` radians from horizontal.
    pub fn linear(angle: f64) -> Self {
        Self {
            alpha: c(angle.cos(), 0.0),
            beta: c(angle.sin(), 0.0),
        }
    }

    /// Uniformly distributed pure state (Haar measure on CP¹).
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let u = haar_unitary(rng);
        Self {
            alpha: u[(0, 0)],
            beta: u[(1, 0)],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(())
    }

    pub fn to_vector(&self) -> nalgebra::Vector2<C64> {
        nalgebra::Vector2::new(self.alpha, self.beta)
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> C64 {
        self.alpha.conj() * other.alpha + self.beta.conj() * other.beta
    }

    /// True when both states describe the same ray, i.e. `|⟨a|b⟩| = 1`
    /// within `tol`.
    pub fn same_ray(&self, other: &Self, tol: f64) -> bool {
        (1.0 - self.inner(other).norm()).abs() <= tol
    }

    pub fn projector(&self) -> DensityMatrix2 {
        let v = self.to_vector();
        DensityMatrix2 { m: v * v.adjoint() }
    }
}

/// `J·ψ`, rejecting non-unitary `J`. The result is renormalized when
/// floating-point drift exceeds 1e-12.
pub fn apply_jones(psi: &PolarizationState, j: &Jones) -> Result<PolarizationState> {
    psi.check_normalized()?;
    check_unitary(j, UNITARY_TOL)?;
    let v = j * psi.to_vector();
    let out = PolarizationState {
        alpha: v[0],
        beta: v[1],
    };
    if (out.norm_sqr() - 1.0).abs() > NORM_TOL {
        return PolarizationState::normalized(out.alpha, out.beta);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Rescaled onto the unit sphere; the zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            Self::new(self.x / n, self.y / n, self.z / n)
        } else {
            *self
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_vector3(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self.to_vector3() - other.to_vector3()).norm()
    }
}

pub fn bloch_from_state(psi: &PolarizationState) -> Result<BlochVector> {
    psi.check_normalized()?;
    // dividing by ⟨ψ|ψ⟩ cancels the rounding in amplitudes like 1/√2
    let (a2, b2) = (psi.alpha.norm_sqr(), psi.beta.norm_sqr());
    let n = a2 + b2;
    let cross = psi.alpha.conj() * psi.beta;
    Ok(BlochVector {
        x: 2.0 * cross.re / n,
        y: 2.0 * cross.im / n,
        z: (a2 - b2) / n,
    })
}

/// Inverse of [`bloch_from_state`] for points on the sphere, choosing a real
/// non-negative `α`.
pub fn state_from_bloch(b: &BlochVector) -> Result<PolarizationState> {
    let n = b.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm_sqr: n * n });
    }
    let theta = (b.z / n).clamp(-1.0, 1.0).acos();
    let phi = b.y.atan2(b.x);
    PolarizationState::normalized(
        c((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    )
}

/// Rotation of the Bloch sphere induced by `u`: `R_ij = ½ tr(σ_i u σ_j u†)`.
pub fn bloch_rotation(u: &Jones) -> Matrix3<f64> {
    let paulis = pauli_matrices();
    let ud = u.adjoint();
    Matrix3::from_fn(|i, j| 0.5 * (paulis[i] * u * paulis[j] * ud).trace().re)
}

pub fn pauli_matrices() -> [Jones; 3] {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        Jones::new(o, l, l, o),
        Jones::new(o, -i, i, o),
        Jones::new(l, o, o, -l),
    ]
}

/// Single-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix2 {
    pub m: Jones,
}

impl DensityMatrix2 {
    const TOL: f64 = 1e-10;

    /// Validates Hermiticity, unit trace and positivity (each to 1e-10).
    pub fn new(m: Jones) -> Result<Self> {
        let herm = (m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > Self::TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > Self::TOL || tr.im.abs() > Self::TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} ≠ 1")));
        }
        let rho = Self { m };
        let (lo, _) = rho.eigenvalues();
        if lo < -Self::TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {lo:e}"
            )));
        }
        Ok(rho)
    }

    /// `ρ = (I + s·σ)/2`. Vectors longer than 1 (finite-sample estimates)
    /// have their negative eigenvalue clipped to zero and the trace
    /// renormalized, which projects `s` back onto the unit sphere.
    pub fn from_stokes(s: [f64; 3]) -> Self {
        let mut v = Vector3::from(s);
        let n = v.norm();
        if n > 1.0 {
            v /= n;
        }
        let p = pauli_matrices();
        let m = (Jones::identity() + p[0] * c(v.x, 0.0) + p[1] * c(v.y, 0.0) + p[2] * c(v.z, 0.0))
            * c(0.5, 0.0);
        Self { m }
    }

    pub fn maximally_mixed() -> Self {
        Self::from_stokes([0.0; 3])
    }

    pub fn stokes(&self) -> [f64; 3] {
        let p = pauli_matrices();
        [
            (p[0] * self.m).trace().re,
            (p[1] * self.m).trace().re,
            (p[2] * self.m).trace().re,
        ]
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Eigenvalues in ascending order, `(1 ∓ |s|)/2`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.m.trace().re;
        let s = self.stokes();
        let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        ((tr - r) / 2.0, (tr + r) / 2.0)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.m - self.m.adjoint()).iter().all(|z| z.norm() <= tol)
    }

    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }
}

/// `⟨ψ|ρ|ψ⟩`, clamped into `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix2, psi: &PolarizationState) -> f64 {
    let v = psi.to_vector();
    let f = (v.adjoint() * rho.m * v)[(0, 0)].re;
    f.clamp(0.0, 1.0)
}

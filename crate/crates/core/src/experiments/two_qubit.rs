use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{c, Jones, PolarizationState, C64};

/// Local Pauli correction applied to one output qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
    XZ,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::XZ];

    pub fn matrix(self) -> Jones {
        let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
        match self {
            Pauli::I => Jones::new(o, z, z, o),
            Pauli::X => Jones::new(z, o, o, z),
            Pauli::Z => Jones::new(o, z, z, -o),
            // X·Z
            Pauli::XZ => Jones::new(z, -o, o, z),
        }
    }
}

/// Pure state of two polarization qubits, amplitudes over `HH, HV, VH, VV`
/// with the first qubit as the high bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitState {
    pub amplitudes: [C64; 4],
}

impl TwoQubitState {
    pub fn new(amplitudes: [C64; 4]) -> Self {
        Self { amplitudes }
    }

    pub fn product(a: &PolarizationState, b: &PolarizationState) -> Self {
        let (x, y) = (a.to_vector(), b.to_vector());
        Self::new([x[0] * y[0], x[0] * y[1], x[1] * y[0], x[1] * y[1]])
    }

    /// Ideal C-NOT output for control `c` and target `t`:
    /// `α|H⟩(γ|H⟩+δ|V⟩) + β|V⟩(γ|V⟩+δ|H⟩)`.
    pub fn cnot(control: &PolarizationState, target: &PolarizationState) -> Self {
        let (cv, tv) = (control.to_vector(), target.to_vector());
        Self::new([cv[0] * tv[0], cv[0] * tv[1], cv[1] * tv[1], cv[1] * tv[0]])
    }

    pub fn to_vector(&self) -> Vector4<C64> {
        Vector4::from_column_slice(&self.amplitudes)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !(n > 0.0) {
            return Err(Error::NotNormalized { norm_sqr: 0.0 });
        }
        Ok(Self::new(self.amplitudes.map(|a| a / n)))
    }

    /// Global phase removed: the largest amplitude (first on ties) is made
    /// real and positive.
    pub fn canonical(&self) -> Self {
        let mut k = 0;
        for i in 1..4 {
            if self.amplitudes[i].norm() > self.amplitudes[k].norm() + 1e-12 {
                k = i;
            }
        }
        let a = self.amplitudes[k];
        if a.norm() == 0.0 {
            return *self;
        }
        let ph = a.conj() / a.norm();
        let mut out = self.amplitudes.map(|x| x * ph);
        for x in &mut out {
            // rounding dust and -0 would only clutter reports
            if x.re.abs() < 1e-15 {
                x.re = 0.0;
            }
            if x.im.abs() < 1e-15 {
                x.im = 0.0;
            }
        }
        Self::new(out)
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `(a ⊗ b)·ψ`
    pub fn apply_local(&self, a: &Jones, b: &Jones) -> Self {
        let mut out = [C64::default(); 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i] += a[(i >> 1, j >> 1)] * b[(i & 1, j & 1)] * self.amplitudes[j];
            }
        }
        Self::new(out)
    }

    pub fn apply_correction(&self, pair: (Pauli, Pauli)) -> Self {
        self.apply_local(&pair.0.matrix(), &pair.1.matrix())
    }

    /// Concurrence `2|a_HH·a_VV − a_HV·a_VH|` of a normalized state.
    pub fn concurrence(&self) -> f64 {
        let a = &self.amplitudes;
        2.0 * (a[0] * a[3] - a[1] * a[2]).norm()
    }

    /// Dominant eigenvector of a 4×4 density matrix and its weight
    /// `λ_max / Tr ρ`.
    pub fn from_density(rho: &Matrix4<C64>) -> Result<(Self, f64)> {
        let tr = rho.trace().re;
        if !(tr > 0.0) {
            return Err(Error::NotNormalized { norm_sqr: tr });
        }
        let eig = rho.symmetric_eigen();
        let k = eig.eigenvalues.imax();
        let v = eig.eigenvectors.column(k);
        let state = Self::new([v[0], v[1], v[2], v[3]])
            .normalized()?
            .canonical();
        Ok((state, eig.eigenvalues[k] / tr))
    }
}

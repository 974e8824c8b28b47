//! Multi-photon states over discrete optical modes.
//!
//! A mode is a `(path, polarization)` pair. States are stored sparsely as a
//! map from occupation vectors (ordered like the registry) to amplitudes, so
//! a passive network acting on a handful of photons stays cheap even when
//! the registry spans dozens of modes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexSet;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Jones, PolarizationState, C64};

pub const MAX_PHOTONS: usize = 6;
pub const MAX_MODES: usize = 64;

/// Amplitudes below this magnitude are dropped after each transformation.
const PRUNE: f64 = 1e-15;
const IMPOSSIBLE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];

    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub path: String,
    pub pol: Pol,
}

impl ModeIndex {
    pub fn new(path: impl Into<String>, pol: Pol) -> Self {
        Self {
            path: path.into(),
            pol,
        }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{:?}", self.path, self.pol)
    }
}

/// Ordered set of modes; the order fixes the layout of occupation vectors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModeRegistry {
    modes: IndexSet<ModeIndex>,
}

impl ModeRegistry {
    pub fn new(modes: impl IntoIterator<Item = ModeIndex>) -> Result<Self> {
        let mut set = IndexSet::new();
        for m in modes {
            let label = m.to_string();
            if !set.insert(m) {
                return Err(Error::Registry(format!("duplicate mode {label}")));
            }
        }
        if set.len() > MAX_MODES {
            return Err(Error::Registry(format!(
                "{} modes exceed the maximum of {MAX_MODES}",
                set.len()
            )));
        }
        Ok(Self { modes: set })
    }

    /// Two modes (H then V) for each path, in the given order.
    pub fn from_paths<S: AsRef<str>>(paths: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(paths.into_iter().flat_map(|p| {
            let p = p.as_ref().to_string();
            [ModeIndex::new(p.clone(), Pol::H), ModeIndex::new(p, Pol::V)]
        }))
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn index_of(&self, mode: &ModeIndex) -> Option<usize> {
        self.modes.get_index_of(mode)
    }

    pub fn find(&self, path: &str, pol: Pol) -> Option<usize> {
        self.index_of(&ModeIndex::new(path, pol))
    }

    pub fn require(&self, path: &str, pol: Pol) -> Result<usize> {
        self.find(path, pol)
            .ok_or_else(|| Error::Registry(format!("mode {path}:{pol:?} not in registry")))
    }

    pub fn mode(&self, i: usize) -> &ModeIndex {
        &self.modes[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModeIndex> {
        self.modes.iter()
    }

    /// Both polarization modes of `path`, `[H, V]`.
    pub fn path_modes(&self, path: &str) -> Result<[usize; 2]> {
        Ok([self.require(path, Pol::H)?, self.require(path, Pol::V)?])
    }

    pub fn concat(&self, other: &ModeRegistry) -> Result<Self> {
        if let Some(m) = other.iter().find(|m| self.modes.contains(*m)) {
            return Err(Error::Registry(format!(
                "mode {m} present in both registries"
            )));
        }
        Self::new(self.iter().cloned().chain(other.iter().cloned()))
    }
}

pub type Occupation = Vec<u8>;

fn sqrt_factorial(n: u8) -> f64 {
    const TABLE: [f64; 7] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];
    TABLE
        .get(n as usize)
        .copied()
        .unwrap_or_else(|| (1..=n as u32).map(f64::from).product())
        .sqrt()
}

/// Sparse Fock-space state. Every stored occupation vector carries the same
/// photon number.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    registry: Arc<ModeRegistry>,
    amps: BTreeMap<Occupation, C64>,
}

impl FockState {
    pub fn vacuum(registry: Arc<ModeRegistry>) -> Self {
        let n = registry.len();
        let mut amps = BTreeMap::new();
        amps.insert(vec![0; n], C64::new(1.0, 0.0));
        Self { registry, amps }
    }

    pub fn from_terms(
        registry: Arc<ModeRegistry>,
        terms: impl IntoIterator<Item = (Occupation, C64)>,
    ) -> Result<Self> {
        let mut amps: BTreeMap<Occupation, C64> = BTreeMap::new();
        for (occ, a) in terms {
            if occ.len() != registry.len() {
                return Err(Error::Dimension(format!(
                    "occupation vector of length {} for a registry of {} modes",
                    occ.len(),
                    registry.len()
                )));
            }
            *amps.entry(occ).or_default() += a;
        }
        amps.retain(|_, a| a.norm() > PRUNE);
        let s = Self { registry, amps };
        s.check_photon_number()?;
        Ok(s)
    }

    /// Builds a state from terms written as products of creation operators:
    /// each term `(c, [m₁, m₂, …])` contributes `c · a†_{m₁} a†_{m₂} … |0⟩`.
    pub fn from_creations(
        registry: Arc<ModeRegistry>,
        terms: &[(C64, Vec<usize>)],
    ) -> Result<Self> {
        let n = registry.len();
        let mut out = Vec::with_capacity(terms.len());
        for (amp, ops) in terms {
            let mut occ = vec![0u8; n];
            for &m in ops {
                if m >= n {
                    return Err(Error::Dimension(format!("mode index {m} out of range")));
                }
                occ[m] += 1;
            }
            let norm: f64 = occ.iter().map(|&k| sqrt_factorial(k)).product();
            out.push((occ, amp * norm));
        }
        Self::from_terms(registry, out)
    }

    /// One photon on `path` carrying polarization `psi`.
    pub fn single_photon(
        registry: Arc<ModeRegistry>,
        path: &str,
        psi: &PolarizationState,
    ) -> Result<Self> {
        let [h, v] = registry.path_modes(path)?;
        Self::from_creations(registry, &[(psi.alpha, vec![h]), (psi.beta, vec![v])])
    }

    fn check_photon_number(&self) -> Result<()> {
        let mut n = None;
        for occ in self.amps.keys() {
            let k: usize = occ.iter().map(|&x| x as usize).sum();
            if k > MAX_PHOTONS {
                return Err(Error::TooManyPhotons {
                    photons: k,
                    max: MAX_PHOTONS,
                });
            }
            match n {
                None => n = Some(k),
                Some(prev) if prev != k => {
                    return Err(Error::Dimension(format!(
                        "mixed photon numbers {prev} and {k} in one state"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn photon_number(&self) -> usize {
        self.amps
            .keys()
            .next()
            .map(|o| o.iter().map(|&x| x as usize).sum())
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, &C64)> {
        self.amps.iter()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, occ: &[u8]) -> C64 {
        self.amps.get(occ).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            registry: self.registry.clone(),
            amps: self
                .amps
                .iter()
                .map(|(o, a)| (o.clone(), a * factor))
                .collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n < IMPOSSIBLE {
            return Err(Error::ImpossibleOutcome { probability: n });
        }
        Ok(self.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// Applies a passive linear-optical network: every creation operator
    /// `a†_j` becomes `Σ_k U_kj a†_k` and the products are expanded.
    pub fn apply(&self, u: &ModeUnitary) -> Result<FockState> {
        if *u.registry != *self.registry {
            return Err(Error::Dimension(
                "mode unitary and state use different registries".into(),
            ));
        }
        let columns = u.sparse_columns();
        let n = self.registry.len();
        let mut out: BTreeMap<Occupation, C64> = BTreeMap::new();
        for (occ, amp) in &self.amps {
            let norm: f64 = occ.iter().map(|&k| sqrt_factorial(k)).product();
            let mut partial: BTreeMap<Occupation, C64> = BTreeMap::new();
            partial.insert(vec![0u8; n], amp / norm);
            for (j, &count) in occ.iter().enumerate() {
                for _ in 0..count {
                    let mut next: BTreeMap<Occupation, C64> = BTreeMap::new();
                    for (mono, coeff) in &partial {
                        for &(k, ukj) in &columns[j] {
                            let mut m = mono.clone();
                            m[k] += 1;
                            *next.entry(m).or_default() += coeff * ukj;
                        }
                    }
                    partial = next;
                }
            }
            for (mono, coeff) in partial {
                let norm: f64 = mono.iter().map(|&k| sqrt_factorial(k)).product();
                *out.entry(mono).or_default() += coeff * norm;
            }
        }
        out.retain(|_, a| a.norm() > PRUNE);
        let mut result = FockState {
            registry: self.registry.clone(),
            amps: out,
        };
        let before = self.norm_sqr();
        let after = result.norm_sqr();
        if (after - before).abs() > 1e-12 && after > 0.0 {
            result = result.scaled(C64::new((before / after).sqrt(), 0.0));
        }
        Ok(result)
    }

    /// Unnormalized projection onto the occupation vectors that satisfy
    /// `pattern`; its squared norm is the outcome probability.
    pub fn project(&self, pattern: &Pattern) -> Result<FockState> {
        pattern.check(&self.registry)?;
        Ok(FockState {
            registry: self.registry.clone(),
            amps: self
                .amps
                .iter()
                .filter(|(o, _)| pattern.matches(o))
                .map(|(o, a)| (o.clone(), *a))
                .collect(),
        })
    }

    pub fn post_select(&self, pattern: &Pattern) -> Result<PostSelection> {
        let projected = self.project(pattern)?;
        let probability = projected.norm_sqr() / self.norm_sqr();
        if probability < IMPOSSIBLE {
            return Err(Error::ImpossibleOutcome { probability });
        }
        Ok(PostSelection {
            probability: probability.min(1.0),
            conditional: projected.normalized()?,
        })
    }

    /// Tensor product; the registries are concatenated and must not overlap.
    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        let registry = Arc::new(self.registry.concat(&other.registry)?);
        let mut terms = Vec::with_capacity(self.amps.len() * other.amps.len());
        for (oa, a) in &self.amps {
            for (ob, b) in &other.amps {
                let mut occ = oa.clone();
                occ.extend_from_slice(ob);
                terms.push((occ, a * b));
            }
        }
        FockState::from_terms(registry, terms)
    }

    /// `⟨self|other⟩`; both states must share a registry.
    pub fn inner(&self, other: &FockState) -> Result<C64> {
        if *self.registry != *other.registry {
            return Err(Error::Dimension(
                "inner product across different registries".into(),
            ));
        }
        Ok(self
            .amps
            .iter()
            .filter_map(|(o, a)| other.amps.get(o).map(|b| a.conj() * b))
            .sum())
    }

    /// Re-expresses the state over a larger registry containing every mode
    /// of the current one.
    pub fn embed(&self, target: &Arc<ModeRegistry>) -> Result<FockState> {
        let map: Vec<usize> = self
            .registry
            .iter()
            .map(|m| {
                target.index_of(m).ok_or_else(|| {
                    Error::Registry(format!("mode {m} missing from target registry"))
                })
            })
            .collect::<Result<_>>()?;
        let terms = self.amps.iter().map(|(o, a)| {
            let mut occ = vec![0u8; target.len()];
            for (i, &k) in o.iter().enumerate() {
                occ[map[i]] = k;
            }
            (occ, *a)
        });
        FockState::from_terms(target.clone(), terms)
    }

    /// Total photon count on the given modes for one occupation vector.
    pub fn count_on(occ: &[u8], modes: &[usize]) -> u32 {
        modes.iter().map(|&m| occ[m] as u32).sum()
    }

    /// Reduced polarization density matrix of `path`, conditioned on the path
    /// holding exactly one photon. Returns the (unnormalized) 2×2 matrix;
    /// its trace is the probability of that condition.
    pub fn path_polarization(&self, path: &str) -> Result<Jones> {
        let [h, v] = self.registry.path_modes(path)?;
        // group amplitudes by the rest of the occupation vector
        let mut groups: BTreeMap<Occupation, [C64; 2]> = BTreeMap::new();
        for (occ, a) in &self.amps {
            if occ[h] as u32 + occ[v] as u32 != 1 {
                continue;
            }
            let mut rest = occ.clone();
            let slot = if occ[h] == 1 { 0 } else { 1 };
            rest[h] = 0;
            rest[v] = 0;
            groups.entry(rest).or_default()[slot] += a;
        }
        let mut rho = Jones::zeros();
        for amps in groups.values() {
            for i in 0..2 {
                for j in 0..2 {
                    rho[(i, j)] += amps[i] * amps[j].conj();
                }
            }
        }
        Ok(rho)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostSelection {
    pub probability: f64,
    pub conditional: FockState,
}

/// Occupation constraint: the listed modes must together hold exactly
/// `total` photons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub modes: Vec<usize>,
    pub total: u32,
}

/// Partial occupation constraint used for post-selection. An empty pattern
/// matches every occupation vector.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pattern {
    pub constraints: Vec<Constraint>,
}

impl Pattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn exactly(mut self, modes: impl IntoIterator<Item = usize>, total: u32) -> Self {
        self.constraints.push(Constraint {
            modes: modes.into_iter().collect(),
            total,
        });
        self
    }

    pub fn matches(&self, occ: &[u8]) -> bool {
        self.constraints
            .iter()
            .all(|c| FockState::count_on(occ, &c.modes) == c.total)
    }

    fn check(&self, registry: &ModeRegistry) -> Result<()> {
        for c in &self.constraints {
            if let Some(&m) = c.modes.iter().find(|&&m| m >= registry.len()) {
                return Err(Error::Dimension(format!("pattern mode {m} out of range")));
            }
        }
        Ok(())
    }
}

/// Unitary over a mode registry. Columns are indexed by input mode, rows by
/// output mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary {
    registry: Arc<ModeRegistry>,
    matrix: DMatrix<C64>,
}

impl ModeUnitary {
    pub const TOL: f64 = 1e-10;

    pub fn new(registry: Arc<ModeRegistry>, matrix: DMatrix<C64>) -> Result<Self> {
        let n = registry.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Dimension(format!(
                "{}×{} matrix for {n} modes",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let u = Self { registry, matrix };
        let deviation = u.unitarity_deviation();
        if deviation > Self::TOL || !deviation.is_finite() {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(u)
    }

    pub fn identity(registry: Arc<ModeRegistry>) -> Self {
        let n = registry.len();
        Self {
            registry,
            matrix: DMatrix::identity(n, n),
        }
    }

    /// Routes the two polarization modes of each `(input path, output path)`
    /// pair through a 2×2 block.
    ///
    /// `block[(out_k, in_j)]` gives the amplitude for a photon entering
    /// `inputs[j/2]` with polarization `j%2` to leave through
    /// `outputs[k/2]` with polarization `k%2`. The block must be unitary.
    /// Input and output modes are exchanged (`[[0, B†], [B, 0]]`), which is
    /// unitary and exact for feed-forward networks where output modes are
    /// empty when the component fires.
    pub fn routing(
        registry: Arc<ModeRegistry>,
        inputs: &[&str],
        outputs: &[&str],
        block: &DMatrix<C64>,
    ) -> Result<Self> {
        if inputs.len() != outputs.len() || block.nrows() != 2 * inputs.len() || !block.is_square()
        {
            return Err(Error::Dimension("routing block shape mismatch".into()));
        }
        let ins: Vec<usize> = inputs
            .iter()
            .map(|p| registry.path_modes(p))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let outs: Vec<usize> = outputs
            .iter()
            .map(|p| registry.path_modes(p))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let n = registry.len();
        let mut m = DMatrix::<C64>::identity(n, n);
        let touched: Vec<usize> = ins.iter().chain(outs.iter()).copied().collect();
        for &i in &touched {
            for &j in &touched {
                m[(i, j)] = C64::default();
            }
        }
        if ins.iter().any(|i| outs.contains(i)) {
            // in-place transformation (input path reused as output path)
            for (a, &i) in ins.iter().enumerate() {
                for (b, &o) in outs.iter().enumerate() {
                    m[(o, i)] = block[(b, a)];
                }
            }
        } else {
            for (a, &i) in ins.iter().enumerate() {
                for (b, &o) in outs.iter().enumerate() {
                    m[(o, i)] = block[(b, a)];
                    m[(i, o)] = block[(b, a)].conj();
                }
            }
        }
        Self::new(registry, m)
    }

    /// Convenience for single-path components acting as a Jones matrix.
    pub fn jones(
        registry: Arc<ModeRegistry>,
        input: &str,
        output: &str,
        j: &Jones,
    ) -> Result<Self> {
        let block = DMatrix::from_fn(2, 2, |r, c| j[(r, c)]);
        Self::routing(registry, &[input], &[output], &block)
    }

    pub fn haar_random<R: Rng + ?Sized>(registry: Arc<ModeRegistry>, rng: &mut R) -> Self {
        let n = registry.len();
        let g = DMatrix::<C64>::from_fn(n, n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 {
                d / d.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
        Self {
            registry,
            matrix: q,
        }
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.matrix.nrows();
        let p = &self.matrix * self.matrix.adjoint() - DMatrix::<C64>::identity(n, n);
        p.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self` followed by `next`, i.e. `next · self`.
    pub fn then(&self, next: &ModeUnitary) -> Result<ModeUnitary> {
        if *self.registry != *next.registry {
            return Err(Error::Dimension(
                "composing unitaries over different registries".into(),
            ));
        }
        Ok(ModeUnitary {
            registry: self.registry.clone(),
            matrix: &next.matrix * &self.matrix,
        })
    }

    fn sparse_columns(&self) -> Vec<Vec<(usize, C64)>> {
        let n = self.matrix.ncols();
        (0..n)
            .map(|j| {
                (0..n)
                    .filter_map(|k| {
                        let u = self.matrix[(k, j)];
                        (u.norm() > PRUNE).then_some((k, u))
                    })
                    .collect()
            })
            .collect()
    }
}

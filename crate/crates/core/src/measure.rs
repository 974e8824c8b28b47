//! Measurement statistics: projective law, tomography, coincidences and
//! correlation tests.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{jones_hwp, jones_qwp};
use crate::rng::PRNG_ID;
use crate::state::{bloch_rotation, DensityMatrix2, Jones, PolarizationState};

/// Per-detector and coincidence tallies of a sampled run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsTable {
    pub shots: u64,
    pub per_detector: BTreeMap<String, u64>,
    /// Shots on which two or more detectors clicked, keyed by the clicking
    /// detectors joined with `&` in scene order.
    pub coincidences: BTreeMap<String, u64>,
    /// Shots passing the one-and-only-one herald rule; absent when the scene
    /// defines no herald groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heralds: Option<u64>,
    pub seed: u64,
    pub prng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_hash: Option<String>,
}

/// What happened on one shot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotOutcome {
    pub shot: u64,
    /// Clicks per detector, in scene order.
    pub clicks: Vec<(String, u32)>,
    pub herald: Option<bool>,
}

impl ShotOutcome {
    /// Clicking detectors joined with `&`.
    pub fn pattern(&self) -> String {
        self.clicks
            .iter()
            .filter(|(_, n)| *n > 0)
            .map(|(d, _)| d.as_str())
            .collect::<Vec<_>>()
            .join("&")
    }
}

impl CountsTable {
    pub fn new<S: AsRef<str>>(detectors: &[S], heralded: bool, seed: u64) -> Self {
        Self {
            shots: 0,
            per_detector: detectors
                .iter()
                .map(|d| (d.as_ref().to_string(), 0))
                .collect(),
            coincidences: BTreeMap::new(),
            heralds: heralded.then_some(0),
            seed,
            prng: PRNG_ID.into(),
            scene_hash: None,
        }
    }

    pub fn record(&mut self, outcome: &ShotOutcome) {
        self.shots += 1;
        let mut clicking = 0;
        for (d, n) in &outcome.clicks {
            *self.per_detector.entry(d.clone()).or_default() += *n as u64;
            if *n > 0 {
                clicking += 1;
            }
        }
        if clicking >= 2 {
            *self.coincidences.entry(outcome.pattern()).or_default() += 1;
        }
        if let (Some(h), Some(true)) = (self.heralds.as_mut(), outcome.herald) {
            *h += 1;
        }
    }

    /// Adds another table's tallies (same detectors, disjoint shots).
    pub fn merge(&mut self, other: &CountsTable) {
        self.shots += other.shots;
        for (d, n) in &other.per_detector {
            *self.per_detector.entry(d.clone()).or_default() += n;
        }
        for (k, n) in &other.coincidences {
            *self.coincidences.entry(k.clone()).or_default() += n;
        }
        if let (Some(a), Some(b)) = (self.heralds.as_mut(), other.heralds) {
            *a += b;
        }
    }

    pub fn clicks(&self, detector: &str) -> u64 {
        self.per_detector.get(detector).copied().unwrap_or(0)
    }

    pub fn coincidence(&self, a: &str, b: &str) -> u64 {
        self.coincidences
            .get(&format!("{a}&{b}"))
            .or_else(|| self.coincidences.get(&format!("{b}&{a}")))
            .copied()
            .unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("counts serialize");
        s.push('\n');
        s
    }

    /// `#`-prefixed metadata lines, then `detector,clicks` rows, then
    /// coincidence rows whose first column starts with `coinc:`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# shots={}\n", self.shots));
        out.push_str(&format!("# seed={}\n", self.seed));
        out.push_str(&format!("# prng={}\n", self.prng));
        if let Some(h) = self.heralds {
            out.push_str(&format!("# heralds={h}\n"));
        }
        if let Some(hash) = &self.scene_hash {
            out.push_str(&format!("# scene_hash={hash}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["detector", "clicks"])
            .expect("in-memory write");
        for (d, n) in &self.per_detector {
            w.write_record([d.as_str(), &n.to_string()])
                .expect("in-memory write");
        }
        for (k, n) in &self.coincidences {
            w.write_record([format!("coinc:{k}"), n.to_string()])
                .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
        out
    }
}

/// `|⟨basis|ψ⟩|²`
pub fn projective_probability(psi: &PolarizationState, basis: &PolarizationState) -> Result<f64> {
    psi.check_normalized()?;
    basis.check_normalized()?;
    Ok(basis.inner(psi).norm_sqr().min(1.0))
}

/// Analysis plates in front of an HV splitter: the photon crosses the QWP,
/// then the HWP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerSetting {
    pub qwp: f64,
    pub hwp: f64,
}

impl AnalyzerSetting {
    pub fn new(qwp: f64, hwp: f64) -> Self {
        Self { qwp, hwp }
    }

    pub fn unitary(&self) -> Jones {
        jones_hwp(self.hwp) * jones_qwp(self.qwp)
    }

    /// Bloch axis `n` such that `P(H port) − P(V port) = n·s`.
    pub fn measured_axis(&self) -> Vector3<f64> {
        bloch_rotation(&self.unitary()).row(2).transpose()
    }

    /// `(P(H port), P(V port))`
    pub fn port_probabilities(&self, psi: &PolarizationState) -> (f64, f64) {
        let out = self.unitary() * psi.to_vector();
        let (h, v) = (out[0].norm_sqr(), out[1].norm_sqr());
        let n = h + v;
        (h / n, v / n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    H,
    V,
}

/// Born-samples the splitter port after the analysis plates.
pub fn measure_shot<R: Rng + ?Sized>(
    psi: &PolarizationState,
    analyzer: &AnalyzerSetting,
    rng: &mut R,
) -> Result<Port> {
    psi.check_normalized()?;
    let (h, _) = analyzer.port_probabilities(psi);
    Ok(if rng.random::<f64>() < h {
        Port::H
    } else {
        Port::V
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographySettings {
    pub settings: [AnalyzerSetting; 3],
}

impl Default for TomographySettings {
    fn default() -> Self {
        use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
        Self {
            settings: [
                AnalyzerSetting::new(0.0, 0.0),
                AnalyzerSetting::new(FRAC_PI_4, FRAC_PI_8),
                AnalyzerSetting::new(0.0, FRAC_PI_8),
            ],
        }
    }
}

/// Counts on the two splitter ports for one analyzer setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortCounts {
    pub h: f64,
    pub v: f64,
}

impl PortCounts {
    pub fn new(h: f64, v: f64) -> Self {
        Self { h, v }
    }

    pub fn from_table(table: &CountsTable, h_detector: &str, v_detector: &str) -> Self {
        Self {
            h: table.clicks(h_detector) as f64,
            v: table.clicks(v_detector) as f64,
        }
    }

    /// Exact port probabilities, as if infinitely many shots were taken.
    pub fn exact(psi: &PolarizationState, setting: &AnalyzerSetting) -> Self {
        let (h, v) = setting.port_probabilities(psi);
        Self { h, v }
    }
}

/// Inverts the three settings' port imbalances into a Stokes vector and
/// returns `ρ = (I + s·σ)/2`, clipped onto the Bloch ball when sampling noise
/// pushes `|s|` past 1.
pub fn tomography_reconstruct(
    counts: &[PortCounts; 3],
    settings: &TomographySettings,
) -> Result<DensityMatrix2> {
    let mut a = Matrix3::zeros();
    let mut d = Vector3::zeros();
    for (k, (c, s)) in counts.iter().zip(settings.settings.iter()).enumerate() {
        let total = c.h + c.v;
        if !(total > 0.0) {
            return Err(Error::InsufficientData(format!(
                "setting {} has no counts",
                k + 1
            )));
        }
        d[k] = (c.h - c.v) / total;
        a.set_row(k, &s.measured_axis().transpose());
    }
    let s = a.lu().solve(&d).ok_or_else(|| {
        Error::Configuration("tomography settings do not span the Bloch sphere".into())
    })?;
    Ok(DensityMatrix2::from_stokes([s.x, s.y, s.z]))
}

/// True iff every group holds exactly one click in total.
pub fn one_and_only_one<S: AsRef<str>>(clicks: &BTreeMap<String, u32>, groups: &[Vec<S>]) -> bool {
    groups.iter().all(|g| {
        g.iter()
            .map(|d| clicks.get(d.as_ref()).copied().unwrap_or(0))
            .sum::<u32>()
            == 1
    })
}

/// Two-group herald rule: one and only one click in each group.
pub fn coincidence_1ao1<S: AsRef<str>>(
    clicks: &BTreeMap<String, u32>,
    group_a: &[S],
    group_b: &[S],
) -> bool {
    let total = |g: &[S]| -> u32 {
        g.iter()
            .map(|d| clicks.get(d.as_ref()).copied().unwrap_or(0))
            .sum()
    };
    total(group_a) == 1 && total(group_b) == 1
}

/// Joint counts of two two-outcome analyzers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JointCounts {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl JointCounts {
    pub fn total(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }

    /// Reads the four `±&±` coincidences from a table.
    pub fn from_table(
        t: &CountsTable,
        a_plus: &str,
        a_minus: &str,
        b_plus: &str,
        b_minus: &str,
    ) -> Self {
        Self {
            pp: t.coincidence(a_plus, b_plus) as f64,
            pm: t.coincidence(a_plus, b_minus) as f64,
            mp: t.coincidence(a_minus, b_plus) as f64,
            mm: t.coincidence(a_minus, b_minus) as f64,
        }
    }
}

/// `E = (N₊₊ + N₋₋ − N₊₋ − N₋₊) / N`
pub fn correlation_e(c: &JointCounts) -> Result<f64> {
    let n = c.total();
    if !(n > 0.0) {
        return Err(Error::InsufficientData("no joint counts".into()));
    }
    Ok((c.pp + c.mm - c.pm - c.mp) / n)
}

/// `S = |E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)|`, arguments in that order.
pub fn chsh_value(e: [f64; 4]) -> f64 {
    (e[0] - e[1] + e[2] + e[3]).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{c, fidelity};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, SQRT_2};

    fn clicks(pairs: &[(&str, u32)]) -> BTreeMap<String, u32> {
        pairs.iter().map(|(d, n)| (d.to_string(), *n)).collect()
    }

    #[test]
    fn projective_examples() {
        let h = PolarizationState::H;
        assert_eq!(projective_probability(&h, &h).unwrap(), 1.0);
        assert_eq!(
            projective_probability(&h, &PolarizationState::V).unwrap(),
            0.0
        );
        let p = projective_probability(&PolarizationState::minus_i(), &PolarizationState::plus_i())
            .unwrap();
        assert_abs_diff_eq!(p, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn measure_shot_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = AnalyzerSetting::new(0.0, 0.0);
        for _ in 0..1000 {
            assert_eq!(
                measure_shot(&PolarizationState::H, &z, &mut rng).unwrap(),
                Port::H
            );
        }
        let d = PolarizationState::diagonal();
        let n = 100_000;
        let hs = (0..n)
            .filter(|_| measure_shot(&d, &z, &mut rng).unwrap() == Port::H)
            .count() as f64;
        assert!((hs - n as f64 / 2.0).abs() < 5.0 * (n as f64 / 4.0).sqrt());
        let x = AnalyzerSetting::new(FRAC_PI_4, FRAC_PI_8);
        let first = measure_shot(&d, &x, &mut rng).unwrap();
        for _ in 0..1000 {
            assert_eq!(measure_shot(&d, &x, &mut rng).unwrap(), first);
        }
        let y = AnalyzerSetting::new(0.0, FRAC_PI_8);
        let r = PolarizationState::plus_i();
        let first = measure_shot(&r, &y, &mut rng).unwrap();
        for _ in 0..1000 {
            assert_eq!(measure_shot(&r, &y, &mut rng).unwrap(), first);
        }
    }

    #[test]
    fn default_settings_measure_z_d_and_r_axes() {
        // the QWP acts first, so (0, π/8) turns circular light into H/V
        let s = TomographySettings::default().settings;
        let axes: Vec<_> = s.iter().map(|a| a.measured_axis()).collect();
        assert!((axes[0] - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        assert!((axes[1].abs() - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((axes[2].abs() - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn tomography_exact_examples() {
        let settings = TomographySettings::default();
        for psi in [
            PolarizationState::H,
            PolarizationState::diagonal(),
            PolarizationState::minus_i(),
        ] {
            let counts = settings.settings.map(|s| PortCounts::exact(&psi, &s));
            let rho = tomography_reconstruct(&counts, &settings).unwrap();
            assert!((rho.m - psi.projector().m).norm() < 1e-12);
        }
        let zero = [
            PortCounts::new(1.0, 0.0),
            PortCounts::new(0.0, 0.0),
            PortCounts::new(1.0, 1.0),
        ];
        assert!(matches!(
            tomography_reconstruct(&zero, &settings),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn noisy_counts_are_clipped_to_a_valid_state() {
        let counts = [
            PortCounts::new(10.0, 0.0),
            PortCounts::new(10.0, 0.0),
            PortCounts::new(10.0, 0.0),
        ];
        let rho = tomography_reconstruct(&counts, &TomographySettings::default()).unwrap();
        assert!(DensityMatrix2::new(rho.m).is_ok());
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn one_and_only_one_examples() {
        let (a, b) = (["D1", "D2"], ["D3", "D4"]);
        assert!(coincidence_1ao1(&clicks(&[("D1", 1), ("D3", 1)]), &a, &b));
        assert!(!coincidence_1ao1(&clicks(&[("D1", 2), ("D3", 0)]), &a, &b));
        assert!(!coincidence_1ao1(
            &clicks(&[("D1", 1), ("D2", 1), ("D3", 1)]),
            &a,
            &b
        ));
        assert!(one_and_only_one(
            &clicks(&[("D2", 1), ("D4", 1)]),
            &[a.to_vec(), b.to_vec()]
        ));
    }

    #[test]
    fn correlation_examples() {
        let perfect = JointCounts {
            pp: 50.0,
            mm: 50.0,
            ..Default::default()
        };
        assert_eq!(correlation_e(&perfect).unwrap(), 1.0);
        assert!(correlation_e(&JointCounts::default()).is_err());
        // E(a, b) = cos 2(a − b) for (|HH⟩+|VV⟩)/√2
        let e = |a: f64, b: f64| {
            let p_same = (a - b).to_radians().cos().powi(2) / 2.0;
            let p_diff = (a - b).to_radians().sin().powi(2) / 2.0;
            correlation_e(&JointCounts {
                pp: p_same,
                mm: p_same,
                pm: p_diff,
                mp: p_diff,
            })
            .unwrap()
        };
        let s = chsh_value([e(0.0, 22.5), e(0.0, 67.5), e(45.0, 22.5), e(45.0, 67.5)]);
        assert_abs_diff_eq!(s, 2.0 * SQRT_2, epsilon = 1e-12);
        // |H⟩⊗|H⟩: P(+,+) = cos²a·cos²b etc.
        let prod = |a: f64, b: f64| {
            let (ca, sa) = (a.to_radians().cos().powi(2), a.to_radians().sin().powi(2));
            let (cb, sb) = (b.to_radians().cos().powi(2), b.to_radians().sin().powi(2));
            correlation_e(&JointCounts {
                pp: ca * cb,
                pm: ca * sb,
                mp: sa * cb,
                mm: sa * sb,
            })
            .unwrap()
        };
        let s = chsh_value([
            prod(0.0, 22.5),
            prod(0.0, 67.5),
            prod(45.0, 22.5),
            prod(45.0, 67.5),
        ]);
        assert!(s <= 2.0 + 1e-12);
    }

    #[test]
    fn counts_table_tallies_and_serializes() {
        let mut t = CountsTable::new(&["D1", "D2", "D3"], true, 9);
        t.record(&ShotOutcome {
            shot: 0,
            clicks: vec![("D1".into(), 1), ("D2".into(), 0), ("D3".into(), 1)],
            herald: Some(true),
        });
        t.record(&ShotOutcome {
            shot: 1,
            clicks: vec![("D1".into(), 0), ("D2".into(), 1), ("D3".into(), 0)],
            herald: Some(false),
        });
        assert_eq!(t.shots, 2);
        assert_eq!(t.clicks("D1"), 1);
        assert_eq!(t.coincidence("D3", "D1"), 1);
        assert_eq!(t.heralds, Some(1));
        let back: CountsTable = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back, t);
        let csv = t.to_csv();
        assert!(
            csv.contains("detector,clicks\nD1,1\nD2,1\nD3,1\ncoinc:D1&D3,1\n"),
            "{csv}"
        );
        assert!(csv.starts_with("# shots=2\n# seed=9\n"));
    }

    #[test]
    fn reconstruction_fidelity_on_exact_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let settings = TomographySettings::default();
        for _ in 0..200 {
            let psi = PolarizationState::random(&mut rng);
            let counts = settings.settings.map(|s| PortCounts::exact(&psi, &s));
            let rho = tomography_reconstruct(&counts, &settings).unwrap();
            assert_abs_diff_eq!(fidelity(&rho, &psi), 1.0, epsilon = 1e-10);
            assert!(rho.is_hermitian(1e-12));
            assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
        }
        let _ = c(0.0, 0.0);
    }

    proptest! {
        #[test]
        fn orthonormal_pair_probabilities_sum_to_one(a in 0.0f64..1.0, b in -1.0f64..1.0, c_ in -1.0f64..1.0, d in -1.0f64..1.0, t in 0.0f64..6.3) {
            let psi = PolarizationState::normalized(crate::state::c(a + 0.1, b), crate::state::c(c_, d)).unwrap();
            let basis = PolarizationState::normalized(crate::state::c(t.cos(), 0.0), crate::state::C64::from_polar(t.sin(), b)).unwrap();
            let orth = PolarizationState::new(-basis.beta.conj(), basis.alpha.conj()).unwrap();
            let sum = projective_probability(&psi, &basis).unwrap() + projective_probability(&psi, &orth).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn herald_rule_is_permutation_invariant(n1 in 0u32..3, n2 in 0u32..3, n3 in 0u32..3, n4 in 0u32..3) {
            let c1 = clicks(&[("D1", n1), ("D2", n2), ("D3", n3), ("D4", n4)]);
            let c2 = clicks(&[("D1", n2), ("D2", n1), ("D3", n4), ("D4", n3)]);
            prop_assert_eq!(
                coincidence_1ao1(&c1, &["D1", "D2"], &["D3", "D4"]),
                coincidence_1ao1(&c2, &["D1", "D2"], &["D3", "D4"])
            );
        }
    }
}

//! Acceptance gate: one line per criterion, non-zero exit on any failure.
//! Reference values are computed here from first principles, not taken
//! from the library.

#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64 as C;
use qbench_core::experiments::{
    cnot_truth_table, run_chsh, run_entangled_source, run_heralded_cnot, run_heralded_cnot_sampled,
    run_projective, run_tomography, ChshAngles,
};
use qbench_core::measure::AnalyzerSetting;
use qbench_core::optics::{
    jones_hwp, jones_qwp, phase_match, qhq_decompose, QhqAngles, Ray, RefractiveIndexPoint, Wave,
};
use qbench_core::scene::BellState;
use qbench_core::state::{
    bloch_from_state, haar_unitary, unitarity_deviation, Jones, PolarizationState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// Reference plate matrices, written out independently.
fn ref_hwp(t: f64) -> [[C; 2]; 2] {
    let (c2, s2) = ((2.0 * t).cos(), (2.0 * t).sin());
    [
        [C::new(c2, 0.0), C::new(s2, 0.0)],
        [C::new(s2, 0.0), C::new(-c2, 0.0)],
    ]
}

fn ref_qwp(t: f64) -> [[C; 2]; 2] {
    // R(t)·diag(e^{iπ/4}, e^{−iπ/4})·R(−t)
    let (c, s) = (t.cos(), t.sin());
    let (p, m) = (C::from_polar(1.0, PI / 4.0), C::from_polar(1.0, -PI / 4.0));
    [
        [p * c * c + m * s * s, (p - m) * c * s],
        [(p - m) * c * s, p * s * s + m * c * c],
    ]
}

fn mul(a: &[[C; 2]; 2], b: &[[C; 2]; 2]) -> [[C; 2]; 2] {
    let mut m = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

fn apply(m: &[[C; 2]; 2], v: [C; 2]) -> [C; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

fn to_arr(j: &Jones) -> [[C; 2]; 2] {
    [[j[(0, 0)], j[(0, 1)]], [j[(1, 0)], j[(1, 1)]]]
}

/// `min_φ ‖a − e^{iφ} b‖_F`, evaluated entrywise to avoid cancellation.
fn phase_dist(a: &[[C; 2]; 2], b: &[[C; 2]; 2]) -> f64 {
    let mut overlap = C::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            overlap += b[i][j].conj() * a[i][j];
        }
    }
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C::new(1.0, 0.0)
    };
    let mut d = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            d += (a[i][j] - phase * b[i][j]).norm_sqr();
        }
    }
    d.sqrt()
}

fn state_amps(s: &PolarizationState) -> [C; 2] {
    let v = s.to_vector();
    [v[0], v[1]]
}

fn ref_bloch(a: [C; 2]) -> [f64; 3] {
    let x = a[0].conj() * a[1];
    [2.0 * x.re, 2.0 * x.im, a[0].norm_sqr() - a[1].norm_sqr()]
}

fn waveplate_algebra() -> Check {
    let mut worst_u: f64 = 0.0;
    let mut worst_h2: f64 = 0.0;
    let mut worst_q2: f64 = 0.0;
    let id = [
        [C::new(1.0, 0.0), C::new(0.0, 0.0)],
        [C::new(0.0, 0.0), C::new(1.0, 0.0)],
    ];
    for deg in 0..180 {
        let t = (deg as f64).to_radians();
        let (h, q) = (jones_hwp(t), jones_qwp(t));
        worst_u = worst_u
            .max(unitarity_deviation(&h))
            .max(unitarity_deviation(&q));
        let (h, q) = (to_arr(&h), to_arr(&q));
        worst_h2 = worst_h2.max(phase_dist(&mul(&h, &h), &id));
        worst_q2 = worst_q2.max(phase_dist(&mul(&q, &q), &h));
        worst_q2 = worst_q2
            .max(phase_dist(&q, &ref_qwp(t)))
            .max(phase_dist(&h, &ref_hwp(t)));
    }
    ensure(worst_u < 1e-12, format!("unitarity deviation {worst_u:e}"))?;
    ensure(worst_h2 < 1e-12, format!("HWP² distance {worst_h2:e}"))?;
    ensure(
        worst_q2 < 1e-12,
        format!("QWP² vs HWP distance {worst_q2:e}"),
    )?;
    Ok(format!(
        "max deviations {worst_u:.1e}/{worst_h2:.1e}/{worst_q2:.1e}"
    ))
}

fn bloch_anchor() -> Check {
    let b = bloch_from_state(&PolarizationState::minus_i()).map_err(|e| e.to_string())?;
    ensure(
        b.as_array() == [0.0, -1.0, 0.0],
        format!("|−i⟩ → {:?}", b.as_array()),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let s = PolarizationState::random(&mut rng);
        let b = bloch_from_state(&s).map_err(|e| e.to_string())?;
        worst = worst.max((b.norm() - 1.0).abs());
        let r = ref_bloch(state_amps(&s));
        worst = worst.max(b.distance(&qbench_core::state::BlochVector::new(r[0], r[1], r[2])));
    }
    ensure(worst < 1e-12, format!("worst deviation {worst:e}"))?;
    Ok(format!("|−i⟩ → (0,−1,0); 10⁴ states within {worst:.1e}"))
}

fn qhq_universality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let u = haar_unitary(&mut rng);
        let d = qhq_decompose(&u).map_err(|e| e.to_string())?;
        let a = d.angles;
        let recomposed = mul(&mul(&ref_qwp(a.alpha), &ref_hwp(a.beta)), &ref_qwp(a.gamma));
        worst = worst.max(phase_dist(&to_arr(&u), &recomposed));
    }
    ensure(worst < 1e-8, format!("worst distance {worst:e}"))?;
    Ok(format!("1000 Haar unitaries, worst distance {worst:.1e}"))
}

fn projective_law() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 100_000u64;
    let mut worst_z: f64 = 0.0;
    for k in 0..20 {
        let psi = PolarizationState::random(&mut rng);
        let (q, h) = (rng.random::<f64>() * PI, rng.random::<f64>() * PI);
        // the photon meets the quarter-wave plate first
        let out = apply(&mul(&ref_hwp(h), &ref_qwp(q)), state_amps(&psi));
        let p = out[0].norm_sqr();
        let ident = QhqAngles::new(0.0, 0.0, 0.0);
        let t = run_projective(&ident, &AnalyzerSetting::new(q, h), Some(&psi), n, 100 + k)
            .map_err(|e| e.to_string())?;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt().max(1e-9);
        let z = (t.clicks("apd_h") as f64 - n as f64 * p).abs() / sigma;
        ensure(
            t.clicks("apd_h") + t.clicks("apd_v") == n,
            "port counts do not sum to shots",
        )?;
        worst_z = worst_z.max(z);
    }
    ensure(worst_z <= 5.0, format!("worst deviation {worst_z:.2}σ"))?;
    Ok(format!("20 pairs at N=10⁵, worst {worst_z:.2}σ"))
}

fn reference_fidelity(stokes: [f64; 3], psi: &PolarizationState) -> f64 {
    let s = ref_bloch(state_amps(psi));
    0.5 * (1.0 + stokes[0] * s[0] + stokes[1] * s[1] + stokes[2] * s[2])
}

fn tomography() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_exact: f64 = 0.0;
    for _ in 0..1000 {
        let psi = PolarizationState::random(&mut rng);
        let r = run_tomography(&psi, None, 0).map_err(|e| e.to_string())?;
        worst_exact = worst_exact.max((reference_fidelity(r.stokes, &psi) - 1.0).abs());
    }
    ensure(
        worst_exact < 1e-10,
        format!("exact fidelity off by {worst_exact:e}"),
    )?;
    let mut worst_sampled: f64 = 1.0;
    for k in 0..20 {
        let psi = PolarizationState::random(&mut rng);
        let r = run_tomography(&psi, Some(1_000_000), 1000 + k).map_err(|e| e.to_string())?;
        worst_sampled = worst_sampled.min(reference_fidelity(r.stokes, &psi));
    }
    ensure(
        worst_sampled > 0.999,
        format!("sampled fidelity {worst_sampled}"),
    )?;
    Ok(format!(
        "exact within {worst_exact:.1e}; sampled min fidelity {worst_sampled:.6}"
    ))
}

fn entangled_source() -> Check {
    let r = run_entangled_source(0.0, 22.5).map_err(|e| e.to_string())?;
    let st = r.state.ok_or("no pair emitted")?;
    let phi = [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2];
    let overlap: C = st
        .amplitudes
        .iter()
        .zip(phi)
        .map(|(a, b)| a.conj() * b)
        .sum();
    let f = overlap.norm_sqr();
    ensure((f - 1.0).abs() < 1e-12, format!("fidelity to Φ+ {f}"))?;
    let chsh = run_chsh(&ChshAngles::default(), 250_000, 42).map_err(|e| e.to_string())?;
    ensure(
        chsh.coincidences == 1_000_000,
        format!("{} coincidences", chsh.coincidences),
    )?;
    ensure(
        (chsh.s - 2.0 * SQRT_2).abs() < 0.05,
        format!("S = {}", chsh.s),
    )?;
    Ok(format!(
        "Φ+ fidelity {f:.15}; S = {:.4} over 10⁶ coincidences",
        chsh.s
    ))
}

fn heralded_cnot() -> Check {
    let rows = cnot_truth_table().map_err(|e| e.to_string())?;
    let expected = [
        ("H", "H", "H", "H"),
        ("H", "V", "H", "V"),
        ("V", "H", "V", "V"),
        ("V", "V", "V", "H"),
    ];
    for (r, e) in rows.iter().zip(expected) {
        let got = (
            r.control_in.to_string(),
            r.target_in.to_string(),
            r.control_out.to_string(),
            r.target_out.to_string(),
        );
        ensure(
            got == (e.0.into(), e.1.into(), e.2.into(), e.3.into())
                && (r.fidelity - 1.0).abs() < 1e-10,
            format!("row {got:?} fidelity {}", r.fidelity),
        )?;
    }
    let c = PolarizationState::diagonal();
    let t = PolarizationState::H;
    let reference = oracle::cnot_oracle(state_amps(&c), state_amps(&t), "phi_plus");
    let report = run_heralded_cnot(&c, &t).map_err(|e| e.to_string())?;
    let dev = (report.success_probability - reference.success_probability).abs();
    ensure(
        dev < 1e-10,
        format!(
            "exact {} vs oracle {}",
            report.success_probability, reference.success_probability
        ),
    )?;

    let n = 100_000u64;
    let counts =
        run_heralded_cnot_sampled(BellState::PhiPlus, &c, &t, n, 5).map_err(|e| e.to_string())?;
    let p = reference.success_probability;
    let heralds = counts.heralds.unwrap_or(0) as f64;
    let z = (heralds - n as f64 * p).abs() / (n as f64 * p * (1.0 - p)).sqrt();
    ensure(z <= 5.0, format!("sampled heralds {heralds} ({z:.2}σ)"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (c, t) = (
            PolarizationState::random(&mut rng),
            PolarizationState::random(&mut rng),
        );
        let r = run_heralded_cnot(&c, &t).map_err(|e| e.to_string())?;
        worst = worst.max((r.success_probability - p).abs());
    }
    ensure(worst < 1e-10, format!("heralding varies by {worst:e}"))?;
    Ok(format!(
        "4/4 rows; P = {:.12} (oracle {p:.12}); sampled {z:.2}σ; input spread {worst:.1e}",
        report.success_probability
    ))
}

fn phase_matching() -> Check {
    let pump = RefractiveIndexPoint::from_wavelength(351e-9, 1.6, 1.6);
    let pair = RefractiveIndexPoint {
        omega: pump.omega / 2.0,
        ..pump
    };
    let (p, s) = (
        Wave::new(pump, Ray::Extraordinary),
        Wave::new(pair, Ray::Ordinary),
    );
    let equal = phase_match(&p, &s, &s, 0.0).map_err(|e| e.to_string())?;
    ensure(
        equal.matched && equal.mismatch == 0.0,
        format!("equal indices mismatch {}", equal.mismatch),
    )?;

    let pump = RefractiveIndexPoint::from_wavelength(351e-9, 1.6776, 1.5534);
    let pair = RefractiveIndexPoint {
        omega: pump.omega / 2.0,
        ..pump
    };
    let (p, s) = (
        Wave::new(pump, Ray::Ordinary),
        Wave::new(pair, Ray::Extraordinary),
    );
    let k = p.wavenumber();
    let r = phase_match(&p, &s, &s, 1e-9 * k).map_err(|e| e.to_string())?;
    let expected = (1.6776 - 1.5534) * pump.omega / 299_792_458.0;
    ensure(!r.matched, "unequal indices accepted")?;
    ensure(
        (r.mismatch - expected).abs() < 1e-9 * expected,
        format!("mismatch {} vs {expected}", r.mismatch),
    )?;
    Ok(format!(
        "equal-index mismatch 0; 1.6776/1.5534 rejected with Δk = {:.4e} rad/m",
        r.mismatch
    ))
}

fn qbench(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qbench"))
        .args(args)
        .env_remove("QBENCH_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(
        out.status.success(),
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)),
    )?;
    Ok(out.stdout)
}

fn determinism() -> Check {
    let runs: [&[&str]; 7] = [
        &["run", "heralded", "--shots", "1", "--seed", "1"],
        &[
            "run", "heralded", "--shots", "20000", "--seed", "7", "--format", "csv",
        ],
        &["run", "entangled-pair", "--shots", "20000", "--seed", "3"],
        &["run", "heralded-cnot", "--shots", "20000", "--seed", "11"],
        &["run", "heralded-cnot", "--exact"],
        &[
            "tomography",
            "--prep",
            "D",
            "--shots",
            "20000",
            "--seed",
            "2",
        ],
        &[
            "amplitudes",
            "projective-measurement",
            "--input",
            "source=D",
        ],
    ];
    for args in runs {
        let (a, b) = (qbench(args)?, qbench(args)?);
        ensure(a == b, format!("{args:?} differs between runs"))?;
    }
    Ok(format!("{} commands byte-identical on repeat", runs.len()))
}

fn main() {
    let criteria: [(&str, f64, fn() -> Check); 9] = [
        ("waveplate algebra", 1.0, waveplate_algebra),
        ("Bloch anchor", f64::INFINITY, bloch_anchor),
        ("QHQ universality", 30.0, qhq_universality),
        ("projective law", 10.0, projective_law),
        ("tomography", 60.0, tomography),
        ("entangled source", 60.0, entangled_source),
        ("heralded C-NOT", 120.0, heralded_cnot),
        ("phase matching", f64::INFINITY, phase_matching),
        ("determinism", f64::INFINITY, determinism),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let verdict = match result {
            Ok(detail) if secs < budget => format!("PASS {name} ({secs:.2}s): {detail}"),
            Ok(detail) => format!("FAIL {name} ({secs:.2}s, budget {budget}s): {detail}"),
            Err(why) => format!("FAIL {name} ({secs:.2}s): {why}"),
        };
        if verdict.starts_with("FAIL") {
            failed += 1;
        }
        println!("{verdict}");
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

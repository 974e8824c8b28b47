//! First-quantized model of the heralded C-NOT bench, written without the
//! library's optics or Fock code. Amplitudes come from permanents of the
//! 12×8 transfer matrix.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64 as C;

pub const PATTERNS: [&str; 4] = ["D1&D3", "D1&D4", "D2&D3", "D2&D4"];
pub const PAULIS: [&str; 4] = ["I", "X", "Z", "XZ"];

// input modes: c, t, a1, a2 (H, V each)
// output modes: c_out, t_out, D1, D2, D3, D4 (H, V each)
const N_IN: usize = 8;
const N_OUT: usize = 12;

fn r(x: f64) -> C {
    C::new(x, 0.0)
}

type Block = [[C; 4]; 4];

/// Polarizing splitter, ports (in1.H, in1.V, in2.H, in2.V) →
/// (out1.H, out1.V, out2.H, out2.V): H passes, V reflects with phase i.
fn splitter_hv() -> Block {
    let z = r(0.0);
    let i = C::new(0.0, 1.0);
    let mut b = [[z; 4]; 4];
    b[0][0] = r(1.0);
    b[3][1] = i;
    b[2][2] = r(1.0);
    b[1][3] = i;
    b
}

/// Diagonal-basis splitter: 22.5° half-wave plates on every port.
fn splitter_da() -> Block {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w = [[s, s], [s, -s]];
    let mut wide = [[r(0.0); 4]; 4];
    for p in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                wide[2 * p + a][2 * p + b] = r(w[a][b]);
            }
        }
    }
    mul(&mul(&wide, &splitter_hv()), &wide)
}

fn mul(a: &Block, b: &Block) -> Block {
    let mut m = [[r(0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

/// Transfer matrix `T[out][in]`.
fn transfer() -> [[C; N_IN]; N_OUT] {
    let mut t = [[r(0.0); N_IN]; N_OUT];
    let pbs1 = splitter_hv();
    let pbs2 = splitter_da();
    let pbs3 = splitter_da();
    let pbs4 = splitter_hv();
    // control arm: c, a1 → PBS1; out1 → c_out, out2 → PBS3 → D1 / D2
    for (col, input) in [(0usize, 0usize), (1, 1), (2, 4), (3, 5)] {
        for pol in 0..2 {
            t[pol][input] = pbs1[pol][col];
        }
        let into3 = [pbs1[2][col], pbs1[3][col]];
        for out in 0..4 {
            t[4 + out][input] = pbs3[out][0] * into3[0] + pbs3[out][1] * into3[1];
        }
    }
    // target arm: t, a2 → PBS2; out1 → t_out, out2 → PBS4 → D3 / D4
    for (col, input) in [(0usize, 2usize), (1, 3), (2, 6), (3, 7)] {
        for pol in 0..2 {
            t[2 + pol][input] = pbs2[pol][col];
        }
        let into4 = [pbs2[2][col], pbs2[3][col]];
        for out in 0..4 {
            t[8 + out][input] = pbs4[out][0] * into4[0] + pbs4[out][1] * into4[1];
        }
    }
    t
}

fn permanent(m: &[Vec<C>]) -> C {
    let n = m.len();
    if n == 0 {
        return r(1.0);
    }
    let mut total = r(0.0);
    for j in 0..n {
        let minor: Vec<Vec<C>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, x)| *x)
                    .collect()
            })
            .collect();
        total += m[0][j] * permanent(&minor);
    }
    total
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn bell_amplitudes(name: &str) -> [C; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (p, m, z) = (r(s), r(-s), r(0.0));
    match name {
        "phi_plus" => [p, z, z, p],
        "phi_minus" => [p, z, z, m],
        "psi_plus" => [z, p, p, z],
        "psi_minus" => [z, p, m, z],
        _ => panic!("unknown Bell state {name}"),
    }
}

fn pauli(name: &str) -> [[C; 2]; 2] {
    let (o, z) = (r(1.0), r(0.0));
    match name {
        "I" => [[o, z], [z, o]],
        "X" => [[z, o], [o, z]],
        "Z" => [[o, z], [z, -o]],
        "XZ" => [[z, -o], [o, z]],
        _ => unreachable!(),
    }
}

#[derive(Debug, Clone)]
pub struct OraclePattern {
    pub probability: f64,
    /// `(control, target)` Pauli names.
    pub correction: (String, String),
    pub fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub success_probability: f64,
    pub patterns: BTreeMap<String, OraclePattern>,
}

/// Amplitude of every 4-photon output, keyed by sorted output modes.
fn outputs(control: [C; 2], target: [C; 2], bell: [C; 4]) -> BTreeMap<Vec<usize>, C> {
    let t = transfer();
    let mut amps = BTreeMap::new();
    let mut combos = Vec::new();
    for a in 0..N_OUT {
        for b in a..N_OUT {
            for c in b..N_OUT {
                for d in c..N_OUT {
                    combos.push(vec![a, b, c, d]);
                }
            }
        }
    }
    for outs in combos {
        let mut counts = [0usize; N_OUT];
        for &o in &outs {
            counts[o] += 1;
        }
        let norm = counts.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
        let mut amp = r(0.0);
        for pc in 0..2 {
            for pt in 0..2 {
                for p1 in 0..2 {
                    for p2 in 0..2 {
                        let w = control[pc] * target[pt] * bell[2 * p1 + p2];
                        if w == r(0.0) {
                            continue;
                        }
                        let ins = [pc, 2 + pt, 4 + p1, 6 + p2];
                        let m: Vec<Vec<C>> = outs
                            .iter()
                            .map(|&o| ins.iter().map(|&i| t[o][i]).collect())
                            .collect();
                        amp += w * permanent(&m) / norm;
                    }
                }
            }
        }
        if amp.norm_sqr() > 0.0 {
            amps.insert(outs, amp);
        }
    }
    amps
}

/// Brute-force heralded C-NOT: every output pattern enumerated, each
/// one-and-only-one pattern assigned the Pauli pair that maps its
/// conditional state onto the ideal C-NOT output.
pub fn cnot_oracle(control: [C; 2], target: [C; 2], bell: &str) -> OracleReport {
    let amps = outputs(control, target, bell_amplitudes(bell));
    let total: f64 = amps.values().map(|a| a.norm_sqr()).sum();
    assert!((total - 1.0).abs() < 1e-12, "oracle lost norm: {total}");

    let ideal = [
        control[0] * target[0],
        control[0] * target[1],
        control[1] * target[1],
        control[1] * target[0],
    ];
    let mut prob: BTreeMap<String, f64> = BTreeMap::new();
    // (pattern, detector modes) → amplitudes over HH, HV, VH, VV
    let mut cond: BTreeMap<(String, Vec<usize>), [C; 4]> = BTreeMap::new();
    for (outs, amp) in &amps {
        let count = |lo: usize| outs.iter().filter(|&&o| o == lo || o == lo + 1).count();
        let (d1, d2, d3, d4) = (count(4), count(6), count(8), count(10));
        if d1 + d2 != 1 || d3 + d4 != 1 {
            continue;
        }
        let pattern = format!(
            "{}&{}",
            if d1 == 1 { "D1" } else { "D2" },
            if d3 == 1 { "D3" } else { "D4" }
        );
        *prob.entry(pattern.clone()).or_default() += amp.norm_sqr();
        let c_out: Vec<usize> = outs.iter().copied().filter(|&o| o < 2).collect();
        let t_out: Vec<usize> = outs.iter().copied().filter(|&o| o == 2 || o == 3).collect();
        if c_out.len() != 1 || t_out.len() != 1 {
            continue;
        }
        let env: Vec<usize> = outs.iter().copied().filter(|&o| o >= 4).collect();
        let k = 2 * c_out[0] + (t_out[0] - 2);
        cond.entry((pattern, env)).or_insert([r(0.0); 4])[k] += amp;
    }

    let mut patterns = BTreeMap::new();
    let mut success = 0.0;
    for (pattern, p) in prob {
        success += p;
        let vecs: Vec<&[C; 4]> = cond
            .iter()
            .filter(|((k, _), _)| *k == pattern)
            .map(|(_, v)| v)
            .collect();
        let weight: f64 = vecs
            .iter()
            .map(|v| v.iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum();
        let mut best = (("I".to_string(), "I".to_string()), -1.0);
        for pc in PAULIS {
            for pt in PAULIS {
                let (a, b) = (pauli(pc), pauli(pt));
                // ⟨ideal| (A⊗B) ρ (A⊗B)† |ideal⟩ / Tr ρ
                let mut f = 0.0;
                for v in &vecs {
                    let mut corrected = [r(0.0); 4];
                    for i in 0..4 {
                        for j in 0..4 {
                            corrected[i] += a[i >> 1][j >> 1] * b[i & 1][j & 1] * v[j];
                        }
                    }
                    let overlap: C = ideal
                        .iter()
                        .zip(&corrected)
                        .map(|(x, y)| x.conj() * y)
                        .sum();
                    f += overlap.norm_sqr();
                }
                let f = if weight > 0.0 { f / weight } else { 0.0 };
                if f > best.1 + 1e-12 {
                    best = ((pc.to_string(), pt.to_string()), f);
                }
            }
        }
        patterns.insert(
            pattern,
            OraclePattern {
                probability: p,
                correction: best.0,
                fidelity: best.1,
            },
        );
    }
    OracleReport {
        success_probability: success,
        patterns,
    }
}

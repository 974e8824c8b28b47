use std::collections::BTreeMap;

use super::*;
use crate::state::PolarizationState;

/// Name and one-line description of every builtin scene, in listing order.
pub const BUILTIN_SCENES: [(&str, &str); 5] = [
    (
        "heralded",
        "Heralded single photon: a V-polarized pump down-converts in one BBO crystal and the idler click announces the signal photon",
    ),
    (
        "single-qubit-gate",
        "Single-qubit gate: a photon crosses a quarter-half-quarter plate sequence that rotates it on the Bloch sphere",
    ),
    (
        "projective-measurement",
        "Projective measurement: a prepared photon is analyzed by two plates and a polarizing beam splitter with two detectors",
    ),
    (
        "entangled-pair",
        "Entangled pair: a diagonal pump on crossed BBO crystals emits (|HH⟩+|VV⟩)/√2, read by two polarization analyzers",
    ),
    (
        "heralded-cnot",
        "Heralded C-NOT: control and target meet an entangled ancilla pair on two parity beam splitters; one click in D1/D2 and one in D3/D4 announces success",
    ),
];

fn plate(id: &str, kind: ComponentKind, angle: f64) -> Component {
    let p = PlateParams { angle };
    Component::new(
        id,
        match kind {
            ComponentKind::Hwp => ComponentParams::Hwp(p),
            _ => ComponentParams::Qwp(p),
        },
    )
}

fn hwp(id: &str, angle: f64) -> Component {
    plate(id, ComponentKind::Hwp, angle)
}

fn qwp(id: &str, angle: f64) -> Component {
    plate(id, ComponentKind::Qwp, angle)
}

fn pbs(id: &str, basis: PbsBasis) -> Component {
    Component::new(
        id,
        ComponentParams::Pbs(PbsParams {
            basis,
            reflection_phase: default_i(),
            angle: 0.0,
        }),
    )
}

fn apd(id: &str, herald_group: Option<&str>) -> Component {
    Component::new(
        id,
        ComponentParams::Apd(ApdParams {
            herald_group: herald_group.map(str::to_string),
            ..ApdParams::default()
        }),
    )
}

fn laser(id: &str, polarization: f64) -> Component {
    Component::new(id, ComponentParams::Laser(LaserParams { polarization }))
}

fn photon_source(id: &str) -> Component {
    Component::new(
        id,
        ComponentParams::PhotonSource(PhotonSourceParams {
            state: PolarizationState::H,
        }),
    )
}

fn bbo(id: &str, geometry: CrystalGeometry) -> Component {
    Component::new(
        id,
        ComponentParams::Bbo(BboParams {
            geometry,
            pump_wavelength: default_pump_wavelength(),
            emission_probability: default_emission_probability(),
            relative_phase: 0.0,
        }),
    )
}

fn smf(id: &str) -> Component {
    Component::new(id, ComponentParams::Smf)
}

struct Builder {
    scene: Scene,
}

impl Builder {
    fn new() -> Self {
        Self {
            scene: Scene {
                schema_version: SCHEMA_VERSION.into(),
                components: Vec::new(),
                links: Vec::new(),
                sources: Vec::new(),
                detectors: Vec::new(),
                layout: BTreeMap::new(),
            },
        }
    }

    fn add(&mut self, c: Component, x: f64, y: f64) -> &mut Self {
        self.scene.layout.insert(c.id.clone(), [x, y]);
        if c.kind().is_source() {
            self.scene.sources.push(c.id.clone());
        }
        if c.kind() == ComponentKind::Apd {
            self.scene.detectors.push(c.id.clone());
        }
        self.scene.components.push(c);
        self
    }

    fn link(&mut self, from: &str, to: &str) -> &mut Self {
        self.scene.links.push(Link::new(from, to));
        self
    }

    /// Chains `ids` with `out → in` links.
    fn chain(&mut self, ids: &[&str]) -> &mut Self {
        for w in ids.windows(2) {
            self.link(&format!("{}.out", w[0]), &format!("{}.in", w[1]));
        }
        self
    }

    fn build(self) -> Scene {
        self.scene.validate().expect("builtin scenes are valid");
        self.scene
    }
}

fn heralded() -> Scene {
    let mut b = Builder::new();
    b.add(laser("laser", 90.0), 0.0, 0.0)
        .add(pbs("pbs_pump", PbsBasis::HV), 0.3, 0.0)
        .add(hwp("hwp_pump", 0.0), 0.3, 0.3)
        .add(bbo("bbo", CrystalGeometry::SingleCrystal), 0.3, 0.6)
        .add(apd("apd_herald", Some("herald")), 0.1, 0.9)
        .add(smf("smf"), 0.5, 0.9);
    b.link("laser.out", "pbs_pump.in1")
        .link("pbs_pump.out2", "hwp_pump.in")
        .link("hwp_pump.out", "bbo.in")
        .link("bbo.idler", "apd_herald.in")
        .link("bbo.signal", "smf.in");
    b.build()
}

fn single_qubit_gate() -> Scene {
    let mut b = Builder::new();
    b.add(photon_source("source"), 0.0, 0.0)
        .add(qwp("qwp1", 0.0), 0.2, 0.0)
        .add(hwp("hwp1", 0.0), 0.4, 0.0)
        .add(qwp("qwp2", 0.0), 0.6, 0.0)
        .add(smf("smf"), 0.8, 0.0);
    b.chain(&["source", "qwp1", "hwp1", "qwp2", "smf"]);
    b.build()
}

fn projective_measurement() -> Scene {
    let mut b = Builder::new();
    b.add(photon_source("source"), 0.0, 0.0)
        .add(qwp("qwp1", 0.0), 0.15, 0.0)
        .add(hwp("hwp1", 0.0), 0.3, 0.0)
        .add(qwp("qwp2", 0.0), 0.45, 0.0)
        .add(qwp("qwp_analysis", 0.0), 0.6, 0.0)
        .add(hwp("hwp_analysis", 0.0), 0.75, 0.0)
        .add(pbs("pbs", PbsBasis::HV), 0.9, 0.0)
        .add(apd("apd_h", None), 1.1, 0.0)
        .add(apd("apd_v", None), 0.9, 0.2);
    b.chain(&[
        "source",
        "qwp1",
        "hwp1",
        "qwp2",
        "qwp_analysis",
        "hwp_analysis",
    ])
    .link("hwp_analysis.out", "pbs.in1")
    .link("pbs.out1", "apd_h.in")
    .link("pbs.out2", "apd_v.in");
    b.build()
}

fn entangled_pair() -> Scene {
    let mut b = Builder::new();
    b.add(laser("laser", 0.0), 0.0, 0.0)
        .add(pbs("pbs_pump", PbsBasis::HV), 0.2, 0.0)
        .add(hwp("hwp_pump", 22.5), 0.4, 0.0)
        .add(bbo("bbo", CrystalGeometry::CrossedPair), 0.6, 0.0)
        .add(hwp("hwp_a", 0.0), 0.8, 0.2)
        .add(pbs("pbs_a", PbsBasis::HV), 1.0, 0.3)
        .add(apd("a_plus", None), 1.2, 0.3)
        .add(apd("a_minus", None), 1.0, 0.5)
        .add(hwp("hwp_b", 0.0), 0.8, -0.2)
        .add(pbs("pbs_b", PbsBasis::HV), 1.0, -0.3)
        .add(apd("b_plus", None), 1.2, -0.3)
        .add(apd("b_minus", None), 1.0, -0.5);
    b.link("laser.out", "pbs_pump.in1")
        .link("pbs_pump.out1", "hwp_pump.in")
        .link("hwp_pump.out", "bbo.in")
        .link("bbo.signal", "hwp_a.in")
        .link("hwp_a.out", "pbs_a.in1")
        .link("pbs_a.out1", "a_plus.in")
        .link("pbs_a.out2", "a_minus.in")
        .link("bbo.idler", "hwp_b.in")
        .link("hwp_b.out", "pbs_b.in1")
        .link("pbs_b.out1", "b_plus.in")
        .link("pbs_b.out2", "b_minus.in");
    b.build()
}

fn heralded_cnot() -> Scene {
    let mut b = Builder::new();
    b.add(photon_source("c_source"), 0.0, 0.6)
        .add(photon_source("t_source"), 0.0, -0.6)
        .add(
            Component::new(
                "bell",
                ComponentParams::BellSource(BellSourceParams {
                    state: BellState::PhiPlus,
                }),
            ),
            0.6,
            0.0,
        )
        .add(qwp("c_qwp1", 0.0), 0.15, 0.6)
        .add(hwp("c_hwp", 0.0), 0.3, 0.6)
        .add(qwp("c_qwp2", 0.0), 0.45, 0.6)
        .add(qwp("t_qwp1", 0.0), 0.15, -0.6)
        .add(hwp("t_hwp", 0.0), 0.3, -0.6)
        .add(qwp("t_qwp2", 0.0), 0.45, -0.6)
        .add(pbs("PBS1", PbsBasis::HV), 0.6, 0.6)
        .add(pbs("PBS2", PbsBasis::DA), 0.6, -0.6)
        .add(smf("c_out"), 0.9, 0.6)
        .add(smf("t_out"), 0.9, -0.6)
        .add(pbs("PBS3", PbsBasis::DA), 0.6, 0.9)
        .add(pbs("PBS4", PbsBasis::HV), 0.6, -0.9)
        .add(apd("D1", Some("a1")), 0.8, 1.0)
        .add(apd("D2", Some("a1")), 0.6, 1.1)
        .add(apd("D3", Some("a2")), 0.8, -1.0)
        .add(apd("D4", Some("a2")), 0.6, -1.1);
    b.chain(&["c_source", "c_qwp1", "c_hwp", "c_qwp2"])
        .chain(&["t_source", "t_qwp1", "t_hwp", "t_qwp2"])
        .link("c_qwp2.out", "PBS1.in1")
        .link("bell.out1", "PBS1.in2")
        .link("PBS1.out1", "c_out.in")
        .link("PBS1.out2", "PBS3.in1")
        .link("PBS3.out1", "D1.in")
        .link("PBS3.out2", "D2.in")
        .link("t_qwp2.out", "PBS2.in1")
        .link("bell.out2", "PBS2.in2")
        .link("PBS2.out1", "t_out.in")
        .link("PBS2.out2", "PBS4.in1")
        .link("PBS4.out1", "D3.in")
        .link("PBS4.out2", "D4.in");
    b.build()
}

/// One of the five canned experiments.
pub fn builtin_scene(name: &str) -> Result<Scene> {
    match name {
        "heralded" => Ok(heralded()),
        "single-qubit-gate" => Ok(single_qubit_gate()),
        "projective-measurement" => Ok(projective_measurement()),
        "entangled-pair" => Ok(entangled_pair()),
        "heralded-cnot" => Ok(heralded_cnot()),
        other => Err(Error::UnknownScene(other.to_string())),
    }
}

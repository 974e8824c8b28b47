//! Optical-bench scene graph: components, port wiring and the JSON document
//! format.

mod builtin;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optics::{CrystalGeometry, DetectorSpec, PbsBasis, PbsSpec, SpdcSourceSpec};
use crate::state::{PolarizationState, C64};

pub use builtin::{builtin_scene, BUILTIN_SCENES};

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_ANGLE_STEP: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Laser,
    Pbs,
    Hwp,
    Qwp,
    Bbo,
    Apd,
    Smf,
    Prism,
    PhotonSource,
    BellSource,
}

impl ComponentKind {
    pub fn inputs(self) -> &'static [&'static str] {
        use ComponentKind::*;
        match self {
            Laser | PhotonSource | BellSource => &[],
            Pbs => &["in1", "in2"],
            Hwp | Qwp | Bbo | Apd | Smf | Prism => &["in"],
        }
    }

    pub fn outputs(self) -> &'static [&'static str] {
        use ComponentKind::*;
        match self {
            Laser | PhotonSource => &["out"],
            BellSource => &["out1", "out2"],
            Pbs => &["out1", "out2"],
            Bbo => &["signal", "idler"],
            Apd => &[],
            Hwp | Qwp | Smf | Prism => &["out"],
        }
    }

    pub fn is_source(self) -> bool {
        matches!(
            self,
            ComponentKind::Laser | ComponentKind::PhotonSource | ComponentKind::BellSource
        )
    }

    pub fn name(self) -> &'static str {
        use ComponentKind::*;
        match self {
            Laser => "laser",
            Pbs => "pbs",
            Hwp => "hwp",
            Qwp => "qwp",
            Bbo => "bbo",
            Apd => "apd",
            Smf => "smf",
            Prism => "prism",
            PhotonSource => "photon_source",
            BellSource => "bell_source",
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_i() -> C64 {
    C64::new(0.0, 1.0)
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserParams {
    /// Linear polarization angle in degrees (0 = H, 90 = V).
    pub polarization: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateParams {
    /// Fast-axis angle in degrees.
    pub angle: f64,
}

impl PlateParams {
    pub fn radians(&self) -> f64 {
        self.angle.to_radians()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PbsParams {
    pub basis: PbsBasis,
    #[serde(default = "default_i")]
    pub reflection_phase: C64,
    /// Rotation of the splitter about the beam axis, degrees.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub angle: f64,
}

impl PbsParams {
    pub fn spec(&self) -> PbsSpec {
        PbsSpec {
            basis: self.basis,
            reflection_phase: self.reflection_phase,
            angle: self.angle.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BboParams {
    pub geometry: CrystalGeometry,
    #[serde(default = "default_pump_wavelength")]
    pub pump_wavelength: f64,
    #[serde(default = "default_emission_probability")]
    pub emission_probability: f64,
    /// Phase of the |V,V⟩ branch in degrees.
    #[serde(default)]
    pub relative_phase: f64,
}

fn default_pump_wavelength() -> f64 {
    SpdcSourceSpec::default().pump_wavelength
}

fn default_emission_probability() -> f64 {
    SpdcSourceSpec::default().emission_probability
}

impl BboParams {
    pub fn spec(&self) -> SpdcSourceSpec {
        SpdcSourceSpec {
            geometry: self.geometry,
            pump_wavelength: self.pump_wavelength,
            emission_probability: self.emission_probability,
            relative_phase: self.relative_phase.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApdParams {
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default)]
    pub dark_count_probability: f64,
    #[serde(default = "yes")]
    pub number_resolving: bool,
    /// Detectors sharing a group are read together by the
    /// one-and-only-one herald rule.
    #[serde(default)]
    pub herald_group: Option<String>,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Default for ApdParams {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_probability: 0.0,
            number_resolving: true,
            herald_group: None,
        }
    }
}

impl ApdParams {
    pub fn spec(&self) -> DetectorSpec {
        DetectorSpec {
            efficiency: self.efficiency,
            dark_count_probability: self.dark_count_probability,
            number_resolving: self.number_resolving,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonSourceParams {
    pub state: PolarizationState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Amplitudes over `HH, HV, VH, VV`.
    pub fn amplitudes(self) -> [C64; 4] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (p, m, z) = (C64::new(s, 0.0), C64::new(-s, 0.0), C64::default());
        match self {
            BellState::PhiPlus => [p, z, z, p],
            BellState::PhiMinus => [p, z, z, m],
            BellState::PsiPlus => [z, p, p, z],
            BellState::PsiMinus => [z, p, m, z],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellSourceParams {
    pub state: BellState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoParams {}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentParams {
    Laser(LaserParams),
    Pbs(PbsParams),
    Hwp(PlateParams),
    Qwp(PlateParams),
    Bbo(BboParams),
    Apd(ApdParams),
    Smf,
    Prism,
    PhotonSource(PhotonSourceParams),
    BellSource(BellSourceParams),
}

fn parse_params<T: DeserializeOwned>(id: &str, v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Scene(format!("component {id:?}: {e}")))
}

impl ComponentParams {
    pub fn kind(&self) -> ComponentKind {
        match self {
            ComponentParams::Laser(_) => ComponentKind::Laser,
            ComponentParams::Pbs(_) => ComponentKind::Pbs,
            ComponentParams::Hwp(_) => ComponentKind::Hwp,
            ComponentParams::Qwp(_) => ComponentKind::Qwp,
            ComponentParams::Bbo(_) => ComponentKind::Bbo,
            ComponentParams::Apd(_) => ComponentKind::Apd,
            ComponentParams::Smf => ComponentKind::Smf,
            ComponentParams::Prism => ComponentKind::Prism,
            ComponentParams::PhotonSource(_) => ComponentKind::PhotonSource,
            ComponentParams::BellSource(_) => ComponentKind::BellSource,
        }
    }

    pub fn from_value(id: &str, kind: ComponentKind, v: Value) -> Result<Self> {
        let v = if v.is_null() {
            Value::Object(Default::default())
        } else {
            v
        };
        Ok(match kind {
            ComponentKind::Laser => ComponentParams::Laser(parse_params(id, v)?),
            ComponentKind::Pbs => ComponentParams::Pbs(parse_params(id, v)?),
            ComponentKind::Hwp => ComponentParams::Hwp(parse_params(id, v)?),
            ComponentKind::Qwp => ComponentParams::Qwp(parse_params(id, v)?),
            ComponentKind::Bbo => ComponentParams::Bbo(parse_params(id, v)?),
            ComponentKind::Apd => ComponentParams::Apd(parse_params(id, v)?),
            ComponentKind::Smf => {
                parse_params::<NoParams>(id, v)?;
                ComponentParams::Smf
            }
            ComponentKind::Prism => {
                parse_params::<NoParams>(id, v)?;
                ComponentParams::Prism
            }
            ComponentKind::PhotonSource => ComponentParams::PhotonSource(parse_params(id, v)?),
            ComponentKind::BellSource => ComponentParams::BellSource(parse_params(id, v)?),
        })
    }

    pub fn to_value(&self) -> Value {
        let v = match self {
            ComponentParams::Laser(p) => serde_json::to_value(p),
            ComponentParams::Pbs(p) => serde_json::to_value(p),
            ComponentParams::Hwp(p) | ComponentParams::Qwp(p) => serde_json::to_value(p),
            ComponentParams::Bbo(p) => serde_json::to_value(p),
            ComponentParams::Apd(p) => serde_json::to_value(p),
            ComponentParams::Smf | ComponentParams::Prism => serde_json::to_value(NoParams {}),
            ComponentParams::PhotonSource(p) => serde_json::to_value(p),
            ComponentParams::BellSource(p) => serde_json::to_value(p),
        };
        v.expect("component params serialize to JSON")
    }

    /// Names of the parameters holding an angle in degrees; these are the
    /// ones quantized by interactive edits.
    pub fn angle_params(&self) -> &'static [&'static str] {
        match self {
            ComponentParams::Laser(_) => &["polarization"],
            ComponentParams::Hwp(_) | ComponentParams::Qwp(_) | ComponentParams::Pbs(_) => {
                &["angle"]
            }
            _ => &[],
        }
    }

    pub fn validate(&self, id: &str) -> Result<()> {
        let invalid = |param: &str, message: String| Error::InvalidValue {
            param: format!("{id}.{param}"),
            message,
        };
        let finite = |param: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(invalid(param, format!("{x} is not finite")))
            }
        };
        match self {
            ComponentParams::Laser(p) => finite("polarization", p.polarization),
            ComponentParams::Hwp(p) | ComponentParams::Qwp(p) => finite("angle", p.angle),
            ComponentParams::Pbs(p) => p.spec().validate().map_err(|e| prefix(id, e)),
            ComponentParams::Bbo(p) => p.spec().validate().map_err(|e| prefix(id, e)),
            ComponentParams::Apd(p) => {
                p.spec().validate().map_err(|e| prefix(id, e))?;
                if p.herald_group.as_deref() == Some("") {
                    return Err(invalid("herald_group", "must not be empty".into()));
                }
                Ok(())
            }
            ComponentParams::PhotonSource(p) => p
                .state
                .check_normalized()
                .map_err(|e| invalid("state", e.to_string())),
            ComponentParams::Smf | ComponentParams::Prism | ComponentParams::BellSource(_) => {
                Ok(())
            }
        }
    }
}

fn prefix(id: &str, e: Error) -> Error {
    match e {
        Error::InvalidValue { param, message } => Error::InvalidValue {
            param: format!("{id}.{param}"),
            message,
        },
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub id: String,
    pub params: ComponentParams,
    /// Granularity of interactive angle edits, degrees.
    pub angle_step: f64,
}

impl Component {
    pub fn new(id: impl Into<String>, params: ComponentParams) -> Self {
        Self {
            id: id.into(),
            params,
            angle_step: DEFAULT_ANGLE_STEP,
        }
    }

    pub fn kind(&self) -> ComponentKind {
        self.params.kind()
    }
}

fn default_step() -> f64 {
    DEFAULT_ANGLE_STEP
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    id: String,
    kind: ComponentKind,
    #[serde(default)]
    params: Value,
    #[serde(default = "default_step")]
    angle_step: f64,
}

impl Serialize for Component {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ComponentDoc {
            id: self.id.clone(),
            kind: self.kind(),
            params: self.params.to_value(),
            angle_step: self.angle_step,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Component {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ComponentDoc::deserialize(d)?;
        let params = ComponentParams::from_value(&doc.id, doc.kind, doc.params)
            .map_err(serde::de::Error::custom)?;
        Ok(Component {
            id: doc.id,
            params,
            angle_step: doc.angle_step,
        })
    }
}

/// `component.port`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub component: String,
    pub port: String,
}

impl Endpoint {
    pub fn new(component: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            component: component.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.port)
    }
}

impl FromStr for Endpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.rsplit_once('.') {
            Some((c, p)) if !c.is_empty() && !p.is_empty() => Ok(Endpoint::new(c, p)),
            _ => Err(Error::Scene(format!(
                "endpoint {s:?} is not of the form component.port"
            ))),
        }
    }
}

impl Serialize for Endpoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Endpoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub from: Endpoint,
    pub to: Endpoint,
}

impl Link {
    pub fn new(from: &str, to: &str) -> Self {
        Self {
            from: from.parse().expect("valid endpoint"),
            to: to.parse().expect("valid endpoint"),
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub schema_version: String,
    pub components: Vec<Component>,
    pub links: Vec<Link>,
    /// Components fired on each shot.
    pub sources: Vec<String>,
    pub detectors: Vec<String>,
    /// Top-down bench coordinates in meters; presentation only.
    #[serde(default)]
    pub layout: BTreeMap<String, [f64; 2]>,
}

impl Scene {
    pub fn component(&self, id: &str) -> Result<&Component> {
        self.components
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::UnknownComponent(id.to_string()))
    }

    pub fn component_mut(&mut self, id: &str) -> Result<&mut Component> {
        self.components
            .iter_mut()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::UnknownComponent(id.to_string()))
    }

    /// The link leaving `endpoint`, if any.
    pub fn link_from(&self, endpoint: &Endpoint) -> Option<&Link> {
        self.links.iter().find(|l| &l.from == endpoint)
    }

    /// The link arriving at `endpoint`, if any.
    pub fn link_to(&self, endpoint: &Endpoint) -> Option<&Link> {
        self.links.iter().find(|l| &l.to == endpoint)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Version {
                found: self.schema_version.clone(),
                expected: SCHEMA_VERSION.into(),
            });
        }
        let mut ids = HashSet::new();
        for c in &self.components {
            if c.id.is_empty() || c.id.contains('.') || c.id.contains('&') {
                return Err(Error::Scene(format!(
                    "component id {:?} must be nonempty and free of '.' and '&'",
                    c.id
                )));
            }
            if !ids.insert(c.id.as_str()) {
                return Err(Error::Scene(format!("duplicate component id {:?}", c.id)));
            }
            if !(c.angle_step > 0.0 && c.angle_step <= 180.0) {
                return Err(Error::InvalidValue {
                    param: format!("{}.angle_step", c.id),
                    message: format!("{} not in (0, 180]", c.angle_step),
                });
            }
            c.params.validate(&c.id)?;
        }

        let mut used = HashSet::new();
        for l in &self.links {
            let from = self.component(&l.from.component).map_err(|_| {
                Error::Scene(format!("link {l}: no component {:?}", l.from.component))
            })?;
            if !from.kind().outputs().contains(&l.from.port.as_str()) {
                return Err(Error::Scene(format!(
                    "link {l}: {} is not an output port of a {}",
                    l.from,
                    from.kind()
                )));
            }
            let to = self.component(&l.to.component).map_err(|_| {
                Error::Scene(format!("link {l}: no component {:?}", l.to.component))
            })?;
            if !to.kind().inputs().contains(&l.to.port.as_str()) {
                return Err(Error::Scene(format!(
                    "link {l}: {} is not an input port of a {}",
                    l.to,
                    to.kind()
                )));
            }
            for e in [&l.from, &l.to] {
                if !used.insert(e.clone()) {
                    return Err(Error::Scene(format!(
                        "port {e} is used by more than one link"
                    )));
                }
            }
        }
        self.topological_order()?;

        let mut seen = HashSet::new();
        for d in &self.detectors {
            let c = self
                .component(d)
                .map_err(|_| Error::Scene(format!("detector {d:?} is not a component")))?;
            if c.kind() != ComponentKind::Apd {
                return Err(Error::Scene(format!(
                    "detector {d:?} is a {}, not an apd",
                    c.kind()
                )));
            }
            if !seen.insert(d) {
                return Err(Error::Scene(format!("detector {d:?} listed twice")));
            }
        }
        for c in self
            .components
            .iter()
            .filter(|c| c.kind() == ComponentKind::Apd)
        {
            if !seen.contains(&c.id) {
                return Err(Error::Scene(format!(
                    "apd {:?} missing from detectors",
                    c.id
                )));
            }
        }
        let mut seen = HashSet::new();
        for s in &self.sources {
            let c = self
                .component(s)
                .map_err(|_| Error::Scene(format!("source {s:?} is not a component")))?;
            if !c.kind().is_source() {
                return Err(Error::Scene(format!(
                    "source {s:?} is a {}, not a source",
                    c.kind()
                )));
            }
            if !seen.insert(s) {
                return Err(Error::Scene(format!("source {s:?} listed twice")));
            }
        }
        for key in self.layout.keys() {
            if !ids.contains(key.as_str()) {
                return Err(Error::Scene(format!(
                    "layout entry for unknown component {key:?}"
                )));
            }
        }
        self.classify()?;
        Ok(())
    }

    /// Component indices in a topological order of the link graph; ties
    /// resolve in declaration order.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let index: BTreeMap<&str, usize> = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.as_str(), i))
            .collect();
        let n = self.components.len();
        let mut indegree = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for l in &self.links {
            let (a, b) = (
                index[l.from.component.as_str()],
                index[l.to.component.as_str()],
            );
            succ[a].push(b);
            indegree[b] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &j in &succ[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.insert(j);
                }
            }
        }
        if order.len() != n {
            let stuck: Vec<&str> = (0..n)
                .filter(|i| !order.contains(i))
                .map(|i| self.components[i].id.as_str())
                .collect();
            return Err(Error::Scene(format!(
                "link graph has a cycle through {stuck:?}"
            )));
        }
        Ok(order)
    }

    /// Splits components into the classical pump network (everything a
    /// laser reaches before a crystal) and the quantum network. Returns the
    /// ids of the classical components.
    pub fn classify(&self) -> Result<BTreeSet<String>> {
        let mut classical = BTreeSet::new();
        let mut stack: Vec<&str> = self
            .components
            .iter()
            .filter(|c| c.kind() == ComponentKind::Laser)
            .map(|c| c.id.as_str())
            .collect();
        while let Some(id) = stack.pop() {
            if !classical.insert(id.to_string()) {
                continue;
            }
            let c = self.component(id)?;
            match c.kind() {
                ComponentKind::Laser
                | ComponentKind::Pbs
                | ComponentKind::Hwp
                | ComponentKind::Qwp
                | ComponentKind::Prism => {}
                other => {
                    return Err(Error::Scene(format!(
                        "pump light reaches {id:?}, a {other}; only plates, splitters and prisms may condition the pump"
                    )))
                }
            }
            for port in c.kind().outputs() {
                if let Some(l) = self.link_from(&Endpoint::new(id, *port)) {
                    let next = self.component(&l.to.component)?;
                    if next.kind() != ComponentKind::Bbo {
                        stack.push(&l.to.component);
                    }
                }
            }
        }
        for c in &self.components {
            if c.kind() == ComponentKind::Bbo {
                let pump = self.link_to(&Endpoint::new(&c.id, "in"));
                match pump {
                    Some(l) if classical.contains(&l.from.component) => {}
                    _ => {
                        return Err(Error::Scene(format!(
                            "crystal {:?} is not pumped by a laser",
                            c.id
                        )))
                    }
                }
            }
        }
        // quantum light must never enter the pump network
        for l in &self.links {
            if classical.contains(&l.to.component) && !classical.contains(&l.from.component) {
                return Err(Error::Scene(format!(
                    "link {l} feeds photons into the pump network"
                )));
            }
        }
        Ok(classical)
    }

    /// Herald groups in first-appearance order over `detectors`.
    pub fn herald_groups(&self) -> Vec<(String, Vec<String>)> {
        let mut groups: Vec<(String, Vec<String>)> = Vec::new();
        for d in &self.detectors {
            if let Ok(Component {
                params:
                    ComponentParams::Apd(ApdParams {
                        herald_group: Some(g),
                        ..
                    }),
                ..
            }) = self.component(d)
            {
                match groups.iter_mut().find(|(name, _)| name == g) {
                    Some((_, v)) => v.push(d.clone()),
                    None => groups.push((g.clone(), vec![d.clone()])),
                }
            }
        }
        groups
    }

    /// Sets one parameter from a JSON value and revalidates the scene. On
    /// error the scene is left untouched.
    pub fn set_param(&mut self, component: &str, param: &str, value: Value) -> Result<()> {
        let c = self.component(component)?;
        let mut params = c.params.to_value();
        let obj = params
            .as_object_mut()
            .expect("component params serialize as an object");
        if param == "angle_step" {
            let step = value.as_f64().ok_or_else(|| Error::InvalidValue {
                param: format!("{component}.angle_step"),
                message: format!("{value} is not a number"),
            })?;
            let mut next = self.clone();
            next.component_mut(component)?.angle_step = step;
            next.validate()?;
            *self = next;
            return Ok(());
        }
        let known = obj.contains_key(param)
            || matches!(
                (&c.params, param),
                (ComponentParams::Pbs(_), "angle") | (ComponentParams::Apd(_), "herald_group")
            );
        if !known {
            return Err(Error::UnknownParam {
                component: component.into(),
                param: param.into(),
            });
        }
        obj.insert(param.into(), value);
        let kind = c.kind();
        let parsed = ComponentParams::from_value(component, kind, params).map_err(|e| {
            Error::InvalidValue {
                param: format!("{component}.{param}"),
                message: e.to_string(),
            }
        })?;
        let mut next = self.clone();
        next.component_mut(component)?.params = parsed;
        next.validate()?;
        *self = next;
        Ok(())
    }

    /// Sets a degree-valued angle parameter; `interactive` snaps it to the
    /// component's `angle_step` grid and wraps it into `[0, 180)`.
    pub fn set_angle(
        &mut self,
        component: &str,
        param: &str,
        degrees: f64,
        interactive: bool,
    ) -> Result<f64> {
        let c = self.component(component)?;
        if !c.params.angle_params().contains(&param) {
            return Err(Error::UnknownParam {
                component: component.into(),
                param: param.into(),
            });
        }
        let value = if interactive {
            quantize_angle(degrees, c.angle_step)
        } else {
            degrees
        };
        self.set_param(component, param, Value::from(value))?;
        Ok(value)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scene serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scene serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

/// Nearest multiple of `step`, wrapped into `[0, 180)`.
pub fn quantize_angle(degrees: f64, step: f64) -> f64 {
    let q = (degrees / step).round() * step;
    let w = q.rem_euclid(180.0);
    // keep the grid exact after wrapping
    let w = (w / step).round() * step;
    if w >= 180.0 {
        0.0
    } else {
        w + 0.0
    }
}

/// Parses and validates a scene document.
pub fn load_scene(text: &str) -> Result<Scene> {
    let scene: Scene = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        // report a version mismatch before any structural complaint
        if let Ok(v) = serde_json::from_str::<Value>(text) {
            if let Some(found) = v.get("schema_version").and_then(Value::as_str) {
                if found != SCHEMA_VERSION {
                    return Error::Version {
                        found: found.into(),
                        expected: SCHEMA_VERSION.into(),
                    };
                }
            }
        }
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    })?;
    scene.validate()?;
    Ok(scene)
}

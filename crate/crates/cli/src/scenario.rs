//! Scenario files: `{kind, payload, outputs, seed, tolerances}`.

use std::path::Path;

use moreau::convergence::SetKind;
use moreau::merton::{MertonLdpConfig, TailRateConfig};
use moreau::{CheckConfig, Grid, GridFn, KernelSpec, Mode, SequenceSpec, VerdictConfig, YSet};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Conjugate,
    Covering,
    Ldp,
    Merton,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Conjugate => "conjugate",
            Kind::Covering => "covering",
            Kind::Ldp => "ldp",
            Kind::Merton => "merton",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: Kind,
    pub payload: serde_json::Value,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// File names relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// Per-set margins of the bounds check (`ldp` only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sets_csv: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Trend tolerance of the `ldp` checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<f64>,
    /// Quasi-continuity tolerance of the `covering` verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qc: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `Bf` on X for `f` on Y.
    #[default]
    Forward,
    /// `B°f` on Y for `f` on X.
    Dual,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fast transform when the kernel is bilinear on lines, brute force otherwise.
    #[default]
    Auto,
    Brute,
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugatePayload {
    pub kernel: KernelSpec,
    pub x_grid: Grid,
    pub y_grid: Grid,
    pub f: GridFn,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub subdifferential: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringPayload {
    pub kernel: KernelSpec,
    pub x_grid: Grid,
    pub y_grid: Grid,
    /// Function on X whose pre-image under `B` is sought.
    pub g: GridFn,
    /// Subset `X'` of X nodes; all nodes when absent.
    #[serde(default)]
    pub x_prime: Option<Vec<usize>>,
    #[serde(default)]
    pub config: VerdictConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Member {
    pub spec: SequenceSpec,
    pub n_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSet {
    pub id: String,
    pub kind: SetKind,
    pub set: YSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsCheck {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub sets: Vec<UserSet>,
}

impl Default for BoundsCheck {
    fn default() -> Self {
        BoundsCheck { enabled: true, cap: default_cap(), sets: Vec::new() }
    }
}

fn yes() -> bool {
    true
}

fn default_cap() -> usize {
    200
}

fn default_margin() -> f64 {
    0.1
}

fn default_mode() -> Mode {
    Mode::LimitAsserted
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericLdp {
    pub kernel: KernelSpec,
    pub x_grid: Grid,
    pub y_grid: Grid,
    pub family: Vec<Member>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub check: CheckConfig,
    /// Fraction of each axis treated as the neighbourhood of an open edge.
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub assume_tight: bool,
    /// Bounds check of a single-member family against `F̄`.
    #[serde(default)]
    pub bounds_check: BoundsCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family_type", rename_all = "snake_case")]
pub enum LdpPayload {
    Generic(GenericLdp),
    Merton(MertonLdpConfig),
}

pub type MertonPayload = TailRateConfig;

pub fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Failure::Validation(format!(
            "{}: line {}, column {}, field `{}`: {inner}",
            path.display(),
            inner.line(),
            inner.column(),
            e.path()
        ))
    })
}

pub fn payload<T: DeserializeOwned>(s: &Scenario) -> Result<T, Failure> {
    serde_path_to_error::deserialize(&s.payload)
        .map_err(|e| Failure::Validation(format!("payload field `{}`: {}", e.path(), e.inner())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundled() -> Vec<(String, Scenario)> {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
        let mut out: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .map(|p| (p.display().to_string(), load(&p).unwrap()))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    #[test]
    fn bundled_scenarios_round_trip() {
        let all = bundled();
        assert!(all.len() >= 5);
        for (path, s) in all {
            let text = serde_json::to_string(&s).unwrap();
            let back: Scenario = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s, "{path}");
            let typed = match s.kind {
                Kind::Conjugate => serde_json::to_value(payload::<ConjugatePayload>(&s).unwrap()),
                Kind::Covering => serde_json::to_value(payload::<CoveringPayload>(&s).unwrap()),
                Kind::Ldp => serde_json::to_value(payload::<LdpPayload>(&s).unwrap()),
                Kind::Merton => serde_json::to_value(payload::<MertonPayload>(&s).unwrap()),
            }
            .unwrap();
            let again = Scenario { payload: typed, ..s.clone() };
            let reparsed = match s.kind {
                Kind::Ldp => serde_json::to_value(payload::<LdpPayload>(&again).unwrap()).unwrap(),
                _ => again.payload.clone(),
            };
            assert_eq!(reparsed, again.payload, "{path}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let s: Scenario = serde_json::from_str(
            r#"{"kind":"merton","payload":{"params":{"r":0.05,"alpha":0.1,"sigma":0.2},"c":0.1,"t_list":[1],"n_paths":1,"xi":{"min":0,"max":1,"step":0.5},"speed":3}}"#,
        )
        .unwrap();
        let err = payload::<MertonPayload>(&s).err().unwrap();
        assert!(matches!(&err, Failure::Validation(m) if m.contains("speed")), "{err:?}");
        assert!(serde_json::from_str::<Scenario>(r#"{"kind":"ldp","payload":{},"extra":1}"#).is_err());
        assert!(serde_json::from_str::<Scenario>(r#"{"kind":"plot","payload":{}}"#).is_err());
    }
}

//! Run configuration: JSON schema with flexible complex literals.
//!
//! Complex parameters accept a bare number, a two-element `[re, im]`
//! array, or an `"re+imi"` string; artifacts are always written with the
//! `[re, im]` form.

use num_complex::Complex64 as C64;
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use susy2::closed_form::ClosedFormKind;
use susy2::io::parse_complex;

/// Complex scalar with forgiving deserialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CxValue(pub C64);

impl Serialize for CxValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for CxValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(n) => {
                let re = n.as_f64().ok_or_else(|| D::Error::custom("bad number"))?;
                Ok(CxValue(C64::new(re, 0.0)))
            }
            serde_json::Value::String(s) => {
                parse_complex(&s).map(CxValue).map_err(|e| D::Error::custom(e.to_string()))
            }
            serde_json::Value::Array(a) if a.len() == 2 => {
                let re = a[0].as_f64().ok_or_else(|| D::Error::custom("bad re"))?;
                let im = a[1].as_f64().ok_or_else(|| D::Error::custom("bad im"))?;
                Ok(CxValue(C64::new(re, im)))
            }
            other => Err(D::Error::custom(format!(
                "complex values are numbers, [re, im] pairs or 're+imi' strings, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemDescKind {
    FiniteInterval,
    HalfLine,
    WholeLine,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDesc {
    pub kind: ProblemDescKind,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub trunc_l: Option<f64>,
}

/// Seed potential: the zero potential or a CSV file in the grid-function
/// layout.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedPotentialDesc {
    Zero,
    Csv(String),
}

impl Default for SeedPotentialDesc {
    fn default() -> Self {
        SeedPotentialDesc::Zero
    }
}

impl Serialize for SeedPotentialDesc {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SeedPotentialDesc::Zero => "zero".serialize(s),
            SeedPotentialDesc::Csv(p) => {
                #[derive(Serialize)]
                struct Csv<'a> {
                    csv: &'a str,
                }
                Csv { csv: p }.serialize(s)
            }
        }
    }
}

impl<'de> Deserialize<'de> for SeedPotentialDesc {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) if s == "zero" => Ok(SeedPotentialDesc::Zero),
            serde_json::Value::Object(m) => match m.get("csv").and_then(|p| p.as_str()) {
                Some(p) => Ok(SeedPotentialDesc::Csv(p.to_string())),
                None => Err(D::Error::custom("seed_potential object needs a 'csv' field")),
            },
            other => Err(D::Error::custom(format!(
                "seed_potential is \"zero\" or {{\"csv\": path}}, got {other}"
            ))),
        }
    }
}

/// Closed-form description mirroring the library families but with
/// flexible complex literals.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedFormDesc {
    SinK {
        k: CxValue,
        #[serde(default)]
        x0: f64,
    },
    CosKc {
        k: CxValue,
        c: CxValue,
    },
    SinhA {
        a: CxValue,
        #[serde(default)]
        x0: f64,
    },
    CoshAc {
        a: CxValue,
        c: CxValue,
    },
    ExpA {
        a: CxValue,
    },
}

impl ClosedFormDesc {
    pub fn to_kind(&self) -> ClosedFormKind {
        match *self {
            ClosedFormDesc::SinK { k, x0 } => ClosedFormKind::SinK { k: k.0, x0 },
            ClosedFormDesc::CosKc { k, c } => ClosedFormKind::CosKc { k: k.0, c: c.0 },
            ClosedFormDesc::SinhA { a, x0 } => ClosedFormKind::SinhA { a: a.0, x0 },
            ClosedFormDesc::CoshAc { a, c } => ClosedFormKind::CoshAc { a: a.0, c: c.0 },
            ClosedFormDesc::ExpA { a } => ClosedFormKind::ExpA { a: a.0 },
        }
    }
}

/// A transformation function given as initial-value data for the seed
/// equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IvpDesc {
    pub alpha: CxValue,
    pub x_start: f64,
    pub u0: CxValue,
    pub du0: CxValue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FnDesc {
    ClosedForm { closed_form: ClosedFormDesc },
    Ivp { ivp: IvpDesc },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TransformationDesc {
    NonConfluent {
        u1: FnDesc,
        u2: FnDesc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha1: Option<CxValue>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha2: Option<CxValue>,
    },
    Confluent {
        u: FnDesc,
        c: CxValue,
        #[serde(default)]
        x_anchor: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<CxValue>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericOpts {
    /// Node count of the working grid (odd).
    pub grid_n: usize,
    /// Interior nodes of the eigensolver discretisation.
    pub eig_n: usize,
    /// How many lowest levels to verify.
    pub levels: usize,
    /// Truncation half-width override for unbounded problems.
    pub trunc_l: Option<f64>,
    /// Spectrum matching tolerance.
    pub tol: f64,
}

impl Default for NumericOpts {
    fn default() -> Self {
        NumericOpts { grid_n: 16385, eig_n: 2047, levels: 6, trunc_l: None, tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemDesc>,
    #[serde(default)]
    pub seed_potential: SeedPotentialDesc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transformation: Option<TransformationDesc>,
    #[serde(default)]
    pub numeric: NumericOpts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl RunConfig {
    pub fn empty() -> Self {
        RunConfig {
            command: None,
            example: None,
            problem: None,
            seed_potential: SeedPotentialDesc::Zero,
            transformation: None,
            numeric: NumericOpts::default(),
            output: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_values_accept_three_forms() {
        let j = r#"{"a": 1.5, "b": [0.5, -2.0], "c": "1+0.5i"}"#;
        #[derive(Deserialize)]
        struct S {
            a: CxValue,
            b: CxValue,
            c: CxValue,
        }
        let s: S = serde_json::from_str(j).unwrap();
        assert_eq!(s.a.0, C64::new(1.5, 0.0));
        assert_eq!(s.b.0, C64::new(0.5, -2.0));
        assert_eq!(s.c.0, C64::new(1.0, 0.5));
    }

    #[test]
    fn full_config_round_trips() {
        let j = r#"{
            "problem": {"kind": "finite_interval", "a": -3.141592653589793, "b": 3.141592653589793},
            "seed_potential": "zero",
            "transformation": {
                "mode": "non_confluent",
                "u1": {"closed_form": {"kind": "sin_k", "k": 1.0}},
                "u2": {"closed_form": {"kind": "cos_kc", "k": 0.3333333333333333, "c": "0.4i"}}
            },
            "numeric": {"grid_n": 2049, "eig_n": 800, "levels": 4, "tol": 1e-3},
            "output": "out"
        }"#;
        let c: RunConfig = serde_json::from_str(j).unwrap();
        assert!(matches!(c.transformation, Some(TransformationDesc::NonConfluent { .. })));
        assert_eq!(c.numeric.grid_n, 2049);
        let back = serde_json::to_string(&c).unwrap();
        let c2: RunConfig = serde_json::from_str(&back).unwrap();
        assert_eq!(c2.numeric.eig_n, 800);
    }
}

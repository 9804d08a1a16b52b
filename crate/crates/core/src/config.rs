//! Model definition files (TOML).
//!
//! ```toml
//! type = "schnakenberg"
//! a = 0.2
//! b = 1.3
//! r = 1.0
//!
//! [domain]
//! kind = "rectangle"
//! lx = 10.0
//! ly = 5.0
//! bc = "neumann"
//! ```
//!
//! A custom model lists its Taylor data as monomial coefficients:
//! `jacobian` (row-major), `quad1`/`quad2` (u², uv, v²) and
//! `cubic1`/`cubic2` (u³, u²v, uv², v³).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{schnakenberg_model, KineticModel, SchnakenbergParams};
use crate::spectrum::DomainSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ModelSpec {
    Schnakenberg {
        a: f64,
        b: f64,
        r: f64,
    },
    Custom {
        #[serde(default)]
        label: Option<String>,
        #[serde(default)]
        steady_state: [f64; 2],
        jacobian: [f64; 4],
        #[serde(default)]
        quad1: [f64; 3],
        #[serde(default)]
        quad2: [f64; 3],
        #[serde(default)]
        cubic1: [f64; 4],
        #[serde(default)]
        cubic2: [f64; 4],
    },
}

impl ModelSpec {
    pub fn schnakenberg_params(&self) -> Option<SchnakenbergParams> {
        match *self {
            ModelSpec::Schnakenberg { a, b, r } => Some(SchnakenbergParams { a, b, r }),
            ModelSpec::Custom { .. } => None,
        }
    }

    pub fn build(&self) -> Result<KineticModel> {
        match self {
            ModelSpec::Schnakenberg { a, b, r } => {
                schnakenberg_model(SchnakenbergParams::new(*a, *b, *r)?)
            }
            ModelSpec::Custom {
                label,
                steady_state,
                jacobian,
                quad1,
                quad2,
                cubic1,
                cubic2,
            } => {
                let j = jacobian;
                KineticModel::from_monomials(
                    label.clone().unwrap_or_else(|| "custom".into()),
                    *steady_state,
                    [[j[0], j[1]], [j[2], j[3]]],
                    [*quad1, *quad2],
                    [*cubic1, *cubic2],
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text)?;
        if let Some(d) = &file.domain {
            d.validate()?;
        }
        file.model.build()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{BoundaryCondition, Geometry};

    #[test]
    fn parses_schnakenberg_with_domain() {
        let f = ModelFile::parse(
            "type = \"schnakenberg\"\na = 0.2\nb = 1.3\nr = 1\n[domain]\nkind = \"rectangle\"\nlx = 10\nly = 5\nbc = \"neumann\"\n",
        )
        .unwrap();
        assert_eq!(
            f.model,
            ModelSpec::Schnakenberg {
                a: 0.2,
                b: 1.3,
                r: 1.0
            }
        );
        let d = f.domain.unwrap();
        assert_eq!(d.geometry, Geometry::Rectangle { lx: 10.0, ly: 5.0 });
        assert_eq!(d.bc, BoundaryCondition::Neumann);
    }

    #[test]
    fn custom_matches_builtin() {
        let m = schnakenberg_model(SchnakenbergParams::new(0.2, 1.3, 1.0).unwrap()).unwrap();
        let j = m.jacobian();
        let [q1, q2] = m.quad_monomials();
        let [c1, c2] = m.cubic_monomials();
        let spec = ModelSpec::Custom {
            label: None,
            steady_state: m.steady_state(),
            jacobian: [j[0][0], j[0][1], j[1][0], j[1][1]],
            quad1: q1,
            quad2: q2,
            cubic1: c1,
            cubic2: c2,
        };
        let built = spec.build().unwrap();
        assert_eq!(built.jacobian(), m.jacobian());
        assert_eq!(built.quad_tensors(), m.quad_tensors());
        assert_eq!(built.cubic_tensors(), m.cubic_tensors());
    }

    #[test]
    fn round_trip() {
        let f = ModelFile {
            model: ModelSpec::Custom {
                label: Some("lin".into()),
                steady_state: [1.0, 2.0],
                jacobian: [-1.0, 0.5, -0.25, -2.0],
                quad1: [0.1, 0.0, 0.0],
                quad2: [0.0; 3],
                cubic1: [0.0; 4],
                cubic2: [0.0, 0.0, 0.0, 1e-3],
            },
            domain: Some(DomainSpec::interval(7.5, BoundaryCondition::Dirichlet)),
        };
        let text = f.to_toml().unwrap();
        assert_eq!(ModelFile::parse(&text).unwrap(), f);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ModelFile::parse("type = \"schnakenberg\"\na = 0.2\nb = -1\nr = 1\n").is_err());
        assert!(ModelFile::parse("type = \"brusselator\"\n").is_err());
        assert!(ModelFile::parse("type = \"custom\"\njacobian = [nan, 0, 0, -1]\n").is_err());
        assert!(ModelFile::parse(
            "type = \"schnakenberg\"\na = 0.2\nb = 1.3\nr = 1\n[domain]\nkind = \"interval\"\ns = 0\nbc = \"neumann\"\n"
        )
        .is_err());
    }
}

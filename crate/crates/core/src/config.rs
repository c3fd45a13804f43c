//! The `bmg/1` input format: one JSON document describing a space, its measures and the
//! functions on it. Unknown keys are rejected at every level.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BmgError, Result};
use crate::func::{ScalarFunction, ScalarSpec, Term, VectorFunction, VectorSpec};
use crate::girsanov::ProcessModel;
use crate::measure::{ScalarMeasure, VectorMeasure};
use crate::space::{AtomSet, Partition, SpaceModel, SpaceRef};
use crate::vector::{Norm, VectorValue};

pub const SCHEMA: &str = "bmg/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub id: String,
    /// Scalar mass; 0 when absent.
    #[serde(default)]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpaceSpec {
    Finite { atoms: Vec<AtomSpec> },
    /// `[a, b]` cut into `cells`; `mu` gives per-cell masses, Lebesgue when absent.
    Grid {
        a: f64,
        b: f64,
        cells: usize,
        #[serde(default)]
        mu: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub dim: usize,
    /// Vector mass per atom id (or `cellN`); missing atoms carry zero.
    pub values: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub times: Vec<f64>,
    #[serde(default)]
    pub q: f64,
    pub pitch: f64,
    /// Path of each atom: its value at every time.
    pub paths: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFile {
    pub schema: String,
    pub space: SpaceSpec,
    #[serde(default)]
    pub norm: Option<Norm>,
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    /// Vector integrand `F`.
    #[serde(default)]
    pub integrand: Option<VectorSpec>,
    /// Scalar function `f`.
    #[serde(default)]
    pub scalar: Option<ScalarSpec>,
    /// Outer function `g` of a real variable, as a sum of terms.
    #[serde(default)]
    pub outer: Option<Vec<Term>>,
    /// Blocks of atom ids generating a sub-σ-algebra.
    #[serde(default)]
    pub partition: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub process: Option<ProcessSpec>,
}

fn missing(what: &str) -> BmgError {
    BmgError::InvalidInput(format!("input has no `{what}` section"))
}

impl InputFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: InputFile =
            serde_json::from_str(text).map_err(|e| BmgError::InvalidInput(format!("parse error: {e}")))?;
        if file.schema != SCHEMA {
            return Err(BmgError::InvalidInput(format!(
                "unsupported schema `{}` (expected `{SCHEMA}`)",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BmgError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn norm(&self) -> Norm {
        self.norm.unwrap_or_default()
    }

    pub fn space(&self) -> Result<SpaceRef> {
        match &self.space {
            SpaceSpec::Finite { atoms } => SpaceModel::finite(atoms.iter().map(|a| a.id.clone())),
            SpaceSpec::Grid { a, b, cells, .. } => SpaceModel::grid(*a, *b, *cells),
        }
    }

    pub fn scalar_measure(&self, space: &SpaceRef) -> Result<ScalarMeasure> {
        match &self.space {
            SpaceSpec::Finite { atoms } => {
                ScalarMeasure::new(space.clone(), atoms.iter().map(|a| a.mu.unwrap_or(0.0)).collect())
            }
            SpaceSpec::Grid { mu: Some(m), .. } => ScalarMeasure::new(space.clone(), m.clone()),
            SpaceSpec::Grid { mu: None, .. } => Ok(ScalarMeasure::lebesgue(space.clone())),
        }
    }

    pub fn vector_measure(&self, space: &SpaceRef) -> Result<VectorMeasure> {
        let spec = self.measure.as_ref().ok_or_else(|| missing("measure"))?;
        if spec.dim == 0 {
            return Err(BmgError::InvalidInput("measure dimension must be at least 1".into()));
        }
        for id in spec.values.keys() {
            if space.index_of(id).is_none() {
                return Err(BmgError::InvalidInput(format!("measure names unknown atom `{id}`")));
            }
        }
        let norm = self.norm();
        let values = (0..space.len())
            .map(|i| {
                let label = space.label(i);
                match spec.values.get(&label) {
                    Some(v) if v.len() != spec.dim => Err(BmgError::InvalidInput(format!(
                        "measure of atom `{label}` has {} coordinates, expected {}",
                        v.len(),
                        spec.dim
                    ))),
                    Some(v) => Ok(VectorValue::new(v.clone(), norm)),
                    None => Ok(VectorValue::zeros(spec.dim, norm)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        VectorMeasure::new(space.clone(), values)
    }

    pub fn integrand(&self, space: &SpaceRef) -> Result<VectorFunction> {
        VectorFunction::resolve(self.integrand.as_ref().ok_or_else(|| missing("integrand"))?, space)
    }

    pub fn scalar(&self, space: &SpaceRef) -> Result<ScalarFunction> {
        ScalarFunction::resolve(self.scalar.as_ref().ok_or_else(|| missing("scalar"))?, space)
    }

    pub fn outer(&self) -> Result<Vec<Term>> {
        self.outer.clone().ok_or_else(|| missing("outer"))
    }

    pub fn partition(&self, space: &SpaceRef) -> Result<Partition> {
        let blocks = self.partition.as_ref().ok_or_else(|| missing("partition"))?;
        let blocks = blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|id| {
                        space
                            .index_of(id)
                            .ok_or_else(|| BmgError::InvalidInput(format!("partition names unknown atom `{id}`")))
                    })
                    .collect::<Result<AtomSet>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(space.clone(), blocks)
    }

    /// The path process, with `M` taken from the `measure` section.
    pub fn process(&self, space: &SpaceRef) -> Result<ProcessModel> {
        let spec = self.process.as_ref().ok_or_else(|| missing("process"))?;
        let m = self.vector_measure(space)?;
        for id in spec.paths.keys() {
            if space.index_of(id).is_none() {
                return Err(BmgError::InvalidInput(format!("process names unknown atom `{id}`")));
            }
        }
        let mut values = vec![vec![0.0; space.len()]; spec.times.len()];
        for a in 0..space.len() {
            let label = space.label(a);
            let path = spec
                .paths
                .get(&label)
                .ok_or_else(|| BmgError::InvalidInput(format!("process has no path for atom `{label}`")))?;
            if path.len() != spec.times.len() {
                return Err(BmgError::InvalidInput(format!(
                    "path of atom `{label}` has {} values for {} times",
                    path.len(),
                    spec.times.len()
                )));
            }
            for (k, &x) in path.iter().enumerate() {
                values[k][a] = x;
            }
        }
        ProcessModel::paths(m, spec.times.clone(), values, spec.q, spec.pitch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_ATOMS: &str = r#"{
        "schema": "bmg/1",
        "space": {"kind": "finite", "atoms": [{"id": "a", "mu": 0.25}, {"id": "b", "mu": 0.75}]},
        "measure": {"dim": 2, "values": {"a": [1, 0]}},
        "integrand": {"kind": "table", "values": {"a": [1, 0], "b": [0, 2]}}
    }"#;

    #[test]
    fn parses_and_resolves() {
        let f = InputFile::parse(TWO_ATOMS).unwrap();
        let s = f.space().unwrap();
        assert_eq!(f.scalar_measure(&s).unwrap().masses(), &[0.25, 0.75]);
        let m = f.vector_measure(&s).unwrap();
        assert!(m.atom(1).is_zero());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = TWO_ATOMS.replace("\"measure\"", "\"measures\"");
        let e = InputFile::parse(&text).unwrap_err().to_string();
        assert!(e.contains("unknown field") && e.contains("line"), "{e}");
    }

    #[test]
    fn negative_mass_names_the_atom() {
        let text = TWO_ATOMS.replace("0.75", "-0.75");
        let f = InputFile::parse(&text).unwrap();
        let e = f.scalar_measure(&f.space().unwrap()).unwrap_err().to_string();
        assert!(e.contains("`b`"), "{e}");
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = TWO_ATOMS.replace("bmg/1", "bmg/0");
        assert!(InputFile::parse(&text).is_err());
    }
}

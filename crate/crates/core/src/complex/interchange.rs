//! JSON interchange format for complexes.
//!
//! ```json
//! {
//!   "curvature": 0.0,
//!   "dimension": 2,
//!   "simplexes": [{ "id": 0, "vertices": [[0, 0], [1, 0], [1, 1]] }],
//!   "gluings": [{ "simplex_a": 0, "face_a": [0, 2], "simplex_b": 1, "face_b": [0, 1] }]
//! }
//! ```
//!
//! `dimension` is the model dimension; curved models use `dimension + 1`
//! ambient coordinates per vertex.

use serde::{Deserialize, Serialize};

use super::{build_complex, ComplexK, Gluing, SimplexId, SimplexSpec};
use crate::error::{Error, Result};
use crate::model_space::{Curvature, ModelPoint};

/// Tolerance for snapping file coordinates onto the model.
pub const FILE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexFile {
    pub curvature: f64,
    pub dimension: usize,
    pub simplexes: Vec<SimplexRecord>,
    #[serde(default)]
    pub gluings: Vec<Gluing>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexRecord {
    pub id: SimplexId,
    pub vertices: Vec<Vec<f64>>,
}

impl ComplexFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Parse(format!("line {}, column {}, at `{}`: {}", inner.line(), inner.column(), path, inner))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_complex(k: &ComplexK) -> Self {
        ComplexFile {
            curvature: k.kappa().kappa(),
            dimension: k.model_dimension(),
            simplexes: k
                .simplexes()
                .iter()
                .map(|s| SimplexRecord { id: s.id, vertices: s.vertices.iter().map(|v| v.coords().to_vec()).collect() })
                .collect(),
            gluings: k.gluings().to_vec(),
        }
    }

    pub fn build(&self) -> Result<ComplexK> {
        let kappa = Curvature::new(self.curvature)?;
        let want = kappa.ambient_len(self.dimension);
        let mut specs = Vec::with_capacity(self.simplexes.len());
        for (i, s) in self.simplexes.iter().enumerate() {
            let mut vertices = Vec::with_capacity(s.vertices.len());
            for (j, row) in s.vertices.iter().enumerate() {
                if row.len() != want {
                    return Err(Error::Parse(format!(
                        "simplexes[{i}].vertices[{j}]: expected {want} coordinates for dimension {} at curvature {}, got {}",
                        self.dimension,
                        self.curvature,
                        row.len()
                    )));
                }
                let p = ModelPoint::projected(kappa, row.clone(), FILE_TOLERANCE)
                    .map_err(|e| Error::Parse(format!("simplexes[{i}].vertices[{j}]: {e}")))?;
                vertices.push(p);
            }
            specs.push(SimplexSpec::new(s.id, vertices));
        }
        build_complex(kappa, specs, self.gluings.clone())
    }
}

pub fn load_complex(text: &str) -> Result<ComplexK> {
    ComplexFile::parse(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"{
  "curvature": 0,
  "dimension": 2,
  "simplexes": [
    { "id": 0, "vertices": [[0, 0], [1, 0], [1, 1]] },
    { "id": 1, "vertices": [[0, 0], [1, 1], [0, 1]] }
  ],
  "gluings": [{ "simplex_a": 0, "face_a": [0, 2], "simplex_b": 1, "face_b": [0, 1] }]
}"#;

    #[test]
    fn square_roundtrip() {
        let k = load_complex(SQUARE).unwrap();
        assert_eq!(k.simplexes().len(), 2);
        let again = ComplexFile::parse(&ComplexFile::from_complex(&k).to_json()).unwrap();
        assert_eq!(again, ComplexFile::from_complex(&k));
    }

    #[test]
    fn diagnostics_name_the_field() {
        let bad = SQUARE.replace("\"face_b\": [0, 1]", "\"face_b\": [0, \"x\"]");
        let msg = ComplexFile::parse(&bad).unwrap_err().to_string();
        assert!(msg.contains("gluings[0].face_b"), "{msg}");
        assert!(msg.contains("line 8"), "{msg}");
    }

    #[test]
    fn wrong_coordinate_count() {
        let bad = SQUARE.replace("[1, 0], [1, 1]]", "[1, 0, 0], [1, 1]]");
        assert!(load_complex(&bad).unwrap_err().to_string().contains("simplexes[0].vertices[1]"));
    }
}

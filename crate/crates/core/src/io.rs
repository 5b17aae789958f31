//! JSON input formats.
//!
//! Families: `{"arity": k, "sizes": [..], "family": [[[i, j, ..], ..], ..]}`.
//! A single relation uses the key `"relation"` with one list of points.
//! Measures: `{"axes": [["1/4", ..], ..]}`.

use std::collections::HashSet;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{serde_rational_matrix, Rational};
use crate::regularity::Decomposition;
use crate::relation::{ProductDomain, ProductMeasure, Relation, SetFamily};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub arity: usize,
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<Vec<Vec<usize>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    #[serde(with = "serde_rational_matrix")]
    pub axes: Vec<Vec<Rational>>,
}

/// Deserializes `text`, reporting the line and column of syntax errors.
pub fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "{what}: line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

impl FamilyFile {
    fn domain(&self) -> Result<ProductDomain> {
        if self.arity != self.sizes.len() {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: self.sizes.len(),
            });
        }
        ProductDomain::new(self.sizes.clone())
    }

    pub fn into_family(self) -> Result<SetFamily> {
        let domain = self.domain()?;
        let sets = match (self.family, self.relation) {
            (Some(f), None) => f,
            (None, Some(r)) => vec![r],
            _ => {
                return Err(Error::Parse(
                    "exactly one of \"family\" and \"relation\" is required".into(),
                ))
            }
        };
        let members = sets
            .iter()
            .enumerate()
            .map(|(i, points)| {
                set_from_points(&domain, points).map_err(|e| match e {
                    Error::Parse(m) => Error::Parse(format!("member {i}: {m}")),
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SetFamily::new(domain, members)
    }

    /// The single relation of a `"relation"` file, or of a one-member family.
    pub fn into_relation(self) -> Result<Relation> {
        let family = self.into_family()?;
        if family.len() != 1 {
            return Err(Error::Parse(format!(
                "expected one relation, found {} sets",
                family.len()
            )));
        }
        Ok(family.members()[0].clone())
    }

    pub fn from_family(family: &SetFamily) -> Self {
        FamilyFile {
            arity: family.arity(),
            sizes: family.domain().sizes().to_vec(),
            family: Some(family.members().iter().map(|m| m.points()).collect()),
            relation: None,
        }
    }

    pub fn from_relation(relation: &Relation) -> Self {
        FamilyFile {
            arity: relation.domain().arity(),
            sizes: relation.domain().sizes().to_vec(),
            family: None,
            relation: Some(relation.points()),
        }
    }
}

fn set_from_points(domain: &ProductDomain, points: &[Vec<usize>]) -> Result<Relation> {
    let mut seen = HashSet::with_capacity(points.len());
    for p in points {
        domain.check_point(p)?;
        if !seen.insert(p.as_slice()) {
            return Err(Error::Parse(format!("duplicate point {p:?}")));
        }
    }
    Relation::from_points(domain, points.iter().map(Vec::as_slice))
}

pub fn parse_family(text: &str) -> Result<SetFamily> {
    parse_json::<FamilyFile>(text, "family")?.into_family()
}

pub fn parse_relation(text: &str) -> Result<Relation> {
    parse_json::<FamilyFile>(text, "relation")?.into_relation()
}

pub fn parse_measure(text: &str, domain: &ProductDomain) -> Result<ProductMeasure> {
    let file: MeasureFile = parse_json(text, "measure")?;
    ProductMeasure::new(domain.clone(), file.axes)
}

pub fn parse_decomposition(text: &str) -> Result<Decomposition> {
    parse_json(text, "decomposition")
}

pub fn read_family(path: &Path) -> Result<SetFamily> {
    parse_family(&read_text(path)?)
}

pub fn read_relation(path: &Path) -> Result<Relation> {
    parse_relation(&read_text(path)?)
}

pub fn read_measure(path: &Path, domain: &ProductDomain) -> Result<ProductMeasure> {
    parse_measure(&read_text(path)?, domain)
}

pub fn read_decomposition(path: &Path) -> Result<Decomposition> {
    parse_decomposition(&read_text(path)?)
}

//! JSON descriptors naming a built-in family, a tabulated finite family, or a
//! product of two descriptors.

use serde::{Deserialize, Serialize};

use crate::builtins;
use crate::error::{Result, ShadowError};
use crate::family::MapFamily;
use crate::space::StateSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyDescriptor {
    Doubling,
    Tripling,
    Alternating,
    HarmonicSkew,
    DyadicSkew,
    Tent,
    Identity,
    Rotation { alphas: Vec<f64> },
    Permutation3,
    Cycle3,
    Identity3,
    SwapBlocks4,
    Attractor8,
    /// Finite metric space with image tables repeated periodically.
    Table { distances: Vec<Vec<f64>>, tables: Vec<Vec<usize>> },
    Product { left: Box<FamilyDescriptor>, right: Box<FamilyDescriptor> },
}

impl FamilyDescriptor {
    pub fn build(&self) -> Result<MapFamily> {
        Ok(match self {
            Self::Doubling => builtins::doubling(),
            Self::Tripling => builtins::tripling(),
            Self::Alternating => builtins::alternating(),
            Self::HarmonicSkew => builtins::harmonic_skew(),
            Self::DyadicSkew => builtins::dyadic_skew(),
            Self::Tent => builtins::tent(),
            Self::Identity => builtins::identity_circle(),
            Self::Rotation { alphas } => {
                if alphas.is_empty() || alphas.iter().any(|a| !a.is_finite()) {
                    return Err(ShadowError::ConfigInvalid {
                        path: "family.alphas".into(),
                        message: "expected a nonempty list of finite angles".into(),
                    });
                }
                builtins::rotations(alphas)
            }
            Self::Permutation3 => builtins::permutation3(),
            Self::Cycle3 => builtins::cycle3(),
            Self::Identity3 => builtins::identity3(),
            Self::SwapBlocks4 => builtins::swap_blocks4(),
            Self::Attractor8 => builtins::attractor8(),
            Self::Table { distances, tables } => {
                if tables.is_empty() {
                    return Err(ShadowError::ConfigInvalid {
                        path: "family.tables".into(),
                        message: "at least one image table is required".into(),
                    });
                }
                let space = StateSpace::finite(distances.clone(), "tabulated space")?;
                builtins::finite_family("tabulated", space, tables.clone())?
            }
            Self::Product { left, right } => MapFamily::product(&left.build()?, &right.build()?)?,
        })
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Self::Permutation3 | Self::Cycle3 | Self::Identity3 | Self::SwapBlocks4 | Self::Attractor8 | Self::Table { .. } => true,
            Self::Product { left, right } => left.is_finite() && right.is_finite(),
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tagged_forms() {
        let d: FamilyDescriptor = serde_json::from_str(r#"{"kind": "doubling"}"#).unwrap();
        assert_eq!(d, FamilyDescriptor::Doubling);
        let p: FamilyDescriptor =
            serde_json::from_str(r#"{"kind": "product", "left": {"kind": "cycle3"}, "right": {"kind": "identity3"}}"#).unwrap();
        assert!(p.is_finite());
        assert_eq!(p.build().unwrap().space_at(0).unwrap().finite_len(), Some(9));
    }

    #[test]
    fn rejects_unknown_kind_and_bad_tables() {
        assert!(serde_json::from_str::<FamilyDescriptor>(r#"{"kind": "quadrupling"}"#).is_err());
        let bad = FamilyDescriptor::Table { distances: vec![vec![0.0, 1.0], vec![1.0, 0.0]], tables: vec![vec![0, 0]] };
        assert!(bad.build().is_err());
        let empty = FamilyDescriptor::Rotation { alphas: vec![] };
        assert!(matches!(empty.build(), Err(ShadowError::ConfigInvalid { .. })));
    }
}

//! JSON descriptions of lower-bound family members.

use super::{BumpFamily, BumpFamilyDensity, BumpOptions, CapFamily, CapFamilyDensity};
use crate::error::Result;
use crate::geometry::CapPacking;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FamilySpec {
    Bump {
        dimension: usize,
        delta: f64,
        centers: Vec<Vec<f64>>,
        alpha: Vec<bool>,
    },
    Cap {
        dimension: usize,
        t: f64,
        centers: Vec<Vec<f64>>,
        alpha: Vec<bool>,
        seed: u64,
    },
}

impl FamilySpec {
    pub fn from_bump(f: &BumpFamilyDensity) -> Self {
        FamilySpec::Bump {
            dimension: f.family().dim(),
            delta: f.family().delta(),
            centers: f.family().centers().to_vec(),
            alpha: f.alpha().to_vec(),
        }
    }

    pub fn from_cap(f: &CapFamilyDensity) -> Self {
        let p = f.family().packing();
        FamilySpec::Cap {
            dimension: p.dimension,
            t: p.t,
            centers: p.centers.clone(),
            alpha: f.alpha().to_vec(),
            seed: p.seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn build_bump(&self) -> Option<Result<BumpFamilyDensity>> {
        match self {
            FamilySpec::Bump {
                dimension,
                delta,
                centers,
                alpha,
            } => Some(
                BumpFamily::from_centers(*dimension, *delta, centers.clone(), BumpOptions::default())
                    .and_then(|fam| Arc::new(fam).density(alpha.clone())),
            ),
            _ => None,
        }
    }

    pub fn build_cap(&self, draws: usize) -> Option<Result<CapFamilyDensity>> {
        match self {
            FamilySpec::Cap {
                dimension,
                t,
                centers,
                alpha,
                seed,
            } => Some(
                CapPacking::from_centers(*dimension, *t, centers.clone(), *seed, draws)
                    .and_then(|p| CapFamily::new(p, draws).density(alpha.clone())),
            ),
            _ => None,
        }
    }
}

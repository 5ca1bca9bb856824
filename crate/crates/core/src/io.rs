//! JSON instance files.
//!
//! Boolean distributions are lists of `{x, p}` with `x` in little-endian hex;
//! pair distributions are `{pairs: [{u, v, p}]}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::dist::{FiniteDistribution, PairDistribution};
use crate::dl_model::{GeneralDLRep, MonotoneDLRep, TruthTable};
use crate::error::CoreError;
use crate::instances::{
    BooleanInstance, ComparisonInstance, FunctionSpec, GroundTruth, Groups4, InstanceBundle,
    OrientationSpec, Pentagon, Provenance,
};
use crate::oracle::{BooleanFunction, Orientation};
use crate::total::TotalOrder;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum FunctionJson {
    #[serde(rename = "mdl")]
    Mdl { pi: Vec<usize>, nu: Vec<bool> },
    #[serde(rename = "dl")]
    Dl {
        pi: Vec<usize>,
        mu: Vec<bool>,
        nu: Vec<bool>,
    },
    /// `bits[v]` is `f` of the string whose bit `i` is bit `i-1` of `v`.
    #[serde(rename = "table")]
    Table { bits: String },
    #[serde(rename = "pentagon")]
    Pentagon { pi: Vec<usize> },
    #[serde(rename = "total")]
    Total { order: Vec<usize> },
    #[serde(rename = "groups4-yes")]
    Groups4Yes { pi: Vec<usize> },
    #[serde(rename = "groups4-no")]
    Groups4No { pi: Vec<usize> },
    #[serde(rename = "patched")]
    Patched {
        base: Box<FunctionJson>,
        overrides: Vec<OverrideJson>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverrideJson {
    pub x: String,
    pub value: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomJson {
    pub x: String,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub u: usize,
    pub v: usize,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionJson {
    Atoms(Vec<AtomJson>),
    Pairs { pairs: Vec<PairJson> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TruthJson {
    Yes,
    Far { eps: f64 },
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceJson {
    pub family: String,
    pub seed: u64,
    pub params: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub version: u32,
    pub n: usize,
    pub function: FunctionJson,
    pub distribution: DistributionJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<TruthJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceJson>,
}

fn function_json(f: &FunctionSpec) -> FunctionJson {
    match f {
        FunctionSpec::Mdl(m) => FunctionJson::Mdl {
            pi: m.pi().to_vec(),
            nu: m.nu().to_vec(),
        },
        FunctionSpec::Dl(d) => FunctionJson::Dl {
            pi: d.pi().to_vec(),
            mu: d.mu().to_vec(),
            nu: d.nu().to_vec(),
        },
        FunctionSpec::Table(t) => FunctionJson::Table {
            bits: t
                .table()
                .iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect(),
        },
        FunctionSpec::Groups4(g) if g.no_side => FunctionJson::Groups4No {
            pi: g.pi().to_vec(),
        },
        FunctionSpec::Groups4(g) => FunctionJson::Groups4Yes {
            pi: g.pi().to_vec(),
        },
        FunctionSpec::Patched { base, overrides } => FunctionJson::Patched {
            base: Box::new(function_json(base)),
            overrides: overrides
                .iter()
                .map(|(x, &value)| OverrideJson {
                    x: x.to_hex(),
                    value,
                })
                .collect(),
        },
    }
}

fn function_spec(n: usize, f: &FunctionJson) -> Result<FunctionSpec, CoreError> {
    Ok(match f {
        FunctionJson::Mdl { pi, nu } => {
            FunctionSpec::Mdl(MonotoneDLRep::new(pi.clone(), nu.clone())?)
        }
        FunctionJson::Dl { pi, mu, nu } => {
            FunctionSpec::Dl(GeneralDLRep::new(pi.clone(), mu.clone(), nu.clone())?)
        }
        FunctionJson::Table { bits } => {
            let table = bits
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(CoreError::Parse(format!("bad table character {c:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            FunctionSpec::Table(TruthTable::new(n, table)?)
        }
        FunctionJson::Groups4Yes { pi } => FunctionSpec::Groups4(Groups4::new(pi.clone(), false)?),
        FunctionJson::Groups4No { pi } => FunctionSpec::Groups4(Groups4::new(pi.clone(), true)?),
        FunctionJson::Patched { base, overrides } => {
            let mut map = BTreeMap::new();
            for o in overrides {
                map.insert(BitString::from_hex(n, &o.x)?, o.value);
            }
            FunctionSpec::Patched {
                base: Box::new(function_spec(n, base)?),
                overrides: map,
            }
        }
        FunctionJson::Pentagon { .. } | FunctionJson::Total { .. } => {
            return Err(CoreError::Parse(
                "comparison function paired with a string distribution".into(),
            ))
        }
    })
}

fn truth_json(t: GroundTruth) -> TruthJson {
    match t {
        GroundTruth::Yes => TruthJson::Yes,
        GroundTruth::Far(eps) => TruthJson::Far { eps },
        GroundTruth::Unknown => TruthJson::Unknown,
    }
}

fn truth(t: Option<&TruthJson>) -> GroundTruth {
    match t {
        Some(TruthJson::Yes) => GroundTruth::Yes,
        Some(TruthJson::Far { eps }) => GroundTruth::Far(*eps),
        Some(TruthJson::Unknown) | None => GroundTruth::Unknown,
    }
}

fn provenance_json(p: &Provenance) -> ProvenanceJson {
    ProvenanceJson {
        family: p.family.clone(),
        seed: p.seed,
        params: p.params.clone(),
    }
}

fn provenance(p: Option<&ProvenanceJson>) -> Provenance {
    match p {
        Some(p) => Provenance {
            family: p.family.clone(),
            seed: p.seed,
            params: p.params.clone(),
        },
        None => Provenance {
            family: "file".into(),
            seed: 0,
            params: String::new(),
        },
    }
}

impl InstanceJson {
    pub fn from_bundle(b: &InstanceBundle) -> Self {
        match b {
            InstanceBundle::Boolean(b) => InstanceJson {
                version: 1,
                n: b.function.width(),
                function: function_json(&b.function),
                distribution: DistributionJson::Atoms(
                    b.dist
                        .atoms()
                        .iter()
                        .zip(b.dist.weights())
                        .map(|(x, &p)| AtomJson { x: x.to_hex(), p })
                        .collect(),
                ),
                ground_truth: Some(truth_json(b.truth)),
                provenance: Some(provenance_json(&b.provenance)),
            },
            InstanceBundle::Comparison(c) => InstanceJson {
                version: 1,
                n: c.orientation.n(),
                function: match &c.orientation {
                    OrientationSpec::Total(t) => FunctionJson::Total { order: t.order() },
                    OrientationSpec::Pentagon(p) => FunctionJson::Pentagon {
                        pi: p.pi().to_vec(),
                    },
                },
                distribution: DistributionJson::Pairs {
                    pairs: c
                        .dist
                        .pairs()
                        .iter()
                        .zip(c.dist.weights())
                        .map(|(&(u, v), &p)| PairJson { u, v, p })
                        .collect(),
                },
                ground_truth: Some(truth_json(c.truth)),
                provenance: Some(provenance_json(&c.provenance)),
            },
        }
    }

    pub fn to_bundle(&self) -> Result<InstanceBundle, CoreError> {
        if self.version != 1 {
            return Err(CoreError::Parse(format!(
                "unsupported instance version {}",
                self.version
            )));
        }
        let n = self.n;
        let truth = truth(self.ground_truth.as_ref());
        let provenance = provenance(self.provenance.as_ref());
        match (&self.function, &self.distribution) {
            (FunctionJson::Pentagon { pi }, DistributionJson::Pairs { pairs }) => {
                Ok(InstanceBundle::Comparison(ComparisonInstance {
                    orientation: OrientationSpec::Pentagon(Pentagon::new(pi.clone())?),
                    dist: pair_dist(n, pairs)?,
                    truth,
                    provenance,
                }))
            }
            (FunctionJson::Total { order }, DistributionJson::Pairs { pairs }) => {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != (1..=n).collect::<Vec<_>>() {
                    return Err(CoreError::Parse(
                        "order is not a permutation of 1..=n".into(),
                    ));
                }
                Ok(InstanceBundle::Comparison(ComparisonInstance {
                    orientation: OrientationSpec::Total(TotalOrder::from_order(order)),
                    dist: pair_dist(n, pairs)?,
                    truth,
                    provenance,
                }))
            }
            (f, DistributionJson::Atoms(atoms)) => {
                let function = function_spec(n, f)?;
                if function.width() != n {
                    return Err(CoreError::WidthMismatch {
                        left: n,
                        right: function.width(),
                    });
                }
                let atoms = atoms
                    .iter()
                    .map(|a| Ok((BitString::from_hex(n, &a.x)?, a.p)))
                    .collect::<Result<Vec<_>, CoreError>>()?;
                Ok(InstanceBundle::Boolean(BooleanInstance {
                    function,
                    dist: FiniteDistribution::new(n, atoms)?,
                    truth,
                    provenance,
                }))
            }
            _ => Err(CoreError::Parse(
                "function type does not match distribution shape".into(),
            )),
        }
    }
}

fn pair_dist(n: usize, pairs: &[PairJson]) -> Result<PairDistribution, CoreError> {
    PairDistribution::new(n, pairs.iter().map(|p| ((p.u, p.v), p.p)).collect())
}

pub fn bundle_to_string(b: &InstanceBundle) -> String {
    serde_json::to_string_pretty(&InstanceJson::from_bundle(b)).expect("instance serializes")
}

pub fn bundle_from_str(s: &str) -> Result<InstanceBundle, CoreError> {
    let j: InstanceJson = serde_json::from_str(s).map_err(|e| CoreError::Parse(e.to_string()))?;
    j.to_bundle()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::*;
    use crate::rng::SeededRng;

    fn round_trip(b: &InstanceBundle) {
        // Weights are renormalised on load, so compare after one pass.
        let first = InstanceJson::from_bundle(b);
        let s = bundle_to_string(&bundle_from_str(&bundle_to_string(b)).unwrap());
        let second: InstanceJson = serde_json::from_str(&s).unwrap();
        assert_eq!(first.function, second.function);
        assert_eq!(first.ground_truth, second.ground_truth);
        assert_eq!(bundle_to_string(&bundle_from_str(&s).unwrap()), s);
    }

    #[test]
    fn every_family_round_trips() {
        let mut rng = SeededRng::new(7, 0);
        round_trip(&gen_pentagon(10, 7, &mut rng).unwrap());
        round_trip(&gen_total_yes(12, 20, 7, &mut rng).unwrap());
        round_trip(&gen_groups4(32, true, 7, &mut rng).unwrap());
        round_trip(&gen_groups4(32, false, 7, &mut rng).unwrap());
        round_trip(&gen_mdl_yes(70, 50, 7, &mut rng).unwrap());
        round_trip(&gen_dl_yes(70, 50, 7, &mut rng).unwrap());
        let base = gen_mdl_yes(64, 60, 7, &mut rng).unwrap();
        round_trip(&gen_planted_violation(&base, 5, 0.2, 2, &mut rng).unwrap());
    }

    #[test]
    fn table_instance_parses() {
        let s = r#"{"version":1,"n":2,"function":{"type":"table","bits":"0110"},
                    "distribution":[{"x":"01","p":0.5},{"x":"03","p":0.5}]}"#;
        let InstanceBundle::Boolean(b) = bundle_from_str(s).unwrap() else {
            panic!()
        };
        assert!(b.function.eval(&BitString::from_bit_str("10").unwrap()));
        assert!(!b.function.eval(&BitString::from_bit_str("11").unwrap()));
        assert_eq!(b.truth, GroundTruth::Unknown);
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let s = r#"{"version":1,"n":5,"function":{"type":"pentagon","pi":[1,2,3,4,5]},
                    "distribution":[{"x":"01","p":1.0}]}"#;
        assert!(bundle_from_str(s).is_err());
        assert!(bundle_from_str(r#"{"version":2}"#).is_err());
    }
}

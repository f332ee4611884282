//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "vessels", "kind": "vessels", "n": 4,
//!   "pairs": [[1, 3], [1, 4], [2, 3], [2, 4]],
//!   "singles": {"1": "1", "2": "1", "3": "1", "4": "1"},
//!   "joints": {"1,3": "0", "1,4": "1", "2,3": "1", "2,4": "1"},
//!   "expectations": {"1,3": -1.0, "1,4": 1.0, "2,3": 1.0, "2,4": 1.0}
//! }
//! ```
//!
//! Probabilities are exact fractions (`"3/8"`), decimal strings (`"0.125"`)
//! or JSON numbers; numbers are taken at their exact binary value.

use std::collections::BTreeMap;
use std::path::Path;

use bellpoly::stats::CH_PAIRS;
use bellpoly::{CorrelationVector, ExpectationSet, Pair, Prob, Scenario, ScenarioKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Largest denominator written as a fraction string.
const FRACTION_DENOMINATOR_LIMIT: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbValue {
    Text(String),
    Number(f64),
}

impl ProbValue {
    fn to_prob(&self, field: &str) -> Result<Prob, CliError> {
        let p = match self {
            ProbValue::Text(s) => Prob::parse(s),
            ProbValue::Number(x) => Prob::from_f64(*x),
        };
        let p = p.map_err(|e| CliError::Input(format!("{field}: {e}")))?;
        if p.is_negative() || p.as_rational() > Prob::one().as_rational() {
            return Err(CliError::Input(format!("{field}: {p} is outside [0, 1]")));
        }
        Ok(p)
    }

    fn from_prob(p: &Prob) -> Self {
        if p.has_small_denominator(FRACTION_DENOMINATOR_LIMIT) {
            return ProbValue::Text(p.to_string());
        }
        let x = p.to_f64();
        match Prob::from_f64(x) {
            Ok(back) if &back == p => ProbValue::Number(x),
            _ => ProbValue::Text(p.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub kind: String,
    pub n: usize,
    pub pairs: Vec<[usize; 2]>,
    pub singles: BTreeMap<String, ProbValue>,
    pub joints: BTreeMap<String, ProbValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expectations: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles_deg: Option<BTreeMap<String, f64>>,
    /// Per coincidence experiment, `[left up, right up]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing_marginals: Option<BTreeMap<String, [ProbValue; 2]>>,
}

fn pair_key(i: usize, j: usize) -> String {
    format!("{i},{j}")
}

fn parse_pair_key(field: &str, key: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("{field}: key {key:?} is not of the form \"i,j\""));
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn input<T>(field: &str, r: bellpoly::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::from_core(e).context(field))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid scenario file: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario files always serialize");
        s.push('\n');
        s
    }

    pub fn from_scenario(s: &Scenario) -> Result<Self, CliError> {
        let v = s
            .vector
            .as_ref()
            .ok_or_else(|| CliError::Input(format!("scenario {:?} has no correlation vector", s.name)))?;
        Ok(ScenarioFile {
            name: s.name.clone(),
            kind: s.kind.as_str().to_string(),
            n: v.n(),
            pairs: v.pairs().map(|p| [p.i(), p.j()]).collect(),
            singles: (1..=v.n()).map(|i| (i.to_string(), ProbValue::from_prob(v.single(i)))).collect(),
            joints: v.joints().iter().map(|(p, x)| (pair_key(p.i(), p.j()), ProbValue::from_prob(x))).collect(),
            expectations: s
                .expectations
                .map(|e| CH_PAIRS.iter().map(|&(i, j)| (pair_key(i, j), e.get((i, j)).expect("CH pair"))).collect()),
            angles_deg: s
                .angles_deg
                .map(|a| a.iter().enumerate().map(|(k, x)| (format!("a{}", k + 1), *x)).collect()),
            pairing_marginals: s.pairing_marginals.as_ref().map(|m| {
                m.iter()
                    .map(|(p, (l, r))| (pair_key(p.i(), p.j()), [ProbValue::from_prob(l), ProbValue::from_prob(r)]))
                    .collect()
            }),
        })
    }

    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let kind = input("kind", ScenarioKind::parse(&self.kind))?;
        if self.n == 0 {
            return Err(CliError::Input("n: must be at least 1".into()));
        }

        let mut singles = Vec::with_capacity(self.n);
        for i in 1..=self.n {
            let field = format!("singles.\"{i}\"");
            let value = self
                .singles
                .get(&i.to_string())
                .ok_or_else(|| CliError::Input(format!("{field}: missing")))?;
            singles.push(value.to_prob(&field)?);
        }
        if let Some(extra) = self.singles.keys().find(|k| k.parse::<usize>().map_or(true, |i| i == 0 || i > self.n)) {
            return Err(CliError::Input(format!("singles: unexpected key {extra:?} for n = {}", self.n)));
        }

        let mut joints = Vec::with_capacity(self.pairs.len());
        for &[i, j] in &self.pairs {
            let field = format!("joints.\"{i},{j}\"");
            let pair = input("pairs", Pair::new(i, j))?;
            let value = self
                .joints
                .get(&pair_key(i, j))
                .ok_or_else(|| CliError::Input(format!("{field}: missing")))?;
            joints.push((pair, value.to_prob(&field)?));
        }
        for key in self.joints.keys() {
            let (i, j) = parse_pair_key("joints", key)?;
            if !self.pairs.contains(&[i, j]) {
                return Err(CliError::Input(format!("joints: key {key:?} is not listed in pairs")));
            }
        }
        let vector = input("vector", CorrelationVector::new(singles, joints))?;

        let expectations = match &self.expectations {
            None => None,
            Some(map) => {
                let mut e = [0.0; 4];
                for (slot, (i, j)) in CH_PAIRS.iter().enumerate() {
                    e[slot] = *map
                        .get(&pair_key(*i, *j))
                        .ok_or_else(|| CliError::Input(format!("expectations.\"{i},{j}\": missing")))?;
                }
                if let Some(k) = map.keys().find(|k| !CH_PAIRS.iter().any(|&(i, j)| pair_key(i, j) == **k)) {
                    return Err(CliError::Input(format!("expectations: unexpected key {k:?}")));
                }
                Some(input("expectations", ExpectationSet::new(e[0], e[1], e[2], e[3]))?)
            }
        };

        let angles_deg = match &self.angles_deg {
            None => None,
            Some(map) => {
                let mut a = [0.0; 4];
                for (k, slot) in a.iter_mut().enumerate() {
                    let key = format!("a{}", k + 1);
                    *slot = *map.get(&key).ok_or_else(|| CliError::Input(format!("angles_deg.{key}: missing")))?;
                }
                if map.len() != 4 {
                    return Err(CliError::Input("angles_deg: expected exactly a1, a2, a3, a4".into()));
                }
                Some(a)
            }
        };

        let pairing_marginals = match &self.pairing_marginals {
            None => None,
            Some(map) => {
                let mut out = BTreeMap::new();
                for (key, [l, r]) in map {
                    let field = format!("pairing_marginals.\"{key}\"");
                    let (i, j) = parse_pair_key("pairing_marginals", key)?;
                    let pair = input(&field, Pair::new(i, j))?;
                    out.insert(pair, (l.to_prob(&field)?, r.to_prob(&field)?));
                }
                Some(out)
            }
        };

        let scenario = Scenario {
            name: self.name.clone(),
            kind,
            angles_deg,
            vector: Some(vector),
            expectations,
            pairing_marginals,
        };
        input("scenario", scenario.validate())?;
        Ok(scenario)
    }
}

pub fn read_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ScenarioFile::parse(&text)
        .and_then(|f| f.to_scenario())
        .map_err(|e| e.context(&path.display().to_string()))
}

pub fn scenario_json(s: &Scenario) -> Result<String, CliError> {
    Ok(ScenarioFile::from_scenario(s)?.to_json())
}

#[cfg(test)]
mod tests {
    use super::*;
    use bellpoly::models::{builtin_scenario, distinguish_events_default, singlet_scenario, SingletConfig};

    fn round_trip(s: &Scenario) -> Scenario {
        let text = scenario_json(s).unwrap();
        ScenarioFile::parse(&text).unwrap().to_scenario().unwrap()
    }

    #[test]
    fn builtins_round_trip() {
        for name in ["singlet", "vessels", "concept"] {
            let s = builtin_scenario(name).unwrap();
            assert_eq!(round_trip(&s), s, "{name}");
        }
        let s = singlet_scenario(SingletConfig::from_degrees([10.0, 33.3, 71.0, 200.5]).unwrap()).unwrap();
        assert_eq!(round_trip(&s), s);
        let d = distinguish_events_default(&s).unwrap().into_scenario("d");
        assert_eq!(round_trip(&d), d);
    }

    #[test]
    fn accepts_decimals_and_fractions() {
        let text = r#"{"name": "x", "kind": "explicit", "n": 2, "pairs": [[1, 2]],
            "singles": {"1": "0.5", "2": 0.25}, "joints": {"1,2": "1/8"}}"#;
        let s = ScenarioFile::parse(text).unwrap().to_scenario().unwrap();
        let v = s.vector.unwrap();
        assert_eq!(v.single(1), &Prob::ratio(1, 2));
        assert_eq!(v.single(2), &Prob::ratio(1, 4));
        assert_eq!(v.joint(1, 2).unwrap(), &Prob::ratio(1, 8));
    }

    #[test]
    fn rejects_bad_files() {
        let base = r#"{"name": "x", "kind": "explicit", "n": 2, "pairs": [[1, 2]],
            "singles": {"1": "0.5", "2": "0.5"}, "joints": {"1,2": "0.25"}"#;
        let cases = [
            (format!("{base}, \"colour\": 1}}"), "unknown field"),
            (base.replace("\"2\": \"0.5\"", "\"2\": \"1.5\"") + "}", "singles"),
            (base.replace("\"1,2\": \"0.25\"", "\"1,3\": \"0.25\"") + "}", "joints"),
            (base.replace("explicit", "teapot") + "}", "kind"),
            (base.replace("\"0.25\"", "\"abc\"") + "}", "joints.\"1,2\""),
            (base.to_string(), "line"),
        ];
        for (text, needle) in cases {
            let err = ScenarioFile::parse(&text).and_then(|f| f.to_scenario()).unwrap_err();
            assert!(err.to_string().contains(needle), "{err} lacks {needle}");
            assert_eq!(err.exit_code(), 2);
        }
    }
}

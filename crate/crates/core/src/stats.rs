//! Coincidence-experiment data model and the CHSH / Clauser-Horne statistics.
//!
//! Four dichotomic experiments `e1..e4` are considered, `e1, e2` on the left
//! and `e3, e4` on the right. The coincidence experiments `e13, e14, e23, e24`
//! each have four outcomes; their correlation `E_ij` enters the CHSH
//! statistic and their up-up probabilities `p_ij` enter the Clauser-Horne
//! combinations.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::PROB_TOL;

/// Pair set of the four coincidence experiments.
pub const CH_PAIRS: [(usize, usize); 4] = [(1, 3), (1, 4), (2, 3), (2, 4)];

/// Outcome probabilities of one coincidence experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointOutcomeDistribution {
    pub p_uu: f64,
    pub p_ud: f64,
    pub p_du: f64,
    pub p_dd: f64,
}

impl JointOutcomeDistribution {
    pub fn new(p_uu: f64, p_ud: f64, p_du: f64, p_dd: f64) -> Result<Self> {
        let d = JointOutcomeDistribution { p_uu, p_ud, p_du, p_dd };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.p_uu, self.p_ud, self.p_du, self.p_dd];
        if let Some(bad) = all
            .iter()
            .find(|p| !p.is_finite() || **p < -PROB_TOL || **p > 1.0 + PROB_TOL)
        {
            return Err(Error::Validation(format!("outcome probability {bad} outside [0, 1]")));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::Validation(format!("outcome probabilities sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// `E = P(uu) + P(dd) - P(ud) - P(du)`.
pub fn expectation_from_joint(d: &JointOutcomeDistribution) -> Result<f64> {
    d.validate()?;
    let e = d.p_uu + d.p_dd - d.p_ud - d.p_du;
    Ok(e.clamp(-1.0, 1.0))
}

/// The four correlations entering the CHSH statistic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectationSet {
    pub e13: f64,
    pub e14: f64,
    pub e23: f64,
    pub e24: f64,
}

impl ExpectationSet {
    pub fn new(e13: f64, e14: f64, e23: f64, e24: f64) -> Result<Self> {
        let e = ExpectationSet { e13, e14, e23, e24 };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, v) in self.labelled() {
            if !v.is_finite() || v.abs() > 1.0 + PROB_TOL {
                return Err(Error::Validation(format!("E{label} = {v} outside [-1, 1]")));
            }
        }
        Ok(())
    }

    /// `(pair label, value)` in the order 13, 14, 23, 24.
    pub fn labelled(&self) -> [(&'static str, f64); 4] {
        [("13", self.e13), ("14", self.e14), ("23", self.e23), ("24", self.e24)]
    }

    pub fn get(&self, pair: (usize, usize)) -> Option<f64> {
        match pair {
            (1, 3) => Some(self.e13),
            (1, 4) => Some(self.e14),
            (2, 3) => Some(self.e23),
            (2, 4) => Some(self.e24),
            _ => None,
        }
    }
}

/// `|E13 - E14| + |E23 + E24|`. Local models stay at or below 2.
pub fn chsh_statistic(e: &ExpectationSet) -> Result<f64> {
    e.validate()?;
    Ok((e.e13 - e.e14).abs() + (e.e23 + e.e24).abs())
}

/// Index pair `{i, j}` with `1 <= i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pair {
    i: usize,
    j: usize,
}

impl Pair {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == 0 || i >= j {
            return Err(Error::Shape(format!("pair ({i}, {j}) must satisfy 1 <= i < j")));
        }
        Ok(Pair { i, j })
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn contains(&self, k: usize) -> bool {
        self.i == k || self.j == k
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.i, self.j)
    }
}

/// A point of `R(n, S)`: single probabilities `p_1..p_n` and joint
/// probabilities `p_ij` for every `{i, j}` in the pair set `S`.
///
/// Values are stored exactly. Entries within [`PROB_TOL`] outside `[0, 1]`
/// are clamped onto the interval; anything further out is rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelationVector {
    singles: Vec<Prob>,
    joints: BTreeMap<Pair, Prob>,
}

impl CorrelationVector {
    pub fn new(singles: Vec<Prob>, joints: Vec<(Pair, Prob)>) -> Result<Self> {
        let n = singles.len();
        if n == 0 {
            return Err(Error::Shape("a correlation vector needs at least one event".into()));
        }
        let singles = singles
            .into_iter()
            .enumerate()
            .map(|(k, p)| checked_prob(p, || format!("p{}", k + 1)))
            .collect::<Result<Vec<_>>>()?;
        let mut map = BTreeMap::new();
        for (pair, p) in joints {
            if pair.j > n {
                return Err(Error::Shape(format!("pair {{{pair}}} references an event beyond n = {n}")));
            }
            let p = checked_prob(p, || format!("p{}{}", pair.i, pair.j))?;
            if map.insert(pair, p).is_some() {
                return Err(Error::Shape(format!("duplicate pair {{{pair}}}")));
            }
        }
        Ok(CorrelationVector { singles, joints: map })
    }

    /// Convenience constructor from floating-point values and 1-based pairs.
    pub fn from_f64(singles: &[f64], joints: &[((usize, usize), f64)]) -> Result<Self> {
        let singles = singles.iter().map(|&p| Prob::from_f64(p)).collect::<Result<Vec<_>>>()?;
        let joints = joints
            .iter()
            .map(|&((i, j), p)| Ok((Pair::new(i, j)?, Prob::from_f64(p)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(singles, joints)
    }

    pub fn n(&self) -> usize {
        self.singles.len()
    }

    /// Pairs in lexicographic order.
    pub fn pairs(&self) -> impl ExactSizeIterator<Item = Pair> + '_ {
        self.joints.keys().copied()
    }

    pub fn pair_list(&self) -> Vec<(usize, usize)> {
        self.pairs().map(|p| (p.i, p.j)).collect()
    }

    /// `n + |S|`.
    pub fn dim(&self) -> usize {
        self.singles.len() + self.joints.len()
    }

    /// Single probability of event `i` (1-based).
    pub fn single(&self, i: usize) -> &Prob {
        &self.singles[i - 1]
    }

    pub fn joint(&self, i: usize, j: usize) -> Option<&Prob> {
        Pair::new(i, j).ok().and_then(|p| self.joints.get(&p))
    }

    pub fn singles(&self) -> &[Prob] {
        &self.singles
    }

    pub fn joints(&self) -> &BTreeMap<Pair, Prob> {
        &self.joints
    }

    /// Components in the `(p_1, ..., p_n, p_ij...)` order of `R(n, S)`.
    pub fn components(&self) -> Vec<&Prob> {
        self.singles.iter().chain(self.joints.values()).collect()
    }

    pub fn components_f64(&self) -> Vec<f64> {
        self.components().into_iter().map(Prob::to_f64).collect()
    }

    /// True when the pair set equals `pairs` (order irrelevant).
    pub fn has_pairs(&self, pairs: &[(usize, usize)]) -> bool {
        let mut want: Vec<_> = pairs.to_vec();
        want.sort_unstable();
        self.pair_list() == want
    }

    fn require_ch_shape(&self) -> Result<()> {
        if self.n() != 4 || !self.has_pairs(&CH_PAIRS) {
            return Err(Error::Shape(format!(
                "expected n = 4 with pairs {{1,3}},{{1,4}},{{2,3}},{{2,4}}, got n = {} with {:?}",
                self.n(),
                self.pair_list()
            )));
        }
        Ok(())
    }
}

fn checked_prob(p: Prob, label: impl Fn() -> String) -> Result<Prob> {
    let v = p.to_f64();
    if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&v) {
        return Err(Error::Validation(format!("{} = {p} outside [0, 1]", label())));
    }
    if p.is_negative() {
        Ok(Prob::zero())
    } else if v > 1.0 || p > Prob::one() {
        Ok(Prob::one())
    } else {
        Ok(p)
    }
}

/// The four Clauser-Horne sign patterns, in the order of the n = 4
/// inequality list. Each adds three joints, subtracts the fourth joint and
/// subtracts the two single probabilities not involved in that fourth pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChCombination {
    /// `p13 + p14 + p24 - p23 - p1 - p4`
    Ch1,
    /// `p23 + p24 + p14 - p13 - p2 - p4`, the usual Clauser-Horne form.
    Ch2,
    /// `p14 + p13 + p23 - p24 - p1 - p3`
    Ch3,
    /// `p24 + p23 + p13 - p14 - p2 - p3`
    Ch4,
}

impl Default for ChCombination {
    fn default() -> Self {
        ChCombination::Ch2
    }
}

impl ChCombination {
    pub const ALL: [ChCombination; 4] =
        [ChCombination::Ch1, ChCombination::Ch2, ChCombination::Ch3, ChCombination::Ch4];

    pub fn name(self) -> &'static str {
        match self {
            ChCombination::Ch1 => "CH1",
            ChCombination::Ch2 => "CH2",
            ChCombination::Ch3 => "CH3",
            ChCombination::Ch4 => "CH4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(name))
    }

    /// The joint that enters with a minus sign.
    pub fn negated_pair(self) -> (usize, usize) {
        match self {
            ChCombination::Ch1 => (2, 3),
            ChCombination::Ch2 => (1, 3),
            ChCombination::Ch3 => (2, 4),
            ChCombination::Ch4 => (1, 4),
        }
    }

    /// Singles entering with a minus sign.
    pub fn negated_singles(self) -> (usize, usize) {
        let (i, j) = self.negated_pair();
        (3 - i, 7 - j)
    }

    pub fn formula(self) -> String {
        let neg = self.negated_pair();
        let plus: Vec<String> = CH_PAIRS
            .iter()
            .filter(|&&p| p != neg)
            .map(|(i, j)| format!("p{i}{j}"))
            .collect();
        let (a, b) = self.negated_singles();
        format!("{} - p{}{} - p{a} - p{b}", plus.join(" + "), neg.0, neg.1)
    }

    /// Exact value on a vector of CH shape.
    pub fn evaluate_exact(self, v: &CorrelationVector) -> Result<BigRational> {
        v.require_ch_shape()?;
        let neg = self.negated_pair();
        let mut acc = BigRational::zero();
        for &(i, j) in &CH_PAIRS {
            let p = v.joint(i, j).expect("shape checked").as_rational();
            if (i, j) == neg {
                acc -= p;
            } else {
                acc += p;
            }
        }
        let (a, b) = self.negated_singles();
        acc -= v.single(a).as_rational();
        acc -= v.single(b).as_rational();
        Ok(acc)
    }
}

/// Clauser-Horne combination value. Classical vectors give a value in
/// `[-1, 0]`.
pub fn clauser_horne_statistic(v: &CorrelationVector, combination: ChCombination) -> Result<f64> {
    combination
        .evaluate_exact(v)
        .map(|r| r.to_f64().unwrap_or(f64::NAN))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    Singlet,
    Vessels,
    Concept,
    Explicit,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Singlet => "singlet",
            ScenarioKind::Vessels => "vessels",
            ScenarioKind::Concept => "concept",
            ScenarioKind::Explicit => "explicit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "singlet" => Ok(ScenarioKind::Singlet),
            "vessels" => Ok(ScenarioKind::Vessels),
            "concept" => Ok(ScenarioKind::Concept),
            "explicit" => Ok(ScenarioKind::Explicit),
            other => Err(Error::Validation(format!("unknown scenario kind {other:?}"))),
        }
    }
}

/// Up probabilities of both sides of one coincidence experiment together
/// with its up-up probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingRecord {
    pub left_up: Prob,
    pub right_up: Prob,
    pub up_up: Prob,
}

/// A named experimental configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    /// Directions `a1..a4` in degrees.
    pub angles_deg: Option<[f64; 4]>,
    pub vector: Option<CorrelationVector>,
    pub expectations: Option<ExpectationSet>,
    /// Per-pairing `(left up, right up)` probabilities, when they differ from
    /// the single-experiment probabilities of `vector`.
    pub pairing_marginals: Option<BTreeMap<Pair, (Prob, Prob)>>,
}

impl Scenario {
    pub fn explicit(name: impl Into<String>, vector: CorrelationVector) -> Self {
        Scenario {
            name: name.into(),
            kind: ScenarioKind::Explicit,
            angles_deg: None,
            vector: Some(vector),
            expectations: None,
            pairing_marginals: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ScenarioKind::Singlet if self.angles_deg.is_none() => {
                return Err(Error::Validation("a singlet scenario needs four angles".into()))
            }
            ScenarioKind::Explicit if self.vector.is_none() => {
                return Err(Error::Validation("an explicit scenario needs a vector".into()))
            }
            _ => {}
        }
        if let Some(a) = &self.angles_deg {
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation("angles must be finite".into()));
            }
        }
        if let Some(e) = &self.expectations {
            e.validate()?;
        }
        if let Some(m) = &self.pairing_marginals {
            for pair in m.keys() {
                if !CH_PAIRS.contains(&(pair.i, pair.j)) {
                    return Err(Error::Shape(format!("pairing marginal for non-coincidence pair {{{pair}}}")));
                }
            }
        }
        Ok(())
    }

    /// Human-readable names of `e1..e4`.
    pub fn experiment_labels(&self) -> [&'static str; 4] {
        match self.kind {
            ScenarioKind::Singlet => ["spin a1 (left)", "spin a2 (left)", "spin a3 (right)", "spin a4 (right)"],
            ScenarioKind::Vessels => [
                "siphon left, > 10 l",
                "spoon left, transparent",
                "siphon right, >= 10 l",
                "spoon right, transparent",
            ],
            ScenarioKind::Concept => [
                "Glimmer appears, thinks Glimmer",
                "Inkling appears, hears bell",
                "Inkling appears, thinks Inkling",
                "Glimmer appears, hears bell",
            ],
            ScenarioKind::Explicit => ["e1", "e2", "e3", "e4"],
        }
    }

    /// Data of coincidence experiment `(i, j)`: explicit pairing marginals
    /// when present, otherwise the single probabilities of the vector.
    pub fn pairing_record(&self, i: usize, j: usize) -> Result<PairingRecord> {
        let v = self
            .vector
            .as_ref()
            .ok_or_else(|| Error::Shape(format!("scenario {:?} has no correlation vector", self.name)))?;
        if v.n() < 4 {
            return Err(Error::Shape(format!("scenario {:?} has fewer than four events", self.name)));
        }
        let up_up = v
            .joint(i, j)
            .cloned()
            .ok_or_else(|| Error::Shape(format!("scenario {:?} lacks joint p{i}{j}", self.name)))?;
        let pair = Pair::new(i, j)?;
        let (left_up, right_up) = match self.pairing_marginals.as_ref().and_then(|m| m.get(&pair)) {
            Some((l, r)) => (l.clone(), r.clone()),
            None => (v.single(i).clone(), v.single(j).clone()),
        };
        Ok(PairingRecord { left_up, right_up, up_up })
    }
}

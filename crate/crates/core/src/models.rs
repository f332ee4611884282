//! Scenario generators: singlet spin pairs, the connected vessels of water,
//! the concept pair, and the event-distinguishing transformation that turns a
//! four-experiment scenario into an `n = 8` vector with disjoint pairs.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::prob::Prob;
use crate::stats::{CorrelationVector, ExpectationSet, Pair, Scenario, ScenarioKind, CH_PAIRS};

/// Pair set of a distinguished vector.
pub const DISTINGUISHED_PAIRS: [(usize, usize); 4] = [(1, 5), (2, 7), (3, 6), (4, 8)];

/// Coincidence experiment `(i, j)` behind each distinguished pair, with the
/// event index of its left and right outcome.
const DISTINGUISHED_SOURCES: [((usize, usize), usize, usize); 4] =
    [((1, 3), 1, 5), ((1, 4), 2, 7), ((2, 3), 3, 6), ((2, 4), 4, 8)];

/// Values of `cos` that are snapped to exactly when within this distance.
const COS_SNAP_TOL: f64 = 1e-12;

/// Four coplanar spin directions, angles in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingletConfig {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl SingletConfig {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self> {
        let cfg = SingletConfig { a1, a2, a3, a4 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_degrees(deg: [f64; 4]) -> Result<Self> {
        let [a1, a2, a3, a4] = deg.map(f64::to_radians);
        SingletConfig::new(a1, a2, a3, a4)
    }

    /// Directions 0°, 90°, 45°, 135°: maximal CHSH violation.
    pub fn chsh_optimal() -> Self {
        SingletConfig::from_degrees([0.0, 90.0, 45.0, 135.0]).expect("finite")
    }

    /// Directions 0°, 120°, 120°, 240°, with `a2 = a3`.
    pub fn ch_config() -> Self {
        SingletConfig::from_degrees([0.0, 120.0, 120.0, 240.0]).expect("finite")
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles().iter().all(|a| a.is_finite()) {
            Ok(())
        } else {
            Err(Error::Validation("spin angles must be finite".into()))
        }
    }

    pub fn angles(&self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }

    /// Angles in degrees, with float noise from the radian round trip removed.
    pub fn degrees(&self) -> [f64; 4] {
        self.angles().map(|a| {
            let d = a.to_degrees();
            let r = (d * 1e9).round() / 1e9;
            if (d - r).abs() <= 1e-9 {
                r
            } else {
                d
            }
        })
    }

    /// `∠(a_i, a_j)` folded into `[0, π]`.
    pub fn angle_between(&self, i: usize, j: usize) -> f64 {
        let a = self.angles();
        let d = (a[i - 1] - a[j - 1]).rem_euclid(TAU);
        d.min(TAU - d)
    }

    /// `cos ∠(a_i, a_j)`, snapped to `0, ±½, ±1` when within rounding noise so
    /// that the textbook configurations give exact rationals.
    pub fn cos_between(&self, i: usize, j: usize) -> f64 {
        let a = self.angles();
        snap_cos((a[i - 1] - a[j - 1]).cos())
    }
}

fn snap_cos(c: f64) -> f64 {
    for target in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        if (c - target).abs() <= COS_SNAP_TOL {
            return target;
        }
    }
    c.clamp(-1.0, 1.0)
}

/// Quantum predictions for the singlet state: `p_i = ½`,
/// `E_ij = -cos ∠(a_i, a_j)` and `p_ij = ½ sin²(∠/2) = (1 - cos ∠) / 4`.
pub fn singlet_scenario(cfg: SingletConfig) -> Result<Scenario> {
    cfg.validate()?;
    let mut e = [0.0; 4];
    let mut joints = Vec::with_capacity(4);
    for (k, &(i, j)) in CH_PAIRS.iter().enumerate() {
        let c = cfg.cos_between(i, j);
        e[k] = if c == 0.0 { 0.0 } else { -c };
        joints.push(((i, j), (1.0 - c) / 4.0));
    }
    let vector = CorrelationVector::from_f64(&[0.5; 4], &joints)?;
    Ok(Scenario {
        name: "singlet".into(),
        kind: ScenarioKind::Singlet,
        angles_deg: Some(cfg.degrees()),
        vector: Some(vector),
        expectations: Some(ExpectationSet::new(e[0], e[1], e[2], e[3])?),
        pairing_marginals: None,
    })
}

fn vessels_like(name: &str, kind: ScenarioKind) -> Scenario {
    let vector = CorrelationVector::from_f64(&[1.0; 4], &[((1, 3), 0.0), ((1, 4), 1.0), ((2, 3), 1.0), ((2, 4), 1.0)])
        .expect("valid literal");
    // In the siphon-siphon experiment neither side obtains more than 10 litres
    // together with the other; every other experiment is up on both sides.
    let marginals = CH_PAIRS
        .iter()
        .map(|&(i, j)| {
            let p = if (i, j) == (1, 3) { Prob::zero() } else { Prob::one() };
            (Pair::new(i, j).expect("CH pair"), (p.clone(), p))
        })
        .collect();
    Scenario {
        name: name.into(),
        kind,
        angles_deg: None,
        vector: Some(vector),
        expectations: Some(ExpectationSet::new(-1.0, 1.0, 1.0, 1.0).expect("valid literal")),
        pairing_marginals: Some(marginals),
    }
}

/// Two vessels of water joined by a tube, drawn from with siphons and
/// inspected with spoons.
pub fn vessels_scenario() -> Scenario {
    vessels_like("vessels", ScenarioKind::Vessels)
}

/// The two-animal concept pair: same correlation table as the vessels.
pub fn concept_scenario() -> Scenario {
    vessels_like("concept", ScenarioKind::Concept)
}

/// Builtin scenario by name; the singlet uses the CHSH-optimal directions.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    match name {
        "singlet" => singlet_scenario(SingletConfig::chsh_optimal()),
        "vessels" => Ok(vessels_scenario()),
        "concept" => Ok(concept_scenario()),
        other => Err(Error::Argument(format!(
            "unknown builtin {other:?}; expected singlet, vessels or concept"
        ))),
    }
}

/// A correlation vector over the events `E_1..E_8` with pairs
/// `{1,5}, {2,7}, {3,6}, {4,8}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistinguishedVector(CorrelationVector);

impl DistinguishedVector {
    pub fn new(v: CorrelationVector) -> Result<Self> {
        if v.n() != 8 || v.pair_list() != DISTINGUISHED_PAIRS {
            return Err(Error::Shape(format!(
                "distinguished vector needs n = 8 with pairs {DISTINGUISHED_PAIRS:?}, got n = {} with {:?}",
                v.n(),
                v.pair_list()
            )));
        }
        Ok(DistinguishedVector(v))
    }

    /// Build from eight singles and the joints in pair order.
    pub fn from_parts(singles: [Prob; 8], joints: [Prob; 4]) -> Result<Self> {
        let joints = DISTINGUISHED_PAIRS
            .iter()
            .zip(joints)
            .map(|(&(i, j), p)| Pair::new(i, j).map(|pair| (pair, p)))
            .collect::<Result<Vec<_>>>()?;
        DistinguishedVector::new(CorrelationVector::new(singles.to_vec(), joints)?)
    }

    pub fn vector(&self) -> &CorrelationVector {
        &self.0
    }

    pub fn into_vector(self) -> CorrelationVector {
        self.0
    }

    pub fn into_scenario(self, name: impl Into<String>) -> Scenario {
        Scenario::explicit(name, self.0)
    }
}

impl AsRef<CorrelationVector> for DistinguishedVector {
    fn as_ref(&self) -> &CorrelationVector {
        &self.0
    }
}

/// Split each one-sided outcome into one event per coincidence experiment it
/// takes part in.
///
/// Each experiment on one side is paired with either counterpart with
/// probability `w`, so `p(E_k) = w · P(up in that pairing)` and
/// `p(E_i ∧ E_j) = w² · P(up, up)`.
pub fn distinguish_events(s: &Scenario, pairing_weight: &Prob) -> Result<DistinguishedVector> {
    if pairing_weight.is_negative() || pairing_weight.as_rational() > Prob::one().as_rational() {
        return Err(Error::Validation(format!("pairing weight {pairing_weight} is outside [0, 1]")));
    }
    let w = pairing_weight.as_rational();
    let w2 = w * w;
    let mut singles = vec![Prob::zero(); 8];
    let mut joints = Vec::with_capacity(4);
    for &((i, j), left, right) in &DISTINGUISHED_SOURCES {
        let rec = s.pairing_record(i, j)?;
        singles[left - 1] = Prob::from_rational(w * rec.left_up.as_rational());
        singles[right - 1] = Prob::from_rational(w * rec.right_up.as_rational());
        joints.push((Pair::new(left, right)?, Prob::from_rational(&w2 * rec.up_up.as_rational())));
    }
    DistinguishedVector::new(CorrelationVector::new(singles, joints)?)
}

/// [`distinguish_events`] with pairing weight ½.
pub fn distinguish_events_default(s: &Scenario) -> Result<DistinguishedVector> {
    distinguish_events(s, &Prob::ratio(1, 2))
}

/// The distinguished vessels vector `(0, ½, ½, ½, 0, ½, ½, ½; 0, ¼, ¼, ¼)`.
pub fn vessels_distinguished_literal() -> DistinguishedVector {
    let h = || Prob::ratio(1, 2);
    let q = || Prob::ratio(1, 4);
    DistinguishedVector::from_parts(
        [Prob::zero(), h(), h(), h(), Prob::zero(), h(), h(), h()],
        [Prob::zero(), q(), q(), q()],
    )
    .expect("valid literal")
}

/// Distinguished spin vector with literal joints 3/16 for the `a2 = a3`, 120°
/// configuration: singles ¼, joints `3/16, 3/16, 0, 3/16`.
pub fn spin_distinguished_literal() -> DistinguishedVector {
    let q = || Prob::ratio(1, 4);
    let t = || Prob::ratio(3, 16);
    DistinguishedVector::from_parts(
        [q(), q(), q(), q(), q(), q(), q(), q()],
        [t(), t(), Prob::zero(), t()],
    )
    .expect("valid literal")
}

/// Per-pairing marginals as stored on a scenario.
pub type PairingMarginals = BTreeMap<Pair, (Prob, Prob)>;

//! Classical correlation polytopes.
//!
//! For `n` events and a pair set `S`, the polytope `C(n, S)` is the convex
//! hull of the `2^n` vectors `u^ε` with `u_i = ε_i` and `u_ij = ε_i ε_j`. A
//! correlation vector lies in `C(n, S)` exactly when some Kolmogorov
//! probability space carries events with those single and pairwise
//! intersection probabilities. Membership is decided by phase-one simplex
//! feasibility over the vertex columns; for the two shapes with a known
//! inequality list (`n = 4` with the Clauser-Horne pairs and `n = 3` with
//! all pairs) a violated inequality is reported as well.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::prob::Prob;
use crate::simplex::{self, Arithmetic, ConstraintColumns, FeasibilityProblem};
use crate::stats::{ChCombination, CorrelationVector, Pair, CH_PAIRS};
use crate::PROB_TOL;

/// Hard upper bound on `n` (about a million vertex columns).
pub const MAX_EVENTS: usize = 20;
/// Default bound used by [`MembershipOptions`].
pub const DEFAULT_MAX_EVENTS: usize = 16;
/// Exact arithmetic is the default up to this many events.
pub const EXACT_DEFAULT_MAX_EVENTS: usize = 10;

/// Pair set of the `n = 3` Bell-Wigner shape.
pub const BELL3_PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

/// The `2^n` vertices `u^ε` of `C(n, S)`, in lexicographic `ε` order
/// (`ε_1` most significant).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    n: usize,
    pairs: Vec<(usize, usize)>,
    data: Vec<u8>,
}

pub fn enumerate_vertices(n: usize, pairs: &[(usize, usize)]) -> Result<VertexSet> {
    if n == 0 || n > MAX_EVENTS {
        return Err(Error::Capacity { n, limit: MAX_EVENTS });
    }
    let mut pairs: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(i, j)| Pair::new(i, j).map(|p| (p.i(), p.j())))
        .collect::<Result<_>>()?;
    pairs.sort_unstable();
    if pairs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Shape("duplicate pair in S".into()));
    }
    if let Some(&(i, j)) = pairs.iter().find(|p| p.1 > n) {
        return Err(Error::Shape(format!("pair {{{i},{j}}} references an event beyond n = {n}")));
    }
    let dim = n + pairs.len();
    let count = 1usize << n;
    let mut data = Vec::with_capacity(count * dim);
    for k in 0..count {
        let eps = |i: usize| ((k >> (n - i)) & 1) as u8;
        data.extend((1..=n).map(eps));
        data.extend(pairs.iter().map(|&(i, j)| eps(i) * eps(j)));
    }
    Ok(VertexSet { n, pairs, data })
}

impl VertexSet {
    pub fn for_vector(v: &CorrelationVector) -> Result<Self> {
        enumerate_vertices(v.n(), &v.pair_list())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn dim(&self) -> usize {
        self.n + self.pairs.len()
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vertex(&self, k: usize) -> &[u8] {
        let d = self.dim();
        &self.data[k * d..(k + 1) * d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.data.chunks_exact(self.dim())
    }

    /// The assignment `ε` of vertex `k`.
    pub fn epsilon(&self, k: usize) -> &[u8] {
        &self.vertex(k)[..self.n]
    }

    fn matches(&self, v: &CorrelationVector) -> bool {
        self.n == v.n() && self.pairs == v.pair_list()
    }

    /// Dense LP encoding: one row per component plus the normalisation row.
    pub fn feasibility_problem(&self, v: &CorrelationVector) -> Result<FeasibilityProblem> {
        self.check(v)?;
        let rows = self.dim() + 1;
        let mut matrix = vec![vec![BigRational::zero(); self.len()]; rows];
        for (k, u) in self.iter().enumerate() {
            for (r, &bit) in u.iter().enumerate() {
                if bit == 1 {
                    matrix[r][k] = BigRational::one();
                }
            }
            matrix[rows - 1][k] = BigRational::one();
        }
        FeasibilityProblem::new(matrix, rhs_for(v))
    }

    fn check(&self, v: &CorrelationVector) -> Result<()> {
        if !self.matches(v) {
            return Err(Error::Shape(format!(
                "vertex set is for n = {} with {:?}, vector has n = {} with {:?}",
                self.n,
                self.pairs,
                v.n(),
                v.pair_list()
            )));
        }
        Ok(())
    }
}

fn rhs_for(v: &CorrelationVector) -> Vec<BigRational> {
    let mut rhs: Vec<BigRational> = v.components().into_iter().map(|p| p.as_rational().clone()).collect();
    rhs.push(BigRational::one());
    rhs
}

impl ConstraintColumns for VertexSet {
    fn num_rows(&self) -> usize {
        self.dim() + 1
    }

    fn num_cols(&self) -> usize {
        self.len()
    }

    fn column<S: simplex::Scalar>(&self, j: usize, out: &mut Vec<(usize, S)>) {
        for (r, &bit) in self.vertex(j).iter().enumerate() {
            if bit == 1 {
                out.push((r, S::one()));
            }
        }
        out.push((self.dim(), S::one()));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MembershipOptions {
    /// `None` picks exact arithmetic up to [`EXACT_DEFAULT_MAX_EVENTS`].
    pub arithmetic: Option<Arithmetic>,
    pub max_events: usize,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions { arithmetic: None, max_events: DEFAULT_MAX_EVENTS }
    }
}

impl MembershipOptions {
    pub fn exact() -> Self {
        MembershipOptions { arithmetic: Some(Arithmetic::Exact), ..Default::default() }
    }

    pub fn float() -> Self {
        MembershipOptions { arithmetic: Some(Arithmetic::Float), ..Default::default() }
    }

    pub fn arithmetic_for(&self, n: usize) -> Arithmetic {
        self.arithmetic.unwrap_or(if n <= EXACT_DEFAULT_MAX_EVENTS {
            Arithmetic::Exact
        } else {
            Arithmetic::Float
        })
    }
}

/// Convex weights over vertices reproducing a correlation vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// `(vertex index, weight)` for every nonzero weight.
    pub weights: Vec<(usize, BigRational)>,
}

impl Certificate {
    pub fn weight_sum(&self) -> BigRational {
        self.weights.iter().fold(BigRational::zero(), |acc, (_, w)| acc + w)
    }

    pub fn reconstruct(&self, vs: &VertexSet) -> Vec<BigRational> {
        let mut out = vec![BigRational::zero(); vs.dim()];
        for (k, w) in &self.weights {
            for (o, &bit) in out.iter_mut().zip(vs.vertex(*k)) {
                if bit == 1 {
                    *o += w;
                }
            }
        }
        out
    }

    /// `max |Σ λ u - v|` in floating point.
    pub fn max_error(&self, vs: &VertexSet, v: &CorrelationVector) -> f64 {
        let sum_err = (self.weight_sum().to_f64().unwrap_or(f64::NAN) - 1.0).abs();
        self.reconstruct(vs)
            .iter()
            .zip(v.components())
            .map(|(r, p)| (r.to_f64().unwrap_or(f64::NAN) - p.to_f64()).abs())
            .fold(sum_err, f64::max)
    }

    pub fn reconstructs_exactly(&self, vs: &VertexSet, v: &CorrelationVector) -> bool {
        self.weight_sum().is_one()
            && self.weights.iter().all(|(_, w)| !w.is_negative())
            && self.reconstruct(vs).iter().zip(v.components()).all(|(r, p)| r == p.as_rational())
    }

    /// The sample space read off the certificate: one atom per vertex with
    /// its weight, event `A_i` being the vertices with `ε_i = 1`.
    pub fn to_representation(&self, vs: &VertexSet) -> Result<KolmogorovRep> {
        let atoms: Vec<Atom> = self
            .weights
            .iter()
            .map(|(k, w)| Atom {
                label: vs.epsilon(*k).iter().map(|b| char::from(b'0' + b)).collect(),
                weight: w.clone(),
            })
            .collect();
        let events = (1..=vs.n())
            .map(|i| {
                let members = self
                    .weights
                    .iter()
                    .enumerate()
                    .filter(|(_, (k, _))| vs.epsilon(*k)[i - 1] == 1)
                    .map(|(a, _)| a)
                    .collect();
                (i, members)
            })
            .collect();
        KolmogorovRep::new(atoms, events)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipResult {
    pub inside: bool,
    pub arithmetic: Arithmetic,
    pub certificate: Option<Certificate>,
    /// The most violated inequality of the known list, when outside and the
    /// shape has one.
    pub violated_facet: Option<InequalityCheck>,
}

/// Decide `v ∈ C(n, S)`.
pub fn membership(v: &CorrelationVector, opts: MembershipOptions) -> Result<MembershipResult> {
    check_capacity(v.n(), opts)?;
    let vs = VertexSet::for_vector(v)?;
    membership_in(&vs, v, opts)
}

/// Membership against a prebuilt vertex set; the set can be shared across
/// threads.
pub fn membership_in(vs: &VertexSet, v: &CorrelationVector, opts: MembershipOptions) -> Result<MembershipResult> {
    check_capacity(v.n(), opts)?;
    vs.check(v)?;
    let arithmetic = opts.arithmetic_for(v.n());
    let solution = simplex::solve(vs, &rhs_for(v), arithmetic)?;
    let result = match solution {
        Some(point) => MembershipResult {
            inside: true,
            arithmetic,
            certificate: Some(Certificate { weights: point.support }),
            violated_facet: None,
        },
        None => {
            let violated_facet = match known_inequality_set(v) {
                Some(checks) => most_violated(checks?),
                None => None,
            };
            MembershipResult { inside: false, arithmetic, certificate: None, violated_facet }
        }
    };
    Ok(result)
}

/// Membership of many vectors sharing one vertex set.
pub fn membership_batch(
    vs: &VertexSet,
    vectors: &[CorrelationVector],
    opts: MembershipOptions,
    exec: Execution,
) -> Vec<Result<MembershipResult>> {
    exec::map_slice(exec, vectors, |v| membership_in(vs, v, opts))
}

fn check_capacity(n: usize, opts: MembershipOptions) -> Result<()> {
    let limit = opts.max_events.min(MAX_EVENTS);
    if n > limit {
        return Err(Error::Capacity { n, limit });
    }
    Ok(())
}

fn most_violated(checks: Vec<InequalityCheck>) -> Option<InequalityCheck> {
    checks
        .into_iter()
        .filter(|c| !c.satisfied)
        .max_by(|a, b| a.violation().total_cmp(&b.violation()))
}

/// One evaluated inequality `lower <= value <= upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheck {
    pub name: String,
    pub formula: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub satisfied: bool,
}

impl InequalityCheck {
    /// Distance outside the bounds; zero when satisfied.
    pub fn violation(&self) -> f64 {
        let below = self.lower.map_or(0.0, |l| l - self.value);
        let above = self.upper.map_or(0.0, |u| self.value - u);
        below.max(above).max(0.0)
    }

    /// Distance to the nearest bound (signed slack, negative when violated).
    pub fn slack(&self) -> f64 {
        let from_lower = self.lower.map_or(f64::INFINITY, |l| self.value - l);
        let from_upper = self.upper.map_or(f64::INFINITY, |u| u - self.value);
        from_lower.min(from_upper)
    }
}

impl fmt::Display for InequalityCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bounds = match (self.lower, self.upper) {
            (Some(l), Some(u)) => format!("in [{l}, {u}]"),
            (Some(l), None) => format!(">= {l}"),
            (None, Some(u)) => format!("<= {u}"),
            (None, None) => String::new(),
        };
        write!(
            f,
            "{}: {} = {} {} {}",
            self.name,
            self.formula,
            self.value,
            bounds,
            if self.satisfied { "ok" } else { "VIOLATED" }
        )
    }
}

#[derive(Clone, Copy, Debug)]
enum Term {
    Single(usize),
    Joint(usize, usize),
}

struct LinearForm {
    name: String,
    formula: String,
    terms: Vec<(Term, i64)>,
    lower: Option<i64>,
    upper: Option<i64>,
}

impl LinearForm {
    fn evaluate(&self, v: &CorrelationVector) -> InequalityCheck {
        let mut acc = BigRational::zero();
        for &(term, coef) in &self.terms {
            let p = match term {
                Term::Single(i) => v.single(i),
                Term::Joint(i, j) => v.joint(i, j).expect("shape checked"),
            };
            acc += p.as_rational() * BigRational::from_integer(coef.into());
        }
        let value = acc.to_f64().unwrap_or(f64::NAN);
        let satisfied = self.lower.is_none_or(|l| value >= l as f64 - PROB_TOL)
            && self.upper.is_none_or(|u| value <= u as f64 + PROB_TOL);
        InequalityCheck {
            name: self.name.clone(),
            formula: self.formula.clone(),
            value,
            lower: self.lower.map(|l| l as f64),
            upper: self.upper.map(|u| u as f64),
            satisfied,
        }
    }
}

/// `0 <= p_ij <= p_i <= 1`, `0 <= p_ij <= p_j <= 1`, `p_i + p_j - p_ij <= 1`.
fn bound_forms(pairs: &[(usize, usize)], n: usize) -> Vec<LinearForm> {
    let mut forms = Vec::new();
    for i in 1..=n {
        forms.push(LinearForm {
            name: format!("p{i}<=1"),
            formula: format!("p{i}"),
            terms: vec![(Term::Single(i), 1)],
            lower: Some(0),
            upper: Some(1),
        });
    }
    for &(i, j) in pairs {
        let pij = Term::Joint(i, j);
        forms.push(LinearForm {
            name: format!("p{i}{j}>=0"),
            formula: format!("p{i}{j}"),
            terms: vec![(pij, 1)],
            lower: Some(0),
            upper: None,
        });
        for k in [i, j] {
            forms.push(LinearForm {
                name: format!("p{i}{j}<=p{k}"),
                formula: format!("p{k} - p{i}{j}"),
                terms: vec![(Term::Single(k), 1), (pij, -1)],
                lower: Some(0),
                upper: None,
            });
        }
        forms.push(LinearForm {
            name: format!("p{i}+p{j}-p{i}{j}<=1"),
            formula: format!("p{i} + p{j} - p{i}{j}"),
            terms: vec![(Term::Single(i), 1), (Term::Single(j), 1), (pij, -1)],
            lower: None,
            upper: Some(1),
        });
    }
    forms
}

fn ch_forms() -> Vec<LinearForm> {
    let mut forms = bound_forms(&CH_PAIRS, 4);
    for c in ChCombination::ALL {
        let neg = c.negated_pair();
        let mut terms: Vec<(Term, i64)> = CH_PAIRS
            .iter()
            .map(|&(i, j)| (Term::Joint(i, j), if (i, j) == neg { -1 } else { 1 }))
            .collect();
        let (a, b) = c.negated_singles();
        terms.push((Term::Single(a), -1));
        terms.push((Term::Single(b), -1));
        forms.push(LinearForm {
            name: c.name().to_string(),
            formula: c.formula(),
            terms,
            lower: Some(-1),
            upper: Some(0),
        });
    }
    forms
}

fn bell3_forms() -> Vec<LinearForm> {
    let mut forms = bound_forms(&BELL3_PAIRS, 3);
    let s = Term::Single;
    let j = Term::Joint;
    forms.push(LinearForm {
        name: "BW0".into(),
        formula: "p1 + p2 + p3 - p12 - p13 - p23".into(),
        terms: vec![(s(1), 1), (s(2), 1), (s(3), 1), (j(1, 2), -1), (j(1, 3), -1), (j(2, 3), -1)],
        lower: None,
        upper: Some(1),
    });
    // p_i - p_ij - p_ik + p_jk is the measure of A_i minus A_j and A_k, so it
    // is bounded below by zero.
    let cyclic = [
        ("BW1", 1, (1, 2), (1, 3), (2, 3)),
        ("BW2", 2, (1, 2), (2, 3), (1, 3)),
        ("BW3", 3, (1, 3), (2, 3), (1, 2)),
    ];
    for (name, i, a, b, c) in cyclic {
        forms.push(LinearForm {
            name: name.into(),
            formula: format!("p{i} - p{}{} - p{}{} + p{}{}", a.0, a.1, b.0, b.1, c.0, c.1),
            terms: vec![(s(i), 1), (j(a.0, a.1), -1), (j(b.0, b.1), -1), (j(c.0, c.1), 1)],
            lower: Some(0),
            upper: None,
        });
    }
    forms
}

/// The `n = 4` list equivalent to the Clauser-Horne inequalities.
pub fn ch_inequality_set(v: &CorrelationVector) -> Result<Vec<InequalityCheck>> {
    if v.n() != 4 || !v.has_pairs(&CH_PAIRS) {
        return Err(Error::Shape(format!(
            "Clauser-Horne list needs n = 4 with pairs {CH_PAIRS:?}, got n = {} with {:?}",
            v.n(),
            v.pair_list()
        )));
    }
    Ok(ch_forms().iter().map(|f| f.evaluate(v)).collect())
}

/// The `n = 3` list equivalent to the original Bell inequalities.
pub fn bell_inequality_set_n3(v: &CorrelationVector) -> Result<Vec<InequalityCheck>> {
    if v.n() != 3 || !v.has_pairs(&BELL3_PAIRS) {
        return Err(Error::Shape(format!(
            "Bell-Wigner list needs n = 3 with pairs {BELL3_PAIRS:?}, got n = {} with {:?}",
            v.n(),
            v.pair_list()
        )));
    }
    Ok(bell3_forms().iter().map(|f| f.evaluate(v)).collect())
}

/// The printed inequality list for `v`'s shape, if there is one.
pub fn known_inequality_set(v: &CorrelationVector) -> Option<Result<Vec<InequalityCheck>>> {
    if v.n() == 4 && v.has_pairs(&CH_PAIRS) {
        Some(ch_inequality_set(v))
    } else if v.n() == 3 && v.has_pairs(&BELL3_PAIRS) {
        Some(bell_inequality_set_n3(v))
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub label: String,
    pub weight: BigRational,
}

/// A finite probability space `(X, 2^X, μ)` with events `A_i ⊆ X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KolmogorovRep {
    atoms: Vec<Atom>,
    /// Event index (1-based) to sorted atom indices.
    events: BTreeMap<usize, Vec<usize>>,
}

impl KolmogorovRep {
    pub fn new(atoms: Vec<Atom>, events: BTreeMap<usize, Vec<usize>>) -> Result<Self> {
        let mut events = events;
        for members in events.values_mut() {
            members.sort_unstable();
            members.dedup();
        }
        let rep = KolmogorovRep { atoms, events };
        rep.validate()?;
        Ok(rep)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.atoms.iter().find(|a| a.weight.is_negative()) {
            return Err(Error::Validation(format!("atom {} has negative weight {}", a.label, a.weight)));
        }
        let total = self.atoms.iter().fold(BigRational::zero(), |acc, a| acc + &a.weight);
        if !total.is_one() {
            return Err(Error::Validation(format!("atom weights sum to {total}, not 1")));
        }
        for (e, members) in &self.events {
            if let Some(bad) = members.iter().find(|&&k| k >= self.atoms.len()) {
                return Err(Error::Validation(format!("event A{e} refers to undeclared atom {bad}")));
            }
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atoms_mut(&mut self) -> &mut [Atom] {
        &mut self.atoms
    }

    pub fn events(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.events
    }

    pub fn event(&self, i: usize) -> Option<&[usize]> {
        self.events.get(&i).map(Vec::as_slice)
    }

    fn measure_of(&self, members: impl Iterator<Item = usize>) -> BigRational {
        members.fold(BigRational::zero(), |acc, k| acc + &self.atoms[k].weight)
    }

    /// `μ(A_i)`.
    pub fn measure(&self, i: usize) -> Option<BigRational> {
        self.event(i).map(|m| self.measure_of(m.iter().copied()))
    }

    /// `μ(A_i ∩ A_j)`.
    pub fn joint_measure(&self, i: usize, j: usize) -> Option<BigRational> {
        let a = self.event(i)?;
        let b = self.event(j)?;
        Some(self.measure_of(a.iter().copied().filter(|k| b.binary_search(k).is_ok())))
    }

    fn measures_for(&self, v: &CorrelationVector) -> Result<Vec<BigRational>> {
        self.validate()?;
        let mut out = Vec::with_capacity(v.dim());
        for i in 1..=v.n() {
            out.push(self.measure(i).ok_or_else(|| Error::Shape(format!("no event declared for A{i}")))?);
        }
        for p in v.pairs() {
            out.push(self.joint_measure(p.i(), p.j()).expect("events checked above"));
        }
        Ok(out)
    }
}

/// Exact check of `μ(A_i) = p_i` and `μ(A_i ∩ A_j) = p_ij`.
pub fn verify_representation(rep: &KolmogorovRep, v: &CorrelationVector) -> Result<bool> {
    let measures = rep.measures_for(v)?;
    Ok(measures.iter().zip(v.components()).all(|(m, p)| m == p.as_rational()))
}

/// Floating-point variant of [`verify_representation`].
pub fn verify_representation_within(rep: &KolmogorovRep, v: &CorrelationVector, tol: f64) -> Result<bool> {
    let measures = rep.measures_for(v)?;
    Ok(measures
        .iter()
        .zip(v.components())
        .all(|(m, p)| (m.to_f64().unwrap_or(f64::NAN) - p.to_f64()).abs() <= tol))
}

struct Factor {
    weights: Vec<BigRational>,
    codes: &'static [&'static str],
    /// `(event, atoms of this factor belonging to it)`.
    members: Vec<(usize, &'static [usize])>,
}

/// Product-space representation for pair sets in which no index appears in
/// two pairs.
///
/// Each pair `{i, j}` contributes a four-atom space with weights
/// `(p_ij, p_i - p_ij, p_j - p_ij, 1 - p_i - p_j + p_ij)`. Indices outside
/// every pair contribute a two-atom space `(p_i, 1 - p_i)`; this completes
/// the construction for vectors whose pairs do not cover all events. The
/// result is the product measure with cylinder events.
pub fn product_representation(v: &CorrelationVector) -> Result<KolmogorovRep> {
    if v.n() > MAX_EVENTS {
        return Err(Error::Capacity { n: v.n(), limit: MAX_EVENTS });
    }
    let mut owner: Vec<Option<Pair>> = vec![None; v.n() + 1];
    for p in v.pairs() {
        for k in [p.i(), p.j()] {
            if let Some(prev) = owner[k] {
                return Err(Error::Precondition(format!(
                    "index {k} appears in both {{{prev}}} and {{{p}}}"
                )));
            }
            owner[k] = Some(p);
        }
    }

    let mut factors = Vec::new();
    for i in 1..=v.n() {
        match owner[i] {
            Some(p) if p.i() == i => {
                let pi = v.single(p.i()).as_rational();
                let pj = v.single(p.j()).as_rational();
                let pij = v.joint(p.i(), p.j()).expect("pair of v").as_rational();
                let weights = vec![pij.clone(), pi - pij, pj - pij, BigRational::one() - pi - pj + pij];
                let conditions = [
                    format!("p{}{} >= 0", p.i(), p.j()),
                    format!("p{}{} <= p{}", p.i(), p.j(), p.i()),
                    format!("p{}{} <= p{}", p.i(), p.j(), p.j()),
                    format!("p{} + p{} - p{}{} <= 1", p.i(), p.j(), p.i(), p.j()),
                ];
                if let Some(k) = weights.iter().position(Signed::is_negative) {
                    return Err(Error::NoRepresentation(format!("pair {{{p}}} violates {}", conditions[k])));
                }
                factors.push(Factor {
                    weights,
                    codes: &["11", "10", "01", "00"],
                    members: vec![(p.i(), &[0, 1]), (p.j(), &[0, 2])],
                });
            }
            Some(_) => {}
            None => {
                let pi = v.single(i).as_rational();
                factors.push(Factor {
                    weights: vec![pi.clone(), BigRational::one() - pi],
                    codes: &["1", "0"],
                    members: vec![(i, &[0])],
                });
            }
        }
    }

    // Mixed-radix enumeration, first factor most significant.
    let mut atoms = vec![(String::new(), BigRational::one(), Vec::<usize>::new())];
    for f in &factors {
        let mut next = Vec::with_capacity(atoms.len() * f.weights.len());
        for (label, weight, digits) in &atoms {
            for (d, w) in f.weights.iter().enumerate() {
                let label = if label.is_empty() {
                    f.codes[d].to_string()
                } else {
                    format!("{label}.{}", f.codes[d])
                };
                let mut digits = digits.clone();
                digits.push(d);
                next.push((label, weight * w, digits));
            }
        }
        atoms = next;
    }

    let mut events: BTreeMap<usize, Vec<usize>> = (1..=v.n()).map(|i| (i, Vec::new())).collect();
    for (a, (_, _, digits)) in atoms.iter().enumerate() {
        for (f, &d) in factors.iter().zip(digits) {
            for &(event, set) in &f.members {
                if set.contains(&d) {
                    events.get_mut(&event).expect("all events seeded").push(a);
                }
            }
        }
    }
    let atoms = atoms.into_iter().map(|(label, weight, _)| Atom { label, weight }).collect();
    KolmogorovRep::new(atoms, events)
}

/// Exact atom weights of one pair factor, for inspection.
pub fn pair_factor_weights(pi: &Prob, pj: &Prob, pij: &Prob) -> [BigRational; 4] {
    let (pi, pj, pij) = (pi.as_rational(), pj.as_rational(), pij.as_rational());
    [pij.clone(), pi - pij, pj - pij, BigRational::one() - pi - pj + pij]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn vertices_n2() {
        let vs = enumerate_vertices(2, &[(1, 2)]).unwrap();
        let got: Vec<Vec<u8>> = vs.iter().map(<[u8]>::to_vec).collect();
        assert_eq!(got, vec![vec![0, 0, 0], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 1]]);
    }

    #[test]
    fn vertex_n3_example() {
        let vs = enumerate_vertices(3, &BELL3_PAIRS).unwrap();
        // ε = (1,1,0) is index 0b110.
        assert_eq!(vs.vertex(0b110), &[1, 1, 0, 1, 0, 0]);
    }

    #[test]
    fn vertices_n4_count() {
        let vs = enumerate_vertices(4, &CH_PAIRS).unwrap();
        assert_eq!(vs.len(), 16);
        assert_eq!(vs.dim(), 8);
        assert_eq!(vs.iter().count(), 16);
    }

    #[test]
    fn vertex_guards() {
        assert!(matches!(enumerate_vertices(0, &[]), Err(Error::Capacity { .. })));
        assert!(matches!(enumerate_vertices(21, &[]), Err(Error::Capacity { .. })));
        assert!(matches!(enumerate_vertices(3, &[(1, 4)]), Err(Error::Shape(_))));
        assert!(matches!(enumerate_vertices(3, &[(1, 2), (1, 2)]), Err(Error::Shape(_))));
    }

    fn ch(singles: [f64; 4], j: [f64; 4]) -> CorrelationVector {
        CorrelationVector::from_f64(&singles, &[((1, 3), j[0]), ((1, 4), j[1]), ((2, 3), j[2]), ((2, 4), j[3])])
            .unwrap()
    }

    #[test]
    fn product_vector_inside_with_exact_certificate() {
        let v = ch([0.5, 0.25, 0.75, 0.5], [0.375, 0.25, 0.1875, 0.125]);
        let vs = VertexSet::for_vector(&v).unwrap();
        let r = membership_in(&vs, &v, MembershipOptions::exact()).unwrap();
        assert!(r.inside);
        let cert = r.certificate.unwrap();
        assert!(cert.reconstructs_exactly(&vs, &v));
        let rep = cert.to_representation(&vs).unwrap();
        assert!(verify_representation(&rep, &v).unwrap());
    }

    #[test]
    fn vessels_vector_outside_with_ch2() {
        let v = ch([1.0; 4], [0.0, 1.0, 1.0, 1.0]);
        for opts in [MembershipOptions::exact(), MembershipOptions::float()] {
            let r = membership(&v, opts).unwrap();
            assert!(!r.inside);
            let facet = r.violated_facet.unwrap();
            assert_eq!(facet.name, "CH2");
            assert_eq!(facet.value, 1.0);
        }
    }

    #[test]
    fn capacity_guard() {
        let v = CorrelationVector::from_f64(&[0.5; 17], &[]).unwrap();
        assert!(matches!(membership(&v, MembershipOptions::default()), Err(Error::Capacity { n: 17, limit: 16 })));
        let opts = MembershipOptions { max_events: 40, ..MembershipOptions::float() };
        let v = CorrelationVector::from_f64(&[0.5; 21], &[]).unwrap();
        assert!(matches!(membership(&v, opts), Err(Error::Capacity { n: 21, limit: 20 })));
    }

    #[test]
    fn n3_examples() {
        let indep = CorrelationVector::from_f64(&[0.5; 3], &[((1, 2), 0.25), ((1, 3), 0.25), ((2, 3), 0.25)]).unwrap();
        assert!(bell_inequality_set_n3(&indep).unwrap().iter().all(|c| c.satisfied));

        let disjoint = CorrelationVector::from_f64(&[0.5; 3], &[((1, 2), 0.0), ((1, 3), 0.0), ((2, 3), 0.0)]).unwrap();
        let checks = bell_inequality_set_n3(&disjoint).unwrap();
        let bw0 = checks.iter().find(|c| c.name == "BW0").unwrap();
        assert_eq!(bw0.value, 1.5);
        assert!(!bw0.satisfied);
        assert!(!membership(&disjoint, MembershipOptions::exact()).unwrap().inside);
    }

    #[test]
    fn wrong_shapes_rejected() {
        let v = CorrelationVector::from_f64(&[0.5; 3], &[((1, 2), 0.25)]).unwrap();
        assert!(matches!(ch_inequality_set(&v), Err(Error::Shape(_))));
        assert!(matches!(bell_inequality_set_n3(&v), Err(Error::Shape(_))));
        assert!(known_inequality_set(&v).is_none());
    }

    #[test]
    fn product_representation_single_pair() {
        let v = CorrelationVector::from_f64(&[0.5, 0.5], &[((1, 2), 0.25)]).unwrap();
        let rep = product_representation(&v).unwrap();
        let w: Vec<_> = rep.atoms().iter().map(|a| a.weight.clone()).collect();
        assert_eq!(w, vec![q(1, 4); 4]);
        assert!(verify_representation(&rep, &v).unwrap());
    }

    #[test]
    fn product_representation_with_unpaired_index() {
        let v = CorrelationVector::from_f64(&[0.5, 0.25, 0.75], &[((1, 3), 0.5)]).unwrap();
        let rep = product_representation(&v).unwrap();
        assert_eq!(rep.atoms().len(), 8);
        assert!(verify_representation(&rep, &v).unwrap());
    }

    #[test]
    fn product_representation_errors() {
        let v = CorrelationVector::from_f64(&[0.2, 0.5], &[((1, 2), 0.3)]).unwrap();
        assert!(matches!(product_representation(&v), Err(Error::NoRepresentation(_))));
        let v = CorrelationVector::from_f64(&[0.9, 0.9], &[((1, 2), 0.5)]).unwrap();
        assert!(matches!(product_representation(&v), Err(Error::NoRepresentation(_))));
        let v = CorrelationVector::from_f64(&[0.5; 3], &[((1, 2), 0.25), ((2, 3), 0.25)]).unwrap();
        assert!(matches!(product_representation(&v), Err(Error::Precondition(_))));
    }

    #[test]
    fn verify_detects_perturbation_and_missing_events() {
        let v = CorrelationVector::from_f64(&[0.5, 0.5], &[((1, 2), 0.25)]).unwrap();
        let mut rep = product_representation(&v).unwrap();
        rep.atoms_mut()[0].weight += q(1, 10);
        rep.atoms_mut()[3].weight -= q(1, 10);
        assert!(!verify_representation(&rep, &v).unwrap());

        let atoms = vec![Atom { label: "x".into(), weight: q(1, 1) }];
        let rep = KolmogorovRep::new(atoms, BTreeMap::from([(1, vec![0])])).unwrap();
        assert!(matches!(verify_representation(&rep, &v), Err(Error::Shape(_))));
    }

    #[test]
    fn hand_built_four_atom_space() {
        let atoms = ["a", "b", "c", "d"].map(|l| Atom { label: l.into(), weight: q(1, 4) }).to_vec();
        let events = BTreeMap::from([(1, vec![0, 1]), (2, vec![0, 2])]);
        let rep = KolmogorovRep::new(atoms, events).unwrap();
        let v = CorrelationVector::from_f64(&[0.5, 0.5], &[((1, 2), 0.25)]).unwrap();
        assert!(verify_representation(&rep, &v).unwrap());
        assert!(verify_representation_within(&rep, &v, 1e-12).unwrap());
    }

    #[test]
    fn invalid_representations_rejected() {
        let atoms = vec![Atom { label: "a".into(), weight: q(1, 2) }];
        assert!(KolmogorovRep::new(atoms, BTreeMap::new()).is_err());
        let atoms = vec![Atom { label: "a".into(), weight: q(1, 1) }];
        assert!(KolmogorovRep::new(atoms, BTreeMap::from([(1, vec![3])])).is_err());
    }

    #[test]
    fn dense_encoding_agrees_with_implicit_columns() {
        let v = ch([0.5; 4], [0.25, 0.25, 0.25, 0.25]);
        let vs = VertexSet::for_vector(&v).unwrap();
        let prob = vs.feasibility_problem(&v).unwrap();
        assert!(simplex::lp_feasible(&prob, Arithmetic::Exact).unwrap().is_some());
        let bad = ch([1.0; 4], [0.0, 1.0, 1.0, 1.0]);
        let prob = vs.feasibility_problem(&bad).unwrap();
        assert!(simplex::lp_feasible(&prob, Arithmetic::Exact).unwrap().is_none());
    }
}

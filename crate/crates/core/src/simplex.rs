//! Phase-one simplex for equality-constrained feasibility.
//!
//! Decides whether `A x = b, x >= 0` has a solution. The solver is a revised
//! simplex over an explicit basis inverse; constraint columns are pulled on
//! demand through [`ConstraintColumns`], so large implicit matrices (the
//! `2^n` vertex columns of a correlation polytope) are never materialised.
//! Entering and leaving variables follow Bland's rule, which rules out
//! cycling in exact arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arithmetic used by the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arithmetic {
    Float,
    Exact,
}

/// Field operations needed by the simplex, with sign tests that are
/// tolerance-aware for floats and exact for rationals.
pub trait Scalar: Clone + std::fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn to_rational(&self) -> BigRational;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Strictly positive beyond the pivot tolerance.
    fn is_pos(&self) -> bool;
    /// Strictly negative beyond the pivot tolerance.
    fn is_neg(&self) -> bool;
    /// Zero up to the feasibility tolerance.
    fn is_feasibility_zero(&self) -> bool;
    fn is_exact_zero(&self) -> bool;
    /// Used when floating round-off pushes a basic value slightly below 0.
    fn clamp_nonneg(self) -> Self;
}

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-10;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn to_rational(&self) -> BigRational {
        BigRational::from_float(*self).unwrap_or_else(<BigRational as Zero>::zero)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_pos(&self) -> bool {
        *self > PIVOT_TOL
    }
    fn is_neg(&self) -> bool {
        *self < -PIVOT_TOL
    }
    fn is_feasibility_zero(&self) -> bool {
        self.abs() <= FEAS_TOL
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
    fn clamp_nonneg(self) -> Self {
        if self < 0.0 && self > -FEAS_TOL {
            0.0
        } else {
            self
        }
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn to_rational(&self) -> BigRational {
        self.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn is_feasibility_zero(&self) -> bool {
        self.is_zero()
    }
    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
    fn clamp_nonneg(self) -> Self {
        self
    }
}

/// Column access to the constraint matrix `A`.
pub trait ConstraintColumns: Sync {
    fn num_rows(&self) -> usize;
    fn num_cols(&self) -> usize;
    /// Append the nonzero entries of column `j` as `(row, value)`.
    fn column<S: Scalar>(&self, j: usize, out: &mut Vec<(usize, S)>);
}

/// Dense equality system `A x = b, x >= 0` with rational data.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityProblem {
    rows: usize,
    cols: usize,
    matrix: Vec<BigRational>,
    rhs: Vec<BigRational>,
}

impl FeasibilityProblem {
    /// `matrix` is row-major, one `Vec` per constraint row.
    pub fn new(matrix: Vec<Vec<BigRational>>, rhs: Vec<BigRational>) -> Result<Self> {
        let rows = matrix.len();
        if rows != rhs.len() {
            return Err(Error::Dimension(format!("{rows} constraint rows but {} right-hand sides", rhs.len())));
        }
        let cols = matrix.first().map_or(0, Vec::len);
        if let Some((k, row)) = matrix.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::Dimension(format!("row {k} has {} columns, expected {cols}", row.len())));
        }
        Ok(FeasibilityProblem { rows, cols, matrix: matrix.into_iter().flatten().collect(), rhs })
    }

    pub fn from_i64(matrix: &[&[i64]], rhs: &[i64]) -> Result<Self> {
        let int = |v: i64| BigRational::from_integer(BigInt::from(v));
        Self::new(
            matrix.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect(),
            rhs.iter().map(|&v| int(v)).collect(),
        )
    }

    pub fn rhs(&self) -> &[BigRational] {
        &self.rhs
    }

    pub fn entry(&self, row: usize, col: usize) -> &BigRational {
        &self.matrix[row * self.cols + col]
    }
}

impl ConstraintColumns for FeasibilityProblem {
    fn num_rows(&self) -> usize {
        self.rows
    }
    fn num_cols(&self) -> usize {
        self.cols
    }
    fn column<S: Scalar>(&self, j: usize, out: &mut Vec<(usize, S)>) {
        for r in 0..self.rows {
            let a = self.entry(r, j);
            if !a.is_zero() {
                out.push((r, S::from_rational(a)));
            }
        }
    }
}

/// A feasible point, listed by its (basic) nonzero variables.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasiblePoint {
    pub support: Vec<(usize, BigRational)>,
}

impl FeasiblePoint {
    pub fn to_dense_f64(&self, cols: usize) -> Vec<f64> {
        let mut x = vec![0.0; cols];
        for (j, v) in &self.support {
            x[*j] = v.to_f64().unwrap_or(f64::NAN);
        }
        x
    }
}

/// Feasibility of a dense problem in the chosen arithmetic.
pub fn lp_feasible(prob: &FeasibilityProblem, mode: Arithmetic) -> Result<Option<FeasiblePoint>> {
    solve(prob, prob.rhs(), mode)
}

/// Feasibility of `A x = rhs, x >= 0` for any column source.
pub fn solve<C: ConstraintColumns>(
    cols: &C,
    rhs: &[BigRational],
    mode: Arithmetic,
) -> Result<Option<FeasiblePoint>> {
    if rhs.len() != cols.num_rows() {
        return Err(Error::Dimension(format!(
            "{} right-hand sides for {} rows",
            rhs.len(),
            cols.num_rows()
        )));
    }
    let n = cols.num_cols();
    match mode {
        Arithmetic::Float => {
            let b: Vec<f64> = rhs.iter().map(f64::from_rational).collect();
            let Some(fin) = phase_one(cols, &b, Some(iteration_cap(cols)))? else {
                return Ok(None);
            };
            let x = refine(cols, &fin, &b).unwrap_or(fin.x_b.clone());
            Ok(Some(support_of(&fin.basis, &x, n)))
        }
        Arithmetic::Exact => {
            let b: Vec<BigRational> = rhs.to_vec();
            Ok(phase_one(cols, &b, None)?.map(|fin| support_of(&fin.basis, &fin.x_b, n)))
        }
    }
}

struct FinalBasis<S> {
    /// Basic variable per row; indices `>= n` are artificials.
    basis: Vec<usize>,
    x_b: Vec<S>,
    flip: Vec<bool>,
}

fn support_of<S: Scalar>(basis: &[usize], x_b: &[S], n: usize) -> FeasiblePoint {
    let mut support: Vec<(usize, BigRational)> = basis
        .iter()
        .zip(x_b)
        .filter(|(&v, x)| v < n && !x.is_feasibility_zero())
        .map(|(&v, x)| (v, x.clone().clamp_nonneg().to_rational()))
        .collect();
    support.sort_by_key(|(j, _)| *j);
    FeasiblePoint { support }
}

/// Re-solve `B x_B = b` from scratch by Gaussian elimination with partial
/// pivoting, dropping the error accumulated over the product-form updates.
/// `None` if the basis looks singular, in which case the updated values are
/// kept.
fn refine<C: ConstraintColumns>(cols: &C, fin: &FinalBasis<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let n = cols.num_cols();
    let mut a = vec![0.0; m * m];
    let mut buf: Vec<(usize, f64)> = Vec::new();
    for (k, &v) in fin.basis.iter().enumerate() {
        if v >= n {
            a[(v - n) * m + k] = 1.0;
        } else {
            buf.clear();
            cols.column(v, &mut buf);
            for &(r, x) in &buf {
                a[r * m + k] = if fin.flip[r] { -x } else { x };
            }
        }
    }
    let mut x: Vec<f64> = b.iter().zip(&fin.flip).map(|(&v, &f)| if f { -v } else { v }).collect();
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i * m + c].abs().total_cmp(&a[j * m + c].abs()))?;
        if a[p * m + c].abs() < 1e-12 {
            return None;
        }
        if p != c {
            for k in 0..m {
                a.swap(p * m + k, c * m + k);
            }
            x.swap(p, c);
        }
        for i in c + 1..m {
            let f = a[i * m + c] / a[c * m + c];
            if f != 0.0 {
                for k in c..m {
                    a[i * m + k] -= f * a[c * m + k];
                }
                x[i] -= f * x[c];
            }
        }
    }
    for c in (0..m).rev() {
        let tail: f64 = (c + 1..m).map(|k| a[c * m + k] * x[k]).sum();
        x[c] = (x[c] - tail) / a[c * m + c];
    }
    // A refined value that goes clearly negative means the basis was not
    // really feasible; keep the simplex values then.
    if x.iter().any(|v| *v < -1e-9) {
        return None;
    }
    Some(x.into_iter().map(|v| v.max(0.0)).collect())
}

/// Consecutive degenerate pivots before pricing falls back to Bland's rule.
const BLAND_AFTER_DEGENERATE: usize = 8;

fn iteration_cap<C: ConstraintColumns>(cols: &C) -> usize {
    50 * (cols.num_rows() + cols.num_cols()) + 1000
}

/// Minimises the sum of artificial variables; feasible iff it reaches zero.
fn phase_one<S: Scalar, C: ConstraintColumns>(
    cols: &C,
    rhs: &[S],
    max_iter: Option<usize>,
) -> Result<Option<FinalBasis<S>>> {
    let m = cols.num_rows();
    let n = cols.num_cols();
    // Rows with negative right-hand side are negated so the artificial
    // basis starts feasible.
    let flip: Vec<bool> = rhs.iter().map(|b| b.is_neg()).collect();
    let mut x_b: Vec<S> = rhs.iter().zip(&flip).map(|(b, &f)| if f { b.neg() } else { b.clone() }).collect();
    if m == 0 {
        return Ok(Some(FinalBasis { basis: Vec::new(), x_b, flip }));
    }
    let mut binv: Vec<S> = (0..m * m).map(|k| if k / m == k % m { S::one() } else { S::zero() }).collect();
    // Variables 0..n are structural, n..n+m artificial.
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut in_basis = vec![false; n];
    let mut col_buf: Vec<(usize, S)> = Vec::with_capacity(m);
    let mut iterations = 0usize;
    let mut degenerate_run = 0usize;

    loop {
        let infeasibility = basis
            .iter()
            .zip(&x_b)
            .filter(|(&v, _)| v >= n)
            .fold(S::zero(), |acc, (_, x)| acc.add(x));
        if infeasibility.is_feasibility_zero() {
            return Ok(Some(FinalBasis { basis, x_b, flip }));
        }
        if let Some(cap) = max_iter {
            if iterations >= cap {
                return Err(Error::NumericalDegeneracy { iterations });
            }
        }

        // Simplex multipliers y = c_B^T B^-1 with c = 1 on artificials.
        let mut y = vec![S::zero(); m];
        for (r, &v) in basis.iter().enumerate() {
            if v >= n {
                for (k, yk) in y.iter_mut().enumerate() {
                    *yk = yk.add(&binv[r * m + k]);
                }
            }
        }

        // Dantzig pricing while progress is made; Bland (first improving
        // column) after a run of degenerate pivots, which rules out cycling.
        let bland = degenerate_run >= BLAND_AFTER_DEGENERATE;
        let mut entering: Option<(usize, S)> = None;
        for j in 0..n {
            if in_basis[j] {
                continue;
            }
            col_buf.clear();
            cols.column(j, &mut col_buf);
            let mut reduced = S::zero();
            for (r, a) in &col_buf {
                let flipped = if flip[*r] { a.neg() } else { a.clone() };
                reduced = reduced.sub(&y[*r].mul(&flipped));
            }
            if !reduced.is_neg() {
                continue;
            }
            if bland {
                entering = Some((j, reduced));
                break;
            }
            if entering.as_ref().is_none_or(|(_, best)| reduced.sub(best).is_neg()) {
                entering = Some((j, reduced));
            }
        }
        let Some((j, _)) = entering else {
            return Ok(None);
        };

        // Direction d = B^-1 a_j.
        col_buf.clear();
        cols.column(j, &mut col_buf);
        let mut d = vec![S::zero(); m];
        for (r, a) in &col_buf {
            let flipped = if flip[*r] { a.neg() } else { a.clone() };
            for (i, di) in d.iter_mut().enumerate() {
                let coef = &binv[i * m + r];
                *di = di.add(&coef.mul(&flipped));
            }
        }

        // Ratio test with Bland tie-breaking on the basic variable index.
        let mut leave: Option<(usize, S)> = None;
        for (i, di) in d.iter().enumerate() {
            if !di.is_pos() {
                continue;
            }
            let theta = x_b[i].div(di);
            leave = match leave {
                None => Some((i, theta)),
                Some((k, best)) => {
                    let diff = theta.sub(&best);
                    if diff.is_neg() || (!diff.is_pos() && basis[i] < basis[k]) {
                        Some((i, theta))
                    } else {
                        Some((k, best))
                    }
                }
            };
        }
        let Some((r, theta)) = leave else {
            // Phase one is bounded below by zero; an unbounded ray means the
            // float pivots have lost accuracy.
            return Err(Error::NumericalDegeneracy { iterations });
        };

        let pivot = d[r].clone();
        for k in 0..m {
            binv[r * m + k] = binv[r * m + k].div(&pivot);
        }
        x_b[r] = x_b[r].div(&pivot);
        for i in 0..m {
            if i == r || d[i].is_exact_zero() {
                continue;
            }
            let factor = d[i].clone();
            for k in 0..m {
                let delta = factor.mul(&binv[r * m + k]);
                binv[i * m + k] = binv[i * m + k].sub(&delta);
            }
            x_b[i] = x_b[i].sub(&factor.mul(&x_b[r])).clamp_nonneg();
        }
        if theta.is_feasibility_zero() {
            degenerate_run += 1;
        } else {
            degenerate_run = 0;
        }
        let old = basis[r];
        if old < n {
            in_basis[old] = false;
        }
        basis[r] = j;
        in_basis[j] = true;
        iterations += 1;
    }
}

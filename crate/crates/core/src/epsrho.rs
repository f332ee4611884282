//! The sphere-rod-elastic model with correlation reach `ρ` and elastic
//! half-width `ε`.
//!
//! After the left measurement the right sphere sits at `∓ρa` from its centre
//! (opposite the left outcome). Measuring along `b`, an elastic stretched over
//! `[-ε, ε]` breaks at a uniform point `γ`, and the right outcome is up iff
//! `γ` lies below the projection `x = ∓ρ a·b`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::iter::Sum;
use std::ops::{Add, Range};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Trials handled per work item in Monte Carlo runs.
pub const MC_CHUNK: u64 = 1 << 15;
/// Cells within this distance of `ε = √2ρ` are tagged [`Regime::Boundary`].
pub const BOUNDARY_TOL: f64 = 1e-9;
/// CHSH values above `2 + VIOLATION_TOL` count as violations.
pub const VIOLATION_TOL: f64 = 1e-12;

/// 32-bit words consumed per trial (three `u64` draws).
const WORDS_PER_TRIAL: u128 = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsRhoParams {
    rho: f64,
    eps: f64,
}

impl EpsRhoParams {
    pub fn new(rho: f64, eps: f64) -> Result<Self> {
        for (name, v) in [("rho", rho), ("eps", eps)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(EpsRhoParams { rho, eps })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

pub type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Unit directions of the left and right measurements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementDirections {
    a: Vec3,
    b: Vec3,
}

impl MeasurementDirections {
    pub fn new(a: Vec3, b: Vec3) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b)] {
            if !v.iter().all(|x| x.is_finite()) || (norm(&v) - 1.0).abs() > 1e-9 {
                return Err(Error::Validation(format!("direction {name} = {v:?} is not a unit vector")));
            }
        }
        Ok(MeasurementDirections { a, b })
    }

    /// Coplanar directions at angle `theta` (radians).
    pub fn from_angle(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::Validation("angle must be finite".into()));
        }
        MeasurementDirections::new([1.0, 0.0, 0.0], [theta.cos(), theta.sin(), 0.0])
    }

    /// Directions with the given `a·b`.
    pub fn from_cos(cos_ab: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&cos_ab) {
            return Err(Error::Validation(format!("a.b = {cos_ab} is outside [-1, 1]")));
        }
        let sin = (1.0 - cos_ab * cos_ab).sqrt();
        Ok(MeasurementDirections { a: [1.0, 0.0, 0.0], b: [cos_ab, sin, 0.0] })
    }

    pub fn a(&self) -> Vec3 {
        self.a
    }

    pub fn b(&self) -> Vec3 {
        self.b
    }

    pub fn cos_ab(&self) -> f64 {
        dot(&self.a, &self.b).clamp(-1.0, 1.0)
    }
}

/// Positions of the two spheres; the right sphere is centred at `-c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelState {
    pub s1: Vec3,
    pub s2: Vec3,
    pub c: Vec3,
}

impl ModelState {
    /// Both spheres at their centres.
    pub fn centred(c: Vec3) -> Self {
        ModelState { s1: c, s2: c.map(|x| -x), c }
    }

    pub fn check(&self, rho: f64) -> Result<()> {
        let d1 = norm(&std::array::from_fn(|k| self.s1[k] - self.c[k]));
        let d2 = norm(&std::array::from_fn(|k| self.s2[k] + self.c[k]));
        if d1 > rho + 1e-12 || d2 > rho + 1e-12 {
            return Err(Error::Validation(format!(
                "state outside the spheres: |s1 - c| = {d1}, |s2 + c| = {d2}, rho = {rho}"
            )));
        }
        Ok(())
    }

    /// State after the left outcome along `a`: the rod pushes the right
    /// sphere to `∓ρa` from its centre.
    pub fn after_left(&self, left: Outcome, rho: f64, a: &Vec3) -> ModelState {
        let s = -left.sign() as f64 * rho;
        ModelState { s2: std::array::from_fn(|k| -self.c[k] + s * a[k]), ..*self }
    }

    /// Projection of the right sphere on `b`, relative to its centre.
    pub fn right_projection(&self, b: &Vec3) -> f64 {
        let rel: Vec3 = std::array::from_fn(|k| self.s2[k] + self.c[k]);
        dot(&rel, b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Up,
    Down,
}

impl Outcome {
    pub fn sign(self) -> i8 {
        match self {
            Outcome::Up => 1,
            Outcome::Down => -1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub left: Outcome,
    pub right: Outcome,
    /// Where the elastic broke, in `[-ε, ε]`.
    pub break_point: f64,
}

impl TrialOutcome {
    pub fn product(&self) -> i8 {
        self.left.sign() * self.right.sign()
    }
}

/// `E(a, b)` in closed form.
pub fn closed_form_expectation(p: EpsRhoParams, cos_ab: f64) -> f64 {
    let x = p.rho * cos_ab;
    if p.eps == 0.0 {
        return if x > 0.0 {
            -1.0
        } else if x < 0.0 {
            1.0
        } else {
            0.0
        };
    }
    if x >= p.eps {
        -1.0
    } else if x <= -p.eps {
        1.0
    } else if x == 0.0 {
        0.0
    } else {
        -x / p.eps
    }
}

/// `P(right up | left up)`, i.e. `(ε - ρ a·b) / 2ε` clamped to `[0, 1]`.
pub fn conditional_up_probability(p: EpsRhoParams, cos_ab: f64) -> Result<f64> {
    if p.eps == 0.0 {
        return Err(Error::Degenerate("eps = 0: the outcome follows the sign of rho a.b".into()));
    }
    Ok(((p.eps - p.rho * cos_ab) / (2.0 * p.eps)).clamp(0.0, 1.0))
}

/// CHSH value at the optimal directions.
pub fn chsh_closed_form(p: EpsRhoParams) -> f64 {
    if p.rho == 0.0 {
        0.0
    } else if p.eps / p.rho > FRAC_1_SQRT_2 {
        2.0 * SQRT_2 * p.rho / p.eps
    } else {
        4.0
    }
}

/// Largest `ε` (at most 1) for which the CHSH bound is still violated.
pub fn violation_boundary(rho: f64) -> f64 {
    (SQRT_2 * rho).min(1.0)
}

fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One run of the measurement. Draws exactly three `u64`s from `rng`: the
/// left coin, the break point, and a tie coin used only when `ε = 0`.
pub fn simulate_pair<R: RngCore + ?Sized>(p: EpsRhoParams, dirs: &MeasurementDirections, rng: &mut R) -> TrialOutcome {
    let left_bits = rng.next_u64();
    let gamma_bits = rng.next_u64();
    let tie_bits = rng.next_u64();
    let left = if left_bits >> 63 == 1 { Outcome::Up } else { Outcome::Down };
    let break_point = p.eps * (2.0 * unit_interval(gamma_bits) - 1.0);
    let c = dirs.cos_ab();
    let x = match left {
        Outcome::Up => -p.rho * c,
        Outcome::Down => p.rho * c,
    };
    let up = if p.eps == 0.0 {
        if x == 0.0 {
            tie_bits >> 63 == 1
        } else {
            x > 0.0
        }
    } else {
        break_point < x
    };
    TrialOutcome { left, right: if up { Outcome::Up } else { Outcome::Down }, break_point }
}

/// Integer counts from a batch of trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    /// Trials with equal outcomes on both sides.
    pub agree: u64,
    pub left_up: u64,
    pub right_up: u64,
}

impl Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            agree: self.agree + o.agree,
            left_up: self.left_up + o.left_up,
            right_up: self.right_up + o.right_up,
        }
    }
}

impl Sum for Tally {
    fn sum<I: Iterator<Item = Tally>>(iter: I) -> Tally {
        iter.fold(Tally::default(), Add::add)
    }
}

impl Tally {
    pub fn mean_product(&self) -> f64 {
        (2.0 * self.agree as f64 - self.trials as f64) / self.trials as f64
    }

    /// Sample standard deviation of the products over `√N`. A single trial
    /// has no spread estimate and reports 0.
    pub fn standard_error(&self) -> f64 {
        let n = self.trials as f64;
        if self.trials < 2 {
            return 0.0;
        }
        let m = self.mean_product();
        let var = (n / (n - 1.0) * (1.0 - m * m)).max(0.0);
        var.sqrt() / n.sqrt()
    }
}

fn run_range(p: EpsRhoParams, dirs: &MeasurementDirections, seed: u64, trials: Range<u64>) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(trials.start as u128 * WORDS_PER_TRIAL);
    let mut t = Tally::default();
    for _ in trials {
        let o = simulate_pair(p, dirs, &mut rng);
        t.trials += 1;
        t.agree += (o.left == o.right) as u64;
        t.left_up += (o.left == Outcome::Up) as u64;
        t.right_up += (o.right == Outcome::Up) as u64;
    }
    t
}

/// Counts of `trials` runs. Trial `k` always uses the same stretch of the
/// `seed` stream, so the result does not depend on `exec` or the pool size.
pub fn monte_carlo_tally(
    p: EpsRhoParams,
    dirs: &MeasurementDirections,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<Tally> {
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    Ok(exec::sum_chunks(exec, 0..trials, MC_CHUNK, |r| run_range(p, dirs, seed, r)))
}

/// `(estimate, standard error)` of `E(a, b)` from `trials` runs.
pub fn monte_carlo_expectation(
    p: EpsRhoParams,
    dirs: &MeasurementDirections,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    monte_carlo_expectation_with(p, dirs, trials, seed, Execution::default())
}

pub fn monte_carlo_expectation_with(
    p: EpsRhoParams,
    dirs: &MeasurementDirections,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<(f64, f64)> {
    let t = monte_carlo_tally(p, dirs, trials, seed, exec)?;
    Ok((t.mean_product(), t.standard_error()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `|ρ a·b| < ε` for the optimal directions.
    Linear,
    /// `ε/ρ ≤ √2/2`: every outcome on the right is determined.
    Saturated,
    /// `ρ = 0` or `ε = 0`.
    Degenerate,
    /// Within [`BOUNDARY_TOL`] of `ε = √2ρ`.
    Boundary,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Linear => "linear",
            Regime::Saturated => "saturated",
            Regime::Degenerate => "degenerate",
            Regime::Boundary => "boundary",
        }
    }

    pub fn classify(p: EpsRhoParams) -> Regime {
        if p.rho == 0.0 || p.eps == 0.0 {
            Regime::Degenerate
        } else if (p.eps - SQRT_2 * p.rho).abs() <= BOUNDARY_TOL {
            Regime::Boundary
        } else if p.eps / p.rho <= FRAC_1_SQRT_2 {
            Regime::Saturated
        } else {
            Regime::Linear
        }
    }
}

/// `a·b` of the four coincidence experiments at the optimal directions
/// (0°, 90°, 45°, 135°), in the order `(a,b), (a,b'), (a',b), (a',b')`.
pub const CHSH_COSINES: [f64; 4] = [FRAC_1_SQRT_2, -FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McCell {
    pub chsh: f64,
    pub stderr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub epsilon: f64,
    pub e_ab: f64,
    pub e_ab2: f64,
    pub e_a2b: f64,
    pub e_a2b2: f64,
    pub chsh: f64,
    pub violates: bool,
    pub regime: Regime,
    pub mc: Option<McCell>,
}

/// `k / (steps - 1)` for `k = 0..steps`.
pub fn uniform_grid(steps: usize) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::Argument(format!("a grid needs at least 2 steps, got {steps}")));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps).map(|k| k as f64 / last).collect())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of Monte Carlo stream `slot` in grid cell `cell`.
pub fn cell_seed(seed: u64, cell: u64, slot: u64) -> u64 {
    splitmix64(seed ^ splitmix64(cell.wrapping_mul(4).wrapping_add(slot)))
}

fn sweep_cell(rho: f64, eps: f64, index: u64, mc: Option<McSettings>, inner: Execution) -> Result<SweepRow> {
    let p = EpsRhoParams::new(rho, eps)?;
    let e = CHSH_COSINES.map(|c| closed_form_expectation(p, c));
    let chsh = chsh_closed_form(p);
    let mc = match mc {
        None => None,
        Some(s) => {
            let mut est = [0.0; 4];
            let mut var = 0.0;
            for (slot, &c) in CHSH_COSINES.iter().enumerate() {
                let dirs = MeasurementDirections::from_cos(c)?;
                let (m, se) =
                    monte_carlo_expectation_with(p, &dirs, s.trials, cell_seed(s.seed, index, slot as u64), inner)?;
                est[slot] = m;
                var += se * se;
            }
            Some(McCell { chsh: (est[0] - est[1]).abs() + (est[2] + est[3]).abs(), stderr: var.sqrt() })
        }
    };
    Ok(SweepRow {
        rho,
        epsilon: eps,
        e_ab: e[0],
        e_ab2: e[1],
        e_a2b: e[2],
        e_a2b2: e[3],
        chsh,
        violates: chsh > 2.0 + VIOLATION_TOL,
        regime: Regime::classify(p),
        mc,
    })
}

/// Closed-form (and optionally simulated) CHSH values over `ρ × ε`, `ρ`
/// outer.
pub fn sweep(rho_grid: &[f64], eps_grid: &[f64], mc: Option<McSettings>, exec: Execution) -> Result<Vec<SweepRow>> {
    if rho_grid.is_empty() || eps_grid.is_empty() {
        return Err(Error::Argument("sweep grids must be nonempty".into()));
    }
    if let Some(s) = mc {
        if s.trials == 0 {
            return Err(Error::Argument("trials must be at least 1".into()));
        }
    }
    let cells: Vec<(f64, f64)> = rho_grid.iter().flat_map(|&r| eps_grid.iter().map(move |&e| (r, e))).collect();
    for &(r, e) in &cells {
        EpsRhoParams::new(r, e)?;
    }
    let indexed: Vec<(u64, (f64, f64))> = (0u64..).zip(cells).collect();
    // Cells are the unit of parallel work; each cell's trials run in order.
    exec::map_slice(exec, &indexed, |&(k, (r, e))| sweep_cell(r, e, k, mc, Execution::Sequential))
        .into_iter()
        .collect()
}

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellpoly::epsrho::{
    closed_form_expectation, monte_carlo_expectation_with, sweep, uniform_grid, EpsRhoParams, McSettings,
    MeasurementDirections,
};
use bellpoly::models::{builtin_scenario, distinguish_events, singlet_scenario, SingletConfig};
use bellpoly::pitowsky::{
    membership_in, product_representation, verify_representation, MembershipOptions, VertexSet,
};
use bellpoly::simplex::Arithmetic;
use bellpoly::{chsh_statistic, ChCombination, Error, Execution, Prob, Scenario};
use bellpoly_cli::file::{read_scenario, scenario_json};
use bellpoly_cli::{csv, CliError, EXIT_OK, EXIT_OUTSIDE};
use clap::{Args, Parser, Subcommand};

/// Listings of certificates and atoms are cut off after this many lines.
const LISTING_LIMIT: usize = 32;

#[derive(Parser)]
#[command(name = "bellpoly", version, about = "Bell inequalities, correlation polytopes and the rho-epsilon model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Scenario file (JSON).
    path: Option<PathBuf>,
    /// Builtin scenario: singlet, vessels or concept.
    #[arg(long, value_name = "NAME", conflicts_with = "path")]
    builtin: Option<String>,
    /// Singlet directions a1,a2,a3,a4 in degrees (implies --builtin singlet).
    #[arg(long, value_name = "A1,A2,A3,A4", value_parser = parse_angles, allow_hyphen_values = true)]
    angles: Option<[f64; 4]>,
}

#[derive(Subcommand)]
enum Command {
    /// CHSH value, Clauser-Horne combinations and the correlation vector.
    Evaluate {
        #[command(flatten)]
        source: Source,
    },
    /// Decide whether the correlation vector lies in its correlation polytope.
    Membership {
        #[command(flatten)]
        source: Source,
        /// Rational arithmetic (default up to n = 10).
        #[arg(long, conflicts_with = "float")]
        exact: bool,
        /// Floating-point arithmetic.
        #[arg(long)]
        float: bool,
        /// Refuse vectors with more events than this (at most 20).
        #[arg(long, default_value_t = bellpoly::pitowsky::DEFAULT_MAX_EVENTS)]
        max_n: usize,
    },
    /// Split outcomes per pairing into the eight-event vector.
    Distinguish {
        #[command(flatten)]
        source: Source,
        /// Probability of each pairing seen from one side.
        #[arg(long, default_value = "1/2")]
        weight: String,
        /// Output scenario file; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Product-space representation for index-disjoint pairs.
    Represent {
        #[command(flatten)]
        source: Source,
    },
    /// CHSH over a rho x epsilon grid, as CSV.
    Sweep {
        #[arg(long, default_value_t = 21)]
        rho_steps: usize,
        #[arg(long, default_value_t = 21)]
        eps_steps: usize,
        /// Add Monte Carlo columns with this many trials per expectation.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run on the calling thread only.
        #[arg(long)]
        sequential: bool,
    },
    /// Monte Carlo estimate of E(a, b) against the closed form.
    Simulate {
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long, allow_hyphen_values = true)]
        angle_deg: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
    },
}

fn parse_angles(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 4]>::try_from(parts).map_err(|v| format!("expected four angles, got {}", v.len()))
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

impl Source {
    fn load(&self) -> Result<Scenario, CliError> {
        match (&self.path, &self.builtin, self.angles) {
            (Some(_), _, Some(_)) => Err(CliError::Input("--angles only applies to the singlet builtin".into())),
            (Some(p), _, None) => read_scenario(p),
            (None, Some(name), Some(_)) if name != "singlet" => {
                Err(CliError::Input(format!("--angles does not apply to builtin {name:?}")))
            }
            (None, _, Some(a)) => Ok(singlet_scenario(SingletConfig::from_degrees(a)?)?),
            (None, Some(name), None) => Ok(builtin_scenario(name)?),
            (None, None, None) => Err(CliError::Input("give a scenario file or --builtin NAME".into())),
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

/// Exact fraction when it is short, decimal otherwise.
fn show(p: &Prob) -> String {
    if p.has_small_denominator(1_000_000) {
        p.to_string()
    } else {
        p.to_f64().to_string()
    }
}

fn vector_listing(s: &Scenario) -> String {
    let mut out = String::new();
    if let Some(v) = &s.vector {
        writeln!(out, "vector (n = {}):", v.n()).unwrap();
        let singles: Vec<String> = (1..=v.n()).map(|i| format!("p{i} = {}", show(v.single(i)))).collect();
        writeln!(out, "  {}", singles.join(", ")).unwrap();
        if v.pairs().len() > 0 {
            let joints: Vec<String> = v.joints().iter().map(|(p, x)| format!("p{}{} = {}", p.i(), p.j(), show(x))).collect();
            writeln!(out, "  {}", joints.join(", ")).unwrap();
        }
    }
    out
}

fn cmd_evaluate(source: &Source) -> Result<i32, CliError> {
    let s = source.load()?;
    let mut out = String::new();
    writeln!(out, "scenario: {} ({})", s.name, s.kind.as_str()).unwrap();
    let labels = s.experiment_labels();
    for (k, l) in labels.iter().enumerate() {
        writeln!(out, "  e{} = {l}", k + 1).unwrap();
    }
    if let Some(a) = s.angles_deg {
        writeln!(out, "angles (deg): a1 = {}, a2 = {}, a3 = {}, a4 = {}", a[0], a[1], a[2], a[3]).unwrap();
    }
    match &s.expectations {
        Some(e) => {
            let chsh = chsh_statistic(e)?;
            let verdict = if chsh > 2.0 + 1e-12 { "violated" } else { "satisfied" };
            writeln!(out, "CHSH = {chsh}  (|E13 - E14| + |E23 + E24|, local bound 2: {verdict})").unwrap();
            for (label, x) in e.labelled() {
                writeln!(out, "  E{label} = {x}").unwrap();
            }
        }
        None => writeln!(out, "CHSH: no expectation values in scenario").unwrap(),
    }
    if let Some(v) = &s.vector {
        if v.n() == 4 && v.has_pairs(&bellpoly::stats::CH_PAIRS) {
            writeln!(out, "Clauser-Horne combinations (classical range [-1, 0]):").unwrap();
            for c in ChCombination::ALL {
                let value = Prob::from_rational(c.evaluate_exact(v)?);
                let x = value.to_f64();
                let ok = (-1.0..=0.0).contains(&x);
                let shown = if value.has_small_denominator(1_000_000) && value.to_string() != x.to_string() {
                    format!("{value} ({x})")
                } else {
                    x.to_string()
                };
                writeln!(out, "  {}: {} = {shown} {}", c.name(), c.formula(), if ok { "ok" } else { "VIOLATED" })
                .unwrap();
            }
        } else {
            writeln!(out, "Clauser-Horne: needs n = 4 with pairs 13, 14, 23, 24").unwrap();
        }
    }
    out.push_str(&vector_listing(&s));
    write_output(None, &out)?;
    Ok(EXIT_OK)
}

fn cmd_membership(source: &Source, exact: bool, float: bool, max_n: usize) -> Result<i32, CliError> {
    let s = source.load()?;
    let v = s
        .vector
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("scenario {:?} has no correlation vector", s.name)))?;
    let opts = MembershipOptions {
        arithmetic: match (exact, float) {
            (true, _) => Some(Arithmetic::Exact),
            (_, true) => Some(Arithmetic::Float),
            _ => None,
        },
        max_events: max_n,
    };
    let limit = max_n.min(bellpoly::pitowsky::MAX_EVENTS);
    if v.n() > limit {
        return Err(CliError::from_core(Error::Capacity { n: v.n(), limit }));
    }
    let vs = VertexSet::for_vector(v)?;
    let r = membership_in(&vs, v, opts)?;
    let pairs: Vec<String> = v.pairs().map(|p| format!("{{{p}}}")).collect();
    let mut out = String::new();
    writeln!(
        out,
        "membership of {} in C({}, S), S = {} ({} vertices, {} arithmetic)",
        s.name,
        v.n(),
        if pairs.is_empty() { "{}".to_string() } else { pairs.join(" ") },
        vs.len(),
        match r.arithmetic {
            Arithmetic::Exact => "exact",
            Arithmetic::Float => "float",
        }
    )
    .unwrap();
    if r.inside {
        writeln!(out, "result: inside").unwrap();
        let cert = r.certificate.as_ref().expect("inside has a certificate");
        writeln!(
            out,
            "certificate: {} vertices with nonzero weight, reconstruction error {}",
            cert.weights.len(),
            cert.max_error(&vs, v)
        )
        .unwrap();
        if r.arithmetic == Arithmetic::Exact {
            let exact = if cert.reconstructs_exactly(&vs, v) { "yes" } else { "no" };
            writeln!(out, "exact reconstruction: {exact}").unwrap();
        }
        for (k, w) in cert.weights.iter().take(LISTING_LIMIT) {
            let eps: String = vs.epsilon(*k).iter().map(|b| char::from(b'0' + b)).collect();
            writeln!(out, "  eps = {eps}  weight {w}").unwrap();
        }
        if cert.weights.len() > LISTING_LIMIT {
            writeln!(out, "  ... {} more", cert.weights.len() - LISTING_LIMIT).unwrap();
        }
    } else {
        writeln!(out, "result: outside").unwrap();
        match &r.violated_facet {
            Some(f) => writeln!(out, "violated: {f}").unwrap(),
            None => writeln!(out, "violated: no printed inequality list for this shape").unwrap(),
        }
    }
    write_output(None, &out)?;
    Ok(if r.inside { EXIT_OK } else { EXIT_OUTSIDE })
}

fn cmd_distinguish(source: &Source, weight: &str, out: Option<&Path>) -> Result<i32, CliError> {
    let s = source.load()?;
    let w = Prob::parse(weight).map_err(|e| CliError::Input(format!("--weight: {e}")))?;
    let d = distinguish_events(&s, &w)?;
    let text = scenario_json(&d.into_scenario(format!("{}-distinguished", s.name)))?;
    write_output(out, &text)?;
    if let Some(p) = out {
        eprintln!("wrote {}", p.display());
    }
    Ok(EXIT_OK)
}

fn cmd_represent(source: &Source) -> Result<i32, CliError> {
    let s = source.load()?;
    let v = s
        .vector
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("scenario {:?} has no correlation vector", s.name)))?;
    let rep = match product_representation(v) {
        Ok(rep) => rep,
        Err(Error::NoRepresentation(m)) => {
            write_output(None, &format!("no product representation: {m}\n"))?;
            return Ok(EXIT_OUTSIDE);
        }
        Err(e) => return Err(e.into()),
    };
    let verified = verify_representation(&rep, v)?;
    let mut out = String::new();
    writeln!(out, "product representation of {}: {} atoms", s.name, rep.atoms().len()).unwrap();
    writeln!(out, "verified: {}", if verified { "yes" } else { "no" }).unwrap();
    for a in rep.atoms().iter().take(LISTING_LIMIT) {
        writeln!(out, "  {}  weight {}", a.label, a.weight).unwrap();
    }
    if rep.atoms().len() > LISTING_LIMIT {
        writeln!(out, "  ... {} more", rep.atoms().len() - LISTING_LIMIT).unwrap();
    }
    for (i, members) in rep.events() {
        writeln!(out, "  A{i}: {} atoms, measure {}", members.len(), rep.measure(*i).expect("declared")).unwrap();
    }
    write_output(None, &out)?;
    Ok(if verified { EXIT_OK } else { EXIT_OUTSIDE })
}

fn cmd_sweep(
    rho_steps: usize,
    eps_steps: usize,
    trials: Option<u64>,
    seed: u64,
    out: Option<&Path>,
    sequential: bool,
) -> Result<i32, CliError> {
    let rho = uniform_grid(rho_steps).map_err(|e| CliError::from_core(e).context("--rho-steps"))?;
    let eps = uniform_grid(eps_steps).map_err(|e| CliError::from_core(e).context("--eps-steps"))?;
    let mc = trials.map(|trials| McSettings { trials, seed });
    let rows = sweep(&rho, &eps, mc, execution(sequential))?;
    write_output(out, &csv::render(&rows))?;
    Ok(EXIT_OK)
}

fn cmd_simulate(rho: f64, eps: f64, angle_deg: f64, trials: u64, seed: u64, sequential: bool) -> Result<i32, CliError> {
    let p = EpsRhoParams::new(rho, eps)?;
    let dirs = MeasurementDirections::from_angle(angle_deg.to_radians())?;
    let (est, se) = monte_carlo_expectation_with(p, &dirs, trials, seed, execution(sequential))?;
    let closed = closed_form_expectation(p, dirs.cos_ab());
    let diff = est - closed;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    let mut out = String::new();
    writeln!(out, "rho = {rho}, eps = {eps}, angle = {angle_deg} deg (a.b = {})", dirs.cos_ab()).unwrap();
    writeln!(out, "trials = {trials}, seed = {seed}").unwrap();
    writeln!(out, "estimate = {est}").unwrap();
    writeln!(out, "standard error = {se}").unwrap();
    writeln!(out, "closed form = {closed}").unwrap();
    writeln!(out, "z = {z}").unwrap();
    write_output(None, &out)?;
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Evaluate { source } => cmd_evaluate(&source),
        Command::Membership { source, exact, float, max_n } => cmd_membership(&source, exact, float, max_n),
        Command::Distinguish { source, weight, out } => cmd_distinguish(&source, &weight, out.as_deref()),
        Command::Represent { source } => cmd_represent(&source),
        Command::Sweep { rho_steps, eps_steps, trials, seed, out, sequential } => {
            cmd_sweep(rho_steps, eps_steps, trials, seed, out.as_deref(), sequential)
        }
        Command::Simulate { rho, eps, angle_deg, trials, seed, sequential } => {
            cmd_simulate(rho, eps, angle_deg, trials, seed, sequential)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

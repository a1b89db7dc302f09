//! Update rules and the trajectory runner.
//!
//! * [`polyak_step`]: `x - ((f(x) - f*)/‖g‖²) g`, staying put when `g = 0`.
//! * [`surrogate_gd_step`]: gradient descent on `φ = ½(f-f*)²` with stepsize `1/‖g‖²`.
//! * [`generalized_step`]: `x - η h(x,ξ) g` with `η = min(1/‖g‖², γ/h(x,ξ))`.
//! * [`map_t`]: the deterministic map `x - (h(x)/‖g‖²) g` for `h* > 0`.
//! * [`sps_step`]: the classic stochastic Polyak step `min((f_ξ - f_ξ*)/(c‖g‖²), γ_b)`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{FunctionOracle, Oracle, StochasticProblem};
use crate::surrogates::{make_surrogate, StochasticSurrogate, SurrogateOracle, SurrogateSpec, Transform, TransformSpec};

/// Iterates with a norm above this abort the run.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub t: usize,
    /// The iterate `x_t` the step was taken from.
    pub x: Vec<f64>,
    /// Value of the sampled component at `x_t`.
    pub f_val: f64,
    /// Subgradient used (of `h` for surrogate steppers, of `f` otherwise).
    pub g: Vec<f64>,
    /// Stepsize applied to the update direction; see [`Stepper::direction_doc`].
    pub eta: f64,
    pub h_val: f64,
    /// Whether the `γ/h` branch of the minimum was active.
    pub clipped: bool,
    /// Index of the sampled component.
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    Diverged { t: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// `x_{T+1}`.
    pub final_x: Vec<f64>,
    /// Objective value `F(x_{T+1})`.
    pub final_f: f64,
    pub seed: u64,
    pub problem_name: String,
    pub stepper_name: String,
    pub status: RunStatus,
}

impl Trajectory {
    /// Number of iterates, `T + 1` for a completed run of `T` steps.
    pub fn len(&self) -> usize {
        self.records.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iterates(&self) -> Vec<&[f64]> {
        self.records
            .iter()
            .map(|r| r.x.as_slice())
            .chain(std::iter::once(self.final_x.as_slice()))
            .collect()
    }

    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// Stepsize clip `γ` of the generalized step; `f64::INFINITY` selects the pure
/// `1/‖g‖²` branch.
fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(Error::config(format!("gamma must be positive (or inf), got {gamma}")));
    }
    Ok(())
}

/// Classic Polyak step on `f`.
pub fn polyak_step(oracle: &FunctionOracle, x: &[f64]) -> Result<Vec<f64>> {
    oracle.check_dim(x)?;
    let f_star = oracle.opt_value_or_err()?;
    let g = oracle.subgradient(x);
    let gg = linalg::norm_sq(&g);
    if gg == 0.0 {
        return Ok(x.to_vec());
    }
    Ok(linalg::step(x, (oracle.value(x) - f_star) / gg, &g))
}

/// Gradient descent on `φ = ½(f-f*)²` with stepsize `1/‖g‖²`.
///
/// The `φ`-subgradient is `(f-f*)g`; the coefficient `(f-f*)/‖g‖²` is formed
/// before scaling `g` so the result matches [`polyak_step`] bit for bit.
pub fn surrogate_gd_step(surrogate: &SurrogateOracle, x: &[f64]) -> Result<Vec<f64>> {
    surrogate.base().check_dim(x)?;
    if surrogate.spec.transform != Transform::ShiftByOpt {
        return Err(Error::config("surrogate_gd_step needs the shift-by-optimum transform"));
    }
    let g = surrogate.h_subgradient(x);
    let gg = linalg::norm_sq(&g);
    if gg == 0.0 {
        return Ok(x.to_vec());
    }
    let h = surrogate.h_value(x);
    Ok(linalg::step(x, h / gg, &g))
}

/// One step of the generalized Polyak stepsize on the sampled component's surrogate.
pub fn generalized_step(
    surrogate: &SurrogateOracle,
    x: &[f64],
    gamma: f64,
    component: usize,
) -> Result<(StepRecord, Vec<f64>)> {
    surrogate.base().check_dim(x)?;
    check_gamma(gamma)?;
    let f = surrogate.base().value(x);
    let h = surrogate.h_from_value(f);
    let g = surrogate.h_subgradient(x);
    let gg = linalg::norm_sq(&g);
    let mut record = StepRecord {
        t: 0,
        x: x.to_vec(),
        f_val: f,
        g,
        eta: 0.0,
        h_val: h,
        clipped: false,
        component,
    };
    if gg == 0.0 {
        return Ok((record, x.to_vec()));
    }
    // η·h is formed directly so γ = ∞ reproduces the Polyak coefficient h/‖g‖² exactly.
    let clipped = gamma * gg < h;
    let (eta, coef) = if clipped { (gamma / h, gamma) } else { (1.0 / gg, h / gg) };
    record.eta = eta;
    record.clipped = clipped;
    let next = linalg::step(x, coef, &record.g);
    Ok((record, next))
}

/// The deterministic map `T(x) = x - (h(x)/‖g‖²) g`, or `x` when `0 ∈ ∂h(x)`.
pub fn map_t(h: &impl Oracle, x: &[f64]) -> Vec<f64> {
    if h.is_stationary(x) {
        return x.to_vec();
    }
    let g = h.subgradient(x);
    let gg = linalg::norm_sq(&g);
    if gg == 0.0 {
        return x.to_vec();
    }
    linalg::step(x, h.value(x) / gg, &g)
}

/// Two routes to the stepsize `map_t` applies to the surrogate `½(h-h*)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaRewrite {
    /// Displacement coefficient `h/‖g‖²` divided by `h - h*`, i.e. the
    /// stepsize on the surrogate subgradient `(h-h*)g` that reproduces `T`.
    pub eta_direct: f64,
    /// `(h/(h-h*))·(1/λ)` with `λ = ‖g‖²` the local curvature constant of the surrogate.
    pub eta_rewritten: f64,
    pub lambda: f64,
}

pub fn eta_rewrite_check(h: &FunctionOracle, x: &[f64]) -> Result<EtaRewrite> {
    h.check_dim(x)?;
    let h_star = h.opt_value_or_err()?;
    let hx = h.value(x);
    let g = h.subgradient(x);
    let gg = linalg::norm_sq(&g);
    if hx <= h_star || gg == 0.0 {
        return Err(Error::Domain(format!(
            "stepsize rewrite undefined at {x:?}: h(x) - h* = {}, ‖g‖² = {gg}",
            hx - h_star
        )));
    }
    let gap = hx - h_star;
    let lambda = gg;
    Ok(EtaRewrite {
        eta_direct: (hx / gg) / gap,
        eta_rewritten: (hx / gap) * (1.0 / lambda),
        lambda,
    })
}

/// `x - min((f-f*)/(c‖g‖²), γ_b) g`. Returns the record and the next point.
pub fn sps_step(
    component: &FunctionOracle,
    x: &[f64],
    c: f64,
    gamma_b: f64,
    index: usize,
) -> Result<(StepRecord, Vec<f64>)> {
    component.check_dim(x)?;
    if !(c > 0.0) {
        return Err(Error::config(format!("SPS constant c must be positive, got {c}")));
    }
    check_gamma(gamma_b)?;
    let f_star = component.opt_value_or_err()?;
    let f = component.value(x);
    let g = component.subgradient(x);
    let gg = linalg::norm_sq(&g);
    let mut record = StepRecord {
        t: 0,
        x: x.to_vec(),
        f_val: f,
        g,
        eta: 0.0,
        h_val: f - f_star,
        clipped: false,
        component: index,
    };
    if gg == 0.0 {
        return Ok((record, x.to_vec()));
    }
    let polyak = (f - f_star) / (c * gg);
    record.clipped = gamma_b < polyak;
    record.eta = polyak.min(gamma_b);
    let next = linalg::step(x, record.eta, &record.g);
    Ok((record, next))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    Constant,
    InvSqrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stepper {
    Polyak,
    SurrogateGd,
    /// Plain subgradient descent `x - η_t g`.
    Gd { eta: f64, schedule: Schedule },
    Alg1 { gamma: f64 },
    MapT,
    Sps { c: f64, gamma_b: f64 },
}

pub const STEPPER_NAMES: &[&str] = &[
    "polyak",
    "surrogate_gd",
    "gd:eta[,schedule=inv_sqrt]",
    "alg1:gamma",
    "map_t",
    "sps:c=0.5[,gamma=inf]",
];

fn parse_num(input: &str, v: &str) -> Result<f64> {
    match v.trim() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        s => s.parse().map_err(|_| Error::parse(input, format!("`{s}` is not a number"))),
    }
}

/// `key=value` pairs after the stepper name; a bare leading value binds to `first_key`.
fn parse_kv(input: &str, args: &str, first_key: &str) -> Result<Vec<(String, String)>> {
    args.split(',')
        .filter(|s| !s.trim().is_empty())
        .enumerate()
        .map(|(i, part)| match part.split_once('=') {
            Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
            None if i == 0 => Ok((first_key.to_string(), part.trim().to_string())),
            None => Err(Error::parse(input, format!("expected key=value, got `{part}`"))),
        })
        .collect()
}

impl Stepper {
    pub fn parse(input: &str) -> Result<Self> {
        let input = input.trim();
        let (name, args) = input.split_once(':').unwrap_or((input, ""));
        let unknown_key = |k: &str| Error::parse(input, format!("unknown parameter `{k}`"));
        match name {
            "polyak" | "surrogate_gd" | "map_t" if !args.is_empty() => {
                Err(Error::parse(input, format!("`{name}` takes no parameters")))
            }
            "polyak" => Ok(Stepper::Polyak),
            "surrogate_gd" => Ok(Stepper::SurrogateGd),
            "map_t" => Ok(Stepper::MapT),
            "gd" => {
                let (mut eta, mut schedule) = (None, Schedule::Constant);
                for (k, v) in parse_kv(input, args, "eta")? {
                    match k.as_str() {
                        "eta" => eta = Some(parse_num(input, &v)?),
                        "schedule" => {
                            schedule = match v.as_str() {
                                "constant" => Schedule::Constant,
                                "inv_sqrt" => Schedule::InvSqrt,
                                _ => return Err(Error::parse(input, format!("unknown schedule `{v}`"))),
                            }
                        }
                        _ => return Err(unknown_key(&k)),
                    }
                }
                let eta = eta.ok_or_else(|| Error::parse(input, "gd needs eta"))?;
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(Error::parse(input, "eta must be positive and finite"));
                }
                Ok(Stepper::Gd { eta, schedule })
            }
            "alg1" => {
                let mut gamma = None;
                for (k, v) in parse_kv(input, args, "gamma")? {
                    match k.as_str() {
                        "gamma" => gamma = Some(parse_num(input, &v)?),
                        _ => return Err(unknown_key(&k)),
                    }
                }
                let gamma = gamma.ok_or_else(|| Error::parse(input, "alg1 needs gamma"))?;
                check_gamma(gamma).map_err(|e| Error::parse(input, e.to_string()))?;
                Ok(Stepper::Alg1 { gamma })
            }
            "sps" => {
                let (mut c, mut gamma_b) = (0.5, f64::INFINITY);
                for (k, v) in parse_kv(input, args, "c")? {
                    match k.as_str() {
                        "c" => c = parse_num(input, &v)?,
                        "gamma" => gamma_b = parse_num(input, &v)?,
                        _ => return Err(unknown_key(&k)),
                    }
                }
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::parse(input, "c must be positive and finite"));
                }
                check_gamma(gamma_b).map_err(|e| Error::parse(input, e.to_string()))?;
                Ok(Stepper::Sps { c, gamma_b })
            }
            _ => Err(Error::UnknownName {
                kind: "stepper",
                name: input.to_string(),
                available: STEPPER_NAMES.join(", "),
            }),
        }
    }

    pub fn uses_transform(&self) -> bool {
        matches!(self, Stepper::Alg1 { .. })
    }

    /// What `eta` multiplies in a [`StepRecord`] produced by this stepper.
    pub fn direction_doc(&self) -> &'static str {
        match self {
            Stepper::Polyak | Stepper::SurrogateGd | Stepper::MapT => "1/‖g‖², applied to the surrogate subgradient h·g",
            Stepper::Gd { .. } | Stepper::Sps { .. } => "applied to g",
            Stepper::Alg1 { .. } => "applied to h·g (line-6 stepsize)",
        }
    }
}

impl fmt::Display for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = |v: f64| if v.is_infinite() { "inf".to_string() } else { v.to_string() };
        match self {
            Stepper::Polyak => write!(f, "polyak"),
            Stepper::SurrogateGd => write!(f, "surrogate_gd"),
            Stepper::MapT => write!(f, "map_t"),
            Stepper::Gd { eta, schedule: Schedule::Constant } => write!(f, "gd:eta={}", num(*eta)),
            Stepper::Gd { eta, schedule: Schedule::InvSqrt } => {
                write!(f, "gd:eta={},schedule=inv_sqrt", num(*eta))
            }
            Stepper::Alg1 { gamma } => write!(f, "alg1:gamma={}", num(*gamma)),
            Stepper::Sps { c, gamma_b } => write!(f, "sps:c={},gamma={}", num(*c), num(*gamma_b)),
        }
    }
}

/// Counter-based component sampler: the draw at step `t` depends only on
/// `(seed, t)`.
#[derive(Debug, Clone)]
pub struct ComponentSampler {
    rng: ChaCha8Rng,
    cumulative: Vec<f64>,
}

impl ComponentSampler {
    pub fn new(seed: u64, weights: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        ComponentSampler { rng: ChaCha8Rng::seed_from_u64(seed), cumulative }
    }

    pub fn draw(&mut self, t: usize) -> usize {
        if self.cumulative.len() == 1 {
            return 0;
        }
        // each draw consumes two 32-bit words of the ChaCha block stream
        self.rng.set_word_pos(2 * t as u128);
        let u: f64 = self.rng.gen::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1)
    }
}

/// A fully specified run.
#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub stepper: &'a Stepper,
    pub problem: &'a StochasticProblem,
    pub transform: &'a TransformSpec,
    pub x1: &'a [f64],
    pub steps: usize,
    pub seed: u64,
}

/// Run `steps` updates from `x1`. Components are sampled i.i.d. from the
/// problem weights with a counter-based generator keyed by `(seed, t)`.
/// Non-finite iterates or `‖x‖ > 1e12` stop the run with a `Diverged` status.
pub fn run(spec: &RunSpec<'_>) -> Result<Trajectory> {
    let RunSpec { stepper, problem, transform, x1, steps, seed } = *spec;
    if steps == 0 {
        return Err(Error::config("steps must be at least 1"));
    }
    if x1.len() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: x1.len() });
    }
    let surrogates: Option<StochasticSurrogate> = match stepper {
        Stepper::Alg1 { .. } => Some(transform.build(problem)?),
        Stepper::SurrogateGd => Some(TransformSpec::ShiftByOpt.build(problem)?),
        _ => None,
    };
    if matches!(stepper, Stepper::Polyak | Stepper::Sps { .. }) {
        for c in &problem.components {
            c.opt_value_or_err()?;
        }
    }
    let mut sampler = ComponentSampler::new(seed, &problem.weights);
    let mut records = Vec::with_capacity(steps);
    let mut x = x1.to_vec();
    let mut status = RunStatus::Completed;

    for t in 1..=steps {
        let i = sampler.draw(t);
        let f = &problem.components[i];
        let (mut record, next) = match stepper {
            Stepper::Polyak => {
                let next = polyak_step(f, &x)?;
                let g = f.subgradient(&x);
                let gg = linalg::norm_sq(&g);
                let fx = f.value(&x);
                let record = StepRecord {
                    t,
                    x: x.clone(),
                    f_val: fx,
                    eta: if gg == 0.0 { 0.0 } else { 1.0 / gg },
                    g,
                    h_val: fx - f.opt_value.unwrap_or(f64::NAN),
                    clipped: false,
                    component: i,
                };
                (record, next)
            }
            Stepper::SurrogateGd => {
                let s = &surrogates.as_ref().expect("built above").components[i];
                let next = surrogate_gd_step(s, &x)?;
                let g = s.h_subgradient(&x);
                let gg = linalg::norm_sq(&g);
                let fx = f.value(&x);
                let record = StepRecord {
                    t,
                    x: x.clone(),
                    f_val: fx,
                    eta: if gg == 0.0 { 0.0 } else { 1.0 / gg },
                    g,
                    h_val: s.h_from_value(fx),
                    clipped: false,
                    component: i,
                };
                (record, next)
            }
            Stepper::Alg1 { gamma } => {
                let s = &surrogates.as_ref().expect("built above").components[i];
                generalized_step(s, &x, *gamma, i)?
            }
            Stepper::MapT => {
                let next = map_t(f, &x);
                let g = f.subgradient(&x);
                let gg = linalg::norm_sq(&g);
                let fx = f.value(&x);
                let record = StepRecord {
                    t,
                    x: x.clone(),
                    f_val: fx,
                    eta: if next == x || gg == 0.0 { 0.0 } else { 1.0 / gg },
                    g,
                    h_val: fx,
                    clipped: false,
                    component: i,
                };
                (record, next)
            }
            Stepper::Sps { c, gamma_b } => sps_step(f, &x, *c, *gamma_b, i)?,
            Stepper::Gd { eta, schedule } => {
                let eta_t = match schedule {
                    Schedule::Constant => *eta,
                    Schedule::InvSqrt => eta / (t as f64).sqrt(),
                };
                let g = f.subgradient(&x);
                let fx = f.value(&x);
                let next = linalg::step(&x, eta_t, &g);
                let record = StepRecord {
                    t,
                    x: x.clone(),
                    f_val: fx,
                    g,
                    eta: eta_t,
                    h_val: f.opt_value.map_or(f64::NAN, |fs| fx - fs),
                    clipped: false,
                    component: i,
                };
                (record, next)
            }
        };
        record.t = t;
        records.push(record);
        if !linalg::all_finite(&next) {
            status = RunStatus::Diverged { t, reason: "non-finite iterate".into() };
            x = next;
            break;
        }
        let n = linalg::norm(&next);
        if n > DIVERGENCE_NORM {
            status = RunStatus::Diverged { t, reason: format!("‖x‖ = {n:e} exceeds {DIVERGENCE_NORM:e}") };
            x = next;
            break;
        }
        x = next;
    }

    Ok(Trajectory {
        final_f: problem.objective(&x),
        final_x: x,
        records,
        seed,
        problem_name: problem.name.clone(),
        stepper_name: stepper.to_string(),
        status,
    })
}

/// Convenience: deterministic Polyak trajectory on a single function.
pub fn run_polyak(f: &FunctionOracle, x1: &[f64], steps: usize) -> Result<Trajectory> {
    let problem = StochasticProblem::single(f.clone());
    run(&RunSpec {
        stepper: &Stepper::Polyak,
        problem: &problem,
        transform: &TransformSpec::ShiftByOpt,
        x1,
        steps,
        seed: 0,
    })
}

/// Convenience: surrogate for a single function with the given transform.
pub fn surrogate_of(f: &FunctionOracle, transform: Transform) -> Result<SurrogateOracle> {
    make_surrogate(SurrogateSpec { base: f.clone(), transform })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{abs1d, deterministic_catalog, quad, shifted_quad, sps_fail, FunctionKind, ScalarPiece};

    #[test]
    fn polyak_step_examples() {
        assert_eq!(polyak_step(&quad(1), &[2.0]).unwrap(), vec![1.0]);
        assert_eq!(polyak_step(&abs1d(), &[5.0]).unwrap(), vec![0.0]);
        assert_eq!(polyak_step(&quad(1), &[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn surrogate_gd_step_examples() {
        let s = surrogate_of(&quad(1), Transform::ShiftByOpt).unwrap();
        assert_eq!(s.psi_subgradient(&[2.0]), vec![4.0]);
        assert_eq!(surrogate_gd_step(&s, &[2.0]).unwrap(), vec![1.0]);
        assert_eq!(surrogate_gd_step(&s, &[0.0]).unwrap(), vec![0.0]);
        let hinge = surrogate_of(&quad(1), Transform::Hinge { level: 0.0 }).unwrap();
        assert!(surrogate_gd_step(&hinge, &[2.0]).is_err());
    }

    #[test]
    fn surrogate_gd_matches_polyak_on_catalog() {
        let starts: Vec<Vec<f64>> = vec![vec![7.3], vec![-4.1, 2.5, 0.3], vec![1.0, -2.0, 3.0, 0.5]];
        for f in deterministic_catalog() {
            let s = surrogate_of(&f, Transform::ShiftByOpt).unwrap();
            let mut a = starts.iter().find(|x| x.len() == f.dim).unwrap().clone();
            let mut b = a.clone();
            for _ in 0..200 {
                a = polyak_step(&f, &a).unwrap();
                b = surrogate_gd_step(&s, &b).unwrap();
                assert_eq!(a, b, "{}", f.name);
            }
        }
    }

    #[test]
    fn generalized_step_examples() {
        let s = surrogate_of(&shifted_quad(0.0), Transform::ShiftByOpt).unwrap();
        let (rec, next) = generalized_step(&s, &[2.0], f64::INFINITY, 0).unwrap();
        assert_eq!(next, vec![1.0]);
        assert_eq!(rec.eta, 0.25);
        assert!(!rec.clipped);

        // h = x²/2 + 0.5 used directly (lower bound 0 keeps the offset)
        let s = surrogate_of(&shifted_quad(0.5), Transform::LowerBound { q: 0.0 }).unwrap();
        let (rec, next) = generalized_step(&s, &[1.0], 0.5, 0).unwrap();
        assert!(rec.clipped);
        assert_eq!(rec.eta, 0.5);
        assert_eq!(next, vec![0.5]);
        assert!((rec.eta * rec.h_val - 0.5).abs() < 1e-12);

        let (rec, next) = generalized_step(&s, &[0.0], 0.5, 0).unwrap();
        assert_eq!(next, vec![0.0]);
        assert_eq!(rec.eta, 0.0);

        assert!(generalized_step(&s, &[1.0], 0.0, 0).is_err());
        assert!(generalized_step(&s, &[1.0, 2.0], 1.0, 0).is_err());
    }

    #[test]
    fn zero_h_with_nonzero_g_does_not_move() {
        // Lower bound equal to f(x): h = 0, g = 1
        let s = surrogate_of(&abs1d(), Transform::LowerBound { q: 2.0 }).unwrap();
        let (rec, next) = generalized_step(&s, &[2.0], f64::INFINITY, 0).unwrap();
        assert_eq!(rec.h_val, 0.0);
        assert_eq!(rec.eta, 1.0);
        assert_eq!(next, vec![2.0]);
    }

    #[test]
    fn clipping_flag_matches_definition() {
        let s = surrogate_of(&shifted_quad(0.5), Transform::LowerBound { q: 0.0 }).unwrap();
        for gamma in [0.01, 0.1, 0.5, 1.0, 10.0] {
            for i in -50..=50 {
                let x = 0.2 * i as f64;
                let (rec, _) = generalized_step(&s, &[x], gamma, 0).unwrap();
                let gg = linalg::norm_sq(&rec.g);
                if gg > 0.0 {
                    assert_eq!(rec.clipped, gamma * gg < rec.h_val);
                }
                if rec.clipped {
                    assert!((rec.eta * rec.h_val - gamma).abs() <= 1e-12);
                }
                assert!(rec.eta >= 0.0);
            }
        }
    }

    #[test]
    fn alg1_infinite_gamma_reproduces_polyak() {
        for f in deterministic_catalog() {
            let x1 = vec![3.7; f.dim];
            let a = run_polyak(&f, &x1, 100).unwrap();
            let problem = StochasticProblem::single(f.clone());
            let b = run(&RunSpec {
                stepper: &Stepper::Alg1 { gamma: f64::INFINITY },
                problem: &problem,
                transform: &TransformSpec::ShiftByOpt,
                x1: &x1,
                steps: 100,
                seed: 0,
            })
            .unwrap();
            assert_eq!(a.iterates(), b.iterates(), "{}", f.name);
        }
    }

    #[test]
    fn map_t_examples() {
        let h = FunctionOracle::scalar("x2p1", ScalarPiece::quadratic(1.0, 0.0, 1.0));
        let th = std::f64::consts::PI / 7.0;
        let x = 1.0 / th.tan();
        let next = map_t(&h, &[x])[0];
        assert!((next - 1.0 / (2.0 * th).tan()).abs() < 1e-14);
        assert!((next - (x * x - 1.0) / (2.0 * x)).abs() < 1e-15);
        assert_eq!(map_t(&shifted_quad(0.5), &[0.0]), vec![0.0]);
        assert_eq!(map_t(&shifted_quad(0.5), &[1.0]), vec![0.0]);
    }

    #[test]
    fn eta_rewrite_routes_agree() {
        let h = FunctionOracle::scalar("x2p1", ScalarPiece::quadratic(1.0, 0.0, 1.0)).with_optimum(vec![0.0], 1.0);
        let r = eta_rewrite_check(&h, &[2.0]).unwrap();
        // T moves by (5/16)·g; on the surrogate subgradient (h-h*)g = 16 that is 5/64
        assert_eq!(r.lambda, 16.0);
        assert!((r.eta_direct - 5.0 / 64.0).abs() < 1e-15);
        assert!((r.eta_direct - r.eta_rewritten).abs() < 1e-12);

        let r = eta_rewrite_check(&quad(1), &[3.0]).unwrap();
        assert!((r.eta_direct - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(r.eta_direct, r.eta_rewritten);

        let r = eta_rewrite_check(&shifted_quad(1.0), &[1.0]).unwrap();
        assert!((r.eta_direct - 3.0).abs() < 1e-12 && (r.eta_rewritten - 3.0).abs() < 1e-12);

        assert!(matches!(eta_rewrite_check(&shifted_quad(1.0), &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn run_examples() {
        let t = run_polyak(&quad(1), &[8.0], 3).unwrap();
        let xs: Vec<f64> = t.iterates().iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![8.0, 4.0, 2.0, 1.0]);
        assert_eq!(run_polyak(&quad(1), &[8.0], 1).unwrap().len(), 2);
        assert!(run_polyak(&quad(1), &[8.0], 0).is_err());
    }

    #[test]
    fn sps_half_on_sps_fail_walks_between_plus_minus_one() {
        let p = sps_fail();
        let t = run(&RunSpec {
            stepper: &Stepper::Sps { c: 0.5, gamma_b: f64::INFINITY },
            problem: &p,
            transform: &TransformSpec::ShiftByOpt,
            x1: &[1.0],
            steps: 500,
            seed: 42,
        })
        .unwrap();
        let mut seen = [false, false];
        for x in t.iterates() {
            assert!(x[0] == 1.0 || x[0] == -1.0, "{x:?}");
            seen[(x[0] > 0.0) as usize] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn runs_are_reproducible_per_seed() {
        let p = sps_fail();
        let spec = |seed| RunSpec {
            stepper: &Stepper::Alg1 { gamma: 0.1 },
            problem: &p,
            transform: &TransformSpec::ShiftByOpt,
            x1: &[2.0],
            steps: 300,
            seed,
        };
        let stepper = Stepper::Alg1 { gamma: 0.1 };
        let _ = stepper;
        assert_eq!(run(&spec(7)).unwrap(), run(&spec(7)).unwrap());
        assert_ne!(run(&spec(7)).unwrap(), run(&spec(8)).unwrap());
    }

    #[test]
    fn sampler_frequencies_follow_weights() {
        let mut s = ComponentSampler::new(5, &[0.25, 0.75]);
        let n = 20_000;
        let ones = (1..=n).filter(|&t| s.draw(t) == 1).count() as f64 / n as f64;
        assert!((ones - 0.75).abs() < 0.02, "{ones}");
        // counter-based: the draw at t does not depend on earlier draws
        let mut fresh = ComponentSampler::new(5, &[0.25, 0.75]);
        assert_eq!(fresh.draw(777), s.draw(777));
    }

    #[test]
    fn divergence_is_reported() {
        let f = FunctionOracle::new("q", 1, FunctionKind::HalfSquaredNorm).with_optimum(vec![0.0], 0.0);
        let p = StochasticProblem::single(f);
        let t = run(&RunSpec {
            stepper: &Stepper::Gd { eta: 3.0, schedule: Schedule::Constant },
            problem: &p,
            transform: &TransformSpec::ShiftByOpt,
            x1: &[1.0],
            steps: 1000,
            seed: 0,
        })
        .unwrap();
        assert!(matches!(t.status, RunStatus::Diverged { .. }));
        assert!(t.records.len() < 1000);
    }

    #[test]
    fn stepper_grammar() {
        assert_eq!(Stepper::parse("polyak").unwrap(), Stepper::Polyak);
        assert_eq!(Stepper::parse("alg1:gamma=inf").unwrap(), Stepper::Alg1 { gamma: f64::INFINITY });
        assert_eq!(Stepper::parse("alg1:0.1").unwrap(), Stepper::Alg1 { gamma: 0.1 });
        assert_eq!(
            Stepper::parse("gd:0.1,schedule=inv_sqrt").unwrap(),
            Stepper::Gd { eta: 0.1, schedule: Schedule::InvSqrt }
        );
        assert_eq!(Stepper::parse("sps").unwrap(), Stepper::Sps { c: 0.5, gamma_b: f64::INFINITY });
        assert!(Stepper::parse("alg1:gamma=0").is_err());
        assert!(Stepper::parse("adam").is_err());
        assert!(Stepper::parse("polyak:1").is_err());
        for s in ["polyak", "gd:eta=0.5", "alg1:gamma=inf", "map_t", "sps:c=0.5,gamma=2"] {
            let p = Stepper::parse(s).unwrap();
            assert_eq!(Stepper::parse(&p.to_string()).unwrap(), p);
        }
    }
}

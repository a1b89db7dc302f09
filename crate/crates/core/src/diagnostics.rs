//! Grid certificates for the function-class inequalities, per-step bound
//! ledgers, and rate audits on trajectories.
//!
//! Every certificate evaluates a pointwise margin (positive means the
//! inequality holds with room to spare) on a deterministic sample set and
//! reports the most violated point. At kinks the margin is taken over every
//! extreme point of the subdifferential.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{FunctionOracle, Oracle, PropertyConstants, StochasticProblem};
use crate::steppers::{Stepper, Trajectory};
use crate::surrogates::{StochasticSurrogate, SurrogateOracle};

/// Worst-margin threshold for certificates.
pub const TOL: f64 = 1e-9;
/// Per-row slack threshold for bound ledgers.
pub const LEDGER_TOL: f64 = 1e-10;

/// Sample set for certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grid {
    /// `lo, lo + step, …, hi` on the real line; points within `1e-9` of a kink
    /// are replaced by the kink itself.
    Line { lo: f64, hi: f64, step: f64 },
    /// Halton points in the ball of the given radius around the minimizer.
    Ball { radius: f64, count: usize },
}

const KINK_EXCLUSION: f64 = 1e-9;

impl Grid {
    pub fn standard(dim: usize) -> Grid {
        if dim == 1 {
            Grid::Line { lo: -10.0, hi: 10.0, step: 1e-2 }
        } else {
            Grid::Ball { radius: 10.0, count: 10_000 }
        }
    }

    /// `line:lo:hi:step`, `ball:radius:count` or `standard`.
    pub fn parse(input: &str) -> Result<Option<Grid>> {
        let parts: Vec<&str> = input.trim().split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::parse(input, format!("`{s}` is not a number")))
        };
        let grid = match parts.as_slice() {
            ["standard"] => return Ok(None),
            ["line", lo, hi, step] => Grid::Line { lo: num(lo)?, hi: num(hi)?, step: num(step)? },
            ["ball", r, n] => Grid::Ball {
                radius: num(r)?,
                count: n.trim().parse().map_err(|_| Error::parse(input, "count must be an integer"))?,
            },
            _ => return Err(Error::parse(input, "expected line:lo:hi:step, ball:radius:count or standard")),
        };
        grid.validate()?;
        Ok(Some(grid))
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Grid::Line { lo, hi, step } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi && step > 0.0) {
                    return Err(Error::config(format!("invalid line grid [{lo}, {hi}] step {step}")));
                }
                if (hi - lo) / step > 1e8 {
                    return Err(Error::config("line grid has more than 1e8 points"));
                }
            }
            Grid::Ball { radius, count } => {
                if !(radius > 0.0 && radius.is_finite()) || count == 0 {
                    return Err(Error::config(format!("invalid ball grid radius {radius}, count {count}")));
                }
            }
        }
        Ok(())
    }

    /// Materialize the sample points for a `dim`-dimensional function
    /// centered at `center` with the given one-dimensional kinks.
    pub fn points(&self, dim: usize, center: &[f64], kinks: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        match *self {
            Grid::Line { lo, hi, step } => {
                if dim != 1 {
                    return Err(Error::config(format!("line grid used for a {dim}-dimensional function")));
                }
                let n = ((hi - lo) / step).round() as usize;
                let mut pts: Vec<f64> = (0..=n)
                    .map(|i| lo + i as f64 * step)
                    .filter(|x| kinks.iter().all(|k| (x - k).abs() > KINK_EXCLUSION))
                    .collect();
                pts.extend(kinks.iter().copied().filter(|k| (lo..=hi).contains(k)));
                pts.sort_by(f64::total_cmp);
                Ok(pts.into_iter().map(|x| vec![x]).collect())
            }
            Grid::Ball { radius, count } => {
                if center.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: center.len() });
                }
                let primes = first_primes(dim);
                let mut pts = vec![center.to_vec()];
                let mut i = 1u64;
                while pts.len() < count {
                    let offset: Vec<f64> =
                        primes.iter().map(|&p| radius * (2.0 * radical_inverse(i, p) - 1.0)).collect();
                    i += 1;
                    if linalg::norm(&offset) <= radius {
                        pts.push(center.iter().zip(&offset).map(|(c, o)| c + o).collect());
                    }
                }
                Ok(pts)
            }
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Line { lo, hi, step } => write!(f, "line:{lo}:{hi}:{step}"),
            Grid::Ball { radius, count } => write!(f, "ball:{radius}:{count}"),
        }
    }
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut c = 2u64;
    while primes.len() < n {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| c % p != 0) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// A function together with the minimizer and minimum the inequalities refer to.
pub struct Target<'a> {
    pub oracle: &'a dyn Oracle,
    pub x_star: Vec<f64>,
    pub f_star: f64,
}

impl<'a> Target<'a> {
    pub fn new(oracle: &'a dyn Oracle, x_star: Vec<f64>, f_star: f64) -> Result<Self> {
        if x_star.len() != oracle.dim() {
            return Err(Error::DimensionMismatch { expected: oracle.dim(), got: x_star.len() });
        }
        Ok(Target { oracle, x_star, f_star })
    }

    pub fn from_function(f: &'a FunctionOracle) -> Result<Self> {
        let x_star = f.opt_point_or_err()?.to_vec();
        let f_star = f.opt_value_or_err()?;
        Target::new(f, x_star, f_star)
    }

    fn points(&self, grid: &Grid) -> Result<Vec<Vec<f64>>> {
        grid.points(self.oracle.dim(), &self.x_star, &self.oracle.kinks())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Property {
    /// `lambda: None` stands for a pointwise rule.
    Lsuc { lambda: Option<f64> },
    ApproxLsuc,
    SelfBounded { l: f64 },
    Lipschitz { g: f64 },
    Sharp { s: f64 },
    QuadGrowth { mu: f64 },
    QgPlus { l: f64 },
    Holder { l_nu: f64, nu: f64 },
    Custom { name: String },
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Lsuc { lambda: Some(l) } => write!(f, "LSUC(λ={l})"),
            Property::Lsuc { lambda: None } => write!(f, "LSUC(λ pointwise)"),
            Property::ApproxLsuc => write!(f, "approximate LSUC"),
            Property::SelfBounded { l } => write!(f, "self-bounded(L={l})"),
            Property::Lipschitz { g } => write!(f, "Lipschitz(G={g})"),
            Property::Sharp { s } => write!(f, "sharp(s={s})"),
            Property::QuadGrowth { mu } => write!(f, "quadratic growth(μ={mu})"),
            Property::QgPlus { l } => write!(f, "QG+(L={l})"),
            Property::Holder { l_nu, nu } => write!(f, "Hölder self-bounded(L_ν={l_nu}, ν={nu})"),
            Property::Custom { name } => write!(f, "{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointMargin {
    pub x: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub property: Property,
    pub sample_count: usize,
    /// Most violated slack; positive means the inequality holds everywhere.
    pub worst_margin: f64,
    pub witness: Vec<f64>,
    pub holds: bool,
    #[serde(skip)]
    pub pointwise: Vec<PointMargin>,
}

/// Evaluate `margin` at every point and reduce to the worst one. NaN margins
/// count as violations.
pub fn certify<F>(property: Property, points: Vec<Vec<f64>>, margin: F) -> Certificate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let pointwise: Vec<PointMargin> = points
        .into_par_iter()
        .map(|x| {
            let m = margin(&x);
            PointMargin { margin: if m.is_nan() { f64::NEG_INFINITY } else { m }, x }
        })
        .collect();
    let (mut worst, mut witness) = (f64::INFINITY, Vec::new());
    for p in &pointwise {
        if p.margin < worst {
            worst = p.margin;
            witness = p.x.clone();
        }
    }
    Certificate {
        property,
        sample_count: pointwise.len(),
        worst_margin: worst,
        witness,
        holds: worst >= -TOL,
        pointwise,
    }
}

fn worst_over_vertices(t: &Target<'_>, y: &[f64], m: impl Fn(&[f64]) -> f64) -> f64 {
    t.oracle.subgradient_vertices(y).iter().map(|g| m(g)).fold(f64::INFINITY, f64::min)
}

fn lsuc_margin(t: &Target<'_>, y: &[f64], g: &[f64], lambda: f64) -> f64 {
    let gg = linalg::norm_sq(g);
    let curvature = if gg == 0.0 { 0.0 } else { gg / (2.0 * lambda) };
    t.f_star - t.oracle.value(y) - linalg::dot(g, &linalg::sub(&t.x_star, y)) - curvature
}

/// LSUC with a constant `λ`.
pub fn check_lsuc(t: &Target<'_>, lambda: f64, grid: &Grid) -> Result<Certificate> {
    positive("lambda", lambda)?;
    check_lsuc_pointwise(t, Property::Lsuc { lambda: Some(lambda) }, |_, _| lambda, grid)
}

/// LSUC with `λ_y` given by `rule(y, g)` for each subgradient `g` at `y`.
pub fn check_lsuc_pointwise<R>(t: &Target<'_>, property: Property, rule: R, grid: &Grid) -> Result<Certificate>
where
    R: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let pts = t.points(grid)?;
    Ok(certify(property, pts, |y| worst_over_vertices(t, y, |g| lsuc_margin(t, y, g, rule(y, g)))))
}

/// The smallest `λ` for which LSUC holds at `y`, `None` if no `λ` works.
pub fn required_lsuc_lambda(t: &Target<'_>, y: &[f64]) -> Option<f64> {
    let mut need: f64 = 0.0;
    for g in t.oracle.subgradient_vertices(y) {
        let gg = linalg::norm_sq(&g);
        if gg == 0.0 {
            continue;
        }
        let room = t.f_star - t.oracle.value(y) - linalg::dot(&g, &linalg::sub(&t.x_star, y));
        if room <= 0.0 {
            return None;
        }
        need = need.max(gg / (2.0 * room));
    }
    Some(need)
}

/// LSUC of `φ = ½(f-f*)²` with `λ_y = ‖g_y‖²`, `g_y` a subgradient of `f`.
pub fn check_surrogate_lsuc(s: &SurrogateOracle, grid: &Grid) -> Result<Certificate> {
    let x_star = s.psi_minimizer()?;
    let psi = s.psi_oracle();
    let f_star = s.psi_value(&x_star);
    let t = Target::new(&psi, x_star, f_star)?;
    // the ψ-subgradient is h·g, so ‖g‖² = ‖h·g‖²/h²
    let rule = |y: &[f64], g_psi: &[f64]| {
        let h = s.h_value(y);
        if h == 0.0 {
            1.0
        } else {
            linalg::norm_sq(g_psi) / (h * h)
        }
    };
    check_lsuc_pointwise(&t, Property::Lsuc { lambda: None }, rule, grid)
}

/// Approximate LSUC of `ψ = ½h²` with `λ = ‖g‖²` (`g ∈ ∂h`) and
/// `ε = 2√(ψ(y)ψ(x*)) - ψ(x*)`, `x*` a minimizer of `ψ`.
pub fn check_approx_lsuc(s: &SurrogateOracle, grid: &Grid) -> Result<Certificate> {
    let x_star = s.psi_minimizer()?;
    let psi_star = s.psi_value(&x_star);
    let pts = grid.points(s.dim(), &x_star, &s.base().kinks())?;
    Ok(certify(Property::ApproxLsuc, pts, |y| {
        let h = s.h_value(y);
        let psi_y = 0.5 * h * h;
        let eps = 2.0 * (psi_y * psi_star).sqrt() - psi_star;
        let delta = linalg::sub(&x_star, y);
        s.h_subgradient_vertices(y)
            .iter()
            .map(|g| {
                let g_psi = linalg::scale(g, h);
                let curvature = if linalg::is_zero(&g_psi) { 0.0 } else { 0.5 * h * h };
                psi_star - psi_y - linalg::dot(&g_psi, &delta) - curvature + eps
            })
            .fold(f64::INFINITY, f64::min)
    }))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || v.is_nan() {
        return Err(Error::config(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `‖g‖² ≤ 2L(f(x) - f*)`.
pub fn check_self_bounded(t: &Target<'_>, l: f64, grid: &Grid) -> Result<Certificate> {
    positive("L", l)?;
    let pts = t.points(grid)?;
    Ok(certify(Property::SelfBounded { l }, pts, |x| {
        let gap = t.oracle.value(x) - t.f_star;
        worst_over_vertices(t, x, |g| 2.0 * l * gap - linalg::norm_sq(g))
    }))
}

/// `‖g‖ ≤ G` for every subgradient.
pub fn check_lipschitz(t: &Target<'_>, g_const: f64, grid: &Grid) -> Result<Certificate> {
    positive("G", g_const)?;
    let pts = t.points(grid)?;
    Ok(certify(Property::Lipschitz { g: g_const }, pts, |x| {
        worst_over_vertices(t, x, |g| g_const - linalg::norm(g))
    }))
}

/// `f(x) - f* ≥ s‖x - x*‖`.
pub fn check_sharp(t: &Target<'_>, s: f64, grid: &Grid) -> Result<Certificate> {
    positive("s", s)?;
    let pts = t.points(grid)?;
    Ok(certify(Property::Sharp { s }, pts, |x| {
        t.oracle.value(x) - t.f_star - s * linalg::dist(x, &t.x_star)
    }))
}

/// `f(x) - f* ≥ (μ/2)‖x - x*‖²`.
pub fn check_qg(t: &Target<'_>, mu: f64, grid: &Grid) -> Result<Certificate> {
    positive("mu", mu)?;
    let pts = t.points(grid)?;
    Ok(certify(Property::QuadGrowth { mu }, pts, |x| {
        t.oracle.value(x) - t.f_star - 0.5 * mu * linalg::dist_sq(x, &t.x_star)
    }))
}

/// `f(x) - f* ≤ (L/2)‖x - x*‖²` (unique minimizer).
pub fn check_qg_plus(t: &Target<'_>, l: f64, grid: &Grid) -> Result<Certificate> {
    positive("L", l)?;
    let pts = t.points(grid)?;
    Ok(certify(Property::QgPlus { l }, pts, |x| {
        0.5 * l * linalg::dist_sq(x, &t.x_star) - (t.oracle.value(x) - t.f_star)
    }))
}

/// `K_ν = (1+1/ν)^{2ν/(1+ν)} L_ν^{2/(1+ν)}`, with the `ν → 0` limit `L_0²`.
pub fn holder_k(l_nu: f64, nu: f64) -> f64 {
    let lead = if nu == 0.0 { 1.0 } else { (1.0 + 1.0 / nu).powf(2.0 * nu / (1.0 + nu)) };
    lead * l_nu.powf(2.0 / (1.0 + nu))
}

/// `‖g‖² ≤ K_ν (f(x) - f*)^{2ν/(1+ν)}`.
pub fn check_holder(t: &Target<'_>, l_nu: f64, nu: f64, grid: &Grid) -> Result<Certificate> {
    positive("L_nu", l_nu)?;
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::config(format!("nu must lie in [0, 1], got {nu}")));
    }
    let k = holder_k(l_nu, nu);
    let pts = t.points(grid)?;
    Ok(certify(Property::Holder { l_nu, nu }, pts, |x| {
        let gap = (t.oracle.value(x) - t.f_star).max(0.0);
        let cap = k * gap.powf(2.0 * nu / (1.0 + nu));
        worst_over_vertices(t, x, |g| cap - linalg::norm_sq(g))
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub l: f64,
    pub qg_plus: Certificate,
    pub lsuc: Certificate,
    /// `QG⁺(L)` on the grid implies `LSUC(L)` on the grid.
    pub implication_holds: bool,
    /// `L_x/2·‖x - x*‖² - (f(x) - f*)` with `L_x` the tightest pointwise LSUC constant.
    pub pointwise_bound: Certificate,
    /// Points where no finite LSUC constant exists.
    pub skipped: usize,
    pub worst_margin: f64,
    pub holds: bool,
}

/// Both directions of the LSUC / QG⁺ relationship on a grid.
pub fn check_lsuc_qgplus_equivalence(t: &Target<'_>, l: f64, grid: &Grid) -> Result<EquivalenceReport> {
    let qg_plus = check_qg_plus(t, l, grid)?;
    let lsuc = check_lsuc(t, l, grid)?;
    let implication_holds = !qg_plus.holds || lsuc.holds;
    let pts = t.points(grid)?;
    let skipped = pts.iter().filter(|y| required_lsuc_lambda(t, y).is_none()).count();
    let pointwise_bound = certify(
        Property::Custom { name: "f - f* <= L_x/2 dist²".into() },
        pts,
        |x| match required_lsuc_lambda(t, x) {
            Some(lx) => 0.5 * lx * linalg::dist_sq(x, &t.x_star) - (t.oracle.value(x) - t.f_star),
            None => f64::INFINITY,
        },
    );
    let mut worst = pointwise_bound.worst_margin;
    if qg_plus.holds {
        worst = worst.min(lsuc.worst_margin);
    }
    Ok(EquivalenceReport {
        l,
        implication_holds,
        holds: worst >= -TOL && implication_holds,
        worst_margin: worst,
        qg_plus,
        lsuc,
        pointwise_bound,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: usize,
    pub left: f64,
    pub right: f64,
    pub slack: f64,
    /// `false` when `h(x_t)` is below the rounding noise of the function
    /// values it was computed from; such rows are reported but not judged.
    pub resolved: bool,
}

/// Per-step `η_t(ψ(x_t) - ψ(u)) ≤ ½d_t² - ½d_{t+1}² + η_t/2(η_t - 1/λ_t)‖g̃_t‖² + η_t ε_t`
/// with `λ_t = ‖g_t‖²`, `g̃_t = h(x_t)g_t` and `ε_t = h(x_t)h(u) - ½h(u)²`.
/// For an exact surrogate (`h(u) = 0`) with `η_t = 1/λ_t` this is the plain
/// one-step inequality, and the cumulative row is `Σ η_t φ(x_t) ≤ ½‖x_1 - u‖²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundLedger {
    pub approximate: bool,
    pub comparator: Vec<f64>,
    pub rows: Vec<LedgerRow>,
    pub cumulative_left: f64,
    pub cumulative_right: f64,
    pub cumulative_holds: bool,
    /// Worst slack over resolved rows.
    pub worst_slack: f64,
    pub unresolved: usize,
    pub satisfied: bool,
}

/// Stepsize applied to the surrogate subgradient `h·g` by the stepper that
/// produced `rec`.
fn surrogate_stepsize(stepper: &Stepper, eta: f64, h: f64, moved: bool) -> Result<f64> {
    match stepper {
        Stepper::Polyak | Stepper::SurrogateGd | Stepper::MapT | Stepper::Alg1 { .. } => Ok(eta),
        Stepper::Sps { .. } | Stepper::Gd { .. } => {
            if h > 0.0 {
                Ok(eta / h)
            } else if moved {
                Err(Error::config("step with h = 0 is not a step on the surrogate"))
            } else {
                Ok(0.0)
            }
        }
    }
}

pub fn audit_one_step(trajectory: &Trajectory, surrogate: &StochasticSurrogate) -> Result<BoundLedger> {
    let stepper = Stepper::parse(&trajectory.stepper_name)?;
    let u = surrogate.comparator()?;
    let iterates = trajectory.iterates();
    if iterates[0].len() != surrogate.dim() {
        return Err(Error::config("trajectory and surrogate have different dimensions"));
    }
    let d1 = linalg::dist_sq(iterates[0], &u);
    let mut rows = Vec::with_capacity(trajectory.records.len());
    let (mut cum_left, mut cum_extra) = (0.0, 0.0);
    let mut approximate = false;

    for (k, rec) in trajectory.records.iter().enumerate() {
        let s = surrogate.components.get(rec.component).ok_or_else(|| {
            Error::config(format!("record {} samples component {} which the surrogate lacks", rec.t, rec.component))
        })?;
        let x = rec.x.as_slice();
        let next = iterates[k + 1];
        let h = s.h_value(x);
        if (h - rec.h_val).abs() > 1e-12 * h.abs().max(1.0) {
            return Err(Error::config(format!(
                "step {}: recorded h = {} but the surrogate gives {h}",
                rec.t, rec.h_val
            )));
        }
        let g = s.h_subgradient(x);
        let moved = linalg::dist_sq(x, next) > 0.0;
        let eta = surrogate_stepsize(&stepper, rec.eta, h, moved)?;
        let predicted = linalg::step(x, eta * h, &g);
        if linalg::dist(&predicted, next) > 1e-9 * (1.0 + linalg::norm(x)) {
            return Err(Error::config(format!(
                "step {}: iterate is not a surrogate step (predicted {predicted:?}, found {next:?})",
                rec.t
            )));
        }
        let h_u = s.h_value(&u);
        approximate |= h_u > 0.0;
        let gg = linalg::norm_sq(&g);
        let left = eta * (0.5 * h * h - 0.5 * h_u * h_u);
        let telescope = 0.5 * linalg::dist_sq(x, &u) - 0.5 * linalg::dist_sq(next, &u);
        let extra = 0.5 * eta * (eta * gg - 1.0) * h * h + eta * (h * h_u - 0.5 * h_u * h_u);
        let right = telescope + extra;
        cum_left += left;
        cum_extra += extra;
        let noise = 8.0 * f64::EPSILON * rec.f_val.abs().max((rec.f_val - h).abs());
        let resolved = h == 0.0 || h.abs() > noise;
        rows.push(LedgerRow { t: rec.t, left, right, slack: right - left, resolved });
    }
    let judged = || rows.iter().filter(|r| r.resolved);
    let worst_slack = judged().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    let unresolved = rows.len() - judged().count();
    let cumulative_right = 0.5 * d1 + cum_extra;
    let cumulative_holds = cum_left <= cumulative_right + LEDGER_TOL;
    Ok(BoundLedger {
        approximate,
        comparator: u,
        satisfied: judged().all(|r| r.slack >= -LEDGER_TOL) && cumulative_holds,
        unresolved,
        rows,
        cumulative_left: cum_left,
        cumulative_right,
        cumulative_holds,
        worst_slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    Lipschitz { g: f64 },
    SelfBounded { l: f64 },
    Sharp { s: f64, g: f64 },
    Alg1SelfBounded { l: f64, gamma: f64 },
    Alg1Lipschitz { g: f64, gamma: f64 },
    Alg1Linear { l: f64, mu: f64, gamma: f64 },
    Holder { l_nu: f64, nu: f64, gamma: f64 },
}

pub const REGIME_NAMES: &[&str] = &[
    "lipschitz:G",
    "self_bounded:L",
    "sharp:s,G",
    "alg1_self_bounded:L,gamma",
    "alg1_lipschitz:G,gamma",
    "alg1_linear:L,mu,gamma",
    "holder:L_nu,nu,gamma",
];

impl Regime {
    /// Parse `name[:k=v,…]`; missing constants come from `declared`, and
    /// `gamma` from the stepper.
    pub fn parse(input: &str, declared: &PropertyConstants, gamma: Option<f64>) -> Result<Regime> {
        let input = input.trim();
        let (name, args) = input.split_once(':').unwrap_or((input, ""));
        let mut kv = BTreeMap::new();
        for part in args.split([',', ';']).filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::parse(input, format!("expected key=value, got `{part}`")))?;
            let v = match v.trim() {
                "inf" => f64::INFINITY,
                v => v.parse::<f64>().map_err(|_| Error::parse(input, format!("`{v}` is not a number")))?,
            };
            let key = match k.trim() {
                "L" | "l" => "L",
                "G" | "g" => "G",
                "s" => "s",
                "mu" => "mu",
                "gamma" => "gamma",
                "L_nu" | "l_nu" => "L_nu",
                "nu" => "nu",
                other => return Err(Error::parse(input, format!("unknown constant `{other}`"))),
            };
            kv.insert(key, v);
        }
        let get = |key: &str, fallback: Option<f64>| -> Result<f64> {
            kv.get(key).copied().or(fallback).ok_or_else(|| {
                Error::config(format!("regime `{name}` needs constant `{key}` and none is declared"))
            })
        };
        let holder = declared.holder;
        let regime = match name {
            "lipschitz" => Regime::Lipschitz { g: get("G", declared.lipschitz_g)? },
            "self_bounded" => Regime::SelfBounded { l: get("L", declared.self_bounded_l)? },
            "sharp" => Regime::Sharp { s: get("s", declared.sharp_s)?, g: get("G", declared.lipschitz_g)? },
            "alg1_self_bounded" => {
                Regime::Alg1SelfBounded { l: get("L", declared.self_bounded_l)?, gamma: get("gamma", gamma)? }
            }
            "alg1_lipschitz" => Regime::Alg1Lipschitz { g: get("G", declared.lipschitz_g)?, gamma: get("gamma", gamma)? },
            "alg1_linear" => Regime::Alg1Linear {
                l: get("L", declared.self_bounded_l)?,
                mu: get("mu", declared.quadratic_growth_mu)?,
                gamma: get("gamma", gamma)?,
            },
            "holder" => Regime::Holder {
                l_nu: get("L_nu", holder.map(|h| h.0))?,
                nu: get("nu", holder.map(|h| h.1))?,
                gamma: get("gamma", gamma)?,
            },
            _ => {
                return Err(Error::UnknownName {
                    kind: "rate regime",
                    name: input.to_string(),
                    available: REGIME_NAMES.join(", "),
                })
            }
        };
        regime.validate()?;
        Ok(regime)
    }

    fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| positive(name, v);
        match *self {
            Regime::Lipschitz { g } => check("G", g),
            Regime::SelfBounded { l } => check("L", l),
            Regime::Sharp { s, g } => {
                check("s", s)?;
                check("G", g)?;
                if s > g {
                    return Err(Error::config(format!("sharpness {s} exceeds the Lipschitz constant {g}")));
                }
                Ok(())
            }
            Regime::Alg1SelfBounded { l, gamma } => check("L", l).and(check("gamma", gamma)),
            Regime::Alg1Lipschitz { g, gamma } => check("G", g).and(check("gamma", gamma)),
            Regime::Alg1Linear { l, mu, gamma } => check("L", l).and(check("mu", mu)).and(check("gamma", gamma)),
            Regime::Holder { l_nu, nu, gamma } => {
                check("L_nu", l_nu)?;
                check("gamma", gamma)?;
                if !(0.0..=1.0).contains(&nu) {
                    return Err(Error::config(format!("nu must lie in [0, 1], got {nu}")));
                }
                Ok(())
            }
        }
    }

    pub fn is_stochastic(&self) -> bool {
        !matches!(self, Regime::Lipschitz { .. } | Regime::SelfBounded { .. } | Regime::Sharp { .. })
    }
}

/// Declared constants of a finite sum: the worst component constants where
/// they transfer (`L`, `G`), otherwise those of a single component.
pub fn declared_constants(problem: &StochasticProblem) -> PropertyConstants {
    if let [only] = problem.components.as_slice() {
        return only.declared;
    }
    let max_of = |f: fn(&PropertyConstants) -> Option<f64>| -> Option<f64> {
        problem.components.iter().map(|c| f(&c.declared)).try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
    };
    PropertyConstants {
        self_bounded_l: max_of(|d| d.self_bounded_l),
        lipschitz_g: max_of(|d| d.lipschitz_g),
        ..Default::default()
    }
}

/// `Q(y) = 2y + L_ν (2γy)^{(1+ν)/2} (1+1/ν)^ν`, with the `ν → 0` limit of the last factor.
pub fn holder_q(y: f64, l_nu: f64, nu: f64, gamma: f64) -> f64 {
    holder_q_from_gamma_y(y, mul0(gamma, y), l_nu, nu)
}

fn holder_q_from_gamma_y(y: f64, gamma_y: f64, l_nu: f64, nu: f64) -> f64 {
    let lead = if nu == 0.0 { 1.0 } else { (1.0 + 1.0 / nu).powf(nu) };
    2.0 * y + l_nu * (2.0 * gamma_y).powf((1.0 + nu) / 2.0) * lead
}

/// The `ν = 1` closed form `2y(1 + 2γL)`.
pub fn holder_q_smooth(y: f64, l: f64, gamma: f64) -> f64 {
    2.0 * y * (1.0 + 2.0 * gamma * l)
}

/// Product with the convention `0·∞ = 0`.
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCheck {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub holds: bool,
    /// Reported but not part of the verdict.
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub regime: Regime,
    pub seeds: usize,
    pub steps: usize,
    pub measured: f64,
    pub bound: f64,
    pub holds: bool,
    pub checks: Vec<RateCheck>,
}

fn leq(measured: f64, bound: f64) -> bool {
    measured <= bound + 1e-12 * bound.abs().max(1.0)
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Audit the regime's bound on one trajectory (deterministic regimes) or
/// across seeds (stochastic regimes, mean + 3 standard errors against the bound).
pub fn audit_rates(trajectories: &[Trajectory], surrogate: &StochasticSurrogate, regime: &Regime) -> Result<RateReport> {
    regime.validate()?;
    let first = trajectories.first().ok_or_else(|| Error::config("no trajectories to audit"))?;
    let steps = first.records.len();
    if steps == 0 || trajectories.iter().any(|t| t.records.len() != steps) {
        return Err(Error::config("trajectories must be nonempty and of equal length"));
    }
    let x1 = first.records[0].x.clone();
    if trajectories.iter().any(|t| t.records[0].x != x1) {
        return Err(Error::config("trajectories start from different points"));
    }
    let u = surrogate.comparator()?;
    let d2 = linalg::dist_sq(&x1, &u);
    let t_f = steps as f64;
    let mut checks = Vec::new();

    if !regime.is_stochastic() {
        let [s] = surrogate.components.as_slice() else {
            return Err(Error::config("deterministic rate regimes need a single-component problem"));
        };
        let phi = |x: &[f64]| 0.5 * s.h_value(x).powi(2);
        for (i, traj) in trajectories.iter().enumerate() {
            let label = |name: &str| if trajectories.len() == 1 { name.to_string() } else { format!("{name}[{i}]") };
            if let Regime::Sharp { s: sharp, g } = *regime {
                let rate = 1.0 - (sharp / g).powi(2);
                let iters = traj.iterates();
                let mut ok = true;
                for t in 1..iters.len() {
                    let d = linalg::dist_sq(iters[t], &u);
                    ok &= leq(d, rate.powi(t as i32) * d2);
                }
                let last = iters.len() - 1;
                checks.push(RateCheck {
                    name: label("distance"),
                    measured: linalg::dist_sq(iters[last], &u),
                    bound: rate.powi(last as i32) * d2,
                    holds: ok,
                    informational: false,
                });
                continue;
            }
            let bound = match *regime {
                Regime::Lipschitz { g } => g * g * d2 / (2.0 * t_f),
                Regime::SelfBounded { l } => 4.0 * l * l * d2 * d2 / (t_f * t_f),
                _ => unreachable!("stochastic regimes handled below"),
            };
            let averaged = weighted_average(traj, s);
            let best = traj.records.iter().map(|r| phi(&r.x)).fold(f64::INFINITY, f64::min);
            let avg_phi = phi(&averaged);
            checks.push(RateCheck { name: label("averaged"), measured: avg_phi, bound, holds: leq(avg_phi, bound), informational: false });
            checks.push(RateCheck { name: label("best"), measured: best, bound, holds: leq(best, bound), informational: false });
        }
    } else {
        let h_star = surrogate.big_h(&u);
        let big_h_avg: Vec<f64> = trajectories
            .iter()
            .map(|t| t.records.iter().map(|r| surrogate.big_h(&r.x)).sum::<f64>() / t_f)
            .collect();
        match *regime {
            Regime::Alg1SelfBounded { l, gamma } => {
                let m = (0.5 / l).min(gamma);
                let scaled: Vec<f64> = big_h_avg.iter().map(|v| m * v).collect();
                let (mean, se) = mean_se(&scaled);
                let bound = d2 / t_f + mul0(2.0 * gamma, h_star);
                checks.push(RateCheck { name: "averaged".into(), measured: mean + 3.0 * se, bound, holds: leq(mean + 3.0 * se, bound), informational: false });

                // per-realization regret form, which holds seed by seed
                let mut worst = f64::NEG_INFINITY;
                let mut lhs_all = Vec::new();
                let mut grad_all = Vec::new();
                for traj in trajectories {
                    let (mut lhs, mut grads) = (0.0, 0.0);
                    for r in &traj.records {
                        let s = &surrogate.components[r.component];
                        lhs += m * s.h_value(&r.x) - mul0(gamma, s.h_value(&u));
                        grads += linalg::norm_sq(&s.h_subgradient(&r.x));
                    }
                    let rhs = 0.5 * d2 + 0.5 * mul0(gamma * gamma, grads);
                    worst = worst.max(lhs - rhs);
                    lhs_all.push(lhs);
                    grad_all.push(grads);
                }
                checks.push(RateCheck { name: "regret_per_seed".into(), measured: worst, bound: 0.0, holds: leq(worst, 0.0), informational: false });
                let lhs_exp = big_h_avg.iter().map(|v| m * v * t_f).sum::<f64>() / big_h_avg.len() as f64 - mul0(gamma, h_star) * t_f;
                let rhs_exp = 0.5 * d2 + 0.5 * mul0(gamma * gamma, grad_all.iter().sum::<f64>() / grad_all.len() as f64);
                checks.push(RateCheck { name: "regret_expectation".into(), measured: lhs_exp, bound: rhs_exp, holds: leq(lhs_exp, rhs_exp), informational: true });
            }
            Regime::Alg1Lipschitz { g, gamma } => {
                let (mean, se) = mean_se(&big_h_avg);
                let d = d2.sqrt();
                let root = if h_star == 0.0 { 0.0 } else { (2.0 * gamma * h_star).sqrt() };
                let bound = d2 / (gamma * t_f) + 2.0 * h_star + g * d / t_f.sqrt() + g * root;
                checks.push(RateCheck { name: "averaged".into(), measured: mean + 3.0 * se, bound, holds: leq(mean + 3.0 * se, bound), informational: false });
            }
            Regime::Alg1Linear { l, mu, gamma } => {
                let m = (0.5 / l).min(gamma);
                let a = 0.5 * mu * m;
                if !(a > 0.0 && a <= 1.0) {
                    return Err(Error::config(format!("contraction factor a = {a} outside (0, 1]")));
                }
                let b = mul0(2.0 * gamma - m, h_star);
                let mut ok = true;
                let (mut last_measured, mut last_bound) = (0.0, 0.0);
                for t in 1..=steps {
                    let dists: Vec<f64> = trajectories.iter().map(|tr| linalg::dist_sq(tr.iterates()[t], &u)).collect();
                    let (mean, se) = mean_se(&dists);
                    let q = (1.0 - a).powi(t as i32);
                    let bound = q * d2 + if b == 0.0 { 0.0 } else { b * (1.0 - q) / a };
                    ok &= leq(mean + 3.0 * se, bound);
                    last_measured = mean + 3.0 * se;
                    last_bound = bound;
                }
                checks.push(RateCheck { name: "distance".into(), measured: last_measured, bound: last_bound, holds: ok, informational: false });
            }
            Regime::Holder { l_nu, nu, gamma } => {
                let (mean, se) = mean_se(&big_h_avg);
                let y = d2 / (t_f * gamma) + 2.0 * h_star;
                let gamma_y = d2 / t_f + mul0(2.0 * gamma, h_star);
                let bound = holder_q_from_gamma_y(y, gamma_y, l_nu, nu);
                checks.push(RateCheck { name: "averaged".into(), measured: mean + 3.0 * se, bound, holds: leq(mean + 3.0 * se, bound), informational: false });
            }
            _ => unreachable!("deterministic regimes handled above"),
        }
    }

    let verdict: Vec<&RateCheck> = checks.iter().filter(|c| !c.informational).collect();
    let headline = verdict
        .iter()
        .max_by(|a, b| (a.measured - a.bound).total_cmp(&(b.measured - b.bound)))
        .expect("at least one check");
    Ok(RateReport {
        regime: *regime,
        seeds: trajectories.len(),
        steps,
        measured: headline.measured,
        bound: headline.bound,
        holds: verdict.iter().all(|c| c.holds),
        checks,
    })
}

/// `x̄_T = Σ η_t x_t / Σ η_t` with `η_t = 1/‖g_t‖²`. Iterates with `g_t = 0`
/// carry infinite weight, so the average is taken over them alone.
pub fn weighted_average(trajectory: &Trajectory, s: &SurrogateOracle) -> Vec<f64> {
    let dim = s.dim();
    let stationary: Vec<&[f64]> = trajectory
        .records
        .iter()
        .filter(|r| linalg::is_zero(&s.h_subgradient(&r.x)))
        .map(|r| r.x.as_slice())
        .collect();
    let mut acc = vec![0.0; dim];
    let mut total = 0.0;
    if stationary.is_empty() {
        for r in &trajectory.records {
            let w = 1.0 / linalg::norm_sq(&s.h_subgradient(&r.x));
            total += w;
            for (a, x) in acc.iter_mut().zip(&r.x) {
                *a += w * x;
            }
        }
    } else {
        for x in &stationary {
            total += 1.0;
            for (a, v) in acc.iter_mut().zip(x.iter()) {
                *a += v;
            }
        }
    }
    acc.into_iter().map(|a| a / total).collect()
}

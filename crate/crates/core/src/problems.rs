//! Function oracles and the catalog of test problems.
//!
//! Every oracle returns a value and one canonical element of the
//! subdifferential. At the kink of an absolute-value term the canonical choice
//! is the midpoint `0`, so the "stay" branch of the Polyak update fires exactly
//! at sharp minima.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Anything with a value and a selection from its subdifferential.
pub trait Oracle: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Canonical subgradient selection.
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;

    /// Extreme points of the subdifferential at `x` (the canonical selection
    /// when `x` is a point of differentiability).
    fn subgradient_vertices(&self, x: &[f64]) -> Vec<Vec<f64>> {
        vec![self.subgradient(x)]
    }

    /// Whether `0` belongs to the subdifferential at `x`.
    fn is_stationary(&self, x: &[f64]) -> bool {
        linalg::is_zero(&self.subgradient(x))
    }

    /// Kink locations of a one-dimensional oracle.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Declared analytic constants of a problem. `None` means "not claimed".
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertyConstants {
    pub lipschitz_g: Option<f64>,
    pub self_bounded_l: Option<f64>,
    pub sharp_s: Option<f64>,
    pub quadratic_growth_mu: Option<f64>,
    /// `(L_nu, nu)` with `nu` in `[0, 1]`.
    pub holder: Option<(f64, f64)>,
}

impl PropertyConstants {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: Option<f64>| match v {
            Some(c) if !(c >= 0.0) => Err(Error::config(format!("{name} must be nonnegative, got {c}"))),
            _ => Ok(()),
        };
        nonneg("lipschitz_g", self.lipschitz_g)?;
        nonneg("self_bounded_l", self.self_bounded_l)?;
        for (name, v) in [("sharp_s", self.sharp_s), ("quadratic_growth_mu", self.quadratic_growth_mu)] {
            if let Some(c) = v {
                if !(c > 0.0) {
                    return Err(Error::config(format!("{name} must be positive, got {c}")));
                }
            }
        }
        if let Some((l_nu, nu)) = self.holder {
            if !(l_nu > 0.0) || !(0.0..=1.0).contains(&nu) {
                return Err(Error::config(format!("invalid Hölder pair ({l_nu}, {nu})")));
            }
        }
        if let (Some(g), Some(s)) = (self.lipschitz_g, self.sharp_s) {
            if g < s {
                return Err(Error::config(format!(
                    "a G-Lipschitz function with an s-sharp minimum needs G >= s (G={g}, s={s})"
                )));
            }
        }
        Ok(())
    }
}

/// `abs_coef * |x - abs_center| + c2 * x^2 + c1 * x + c0`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarPiece {
    pub abs_coef: f64,
    pub abs_center: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl ScalarPiece {
    pub fn quadratic(c2: f64, c1: f64, c0: f64) -> Self {
        ScalarPiece { abs_coef: 0.0, abs_center: 0.0, c2, c1, c0 }
    }

    pub fn abs(coef: f64, center: f64) -> Self {
        ScalarPiece { abs_coef: coef, abs_center: center, c2: 0.0, c1: 0.0, c0: 0.0 }
    }

    fn smooth_derivative(&self, x: f64) -> f64 {
        2.0 * self.c2 * x + self.c1
    }

    fn value(&self, x: f64) -> f64 {
        self.abs_coef * (x - self.abs_center).abs() + self.c2 * x * x + self.c1 * x + self.c0
    }

    fn is_kink(&self, x: f64) -> bool {
        self.abs_coef != 0.0 && x == self.abs_center
    }

    fn derivative(&self, x: f64) -> f64 {
        let abs_part = if self.is_kink(x) {
            0.0
        } else {
            self.abs_coef * (x - self.abs_center).signum()
        };
        abs_part + self.smooth_derivative(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FunctionKind {
    Scalar(ScalarPiece),
    /// `½‖x‖²`
    HalfSquaredNorm,
    /// `Σ|x_i|`
    L1Norm,
    /// `max_i |x_i|`
    LinfNorm,
}

/// A function with its known optimum data and declared constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionOracle {
    pub name: String,
    pub dim: usize,
    pub kind: FunctionKind,
    /// `f* = inf f`, when finite and known.
    pub opt_value: Option<f64>,
    pub opt_point: Option<Vec<f64>>,
    pub declared: PropertyConstants,
}

impl FunctionOracle {
    pub fn new(name: impl Into<String>, dim: usize, kind: FunctionKind) -> Self {
        FunctionOracle {
            name: name.into(),
            dim,
            kind,
            opt_value: None,
            opt_point: None,
            declared: PropertyConstants::default(),
        }
    }

    pub fn scalar(name: impl Into<String>, piece: ScalarPiece) -> Self {
        Self::new(name, 1, FunctionKind::Scalar(piece))
    }

    pub fn with_optimum(mut self, point: Vec<f64>, value: f64) -> Self {
        self.opt_point = Some(point);
        self.opt_value = Some(value);
        self
    }

    pub fn with_constants(mut self, declared: PropertyConstants) -> Self {
        self.declared = declared;
        self
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Value and canonical subgradient at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_dim(x)?;
        Ok((self.value(x), self.subgradient(x)))
    }

    pub fn opt_value_or_err(&self) -> Result<f64> {
        self.opt_value
            .ok_or_else(|| Error::config(format!("problem `{}` has no known optimal value", self.name)))
    }

    pub fn opt_point_or_err(&self) -> Result<&[f64]> {
        self.opt_point
            .as_deref()
            .ok_or_else(|| Error::config(format!("problem `{}` has no known minimizer", self.name)))
    }
}

fn sign0(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum()
    }
}

impl Oracle for FunctionOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            FunctionKind::Scalar(p) => p.value(x[0]),
            FunctionKind::HalfSquaredNorm => 0.5 * linalg::norm_sq(x),
            FunctionKind::L1Norm => x.iter().map(|v| v.abs()).sum(),
            FunctionKind::LinfNorm => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            FunctionKind::Scalar(p) => vec![p.derivative(x[0])],
            FunctionKind::HalfSquaredNorm => x.to_vec(),
            FunctionKind::L1Norm => x.iter().map(|&v| sign0(v)).collect(),
            FunctionKind::LinfNorm => {
                let mut g = vec![0.0; x.len()];
                let (mut arg, mut best) = (0, 0.0);
                for (i, v) in x.iter().enumerate() {
                    if v.abs() > best {
                        best = v.abs();
                        arg = i;
                    }
                }
                if best > 0.0 {
                    g[arg] = x[arg].signum();
                }
                g
            }
        }
    }

    fn subgradient_vertices(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match &self.kind {
            FunctionKind::Scalar(p) if p.is_kink(x[0]) => {
                let s = p.smooth_derivative(x[0]);
                vec![vec![s - p.abs_coef], vec![s + p.abs_coef]]
            }
            FunctionKind::L1Norm => {
                let zeros: Vec<usize> = (0..x.len()).filter(|&i| x[i] == 0.0).collect();
                if zeros.is_empty() || zeros.len() > 10 {
                    return vec![self.subgradient(x)];
                }
                let base = self.subgradient(x);
                (0..(1usize << zeros.len()))
                    .map(|mask| {
                        let mut g = base.clone();
                        for (bit, &i) in zeros.iter().enumerate() {
                            g[i] = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
                        }
                        g
                    })
                    .collect()
            }
            FunctionKind::LinfNorm => {
                let best = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
                let mut out = Vec::new();
                for (i, v) in x.iter().enumerate() {
                    if best == 0.0 {
                        for s in [-1.0, 1.0] {
                            let mut g = vec![0.0; x.len()];
                            g[i] = s;
                            out.push(g);
                        }
                    } else if v.abs() == best {
                        let mut g = vec![0.0; x.len()];
                        g[i] = v.signum();
                        out.push(g);
                    }
                }
                out
            }
            _ => vec![self.subgradient(x)],
        }
    }

    fn is_stationary(&self, x: &[f64]) -> bool {
        match &self.kind {
            FunctionKind::Scalar(p) if p.is_kink(x[0]) => {
                let s = p.smooth_derivative(x[0]);
                let (a, b) = (s - p.abs_coef, s + p.abs_coef);
                a.min(b) <= 0.0 && 0.0 <= a.max(b)
            }
            FunctionKind::L1Norm | FunctionKind::LinfNorm => x.iter().all(|&v| v == 0.0),
            _ => linalg::is_zero(&self.subgradient(x)),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            FunctionKind::Scalar(p) if p.abs_coef != 0.0 => vec![p.abs_center],
            FunctionKind::L1Norm | FunctionKind::LinfNorm if self.dim == 1 => vec![0.0],
            _ => Vec::new(),
        }
    }
}

/// Finite-sum objective `F(x) = Σ w_i f_i(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticProblem {
    pub name: String,
    pub components: Vec<FunctionOracle>,
    pub weights: Vec<f64>,
    /// Whether every component is minimized at a common point.
    pub interpolating: bool,
    /// A minimizer of `F`, when known.
    pub opt_point: Option<Vec<f64>>,
}

impl StochasticProblem {
    pub fn new(
        name: impl Into<String>,
        components: Vec<FunctionOracle>,
        weights: Vec<f64>,
        interpolating: bool,
    ) -> Result<Self> {
        let name = name.into();
        if components.is_empty() {
            return Err(Error::config(format!("stochastic problem `{name}` has no components")));
        }
        if components.len() != weights.len() {
            return Err(Error::config(format!(
                "stochastic problem `{name}`: {} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        let dim = components[0].dim;
        if let Some(c) = components.iter().find(|c| c.dim != dim) {
            return Err(Error::config(format!(
                "component `{}` has dimension {} but `{}` has {dim}",
                c.name, c.dim, components[0].name
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::config("sampling weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::config(format!("sampling weights sum to {total}, not 1")));
        }
        Ok(StochasticProblem { name, components, weights, interpolating, opt_point: None })
    }

    /// A deterministic problem viewed as a one-component finite sum.
    pub fn single(oracle: FunctionOracle) -> Self {
        let interpolating = true;
        StochasticProblem {
            name: oracle.name.clone(),
            opt_point: oracle.opt_point.clone(),
            components: vec![oracle],
            weights: vec![1.0],
            interpolating,
        }
    }

    pub fn with_opt_point(mut self, x: Vec<f64>) -> Self {
        self.opt_point = Some(x);
        self
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim
    }

    pub fn is_deterministic(&self) -> bool {
        self.components.len() == 1
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.components.iter().zip(&self.weights).map(|(c, w)| w * c.value(x)).sum()
    }

    /// `min F`. Exact for sums of one-dimensional quadratics, otherwise a dense
    /// scan on `[-10, 10]` refined by golden section.
    pub fn objective_minimum(&self) -> Result<f64> {
        if let Some(x) = &self.opt_point {
            return Ok(self.objective(x));
        }
        if self.dim() != 1 {
            return Err(Error::config(format!(
                "minimum of `{}` is not declared and the problem is not one-dimensional",
                self.name
            )));
        }
        let mut sum = ScalarPiece::quadratic(0.0, 0.0, 0.0);
        let mut all_quadratic = true;
        for (c, w) in self.components.iter().zip(&self.weights) {
            match &c.kind {
                FunctionKind::Scalar(p) if p.abs_coef == 0.0 => {
                    sum.c2 += w * p.c2;
                    sum.c1 += w * p.c1;
                    sum.c0 += w * p.c0;
                }
                _ => all_quadratic = false,
            }
        }
        if all_quadratic && sum.c2 > 0.0 {
            return Ok(sum.c0 - sum.c1 * sum.c1 / (4.0 * sum.c2));
        }
        let x = linalg::minimize_1d(|x| self.objective(&[x]), -10.0, 10.0, 1e-4);
        Ok(self.objective(&[x]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ZooEntry {
    Deterministic(FunctionOracle),
    Stochastic(StochasticProblem),
}

impl ZooEntry {
    pub fn name(&self) -> &str {
        match self {
            ZooEntry::Deterministic(f) => &f.name,
            ZooEntry::Stochastic(p) => &p.name,
        }
    }

    pub fn into_stochastic(self) -> StochasticProblem {
        match self {
            ZooEntry::Deterministic(f) => StochasticProblem::single(f),
            ZooEntry::Stochastic(p) => p,
        }
    }

    pub fn deterministic(self) -> Result<FunctionOracle> {
        match self {
            ZooEntry::Deterministic(f) => Ok(f),
            ZooEntry::Stochastic(p) => Err(Error::config(format!(
                "`{}` is a finite-sum problem; a single function is required here",
                p.name
            ))),
        }
    }
}

/// Parsed problem address, e.g. `shifted_quad?a=0.5` or `l1?d=4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemRef {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl ProblemRef {
    pub fn parse(input: &str) -> Result<Self> {
        let input = input.trim();
        let (name, query) = match input.split_once('?') {
            Some((n, q)) => (n, Some(q)),
            None => (input, None),
        };
        if name.is_empty() {
            return Err(Error::parse(input, "empty problem name"));
        }
        let mut params = BTreeMap::new();
        if let Some(q) = query {
            for pair in q.split('&').filter(|s| !s.is_empty()) {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| Error::parse(input, format!("expected key=value, got `{pair}`")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(input, format!("`{v}` is not a number")))?;
                params.insert(k.trim().to_string(), v);
            }
        }
        Ok(ProblemRef { name: name.to_string(), params })
    }

    fn take(&self, key: &str, default: f64, allowed: &[&str]) -> Result<f64> {
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::parse(
                self.to_string(),
                format!("unknown parameter `{k}` for `{}`", self.name),
            ));
        }
        Ok(self.params.get(key).copied().unwrap_or(default))
    }

    fn dim_param(&self) -> Result<usize> {
        let d = self.take("d", 1.0, &["d"])?;
        if d < 1.0 || d.fract() != 0.0 {
            return Err(Error::parse(self.to_string(), "d must be a positive integer"));
        }
        Ok(d as usize)
    }
}

impl fmt::Display for ProblemRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { '?' } else { '&' })?;
        }
        Ok(())
    }
}

pub const ZOO_NAMES: &[&str] = &[
    "fig1",
    "quad",
    "abs1d",
    "abs_plus",
    "l1",
    "linf",
    "shifted_quad",
    "cycle_quad",
    "sps_fail",
    "interp_pair",
    "nonconvex_mix",
];

/// `|x+2| + x²/2`, minimized at `x = -1` with value `1.5`.
pub fn fig1() -> FunctionOracle {
    FunctionOracle::scalar(
        "fig1",
        ScalarPiece { abs_coef: 1.0, abs_center: -2.0, c2: 0.5, c1: 0.0, c0: 0.0 },
    )
    .with_optimum(vec![-1.0], 1.5)
    .with_constants(PropertyConstants {
        self_bounded_l: Some(9.0),
        quadratic_growth_mu: Some(1.0),
        ..Default::default()
    })
}

/// `½‖x‖²` in `dim` dimensions.
pub fn quad(dim: usize) -> FunctionOracle {
    FunctionOracle::new("quad", dim, FunctionKind::HalfSquaredNorm)
        .with_optimum(vec![0.0; dim], 0.0)
        .with_constants(PropertyConstants {
            self_bounded_l: Some(1.0),
            quadratic_growth_mu: Some(1.0),
            holder: Some((1.0, 1.0)),
            ..Default::default()
        })
}

pub fn abs1d() -> FunctionOracle {
    FunctionOracle::scalar("abs1d", ScalarPiece::abs(1.0, 0.0))
        .with_optimum(vec![0.0], 0.0)
        .with_constants(PropertyConstants {
            lipschitz_g: Some(1.0),
            sharp_s: Some(1.0),
            holder: Some((1.0, 0.0)),
            ..Default::default()
        })
}

/// `|x| + c`: Lipschitz with a sharp minimum and a strictly positive floor.
pub fn abs_plus(c: f64) -> FunctionOracle {
    let mut piece = ScalarPiece::abs(1.0, 0.0);
    piece.c0 = c;
    FunctionOracle::scalar("abs_plus", piece)
        .with_optimum(vec![0.0], c)
        .with_constants(PropertyConstants {
            lipschitz_g: Some(1.0),
            sharp_s: Some(1.0),
            ..Default::default()
        })
}

pub fn l1(dim: usize) -> FunctionOracle {
    FunctionOracle::new("l1", dim, FunctionKind::L1Norm)
        .with_optimum(vec![0.0; dim], 0.0)
        .with_constants(PropertyConstants {
            lipschitz_g: Some((dim as f64).sqrt()),
            sharp_s: Some(1.0),
            ..Default::default()
        })
}

pub fn linf(dim: usize) -> FunctionOracle {
    FunctionOracle::new("linf", dim, FunctionKind::LinfNorm)
        .with_optimum(vec![0.0; dim], 0.0)
        .with_constants(PropertyConstants {
            lipschitz_g: Some(1.0),
            sharp_s: Some(1.0 / (dim as f64).sqrt()),
            ..Default::default()
        })
}

/// `x²/2 + a`
pub fn shifted_quad(a: f64) -> FunctionOracle {
    FunctionOracle::scalar("shifted_quad", ScalarPiece::quadratic(0.5, 0.0, a))
        .with_optimum(vec![0.0], a)
        .with_constants(PropertyConstants {
            self_bounded_l: Some(1.0),
            quadratic_growth_mu: Some(1.0),
            ..Default::default()
        })
}

/// `x² + 1`
pub fn cycle_quad() -> FunctionOracle {
    FunctionOracle::scalar("cycle_quad", ScalarPiece::quadratic(1.0, 0.0, 1.0))
        .with_optimum(vec![0.0], 1.0)
        .with_constants(PropertyConstants {
            self_bounded_l: Some(2.0),
            quadratic_growth_mu: Some(2.0),
            ..Default::default()
        })
}

/// `f1 = x²+2x+5`, `f2 = 2x²-4x+10`, equal weights. `F = 1.5x² - x + 7.5`.
pub fn sps_fail() -> StochasticProblem {
    let f1 = FunctionOracle::scalar("sps_fail/f1", ScalarPiece::quadratic(1.0, 2.0, 5.0))
        .with_optimum(vec![-1.0], 4.0)
        .with_constants(PropertyConstants {
            self_bounded_l: Some(2.0),
            quadratic_growth_mu: Some(2.0),
            ..Default::default()
        });
    let f2 = FunctionOracle::scalar("sps_fail/f2", ScalarPiece::quadratic(2.0, -4.0, 10.0))
        .with_optimum(vec![1.0], 8.0)
        .with_constants(PropertyConstants {
            self_bounded_l: Some(4.0),
            quadratic_growth_mu: Some(4.0),
            ..Default::default()
        });
    StochasticProblem::new("sps_fail", vec![f1, f2], vec![0.5, 0.5], false)
        .expect("sps_fail is well formed")
        .with_opt_point(vec![1.0 / 3.0])
}

/// `f1 = x²`, `f2 = 2x²`: both minimized at the origin.
pub fn interp_pair() -> StochasticProblem {
    let f1 = FunctionOracle::scalar("interp_pair/f1", ScalarPiece::quadratic(1.0, 0.0, 0.0))
        .with_optimum(vec![0.0], 0.0)
        .with_constants(PropertyConstants {
            self_bounded_l: Some(2.0),
            quadratic_growth_mu: Some(2.0),
            ..Default::default()
        });
    let f2 = FunctionOracle::scalar("interp_pair/f2", ScalarPiece::quadratic(2.0, 0.0, 0.0))
        .with_optimum(vec![0.0], 0.0)
        .with_constants(PropertyConstants {
            self_bounded_l: Some(4.0),
            quadratic_growth_mu: Some(4.0),
            ..Default::default()
        });
    StochasticProblem::new("interp_pair", vec![f1, f2], vec![0.5, 0.5], true)
        .expect("interp_pair is well formed")
        .with_opt_point(vec![0.0])
}

/// `f1 = -|x|` (non-convex, unbounded below) and `f2 = 2|x|`; `F = |x|/2`.
/// Only the hinge transform at the minimizer of `F` is meaningful here.
pub fn nonconvex_mix() -> StochasticProblem {
    let f1 = FunctionOracle::scalar("nonconvex_mix/f1", ScalarPiece::abs(-1.0, 0.0));
    let f2 = FunctionOracle::scalar("nonconvex_mix/f2", ScalarPiece::abs(2.0, 0.0))
        .with_optimum(vec![0.0], 0.0)
        .with_constants(PropertyConstants {
            lipschitz_g: Some(2.0),
            sharp_s: Some(2.0),
            ..Default::default()
        });
    StochasticProblem::new("nonconvex_mix", vec![f1, f2], vec![0.5, 0.5], true)
        .expect("nonconvex_mix is well formed")
        .with_opt_point(vec![0.0])
}

/// Look up a problem by its address, e.g. `shifted_quad?a=0.5`.
pub fn zoo(address: &str) -> Result<ZooEntry> {
    let r = ProblemRef::parse(address)?;
    let entry = match r.name.as_str() {
        "fig1" => {
            r.take("", 0.0, &[])?;
            ZooEntry::Deterministic(fig1())
        }
        "quad" => ZooEntry::Deterministic(quad(r.dim_param()?)),
        "abs1d" => {
            r.take("", 0.0, &[])?;
            ZooEntry::Deterministic(abs1d())
        }
        "abs_plus" => ZooEntry::Deterministic(abs_plus(r.take("c", 1.0, &["c"])?)),
        "l1" => ZooEntry::Deterministic(l1(r.dim_param()?)),
        "linf" => ZooEntry::Deterministic(linf(r.dim_param()?)),
        "shifted_quad" => ZooEntry::Deterministic(shifted_quad(r.take("a", 0.5, &["a"])?)),
        "cycle_quad" => {
            r.take("", 0.0, &[])?;
            ZooEntry::Deterministic(cycle_quad())
        }
        "sps_fail" => {
            r.take("", 0.0, &[])?;
            ZooEntry::Stochastic(sps_fail())
        }
        "interp_pair" => {
            r.take("", 0.0, &[])?;
            ZooEntry::Stochastic(interp_pair())
        }
        "nonconvex_mix" => {
            r.take("", 0.0, &[])?;
            ZooEntry::Stochastic(nonconvex_mix())
        }
        other => {
            return Err(Error::UnknownName {
                kind: "problem",
                name: other.to_string(),
                available: ZOO_NAMES.join(", "),
            })
        }
    };
    Ok(entry)
}

/// The deterministic problems with a known minimizer, at their default parameters.
pub fn deterministic_catalog() -> Vec<FunctionOracle> {
    vec![
        fig1(),
        quad(1),
        quad(3),
        abs1d(),
        abs_plus(1.0),
        l1(4),
        linf(3),
        shifted_quad(0.5),
        cycle_quad(),
    ]
}

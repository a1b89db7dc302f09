//! Surrogate losses `ψ = ½h²` built from a base oracle through an h-transform.
//!
//! With `h = f - f*` this is the Polyak surrogate `φ`. A subgradient of `ψ` is
//! `h(x)·g` for `g ∈ ∂h(x)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{FunctionOracle, Oracle, StochasticProblem};

/// The transform applied to one function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    /// `h = f - f*`
    ShiftByOpt,
    /// `h = (f - level)_+`
    Hinge { level: f64 },
    /// `h = f - q`, meaningful when `q <= inf f`
    LowerBound { q: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateSpec {
    pub base: FunctionOracle,
    pub transform: Transform,
}

/// Transform description for a whole finite-sum problem, resolved to one
/// [`Transform`] per component.
///
/// CLI grammar: `shift_opt | shift_per_component_inf | hinge:a | hinge_at_opt | lower_bound:q`
/// where `q` may list one value per component separated by `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TransformSpec {
    /// Each component shifted by its own infimum (SPS / SPS_max when stochastic).
    ShiftByOpt,
    Hinge(f64),
    /// Hinge at `f_i(x*)` with `x*` a minimizer of the full objective (SPS₊).
    HingeAtOpt,
    /// One lower bound shared by all components, or one per component (SPS^ℓ_max).
    LowerBound(Vec<f64>),
}

impl TransformSpec {
    pub fn parse(input: &str) -> Result<Self> {
        let input = input.trim();
        let (name, arg) = match input.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (input, None),
        };
        let arg_value = |a: &str| -> Result<f64> {
            let a = a.split_once('=').map(|(_, v)| v).unwrap_or(a);
            a.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(input, format!("`{a}` is not a number")))
        };
        match (name, arg) {
            ("shift_opt" | "shift_per_component_inf", None) => Ok(TransformSpec::ShiftByOpt),
            ("hinge", Some(a)) => Ok(TransformSpec::Hinge(arg_value(a)?)),
            ("hinge_at_opt", None) => Ok(TransformSpec::HingeAtOpt),
            ("lower_bound", Some(a)) => {
                let a = a.split_once('=').map(|(_, v)| v).unwrap_or(a);
                let qs = a.split(';').map(arg_value).collect::<Result<Vec<_>>>()?;
                Ok(TransformSpec::LowerBound(qs))
            }
            ("hinge" | "lower_bound", None) => Err(Error::parse(input, "missing parameter")),
            _ => Err(Error::UnknownName {
                kind: "transform",
                name: input.to_string(),
                available: "shift_opt, shift_per_component_inf, hinge:a, hinge_at_opt, lower_bound:q".into(),
            }),
        }
    }

    /// Resolve into one surrogate per component of `problem`.
    pub fn build(&self, problem: &StochasticProblem) -> Result<StochasticSurrogate> {
        let n = problem.components.len();
        let mut components = Vec::with_capacity(n);
        for (i, base) in problem.components.iter().enumerate() {
            let transform = match self {
                TransformSpec::ShiftByOpt => Transform::ShiftByOpt,
                TransformSpec::Hinge(a) => Transform::Hinge { level: *a },
                TransformSpec::HingeAtOpt => {
                    let x = problem.opt_point.as_deref().ok_or_else(|| {
                        Error::config(format!("hinge_at_opt needs a known minimizer of `{}`", problem.name))
                    })?;
                    Transform::Hinge { level: base.value(x) }
                }
                TransformSpec::LowerBound(qs) => {
                    let q = match qs.len() {
                        1 => qs[0],
                        m if m == n => qs[i],
                        m => {
                            return Err(Error::config(format!(
                                "lower_bound lists {m} values for {n} components"
                            )))
                        }
                    };
                    Transform::LowerBound { q }
                }
            };
            components.push(make_surrogate(SurrogateSpec { base: base.clone(), transform })?);
        }
        Ok(StochasticSurrogate {
            components,
            weights: problem.weights.clone(),
            declared_opt: problem.opt_point.clone(),
        })
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformSpec::ShiftByOpt => write!(f, "shift_opt"),
            TransformSpec::Hinge(a) => write!(f, "hinge:{a}"),
            TransformSpec::HingeAtOpt => write!(f, "hinge_at_opt"),
            TransformSpec::LowerBound(qs) => {
                let parts: Vec<String> = qs.iter().map(|q| q.to_string()).collect();
                write!(f, "lower_bound:{}", parts.join(";"))
            }
        }
    }
}

/// `ψ = ½h²` together with `h` and their subgradients.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateOracle {
    pub spec: SurrogateSpec,
    /// Sample-grid violations of `h >= 0` found at construction.
    pub warnings: Vec<String>,
}

/// Build the surrogate. `ShiftByOpt` needs the base optimal value.
pub fn make_surrogate(spec: SurrogateSpec) -> Result<SurrogateOracle> {
    let mut warnings = Vec::new();
    match spec.transform {
        Transform::ShiftByOpt => {
            spec.base.opt_value_or_err()?;
        }
        Transform::Hinge { level } if !level.is_finite() => {
            return Err(Error::config(format!("hinge level must be finite, got {level}")));
        }
        Transform::LowerBound { q } => {
            let violation = match spec.base.opt_value {
                Some(inf) => (q > inf).then(|| format!("lower bound q={q} exceeds inf f={inf}")),
                None if spec.base.dim == 1 => (0..=2000)
                    .map(|i| -10.0 + 0.01 * i as f64)
                    .find(|&x| spec.base.value(&[x]) < q)
                    .map(|x| format!("lower bound q={q} exceeds f({x})")),
                None => None,
            };
            if let Some(w) = violation {
                log::warn!("surrogate of `{}`: {w}; h takes negative values", spec.base.name);
                warnings.push(w);
            }
        }
        _ => {}
    }
    Ok(SurrogateOracle { spec, warnings })
}

impl SurrogateOracle {
    pub fn base(&self) -> &FunctionOracle {
        &self.spec.base
    }

    pub fn dim(&self) -> usize {
        self.spec.base.dim
    }

    /// `h` from an already evaluated base value.
    pub fn h_from_value(&self, f: f64) -> f64 {
        match self.spec.transform {
            Transform::ShiftByOpt => f - self.spec.base.opt_value.unwrap_or(f64::NAN),
            Transform::Hinge { level } => (f - level).max(0.0),
            Transform::LowerBound { q } => f - q,
        }
    }

    pub fn h_value(&self, x: &[f64]) -> f64 {
        self.h_from_value(self.spec.base.value(x))
    }

    /// Subgradient of `h`. At the hinge boundary the zero selection (`α = 0`) is used.
    pub fn h_subgradient(&self, x: &[f64]) -> Vec<f64> {
        let g = self.spec.base.subgradient(x);
        match self.spec.transform {
            Transform::Hinge { level } => {
                if self.spec.base.value(x) > level {
                    g
                } else {
                    vec![0.0; g.len()]
                }
            }
            _ => g,
        }
    }

    pub fn h_subgradient_vertices(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let vertices = self.spec.base.subgradient_vertices(x);
        match self.spec.transform {
            Transform::Hinge { level } => {
                let f = self.spec.base.value(x);
                let zero = vec![0.0; self.dim()];
                if f > level {
                    vertices
                } else if f < level {
                    vec![zero]
                } else {
                    std::iter::once(zero).chain(vertices).collect()
                }
            }
            _ => vertices,
        }
    }

    pub fn psi_value(&self, x: &[f64]) -> f64 {
        let h = self.h_value(x);
        0.5 * h * h
    }

    pub fn psi_subgradient(&self, x: &[f64]) -> Vec<f64> {
        let h = self.h_value(x);
        linalg::scale(&self.h_subgradient(x), h)
    }

    /// A minimizer of `ψ`. Every transform here is a nondecreasing function of
    /// `f`, so a declared minimizer of the base is one; otherwise a dense 1-d
    /// scan at step `1e-4` is used.
    pub fn psi_minimizer(&self) -> Result<Vec<f64>> {
        if let Some(x) = &self.spec.base.opt_point {
            return Ok(x.clone());
        }
        if self.dim() == 1 {
            let x = linalg::minimize_1d(|x| self.psi_value(&[x]), -10.0, 10.0, 1e-4);
            return Ok(vec![x]);
        }
        Err(Error::config(format!(
            "no declared minimizer for the surrogate of `{}`",
            self.spec.base.name
        )))
    }

    pub fn h_oracle(&self) -> HOracle<'_> {
        HOracle(self)
    }

    pub fn psi_oracle(&self) -> PsiOracle<'_> {
        PsiOracle(self)
    }
}

/// `h` viewed as an [`Oracle`].
pub struct HOracle<'a>(&'a SurrogateOracle);

impl Oracle for HOracle<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.0.h_value(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.0.h_subgradient(x)
    }
    fn subgradient_vertices(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.0.h_subgradient_vertices(x)
    }
    fn kinks(&self) -> Vec<f64> {
        self.0.spec.base.kinks()
    }
}

/// `ψ = ½h²` viewed as an [`Oracle`].
pub struct PsiOracle<'a>(&'a SurrogateOracle);

impl Oracle for PsiOracle<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.0.psi_value(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.0.psi_subgradient(x)
    }
    fn subgradient_vertices(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let h = self.0.h_value(x);
        self.0
            .h_subgradient_vertices(x)
            .into_iter()
            .map(|g| linalg::scale(&g, h))
            .collect()
    }
    fn kinks(&self) -> Vec<f64> {
        self.0.spec.base.kinks()
    }
}

/// One surrogate per component, with `H(x) = Σ w_i h_i(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticSurrogate {
    pub components: Vec<SurrogateOracle>,
    pub weights: Vec<f64>,
    declared_opt: Option<Vec<f64>>,
}

impl StochasticSurrogate {
    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn big_h(&self, x: &[f64]) -> f64 {
        self.components.iter().zip(&self.weights).map(|(s, w)| w * s.h_value(x)).sum()
    }

    /// A minimizer of `H`, used as the comparator point in the bounds.
    pub fn comparator(&self) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return self.declared_opt.clone().ok_or_else(|| {
                Error::config("minimizer of H is not declared and the problem is not one-dimensional")
            });
        }
        let x = linalg::minimize_1d(|x| self.big_h(&[x]), -10.0, 10.0, 1e-4);
        match &self.declared_opt {
            Some(d) if self.big_h(d) <= self.big_h(&[x]) + 1e-12 => Ok(d.clone()),
            _ => Ok(vec![x]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{abs1d, fig1, quad, shifted_quad, sps_fail, ScalarPiece};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn surrogate(base: FunctionOracle, transform: Transform) -> SurrogateOracle {
        make_surrogate(SurrogateSpec { base, transform }).unwrap()
    }

    #[test]
    fn make_surrogate_examples() {
        let s = surrogate(quad(1), Transform::ShiftByOpt);
        assert_eq!(s.psi_value(&[2.0]), 2.0);
        let s = surrogate(fig1(), Transform::ShiftByOpt);
        assert_eq!(s.psi_value(&[-1.0]), 0.0);
        let s = surrogate(shifted_quad(0.5), Transform::Hinge { level: 0.0 });
        assert_eq!(s.h_value(&[1.0]), 1.0);
        assert_eq!(s.psi_value(&[1.0]), 0.5);
    }

    #[test]
    fn shift_by_opt_needs_optimal_value() {
        let f = FunctionOracle::scalar("no_opt", ScalarPiece::quadratic(1.0, 0.0, 0.0));
        let err = make_surrogate(SurrogateSpec { base: f, transform: Transform::ShiftByOpt }).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn lower_bound_above_infimum_warns() {
        let s = surrogate(quad(1), Transform::LowerBound { q: 1.0 });
        assert_eq!(s.warnings.len(), 1);
        let s = surrogate(quad(1), Transform::LowerBound { q: -1.0 });
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn hinge_subgradient_cases() {
        let s = surrogate(abs1d(), Transform::Hinge { level: 0.0 });
        assert_eq!(s.h_subgradient(&[3.0]), vec![1.0]);
        let s = surrogate(abs1d(), Transform::Hinge { level: 1.0 });
        assert_eq!(s.h_subgradient(&[0.5]), vec![0.0]);
        let s = surrogate(abs1d(), Transform::Hinge { level: 0.5 });
        assert_eq!(s.h_subgradient(&[0.5]), vec![0.0]);
        assert_eq!(s.h_subgradient_vertices(&[0.5]), vec![vec![0.0], vec![1.0]]);
    }

    #[test]
    fn psi_is_half_h_squared_and_chain_rule() {
        let s = surrogate(fig1(), Transform::Hinge { level: 2.0 });
        for x in [-5.0, -2.0, -1.0, 0.3, 4.0] {
            let h = s.h_value(&[x]);
            assert_eq!(s.psi_value(&[x]), 0.5 * h * h);
            assert_eq!(s.psi_subgradient(&[x]), vec![h * s.h_subgradient(&[x])[0]]);
        }
    }

    #[test]
    fn psi_subgradient_inequality_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cases = vec![
            surrogate(fig1(), Transform::ShiftByOpt),
            surrogate(fig1(), Transform::Hinge { level: 2.0 }),
            surrogate(shifted_quad(0.5), Transform::Hinge { level: 0.0 }),
            surrogate(abs1d(), Transform::LowerBound { q: -1.0 }),
            surrogate(quad(1), Transform::Hinge { level: 1.0 }),
        ];
        for s in &cases {
            for _ in 0..1000 {
                let x = rng.gen_range(-10.0..10.0);
                let g = s.psi_subgradient(&[x])[0];
                let px = s.psi_value(&[x]);
                for _ in 0..1000 {
                    let y = rng.gen_range(-10.0..10.0);
                    let margin = s.psi_value(&[y]) - px - g * (y - x);
                    assert!(margin >= -1e-9 * (1.0 + px.abs()), "{:?} at {x},{y}", s.spec.transform);
                }
            }
        }
    }

    #[test]
    fn lipschitz_base_bounds_psi_subgradient() {
        let s = surrogate(abs1d(), Transform::ShiftByOpt);
        for i in 0..=200 {
            let x = -10.0 + 0.1 * i as f64;
            assert!(linalg::norm(&s.psi_subgradient(&[x])) <= 1.0 * s.h_value(&[x]) + 1e-12);
        }
    }

    #[test]
    fn transform_spec_grammar() {
        assert_eq!(TransformSpec::parse("shift_opt").unwrap(), TransformSpec::ShiftByOpt);
        assert_eq!(TransformSpec::parse("shift_per_component_inf").unwrap(), TransformSpec::ShiftByOpt);
        assert_eq!(TransformSpec::parse("hinge:0.5").unwrap(), TransformSpec::Hinge(0.5));
        assert_eq!(TransformSpec::parse("hinge:a=0.5").unwrap(), TransformSpec::Hinge(0.5));
        assert_eq!(
            TransformSpec::parse("lower_bound:q=4;8").unwrap(),
            TransformSpec::LowerBound(vec![4.0, 8.0])
        );
        assert!(TransformSpec::parse("hinge").is_err());
        assert!(TransformSpec::parse("log").is_err());
    }

    #[test]
    fn sps_fail_h_and_comparator() {
        let ss = TransformSpec::ShiftByOpt.build(&sps_fail()).unwrap();
        // h1 = (x+1)^2, h2 = 2(x-1)^2, H = (x+1)^2/2 + (x-1)^2
        let x = ss.comparator().unwrap();
        assert_eq!(x, vec![1.0 / 3.0]);
        assert!((ss.big_h(&x) - 4.0 / 3.0).abs() < 1e-12);
        let sp = TransformSpec::HingeAtOpt.build(&sps_fail()).unwrap();
        assert!(sp.big_h(&[1.0 / 3.0]).abs() < 1e-12);
    }
}

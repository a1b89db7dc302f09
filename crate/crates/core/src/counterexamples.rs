//! Failure modes of the generalized Polyak map when `h* > 0`, and the
//! stochastic random walk of SPS without interpolation.

use std::f64::consts::PI;

use log::warn;
use num_bigint::BigInt;
use num_traits::{Float, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{cycle_quad, shifted_quad, FunctionOracle, Oracle, StochasticProblem};
use crate::steppers::{map_t, sps_step, ComponentSampler};

/// Binary fixed-point number with [`Fixed::FRAC_BITS`] fractional bits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fixed(BigInt);

impl Fixed {
    pub const FRAC_BITS: u32 = 512;

    /// Exact conversion of a finite double.
    pub fn from_f64(v: f64) -> Fixed {
        assert!(v.is_finite(), "cannot represent {v} in fixed point");
        let (mantissa, exp, sign) = v.integer_decode();
        let m = BigInt::from(mantissa) * i32::from(sign);
        let shift = i32::from(exp) + Self::FRAC_BITS as i32;
        Fixed(if shift >= 0 { m << shift as u32 } else { m >> (-shift) as u32 })
    }

    pub fn from_int(v: i64) -> Fixed {
        Fixed(BigInt::from(v) << Self::FRAC_BITS)
    }

    pub fn to_f64(&self) -> f64 {
        // keep 64 significant bits before scaling so huge integers do not overflow
        let bits = self.0.bits();
        if bits <= 1000 {
            return self.0.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(Self::FRAC_BITS as i32));
        }
        let drop = bits - 64;
        (&self.0 >> drop).to_f64().unwrap_or(f64::NAN) * 2f64.powi(drop as i32 - Self::FRAC_BITS as i32)
    }

    pub fn add(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Fixed) -> Fixed {
        Fixed(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Fixed) -> Fixed {
        Fixed((&self.0 * &o.0) >> Self::FRAC_BITS)
    }

    pub fn div(&self, o: &Fixed) -> Fixed {
        assert!(!o.0.is_zero(), "fixed-point division by zero");
        Fixed((&self.0 << Self::FRAC_BITS) / &o.0)
    }

    pub fn sqrt(&self) -> Fixed {
        assert!(!self.0.is_negative(), "square root of a negative number");
        Fixed((&self.0 << Self::FRAC_BITS).sqrt())
    }

    pub fn abs(&self) -> Fixed {
        Fixed(self.0.abs())
    }

    /// `2^-k`
    pub fn epsilon(k: u32) -> Fixed {
        Fixed(BigInt::from(1) << (Self::FRAC_BITS - k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Double,
    /// 512-bit binary fixed point.
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    pub precision: Precision,
    pub x1: f64,
    /// `x_1, x_2, x_3`.
    pub points: [f64; 3],
    /// `|x_4 - x_1|`.
    pub closure_error: f64,
    /// `Π T'(x_i)` over one period, computed from the iterates.
    pub multiplier: f64,
    /// Growth per period of a `2^-300` perturbation of `x_1` (extended precision only).
    pub perturbation_growth: Option<f64>,
    pub iterates: Vec<f64>,
    /// `h((1/t) Σ_{i≤t} x_i) - h*` for `t = 1, …`.
    pub avg_gap: Vec<f64>,
    /// Gap of the exact cycle average `(√7/3)² = 7/9`.
    pub cycle_average_gap: f64,
}

impl CycleReport {
    /// Smallest running-average gap over `t ≤ window`.
    pub fn min_avg_gap(&self, window: usize) -> f64 {
        self.avg_gap.iter().take(window).copied().fold(f64::INFINITY, f64::min)
    }
}

/// `cot(π/7)` in fixed point: the attracting fixed point of the inverse
/// branches `F₊∘F₊∘F₋` with `F±(y) = y ± √(y²+1)`, which contract by 1/8 per round.
pub fn cot_pi_over_7() -> Fixed {
    let one = Fixed::from_int(1);
    let branch = |y: &Fixed, plus: bool| {
        let r = y.mul(y).add(&one).sqrt();
        if plus {
            y.add(&r)
        } else {
            y.sub(&r)
        }
    };
    let mut x = Fixed::from_int(2);
    for _ in 0..(Fixed::FRAC_BITS as usize / 3 + 16) {
        x = branch(&branch(&branch(&x, false), true), true);
    }
    x
}

fn cycle_step_fixed(x: &Fixed) -> Fixed {
    // T(x) = x - (x² + 1)/(2x)
    let h = x.mul(x).add(&Fixed::from_int(1));
    x.sub(&h.div(&x.add(x)))
}

/// Iterate the Polyak map on `h(x) = x² + 1` from `cot(π/7)` for `steps` iterates.
pub fn run_cycle(precision: Precision, steps: usize) -> Result<CycleReport> {
    if steps < 4 {
        return Err(Error::config("the cycle needs at least 4 iterates"));
    }
    let exact_x1 = cot_pi_over_7();
    let (iterates, avg_gap, perturbation_growth) = match precision {
        Precision::Double => {
            let h = cycle_quad();
            let mut xs = vec![exact_x1.to_f64()];
            while xs.len() < steps {
                let next = map_t(&h, &[*xs.last().expect("nonempty")])[0];
                xs.push(next);
            }
            let mut sum = 0.0;
            let gaps = xs
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    sum += x;
                    let m = sum / (i + 1) as f64;
                    m * m
                })
                .collect();
            (xs, gaps, None)
        }
        Precision::Extended => {
            let mut xs = vec![exact_x1.clone()];
            while xs.len() < steps {
                let next = cycle_step_fixed(xs.last().expect("nonempty"));
                xs.push(next);
            }
            let mut sum = Fixed::from_int(0);
            let gaps = xs
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    sum = sum.add(x);
                    let m = sum.div(&Fixed::from_int(i as i64 + 1));
                    m.mul(&m).to_f64()
                })
                .collect();
            let periods = 20;
            let delta = Fixed::epsilon(300);
            let (mut a, mut b) = (exact_x1.clone(), exact_x1.add(&delta));
            for _ in 0..3 * periods {
                a = cycle_step_fixed(&a);
                b = cycle_step_fixed(&b);
            }
            let growth = (b.sub(&a).abs().to_f64() / delta.to_f64()).powf(1.0 / periods as f64);
            (xs.iter().map(Fixed::to_f64).collect(), gaps, Some(growth))
        }
    };
    let points = [iterates[0], iterates[1], iterates[2]];
    let multiplier = points.iter().map(|x| (x * x + 1.0) / (2.0 * x * x)).product();
    Ok(CycleReport {
        precision,
        x1: iterates[0],
        points,
        closure_error: (iterates[3] - iterates[0]).abs(),
        multiplier,
        perturbation_growth,
        iterates,
        avg_gap,
        cycle_average_gap: 7.0 / 9.0,
    })
}

/// Reference values `cot(π/7), cot(2π/7), cot(4π/7)` in double precision.
pub fn cycle_points_reference() -> [f64; 3] {
    [1.0 / (PI / 7.0).tan(), 1.0 / (2.0 * PI / 7.0).tan(), 1.0 / (4.0 * PI / 7.0).tan()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// `h` is `L`-self-bounded with `μ`-quadratic growth.
    SelfBoundedQg,
    /// `h` is `L`-Lipschitz with a `μ`-sharp minimum.
    LipschitzSharp,
}

/// `S = {y ≠ x*: h(y) - h* < c·h*}` with `c = μ/(8L-μ)` or `μ/(2L-μ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityRegion {
    pub kind: RegionKind,
    pub h_star: f64,
    pub mu: f64,
    pub l: f64,
    pub c: f64,
    pub threshold: f64,
}

impl InstabilityRegion {
    pub fn new(kind: RegionKind, h_star: f64, mu: f64, l: f64) -> Result<Self> {
        if !(h_star > 0.0 && mu > 0.0 && l > 0.0) {
            return Err(Error::config(format!(
                "instability region needs h* > 0, μ > 0, L > 0 (got {h_star}, {mu}, {l})"
            )));
        }
        let denom = match kind {
            RegionKind::SelfBoundedQg => 8.0 * l - mu,
            RegionKind::LipschitzSharp => 2.0 * l - mu,
        };
        if denom <= 0.0 {
            return Err(Error::config(format!("region denominator {denom} is not positive")));
        }
        let c = mu / denom;
        Ok(InstabilityRegion { kind, h_star, mu, l, c, threshold: c * h_star })
    }

    pub fn for_oracle(kind: RegionKind, h: &FunctionOracle, mu: f64, l: f64) -> Result<Self> {
        Self::new(kind, h.opt_value_or_err()?, mu, l)
    }

    pub fn contains(&self, h: &impl Oracle, x_star: &[f64], x: &[f64]) -> bool {
        x != x_star && h.value(x) - self.h_star < self.threshold
    }

    /// Radius of a ball around `x*` that contains the region, from the growth condition.
    pub fn enclosing_radius(&self) -> f64 {
        match self.kind {
            RegionKind::SelfBoundedQg => (2.0 * self.threshold / self.mu).sqrt(),
            RegionKind::LipschitzSharp => self.threshold / self.mu,
        }
    }
}

/// `n` points drawn uniformly from the enclosing ball and kept when they
/// fall in the region (rejection sampling, at most `1000·n` draws).
pub fn sample_region(h: &FunctionOracle, region: &InstabilityRegion, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let x_star = h.opt_point_or_err()?.to_vec();
    let r = region.enclosing_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n.saturating_mul(1000) {
        if out.len() == n {
            break;
        }
        let offset: Vec<f64> = (0..h.dim).map(|_| rng.gen_range(-r..r)).collect();
        if linalg::norm(&offset) > r {
            continue;
        }
        let x: Vec<f64> = x_star.iter().zip(&offset).map(|(a, b)| a + b).collect();
        if region.contains(h, &x_star, &x) {
            out.push(x);
        }
    }
    if out.len() < n {
        return Err(Error::config(format!("only {} of {n} samples landed in the region", out.len())));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityReport {
    pub region: InstabilityRegion,
    pub tested: usize,
    /// Samples outside `S`.
    pub skipped: usize,
    pub expanded: usize,
    pub all_expand: bool,
    /// Smallest `‖T(x)-x*‖ / ‖x-x*‖` over tested samples.
    pub min_ratio: f64,
}

/// Check `‖T(x)-x*‖ > ‖x-x*‖` on every sample inside the region.
pub fn instability_check(h: &FunctionOracle, region: &InstabilityRegion, samples: &[Vec<f64>]) -> Result<InstabilityReport> {
    let x_star = h.opt_point_or_err()?.to_vec();
    let inside: Vec<&Vec<f64>> = samples.iter().filter(|x| region.contains(h, &x_star, x)).collect();
    let ratios: Vec<f64> = inside
        .par_iter()
        .map(|x| linalg::dist(&map_t(h, x), &x_star) / linalg::dist(x, &x_star))
        .collect();
    let expanded = ratios.iter().filter(|&&r| r > 1.0).count();
    Ok(InstabilityReport {
        region: region.clone(),
        tested: inside.len(),
        skipped: samples.len() - inside.len(),
        expanded,
        all_expand: expanded == inside.len() && !inside.is_empty(),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiFirmReport {
    pub tested: usize,
    pub violations: usize,
    /// Sample maximizing `‖T(x)-x*‖² - (‖x-x*‖² - ‖T(x)-x‖²)`.
    pub witness: Option<Vec<f64>>,
    pub worst_excess: f64,
}

/// Look for samples with `‖T(x)-x*‖² > ‖x-x*‖² - ‖T(x)-x‖²`.
pub fn quasi_firm_violations(h: &FunctionOracle, samples: &[Vec<f64>]) -> Result<QuasiFirmReport> {
    let x_star = h.opt_point_or_err()?.to_vec();
    let excess: Vec<f64> = samples
        .par_iter()
        .map(|x| {
            let tx = map_t(h, x);
            linalg::dist_sq(&tx, &x_star) - (linalg::dist_sq(x, &x_star) - linalg::dist_sq(&tx, x))
        })
        .collect();
    let mut report = QuasiFirmReport { tested: samples.len(), violations: 0, witness: None, worst_excess: f64::NEG_INFINITY };
    for (x, e) in samples.iter().zip(&excess) {
        if *e > 0.0 {
            report.violations += 1;
        }
        if *e > report.worst_excess {
            report.worst_excess = *e;
            report.witness = Some(x.clone());
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedSubregion {
    pub k: f64,
    /// Human-readable description of the set where the bound applies.
    pub description: String,
    pub stepsize_bound: f64,
    pub samples_checked: usize,
    pub max_stepsize: f64,
    pub holds: bool,
}

/// Upper bound on the map's stepsize `h(x)/‖g‖²` on `S ∖ S_k` (quadratic
/// growth) or on all of `S` (sharp minimum), checked against samples.
pub fn bounded_subregion(h: &FunctionOracle, region: &InstabilityRegion, k: f64, samples: &[Vec<f64>]) -> Result<BoundedSubregion> {
    if !(k > 1.0) {
        return Err(Error::config(format!("k must exceed 1, got {k}")));
    }
    let x_star = h.opt_point_or_err()?.to_vec();
    let c = region.c;
    let (bound, lower, description) = match region.kind {
        RegionKind::SelfBoundedQg => (
            2.0 * k * (c + 1.0) / (region.mu * c),
            c / k * region.h_star,
            format!("{:.6} <= h(x) - h* < {:.6}", c / k * region.h_star, region.threshold),
        ),
        RegionKind::LipschitzSharp => (
            (c + 1.0) * region.h_star / (region.mu * region.mu),
            f64::NEG_INFINITY,
            format!("0 < h(x) - h* < {:.6}", region.threshold),
        ),
    };
    let steps: Vec<f64> = samples
        .iter()
        .filter(|x| region.contains(h, &x_star, x) && h.value(x) - region.h_star >= lower)
        .map(|x| h.value(x) / linalg::norm_sq(&h.subgradient(x)))
        .collect();
    let max_stepsize = steps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundedSubregion {
        k,
        description,
        stepsize_bound: bound,
        samples_checked: steps.len(),
        max_stepsize,
        holds: steps.iter().all(|&s| s <= bound),
    })
}

/// `[f - f* < c·f*]` and `[f - f* < (c/(c+1))·f]`, which agree whenever `f* > 0`.
pub fn gap_equivalence(f: f64, f_star: f64, c: f64) -> (bool, bool) {
    (f - f_star < c * f_star, f - f_star < c / (c + 1.0) * f)
}

/// Largest supported preimage depth (a level holds up to `2^depth` points).
pub const MAX_PREIMAGE_DEPTH: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreimageTree {
    pub a: f64,
    /// `levels[k] = T^{-k}({0})` for `h(x) = x²/2 + a`.
    pub levels: Vec<Vec<f64>>,
}

impl PreimageTree {
    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.levels.iter().all(|lvl| {
            let n = lvl.len();
            (0..n).all(|i| (lvl[i] + lvl[n - 1 - i]).abs() <= tol * (1.0 + lvl[i].abs()))
        })
    }
}

fn dedupe_sorted(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.par_sort_unstable_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if (x - last).abs() <= tol => {}
            _ => out.push(x),
        }
    }
    out
}

/// Preimages of the minimizer under `T(x) = x/2 - a/x`: level 0 is `{0}` and
/// level `k+1` is `{x ± √(x²+2a) : x ∈ level k}`.
pub fn preimage_tree(a: f64, depth: usize) -> Result<PreimageTree> {
    if !(a > 0.0) {
        return Err(Error::config(format!("a must be positive, got {a}")));
    }
    if depth > MAX_PREIMAGE_DEPTH {
        return Err(Error::config(format!("preimage depth {depth} exceeds {MAX_PREIMAGE_DEPTH}")));
    }
    let mut levels = vec![vec![0.0]];
    for _ in 0..depth {
        let prev = levels.last().expect("nonempty");
        let next: Vec<f64> = prev
            .par_iter()
            .flat_map_iter(|&x| {
                let r = (x * x + 2.0 * a).sqrt();
                [x - r, x + r]
            })
            .collect();
        levels.push(dedupe_sorted(next, 1e-12));
    }
    Ok(PreimageTree { a, levels })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureZeroReport {
    pub a: f64,
    pub starts: usize,
    pub steps: usize,
    pub tail_start: usize,
    /// Trajectories whose whole tail stays in `|x| < delta`.
    pub converged: usize,
    /// Trajectories whose tail visits `|x| < delta` at least once.
    pub visited: usize,
    pub delta: f64,
    /// Smallest `|x_t|` over all tails.
    pub min_tail_abs: f64,
    /// Smallest per-trajectory tail maximum of `|x_t|`.
    pub min_tail_max_abs: f64,
}

/// Iterate the map on `h(x) = x²/2 + a` from `starts` uniform points in
/// `[-10, 10]` and count trajectories that settle in `|x| < delta` over the
/// final 10% of `steps`.
pub fn measure_zero_simulation(a: f64, starts: usize, steps: usize, delta: f64, seed: u64) -> Result<MeasureZeroReport> {
    if !(a > 0.0) || starts == 0 || steps < 10 {
        return Err(Error::config("need a > 0, at least one start and at least 10 steps"));
    }
    let h = shifted_quad(a);
    let tail_start = steps - steps / 10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: Vec<f64> = (0..starts).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let stats: Vec<(f64, f64)> = x0
        .par_iter()
        .map(|&x1| {
            let mut x = [x1];
            let (mut tail_min, mut tail_max) = (f64::INFINITY, 0.0f64);
            for t in 1..=steps {
                if t > tail_start {
                    tail_min = tail_min.min(x[0].abs());
                    tail_max = tail_max.max(x[0].abs());
                }
                x = [map_t(&h, &x)[0]];
            }
            (tail_min, tail_max)
        })
        .collect();
    Ok(MeasureZeroReport {
        a,
        starts,
        steps,
        tail_start,
        converged: stats.iter().filter(|s| s.1 < delta).count(),
        visited: stats.iter().filter(|s| s.0 < delta).count(),
        delta,
        min_tail_abs: stats.iter().map(|s| s.0).fold(f64::INFINITY, f64::min),
        min_tail_max_abs: stats.iter().map(|s| s.1).fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovChainState {
    pub step: usize,
    pub support: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl MarkovChainState {
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.support.iter().zip(&self.probabilities).map(|(x, p)| p * f(*x)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub states: Vec<MarkovChainState>,
    /// `E[F(x_t)]` for `t = 1, …`.
    pub expected_f: Vec<f64>,
    pub min_f: f64,
    /// `E[F(x_t)] - min F`.
    pub gaps: Vec<f64>,
    /// Set once the support outgrew the cap and the chain switched to sampling.
    pub monte_carlo_from: Option<usize>,
}

/// Largest support tracked exactly before falling back to sampling.
pub const CHAIN_SUPPORT_CAP: usize = 10_000;
const CHAIN_MERGE_TOL: f64 = 1e-12;
const CHAIN_PARTICLES: usize = 100_000;

fn merge_support(mut pts: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut xs, mut ps): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for (x, p) in pts {
        match xs.last() {
            Some(&last) if (x - last).abs() <= CHAIN_MERGE_TOL => *ps.last_mut().expect("paired") += p,
            _ => {
                xs.push(x);
                ps.push(p);
            }
        }
    }
    (xs, ps)
}

/// Exact distribution of SPS iterates `x - min((f_i-f_i*)/(c‖g‖²), γ_b) g` on
/// a one-dimensional finite sum, starting from a point mass at `x1`.
pub fn exact_sps_chain(problem: &StochasticProblem, x1: f64, steps: usize, c: f64, gamma_b: f64) -> Result<ChainReport> {
    if problem.dim() != 1 {
        return Err(Error::config("the exact chain is implemented for one-dimensional problems"));
    }
    if steps == 0 {
        return Err(Error::config("steps must be at least 1"));
    }
    let min_f = problem.objective_minimum()?;
    let objective = |x: f64| problem.objective(&[x]);
    let step = |x: f64, i: usize| -> Result<f64> { Ok(sps_step(&problem.components[i], &[x], c, gamma_b, i)?.1[0]) };

    let mut states = vec![MarkovChainState { step: 1, support: vec![x1], probabilities: vec![1.0] }];
    let mut particles: Option<Vec<f64>> = None;
    let mut monte_carlo_from = None;
    let mut sampler = ComponentSampler::new(0, &problem.weights);
    let mut draws = 0usize;

    while states.len() < steps {
        let cur = states.last().expect("nonempty");
        let t = cur.step + 1;
        let next = if let Some(ps) = particles.as_mut() {
            for x in ps.iter_mut() {
                draws += 1;
                *x = step(*x, sampler.draw(draws))?;
            }
            let n = ps.len() as f64;
            let (support, probabilities) = merge_support(ps.iter().map(|&x| (x, 1.0 / n)).collect());
            MarkovChainState { step: t, support, probabilities }
        } else {
            let mut pts = Vec::with_capacity(cur.support.len() * problem.components.len());
            for (&x, &p) in cur.support.iter().zip(&cur.probabilities) {
                for (i, &w) in problem.weights.iter().enumerate() {
                    if w > 0.0 {
                        pts.push((step(x, i)?, p * w));
                    }
                }
            }
            let (support, probabilities) = merge_support(pts);
            if support.len() > CHAIN_SUPPORT_CAP {
                warn!("chain support reached {} points at step {t}; switching to Monte Carlo", support.len());
                monte_carlo_from = Some(t);
                let mut rng = ChaCha8Rng::seed_from_u64(t as u64);
                let cumulative: Vec<f64> = probabilities
                    .iter()
                    .scan(0.0, |acc, p| {
                        *acc += p;
                        Some(*acc)
                    })
                    .collect();
                let total = *cumulative.last().expect("nonempty");
                let ps: Vec<f64> = (0..CHAIN_PARTICLES)
                    .map(|_| {
                        let u = rng.gen::<f64>() * total;
                        support[cumulative.partition_point(|&c| c <= u).min(support.len() - 1)]
                    })
                    .collect();
                let n = ps.len() as f64;
                let (s, p) = merge_support(ps.iter().map(|&x| (x, 1.0 / n)).collect());
                particles = Some(ps);
                MarkovChainState { step: t, support: s, probabilities: p }
            } else {
                MarkovChainState { step: t, support, probabilities }
            }
        };
        states.push(next);
    }
    let expected_f: Vec<f64> = states.iter().map(|s| s.expectation(objective)).collect();
    let gaps = expected_f.iter().map(|e| e - min_f).collect();
    Ok(ChainReport { states, expected_f, min_f, gaps, monte_carlo_from })
}

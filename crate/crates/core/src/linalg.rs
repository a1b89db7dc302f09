//! Small dense-vector helpers. Points and subgradients are plain `Vec<f64>`.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

/// `x - coef * dir`
pub fn step(x: &[f64], coef: f64, dir: &[f64]) -> Vec<f64> {
    x.iter().zip(dir).map(|(xi, di)| xi - coef * di).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

pub fn is_zero(a: &[f64]) -> bool {
    a.iter().all(|&x| x == 0.0)
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Golden-section refinement of a dense scan; used where a 1-d minimizer is
/// needed but not declared.
pub fn minimize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, scan_step: f64) -> f64 {
    let n = ((hi - lo) / scan_step).round() as usize;
    let mut best = lo;
    let mut best_val = f(lo);
    for i in 1..=n {
        let x = lo + i as f64 * scan_step;
        let v = f(x);
        if v < best_val {
            best_val = v;
            best = x;
        }
    }
    let (mut a, mut b) = ((best - scan_step).max(lo), (best + scan_step).min(hi));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        if b - a < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        let c = b - inv_phi * (b - a);
        let d = a + inv_phi * (b - a);
        if f(c) <= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mid = 0.5 * (a + b);
    if f(mid) <= best_val {
        mid
    } else {
        best
    }
}

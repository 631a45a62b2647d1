//! Dense BFGS with a strong-Wolfe line search.

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the gradient infinity norm drops below this.
    pub gtol: f64,
    /// Stop when the objective falls below this (absolute).
    pub f_target: f64,
    /// Stop when the objective improved by less than `stall_tol` over the
    /// last `stall_window` iterations.
    pub stall_window: usize,
    pub stall_tol: f64,
    pub c1: f64,
    pub c2: f64,
    /// Absolute resolution of the objective; value changes below it are
    /// treated as round-off by the line search.
    pub f_noise: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            gtol: 1e-8,
            f_target: 0.0,
            stall_window: 50,
            stall_tol: 1e-10,
            c1: 1e-4,
            c2: 0.9,
            f_noise: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Target,
    Stalled,
    MaxIter,
    LineSearch,
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_inf: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub history: Vec<f64>,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Probe {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let (mut fx, mut g) = f(&x0);
    let mut x = x0;
    let mut evaluations = 1;
    let mut history = vec![fx];
    // inverse Hessian approximation, row-major
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    let mut first = true;
    let mut iterations = 0;
    let termination = loop {
        if inf_norm(&g) < opts.gtol {
            break Termination::Gradient;
        }
        if fx < opts.f_target {
            break Termination::Target;
        }
        if iterations >= opts.max_iter {
            break Termination::MaxIter;
        }
        if history.len() > opts.stall_window {
            let old = history[history.len() - 1 - opts.stall_window];
            if old - fx < opts.stall_tol {
                break Termination::Stalled;
            }
        }
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&p, &g);
        if !(slope < 0.0) {
            // lost descent: reset curvature information
            h.iter_mut().enumerate().for_each(|(ij, v)| *v = if ij / n == ij % n { 1.0 } else { 0.0 });
            p = g.iter().map(|v| -v).collect();
            slope = dot(&p, &g);
            first = true;
        }
        let alpha0 = if first { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let Some(next) = line_search(&mut f, &x, fx, slope, &p, alpha0, opts, &mut evaluations) else {
            if first {
                break Termination::LineSearch;
            }
            h.iter_mut().enumerate().for_each(|(ij, v)| *v = if ij / n == ij % n { 1.0 } else { 0.0 });
            first = true;
            continue;
        };
        let s: Vec<f64> = next.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if first {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
                first = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let coef = (1.0 + rho * yhy) * rho;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        x = next.x;
        fx = next.f;
        g = next.g;
        history.push(fx);
        iterations += 1;
    };
    BfgsResult { grad_inf: inf_norm(&g), x, f: fx, iterations, evaluations, history, termination }
}

struct Point {
    a: f64,
    f: f64,
    s: f64,
}

/// Strong Wolfe conditions, or the approximate form
/// `c2·s0 ≤ s(a) ≤ (1 − 2c1)|s0|` with `f(a) ≤ f0 + f_noise` that stays
/// usable once function differences reach round-off.
fn acceptable(pt: &Point, f0: f64, s0: f64, opts: &BfgsOptions) -> bool {
    let strong = pt.f <= f0 + opts.c1 * pt.a * s0 && pt.s.abs() <= -opts.c2 * s0;
    let approx = pt.f <= f0 + opts.f_noise && pt.s >= opts.c2 * s0 && pt.s <= (1.0 - 2.0 * opts.c1) * -s0;
    strong || approx
}

/// The step overshoots once the slope turns nonnegative or sufficient
/// decrease fails by more than the noise allowance.
fn overshoots(pt: &Point, f0: f64, s0: f64, opts: &BfgsOptions) -> bool {
    pt.s >= 0.0 || pt.f > f0 + opts.c1 * pt.a * s0 + opts.f_noise
}

#[allow(clippy::too_many_arguments)]
fn line_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    s0: f64,
    p: &[f64],
    alpha0: f64,
    opts: &BfgsOptions,
    evals: &mut usize,
) -> Option<Probe>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut probe = |a: f64, evals: &mut usize| {
        let xa: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect();
        let (fa, ga) = f(&xa);
        *evals += 1;
        let s = dot(&ga, p);
        (Point { a, f: fa, s }, Probe { x: xa, f: fa, g: ga })
    };
    let mut lo = Point { a: 0.0, f: f0, s: s0 };
    let mut lo_probe: Option<Probe> = None;
    let mut a = alpha0;
    let mut hi = None;
    for _ in 0..60 {
        let (pt, pr) = probe(a, evals);
        if !pt.f.is_finite() {
            hi = Some(Point { a, f: f64::INFINITY, s: f64::INFINITY });
            break;
        }
        if acceptable(&pt, f0, s0, opts) {
            return Some(pr);
        }
        if overshoots(&pt, f0, s0, opts) {
            hi = Some(pt);
            break;
        }
        lo = pt;
        lo_probe = Some(pr);
        a *= 4.0;
    }
    let mut hi = hi?;
    for _ in 0..80 {
        let width = hi.a - lo.a;
        if width <= 1e-14 * hi.a {
            break;
        }
        let mut a = if hi.s.is_finite() && hi.s >= 0.0 && hi.s > lo.s {
            // secant on the slope
            lo.a - lo.s * width / (hi.s - lo.s)
        } else if hi.f.is_finite() {
            cubic_min((lo.a, lo.f, lo.s), (hi.a, hi.f, hi.s)).unwrap_or(lo.a + 0.5 * width)
        } else {
            lo.a + 0.1 * width
        };
        if !(a > lo.a + 0.01 * width && a < hi.a - 0.01 * width) {
            a = lo.a + 0.5 * width;
        }
        let (pt, pr) = probe(a, evals);
        if pt.f.is_finite() && acceptable(&pt, f0, s0, opts) {
            return Some(pr);
        }
        if !pt.f.is_finite() || overshoots(&pt, f0, s0, opts) {
            hi = pt;
        } else {
            lo = pt;
            lo_probe = Some(pr);
        }
    }
    // fall back to the furthest point that still descends
    lo_probe.filter(|b| b.f <= f0 + opts.f_noise)
}

/// Minimizer of the cubic through two points with given slopes, if it lies
/// inside the bracket.
fn cubic_min(a: (f64, f64, f64), b: (f64, f64, f64)) -> Option<f64> {
    let (x0, f0, g0) = a;
    let (x1, f1, g1) = b;
    let d1 = g0 + g1 - 3.0 * (f0 - f1) / (x0 - x1);
    let disc = d1 * d1 - g0 * g1;
    if disc < 0.0 {
        return None;
    }
    let d2 = (x1 - x0).signum() * disc.sqrt();
    let t = x1 - (x1 - x0) * (g1 + d2 - d1) / (g1 - g0 + 2.0 * d2);
    t.is_finite().then_some(t)
}

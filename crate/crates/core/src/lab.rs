//! Gradient descent on concrete functions, for probing how close actual
//! trajectories come to the worst-case rate.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{rate_bound, ProblemInstance};
use crate::report::{float17, float17_opt, trial_rng};

/// Relative slack used when checking that a function's curvature lies in
/// `[μ, L]`.
const CURVATURE_SLACK: f64 = 1e-12;

/// A function with analytic gradient and, when it is bounded below, a known
/// minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FunctionSpec {
    /// `½ Σ λ_i x_i²`.
    Quadratic { eigenvalues: Vec<f64> },
    /// `c/2 ‖x‖²` inside the ball of radius `r`, `c r (‖x‖ − r/2)` outside.
    Huber { curvature: f64, radius: f64, dim: usize },
    /// One-dimensional, with second derivative `curvatures[i]` on the `i`-th
    /// piece cut out by the sorted `breakpoints`, and `f(0) = f'(0) = 0`.
    PiecewiseQuadratic { breakpoints: Vec<f64>, curvatures: Vec<f64> },
}

impl FunctionSpec {
    pub fn quadratic(eigenvalues: Vec<f64>) -> Result<Self> {
        let s = FunctionSpec::Quadratic { eigenvalues };
        s.validate()?;
        Ok(s)
    }

    pub fn huber(curvature: f64, radius: f64, dim: usize) -> Result<Self> {
        let s = FunctionSpec::Huber { curvature, radius, dim };
        s.validate()?;
        Ok(s)
    }

    pub fn piecewise_quadratic(breakpoints: Vec<f64>, curvatures: Vec<f64>) -> Result<Self> {
        let s = FunctionSpec::PiecewiseQuadratic { breakpoints, curvatures };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInstance(m));
        match self {
            FunctionSpec::Quadratic { eigenvalues } => {
                if eigenvalues.is_empty() {
                    return bad("quadratic needs at least one eigenvalue".into());
                }
                if eigenvalues.iter().any(|v| !v.is_finite()) {
                    return bad("eigenvalues must be finite".into());
                }
            }
            FunctionSpec::Huber { curvature, radius, dim } => {
                if !(*curvature > 0.0 && curvature.is_finite()) {
                    return bad(format!("huber curvature must be positive, got {curvature}"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return bad(format!("huber radius must be positive, got {radius}"));
                }
                if *dim == 0 {
                    return bad("huber dimension must be positive".into());
                }
            }
            FunctionSpec::PiecewiseQuadratic { breakpoints, curvatures } => {
                if curvatures.len() != breakpoints.len() + 1 {
                    return bad(format!(
                        "{} breakpoints need {} curvatures, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        curvatures.len()
                    ));
                }
                if breakpoints.iter().chain(curvatures).any(|v| !v.is_finite()) {
                    return bad("breakpoints and curvatures must be finite".into());
                }
                if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("breakpoints must be strictly increasing".into());
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        match self {
            FunctionSpec::Quadratic { eigenvalues } => eigenvalues.len(),
            FunctionSpec::Huber { dim, .. } => *dim,
            FunctionSpec::PiecewiseQuadratic { .. } => 1,
        }
    }

    /// Smallest and largest curvature, i.e. the tightest `(μ, L)` the
    /// function belongs to.
    pub fn curvature_range(&self) -> (f64, f64) {
        let span = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        match self {
            FunctionSpec::Quadratic { eigenvalues } => span(eigenvalues),
            FunctionSpec::Huber { curvature, .. } => (0.0, *curvature),
            FunctionSpec::PiecewiseQuadratic { curvatures, .. } => span(curvatures),
        }
    }

    /// Whether the function lies in the class with parameters `(μ, L)`.
    pub fn fits(&self, mu: f64, l: f64) -> bool {
        let (lo, hi) = self.curvature_range();
        let slack = CURVATURE_SLACK * l.abs().max(mu.abs()).max(1.0);
        lo >= mu - slack && hi <= l + slack
    }

    /// `f*`, when the function is bounded below. Every variant has `0` as a
    /// stationary point with value `0`.
    pub fn f_star(&self) -> Option<f64> {
        (self.curvature_range().0 >= 0.0).then_some(0.0)
    }

    pub fn minimizer(&self) -> Option<Vec<f64>> {
        self.f_star().map(|_| vec![0.0; self.dimension()])
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::Shape(format!("point has dimension {}, function has {}", x.len(), self.dimension())));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            FunctionSpec::Quadratic { eigenvalues } => 0.5 * eigenvalues.iter().zip(x).map(|(l, v)| l * v * v).sum::<f64>(),
            FunctionSpec::Huber { curvature, radius, .. } => {
                let norm = norm(x);
                if norm <= *radius {
                    0.5 * curvature * norm * norm
                } else {
                    curvature * radius * (norm - 0.5 * radius)
                }
            }
            FunctionSpec::PiecewiseQuadratic { breakpoints, curvatures } => {
                let (base, f0, d0, c) = piece_base(breakpoints, curvatures, x[0]);
                let h = x[0] - base;
                f0 + d0 * h + 0.5 * c * h * h
            }
        })
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(match self {
            FunctionSpec::Quadratic { eigenvalues } => eigenvalues.iter().zip(x).map(|(l, v)| l * v).collect(),
            FunctionSpec::Huber { curvature, radius, .. } => {
                let norm = norm(x);
                let factor = if norm <= *radius { *curvature } else { curvature * radius / norm };
                x.iter().map(|v| factor * v).collect()
            }
            FunctionSpec::PiecewiseQuadratic { breakpoints, curvatures } => {
                let (base, _, d0, c) = piece_base(breakpoints, curvatures, x[0]);
                vec![d0 + c * (x[0] - base)]
            }
        })
    }
}

impl FunctionSpec {
    /// `f(x) − f(y)` without forming either value, so that short steps do not
    /// cancel.
    pub fn value_drop(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        // Σ (x_i − y_i)(x_i + y_i) = ‖x‖² − ‖y‖²
        let sq_diff = |w: Option<&[f64]>| -> f64 {
            let mut acc = 0.0;
            for i in 0..x.len() {
                acc += w.map_or(1.0, |w| w[i]) * (x[i] - y[i]) * (x[i] + y[i]);
            }
            acc
        };
        Ok(match self {
            FunctionSpec::Quadratic { eigenvalues } => 0.5 * sq_diff(Some(eigenvalues)),
            FunctionSpec::Huber { curvature, radius, .. } => {
                let (nx, ny) = (norm(x), norm(y));
                if nx <= *radius && ny <= *radius {
                    0.5 * curvature * sq_diff(None)
                } else if nx > *radius && ny > *radius {
                    curvature * radius * sq_diff(None) / (nx + ny)
                } else {
                    self.value(x)? - self.value(y)?
                }
            }
            FunctionSpec::PiecewiseQuadratic { breakpoints, .. } => {
                // the trapezoid rule is exact on each quadratic piece
                let (lo, hi, sign) = if x[0] >= y[0] { (y[0], x[0], 1.0) } else { (x[0], y[0], -1.0) };
                let mut knots = vec![lo];
                knots.extend(breakpoints.iter().copied().filter(|b| *b > lo && *b < hi));
                knots.push(hi);
                let slope = |t: f64| self.gradient(&[t]).map(|g| g[0]);
                let mut acc = 0.0;
                for w in knots.windows(2) {
                    acc += 0.5 * (w[1] - w[0]) * (slope(w[0])? + slope(w[1])?);
                }
                sign * acc
            }
        })
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// For the piece containing `x`: the knot nearest to the origin (or the origin
/// itself), the value and slope there, and the piece curvature.
fn piece_base(breakpoints: &[f64], curvatures: &[f64], x: f64) -> (f64, f64, f64, f64) {
    let piece_of = |t: f64| breakpoints.partition_point(|b| *b <= t);
    let home = piece_of(0.0);
    let target = piece_of(x);
    let (mut p, mut f, mut d) = (0.0, 0.0, 0.0);
    let step = |p: f64, f: f64, d: f64, to: f64, c: f64| {
        let h = to - p;
        (to, f + d * h + 0.5 * c * h * h, d + c * h)
    };
    if target > home {
        for i in home..target {
            (p, f, d) = step(p, f, d, breakpoints[i], curvatures[i]);
        }
    } else {
        for i in (target..home).rev() {
            (p, f, d) = step(p, f, d, breakpoints[i], curvatures[i + 1]);
        }
    }
    (p, f, d, curvatures[target])
}

/// A GD run together with the shifted points `x_k⁺ = x_k − g_k/L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub stepsize: f64,
    pub smoothness: f64,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub gradients: Vec<Vec<f64>>,
    pub plus_points: Vec<Vec<f64>>,
    pub plus_values: Vec<f64>,
    /// `f_k − f_{k+1}`, computed without cancellation.
    pub drops: Vec<f64>,
}

impl Trajectory {
    pub fn iterations(&self) -> usize {
        self.points.len() - 1
    }

    pub fn final_gradient_sq(&self) -> f64 {
        sq_norm(self.gradients.last().expect("trajectory is never empty"))
    }
}

/// Runs `N` steps of `x_{k+1} = x_k − γ ∇f(x_k)`. `smoothness` is the class
/// constant `L`, used for the stepsize range and the shifted points.
pub fn run_gd(spec: &FunctionSpec, x0: &[f64], gamma: f64, n: usize, smoothness: f64) -> Result<Trajectory> {
    spec.validate()?;
    if !(smoothness > 0.0 && smoothness.is_finite()) {
        return Err(Error::InvalidInstance(format!("L must be positive, got {smoothness}")));
    }
    if !(gamma > 0.0 && gamma * smoothness < 2.0) {
        return Err(Error::InvalidInstance(format!("stepsize {gamma} outside (0, 2/L)")));
    }
    if spec.curvature_range().1 > smoothness * (1.0 + CURVATURE_SLACK) {
        return Err(Error::IncompatibleFamily(format!("function is not {smoothness}-smooth")));
    }
    spec.check_dim(x0)?;
    let mut points = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut gradients = Vec::with_capacity(n + 1);
    let mut x = x0.to_vec();
    for k in 0..=n {
        let g = spec.gradient(&x)?;
        values.push(spec.value(&x)?);
        points.push(x.clone());
        if k < n {
            x = x.iter().zip(&g).map(|(a, b)| a - gamma * b).collect();
        }
        gradients.push(g);
    }
    let plus_points = points
        .iter()
        .zip(&gradients)
        .map(|(p, g)| p.iter().zip(g).map(|(a, b)| a - b / smoothness).collect())
        .collect();
    let plus_values = values.iter().zip(&gradients).map(|(f, g)| f - sq_norm(g) / (2.0 * smoothness)).collect();
    let drops = points.windows(2).map(|w| spec.value_drop(&w[0], &w[1])).collect::<Result<_>>()?;
    Ok(Trajectory { stepsize: gamma, smoothness, points, values, gradients, plus_points, plus_values, drops })
}

/// `‖g_N‖² / (f_0 − f*)`.
pub fn performance_ratio(traj: &Trajectory, f_star: f64) -> Result<f64> {
    let gap = traj.values[0] - f_star;
    if !(gap > 0.0) {
        return Err(Error::DegenerateStart);
    }
    Ok(traj.final_gradient_sq() / gap)
}

/// `‖g_N‖² / (f_0 − f_N)`, the quantity bounded by the min form.
pub fn descent_ratio(traj: &Trajectory) -> Result<f64> {
    let gap: f64 = traj.drops.iter().sum();
    let g2 = traj.final_gradient_sq();
    if g2 == 0.0 {
        return Ok(0.0);
    }
    if !(gap > 0.0) {
        return Ok(f64::INFINITY);
    }
    Ok(g2 / gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Quadratic,
    Huber,
    PiecewiseQuadratic,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Quadratic => "quadratic",
            Family::Huber => "huber",
            Family::PiecewiseQuadratic => "piecewise_quadratic",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(Family::Quadratic),
            "huber" => Ok(Family::Huber),
            "piecewise_quadratic" | "piecewise" => Ok(Family::PiecewiseQuadratic),
            other => Err(Error::InvalidInstance(format!("unknown family {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeCriterion {
    /// `‖g_N‖²/(f_0 − f*)` against `2L · max_value`.
    Suboptimality,
    /// `‖g_N‖²/(f_0 − f_N)` against `2/(γ · min_form)`.
    Descent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub family: Family,
    pub criterion: ProbeCriterion,
    /// Trials that produced a ratio (degenerate starts are skipped).
    pub trials: usize,
    #[serde(with = "float17")]
    pub max_ratio: f64,
    #[serde(with = "float17")]
    pub bound_ratio: f64,
    /// `max_ratio / bound_ratio`; at most `1` when the bound holds.
    #[serde(with = "float17")]
    pub quotient: f64,
    /// Quotient of the single-eigenvalue-`L` quadratic, for the quadratic
    /// family.
    #[serde(with = "float17_opt")]
    pub anchor_l_quotient: Option<f64>,
    /// Quotient of the single-eigenvalue-`μ` quadratic, for the quadratic
    /// family with `μ ≠ 0`.
    #[serde(with = "float17_opt")]
    pub anchor_mu_quotient: Option<f64>,
}

/// Local search steps applied to the best piecewise-quadratic candidate.
pub const REFINE_STEPS: usize = 200;

struct Probe<'a> {
    inst: &'a ProblemInstance,
    criterion: ProbeCriterion,
}

impl Probe<'_> {
    fn ratio(&self, spec: &FunctionSpec, x0: &[f64]) -> Option<f64> {
        let traj = run_gd(spec, x0, self.inst.stepsize, self.inst.iterations, self.inst.smoothness).ok()?;
        match self.criterion {
            ProbeCriterion::Suboptimality => performance_ratio(&traj, spec.f_star()?).ok(),
            ProbeCriterion::Descent => descent_ratio(&traj).ok(),
        }
    }

    fn draw(&self, family: Family, rng: &mut ChaCha8Rng) -> (FunctionSpec, Vec<f64>) {
        let (mu, l) = (self.inst.mu, self.inst.smoothness);
        let curvature = |rng: &mut ChaCha8Rng| match rng.random_range(0..4) {
            0 => mu,
            1 => l,
            _ => rng.random_range(mu..=l),
        };
        match family {
            Family::Quadratic => {
                let d = rng.random_range(1..=5);
                let eig = (0..d).map(|_| curvature(rng)).collect();
                let x0 = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                (FunctionSpec::Quadratic { eigenvalues: eig }, x0)
            }
            Family::Huber => {
                let d = rng.random_range(1..=3);
                let c = rng.random_range(0.0..l).max(l * 1e-3);
                let r = rng.random_range(0.05..2.0);
                let reach = rng.random_range(0.1..10.0) * r;
                let x0 = (0..d).map(|_| rng.random_range(-reach..reach)).collect();
                (FunctionSpec::Huber { curvature: c, radius: r, dim: d }, x0)
            }
            Family::PiecewiseQuadratic => {
                let m = rng.random_range(1..=4);
                let mut bp: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
                bp.sort_by(f64::total_cmp);
                bp.dedup();
                let curv = (0..=bp.len()).map(|_| curvature(rng)).collect();
                let x0 = vec![rng.random_range(-3.0..3.0)];
                (FunctionSpec::PiecewiseQuadratic { breakpoints: bp, curvatures: curv }, x0)
            }
        }
    }

    /// Random local moves of breakpoints, curvatures and start point that are
    /// kept when the ratio grows.
    fn refine(&self, spec: FunctionSpec, x0: Vec<f64>, best: f64, rng: &mut ChaCha8Rng) -> f64 {
        let FunctionSpec::PiecewiseQuadratic { breakpoints, curvatures } = spec else {
            return best;
        };
        let (mu, l) = (self.inst.mu, self.inst.smoothness);
        let (mut bp, mut cv, mut x, mut best) = (breakpoints, curvatures, x0, best);
        for step in 0..REFINE_STEPS {
            let scale = 0.5 * (1.0 - step as f64 / REFINE_STEPS as f64) + 1e-3;
            let mut nb = bp.clone();
            let mut nc = cv.clone();
            let mut nx = x.clone();
            match rng.random_range(0..3) {
                0 if !nb.is_empty() => {
                    let i = rng.random_range(0..nb.len());
                    nb[i] += rng.random_range(-scale..scale);
                    nb.sort_by(f64::total_cmp);
                    nb.dedup();
                    nc.truncate(nb.len() + 1);
                }
                1 => {
                    let i = rng.random_range(0..nc.len());
                    nc[i] = (nc[i] + rng.random_range(-scale..scale) * (l - mu)).clamp(mu, l);
                }
                _ => nx[0] += rng.random_range(-scale..scale),
            }
            let Ok(cand) = FunctionSpec::piecewise_quadratic(nb.clone(), nc.clone()) else { continue };
            if let Some(r) = self.ratio(&cand, &nx) {
                if r > best {
                    (bp, cv, x, best) = (nb, nc, nx, r);
                }
            }
        }
        best
    }
}

/// Samples `trials` random members of `family` that lie in the class of
/// `inst`, runs GD with the instance stepsize and reports the largest ratio
/// against the worst-case bound.
///
/// For `μ ≥ 0` the criterion is `‖g_N‖²/(f_0 − f*)`; for `μ < 0` it is
/// `‖g_N‖²/(f_0 − f_N)`. Trials run in parallel on independent streams of
/// `seed`; the piecewise family then refines its best candidate sequentially.
pub fn empirical_probe(inst: &ProblemInstance, family: Family, trials: usize, seed: u64) -> Result<ProbeResult> {
    inst.validate()?;
    if family == Family::Huber && inst.mu > 0.0 {
        return Err(Error::IncompatibleFamily("huber functions are not strongly convex".into()));
    }
    let rate = rate_bound(inst)?;
    let (criterion, bound_ratio) = match rate.max_value {
        Some(m) if inst.mu >= 0.0 => (ProbeCriterion::Suboptimality, 2.0 * inst.smoothness * m),
        _ => (ProbeCriterion::Descent, 2.0 / (inst.stepsize * rate.min_form)),
    };
    let probe = Probe { inst, criterion };

    let results: Vec<Option<(f64, u64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t as u64);
            let (spec, x0) = probe.draw(family, &mut rng);
            probe.ratio(&spec, &x0).map(|r| (r, t as u64))
        })
        .collect();
    let count = results.iter().flatten().count();
    let best = results.iter().flatten().fold(None, |acc: Option<(f64, u64)>, &(r, t)| match acc {
        Some((b, _)) if b >= r => acc,
        _ => Some((r, t)),
    });
    let mut max_ratio = best.map_or(0.0, |b| b.0);

    if family == Family::PiecewiseQuadratic {
        if let Some((r, t)) = best {
            let (spec, x0) = probe.draw(family, &mut trial_rng(seed, t));
            let mut rng = trial_rng(seed, trials as u64);
            max_ratio = max_ratio.max(probe.refine(spec, x0, r, &mut rng));
        }
    }

    let mut anchor = |eig: f64| -> Option<f64> {
        if family != Family::Quadratic || eig == 0.0 {
            return None;
        }
        let spec = FunctionSpec::Quadratic { eigenvalues: vec![eig] };
        probe.ratio(&spec, &[1.0]).map(|r| {
            max_ratio = max_ratio.max(r);
            r / bound_ratio
        })
    };
    let anchor_l_quotient = anchor(inst.smoothness);
    let anchor_mu_quotient = anchor(inst.mu);

    Ok(ProbeResult {
        family,
        criterion,
        trials: count,
        max_ratio,
        bound_ratio,
        quotient: max_ratio / bound_ratio,
        anchor_l_quotient,
        anchor_mu_quotient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_difference(spec: &FunctionSpec, x: &[f64]) -> Vec<f64> {
        let h = 1e-6 * norm(x).max(1.0);
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (spec.value(&a).unwrap() - spec.value(&b).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    fn assert_gradient(spec: &FunctionSpec, x: &[f64]) {
        let g = spec.gradient(x).unwrap();
        let fd = central_difference(spec, x);
        let scale = norm(&g).max(1.0);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * scale, "{spec:?} at {x:?}: {g:?} vs {fd:?}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let q = FunctionSpec::quadratic(vec![0.3, 1.0, -0.2]).unwrap();
        assert_gradient(&q, &[0.4, -1.2, 2.0]);
        let h = FunctionSpec::huber(0.8, 0.5, 2).unwrap();
        assert_gradient(&h, &[0.1, 0.2]);
        assert_gradient(&h, &[3.0, -1.0]);
        let p = FunctionSpec::piecewise_quadratic(vec![-1.0, 0.5, 1.5], vec![0.2, 1.0, 0.0, 0.7]).unwrap();
        for x in [-2.3, -1.1, -0.4, 0.0, 0.3, 0.9, 1.7, 4.0] {
            assert_gradient(&p, &[x]);
        }
        let neg = FunctionSpec::piecewise_quadratic(vec![1.0], vec![-0.5, 1.0]).unwrap();
        assert_gradient(&neg, &[2.5]);
        assert_gradient(&neg, &[-2.5]);
    }

    #[test]
    fn piecewise_is_anchored_and_continuous() {
        let p = FunctionSpec::piecewise_quadratic(vec![-1.0, 0.5, 1.5], vec![0.2, 1.0, 0.0, 0.7]).unwrap();
        assert_eq!(p.value(&[0.0]).unwrap(), 0.0);
        assert_eq!(p.gradient(&[0.0]).unwrap(), vec![0.0]);
        for b in [-1.0, 0.5, 1.5] {
            let e = 1e-9;
            assert!((p.value(&[b - e]).unwrap() - p.value(&[b + e]).unwrap()).abs() < 1e-8);
            assert!((p.gradient(&[b - e]).unwrap()[0] - p.gradient(&[b + e]).unwrap()[0]).abs() < 1e-8);
        }
        // f'' = 1 on (−1, 0.5): f(0.5) = 0.125, then slope 0.5 with zero curvature
        assert!((p.value(&[1.0]).unwrap() - 0.375).abs() < 1e-15);
        assert!(FunctionSpec::piecewise_quadratic(vec![1.0, 0.0], vec![1.0; 3]).is_err());
        assert!(FunctionSpec::piecewise_quadratic(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn quadratic_l_follows_rho_powers() {
        let gamma = 1.3;
        let spec = FunctionSpec::quadratic(vec![1.0]).unwrap();
        let t = run_gd(&spec, &[1.0], gamma, 6, 1.0).unwrap();
        let rho: f64 = 1.0 - gamma;
        for (k, p) in t.points.iter().enumerate() {
            assert!((p[0] - rho.powi(k as i32)).abs() < 1e-15);
        }
        let r = performance_ratio(&t, 0.0).unwrap();
        assert!((r - 2.0 * rho.powi(12)).abs() <= 1e-12 * r);
    }

    #[test]
    fn quadratic_mu_ratio_is_below_mu_branch() {
        let (mu, gamma, n) = (0.2, 0.9, 4);
        let spec = FunctionSpec::quadratic(vec![mu]).unwrap();
        let t = run_gd(&spec, &[-2.0], gamma, n, 1.0).unwrap();
        let eta: f64 = 1.0 - gamma * mu;
        let r = performance_ratio(&t, 0.0).unwrap();
        assert!((r - 2.0 * mu * eta.powi(2 * n as i32)).abs() <= 1e-12 * r);
        let b = rate_bound(&ProblemInstance::new(n, mu, 1.0, gamma).unwrap()).unwrap();
        assert!(r < 2.0 * b.branch_mu.unwrap());
    }

    #[test]
    fn trajectory_invariants() {
        let spec = FunctionSpec::quadratic(vec![0.5, 1.0]).unwrap();
        let t = run_gd(&spec, &[0.0, 0.0], 1.0, 3, 1.0).unwrap();
        assert!(t.gradients.iter().all(|g| g.iter().all(|v| *v == 0.0)));
        assert!(t.points.iter().all(|p| p == &t.points[0]));
        assert_eq!(performance_ratio(&t, 0.0), Err(Error::DegenerateStart));

        let t = run_gd(&spec, &[1.0, -3.0], 1.7, 5, 1.0).unwrap();
        for k in 0..5 {
            assert!(t.values[k + 1] <= t.values[k]);
            assert!(t.plus_values[k] <= t.values[k]);
            for i in 0..2 {
                assert_eq!(t.points[k + 1][i], t.points[k][i] - 1.7 * t.gradients[k][i]);
            }
        }
        assert!(run_gd(&spec, &[1.0], 1.0, 3, 1.0).is_err());
        assert!(run_gd(&spec, &[1.0, 1.0], 2.0, 3, 1.0).is_err());
        assert!(run_gd(&spec, &[1.0, 1.0], 1.0, 3, 0.5).is_err());
    }

    #[test]
    fn huber_linear_region_has_constant_gradient_norm() {
        let (c, r) = (1.0, 0.1);
        let spec = FunctionSpec::huber(c, r, 2).unwrap();
        let t = run_gd(&spec, &[3.0, 4.0], 0.5, 6, 1.0).unwrap();
        // each step moves 0.05 towards the origin, staying outside the ball
        for (k, g) in t.gradients.iter().enumerate() {
            assert!((norm(g) - c * r).abs() < 1e-15);
            assert!((norm(&t.points[k]) - (5.0 - 0.05 * k as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_respects_bound() {
        let inst = ProblemInstance::new(3, 0.1, 1.0, 1.2).unwrap();
        let p = empirical_probe(&inst, Family::Quadratic, 300, 4).unwrap();
        assert!(p.quotient <= 1.0 + 1e-9, "{p:?}");
        let inst = ProblemInstance::new(3, 0.0, 1.0, 0.8).unwrap();
        let p = empirical_probe(&inst, Family::Huber, 200, 4).unwrap();
        assert!(p.quotient <= 1.0 + 1e-9, "{p:?}");
        let inst = ProblemInstance::new(2, -0.3, 1.0, 1.0).unwrap();
        let p = empirical_probe(&inst, Family::PiecewiseQuadratic, 100, 4).unwrap();
        assert_eq!(p.criterion, ProbeCriterion::Descent);
        assert!(p.quotient <= 1.0 + 1e-9, "{p:?}");
        let inst = ProblemInstance::new(2, 0.3, 1.0, 1.0).unwrap();
        assert!(matches!(empirical_probe(&inst, Family::Huber, 10, 0), Err(Error::IncompatibleFamily(_))));
    }

    #[test]
    fn value_drop_matches_difference() {
        let specs = [
            FunctionSpec::quadratic(vec![0.3, -0.4]).unwrap(),
            FunctionSpec::huber(0.8, 0.5, 2).unwrap(),
            FunctionSpec::piecewise_quadratic(vec![-1.0, 0.5], vec![-0.2, 1.0, 0.3]).unwrap(),
        ];
        let pts: [&[f64]; 4] = [&[0.1, 0.2], &[2.0, -1.0], &[-0.3, 0.1], &[1.5, 1.0]];
        for spec in &specs {
            let d = spec.dimension();
            for x in pts {
                for y in pts {
                    let (x, y) = (&x[..d], &y[..d]);
                    let want = spec.value(x).unwrap() - spec.value(y).unwrap();
                    assert!((spec.value_drop(x, y).unwrap() - want).abs() < 1e-14, "{spec:?} {x:?} {y:?}");
                }
            }
        }
    }

    #[test]
    fn short_steps_do_not_overshoot_min_form() {
        // a near-extremal function found by the refinement: tiny steps along a
        // concave piece, where f_0 − f_N formed from values loses 7 digits
        let spec = FunctionSpec::piecewise_quadratic(vec![-0.5776546171059247], vec![-0.3, 0.7789188227357502]).unwrap();
        let t = run_gd(&spec, &[-2.07739275778331], 1.0, 2, 1.0).unwrap();
        let b = rate_bound(&ProblemInstance::new(2, -0.3, 1.0, 1.0).unwrap()).unwrap();
        let q = descent_ratio(&t).unwrap() * b.min_form / 2.0;
        assert!((q - 1.0).abs() < 1e-9, "{q}");
    }

    #[test]
    fn probe_is_deterministic() {
        let inst = ProblemInstance::new(4, 0.0, 1.0, 1.0).unwrap();
        let a = empirical_probe(&inst, Family::PiecewiseQuadratic, 64, 9).unwrap();
        let b = empirical_probe(&inst, Family::PiecewiseQuadratic, 64, 9).unwrap();
        assert_eq!(a, b);
    }
}

//! Optimal stepsize `γ*(N, μ, L)` and the surrogate class `(μ', L')` that
//! makes an arbitrary stepsize optimal.
//!
//! Everything is plain bisection: `E_N` is monotone on each bracket used
//! below (increasing on `(−1, 0)`, decreasing on `(0, ∞)`), so a sign test
//! is all that is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{derive_params, eval_e, eval_e_extended, ProblemInstance};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative tolerance on `|E_N(η) − E_N(ρ)|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-13, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateRegime {
    /// `γ < γ*`: smoothness is inflated to `L' > L`.
    BelowOptimal,
    /// `γ > γ*`: strong convexity is relaxed to `μ' < μ`.
    AboveOptimal,
    AtOptimal,
}

/// A class `F_{μ', L'}` containing `F_{μ,L}` for which the given stepsize is
/// optimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateClass {
    pub mu_eff: f64,
    pub l_eff: f64,
    /// `1 − γ L'`, kept alongside `l_eff` to avoid a round trip.
    pub rho_eff: f64,
    /// `1 − γ μ'`.
    pub eta_eff: f64,
    pub regime: SurrogateRegime,
}

/// Signed gap `E_N(η) − E_N(ρ)` as a function of the stepsize, and the scale
/// it is compared against.
fn stepsize_gap(n: i64, mu: f64, l: f64, gamma: f64) -> (f64, f64) {
    let e_eta = eval_e_extended(1.0 - gamma * mu, n);
    let e_rho = eval_e_extended(1.0 - gamma * l, n);
    (e_eta - e_rho, e_eta.abs().max(e_rho.abs()))
}

/// Bisection for the sign change of an increasing `probe`, which returns a
/// signed gap and the scale for the relative stopping test.
///
/// When the bracket collapses to adjacent floats before the tolerance is met
/// the endpoint with the smaller relative gap is returned: nothing closer is
/// representable.
fn bisect(
    mut lo: f64,
    mut hi: f64,
    probe: impl Fn(f64) -> (f64, f64),
    opts: &SolveOptions,
) -> Result<f64> {
    let (mut g_lo, s_lo) = probe(lo);
    let (mut g_hi, s_hi) = probe(hi);
    if !(g_lo < 0.0) || !(g_hi > 0.0) {
        return Err(Error::Bracket(format!(
            "no sign change on [{lo:e}, {hi:e}] (gaps {g_lo:e}, {g_hi:e})"
        )));
    }
    let mut rel_lo = g_lo.abs() / s_lo;
    let mut rel_hi = g_hi.abs() / s_hi;
    for _ in 0..opts.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            return Ok(if rel_lo <= rel_hi { lo } else { hi });
        }
        let (g, s) = probe(mid);
        if g.is_nan() {
            return Err(Error::Domain(format!("gap undefined at {mid:e}")));
        }
        let rel = g.abs() / s;
        if g == 0.0 || rel <= opts.tol {
            return Ok(mid);
        }
        if g < 0.0 {
            lo = mid;
            g_lo = g;
            rel_lo = rel;
        } else {
            hi = mid;
            g_hi = g;
            rel_hi = rel;
        }
    }
    let _ = (g_lo, g_hi);
    Err(Error::NonConvergence { lo, hi, iterations: opts.max_iter })
}

/// The stepsize equalising `E_N(1 − γμ)` and `E_N(1 − γL)`; lies in `(1/L, 2/L)`.
pub fn optimal_stepsize(n: usize, mu: f64, l: f64, opts: &SolveOptions) -> Result<f64> {
    if n == 0 || !(l > 0.0) || !(mu < l) {
        return Err(Error::InvalidInstance(format!("need N ≥ 1 and mu < L with L > 0 (N={n}, mu={mu}, L={l})")));
    }
    let eps = 1e-12 / l;
    let n = n as i64;
    // E_N(η) − E_N(ρ) is negative below γ* and positive above
    bisect(1.0 / l + eps, 2.0 / l - eps, |g| stepsize_gap(n, mu, l, g), opts)
}

fn is_at_optimal(inst: &ProblemInstance, gap: f64, scale: f64, tol: f64) -> bool {
    if gap == 0.0 || (scale.is_finite() && gap.abs() <= tol * scale) {
        return true;
    }
    // γ is the representable stepsize nearest γ* if the gap flips at its neighbour
    let neighbour = if gap < 0.0 { inst.stepsize.next_up() } else { inst.stepsize.next_down() };
    let (g, _) = stepsize_gap(inst.iterations as i64, inst.mu, inst.smoothness, neighbour);
    g == 0.0 || g.signum() != gap.signum()
}

pub fn surrogate_class(inst: &ProblemInstance, opts: &SolveOptions) -> Result<SurrogateClass> {
    let p = derive_params(inst)?;
    let n = inst.iterations as i64;
    let gamma = inst.stepsize;
    let e_eta = eval_e_extended(p.eta, n);
    let e_rho = eval_e_extended(p.rho, n);
    let gap = e_eta - e_rho;
    let scale = e_eta.abs().max(e_rho.abs());

    if is_at_optimal(inst, gap, scale, opts.tol) {
        return Ok(SurrogateClass {
            mu_eff: inst.mu,
            l_eff: inst.smoothness,
            rho_eff: p.rho,
            eta_eff: p.eta,
            regime: SurrogateRegime::AtOptimal,
        });
    }

    if gap < 0.0 {
        // Solve E_N(ρ') = E_N(η) for ρ' ∈ (−1, 0), where E_N increases from 0 to ∞.
        let target = e_eta;
        let probe = |r: f64| (eval_e_extended(r, n) - target, target);
        let mut hi = -0.5;
        let mut expansions = 0;
        while eval_e_extended(hi, n) <= target {
            hi *= 0.5;
            expansions += 1;
            if expansions > 1100 {
                return Err(Error::Bracket(format!("cannot bracket E_N(rho') = {target:e} in (-1, 0)")));
            }
        }
        let rho_eff = bisect(-1.0, hi, probe, opts)?;
        Ok(SurrogateClass {
            mu_eff: inst.mu,
            l_eff: (1.0 - rho_eff) / gamma,
            rho_eff,
            eta_eff: p.eta,
            regime: SurrogateRegime::BelowOptimal,
        })
    } else {
        // Solve E_N(η') = E_N(ρ) for η' > −ρ, where E_N decreases to 0.
        let target = e_rho;
        let probe = |e: f64| (target - eval_e_extended(e, n), target);
        let lo = (-p.rho).max(1e-8);
        let mut hi = 2.0;
        let mut expansions = 0;
        while eval_e_extended(hi, n) >= target {
            hi *= 2.0;
            expansions += 1;
            if expansions > 200 {
                return Err(Error::Bracket(format!("cannot bracket E_N(eta') = {target:e} above {lo:e}")));
            }
        }
        let eta_eff = bisect(lo, hi, probe, opts)?;
        Ok(SurrogateClass {
            mu_eff: (1.0 - eta_eff) / gamma,
            l_eff: inst.smoothness,
            rho_eff: p.rho,
            eta_eff,
            regime: SurrogateRegime::AboveOptimal,
        })
    }
}

/// A stepsize near `γ*` with exact `ρ`, `η` satisfying `|T_N(ρ, η)| ≤ tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPair {
    pub gamma: Rational,
    pub rho: Rational,
    pub eta: Rational,
}

/// Exact bisection for the optimal stepsize, refined until `|T_N| ≤ abs_tol`.
///
/// Binary64 cannot resolve `T_N = 0` once `E_N` is large (it reaches ~1e25
/// for `N = 10`, `κ = 0.9`), so checks that need the locus itself use this.
pub fn optimal_pair_exact(n: usize, mu: f64, l: f64, abs_tol: f64, max_iter: usize) -> Result<OptimalPair> {
    let float_star = optimal_stepsize(n, mu, l, &SolveOptions::default())?;
    let k = n as i64;
    let mu_q = Rational::from_f64(mu);
    let l_q = Rational::from_f64(l);
    let one = Rational::from_int(1);
    let gap = |g: &Rational| -> Result<Rational> {
        let rho = one.clone() - g.clone() * l_q.clone();
        let eta = one.clone() - g.clone() * mu_q.clone();
        Ok(eval_e(&eta, k)? - eval_e(&rho, k)?)
    };

    let widen = [1e-9, 1e-6, 1e-3];
    let mut bracket = None;
    for w in widen {
        let lo = Rational::from_f64(float_star * (1.0 - w));
        let hi = Rational::from_f64(float_star * (1.0 + w));
        if gap(&lo)? < Rational::from_int(0) && gap(&hi)? > Rational::from_int(0) {
            bracket = Some((lo, hi));
            break;
        }
    }
    let (mut lo, mut hi) =
        bracket.ok_or_else(|| Error::Bracket("exact gap does not change sign near the binary64 optimum".into()))?;

    let tol = Rational::from_f64(abs_tol);
    let half = Rational::new(1.into(), 2.into());
    for _ in 0..max_iter {
        let mid = (lo.clone() + hi.clone()) * half.clone();
        let g = gap(&mid)?;
        if Scalar::abs(&g) <= tol {
            let rho = one.clone() - mid.clone() * l_q.clone();
            let eta = one.clone() - mid.clone() * mu_q.clone();
            return Ok(OptimalPair { gamma: mid, rho, eta });
        }
        if g < Rational::from_int(0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence { lo: lo.to_f64(), hi: hi.to_f64(), iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::eval_t;

    /// Independent oracle: bisection directly on ρ for μ = 0, where the
    /// optimality condition reads E_N(ρ) = E_N(1) = 2N.
    fn mu_zero_oracle(n: usize) -> f64 {
        let e = |r: f64| -> f64 { (1..=2 * n as i32).map(|j| r.powi(-j)).sum() };
        let (mut lo, mut hi) = (-1.0 + 1e-15, -1e-6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if e(mid) < 2.0 * n as f64 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        1.0 - 0.5 * (lo + hi)
    }

    #[test]
    fn optimal_stepsize_examples() {
        let opts = SolveOptions::default();
        let g1 = optimal_stepsize(1, 0.0, 1.0, &opts).unwrap();
        assert!((g1 - 1.5).abs() < 1e-12);
        let g2 = optimal_stepsize(2, 0.0, 1.0, &opts).unwrap();
        assert!((g2 - mu_zero_oracle(2)).abs() < 1e-12);
        assert!((g2 - 1.6057).abs() < 2e-4);
        assert!((g2 - 1.605_829_586_188_268).abs() < 1e-12);
        for n in 1..=10 {
            let g = optimal_stepsize(n, 0.0, 1.0, &opts).unwrap();
            assert!((g - mu_zero_oracle(n)).abs() < 1e-11, "N={n}");
            let t = eval_t(&(1.0 - g), &1.0, n as i64).unwrap();
            assert!(t.abs() <= 1e-12 * 2.0 * n as f64);
        }
    }

    #[test]
    fn optimal_stepsize_rejects_bad_class() {
        assert!(optimal_stepsize(0, 0.0, 1.0, &SolveOptions::default()).is_err());
        assert!(optimal_stepsize(1, 1.0, 1.0, &SolveOptions::default()).is_err());
    }

    #[test]
    fn optimal_stepsize_lies_in_open_interval() {
        for &kappa in &[-0.5, -0.1, 0.0, 0.1, 0.5, 0.9] {
            for n in [1, 3, 10] {
                let g = optimal_stepsize(n, kappa * 2.0, 2.0, &SolveOptions::default()).unwrap();
                assert!(g > 0.5 && g < 1.0, "gamma*={g} for N={n}, kappa={kappa}");
            }
        }
    }

    #[test]
    fn surrogate_examples() {
        let opts = SolveOptions::default();
        let at = surrogate_class(&ProblemInstance::new(1, 0.0, 1.0, 1.5).unwrap(), &opts).unwrap();
        assert_eq!(at.regime, SurrogateRegime::AtOptimal);
        assert_eq!((at.mu_eff, at.l_eff), (0.0, 1.0));

        let below = surrogate_class(&ProblemInstance::new(1, 0.0, 1.0, 1.0).unwrap(), &opts).unwrap();
        assert_eq!(below.regime, SurrogateRegime::BelowOptimal);
        assert!((below.l_eff - 1.5).abs() < 1e-10);
        assert_eq!(below.mu_eff, 0.0);

        let above = surrogate_class(&ProblemInstance::new(1, 0.0, 1.0, 1.8).unwrap(), &opts).unwrap();
        assert_eq!(above.regime, SurrogateRegime::AboveOptimal);
        assert!((above.mu_eff + 5.0 / 3.0).abs() < 1e-10);
        assert_eq!(above.l_eff, 1.0);
    }

    #[test]
    fn optimal_stepsize_is_a_fixed_point() {
        let opts = SolveOptions::default();
        for &kappa in &[-0.5, 0.0, 0.5, 0.9] {
            for n in [1, 2, 5, 10] {
                let g = optimal_stepsize(n, kappa, 1.0, &opts).unwrap();
                let s = surrogate_class(&ProblemInstance::new(n, kappa, 1.0, g).unwrap(), &opts).unwrap();
                assert_eq!(s.regime, SurrogateRegime::AtOptimal, "N={n} kappa={kappa}");
            }
        }
    }

    #[test]
    fn exact_pair_lands_on_locus() {
        let pair = optimal_pair_exact(1, 0.0, 1.0, 1e-30, 400).unwrap();
        let t = eval_t(&pair.rho, &pair.eta, 1).unwrap();
        assert!(Scalar::abs(&t) <= Rational::from_f64(1e-30));
        assert!((pair.gamma.to_f64() - 1.5).abs() < 1e-14);
    }
}

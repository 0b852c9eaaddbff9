//! Dual-feasibility checks for the gradient-descent certificate and the
//! end-to-end certification pipeline.
//!
//! A certificate `(τ, λ)` proves `‖g_N‖²/(2τ) ≤ f_0 − f_N⁺` once
//!
//! 1. the balance condition makes every function-value term cancel,
//! 2. all `λ_{i,j}` are non-negative, and
//! 3. the symmetric part of the PEP matrix is positive semi-definite.
//!
//! On top of those, this module checks the closed-form decomposition of the
//! PEP matrix, re-derives the weighted sum from scratch on random points as
//! an independent oracle, and audits the scalar inequalities the
//! non-negativity argument rests on.

use rayon::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{build_certificate, CertificateBundle};
use crate::error::{Error, Result};
use crate::kernel::{eval_e, eval_f, eval_psi, eval_t, rate_bound, ProblemInstance};
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::pep::PepMatrixSet;
use crate::report::{cell_seed, float17, float17_vec, trial_rng, RNG_ALGORITHM};
use crate::scalar::{Rational, Scalar};
use crate::stepsize::{optimal_pair_exact, surrogate_class, SolveOptions, SurrogateClass};

/// Per-node residual of the balance condition: inflow minus outflow minus
/// the required net flow (`−1` at node 0, `+1` at node `N`).
pub fn check_balance<T: Scalar>(cert: &CertificateBundle<T>) -> Vec<T> {
    let n = cert.iterations;
    let mut net = vec![T::zero(); n + 1];
    for (&(i, j), w) in &cert.lambda {
        net[j] = net[j].clone() + w.clone();
        net[i] = net[i].clone() - w.clone();
    }
    net[0] = net[0].clone() + T::one();
    net[n] = net[n].clone() - T::one();
    net
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCheck {
    pub min_eigenvalue: f64,
    /// `max(1, max |entry|)`.
    pub scale: f64,
    pub pass: bool,
}

pub fn check_psd(s_sym: &Matrix<f64>, psd_tol: f64) -> Result<PsdCheck> {
    if !s_sym.is_symmetric() {
        return Err(Error::Shape("PSD check needs a symmetric matrix".into()));
    }
    let scale = s_sym.max_abs().max(1.0);
    let min_eigenvalue = symmetric_eigenvalues(s_sym)?.first().copied().unwrap_or(0.0);
    Ok(PsdCheck { min_eigenvalue, scale, pass: min_eigenvalue >= -psd_tol * scale })
}

/// `coef · Σ_k δ_k v_k v_kᵀ`, the closed form of the PEP matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    pub coef: T,
    pub delta: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

impl<T: Scalar> Decomposition<T> {
    pub fn reconstruct(&self) -> Matrix<T> {
        let dim = self.vectors.first().map_or(0, Vec::len);
        let mut m: Matrix<T> = Matrix::zeros(dim, dim);
        for (d, v) in self.delta.iter().zip(&self.vectors) {
            for i in 0..dim {
                if v[i].is_zero() {
                    continue;
                }
                for j in 0..dim {
                    m[(i, j)] = m[(i, j)].clone() + d.clone() * v[i].clone() * v[j].clone();
                }
            }
        }
        m.scale(&self.coef)
    }
}

pub fn closed_form_pep_matrix<T: Scalar>(n: usize, rho: &T, eta: &T) -> Result<Decomposition<T>> {
    if n == 0 {
        return Err(Error::InvalidInstance("N must be at least 1".into()));
    }
    let nn = n as i64;
    let f = |k: i64| eval_f(eta, k);
    let mut delta = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in 1..=nn {
        let t_k = eval_t(rho, eta, k)?;
        let d = if k == 1 {
            t_k
        } else {
            let den = f(nn - k + 1);
            if den.is_zero() {
                return Err(Error::Domain(format!("F_{}(eta) vanishes", nn - k + 1)));
            }
            let ratio = f(nn - k) / den;
            t_k - ratio.clone() * ratio * eval_t(rho, eta, k - 1)?
        };
        delta.push(d);

        let mut v = vec![T::zero(); n + 1];
        v[k as usize] = T::one();
        if k < nn {
            let fk = f(nn - k);
            if fk.is_zero() {
                return Err(Error::Domain(format!("F_{}(eta) vanishes", nn - k)));
            }
            let tail = -(T::one() / fk);
            for slot in v.iter_mut().skip(k as usize + 1) {
                *slot = tail.clone();
            }
        }
        vectors.push(v);
    }
    let gap = eta.clone() - rho.clone();
    let coef = eta.clone() * eta.clone() * (T::one() - rho.clone()) / (T::from_int(2) * gap.clone() * gap);
    Ok(Decomposition { coef, delta, vectors })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutcome {
    pub trials: usize,
    /// Largest `|S_direct − S_matrix| / max(1, |S_direct|)`.
    pub max_rel_error: f64,
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Expands the weighted sum of interpolation inequalities directly on random
/// gradients, function values and GD iterates, and compares it with the
/// quadratic form `L xᵀ S_sym x`.
///
/// `inst_eff` is the class the certificate was built for. Function values are
/// drawn independently of the points, so the linear part only cancels when
/// the balance condition holds.
pub fn oracle_quadratic_identity(
    inst_eff: &ProblemInstance,
    cert: &CertificateBundle<f64>,
    s_sym: &Matrix<f64>,
    trials: usize,
    dim: usize,
    seed: u64,
) -> Result<OracleOutcome> {
    let n = inst_eff.iterations;
    if cert.iterations != n || s_sym.rows() != n + 1 || !s_sym.is_square() {
        return Err(Error::Shape(format!(
            "certificate for N={} and {}x{} matrix against N={n}",
            cert.iterations,
            s_sym.rows(),
            s_sym.cols()
        )));
    }
    if dim == 0 {
        return Err(Error::Shape("oracle dimension must be positive".into()));
    }
    let l = inst_eff.smoothness;
    let mu = inst_eff.mu;
    let gamma = inst_eff.stepsize;
    let curvature = mu * l / (2.0 * (l - mu));

    let errors: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            let mut draw = |d: usize| -> Vec<f64> { (0..d).map(|_| rng.random_range(-1.0..1.0)).collect() };
            let g: Vec<Vec<f64>> = (0..=n).map(|_| draw(dim)).collect();
            let f_plus: Vec<f64> = draw(n + 1);
            let mut x = vec![draw(dim)];
            for k in 0..n {
                x.push(x[k].iter().zip(&g[k]).map(|(a, b)| a - gamma * b).collect());
            }
            let x_plus: Vec<Vec<f64>> =
                x.iter().zip(&g).map(|(p, q)| p.iter().zip(q).map(|(a, b)| a - b / l).collect()).collect();

            let q_val = |i: usize, j: usize| -> f64 {
                let diff: Vec<f64> = x_plus[i].iter().zip(&x_plus[j]).map(|(a, b)| a - b).collect();
                f_plus[j] - f_plus[i] + dot(&g[j], &diff) + curvature * dot(&diff, &diff)
            };
            let weighted: f64 = cert.lambda.iter().map(|(&(i, j), w)| w * q_val(i, j)).sum();
            let direct = f_plus[0] - f_plus[n] + dot(&g[0], &g[0]) / (2.0 * l) - dot(&g[n], &g[n]) / (2.0 * cert.tau)
                + weighted;

            let mut matrix_form = 0.0;
            for c in 0..dim {
                let basis: Vec<f64> = (0..=n)
                    .map(|k| if k == 0 { x_plus[0][c] - x[0][c] } else { x_plus[k][c] - x_plus[k - 1][c] })
                    .collect();
                matrix_form += s_sym.quadratic_form(&basis).unwrap_or(f64::NAN);
            }
            matrix_form *= l;
            let err = (direct - matrix_form).abs() / direct.abs().max(1.0);
            if err.is_nan() {
                f64::INFINITY
            } else {
                err
            }
        })
        .collect();
    Ok(OracleOutcome { trials, max_rel_error: errors.into_iter().fold(0.0, f64::max) })
}

/// Numeric audit of the scalar facts behind non-negativity and PSD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropositionAudit {
    /// `ρ ∈ (−1, 0)`, `η > −ρ`, `T_k ≥ 0` for `k < N` and `T_N = 0`.
    pub sign_pass: bool,
    /// Smallest of `1 + ρ`, `−ρ`, `η + ρ` and the scaled `T_k`, `k < N`.
    #[serde(with = "float17")]
    pub sign_margin: f64,
    /// `|T_N| / max(1, |E_N(ρ)|)`.
    #[serde(with = "float17")]
    pub tn_residual: f64,
    /// Convexity of `ψ` on a uniform grid over `[0, N]`.
    pub psi_convex_pass: bool,
    /// Smallest second difference of `ψ` divided by `max(1, max |ψ|)`.
    #[serde(with = "float17")]
    pub psi_convexity_margin: f64,
    /// `max(|ψ(0)|, |ψ(N) + 2N log(−ρ)|)`.
    #[serde(with = "float17")]
    pub psi_endpoint_error: f64,
    /// `min_t (−2t log(−ρ) − ψ(t))` over the grid.
    #[serde(with = "float17")]
    pub psi_chord_margin: f64,
    pub gap_monotone_pass: bool,
    /// `min_k T_{k+1}/F_{N−k−1} − T_k/F_{N−k}`, `k = 1..N−2` (`+∞` if empty).
    #[serde(with = "float17")]
    pub gap_monotone_margin: f64,
    pub gap_ratio_pass: bool,
    /// `min_k ((η−ρ)/η) E_k(ρ) − T_k/F_{N−k}`, `k = 1..N−1` (`+∞` if empty).
    #[serde(with = "float17")]
    pub gap_ratio_margin: f64,
}

impl PropositionAudit {
    pub fn all_pass(&self) -> bool {
        self.sign_pass && self.psi_convex_pass && self.gap_monotone_pass && self.gap_ratio_pass
    }
}

pub const PROP_MARGIN_TOL: f64 = 1e-10;
pub const PSI_CONVEXITY_TOL: f64 = 1e-8;
pub const PSI_ENDPOINT_TOL: f64 = 1e-10;
pub const PSI_CHORD_TOL: f64 = 1e-8;

/// Audits at `(ρ, η)`, meant for pairs on the optimal-stepsize locus. In
/// exact mode the margins of the first, third and fourth checks are exact;
/// `ψ` is always evaluated in binary64. Domain violations fail the audit.
pub fn check_propositions<T: Scalar>(n: usize, rho: &T, eta: &T, grid_size: usize) -> PropositionAudit {
    let nn = n as i64;
    let rho_f = rho.to_f64();
    let eta_f = eta.to_f64();
    let neg_inf = f64::NEG_INFINITY;

    // signs of ρ, η and T_k
    let mut margin1 = (1.0 + rho_f).min(-rho_f).min(eta_f + rho_f);
    let mut tn_residual = f64::INFINITY;
    if !rho.is_zero() && !eta.is_zero() {
        for k in 1..nn {
            match (eval_t(rho, eta, k), eval_e(rho, k)) {
                (Ok(t), Ok(e)) => margin1 = margin1.min(t.to_f64() / e.to_f64().abs().max(1.0)),
                _ => margin1 = neg_inf,
            }
        }
        if let (Ok(t), Ok(e)) = (eval_t(rho, eta, nn), eval_e(rho, nn)) {
            tn_residual = t.to_f64().abs() / e.to_f64().abs().max(1.0);
        }
    } else {
        margin1 = neg_inf;
    }
    let sign_pass = rho_f > -1.0
        && rho_f < 0.0
        && eta_f > -rho_f
        && margin1 >= -PROP_MARGIN_TOL
        && tn_residual <= PROP_MARGIN_TOL;

    // convexity of ψ
    let (mut psi_convexity_margin, mut endpoint, mut chord) = (neg_inf, f64::INFINITY, neg_inf);
    if rho_f > -1.0 && rho_f < 0.0 && eta_f > 0.0 && grid_size >= 3 {
        let ts: Vec<f64> = (0..grid_size).map(|i| n as f64 * i as f64 / (grid_size - 1) as f64).collect();
        let psi: std::result::Result<Vec<f64>, _> = ts.iter().map(|&t| eval_psi(t, rho_f, eta_f, n as f64)).collect();
        if let Ok(psi) = psi {
            let scale = psi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            psi_convexity_margin = psi.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::INFINITY, f64::min) / scale;
            let slope = -2.0 * (-rho_f).ln();
            endpoint = psi[0].abs().max((psi[grid_size - 1] - slope * n as f64).abs());
            chord = ts.iter().zip(&psi).map(|(t, p)| slope * t - p).fold(f64::INFINITY, f64::min);
        }
    }
    let psi_convex_pass =
        psi_convexity_margin >= -PSI_CONVEXITY_TOL && endpoint <= PSI_ENDPOINT_TOL && chord >= -PSI_CHORD_TOL;

    // monotone and bounded scaled gaps
    let scaled_gap = |k: i64| -> Option<T> {
        let f = eval_f(eta, nn - k);
        if f.is_zero() {
            return None;
        }
        eval_t(rho, eta, k).ok().map(|t| t / f)
    };
    let mut gap_monotone_margin = f64::INFINITY;
    for k in 1..nn.saturating_sub(1) {
        gap_monotone_margin = match (scaled_gap(k + 1), scaled_gap(k)) {
            (Some(a), Some(b)) => gap_monotone_margin.min((a - b).to_f64()),
            _ => neg_inf,
        };
    }
    let mut gap_ratio_margin = f64::INFINITY;
    if !eta.is_zero() && !rho.is_zero() {
        let ratio = (eta.clone() - rho.clone()) / eta.clone();
        for k in 1..nn {
            gap_ratio_margin = match (eval_e(rho, k), scaled_gap(k)) {
                (Ok(e), Some(r)) => gap_ratio_margin.min((ratio.clone() * e - r).to_f64()),
                _ => neg_inf,
            };
        }
    } else {
        gap_ratio_margin = neg_inf;
    }

    PropositionAudit {
        sign_pass,
        sign_margin: margin1,
        tn_residual,
        psi_convex_pass,
        psi_convexity_margin,
        psi_endpoint_error: endpoint,
        psi_chord_margin: chord,
        gap_monotone_pass: gap_monotone_margin >= -PROP_MARGIN_TOL,
        gap_monotone_margin,
        gap_ratio_pass: gap_ratio_margin >= -PROP_MARGIN_TOL,
        gap_ratio_margin,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundForm {
    /// `‖g_N‖²/(2L) ≤ bound · (f_0 − f_*)`, available for `μ ≥ 0`.
    #[serde(rename = "max_form_eq3")]
    MaxForm,
    /// `‖g_N‖²/(2L) ≤ bound · (f_0 − f_N)`, valid for every `μ < L`.
    #[serde(rename = "min_form_eq13")]
    MinForm,
}

impl BoundForm {
    /// Name used in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            BoundForm::MaxForm => "max_form_eq3",
            BoundForm::MinForm => "min_form_eq13",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyConfig {
    pub solve: SolveOptions,
    pub balance_tol: f64,
    pub lambda_tol: f64,
    pub psd_tol: f64,
    pub oracle_tol: f64,
    /// Relative tolerance between the certificate's bound and the rate formula.
    pub bound_tol: f64,
    pub oracle_trials: usize,
    pub oracle_dim: usize,
    pub seed: u64,
    pub psi_grid: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            solve: SolveOptions::default(),
            balance_tol: 1e-10,
            lambda_tol: 1e-10,
            psd_tol: 1e-8,
            oracle_tol: 1e-8,
            bound_tol: 1e-8,
            oracle_trials: 100,
            oracle_dim: 3,
            seed: 0,
            psi_grid: 256,
        }
    }
}

/// Outcome of [`certify`]. Serialises to a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub iterations: usize,
    #[serde(with = "float17")]
    pub mu: f64,
    #[serde(with = "float17")]
    pub smoothness: f64,
    #[serde(with = "float17")]
    pub stepsize: f64,
    #[serde(with = "float17")]
    pub normalized_stepsize: f64,
    #[serde(flatten)]
    pub surrogate: Option<SurrogateClass>,
    #[serde(with = "float17")]
    pub tau: f64,
    /// Exact residuals, rounded to binary64.
    #[serde(with = "float17_vec")]
    pub balance_residuals: Vec<f64>,
    #[serde(with = "float17")]
    pub min_lambda: f64,
    #[serde(with = "float17")]
    pub min_eigenvalue: f64,
    #[serde(with = "float17")]
    pub psd_scale: f64,
    #[serde(with = "float17")]
    pub decomposition_residual: f64,
    #[serde(with = "float17")]
    pub decomposition_scale: f64,
    #[serde(with = "float17")]
    pub delta_last: f64,
    #[serde(flatten)]
    pub proposition_audits: PropositionAudit,
    pub oracle_trials: usize,
    pub oracle_dim: usize,
    pub oracle_seed: u64,
    #[serde(with = "float17")]
    pub oracle_max_error: f64,
    pub rng_algorithm: String,
    #[serde(with = "float17")]
    pub tol: f64,
    #[serde(with = "float17")]
    pub psd_tol: f64,
    pub certified: bool,
    pub failing_stage: Option<String>,
    #[serde(with = "float17")]
    pub bound_value: f64,
    pub bound_form: BoundForm,
    /// The same bound from the closed-form rate, for comparison.
    #[serde(with = "float17")]
    pub rate_formula_value: f64,
}

impl VerificationReport {
    fn empty(inst: &ProblemInstance, config: &CertifyConfig) -> Self {
        let nan = f64::NAN;
        VerificationReport {
            iterations: inst.iterations,
            mu: inst.mu,
            smoothness: inst.smoothness,
            stepsize: inst.stepsize,
            normalized_stepsize: inst.normalized_stepsize(),
            surrogate: None,
            tau: nan,
            balance_residuals: Vec::new(),
            min_lambda: nan,
            min_eigenvalue: nan,
            psd_scale: nan,
            decomposition_residual: nan,
            decomposition_scale: nan,
            delta_last: nan,
            proposition_audits: PropositionAudit {
                sign_pass: false,
                sign_margin: nan,
                tn_residual: nan,
                psi_convex_pass: false,
                psi_convexity_margin: nan,
                psi_endpoint_error: nan,
                psi_chord_margin: nan,
                gap_monotone_pass: false,
                gap_monotone_margin: nan,
                gap_ratio_pass: false,
                gap_ratio_margin: nan,
            },
            oracle_trials: 0,
            oracle_dim: config.oracle_dim,
            oracle_seed: config.seed,
            oracle_max_error: nan,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            tol: config.solve.tol,
            psd_tol: config.psd_tol,
            certified: false,
            failing_stage: None,
            bound_value: nan,
            bound_form: if inst.mu >= 0.0 { BoundForm::MaxForm } else { BoundForm::MinForm },
            rate_formula_value: nan,
        }
    }

    fn fail(mut self, stage: &str, detail: impl std::fmt::Display) -> Self {
        self.certified = false;
        self.failing_stage = Some(format!("{stage}: {detail}"));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Certifies the worst-case rate of `inst`.
///
/// The stepsize is first made optimal for a surrogate class, the closed-form
/// certificate is built for that class (exactly, from the binary64 surrogate
/// parameters), and every feasibility check is run. The certified bound is
/// then transported back to the original class. Only an invalid instance is
/// an error; mathematical failures come back as `certified = false`.
pub fn certify(inst: &ProblemInstance, config: &CertifyConfig) -> Result<VerificationReport> {
    inst.validate()?;
    let n = inst.iterations;
    let report = VerificationReport::empty(inst, config);

    let surrogate = match surrogate_class(inst, &config.solve) {
        Ok(s) => s,
        Err(e) => return Ok(report.fail("surrogate", e)),
    };
    let mut report = VerificationReport { surrogate: Some(surrogate.clone()), ..report };
    let inst_eff = ProblemInstance {
        iterations: n,
        mu: surrogate.mu_eff,
        smoothness: surrogate.l_eff,
        stepsize: inst.stepsize,
    };

    let rho_q = Rational::from_f64(surrogate.rho_eff);
    let eta_q = Rational::from_f64(surrogate.eta_eff);
    let l_q = Rational::from_f64(surrogate.l_eff);
    let cert_q = match build_certificate(n, &rho_q, &eta_q, &l_q) {
        Ok(c) => c,
        Err(e) => return Ok(report.fail("certificate", e)),
    };
    report.balance_residuals = check_balance(&cert_q).iter().map(Scalar::to_f64).collect();
    report.min_lambda = cert_q.min_lambda().map_or(f64::INFINITY, |v| v.to_f64());
    let cert = cert_q.to_f64();
    report.tau = cert.tau;

    let pep = match PepMatrixSet::for_certificate(&cert) {
        Ok(p) => p,
        Err(e) => return Ok(report.fail("pep_matrix", e)),
    };
    match check_psd(&pep.s_sym, config.psd_tol) {
        Ok(psd) => {
            report.min_eigenvalue = psd.min_eigenvalue;
            report.psd_scale = psd.scale;
        }
        Err(e) => return Ok(report.fail("psd", e)),
    }

    if let Ok(dec) = closed_form_pep_matrix(n, &surrogate.rho_eff, &surrogate.eta_eff) {
        if let Ok(diff) = pep.s_sym.sub(&dec.reconstruct()) {
            report.decomposition_residual = diff.max_abs();
            report.decomposition_scale = pep.s_sym.max_abs().max(1.0);
        }
        report.delta_last = dec.delta.last().copied().unwrap_or(f64::NAN);
    }

    match oracle_quadratic_identity(&inst_eff, &cert, &pep.s_sym, config.oracle_trials, config.oracle_dim, config.seed) {
        Ok(o) => {
            report.oracle_trials = o.trials;
            report.oracle_max_error = o.max_rel_error;
        }
        Err(e) => return Ok(report.fail("oracle", e)),
    }

    report.proposition_audits = check_propositions(n, &surrogate.rho_eff, &surrogate.eta_eff, config.psi_grid);

    // The certificate gives f_0 − f_N ≥ c ‖g_N‖² with c = 1/(2τ) − 1/(2L').
    let c = 0.5 / cert.tau - 0.5 / surrogate.l_eff;
    let l = inst.smoothness;
    let rate = rate_bound(inst)?;
    if inst.mu >= 0.0 {
        // add f_N − f_* ≥ ‖g_N‖²/(2L)
        report.bound_value = 1.0 / (1.0 + 2.0 * l * c);
        report.rate_formula_value = rate.max_value.unwrap_or(f64::NAN);
    } else {
        report.bound_value = 1.0 / (2.0 * l * c);
        report.rate_formula_value = 1.0 / (inst.normalized_stepsize() * rate.min_form);
    }

    let worst_balance = report.balance_residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let bound_gap = (report.bound_value - report.rate_formula_value).abs() / report.rate_formula_value.abs().max(1e-300);
    report.certified = true;
    report = if !(worst_balance <= config.balance_tol) {
        report.fail("balance", format!("residual {worst_balance:e}"))
    } else if !(report.min_lambda >= -config.lambda_tol) {
        let m = report.min_lambda;
        report.fail("nonnegativity", format!("min lambda {m:e}"))
    } else if !(report.min_eigenvalue >= -config.psd_tol * report.psd_scale) {
        let m = report.min_eigenvalue;
        report.fail("psd", format!("min eigenvalue {m:e}"))
    } else if !(report.oracle_max_error <= config.oracle_tol) {
        let m = report.oracle_max_error;
        report.fail("oracle", format!("max relative error {m:e}"))
    } else if !(bound_gap <= config.bound_tol) {
        report.fail("bound", format!("certificate and rate formula differ by {bound_gap:e} relative"))
    } else {
        report
    };
    Ok(report)
}

/// Certifies every instance, in parallel, with a per-cell seed derived from
/// `config.seed`. Output order follows input order.
pub fn certify_grid(instances: &[ProblemInstance], config: &CertifyConfig) -> Vec<Result<VerificationReport>> {
    instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let cfg = CertifyConfig { seed: cell_seed(config.seed, i as u64), ..*config };
            certify(inst, &cfg)
        })
        .collect()
}

/// Closed-form decomposition checked exactly at a high-precision optimal pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionAudit {
    pub rho: f64,
    pub eta: f64,
    /// `max |S_sym − coef Σ δ_k v_k v_kᵀ|`, computed exactly.
    pub residual: f64,
    /// `max(1, max |S_sym|)`.
    pub scale: f64,
    pub min_delta: f64,
    pub delta_last: f64,
    pub min_eigenvalue: f64,
    pub audit: PropositionAudit,
}

/// Locates the optimal stepsize of `(N, μ, L)` in exact arithmetic until
/// `|T_N| ≤ tn_tol`, then assembles the PEP matrix and its closed form
/// exactly and compares them.
pub fn decomposition_audit_exact(n: usize, mu: f64, l: f64, tn_tol: f64, psi_grid: usize) -> Result<DecompositionAudit> {
    let pair = optimal_pair_exact(n, mu, l, tn_tol, 2000)?;
    let cert = build_certificate(n, &pair.rho, &pair.eta, &Rational::from_f64(l))?;
    let pep = PepMatrixSet::for_certificate(&cert)?;
    let dec = closed_form_pep_matrix(n, &pair.rho, &pair.eta)?;
    let diff = pep.s_sym.sub(&dec.reconstruct())?;
    let s_f = pep.s_sym.to_f64();
    let psd = check_psd(&s_f, 0.0)?;
    let min_delta = dec.delta.iter().map(Scalar::to_f64).fold(f64::INFINITY, f64::min);
    Ok(DecompositionAudit {
        rho: pair.rho.to_f64(),
        eta: pair.eta.to_f64(),
        residual: diff.max_abs(),
        scale: s_f.max_abs().max(1.0),
        min_delta,
        delta_last: dec.delta.last().map_or(f64::NAN, Scalar::to_f64),
        min_eigenvalue: psd.min_eigenvalue,
        audit: check_propositions(n, &pair.rho, &pair.eta, psi_grid),
    })
}

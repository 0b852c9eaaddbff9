//! Matrices of the performance estimation problem in the basis
//! `x = (x_0⁺ − x_0, x_1⁺ − x_0⁺, …, x_N⁺ − x_{N−1}⁺)`.
//!
//! A method in H-form satisfies `x = −(1/L) H̃ g` with `g = (g_0, …, g_N)`.
//! The weighted sum of interpolation inequalities then reads
//! `L ⟨S x, x⟩` once its linear part vanishes.

use crate::certificate::CertificateBundle;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Lower-triangular step matrix `H` (normalised by `L`).
#[derive(Debug, Clone, PartialEq)]
pub struct HSchedule<T> {
    pub entries: Matrix<T>,
}

impl<T: Scalar> HSchedule<T> {
    pub fn new(entries: Matrix<T>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Shape("H must be square".into()));
        }
        let n = entries.rows();
        for i in 0..n {
            for j in i + 1..n {
                if !entries[(i, j)].is_zero() {
                    return Err(Error::Shape(format!("H has a non-zero entry above the diagonal at ({i},{j})")));
                }
            }
        }
        Ok(HSchedule { entries })
    }

    /// Constant-stepsize gradient descent: `H = (γL) I_N`.
    pub fn gradient_descent(n: usize, normalized_stepsize: T) -> Self {
        HSchedule { entries: Matrix::identity(n).scale(&normalized_stepsize) }
    }

    pub fn iterations(&self) -> usize {
        self.entries.rows()
    }
}

/// `(H̃, H̃⁻¹)`, both unit lower triangular of size `N + 1`.
pub fn build_htilde<T: Scalar>(h: &HSchedule<T>) -> (Matrix<T>, Matrix<T>) {
    let n = h.iterations();
    let mut ht = Matrix::identity(n + 1);
    for k in 1..=n {
        for j in 0..k {
            ht[(k, j)] = h.entries[(k - 1, j)].clone();
        }
        ht[(k, k - 1)] = ht[(k, k - 1)].clone() - T::one();
    }
    let inv = unit_lower_inverse(&ht);
    (ht, inv)
}

/// Forward substitution against the identity.
fn unit_lower_inverse<T: Scalar>(l: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    let mut x: Matrix<T> = Matrix::identity(n);
    for j in 0..n {
        for i in j + 1..n {
            let mut acc = T::zero();
            for m in j..i {
                if !l[(i, m)].is_zero() {
                    acc = acc + l[(i, m)].clone() * x[(m, j)].clone();
                }
            }
            x[(i, j)] = -acc;
        }
    }
    x
}

/// The coefficient matrices of the inner-product and squared-norm parts of
/// the weighted sum.
pub fn build_ab<T: Scalar>(cert: &CertificateBundle<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let n = cert.iterations;
    let lam = |i: usize, j: usize| cert.get(i, j);
    let mut a = Matrix::zeros(n + 1, n + 1);
    let mut b = Matrix::zeros(n + 1, n + 1);

    // e_k = Σ_{j<k} λ_{N,j}
    let mut e = vec![T::zero(); n + 1];
    for k in 1..=n {
        e[k] = e[k - 1].clone() + lam(n, k - 1)?;
    }

    for k in 1..=n {
        a[(k, k)] = lam(k - 1, k)?;
    }
    for k in 0..n {
        a[(k, k + 1)] = if k + 1 < n {
            -(lam(k + 1, k)? + lam(n, k)?)
        } else {
            -lam(n, n - 1)?
        };
        if k + 2 <= n {
            let c = -lam(n, k)?;
            for j in k + 2..=n {
                a[(k, j)] = c.clone();
            }
        }
    }

    for i in 1..=n {
        for j in 1..=n {
            if i != j {
                b[(i, j)] = e[i.min(j)].clone();
            }
        }
    }
    for k in 1..n {
        b[(k, k)] = lam(k - 1, k)? + lam(k, k - 1)? + e[k].clone();
    }
    b[(n, n)] = lam(n - 1, n)? + e[n].clone();
    Ok((a, b))
}

/// `S = AᵀH̃⁻¹ + κ/(2(1−κ)) B + ½ h₀h₀ᵀ − L/(2τ) h_N h_Nᵀ` and its symmetric part.
///
/// `h₀` and `h_N` are the first and last rows of `H̃⁻¹`: with
/// `g = −L H̃⁻¹ x` these give `‖g₀‖² = L²(h₀ᵀx)²` and `‖g_N‖² = L²(h_Nᵀx)²`.
pub fn assemble_pep_matrix<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    htilde_inv: &Matrix<T>,
    kappa: &T,
    tau: &T,
    smoothness: &T,
) -> Result<(Matrix<T>, Matrix<T>)> {
    if !(kappa.clone() < T::one()) {
        return Err(Error::Domain(format!("kappa must be below 1, got {kappa:?}")));
    }
    if !(tau.clone() > T::zero()) {
        return Err(Error::Domain(format!("tau must be positive, got {tau:?}")));
    }
    let n1 = htilde_inv.rows();
    let h0 = htilde_inv.row(0);
    let hn = htilde_inv.row(n1 - 1);
    let two = T::from_int(2);
    let b_coef = kappa.clone() / (two.clone() * (T::one() - kappa.clone()));
    let hn_coef = smoothness.clone() / (two.clone() * tau.clone());

    let s = a
        .transpose()
        .matmul(htilde_inv)?
        .add(&b.scale(&b_coef))?
        .add(&Matrix::outer(&h0, &h0).scale(&(T::one() / two)))?
        .sub(&Matrix::outer(&hn, &hn).scale(&hn_coef))?;
    let s_sym = s.symmetric_part()?;
    Ok((s, s_sym))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PepMatrixSet<T> {
    pub htilde: Matrix<T>,
    pub htilde_inv: Matrix<T>,
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub h0: Vec<T>,
    pub hn: Vec<T>,
    pub s: Matrix<T>,
    pub s_sym: Matrix<T>,
}

impl<T: Scalar> PepMatrixSet<T> {
    /// All matrices for a gradient-descent certificate.
    pub fn for_certificate(cert: &CertificateBundle<T>) -> Result<Self> {
        let n = cert.iterations;
        let schedule = HSchedule::gradient_descent(n, T::one() - cert.rho.clone());
        let (htilde, htilde_inv) = build_htilde(&schedule);
        let (a, b) = build_ab(cert)?;
        let (s, s_sym) = assemble_pep_matrix(&a, &b, &htilde_inv, &cert.kappa(), &cert.tau, &cert.smoothness)?;
        Ok(PepMatrixSet {
            h0: htilde_inv.row(0),
            hn: htilde_inv.row(n),
            htilde,
            htilde_inv,
            a,
            b,
            s,
            s_sym,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::build_certificate;
    use crate::scalar::Rational;
    use num_traits::Zero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn mat(rows: Vec<Vec<Rational>>) -> Matrix<Rational> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn htilde_examples() {
        let (ht, inv) = build_htilde(&HSchedule::gradient_descent(1, q(3, 2)));
        assert_eq!(ht, mat(vec![vec![q(1, 1), q(0, 1)], vec![q(1, 2), q(1, 1)]]));
        assert_eq!(inv, mat(vec![vec![q(1, 1), q(0, 1)], vec![q(-1, 2), q(1, 1)]]));

        let (_, inv) = build_htilde(&HSchedule::gradient_descent(2, q(3, 2)));
        assert_eq!(inv.row(2), vec![q(1, 4), q(-1, 2), q(1, 1)]);
    }

    #[test]
    fn gd_inverse_is_power_pattern() {
        let rho = q(-7, 9);
        for n in 1..=8 {
            let (ht, inv) = build_htilde(&HSchedule::gradient_descent(n, Rational::from_int(1) - rho.clone()));
            assert_eq!(ht.matmul(&inv).unwrap(), Matrix::identity(n + 1));
            for i in 0..=n {
                for j in 0..=n {
                    let want = if i >= j { rho.powi((i - j) as i32) } else { Rational::zero() };
                    assert_eq!(inv[(i, j)], want);
                }
            }
        }
    }

    #[test]
    fn general_schedule_inverse() {
        let h = HSchedule::new(
            Matrix::from_rows(vec![vec![1.2, 0.0, 0.0], vec![0.3, 1.5, 0.0], vec![-0.2, 0.4, 0.9]]).unwrap(),
        )
        .unwrap();
        let (ht, inv) = build_htilde(&h);
        let p = ht.matmul(&inv).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - want).abs() < 1e-12);
            }
        }
        assert!(HSchedule::new(Matrix::from_rows(vec![vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap()).is_err());
    }

    #[test]
    fn ab_examples() {
        let cert = build_certificate(1, &q(-1, 2), &q(1, 1), &q(1, 1)).unwrap();
        let (a, b) = build_ab(&cert).unwrap();
        assert_eq!(a, mat(vec![vec![q(0, 1), q(-1, 1)], vec![q(0, 1), q(2, 1)]]));
        assert_eq!(b, mat(vec![vec![q(0, 1), q(0, 1)], vec![q(0, 1), q(3, 1)]]));

        let mut zero = build_certificate(3, &-0.6, &1.2, &1.0).unwrap();
        zero.lambda.values_mut().for_each(|v| *v = 0.0);
        let (a, b) = build_ab(&zero).unwrap();
        assert!(a.iter().chain(b.iter()).all(|x| *x == 0.0));

        let mut broken = build_certificate(3, &-0.6, &1.2, &1.0).unwrap();
        broken.lambda.remove(&(3, 0));
        assert!(matches!(build_ab(&broken), Err(Error::MalformedCertificate(_))));
    }

    #[test]
    fn b_is_symmetric_with_zero_border() {
        for n in 1..=7 {
            let cert = build_certificate(n, &-0.55, &0.9, &1.0).unwrap();
            let (a, b) = build_ab(&cert).unwrap();
            assert!(b.is_symmetric());
            for k in 0..=n {
                assert_eq!(b[(0, k)], 0.0);
                assert_eq!(a[(k, 0)], 0.0);
                for j in 0..k {
                    assert_eq!(a[(k, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn pep_matrix_n1_example() {
        let cert = build_certificate(1, &q(-1, 2), &q(1, 1), &q(1, 1)).unwrap();
        let set = PepMatrixSet::for_certificate(&cert).unwrap();
        assert_eq!(set.s, mat(vec![vec![q(0, 1), q(1, 1)], vec![q(-1, 1), q(0, 1)]]));
        assert!(set.s_sym.iter().all(Zero::is_zero));
        let (a, b) = build_ab(&cert).unwrap();
        assert!(assemble_pep_matrix(&a, &b, &set.htilde_inv, &q(1, 1), &cert.tau, &q(1, 1)).is_err());
        assert!(assemble_pep_matrix(&a, &b, &set.htilde_inv, &q(0, 1), &q(0, 1), &q(1, 1)).is_err());
    }

    #[test]
    fn kappa_zero_drops_b_term() {
        let cert = build_certificate(3, &-0.6, &1.0, &1.0).unwrap();
        let set = PepMatrixSet::for_certificate(&cert).unwrap();
        let (a, _) = build_ab(&cert).unwrap();
        let zero_b = Matrix::zeros(4, 4);
        let (s, _) = assemble_pep_matrix(&a, &zero_b, &set.htilde_inv, &0.0, &cert.tau, &1.0).unwrap();
        assert_eq!(s, set.s);
    }

    fn dot(u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Σλ⟨g_j, x_i⁺ − x_j⁺⟩ = −⟨g, Ax⟩ and Σλ‖x_i⁺ − x_j⁺‖² = ⟨Bx, x⟩
    /// on random gradients, with points rebuilt from x = −(1/L)H̃g.
    #[test]
    fn bilinear_identities_on_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &(n, rho, eta, l) in &[(1, -0.5, 1.0, 1.0), (3, -0.62, 1.3, 2.0), (5, -0.3, 0.4, 0.7)] {
            let cert = build_certificate(n, &rho, &eta, &l).unwrap();
            let set = PepMatrixSet::for_certificate(&cert).unwrap();
            for trial in 0..100 {
                let d = [1, 2, 5][trial % 3];
                let g: Vec<Vec<f64>> =
                    (0..=n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
                // x coordinate-wise: x[:, c] = −(1/L) H̃ g[:, c]
                let mut x = vec![vec![0.0; d]; n + 1];
                for c in 0..d {
                    let gc: Vec<f64> = g.iter().map(|v| v[c]).collect();
                    let xc = set.htilde.matvec(&gc).unwrap();
                    for k in 0..=n {
                        x[k][c] = -xc[k] / l;
                    }
                }
                let mut plus = vec![vec![0.0; d]; n + 1];
                for k in 0..=n {
                    for c in 0..d {
                        plus[k][c] = if k == 0 { x[0][c] } else { plus[k - 1][c] + x[k][c] };
                    }
                }
                let diff = |i: usize, j: usize| -> Vec<f64> { (0..d).map(|c| plus[i][c] - plus[j][c]).collect() };
                let lam: &BTreeMap<(usize, usize), f64> = &cert.lambda;
                let inner: f64 = lam.iter().map(|(&(i, j), w)| w * dot(&g[j], &diff(i, j))).sum();
                let sq: f64 = lam.iter().map(|(&(i, j), w)| w * dot(&diff(i, j), &diff(i, j))).sum();
                let (mut ax, mut bx) = (0.0, 0.0);
                for c in 0..d {
                    let xc: Vec<f64> = x.iter().map(|v| v[c]).collect();
                    let gc: Vec<f64> = g.iter().map(|v| v[c]).collect();
                    ax += dot(&gc, &set.a.matvec(&xc).unwrap());
                    bx += set.b.quadratic_form(&xc).unwrap();
                }
                assert!((inner + ax).abs() <= 1e-10 * inner.abs().max(1.0), "n={n} trial={trial}");
                assert!((sq - bx).abs() <= 1e-10 * sq.abs().max(1.0), "n={n} trial={trial}");
            }
        }
    }
}

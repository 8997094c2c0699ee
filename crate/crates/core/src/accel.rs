//! Two-tap predictor design and the optimal mixing parameter.
//!
//! Each node blends the plain mixing step x^W = W x(t) with a short linear
//! extrapolation x^P = theta3 x^W + theta2 x(t) + theta1 x(t-1):
//!
//!   x(t+1) = alpha x^P + (1 - alpha) x^W.
//!
//! Folding the predictor in gives the one-parameter family
//! W3[alpha] = (1 - alpha + alpha*theta3) W + alpha*theta2 I with companion
//! form Phi[alpha] = [[W3[alpha], alpha*theta1 I], [I, 0]]. Every eigenvalue
//! lambda of W contributes the root pair of
//!
//!   mu^2 - mu lw3(lambda) - alpha*theta1 = 0,
//!
//! and the per-branch max modulus J_i(alpha) is piecewise: sqrt(-alpha*theta1)
//! once the pair has gone complex, the larger real root before that. The
//! optimal alpha* sits exactly where the lambda2 pair coalesces, i.e. at the
//! smaller root of
//!
//!   q^2 alpha^2 + (2 lambda q + 4 theta1) alpha + lambda^2 = 0,
//!   q = theta2 + (theta3 - 1) lambda,
//!
//! which this module solves in the cancellation-free form 2c / (-b + s).

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::spectral::{self, Spectrum};
use crate::weights::WeightMatrix;

/// lambda2 may approach 1 only up to this gap; Eq.-level quantities are
/// ill-conditioned closer in.
const LAMBDA2_MAX: f64 = 1.0 - 1e-9;

/// Predictor coefficients (theta1, theta2, theta3) with theta1 + theta2 +
/// theta3 = 1, theta3 >= 1, theta2 >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorParams {
    theta1: f64,
    theta2: f64,
    theta3: f64,
}

impl PredictorParams {
    /// Validates admissibility: coefficients sum to 1 within 1e-12,
    /// theta3 >= 1 and theta2 >= 0 (hence theta1 <= 0).
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Result<Self> {
        let sum = theta1 + theta2 + theta3;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "predictor coefficients must sum to 1, got {sum}"
            )));
        }
        if theta3 < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "theta3 must be >= 1, got {theta3}"
            )));
        }
        if theta2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "theta2 must be >= 0, got {theta2}"
            )));
        }
        Ok(PredictorParams {
            theta1,
            theta2,
            theta3,
        })
    }

    /// Least-squares extrapolation through the three taps at pseudo-times
    /// (-2, -1, 0), evaluated at +1: theta = A (A'A)^{-1} (1, 1)'.
    pub fn least_squares() -> Self {
        // A has rows (t, 1) for t = -2, -1, 0.
        let taps = [-2.0, -1.0, 0.0];
        let (mut s2, mut s1, mut s0) = (0.0, 0.0, 0.0);
        for t in taps {
            s2 += t * t;
            s1 += t;
            s0 += 1.0;
        }
        // Solve (A'A) z = (1, 1)' where the target row of A would be (1, 1).
        let det = s2 * s0 - s1 * s1;
        let z0 = (s0 * 1.0 - s1 * 1.0) / det;
        let z1 = (-s1 * 1.0 + s2 * 1.0) / det;
        let coeff = |t: f64| t * z0 + z1;
        PredictorParams {
            theta1: coeff(taps[0]),
            theta2: coeff(taps[1]),
            theta3: coeff(taps[2]),
        }
    }

    /// The family (-eps, 0, 1 + eps), which attains the best possible
    /// asymptotic constant gamma = sqrt(2).
    pub fn asymptotic(eps: f64) -> Result<Self> {
        if eps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "asymptotic predictor needs eps > 0, got {eps}"
            )));
        }
        Ok(PredictorParams {
            theta1: -eps,
            theta2: 0.0,
            theta3: 1.0 + eps,
        })
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn theta3(&self) -> f64 {
        self.theta3
    }

    /// Upper end of the stability range [0, -1/theta1); infinite when
    /// theta1 = 0 (the predictor degenerates to plain mixing).
    pub fn stability_bound(&self) -> f64 {
        if self.theta1 == 0.0 {
            f64::INFINITY
        } else {
            -1.0 / self.theta1
        }
    }

    /// Asymptotic rate constant gamma(theta2, theta3) =
    /// sqrt((2(theta3 - 1) + theta2) / (theta3 - 1 + theta2)).
    /// Requires theta3 > 1 or theta2 > 0.
    pub fn gamma(&self) -> f64 {
        let d = self.theta3 - 1.0;
        ((2.0 * d + self.theta2) / (d + self.theta2)).sqrt()
    }
}

/// The accelerated operator: a weight matrix, a predictor, a mixing
/// parameter inside the stability range, and the cached W-spectrum.
#[derive(Debug, Clone)]
pub struct AcceleratedOperator {
    weights: WeightMatrix,
    theta: PredictorParams,
    alpha: f64,
    spectrum: Spectrum,
}

impl AcceleratedOperator {
    /// Operator at the optimal alpha for this weight matrix and predictor.
    pub fn optimal(w: &WeightMatrix, theta: PredictorParams) -> Result<Self> {
        let spectrum = spectral::symmetric_eigenvalues(w)?;
        Self::validate_spectrum(&spectrum)?;
        let alpha = optimal_alpha(spectrum.lambda2(), &theta)?;
        Ok(AcceleratedOperator {
            weights: w.clone(),
            theta,
            alpha,
            spectrum,
        })
    }

    /// Operator at an explicit alpha, validated against [0, -1/theta1).
    pub fn with_alpha(w: &WeightMatrix, theta: PredictorParams, alpha: f64) -> Result<Self> {
        let bound = theta.stability_bound();
        if !(0.0..bound).contains(&alpha) {
            return Err(Error::Instability { alpha, bound });
        }
        let spectrum = spectral::symmetric_eigenvalues(w)?;
        Self::validate_spectrum(&spectrum)?;
        Ok(AcceleratedOperator {
            weights: w.clone(),
            theta,
            alpha,
            spectrum,
        })
    }

    /// Skips the stability and spectrum-shape checks. Diagnostic path: lets
    /// tests and estimators probe divergent or degenerate configurations.
    pub fn new_unchecked(w: &WeightMatrix, theta: PredictorParams, alpha: f64) -> Self {
        let spectrum =
            spectral::symmetric_eigenvalues(w).expect("new_unchecked needs a symmetric matrix");
        AcceleratedOperator {
            weights: w.clone(),
            theta,
            alpha,
            spectrum,
        }
    }

    fn validate_spectrum(spectrum: &Spectrum) -> Result<()> {
        let l2 = spectrum.lambda2();
        if l2 <= 0.0 || l2 > LAMBDA2_MAX {
            return Err(Error::OutOfDomain(format!(
                "lambda2 must lie in (0, 1 - 1e-9], got {l2}"
            )));
        }
        let ln = spectrum.lambda_n();
        if ln.abs() > l2 {
            return Err(Error::ConditionViolation {
                condition: "|lambda_n| <= lambda2 (apply lazy_transform first)",
                slack: ln.abs() - l2,
            });
        }
        Ok(())
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    pub fn params(&self) -> &PredictorParams {
        &self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda2(&self) -> f64 {
        self.spectrum.lambda2()
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn n(&self) -> usize {
        self.weights.n()
    }

    /// Analytic rho(Phi - J_inf) at this operator's alpha.
    pub fn analytic_radius(&self) -> f64 {
        spectral::phi_spectrum(&self.spectrum, &self.theta, self.alpha).radius()
    }

    /// Explicit 2N x 2N companion matrix [[W3, alpha*theta1 I], [I, 0]].
    /// Test oracle; the engine never materializes this.
    pub fn assemble_phi(&self) -> SquareMatrix {
        let n = self.n();
        let c_w = 1.0 - self.alpha + self.alpha * self.theta.theta3();
        let c_i = self.alpha * self.theta.theta2();
        let c_mem = self.alpha * self.theta.theta1();
        let mut phi = SquareMatrix::zeros(2 * n);
        for i in 0..n {
            for j in 0..n {
                let mut v = c_w * self.weights.get(i, j);
                if i == j {
                    v += c_i;
                }
                phi.set(i, j, v);
            }
            phi.set(i, n + i, c_mem);
            phi.set(n + i, i, 1.0);
        }
        phi
    }
}

/// Coefficients of q^2 a^2 + (2 lq + 4 t1) a + l^2 whose roots are the
/// complex-region boundaries in alpha for the branch of eigenvalue `lam`.
fn region_quadratic(lam: f64, theta: &PredictorParams) -> (f64, f64, f64, f64) {
    let q = theta.theta2() + (theta.theta3() - 1.0) * lam;
    let a = q * q;
    let b = 2.0 * lam * q + 4.0 * theta.theta1();
    let c = lam * lam;
    // b^2 - 4ac simplifies to 16 theta1 (theta1 + lam q); evaluate the
    // simplified form to avoid cancellation, clamping roundoff at zero.
    let t1 = theta.theta1();
    let mut disc = 16.0 * (t1 * t1 + t1 * lam * q);
    if disc < 0.0 {
        let scale = 16.0 * (t1 * t1 + (t1 * lam * q).abs());
        if -disc <= 4e-15 * scale {
            disc = 0.0;
        }
    }
    (a, b, c, disc)
}

/// The optimal mixing parameter alpha* for the dominant branch lambda2.
///
/// Solves the coalescence quadratic in the stable form 2c / (-b + sqrt(D));
/// for admissible theta and lambda2 in (0, 1), b < 0 and D >= 0, so no
/// cancellation occurs. lambda2 = 0 returns 0 by continuity (this includes
/// the 0/0 point theta2 = 0, where the convention is documented).
pub fn optimal_alpha(lambda2: f64, theta: &PredictorParams) -> Result<f64> {
    if !(0.0..=LAMBDA2_MAX).contains(&lambda2) {
        return Err(Error::OutOfDomain(format!(
            "lambda2 must lie in [0, 1 - 1e-9], got {lambda2}"
        )));
    }
    if lambda2 == 0.0 {
        return Ok(0.0);
    }
    let (a, b, c, disc) = region_quadratic(lambda2, theta);
    if disc < 0.0 {
        return Err(Error::OutOfDomain(format!(
            "no real coalescence point for lambda2 = {lambda2}"
        )));
    }
    if b == 0.0 {
        // Only reachable at theta = (0, 0, 1): no acceleration exists.
        return Err(Error::DegenerateParameters(
            "theta2 = 0 and theta3 = 1 leave no predictor to mix in".into(),
        ));
    }
    let s = disc.sqrt();
    if a == 0.0 {
        return Ok(-c / b);
    }
    Ok(2.0 * c / (-b + s))
}

/// Lower and upper boundaries (alpha*_i, alpha**_i) of the complex-root
/// region for the branch of eigenvalue `lam_i`. The upper boundary is
/// infinite when the quadratic degenerates to linear (q = 0).
pub fn alpha_region_bounds(lam_i: f64, theta: &PredictorParams) -> Result<(f64, f64)> {
    if lam_i <= -1.0 || lam_i >= 1.0 {
        return Err(Error::OutOfDomain(format!(
            "branch eigenvalue must lie in (-1, 1), got {lam_i}"
        )));
    }
    let (a, b, c, disc) = region_quadratic(lam_i, theta);
    if disc < 0.0 {
        return Err(Error::OutOfDomain(format!(
            "no real region boundaries for lambda_i = {lam_i}"
        )));
    }
    if b == 0.0 {
        if c == 0.0 {
            // theta = (0, 0, 1) and lam = 0: the pair sits at the origin for
            // every alpha; the region is all of [0, inf).
            return Ok((0.0, f64::INFINITY));
        }
        return Err(Error::DegenerateParameters(
            "theta2 = 0 and theta3 = 1 leave no predictor to mix in".into(),
        ));
    }
    let s = disc.sqrt();
    let lower = 2.0 * c / (-b + s);
    let upper = if a == 0.0 {
        f64::INFINITY
    } else {
        (-b + s) / (2.0 * a)
    };
    Ok((lower, upper))
}

/// Per-branch cost J_i(alpha): the max modulus of the eigenvalue pair of
/// eigenvalue `lam_i` at mixing parameter `alpha`.
///
/// Piecewise: sqrt(-alpha * theta1) on [alpha*_i, -1/theta1], otherwise the
/// larger real root. The branch is selected by comparing alpha with alpha*_i
/// rather than by the discriminant sign, which keeps the boundary bit-stable.
pub fn cost_j(alpha: f64, lam_i: f64, theta: &PredictorParams) -> Result<f64> {
    let bound = theta.stability_bound();
    if !(0.0..=bound).contains(&alpha) {
        return Err(Error::OutOfDomain(format!(
            "alpha must lie in [0, {bound}], got {alpha}"
        )));
    }
    if theta.theta1() == 0.0 {
        // Plain mixing: the pair is {lam, 0} for every alpha.
        return Ok(lam_i.abs());
    }
    let (lower, _) = alpha_region_bounds(lam_i, theta)?;
    if alpha >= lower {
        return Ok((-alpha * theta.theta1()).sqrt());
    }
    let lw3 = (1.0 - alpha + alpha * theta.theta3()) * lam_i + alpha * theta.theta2();
    let disc = (lw3 * lw3 + 4.0 * alpha * theta.theta1()).max(0.0);
    Ok(0.5 * (lw3.abs() + disc.sqrt()))
}

/// rho(Phi[alpha*] - J_inf) predicted from lambda2 alone:
/// sqrt(-alpha* theta1).
pub fn predicted_radius(lambda2: f64, theta: &PredictorParams) -> Result<f64> {
    let alpha = optimal_alpha(lambda2, theta)?;
    Ok((-alpha * theta.theta1()).max(0.0).sqrt())
}

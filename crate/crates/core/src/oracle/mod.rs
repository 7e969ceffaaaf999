//! Independent numerical route to the same fidelities: assemble the output
//! characteristic function literally, integrate the overlap as a 2-D Gaussian
//! integral (analytically and by adaptive quadrature), and average over input
//! ensembles with fixed-order rules. Nothing here reuses the closed-form kernel
//! beyond the raw beam-splitter coefficients, so agreement is a real cross-check.

pub mod quad;

use nalgebra::{Matrix2, Matrix4, Matrix4x2, Vector2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::averaging::Distribution;
use crate::fidelity::{point_fidelity, CoherentAmplitude};
use crate::params::{derived_coeffs, ChannelParams, GaussianCF2, TeleporterParams};
use crate::{Error, Result};

/// Exponent of a 2-D Gaussian integrand over `u = (x, y)`:
/// `exp(-u^T a u / 2 + l^T u + i phase^T u + s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticExponent {
    pub a: Matrix2<f64>,
    pub l: Vector2<f64>,
    pub phase: Vector2<f64>,
    pub s: f64,
}

impl QuadraticExponent {
    /// Purely real exponent (no oscillatory part).
    pub fn real(a: Matrix2<f64>, l: Vector2<f64>, s: f64) -> Self {
        Self {
            a,
            l,
            phase: Vector2::zeros(),
            s,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (a11, a22, a12) = (self.a[(0, 0)], self.a[(1, 1)], self.a[(0, 1)]);
        0.5 * (a11 + a22 - ((a11 - a22).powi(2) + 4.0 * a12 * a12).sqrt())
    }

    /// Real part of the integrand at `u`.
    pub fn integrand(&self, x: f64, y: f64) -> f64 {
        let u = Vector2::new(x, y);
        let q = -0.5 * (self.a * u).dot(&u) + self.l.dot(&u) + self.s;
        q.exp() * self.phase.dot(&u).cos()
    }
}

const MIN_EIG_FLOOR: f64 = 1e-10;

/// Real part of `(1/pi) * int d^2u exp(-u^T a u / 2 + l^T u + i phase^T u + s)`
/// (the overlap measure `d^2 lambda / pi` of characteristic-function integrals):
///
/// `(2 / sqrt(det a)) exp(s + l^T a^{-1} l / 2 - phase^T a^{-1} phase / 2)
///  * cos(l^T a^{-1} phase)`.
///
/// Requires `a` symmetric positive definite (minimum eigenvalue above 1e-10).
pub fn gaussian_integral_2d(q: &QuadraticExponent) -> Result<f64> {
    let asym = (q.a[(0, 1)] - q.a[(1, 0)]).abs();
    if asym > 1e-12 * q.a.amax().max(1.0) {
        return Err(Error::InvalidParam(format!(
            "quadratic form must be symmetric, off-diagonal mismatch {asym:e}"
        )));
    }
    let min_eig = q.min_eigenvalue();
    if !(min_eig > MIN_EIG_FLOOR) {
        return Err(Error::DivergentIntegral { min_eig });
    }
    let det = q.a[(0, 0)] * q.a[(1, 1)] - q.a[(0, 1)] * q.a[(1, 0)];
    let a_inv =
        q.a.try_inverse()
            .ok_or(Error::DivergentIntegral { min_eig })?;
    let lw = a_inv * q.l;
    let mw = a_inv * q.phase;
    let amp = 2.0 / det.sqrt() * (q.s + 0.5 * q.l.dot(&lw) - 0.5 * q.phase.dot(&mw)).exp();
    Ok(amp * q.l.dot(&mw).cos())
}

/// Output characteristic function of the teleporter for a given input amplitude
/// and an arbitrary two-mode Gaussian resource, multiplied by the conjugated input
/// characteristic function — i.e. the integrand of the fidelity overlap.
#[derive(Debug, Clone)]
pub struct OutputCFSpec<'a> {
    pub params: TeleporterParams,
    pub channel: ChannelParams,
    pub resource: &'a GaussianCF2,
    pub eps: CoherentAmplitude,
}

impl<'a> OutputCFSpec<'a> {
    pub fn new(
        params: TeleporterParams,
        channel: ChannelParams,
        resource: &'a GaussianCF2,
        eps: CoherentAmplitude,
    ) -> Self {
        Self {
            params,
            channel,
            resource,
            eps,
        }
    }

    /// The overlap integrand as a single Gaussian exponent over `(x, y) = lambda`.
    ///
    /// Collects the input factor, the measurement noise of the reflected port, the
    /// channel's thermal noise, the resource evaluated at
    /// `(lambda f4 - lambda* f3, -lambda e^{-kappa t})`, and the displacement
    /// phase `m = 2 (Im Delta, Re Delta)` with `Delta = (1 - f1) eps* - f2 eps`.
    pub fn exponent(&self) -> QuadraticExponent {
        let d = derived_coeffs(&self.params, &self.channel);
        let k = self.channel.damping();
        let g_q = self.params.g_q();
        let g_p = self.params.g_p();

        let mut a = Matrix2::identity() * (1.0 + d.f1 * d.f1 + d.f2 * d.f2 + 2.0 * d.gamma);
        a[(0, 0)] += -2.0 * d.f1 * d.f2 + 2.0 * d.reflectivity * g_p * g_p;
        a[(1, 1)] += 2.0 * d.f1 * d.f2 + 2.0 * d.reflectivity * g_q * g_q;

        // lambda -> (lambda f4 - lambda* f3, -lambda e^{-kappa t}) in real coords.
        let l_map =
            Matrix4x2::from_row_slice(&[d.f4 - d.f3, 0.0, 0.0, d.f4 + d.f3, -k, 0.0, 0.0, -k]);
        a += l_map.transpose() * self.resource.sigma() * l_map;

        let e = self.eps.as_complex();
        let delta = (1.0 - d.f1) * e.conj() - d.f2 * e;
        QuadraticExponent {
            a,
            l: Vector2::zeros(),
            phase: Vector2::new(2.0 * delta.im, 2.0 * delta.re),
            s: 0.0,
        }
    }

    /// The same integrand built the long way round, as a product of the four
    /// characteristic-function factors. Used to check the transcription above.
    pub fn overlap_integrand(&self, x: f64, y: f64) -> f64 {
        let d = derived_coeffs(&self.params, &self.channel);
        let k = self.channel.damping();
        let lam = Complex64::new(x, y);
        let q = -0.5 * (1.0 + d.f1 * d.f1 + d.f2 * d.f2 + 2.0 * d.gamma) * lam.norm_sqr()
            + d.f1 * d.f2 * (x * x - y * y)
            - d.reflectivity
                * (self.params.g_p() * self.params.g_p() * x * x
                    + self.params.g_q() * self.params.g_q() * y * y);
        let res = self
            .resource
            .evaluate(lam * d.f4 - lam.conj() * d.f3, -lam * k);
        let e = self.eps.as_complex();
        let delta = (1.0 - d.f1) * e.conj() - d.f2 * e;
        let phase = 2.0 * (x * delta.im + y * delta.re);
        q.exp() * res * phase.cos()
    }
}

/// Fidelity via the analytic Gaussian integral of [`OutputCFSpec::exponent`].
pub fn fidelity_by_quadrature(spec: &OutputCFSpec) -> Result<f64> {
    gaussian_integral_2d(&spec.exponent())
}

/// Fidelity via nested adaptive Simpson quadrature of the literal product
/// integrand.
///
/// The box holds 8 marginal standard deviations per axis (diagonal of the
/// inverse exponent matrix), which circumscribes the 8-sigma ellipse exactly;
/// sizing both axes from the smallest eigenvalue instead leaves a correlated
/// ridge sliding through a mostly empty box, where slices can slip between
/// quadrature nodes.
pub fn fidelity_by_tensor_quad(spec: &OutputCFSpec) -> Result<f64> {
    let exponent = spec.exponent();
    let min_eig = exponent.min_eigenvalue();
    if !(min_eig > MIN_EIG_FLOOR) {
        return Err(Error::DivergentIntegral { min_eig });
    }
    let det = exponent.a.determinant();
    let half_x = 8.0 * (exponent.a[(1, 1)] / det).sqrt();
    let half_y = 8.0 * (exponent.a[(0, 0)] / det).sqrt();
    // Adaptive Simpson typically lands 1-2 orders below its target; the outer
    // target must stay well above the noise the inner calls leave behind.
    let inner_tol = 3e-11;
    let outer_tol = 1e-9;
    let outer = |y: f64| {
        quad::adaptive_simpson(
            &|x: f64| spec.overlap_integrand(x, y),
            -half_x,
            half_x,
            inner_tol,
        )
    };
    let total = quad::adaptive_simpson(&outer, -half_y, half_y, outer_tol);
    Ok(total / std::f64::consts::PI)
}

// Shared pieces of the per-amplitude overlap, precomputed once per scenario so
// ensemble averages don't redo the 4x4 congruence at every node.
struct PreparedOverlap {
    norm: f64,
    a_inv: Matrix2<f64>,
    c_re: f64,
    c_im: f64,
}

impl PreparedOverlap {
    fn new(p: &TeleporterParams, c: &ChannelParams, resource: &GaussianCF2) -> Result<Self> {
        let spec = OutputCFSpec::new(*p, *c, resource, CoherentAmplitude::zero());
        let exponent = spec.exponent();
        let min_eig = exponent.min_eigenvalue();
        if !(min_eig > MIN_EIG_FLOOR) {
            return Err(Error::DivergentIntegral { min_eig });
        }
        let det = exponent.a.determinant();
        let a_inv = exponent
            .a
            .try_inverse()
            .ok_or(Error::DivergentIntegral { min_eig })?;
        let d = derived_coeffs(p, c);
        Ok(Self {
            norm: 2.0 / det.sqrt(),
            a_inv,
            c_re: 1.0 - d.f1 - d.f2,
            c_im: 1.0 - d.f1 + d.f2,
        })
    }

    fn fidelity(&self, eps: Complex64) -> f64 {
        let m = Vector2::new(-2.0 * self.c_im * eps.im, 2.0 * self.c_re * eps.re);
        self.norm * (-0.5 * m.dot(&(self.a_inv * m))).exp()
    }
}

/// Ensemble average of the quadrature-route fidelity, using fixed-order rules:
/// 128-point Gauss–Legendre on the line, a 512-point trapezoid mean on the
/// circle, and (after substituting `u = rho^2 / chi`) a 64-point Gauss–Laguerre
/// times 256-angle trapezoid product for the Gaussian ensemble.
pub fn avg_by_quadrature(
    p: &TeleporterParams,
    c: &ChannelParams,
    resource: &GaussianCF2,
    dist: &Distribution,
) -> Result<f64> {
    let prep = PreparedOverlap::new(p, c, resource)?;
    let value = match dist {
        Distribution::Line(d) => {
            let l = d.half_width();
            let (x, w) = quad::gauss_legendre(128);
            0.5 * x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * prep.fidelity(Complex64::new(l * x, 0.0)))
                .sum::<f64>()
        }
        Distribution::Circle(d) => {
            let a = d.radius();
            quad::trapezoid_mean_periodic(512, |phi| prep.fidelity(Complex64::from_polar(a, phi)))
        }
        Distribution::Gauss(d) => {
            let chi = d.chi();
            let (u, w) = quad::gauss_laguerre(64);
            u.iter()
                .zip(&w)
                .map(|(u, w)| {
                    let rho = (chi * u).sqrt();
                    w * quad::trapezoid_mean_periodic(256, |phi| {
                        prep.fidelity(Complex64::from_polar(rho, phi))
                    })
                })
                .sum::<f64>()
        }
    };
    Ok(value)
}

/// One random closed-form-vs-quadrature comparison point.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: TeleporterParams,
    pub channel: ChannelParams,
    pub eps: CoherentAmplitude,
}

/// A random ensemble-average comparison point.
#[derive(Debug, Clone)]
pub struct AvgScenario {
    pub params: TeleporterParams,
    pub channel: ChannelParams,
    pub dist: Distribution,
}

/// Draw a scenario from the documented comparison ranges:
/// `theta in [0.25, pi/2 - 0.25]`, gains in `[0.15, 2.2]`, `T in [0.6, 1]`,
/// `kappa_t in [0, 1.2]`, `n_bar in [0, 1.2]`, `r in [0, 1.6]`, `|eps| <= 4`.
pub fn sample_scenario<R: Rng>(rng: &mut R) -> Scenario {
    let theta = rng.gen_range(0.25..std::f64::consts::FRAC_PI_2 - 0.25);
    let g_q = rng.gen_range(0.15..2.2);
    let g_p = rng.gen_range(0.15..2.2);
    let t = rng.gen_range(0.6..1.0);
    let params = TeleporterParams::new(theta, g_q, g_p, t).expect("in-range by construction");
    let channel = ChannelParams::new(
        rng.gen_range(0.0..1.2),
        rng.gen_range(0.0..1.2),
        rng.gen_range(0.0..1.6),
    )
    .expect("in-range by construction");
    let (modulus, angle) = (
        4.0 * rng.gen_range(0.0..1.0_f64).sqrt(),
        rng.gen_range(0.0..2.0 * std::f64::consts::PI),
    );
    let eps = Complex64::from_polar(modulus, angle);
    Scenario {
        params,
        channel,
        eps: CoherentAmplitude::new(eps.re, eps.im).expect("finite"),
    }
}

/// Draw an ensemble-average scenario on the (narrower) ranges where the
/// fixed-order rules of [`avg_by_quadrature`] resolve the average to well below
/// 1e-12: `theta in [0.3, pi/2 - 0.3]`, gains in `[0.3, 1.8]`, `T in [0.7, 1]`,
/// `kappa_t, n_bar in [0, 1]`, `r in [0, 1.2]`, `L in [0.1, 2]`, `A in [0, 2.5]`,
/// `chi in [0.05, 1.2]`.
pub fn sample_avg_scenario<R: Rng>(rng: &mut R) -> AvgScenario {
    let theta = rng.gen_range(0.3..std::f64::consts::FRAC_PI_2 - 0.3);
    let g_q = rng.gen_range(0.3..1.8);
    let g_p = rng.gen_range(0.3..1.8);
    let t = rng.gen_range(0.7..1.0);
    let params = TeleporterParams::new(theta, g_q, g_p, t).expect("in-range by construction");
    let channel = ChannelParams::new(
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.2),
    )
    .expect("in-range by construction");
    let dist = match rng.gen_range(0..3u8) {
        0 => Distribution::line(rng.gen_range(0.1..2.0)).expect("in-range"),
        1 => Distribution::circle(rng.gen_range(0.0..2.5)).expect("in-range"),
        _ => Distribution::gauss(rng.gen_range(0.05..1.2)).expect("in-range"),
    };
    AvgScenario {
        params,
        channel,
        dist,
    }
}

/// A random (not necessarily physical) positive-definite two-mode Gaussian
/// resource: eigenvalues uniform in `[0.3, 4]` conjugated by a random rotation.
pub fn sample_resource<R: Rng>(rng: &mut R) -> GaussianCF2 {
    let m = Matrix4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let q = m.qr().q();
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::from_fn(|_, _| rng.gen_range(0.3..4.0)));
    let sigma = q * d * q.transpose();
    GaussianCF2::new(0.5 * (sigma + sigma.transpose())).expect("positive definite by construction")
}

/// Worst disagreement seen during a comparison run.
#[derive(Debug, Clone)]
pub struct WorstCase {
    pub scenario: Scenario,
    pub closed: f64,
    pub integral: f64,
    pub tensor: f64,
    pub deviation: f64,
}

/// Summary of a closed-form vs quadrature regression run.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub trials: usize,
    pub max_abs_dev: f64,
    pub failures: usize,
    pub worst: Option<WorstCase>,
}

/// Compare the closed-form fidelity against both quadrature routes on `trials`
/// seeded random scenarios with a two-mode squeezed vacuum resource. A trial
/// fails when either route deviates by more than `tol`.
pub fn compare_fidelity_routes(trials: usize, seed: u64, tol: f64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        trials,
        max_abs_dev: 0.0,
        failures: 0,
        worst: None,
    };
    for _ in 0..trials {
        let sc = sample_scenario(&mut rng);
        let resource = GaussianCF2::tmsv(sc.channel.r())?;
        let closed = point_fidelity(&sc.params, &sc.channel, sc.eps)?;
        let spec = OutputCFSpec::new(sc.params, sc.channel, &resource, sc.eps);
        let integral = fidelity_by_quadrature(&spec)?;
        let tensor = fidelity_by_tensor_quad(&spec)?;
        let dev = (closed - integral).abs().max((closed - tensor).abs());
        if dev > tol {
            report.failures += 1;
        }
        if dev > report.max_abs_dev {
            report.max_abs_dev = dev;
            report.worst = Some(WorstCase {
                scenario: sc,
                closed,
                integral,
                tensor,
                deviation: dev,
            });
        }
    }
    Ok(report)
}

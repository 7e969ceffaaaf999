//! Protocol and channel parameters, derived beam-splitter coefficients, and
//! two-mode Gaussian resource states.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::{ensure_finite, Error, Result};

/// Default upper bound on the displacement gains accepted by constructors and used
/// by the optimizer's search box.
pub const DEFAULT_G_MAX: f64 = 20.0;

/// Safe upper cutoff for squeezing searches: beyond this `tanh 2r` is 1 to machine
/// precision and every threshold formula has saturated.
pub const R_CAP: f64 = 10.0;

/// Smallest covariance eigenvalue accepted for a resource characteristic function.
/// `exp(-v^T sigma v / 2)` with an eigenvalue this small is flat over the whole
/// quadrature integration range, i.e. the "state" has effectively infinite variance.
pub const SIGMA_EIGENVALUE_FLOOR: f64 = 1e-12;

/// Measurement/feed-forward settings of the teleporter: the rotation angle of the
/// measured quadrature pair, the two displacement gains, and the transmissivity of
/// the mixing beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleporterParams {
    theta: f64,
    g_q: f64,
    g_p: f64,
    transmissivity: f64,
}

impl TeleporterParams {
    /// `theta` in the open interval `(0, pi/2)`, gains in `[0, DEFAULT_G_MAX]`,
    /// transmissivity in `(0, 1]`.
    pub fn new(theta: f64, g_q: f64, g_p: f64, transmissivity: f64) -> Result<Self> {
        Self::with_g_max(theta, g_q, g_p, transmissivity, DEFAULT_G_MAX)
    }

    /// Same as [`TeleporterParams::new`] but with a caller-chosen gain cap.
    pub fn with_g_max(
        theta: f64,
        g_q: f64,
        g_p: f64,
        transmissivity: f64,
        g_max: f64,
    ) -> Result<Self> {
        ensure_finite("theta", theta)?;
        ensure_finite("g_q", g_q)?;
        ensure_finite("g_p", g_p)?;
        ensure_finite("transmissivity", transmissivity)?;
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParam(format!(
                "theta must lie in (0, pi/2), got {theta}"
            )));
        }
        if !(g_max > 0.0 && g_max.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "g_max must be positive and finite, got {g_max}"
            )));
        }
        for (name, g) in [("g_q", g_q), ("g_p", g_p)] {
            if !(0.0..=g_max).contains(&g) {
                return Err(Error::InvalidParam(format!(
                    "{name} must lie in [0, {g_max}], got {g}"
                )));
            }
        }
        if !(transmissivity > 0.0 && transmissivity <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "transmissivity must lie in (0, 1], got {transmissivity}"
            )));
        }
        Ok(Self {
            theta,
            g_q,
            g_p,
            transmissivity,
        })
    }

    /// Symmetric settings `theta = pi/4`, `g_q = g_p = g`.
    pub fn balanced(g: f64, transmissivity: f64) -> Result<Self> {
        Self::new(std::f64::consts::FRAC_PI_4, g, g, transmissivity)
    }

    /// Textbook operating point: unit gains, `theta = pi/4`, ideal beam splitter.
    pub fn standard() -> Self {
        Self {
            theta: std::f64::consts::FRAC_PI_4,
            g_q: 1.0,
            g_p: 1.0,
            transmissivity: 1.0,
        }
    }

    // The optimizer assembles trial points that already live inside a validated
    // box, so it skips the per-evaluation domain checks.
    pub(crate) fn unchecked(theta: f64, g_q: f64, g_p: f64, transmissivity: f64) -> Self {
        Self {
            theta,
            g_q,
            g_p,
            transmissivity,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn g_q(&self) -> f64 {
        self.g_q
    }

    pub fn g_p(&self) -> f64 {
        self.g_p
    }

    pub fn transmissivity(&self) -> f64 {
        self.transmissivity
    }

    pub fn reflectivity(&self) -> f64 {
        1.0 - self.transmissivity
    }
}

/// Lossy thermal channel acting on the distributed resource mode, together with the
/// squeezing of the two-mode squeezed vacuum it carries.
///
/// `kappa_t` is the dimensionless product of the damping rate and the propagation
/// time, `n_bar` the mean thermal occupation of the environment, and `r >= 0` the
/// squeezing parameter of the resource.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    kappa_t: f64,
    n_bar: f64,
    r: f64,
}

impl ChannelParams {
    pub fn new(kappa_t: f64, n_bar: f64, r: f64) -> Result<Self> {
        ensure_finite("kappa_t", kappa_t)?;
        ensure_finite("n_bar", n_bar)?;
        ensure_finite("r", r)?;
        if kappa_t < 0.0 {
            return Err(Error::InvalidParam(format!(
                "kappa_t must be nonnegative, got {kappa_t}"
            )));
        }
        if n_bar < 0.0 {
            return Err(Error::InvalidParam(format!(
                "n_bar must be nonnegative, got {n_bar}"
            )));
        }
        if r < 0.0 {
            return Err(Error::InvalidParam(format!(
                "r must be nonnegative, got {r}"
            )));
        }
        Ok(Self { kappa_t, n_bar, r })
    }

    /// No propagation loss, squeezing `r`.
    pub fn lossless(r: f64) -> Result<Self> {
        Self::new(0.0, 0.0, r)
    }

    pub fn kappa_t(&self) -> f64 {
        self.kappa_t
    }

    pub fn n_bar(&self) -> f64 {
        self.n_bar
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Amplitude damping factor `e^{-kappa t}` of the channel.
    pub fn damping(&self) -> f64 {
        (-self.kappa_t).exp()
    }

    /// Added thermal noise `Gamma = (2 n_bar + 1)(1 - e^{-2 kappa t}) / 2`.
    ///
    /// Vanishes for `kappa_t = 0` and grows monotonically to `n_bar + 1/2`.
    pub fn gamma(&self) -> f64 {
        // exp_m1 keeps full precision for small kappa_t.
        (2.0 * self.n_bar + 1.0) * (-(-2.0 * self.kappa_t).exp_m1()) / 2.0
    }

    /// Replace the squeezing, keeping the channel.
    pub fn with_r(&self, r: f64) -> Result<Self> {
        Self::new(self.kappa_t, self.n_bar, r)
    }
}

/// Coefficients of the measured-quadrature combinations entering the output state.
///
/// `f1, f2` multiply the input amplitude, `f3, f4` the resource mode retained at
/// the sender; `reflectivity = 1 - T` and `gamma` is the channel's thermal noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCoeffs {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub reflectivity: f64,
    pub gamma: f64,
}

/// Beam-splitter/gain coefficients for the given settings and channel.
pub fn derived_coeffs(p: &TeleporterParams, c: &ChannelParams) -> DerivedCoeffs {
    let s = (p.transmissivity() / 2.0).sqrt();
    let (sin_t, cos_t) = p.theta().sin_cos();
    DerivedCoeffs {
        f1: s * (p.g_q() * cos_t + p.g_p() * sin_t),
        f2: s * (p.g_q() * cos_t - p.g_p() * sin_t),
        f3: s * (p.g_q() * sin_t + p.g_p() * cos_t),
        f4: s * (p.g_q() * sin_t - p.g_p() * cos_t),
        reflectivity: p.reflectivity(),
        gamma: c.gamma(),
    }
}

/// Gains `(g_q, g_p) = (1 / (sqrt(2T) cos theta), 1 / (sqrt(2T) sin theta))` that
/// make the output amplitude track the input exactly (`f1 = 1`, `f2 = 0`), so the
/// fidelity no longer depends on the teleported amplitude.
pub fn amplitude_independent_gains(theta: f64, transmissivity: f64) -> Result<(f64, f64)> {
    ensure_finite("theta", theta)?;
    ensure_finite("transmissivity", transmissivity)?;
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParam(format!(
            "theta must lie in (0, pi/2), got {theta}"
        )));
    }
    if !(transmissivity > 0.0 && transmissivity <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "transmissivity must lie in (0, 1], got {transmissivity}"
        )));
    }
    let s = (2.0 * transmissivity).sqrt();
    Ok((1.0 / (s * theta.cos()), 1.0 / (s * theta.sin())))
}

/// A zero-mean two-mode Gaussian characteristic function
/// `chi(a, b) = exp(-v^T sigma v / 2)` with `v = (Re a, Im a, Re b, Im b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCF2 {
    sigma: Matrix4<f64>,
}

impl GaussianCF2 {
    /// Requires `sigma` symmetric with all eigenvalues above
    /// [`SIGMA_EIGENVALUE_FLOOR`].
    pub fn new(sigma: Matrix4<f64>) -> Result<Self> {
        let scale = sigma.amax().max(1.0);
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::UnphysicalResource(format!(
                        "sigma is not symmetric at ({i}, {j}): {} vs {}",
                        sigma[(i, j)],
                        sigma[(j, i)]
                    )));
                }
            }
        }
        if !sigma.iter().all(|x| x.is_finite()) {
            return Err(Error::UnphysicalResource(
                "sigma has non-finite entries".into(),
            ));
        }
        let min_eig = sigma
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &e| m.min(e));
        if min_eig < SIGMA_EIGENVALUE_FLOOR {
            return Err(Error::UnphysicalResource(format!(
                "sigma has eigenvalue {min_eig:e} below the floor {SIGMA_EIGENVALUE_FLOOR:e}"
            )));
        }
        Ok(Self { sigma })
    }

    /// Two-mode squeezed vacuum with squeezing `r >= 0`.
    ///
    /// Its covariance has `cosh 2r` on the diagonal and `-sinh 2r diag(1, -1)`
    /// cross-blocks; the eigenvalues are `e^{2r}` and `e^{-2r}` (twice each), so
    /// very large `r` fails the eigenvalue floor just like any other squashed-flat
    /// Gaussian.
    pub fn tmsv(r: f64) -> Result<Self> {
        ensure_finite("r", r)?;
        if r < 0.0 {
            return Err(Error::InvalidParam(format!(
                "r must be nonnegative, got {r}"
            )));
        }
        let ch = (2.0 * r).cosh();
        let sh = (2.0 * r).sinh();
        let mut sigma = Matrix4::identity() * ch;
        sigma[(0, 2)] = -sh;
        sigma[(2, 0)] = -sh;
        sigma[(1, 3)] = sh;
        sigma[(3, 1)] = sh;
        Self::new(sigma)
    }

    /// Two uncorrelated vacuum modes.
    pub fn vacuum() -> Self {
        Self {
            sigma: Matrix4::identity(),
        }
    }

    pub fn sigma(&self) -> &Matrix4<f64> {
        &self.sigma
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.sigma
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &e| m.min(e))
    }

    /// Evaluate the characteristic function at mode arguments `(a, b)`.
    pub fn evaluate(&self, a: Complex64, b: Complex64) -> f64 {
        let v = Vector4::new(a.re, a.im, b.re, b.im);
        (-0.5 * (self.sigma * v).dot(&v)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    #[test]
    fn gamma_value_and_limits() {
        let c = ChannelParams::new(0.2, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(c.gamma(), 0.1648399769821803496278, epsilon = 1e-16);
        assert_eq!(ChannelParams::lossless(0.4).unwrap().gamma(), 0.0);
        let hot = ChannelParams::new(60.0, 1.5, 0.0).unwrap();
        assert_abs_diff_eq!(hot.gamma(), 1.5 + 0.5, epsilon = 1e-14);
    }

    #[test]
    fn teleporter_domain_checks() {
        assert!(TeleporterParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(TeleporterParams::new(FRAC_PI_2, 1.0, 1.0, 1.0).is_err());
        assert!(TeleporterParams::new(0.5, -0.1, 1.0, 1.0).is_err());
        assert!(TeleporterParams::new(0.5, 1.0, 21.0, 1.0).is_err());
        assert!(TeleporterParams::new(0.5, 1.0, 1.0, 0.0).is_err());
        assert!(TeleporterParams::new(0.5, 1.0, 1.0, 1.2).is_err());
        assert!(TeleporterParams::new(f64::NAN, 1.0, 1.0, 1.0).is_err());
        assert!(TeleporterParams::with_g_max(0.5, 25.0, 1.0, 1.0, 30.0).is_ok());
    }

    #[test]
    fn channel_domain_checks() {
        assert!(ChannelParams::new(-0.1, 0.0, 0.0).is_err());
        assert!(ChannelParams::new(0.1, -0.2, 0.0).is_err());
        assert!(ChannelParams::new(0.1, 0.0, -0.3).is_err());
        assert!(ChannelParams::new(f64::INFINITY, 0.0, 0.0).is_err());
    }

    #[test]
    fn coefficients_at_balanced_settings() {
        // theta = pi/4, unit gains, T = 1: f1 = 1, f2 = 0, f3 = 1, f4 = 0.
        let p = TeleporterParams::standard();
        let c = ChannelParams::lossless(0.5).unwrap();
        let d = derived_coeffs(&p, &c);
        assert_abs_diff_eq!(d.f1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.f2, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.f3, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.f4, 0.0, epsilon = 1e-15);
        assert_eq!(d.reflectivity, 0.0);
        assert_eq!(d.gamma, 0.0);
    }

    #[test]
    // The frozen gq reference happens to equal sqrt(2): 1/(sqrt(2) cos(pi/3)).
    #[allow(clippy::approx_constant)]
    fn amplitude_independent_gains_values() {
        let (gq, gp) = amplitude_independent_gains(FRAC_PI_3, 1.0).unwrap();
        assert_abs_diff_eq!(gq, 1.414213562373095048802, epsilon = 1e-15);
        assert_abs_diff_eq!(gp, 0.8164965809277260327324, epsilon = 1e-15);

        // They do what their name says.
        let p = TeleporterParams::new(FRAC_PI_3, gq, gp, 1.0).unwrap();
        let d = derived_coeffs(&p, &ChannelParams::lossless(0.0).unwrap());
        assert_abs_diff_eq!(d.f1, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.f2, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn tmsv_eigenvalues_and_evaluation() {
        let r = 0.8;
        let cf = GaussianCF2::tmsv(r).unwrap();
        assert_abs_diff_eq!(cf.min_eigenvalue(), (-2.0 * r).exp(), epsilon = 1e-12);

        // Scalar form of the same quadratic: ch (|a|^2 + |b|^2) - 2 sh Re(a b).
        let a = Complex64::new(0.3, -0.7);
        let b = Complex64::new(-0.2, 0.4);
        let ch = (2.0 * r).cosh();
        let sh = (2.0 * r).sinh();
        let quad = ch * (a.norm_sqr() + b.norm_sqr()) - 2.0 * sh * (a * b).re;
        assert_abs_diff_eq!(cf.evaluate(a, b), (-0.5 * quad).exp(), epsilon = 1e-15);

        assert_eq!(GaussianCF2::vacuum().min_eigenvalue(), 1.0);
        assert!(GaussianCF2::tmsv(15.0).is_err());
        assert!(GaussianCF2::tmsv(-0.1).is_err());
    }

    #[test]
    fn asymmetric_sigma_rejected() {
        let mut sigma = Matrix4::identity();
        sigma[(0, 1)] = 0.5;
        assert!(matches!(
            GaussianCF2::new(sigma),
            Err(Error::UnphysicalResource(_))
        ));
    }

    #[test]
    fn balanced_matches_explicit() {
        let a = TeleporterParams::balanced(1.2, 0.9).unwrap();
        let b = TeleporterParams::new(FRAC_PI_4, 1.2, 1.2, 0.9).unwrap();
        assert_eq!(a, b);
    }
}

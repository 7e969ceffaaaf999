//! Closed-form teleportation fidelity for a single coherent amplitude, the
//! amplitude-independent gain tuning, and its optimum over the measurement angle
//! and the squeezing.

use num_complex::Complex64;

use crate::params::{amplitude_independent_gains, derived_coeffs, ChannelParams, TeleporterParams};
use crate::{ensure_finite, Error, Result};

/// Input coherent amplitude `eps = re + i im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentAmplitude {
    re: f64,
    im: f64,
}

impl CoherentAmplitude {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        ensure_finite("eps re", re)?;
        ensure_finite("eps im", im)?;
        Ok(Self { re, im })
    }

    pub fn zero() -> Self {
        Self { re: 0.0, im: 0.0 }
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for CoherentAmplitude {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Quadratic-form coefficients of the output–input overlap:
/// `F(eps) = exp([-K1 |D|^2 + K2 (D^2 + D*^2)] / G) / sqrt(G)` with
/// `D = (1 - f1) eps* - f2 eps` and `G = K1^2 - 4 K2^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityKernel {
    pub k1: f64,
    pub k2: f64,
    pub g: f64,
}

/// Evaluate the kernel `(K1, K2, G)`.
///
/// The squeezing-dependent pieces are assembled from the exactly factored
/// combinations
///
/// ```text
/// K1|_r = [e^{2r}((f3 - k)^2 + f4^2) + e^{-2r}((f3 + k)^2 + f4^2)] / 4
/// K2|_r = f4 [e^{2r}(f3 - k) + e^{-2r}(f3 + k)] / 4        (k = e^{-kappa t})
/// ```
///
/// which are algebraically identical to the `cosh 2r` / `sinh 2r` form but stay
/// fully accurate when `f3 e^{-kappa t} sinh 2r` nearly cancels `(f3^2 + ...) cosh 2r`
/// at large squeezing.
pub fn kernel(p: &TeleporterParams, c: &ChannelParams) -> Result<FidelityKernel> {
    let d = derived_coeffs(p, c);
    let k = c.damping();
    let e2r = (2.0 * c.r()).exp();
    let em2r = (-2.0 * c.r()).exp();

    let plus = (d.f3 + k).powi(2) + d.f4 * d.f4;
    let minus = (d.f3 - k).powi(2) + d.f4 * d.f4;
    let k1 = 0.5 * (1.0 + d.f1 * d.f1 + d.f2 * d.f2 + 2.0 * d.gamma)
        + 0.5 * d.reflectivity * (p.g_p() * p.g_p() + p.g_q() * p.g_q())
        + 0.25 * (e2r * minus + em2r * plus);
    let k2 = 0.5 * (d.f1 * d.f2 - 0.5 * d.reflectivity * (p.g_p() * p.g_p() - p.g_q() * p.g_q()))
        + 0.25 * d.f4 * (e2r * (d.f3 - k) + em2r * (d.f3 + k));

    // Product of the two (provably positive) brackets rather than the difference
    // of squares: no cancellation when |2 K2| is close to K1.
    let g = (k1 + 2.0 * k2) * (k1 - 2.0 * k2);
    if !(g > 0.0 && g.is_finite() && k1.is_finite()) {
        return Err(Error::NonPositiveG { k1, k2 });
    }
    Ok(FidelityKernel { k1, k2, g })
}

/// Teleportation fidelity of the coherent state with amplitude `eps`.
pub fn point_fidelity(
    p: &TeleporterParams,
    c: &ChannelParams,
    eps: CoherentAmplitude,
) -> Result<f64> {
    let ker = kernel(p, c)?;
    let d = derived_coeffs(p, c);
    let e = eps.as_complex();
    let delta = (1.0 - d.f1) * e.conj() - d.f2 * e;
    let exponent = (-ker.k1 * delta.norm_sqr() + 2.0 * ker.k2 * (delta * delta).re) / ker.g;
    Ok(exponent.exp() / ker.g.sqrt())
}

/// The positive bracket
/// `H(x, y) = 1/2 + Gamma + x^2 (1 + 2 T y^2 sinh^2 r) + e^{-2 kappa t} cosh(2r) / 2
///  - x y e^{-kappa t} sqrt(2T) sinh(2r)`.
///
/// With `(x, y) = (g_q, sin theta)` this equals `K1 + 2 K2`, with
/// `(x, y) = (g_p, cos theta)` it equals `K1 - 2 K2`. Both factors of `G` are of
/// this shape, and `H > 0` for every admissible parameter tuple.
pub fn h_function(x: f64, y: f64, transmissivity: f64, c: &ChannelParams) -> f64 {
    let sh = c.r().sinh();
    let sh2 = (2.0 * c.r()).sinh();
    let ch2 = (2.0 * c.r()).cosh();
    let k = c.damping();
    0.5 + c.gamma() + x * x * (1.0 + 2.0 * transmissivity * y * y * sh * sh) + 0.5 * k * k * ch2
        - x * y * k * (2.0 * transmissivity).sqrt() * sh2
}

/// Fidelity at the amplitude-independent gains for measurement angle `theta`:
/// `F = 1 / sqrt(H(g_q, sin theta) H(g_p, cos theta))`, independent of `eps`.
pub fn eps_independent_fidelity(theta: f64, transmissivity: f64, c: &ChannelParams) -> Result<f64> {
    let (g_q, g_p) = amplitude_independent_gains(theta, transmissivity)?;
    let prod = h_function(g_q, theta.sin(), transmissivity, c)
        * h_function(g_p, theta.cos(), transmissivity, c);
    if !(prod > 0.0 && prod.is_finite()) {
        return Err(Error::NonPositiveG {
            k1: prod,
            k2: f64::NAN,
        });
    }
    Ok(1.0 / prod.sqrt())
}

/// Amplitude-independent fidelity at the symmetric angle `theta = pi/4`:
/// `F = [1/T + Gamma + e^{-kappa t} (cosh(kappa t) cosh(2r) - sinh(2r))]^{-1}`.
///
/// For `T = 1`, `kappa_t = 0` this reduces to `(1 + tanh r) / 2`.
pub fn balanced_eps_independent_fidelity(transmissivity: f64, c: &ChannelParams) -> Result<f64> {
    if !(transmissivity > 0.0 && transmissivity <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "transmissivity must lie in (0, 1], got {transmissivity}"
        )));
    }
    // cosh(kt) cosh(2r) - sinh(2r) = e^{2r} sinh^2(kt/2) + e^{-2r} cosh^2(kt/2),
    // which avoids the cosh-sinh cancellation at small kappa_t.
    let k = c.damping();
    let sh_half = (0.5 * c.kappa_t()).sinh();
    let ch_half = (0.5 * c.kappa_t()).cosh();
    let bracket = 1.0 / transmissivity
        + c.gamma()
        + k * ((2.0 * c.r()).exp() * sh_half * sh_half + (-2.0 * c.r()).exp() * ch_half * ch_half);
    Ok(1.0 / bracket)
}

/// Margin of the symmetric angle against the two amplitude-independent stationarity
/// conditions: positive means `theta = pi/4` is the maximizing angle, zero marks the
/// pitchfork where a pair of off-symmetric maxima splits off.
///
/// The gap is `1 - (I_q + I_p) / 2` with
/// `I_q = e^{-kappa t} sinh(2r) / (1/T + 2 sinh^2 r)` and
/// `I_p = e^{-kappa t} sinh(2r) / (1/T + 1 + 2 Gamma + e^{-2 kappa t} cosh 2r)`;
/// past the bifurcation the off-symmetric pair satisfies `csc(2 theta) = (I_q + I_p) / 2`.
pub fn theta_stationarity_gap(transmissivity: f64, c: &ChannelParams) -> f64 {
    let k = c.damping();
    let sh2 = (2.0 * c.r()).sinh();
    let sh_sq = c.r().sinh().powi(2);
    let i_q = k * sh2 / (1.0 / transmissivity + 2.0 * sh_sq);
    let i_p =
        k * sh2 / (1.0 / transmissivity + 1.0 + 2.0 * c.gamma() + k * k * (2.0 * c.r()).cosh());
    1.0 - 0.5 * (i_q + i_p)
}

/// Result of maximizing the amplitude-independent fidelity over the angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsIndependentOptimum {
    pub value: f64,
    pub theta: f64,
    /// True when the symmetric-angle formula did not apply (past the pitchfork)
    /// and the optimum was located by a grid scan plus golden-section refinement.
    pub grid_fallback: bool,
}

const THETA_GRID: usize = 2000;
const THETA_MARGIN: f64 = 0.01;

/// Maximum of [`eps_independent_fidelity`] over `theta`.
///
/// While `theta = pi/4` satisfies the stationarity conditions with margin
/// ([`theta_stationarity_gap`] `>= 0`) the closed form
/// [`balanced_eps_independent_fidelity`] is returned directly. Past the pitchfork
/// the maximizing pair is symmetric about `pi/4`; the scan reports the smaller
/// angle of the two.
pub fn optimal_eps_independent_fidelity(
    transmissivity: f64,
    c: &ChannelParams,
) -> Result<EpsIndependentOptimum> {
    if theta_stationarity_gap(transmissivity, c) >= 0.0 {
        return Ok(EpsIndependentOptimum {
            value: balanced_eps_independent_fidelity(transmissivity, c)?,
            theta: std::f64::consts::FRAC_PI_4,
            grid_fallback: false,
        });
    }

    let lo = THETA_MARGIN;
    let hi = std::f64::consts::FRAC_PI_2 - THETA_MARGIN;
    let step = (hi - lo) / (THETA_GRID - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..THETA_GRID {
        let theta = lo + step * i as f64;
        let f = eps_independent_fidelity(theta, transmissivity, c)?;
        if f > best.1 {
            best = (theta, f);
        }
    }
    // The objective is exactly mirror-symmetric about pi/4; report the smaller of
    // the twin angles regardless of which side rounding favoured.
    if best.0 > std::f64::consts::FRAC_PI_4 {
        best.0 = std::f64::consts::FRAC_PI_2 - best.0;
    }

    let mut a = (best.0 - step).max(lo);
    let mut b = (best.0 + step).min(hi);
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = eps_independent_fidelity(x1, transmissivity, c)?;
    let mut f2 = eps_independent_fidelity(x2, transmissivity, c)?;
    for _ in 0..200 {
        if b - a < 1e-12 {
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eps_independent_fidelity(x1, transmissivity, c)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eps_independent_fidelity(x2, transmissivity, c)?;
        }
    }
    let theta = 0.5 * (a + b);
    Ok(EpsIndependentOptimum {
        value: eps_independent_fidelity(theta, transmissivity, c)?,
        theta,
        grid_fallback: true,
    })
}

/// Squeezing that maximizes the symmetric amplitude-independent fidelity for a
/// lossy channel: `r_max = ln(coth(kappa t / 2)) / 2`. For `kappa_t = 0` the
/// fidelity grows monotonically in `r` and there is no interior maximum.
pub fn r_max_eps_independent(kappa_t: f64) -> Result<f64> {
    ensure_finite("kappa_t", kappa_t)?;
    if kappa_t <= 0.0 {
        return Err(Error::NoInteriorMax);
    }
    Ok(0.5 * (0.5 * kappa_t).tanh().recip().ln())
}

//! Fidelity averaged over ensembles of input amplitudes — a segment of the real
//! axis, a circle, or an isotropic Gaussian — together with the closed-form optima
//! of those averages over gains and squeezing.

pub mod special;

pub use special::{erf, log_bessel_i0};

use crate::fidelity::{h_function, kernel};
use crate::params::{derived_coeffs, ChannelParams, TeleporterParams, R_CAP};
use crate::{ensure_finite, Error, Result};

/// Amplitudes distributed uniformly on the segment `[-L, L]` of the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineDist {
    half_width: f64,
}

impl LineDist {
    pub fn new(half_width: f64) -> Result<Self> {
        ensure_finite("line half-width", half_width)?;
        if half_width <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "line half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self { half_width })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
}

/// Amplitudes distributed uniformly on the circle `|eps| = A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleDist {
    radius: f64,
}

impl CircleDist {
    pub fn new(radius: f64) -> Result<Self> {
        ensure_finite("circle radius", radius)?;
        if radius < 0.0 {
            return Err(Error::InvalidParam(format!(
                "circle radius must be nonnegative, got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Amplitudes with the isotropic Gaussian density `exp(-|eps|^2 / chi) / (pi chi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussDist {
    chi: f64,
}

impl GaussDist {
    pub fn new(chi: f64) -> Result<Self> {
        ensure_finite("gaussian width chi", chi)?;
        if chi <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "gaussian width chi must be positive, got {chi}"
            )));
        }
        Ok(Self { chi })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }
}

/// The three supported input ensembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Line(LineDist),
    Circle(CircleDist),
    Gauss(GaussDist),
}

impl Distribution {
    pub fn line(half_width: f64) -> Result<Self> {
        Ok(Self::Line(LineDist::new(half_width)?))
    }

    pub fn circle(radius: f64) -> Result<Self> {
        Ok(Self::Circle(CircleDist::new(radius)?))
    }

    pub fn gauss(chi: f64) -> Result<Self> {
        Ok(Self::Gauss(GaussDist::new(chi)?))
    }
}

// Mismatch coefficients of the two quadratures: u_q = 1 - sqrt(2T) g_q cos(theta)
// multiplies the real part of the input, u_p = 1 - sqrt(2T) g_p sin(theta) the
// imaginary part. Both vanish at the amplitude-independent gains.
fn mismatch(p: &TeleporterParams) -> (f64, f64) {
    let s = (2.0 * p.transmissivity()).sqrt();
    (
        1.0 - s * p.g_q() * p.theta().cos(),
        1.0 - s * p.g_p() * p.theta().sin(),
    )
}

/// Curvature of the line average's exponent: `M = u_q^2 (K1 - 2 K2)`, so that the
/// fidelity along the real axis is `F(x) = exp(-M x^2 / G) / sqrt(G)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineAuxiliary {
    pub m: f64,
}

pub fn line_auxiliary(p: &TeleporterParams, c: &ChannelParams) -> Result<LineAuxiliary> {
    let ker = kernel(p, c)?;
    let (u_q, _) = mismatch(p);
    Ok(LineAuxiliary {
        m: u_q * u_q * (ker.k1 - 2.0 * ker.k2),
    })
}

/// Fidelity averaged over the line ensemble:
/// `avg F = sqrt(pi) erf(L sqrt(M/G)) / (2 L sqrt(M))`.
///
/// For `z = L sqrt(M/G) < 1e-6` (in particular exactly at the
/// amplitude-independent gains, where `M = 0`) the erf ratio is replaced by its
/// series `(1 - z^2/3 + z^4/10) / sqrt(G)`, which is exact to double precision
/// there.
pub fn avg_fidelity_line(p: &TeleporterParams, c: &ChannelParams, d: &LineDist) -> Result<f64> {
    let ker = kernel(p, c)?;
    let (u_q, _) = mismatch(p);
    let m = u_q * u_q * (ker.k1 - 2.0 * ker.k2);
    let l = d.half_width();
    let z = l * (m / ker.g).sqrt();
    if z < 1e-6 {
        let z2 = z * z;
        Ok((1.0 - z2 / 3.0 + z2 * z2 / 10.0) / ker.g.sqrt())
    } else {
        Ok(std::f64::consts::PI.sqrt() * erf(z) / (2.0 * l * m.sqrt()))
    }
}

/// Gain `g_p` that maximizes the line average at fixed `theta`, `g_q`:
/// `g_p = e^{-kappa t} sqrt(2T) cos(theta) sinh(2r) / (2 (1 + 2 T cos^2(theta) sinh^2 r))`.
///
/// (The line ensemble only probes the real quadrature, so `g_p` decouples from the
/// mismatch term and this is an unconditional closed form.)
pub fn gp_opt_line(theta: f64, transmissivity: f64, c: &ChannelParams) -> f64 {
    let cos_t = theta.cos();
    let sh = c.r().sinh();
    c.damping() * (2.0 * transmissivity).sqrt() * cos_t * (2.0 * c.r()).sinh()
        / (2.0 * (1.0 + 2.0 * transmissivity * cos_t * cos_t * sh * sh))
}

/// Exponent coefficients of the circle average: on `eps = A e^{i phi}` the
/// fidelity is `exp(-R1 + 2 R2 cos(2 phi)) / sqrt(G)`.
pub fn circle_exponents(
    p: &TeleporterParams,
    c: &ChannelParams,
    d: &CircleDist,
) -> Result<(f64, f64)> {
    let ker = kernel(p, c)?;
    let co = derived_coeffs(p, c);
    let w1 = 1.0 - co.f1;
    let a2 = d.radius() * d.radius();
    let r1 = a2 * (ker.k1 * (w1 * w1 + co.f2 * co.f2) + 4.0 * ker.k2 * w1 * co.f2) / ker.g;
    let r2 = a2 * (ker.k1 * w1 * co.f2 + ker.k2 * (w1 * w1 + co.f2 * co.f2)) / ker.g;
    Ok((r1, r2))
}

/// Fidelity averaged over the circle ensemble:
/// `avg F = exp(-R1 + ln I_0(2 |R2|)) / sqrt(G)`.
///
/// Folding the Bessel factor into the exponent keeps the result finite for large
/// radii, where `I_0` alone would overflow long before the average underflows.
pub fn avg_fidelity_circle(p: &TeleporterParams, c: &ChannelParams, d: &CircleDist) -> Result<f64> {
    let ker = kernel(p, c)?;
    let (r1, r2) = circle_exponents(p, c, d)?;
    Ok((-r1 + log_bessel_i0(2.0 * r2.abs())).exp() / ker.g.sqrt())
}

// Kernel diagonal at the symmetric point theta = pi/4, g_q = g_p = g, where
// K2 = 0 and K1 = Theta below; a = g sqrt(T), s = e^{-kappa t}.
//
// Theta = Gamma + [g^2 (R + 1) + 1] / 2 + [e^{2r} (a - s)^2 + e^{-2r} (a + s)^2] / 4
fn balanced_theta(g: f64, transmissivity: f64, c: &ChannelParams) -> f64 {
    let a = g * transmissivity.sqrt();
    let s = c.damping();
    let d2 = (a - s) * (a - s);
    let p2 = (a + s) * (a + s);
    let grow = if d2 == 0.0 {
        0.0
    } else {
        d2 * (2.0 * c.r()).exp()
    };
    c.gamma()
        + 0.5 * (g * g * (2.0 - transmissivity) + 1.0)
        + 0.25 * (grow + p2 * (-2.0 * c.r()).exp())
}

fn check_gain_domain(g: f64, transmissivity: f64) -> Result<()> {
    ensure_finite("g", g)?;
    ensure_finite("transmissivity", transmissivity)?;
    if g < 0.0 {
        return Err(Error::InvalidParam(format!(
            "g must be nonnegative, got {g}"
        )));
    }
    if !(transmissivity > 0.0 && transmissivity <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "transmissivity must lie in (0, 1], got {transmissivity}"
        )));
    }
    Ok(())
}

/// Circle average at the symmetric point `theta = pi/4`, `g_q = g_p = g`, where it
/// collapses to `exp(-beta / Theta) / Theta` with `beta = A^2 (1 - g sqrt(T))^2`.
pub fn circle_symmetric_fidelity(
    g: f64,
    transmissivity: f64,
    c: &ChannelParams,
    d: &CircleDist,
) -> Result<f64> {
    check_gain_domain(g, transmissivity)?;
    let theta = balanced_theta(g, transmissivity, c);
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::NonPositiveG { k1: theta, k2: 0.0 });
    }
    let beta = d.radius() * d.radius() * (1.0 - g * transmissivity.sqrt()).powi(2);
    Ok((-beta / theta).exp() / theta)
}

/// Squeezing that maximizes the symmetric circle average [`circle_symmetric_fidelity`]
/// in `r` at fixed gain, transmissivity, channel, and radius.
///
/// Stationarity factorizes as `(Theta - beta) dTheta/dr = 0`, so candidates are the
/// minimum of `Theta` at `tanh(2r) = 2 a s / (a^2 + s^2)` and the crossings
/// `Theta = beta`, roots of `X^2 - b X + c^2 = 0` in `X = e^{2r}` with
/// `b = 4 (beta - Gamma - [g^2 (R+1) + 1]/2) / (a - s)^2` and `c = (a+s)/(a-s)`.
/// Each candidate is kept only if a second-difference probe confirms a local
/// maximum; the best survivor in `(0, R_CAP)` is returned, and
/// [`Error::NoInteriorMax`] signals a fidelity that is monotone or boundary-dominated.
pub fn r_max_circle(
    g: f64,
    transmissivity: f64,
    kappa_t: f64,
    n_bar: f64,
    d: &CircleDist,
) -> Result<f64> {
    check_gain_domain(g, transmissivity)?;
    let base = ChannelParams::new(kappa_t, n_bar, 0.0)?;
    let a = g * transmissivity.sqrt();
    let s = base.damping();
    let d2 = (a - s) * (a - s);
    let p2 = (a + s) * (a + s);
    let h0 = 0.5 * (g * g * (2.0 - transmissivity) + 1.0);
    let beta = d.radius() * d.radius() * (1.0 - a).powi(2);

    let fid = |r: f64| -> Result<f64> {
        circle_symmetric_fidelity(g, transmissivity, &base.with_r(r)?, d)
    };

    let mut candidates: Vec<f64> = Vec::new();
    let degenerate = (a - s).abs() <= 1e-12 * a.max(s).max(1.0);
    if !degenerate {
        if p2 > d2 {
            // dTheta/dr = 0  =>  e^{4r} = p2 / d2.
            candidates.push(0.25 * (p2 / d2).ln());
        }
        let b = 4.0 * (beta - base.gamma() - h0) / d2;
        let disc = b * b - 4.0 * (p2 / d2);
        if disc >= 0.0 {
            let root = disc.sqrt();
            for x in [0.5 * (b - root), 0.5 * (b + root)] {
                if x > 1.0 {
                    candidates.push(0.5 * x.ln());
                }
            }
        }
    } else if beta > base.gamma() + h0 && p2 > 0.0 {
        // Theta decreases monotonically to Gamma + h0; a single crossing remains.
        let x = 4.0 * (beta - base.gamma() - h0) / p2;
        if x < 1.0 && x > 0.0 {
            candidates.push(-0.5 * x.ln());
        }
    }

    let h = 1e-5;
    let mut best: Option<(f64, f64)> = None;
    for r in candidates {
        if !(r > 1e-9 && r < R_CAP - 1e-9) {
            continue;
        }
        let f0 = fid(r)?;
        if !(fid(r - h)? < f0 && fid(r + h)? < f0) {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, fb)) => f0 > fb,
        };
        if better {
            best = Some((r, f0));
        }
    }
    best.map(|(r, _)| r).ok_or(Error::NoInteriorMax)
}

/// Fidelity averaged over the Gaussian ensemble:
/// `avg F = [(H_q + chi u_q^2)(H_p + chi u_p^2)]^{-1/2}` with `H_q = K1 + 2 K2`,
/// `H_p = K1 - 2 K2` and the mismatch coefficients `u_q`, `u_p`.
pub fn avg_fidelity_gauss(p: &TeleporterParams, c: &ChannelParams, d: &GaussDist) -> Result<f64> {
    let ker = kernel(p, c)?;
    let (u_q, u_p) = mismatch(p);
    let prod = (ker.k1 + 2.0 * ker.k2 + d.chi() * u_q * u_q)
        * (ker.k1 - 2.0 * ker.k2 + d.chi() * u_p * u_p);
    if !(prod > 0.0 && prod.is_finite()) {
        return Err(Error::NonPositiveG {
            k1: ker.k1,
            k2: ker.k2,
        });
    }
    Ok(1.0 / prod.sqrt())
}

/// Gain that maximizes the symmetric Gaussian average:
/// `g = sqrt(T) (e^{-kappa t} sinh 2r + 2 chi) / (2 [1 + T (sinh^2 r + chi)])`.
pub fn gauss_opt_gain(transmissivity: f64, c: &ChannelParams, d: &GaussDist) -> f64 {
    let sh = c.r().sinh();
    transmissivity.sqrt() * (c.damping() * (2.0 * c.r()).sinh() + 2.0 * d.chi())
        / (2.0 * (1.0 + transmissivity * (sh * sh + d.chi())))
}

/// Gaussian average at `theta = pi/4`, `g_q = g_p =` [`gauss_opt_gain`]:
/// `avg F = [H(g, 1/sqrt 2) + chi (1 - g sqrt T)^2]^{-1}`.
pub fn gauss_opt_fidelity(transmissivity: f64, c: &ChannelParams, d: &GaussDist) -> Result<f64> {
    check_gain_domain(1.0, transmissivity)?;
    let g = gauss_opt_gain(transmissivity, c, d);
    let y = std::f64::consts::FRAC_1_SQRT_2;
    let h = h_function(g, y, transmissivity, c);
    let u = 1.0 - g * transmissivity.sqrt();
    let denom = h + d.chi() * u * u;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::NonPositiveG { k1: denom, k2: 0.0 });
    }
    Ok(1.0 / denom)
}

/// Squeezing that maximizes [`gauss_opt_fidelity`] for a lossy channel:
/// `r_max = ln{[(e^{kappa t} + 1) T chi + 1] / [(e^{kappa t} - 1) T chi - 1]} / 2`,
/// requiring `(e^{kappa t} - 1) T chi > 1`; otherwise (including `kappa_t = 0`)
/// the gain-optimized average is monotone in `r` on `(0, R_CAP)` and there is no
/// interior maximum. The location is independent of `n_bar`: thermal noise only
/// rescales the optimized average, it does not move the stationary point.
pub fn r_max_gauss(transmissivity: f64, kappa_t: f64, d: &GaussDist) -> Result<f64> {
    check_gain_domain(1.0, transmissivity)?;
    ensure_finite("kappa_t", kappa_t)?;
    if kappa_t < 0.0 {
        return Err(Error::InvalidParam(format!(
            "kappa_t must be nonnegative, got {kappa_t}"
        )));
    }
    let tc = transmissivity * d.chi();
    let lo = (kappa_t.exp() - 1.0) * tc - 1.0;
    if lo <= 0.0 {
        return Err(Error::NoInteriorMax);
    }
    let r = 0.5 * (((kappa_t.exp() + 1.0) * tc + 1.0) / lo).ln();
    if r >= R_CAP {
        return Err(Error::NoInteriorMax);
    }
    Ok(r)
}

/// Dispatch an average over any [`Distribution`].
pub fn avg_fidelity(p: &TeleporterParams, c: &ChannelParams, dist: &Distribution) -> Result<f64> {
    match dist {
        Distribution::Line(d) => avg_fidelity_line(p, c, d),
        Distribution::Circle(d) => avg_fidelity_circle(p, c, d),
        Distribution::Gauss(d) => avg_fidelity_gauss(p, c, d),
    }
}

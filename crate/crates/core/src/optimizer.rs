//! Deterministic multi-start Nelder–Mead maximization over any subset of the
//! teleporter settings `(g_q, g_p, theta)`.
//!
//! The simplex search itself is standard (reflection 1, expansion 2, contraction
//! 1/2, shrink 1/2); proposals leaving the search box are folded back by mirror
//! reflection, which keeps every evaluation inside the (convex) box without
//! distorting the local geometry near interior optima. Starts are laid out on a
//! fixed lattice, run sequentially, and ties are broken toward the earlier start,
//! so results are bit-reproducible.

use crate::averaging::{self, Distribution};
use crate::params::{amplitude_independent_gains, ChannelParams, TeleporterParams};
use crate::{ensure_finite, Error, Result};

/// Which of the three settings the optimizer may vary; `Fixed` pins a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamSpec {
    Free,
    Fixed(f64),
}

impl ParamSpec {
    pub fn is_free(&self) -> bool {
        matches!(self, ParamSpec::Free)
    }
}

/// Selection of free vs pinned settings for one optimization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParamSet {
    pub g_q: ParamSpec,
    pub g_p: ParamSpec,
    pub theta: ParamSpec,
}

impl FreeParamSet {
    pub fn all_free() -> Self {
        Self {
            g_q: ParamSpec::Free,
            g_p: ParamSpec::Free,
            theta: ParamSpec::Free,
        }
    }

    /// Everything pinned at the standard operating point except the listed names.
    /// Unknown names are rejected.
    pub fn from_names(free: &[&str]) -> Result<Self> {
        let mut set = Self {
            g_q: ParamSpec::Fixed(1.0),
            g_p: ParamSpec::Fixed(1.0),
            theta: ParamSpec::Fixed(std::f64::consts::FRAC_PI_4),
        };
        for name in free {
            match *name {
                "gq" | "g_q" => set.g_q = ParamSpec::Free,
                "gp" | "g_p" => set.g_p = ParamSpec::Free,
                "theta" => set.theta = ParamSpec::Free,
                other => {
                    return Err(Error::InvalidParam(format!(
                        "unknown parameter name '{other}' (expected gq, gp, theta)"
                    )))
                }
            }
        }
        Ok(set)
    }

    pub fn free_count(&self) -> usize {
        [self.g_q, self.g_p, self.theta]
            .iter()
            .filter(|s| s.is_free())
            .count()
    }
}

/// Search box: one interval for the angle, one shared by both gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub theta: (f64, f64),
    pub gain: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            theta: (0.01, std::f64::consts::FRAC_PI_2 - 0.01),
            gain: (0.0, crate::params::DEFAULT_G_MAX),
        }
    }
}

impl Bounds {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("theta", self.theta), ("gain", self.gain)] {
            ensure_finite(name, lo)?;
            ensure_finite(name, hi)?;
            if !(lo < hi) {
                return Err(Error::InvalidParam(format!(
                    "{name} bounds must satisfy lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        if !(self.theta.0 > 0.0 && self.theta.1 < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParam(format!(
                "theta bounds must lie inside (0, pi/2), got {:?}",
                self.theta
            )));
        }
        if self.gain.0 < 0.0 {
            return Err(Error::InvalidParam(format!(
                "gain lower bound must be nonnegative, got {}",
                self.gain.0
            )));
        }
        Ok(())
    }
}

/// Outcome of a multi-start maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_value: f64,
    pub best_params: TeleporterParams,
    /// Number of local searches launched (lattice plus warm starts).
    pub starts_used: usize,
    /// Total simplex iterations summed over all starts.
    pub iterations: u64,
    /// Whether the winning start met the convergence tolerances.
    pub converged: bool,
}

// Canonical axis order for the search coordinates: g_q, g_p, theta.
#[derive(Clone, Copy)]
enum Axis {
    GQ,
    GP,
    Theta,
}

const START_FRACTIONS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const DIAMETER_TOL: f64 = 1e-10;
const SPREAD_TOL: f64 = 1e-12;
const MAX_ITER: u64 = 4000;

/// Maximize `objective` over the free settings inside `bounds`, with the beam
/// splitter transmissivity held at `transmissivity`.
///
/// Runs 5^d Nelder–Mead searches from a fixed lattice over the box (d = number of
/// free settings) and returns the best local optimum found; `best_value` is the
/// objective evaluated exactly at `best_params`.
pub fn maximize<F>(
    transmissivity: f64,
    objective: F,
    free: &FreeParamSet,
    bounds: &Bounds,
) -> Result<OptimizationResult>
where
    F: Fn(&TeleporterParams) -> Result<f64>,
{
    maximize_with_starts(transmissivity, objective, free, bounds, &[])
}

fn maximize_with_starts<F>(
    transmissivity: f64,
    objective: F,
    free: &FreeParamSet,
    bounds: &Bounds,
    warm_starts: &[Vec<f64>],
) -> Result<OptimizationResult>
where
    F: Fn(&TeleporterParams) -> Result<f64>,
{
    bounds.validate()?;
    if !(transmissivity > 0.0 && transmissivity <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "transmissivity must lie in (0, 1], got {transmissivity}"
        )));
    }

    let mut axes: Vec<(Axis, (f64, f64))> = Vec::new();
    let mut fixed = [1.0, 1.0, std::f64::consts::FRAC_PI_4];
    for (i, (axis, spec)) in [
        (Axis::GQ, free.g_q),
        (Axis::GP, free.g_p),
        (Axis::Theta, free.theta),
    ]
    .into_iter()
    .enumerate()
    {
        match spec {
            ParamSpec::Free => {
                let b = match axis {
                    Axis::Theta => bounds.theta,
                    _ => bounds.gain,
                };
                axes.push((axis, b));
            }
            ParamSpec::Fixed(v) => {
                ensure_finite("fixed parameter", v)?;
                fixed[i] = v;
            }
        }
    }
    if axes.is_empty() {
        return Err(Error::InvalidParam(
            "at least one of gq, gp, theta must be free".into(),
        ));
    }
    // Catch out-of-domain pinned values up front.
    TeleporterParams::with_g_max(
        fixed[2],
        fixed[0],
        fixed[1],
        transmissivity,
        fixed[0].max(fixed[1]).max(bounds.gain.1),
    )?;

    let assemble = |x: &[f64]| -> TeleporterParams {
        let mut v = fixed;
        for (k, (axis, _)) in axes.iter().enumerate() {
            let i = match axis {
                Axis::GQ => 0,
                Axis::GP => 1,
                Axis::Theta => 2,
            };
            v[i] = x[k];
        }
        TeleporterParams::unchecked(v[2], v[0], v[1], transmissivity)
    };

    let eval = |x: &[f64]| -> Result<f64> {
        let p = assemble(x);
        let f = objective(&p)?;
        if !f.is_finite() {
            return Err(Error::NonFiniteObjective {
                g_q: p.g_q(),
                g_p: p.g_p(),
                theta: p.theta(),
            });
        }
        Ok(f)
    };

    let d = axes.len();
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(START_FRACTIONS.len().pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        starts.push(
            idx.iter()
                .zip(&axes)
                .map(|(&i, (_, (lo, hi)))| lo + START_FRACTIONS[i] * (hi - lo))
                .collect(),
        );
        let mut k = d;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < START_FRACTIONS.len() {
                break;
            }
            idx[k] = 0;
        }
        if idx.iter().all(|&i| i == 0) {
            break;
        }
    }
    for w in warm_starts {
        debug_assert_eq!(w.len(), d);
        starts.push(
            w.iter()
                .zip(&axes)
                .map(|(&x, (_, (lo, hi)))| x.clamp(*lo, *hi))
                .collect(),
        );
    }

    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    let mut total_iter: u64 = 0;
    let starts_used = starts.len();
    for x0 in &starts {
        let (x, f, iters, conv) = nelder_mead(&eval, x0, &axes)?;
        total_iter += iters;
        let better = match &best {
            None => true,
            Some((fb, _, _)) => f > *fb,
        };
        if better {
            best = Some((f, x, conv));
        }
    }

    let (best_value, x, converged) = best.expect("at least one start");
    let best_params = assemble(&x);
    Ok(OptimizationResult {
        best_value,
        best_params,
        starts_used,
        iterations: total_iter,
        converged,
    })
}

// Mirror a coordinate back into [lo, hi].
fn fold(x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let mut y = (x - lo).rem_euclid(2.0 * w);
    if y > w {
        y = 2.0 * w - y;
    }
    lo + y
}

type NmOutcome = (Vec<f64>, f64, u64, bool);

fn nelder_mead<E>(eval: &E, x0: &[f64], axes: &[(Axis, (f64, f64))]) -> Result<NmOutcome>
where
    E: Fn(&[f64]) -> Result<f64>,
{
    let d = x0.len();
    let fold_all = |x: &mut Vec<f64>| {
        for (k, (_, (lo, hi))) in axes.iter().enumerate() {
            x[k] = fold(x[k], *lo, *hi);
        }
    };

    // Initial simplex: x0 plus a 5% step of each axis span (backwards when that
    // would leave the box).
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    pts.push(x0.to_vec());
    for k in 0..d {
        let (lo, hi) = axes[k].1;
        let step = 0.05 * (hi - lo);
        let mut p = x0.to_vec();
        p[k] = if p[k] + step <= hi {
            p[k] + step
        } else {
            p[k] - step
        };
        pts.push(p);
    }
    // Minimize phi = -f.
    let mut vals: Vec<f64> = Vec::with_capacity(d + 1);
    for p in &pts {
        vals.push(-eval(p)?);
    }

    let mut iters: u64 = 0;
    let mut converged = false;
    while iters < MAX_ITER {
        iters += 1;
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
        let pts_s: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
        let vals_s: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
        pts = pts_s;
        vals = vals_s;

        let diameter = pts[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < DIAMETER_TOL && (vals[d] - vals[0]).abs() < SPREAD_TOL {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|k| pts[..d].iter().map(|p| p[k]).sum::<f64>() / d as f64)
            .collect();
        let shifted = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&pts[d])
                .map(|(c, w)| c + coef * (c - w))
                .collect();
            fold_all(&mut p);
            p
        };

        let xr = shifted(1.0);
        let fr = -eval(&xr)?;
        if fr < vals[0] {
            let xe = shifted(2.0);
            let fe = -eval(&xe)?;
            if fe < fr {
                pts[d] = xe;
                vals[d] = fe;
            } else {
                pts[d] = xr;
                vals[d] = fr;
            }
        } else if fr < vals[d - 1] {
            pts[d] = xr;
            vals[d] = fr;
        } else {
            let (xc, fc) = if fr < vals[d] {
                let x = shifted(0.5);
                let f = -eval(&x)?;
                (x, f)
            } else {
                let mut x: Vec<f64> = centroid
                    .iter()
                    .zip(&pts[d])
                    .map(|(c, w)| c - 0.5 * (c - w))
                    .collect();
                fold_all(&mut x);
                let f = -eval(&x)?;
                (x, f)
            };
            if fc < fr.min(vals[d]) {
                pts[d] = xc;
                vals[d] = fc;
            } else {
                for i in 1..=d {
                    let p: Vec<f64> = pts[i]
                        .iter()
                        .zip(&pts[0])
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    vals[i] = -eval(&p)?;
                    pts[i] = p;
                }
            }
        }
    }

    let mut ib = 0;
    for i in 1..=d {
        if vals[i] < vals[ib] {
            ib = i;
        }
    }
    Ok((pts[ib].clone(), -vals[ib], iters, converged))
}

/// Maximize an ensemble-averaged fidelity over the free settings.
///
/// On top of the start lattice this seeds the search with the
/// amplitude-independent gains for the working angle and, per ensemble, the
/// closed-form gain guesses (the line's decoupled `g_p`, the Gaussian's optimal
/// symmetric gain, and the same with `chi = A^2 / 2` as a stand-in for the
/// circle), so the returned optimum never falls below those references.
pub fn optimize_profile(
    dist: &Distribution,
    transmissivity: f64,
    c: &ChannelParams,
    free: &FreeParamSet,
    bounds: &Bounds,
) -> Result<OptimizationResult> {
    bounds.validate()?;
    let theta0 = match free.theta {
        ParamSpec::Fixed(v) => v,
        ParamSpec::Free => std::f64::consts::FRAC_PI_4,
    };
    let (ai_gq, ai_gp) =
        amplitude_independent_gains(theta0.clamp(bounds.theta.0, bounds.theta.1), transmissivity)?;

    let balanced_gain = match dist {
        Distribution::Line(_) => None,
        Distribution::Circle(d) => {
            let chi = (0.5 * d.radius() * d.radius()).max(1e-6);
            averaging::GaussDist::new(chi)
                .ok()
                .map(|g| averaging::gauss_opt_gain(transmissivity, c, &g))
        }
        Distribution::Gauss(d) => Some(averaging::gauss_opt_gain(transmissivity, c, d)),
    };
    let line_gp = match dist {
        Distribution::Line(_) => Some(averaging::gp_opt_line(theta0, transmissivity, c)),
        _ => None,
    };

    let mut warm: Vec<Vec<f64>> = Vec::new();
    let mut push_start = |gq: f64, gp: f64, th: f64| {
        let mut x = Vec::new();
        if free.g_q.is_free() {
            x.push(gq);
        }
        if free.g_p.is_free() {
            x.push(gp);
        }
        if free.theta.is_free() {
            x.push(th);
        }
        warm.push(x);
    };
    push_start(ai_gq, ai_gp, theta0);
    if let Some(gp) = line_gp {
        push_start(ai_gq, gp, theta0);
    }
    if let Some(g) = balanced_gain {
        push_start(g, g, std::f64::consts::FRAC_PI_4);
    }

    let dist = *dist;
    let chan = *c;
    maximize_with_starts(
        transmissivity,
        move |p| averaging::avg_fidelity(p, &chan, &dist),
        free,
        bounds,
        &warm,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::{gauss_opt_fidelity, gauss_opt_gain, GaussDist};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn recovers_quadratic_maximum() {
        let obj = |p: &TeleporterParams| {
            Ok(1.0
                - (p.g_q() - 1.3).powi(2)
                - 2.0 * (p.g_p() - 0.7).powi(2)
                - 0.5 * (p.theta() - 0.9).powi(2))
        };
        let r = maximize(1.0, obj, &FreeParamSet::all_free(), &Bounds::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.starts_used, 125);
        assert_abs_diff_eq!(r.best_value, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.best_params.g_q(), 1.3, epsilon = 1e-6);
        assert_abs_diff_eq!(r.best_params.g_p(), 0.7, epsilon = 1e-6);
        assert_abs_diff_eq!(r.best_params.theta(), 0.9, epsilon = 1e-6);
    }

    #[test]
    fn respects_pinned_parameters() {
        let obj = |p: &TeleporterParams| Ok(-(p.g_q() - 1.3).powi(2) - (p.g_p() - 0.7).powi(2));
        let free = FreeParamSet {
            g_q: ParamSpec::Free,
            g_p: ParamSpec::Fixed(0.5),
            theta: ParamSpec::Fixed(0.8),
        };
        let r = maximize(0.9, obj, &free, &Bounds::default()).unwrap();
        assert_eq!(r.best_params.g_p(), 0.5);
        assert_eq!(r.best_params.theta(), 0.8);
        assert_abs_diff_eq!(r.best_params.g_q(), 1.3, epsilon = 1e-6);
        assert_eq!(r.starts_used, 5);
    }

    #[test]
    fn boundary_maximum_is_found() {
        let obj = |p: &TeleporterParams| Ok(p.g_q());
        let free = FreeParamSet {
            g_q: ParamSpec::Free,
            g_p: ParamSpec::Fixed(1.0),
            theta: ParamSpec::Fixed(FRAC_PI_4),
        };
        let r = maximize(1.0, obj, &free, &Bounds::default()).unwrap();
        assert_abs_diff_eq!(r.best_value, 20.0, epsilon = 1e-7);
    }

    #[test]
    fn no_free_parameters_is_an_error() {
        let free = FreeParamSet {
            g_q: ParamSpec::Fixed(1.0),
            g_p: ParamSpec::Fixed(1.0),
            theta: ParamSpec::Fixed(FRAC_PI_4),
        };
        assert!(matches!(
            maximize(1.0, |_| Ok(0.0), &free, &Bounds::default()),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn non_finite_objective_is_reported() {
        let free = FreeParamSet {
            g_q: ParamSpec::Free,
            g_p: ParamSpec::Fixed(1.0),
            theta: ParamSpec::Fixed(FRAC_PI_4),
        };
        let err = maximize(1.0, |_| Ok(f64::NAN), &free, &Bounds::default()).unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective { .. }));
    }

    #[test]
    fn repeated_runs_are_bitwise_identical() {
        let c = ChannelParams::new(0.2, 0.1, 0.9).unwrap();
        let dist = Distribution::line(1.0).unwrap();
        let run = || {
            optimize_profile(
                &dist,
                0.95,
                &c,
                &FreeParamSet::all_free(),
                &Bounds::default(),
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.best_value.to_bits(), b.best_value.to_bits());
        assert_eq!(a.best_params.g_q().to_bits(), b.best_params.g_q().to_bits());
        assert_eq!(
            a.best_params.theta().to_bits(),
            b.best_params.theta().to_bits()
        );
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn gauss_profile_recovers_closed_form_optimum() {
        let c = ChannelParams::new(0.2, 0.0, 1.0).unwrap();
        let chi = GaussDist::new(1.0).unwrap();
        let dist = Distribution::Gauss(chi);
        let r = optimize_profile(
            &dist,
            1.0,
            &c,
            &FreeParamSet::all_free(),
            &Bounds::default(),
        )
        .unwrap();
        let g_star = gauss_opt_gain(1.0, &c, &chi);
        assert_abs_diff_eq!(r.best_params.theta(), FRAC_PI_4, epsilon = 1e-5);
        assert_abs_diff_eq!(r.best_params.g_q(), r.best_params.g_p(), epsilon = 1e-5);
        assert_abs_diff_eq!(r.best_params.g_q(), g_star, epsilon = 1e-5);
        assert_abs_diff_eq!(
            r.best_value,
            gauss_opt_fidelity(1.0, &c, &chi).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn from_names_parses_and_rejects() {
        let s = FreeParamSet::from_names(&["gq", "theta"]).unwrap();
        assert!(s.g_q.is_free());
        assert!(!s.g_p.is_free());
        assert!(s.theta.is_free());
        assert_eq!(s.free_count(), 2);
        assert!(FreeParamSet::from_names(&["bogus"]).is_err());
    }
}

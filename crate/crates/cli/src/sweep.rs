//! Sweep configs, built-in presets, and the CSV runner.
//!
//! A sweep is one swept axis, a map of fixed settings, and a list of curves.
//! Rows are ordered curve-major, then by axis point; evaluation may fan out
//! over a thread pool but the output is byte-identical for any thread count.

use std::collections::HashMap;

use cvteleport::averaging::{
    avg_fidelity, gauss_opt_fidelity, gauss_opt_gain, Distribution, GaussDist,
};
use cvteleport::fidelity::optimal_eps_independent_fidelity;
use cvteleport::optimizer::{optimize_profile, Bounds, FreeParamSet, ParamSpec};
use cvteleport::params::{amplitude_independent_gains, ChannelParams, TeleporterParams};
use rayon::prelude::*;
use serde::Deserialize;

use crate::{fmt_f64, Failure};

pub const CSV_HEADER: &str = "axis_name,curve_label,fidelity,g_q,g_p,theta,converged";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: AxisSpec,
    #[serde(default)]
    pub fixed: HashMap<String, f64>,
    pub curves: Vec<CurveSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    /// One of r, kappa_t, T, n_bar, theta, g_q, g_p, L, A, chi.
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub label: String,
    #[serde(default)]
    pub dist: Option<DistSpec>,
    pub mode: CurveMode,
    /// Per-curve overrides of the fixed settings.
    #[serde(default)]
    pub fixed: HashMap<String, f64>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    pub kind: DistKind,
    pub param: f64,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    Line,
    Circle,
    Gauss,
}

#[derive(Deserialize, Clone)]
#[serde(rename_all = "snake_case")]
pub enum CurveMode {
    /// Ensemble average at the fixed settings.
    Fixed,
    /// Closed-form optimum; only the Gaussian ensemble has one.
    ClosedForm,
    /// Gains matched so the fidelity is amplitude-independent, angle optimized.
    MatchedGains,
    /// Numerical maximization over the listed free parameters.
    Optimize { free: Vec<String> },
}

// Scenario settings a sweep can vary; defaults are the standard scheme.
#[derive(Clone, Copy)]
struct Settings {
    theta: f64,
    g_q: f64,
    g_p: f64,
    transmissivity: f64,
    kappa_t: f64,
    n_bar: f64,
    r: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            theta: std::f64::consts::FRAC_PI_4,
            g_q: 1.0,
            g_p: 1.0,
            transmissivity: 1.0,
            kappa_t: 0.0,
            n_bar: 0.0,
            r: 0.0,
        }
    }
}

impl Settings {
    fn set(&mut self, name: &str, value: f64) -> Result<(), Failure> {
        match name {
            "theta" => self.theta = value,
            "g_q" => self.g_q = value,
            "g_p" => self.g_p = value,
            "T" => self.transmissivity = value,
            "kappa_t" => self.kappa_t = value,
            "n_bar" => self.n_bar = value,
            "r" => self.r = value,
            other => {
                return Err(Failure::config(format!(
                    "unknown setting {other:?} (expected theta, g_q, g_p, T, kappa_t, n_bar, or r)"
                )))
            }
        }
        Ok(())
    }

    fn channel(&self) -> Result<ChannelParams, Failure> {
        Ok(ChannelParams::new(self.kappa_t, self.n_bar, self.r)?)
    }
}

fn is_dist_axis(name: &str) -> Option<DistKind> {
    match name {
        "L" => Some(DistKind::Line),
        "A" => Some(DistKind::Circle),
        "chi" => Some(DistKind::Gauss),
        _ => None,
    }
}

fn build_distribution(kind: DistKind, param: f64) -> Result<Distribution, Failure> {
    Ok(match kind {
        DistKind::Line => Distribution::line(param)?,
        DistKind::Circle => Distribution::circle(param)?,
        DistKind::Gauss => Distribution::gauss(param)?,
    })
}

pub fn parse_spec(text: &str) -> Result<SweepSpec, Failure> {
    let spec: SweepSpec = serde_json::from_str(text)
        .map_err(|e| Failure::config(format!("bad sweep config: {e}")))?;
    validate(&spec)?;
    Ok(spec)
}

fn validate(spec: &SweepSpec) -> Result<(), Failure> {
    let axis = &spec.axis;
    if axis.points < 2 {
        return Err(Failure::config("axis.points must be at least 2"));
    }
    if !(axis.min.is_finite() && axis.max.is_finite() && axis.min <= axis.max) {
        return Err(Failure::config("axis range must be finite with min <= max"));
    }
    let dist_axis = is_dist_axis(&axis.name);
    if dist_axis.is_none() {
        // Probe the name against a scratch settings value.
        Settings::default().set(&axis.name, axis.min)?;
    }
    if spec.curves.is_empty() {
        return Err(Failure::config("at least one curve is required"));
    }
    for key in spec.fixed.keys() {
        Settings::default()
            .set(key, 0.0)
            .map_err(|_| Failure::config(format!("unknown setting {key:?} in fixed map")))?;
    }
    for curve in &spec.curves {
        if curve.label.is_empty()
            || curve
                .label
                .chars()
                .any(|ch| ch == ',' || ch == '"' || ch == '\n' || ch == '\r')
        {
            return Err(Failure::config(format!(
                "curve label {:?} must be nonempty without commas, quotes, or newlines",
                curve.label
            )));
        }
        for key in curve.fixed.keys() {
            Settings::default().set(key, 0.0).map_err(|_| {
                Failure::config(format!(
                    "unknown setting {key:?} in curve {:?}",
                    curve.label
                ))
            })?;
        }
        let needs_dist = !matches!(curve.mode, CurveMode::MatchedGains);
        if needs_dist && curve.dist.is_none() {
            return Err(Failure::config(format!(
                "curve {:?} needs a dist for its mode",
                curve.label
            )));
        }
        if let Some(axis_kind) = dist_axis {
            match &curve.dist {
                Some(dist) if dist.kind == axis_kind => {}
                Some(_) => {
                    return Err(Failure::config(format!(
                        "axis {:?} does not apply to the ensemble of curve {:?}",
                        axis.name, curve.label
                    )))
                }
                None => {
                    return Err(Failure::config(format!(
                        "axis {:?} sweeps an ensemble parameter, but curve {:?} has no dist",
                        axis.name, curve.label
                    )))
                }
            }
        }
        if matches!(curve.mode, CurveMode::ClosedForm) {
            match &curve.dist {
                Some(DistSpec {
                    kind: DistKind::Gauss,
                    ..
                }) => {}
                _ => {
                    return Err(Failure::config(format!(
                        "curve {:?}: closed_form is only available for the gauss ensemble",
                        curve.label
                    )))
                }
            }
        }
        if let CurveMode::Optimize { free } = &curve.mode {
            let names: Vec<&str> = free.iter().map(|s| s.as_str()).collect();
            FreeParamSet::from_names(&names).map_err(|e| Failure::config(e.to_string()))?;
        }
    }
    Ok(())
}

struct Row {
    axis: f64,
    label: String,
    fidelity: f64,
    g_q: f64,
    g_p: f64,
    theta: f64,
    converged: bool,
}

fn evaluate(spec: &SweepSpec, curve: &CurveSpec, axis_value: f64) -> Result<Row, Failure> {
    let mut s = Settings::default();
    for (key, value) in &spec.fixed {
        s.set(key, *value)?;
    }
    for (key, value) in &curve.fixed {
        s.set(key, *value)?;
    }
    let mut dist_spec = curve.dist;
    if let Some(kind) = is_dist_axis(&spec.axis.name) {
        if let Some(d) = dist_spec.as_mut() {
            debug_assert!(d.kind == kind);
            d.param = axis_value;
        }
    } else {
        s.set(&spec.axis.name, axis_value)?;
    }
    let c = s.channel()?;

    let (fidelity, g_q, g_p, theta, converged) = match &curve.mode {
        CurveMode::Fixed => {
            let dist = dist_spec.expect("validated");
            let dist = build_distribution(dist.kind, dist.param)?;
            let p = TeleporterParams::new(s.theta, s.g_q, s.g_p, s.transmissivity)?;
            let f = avg_fidelity(&p, &c, &dist)?;
            (f, s.g_q, s.g_p, s.theta, true)
        }
        CurveMode::ClosedForm => {
            let dist = dist_spec.expect("validated");
            let gauss = GaussDist::new(dist.param)?;
            let g = gauss_opt_gain(s.transmissivity, &c, &gauss);
            let f = gauss_opt_fidelity(s.transmissivity, &c, &gauss)?;
            (f, g, g, std::f64::consts::FRAC_PI_4, true)
        }
        CurveMode::MatchedGains => {
            let opt = optimal_eps_independent_fidelity(s.transmissivity, &c)?;
            let (g_q, g_p) = amplitude_independent_gains(opt.theta, s.transmissivity)?;
            (opt.value, g_q, g_p, opt.theta, true)
        }
        CurveMode::Optimize { free } => {
            let dist = dist_spec.expect("validated");
            let dist = build_distribution(dist.kind, dist.param)?;
            let names: Vec<&str> = free.iter().map(|n| n.as_str()).collect();
            let mut fps = FreeParamSet::from_names(&names)?;
            // Pin non-free parameters at the sweep settings, not the defaults.
            if !fps.g_q.is_free() {
                fps.g_q = ParamSpec::Fixed(s.g_q);
            }
            if !fps.g_p.is_free() {
                fps.g_p = ParamSpec::Fixed(s.g_p);
            }
            if !fps.theta.is_free() {
                fps.theta = ParamSpec::Fixed(s.theta);
            }
            let out = optimize_profile(&dist, s.transmissivity, &c, &fps, &Bounds::default())?;
            (
                out.best_value,
                out.best_params.g_q(),
                out.best_params.g_p(),
                out.best_params.theta(),
                out.converged,
            )
        }
    };
    Ok(Row {
        axis: axis_value,
        label: curve.label.clone(),
        fidelity,
        g_q,
        g_p,
        theta,
        converged,
    })
}

/// Evaluate every (curve, axis point) pair and render the CSV document.
pub fn run_sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<String, Failure> {
    validate(spec)?;
    let axis = &spec.axis;
    let step = (axis.max - axis.min) / (axis.points - 1) as f64;
    let tasks: Vec<(usize, f64)> = (0..spec.curves.len())
        .flat_map(|ci| (0..axis.points).map(move |pi| (ci, axis.min + step * pi as f64)))
        .collect();

    let eval_all = || -> Result<Vec<Row>, Failure> {
        tasks
            .par_iter()
            .map(|&(ci, x)| evaluate(spec, &spec.curves[ci], x))
            .collect()
    };
    let rows = match threads {
        None => eval_all()?,
        Some(n) => {
            if n == 0 {
                return Err(Failure::config("--threads must be at least 1"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::io(format!("thread pool: {e}")))?;
            pool.install(eval_all)?
        }
    };

    let mut out = String::with_capacity(rows.len() * 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(row.axis),
            row.label,
            fmt_f64(row.fidelity),
            fmt_f64(row.g_q),
            fmt_f64(row.g_p),
            fmt_f64(row.theta),
            row.converged,
        ));
    }
    Ok(out)
}

/// Write via a sibling temp file + rename so a failed run never leaves a
/// partial CSV behind.
pub fn write_atomic(path: &str, contents: &str) -> Result<(), Failure> {
    let tmp = format!("{path}.tmp{}", std::process::id());
    std::fs::write(&tmp, contents).map_err(|e| Failure::io(format!("write {tmp}: {e}")))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Failure::io(format!("rename {tmp} -> {path}: {e}"))
    })
}

// ---- built-in sweeps ----------------------------------------------------

fn fixed_map(entries: &[(&str, f64)]) -> HashMap<String, f64> {
    entries.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn axis(name: &str, min: f64, max: f64) -> AxisSpec {
    AxisSpec {
        name: name.to_string(),
        min,
        max,
        points: 200,
    }
}

fn dist(kind: DistKind, param: f64) -> Option<DistSpec> {
    Some(DistSpec { kind, param })
}

fn opt3() -> CurveMode {
    CurveMode::Optimize {
        free: vec!["gq".into(), "gp".into(), "theta".into()],
    }
}

fn curve(label: String, d: Option<DistSpec>, mode: CurveMode, fixed: &[(&str, f64)]) -> CurveSpec {
    CurveSpec {
        label,
        dist: d,
        mode,
        fixed: fixed_map(fixed),
    }
}

// Shared curve lists printed in the sweep captions.
const T_LIST: [f64; 5] = [1.0, 0.95, 0.9, 0.85, 0.8];
const KT_PAIR: [f64; 2] = [0.0, 0.2];
const SIZE_LIST: [f64; 5] = [0.1, 0.5, 1.0, 3.0, 300.0];

/// Built-in sweep specs reproducing the published fidelity curves.
pub fn preset(id: &str) -> Option<SweepSpec> {
    let spec = match id {
        // Amplitude-independent optimum vs squeezing: transmissivity family at
        // zero loss, then loss family at unit transmissivity.
        "fig2" => SweepSpec {
            axis: axis("r", 0.0, 3.0),
            fixed: fixed_map(&[("n_bar", 0.0)]),
            curves: T_LIST
                .iter()
                .map(|&t| {
                    curve(
                        format!("T{t}_kt0"),
                        None,
                        CurveMode::MatchedGains,
                        &[("T", t), ("kappa_t", 0.0)],
                    )
                })
                .chain([0.1, 0.2, 0.3, 0.4].iter().map(|&kt| {
                    curve(
                        format!("T1_kt{kt}"),
                        None,
                        CurveMode::MatchedGains,
                        &[("T", 1.0), ("kappa_t", kt)],
                    )
                }))
                .collect(),
        },
        // Line ensemble vs squeezing over half-widths, plus the fixed-gain
        // baseline at L = 1 for both loss values.
        "fig3a" => SweepSpec {
            axis: axis("r", 0.0, 3.0),
            fixed: fixed_map(&[("T", 1.0), ("n_bar", 0.0)]),
            curves: SIZE_LIST
                .iter()
                .flat_map(|&l| {
                    KT_PAIR.iter().map(move |&kt| {
                        curve(
                            format!("opt_L{l}_kt{kt}"),
                            dist(DistKind::Line, l),
                            opt3(),
                            &[("kappa_t", kt)],
                        )
                    })
                })
                .chain(KT_PAIR.iter().map(|&kt| {
                    curve(
                        format!("sts_L1_kt{kt}"),
                        dist(DistKind::Line, 1.0),
                        CurveMode::Fixed,
                        &[("kappa_t", kt)],
                    )
                }))
                .collect(),
        },
        // Line ensemble vs squeezing over transmissivities at L = 1.
        "fig3b" => SweepSpec {
            axis: axis("r", 0.0, 3.0),
            fixed: fixed_map(&[("n_bar", 0.0)]),
            curves: T_LIST
                .iter()
                .flat_map(|&t| {
                    KT_PAIR.iter().map(move |&kt| {
                        curve(
                            format!("opt_T{t}_kt{kt}"),
                            dist(DistKind::Line, 1.0),
                            opt3(),
                            &[("T", t), ("kappa_t", kt)],
                        )
                    })
                })
                .collect(),
        },
        // Line ensemble vs loss, optimized and fixed-gain families per L.
        "fig4" => SweepSpec {
            axis: axis("kappa_t", 0.0, 2.0),
            fixed: fixed_map(&[("T", 0.9), ("n_bar", 0.0), ("r", 0.8)]),
            curves: SIZE_LIST
                .iter()
                .map(|&l| curve(format!("opt_L{l}"), dist(DistKind::Line, l), opt3(), &[]))
                .chain(SIZE_LIST.iter().map(|&l| {
                    curve(
                        format!("sts_L{l}"),
                        dist(DistKind::Line, l),
                        CurveMode::Fixed,
                        &[],
                    )
                }))
                .collect(),
        },
        // Every free-parameter subset for the line ensemble at L = 1.
        "fig5" => {
            let subsets: [(&str, &[&str]); 7] = [
                ("opt_gq", &["gq"]),
                ("opt_gp", &["gp"]),
                ("opt_theta", &["theta"]),
                ("opt_gq_gp", &["gq", "gp"]),
                ("opt_gq_theta", &["gq", "theta"]),
                ("opt_gp_theta", &["gp", "theta"]),
                ("opt_gq_gp_theta", &["gq", "gp", "theta"]),
            ];
            SweepSpec {
                axis: axis("r", 0.0, 3.0),
                fixed: fixed_map(&[("T", 1.0), ("n_bar", 0.0), ("kappa_t", 0.2)]),
                curves: subsets
                    .iter()
                    .map(|(label, free)| {
                        curve(
                            label.to_string(),
                            dist(DistKind::Line, 1.0),
                            CurveMode::Optimize {
                                free: free.iter().map(|s| s.to_string()).collect(),
                            },
                            &[],
                        )
                    })
                    .chain(std::iter::once(curve(
                        "sts".to_string(),
                        dist(DistKind::Line, 1.0),
                        CurveMode::Fixed,
                        &[],
                    )))
                    .collect(),
            }
        }
        // Circle ensemble vs squeezing over radii.
        "fig6a" => SweepSpec {
            axis: axis("r", 0.0, 3.0),
            fixed: fixed_map(&[("T", 1.0), ("n_bar", 0.0)]),
            curves: SIZE_LIST
                .iter()
                .flat_map(|&a| {
                    KT_PAIR.iter().map(move |&kt| {
                        curve(
                            format!("opt_A{a}_kt{kt}"),
                            dist(DistKind::Circle, a),
                            opt3(),
                            &[("kappa_t", kt)],
                        )
                    })
                })
                .collect(),
        },
        // Circle ensemble vs squeezing over transmissivities at A = 1.
        "fig6b" => SweepSpec {
            axis: axis("r", 0.0, 3.0),
            fixed: fixed_map(&[("n_bar", 0.0)]),
            curves: T_LIST
                .iter()
                .flat_map(|&t| {
                    KT_PAIR.iter().map(move |&kt| {
                        curve(
                            format!("opt_T{t}_kt{kt}"),
                            dist(DistKind::Circle, 1.0),
                            opt3(),
                            &[("T", t), ("kappa_t", kt)],
                        )
                    })
                })
                .collect(),
        },
        // Circle ensemble vs loss, optimized and fixed-gain families per A.
        "fig7" => {
            let radii = [0.1, 0.5, 1.0, 1.7, 3.0, 300.0];
            SweepSpec {
                axis: axis("kappa_t", 0.0, 2.0),
                fixed: fixed_map(&[("T", 0.9), ("n_bar", 0.0), ("r", 0.8)]),
                curves: radii
                    .iter()
                    .map(|&a| curve(format!("opt_A{a}"), dist(DistKind::Circle, a), opt3(), &[]))
                    .chain(radii.iter().map(|&a| {
                        curve(
                            format!("sts_A{a}"),
                            dist(DistKind::Circle, a),
                            CurveMode::Fixed,
                            &[],
                        )
                    }))
                    .collect(),
            }
        }
        // Gaussian ensemble vs squeezing over variances, closed form.
        "fig8" => SweepSpec {
            axis: axis("r", 0.0, 3.0),
            fixed: fixed_map(&[("T", 1.0), ("n_bar", 0.0)]),
            curves: SIZE_LIST
                .iter()
                .flat_map(|&chi| {
                    KT_PAIR.iter().map(move |&kt| {
                        curve(
                            format!("opt_chi{chi}_kt{kt}"),
                            dist(DistKind::Gauss, chi),
                            CurveMode::ClosedForm,
                            &[("kappa_t", kt)],
                        )
                    })
                })
                .collect(),
        },
        // Gaussian ensemble vs loss: closed-form optimum and unit-gain family.
        "fig9" => SweepSpec {
            axis: axis("kappa_t", 0.0, 2.0),
            fixed: fixed_map(&[("T", 0.9), ("n_bar", 0.0), ("r", 0.8)]),
            curves: SIZE_LIST
                .iter()
                .map(|&chi| {
                    curve(
                        format!("opt_chi{chi}"),
                        dist(DistKind::Gauss, chi),
                        CurveMode::ClosedForm,
                        &[],
                    )
                })
                .chain(SIZE_LIST.iter().map(|&chi| {
                    curve(
                        format!("sts_chi{chi}"),
                        dist(DistKind::Gauss, chi),
                        CurveMode::Fixed,
                        &[],
                    )
                }))
                .collect(),
        },
        _ => return None,
    };
    Some(spec)
}

//! Quadrature primitives for the numerical cross-check: Gauss–Legendre and
//! Gauss–Laguerre nodes computed by Newton iteration on the recurrences, a
//! periodic trapezoid mean, and a recursive adaptive Simpson rule.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `(-1, 1)`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess for the i-th positive root.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_{n-1} by the three-term recurrence.
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Nodes and weights of the `n`-point Gauss–Laguerre rule:
/// `int_0^inf e^{-x} f(x) dx ~= sum_i w_i f(x_i)`.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n {
        // Stroud–Secrest style initial guesses, marching up from the previous root.
        z = if i == 0 {
            3.0 / (1.0 + 2.4 * nf)
        } else if i == 1 {
            z + 15.0 / (1.0 + 2.5 * nf)
        } else {
            let ai = (i - 1) as f64;
            z + ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - nodes[i - 2])
        };
        let mut p2 = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = (((2 * j + 1) as f64 - z) * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            let pp = nf * (p1 - p2) / z;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-14 * z.max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        // w = x / (n L_{n-1}(x))^2 at the root.
        weights[i] = z / (nf * p2).powi(2);
    }
    (nodes, weights)
}

/// Mean of a 2-pi-periodic function sampled at `n` equispaced angles (for smooth
/// periodic integrands the trapezoid rule converges spectrally).
pub fn trapezoid_mean_periodic<F: FnMut(f64) -> f64>(n: usize, mut f: F) -> f64 {
    let step = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|k| f(step * k as f64)).sum::<f64>() / n as f64
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
///
/// The interval is cut into 8 uniform panels before any acceptance test runs.
/// The integrands here are narrow Gaussian ridges on wide boxes; a single
/// coarse stencil can straddle the peak, sample near-zero values at both
/// refinement levels, and accept a spurious zero.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let pa = a + h * i as f64;
            let pb = a + h * (i + 1) as f64;
            let c = 0.5 * (pa + pb);
            let (fa, fb, fc) = (f(pa), f(pb), f(c));
            let s = (pb - pa) / 6.0 * (fa + 4.0 * fc + fb);
            simpson_step(f, pa, pb, fa, fb, fc, s, panel_tol, 50)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    s: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let sl = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let sr = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let s2 = sl + sr;
    if depth == 0 || (s2 - s).abs() <= 15.0 * tol {
        s2 + (s2 - s) / 15.0
    } else {
        simpson_step(f, a, c, fa, fc, fd, sl, 0.5 * tol, depth - 1)
            + simpson_step(f, c, b, fc, fb, fe, sr, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_rule_basics() {
        let (x, w) = gauss_legendre(128);
        assert_eq!(x.len(), 128);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        let quad: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert_abs_diff_eq!(quad, 2.0 / 3.0, epsilon = 1e-13);
        // int_{-1}^{1} e^{-x^2} dx = sqrt(pi) erf(1).
        let gauss: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x).exp()).sum();
        let want = std::f64::consts::PI.sqrt() * 0.8427007929497148693412;
        assert_abs_diff_eq!(gauss, want, epsilon = 1e-13);
        // Symmetry of nodes.
        for i in 0..64 {
            assert_abs_diff_eq!(x[i], -x[127 - i], epsilon = 1e-15);
        }
    }

    #[test]
    fn laguerre_rule_basics() {
        let (x, w) = gauss_laguerre(64);
        assert_eq!(x.len(), 64);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let mean: f64 = x.iter().zip(&w).map(|(x, w)| w * x).sum();
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-12);
        // int_0^inf e^{-x} e^{-x} dx = 1/2.
        let half: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x).exp()).sum();
        assert_abs_diff_eq!(half, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn trapezoid_mean_on_harmonics() {
        // Mean of cos^2 over the circle is 1/2; pure harmonics average to zero.
        let m = trapezoid_mean_periodic(256, |t| t.cos().powi(2));
        assert_abs_diff_eq!(m, 0.5, epsilon = 1e-14);
        let z = trapezoid_mean_periodic(256, |t| (3.0 * t).sin());
        assert_abs_diff_eq!(z, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_simpson_on_known_integrals() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(v, std::f64::consts::E - 1.0, epsilon = 1e-11);
        let g = adaptive_simpson(&|x: f64| (-x * x).exp(), -6.0, 6.0, 1e-12);
        assert_abs_diff_eq!(g, std::f64::consts::PI.sqrt(), epsilon = 1e-11);
    }
}

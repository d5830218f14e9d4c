//! Numerical evaluation of the Brownian scaling limit.
//!
//! When `delta * sqrt(N) -> c`, `N * P_N` converges to
//! `g(c) = E[1 / int_0^1 exp(sqrt(2) c B_s) ds]`. A Matsumoto-Yor identity
//! collapses that exponential functional to a single one-dimensional
//! Gaussian expectation, `g(c) = E[phi(c Z / sqrt(2))]` with
//! `phi(x) = x e^{-x} / sinh(x)`, which this module evaluates by quadrature
//! together with the related moments `m_alpha(t)` and the `Y_M` moment
//! integrals behind the large-`c` asymptotics. A direct Brownian-path
//! Monte Carlo estimator of `g` is kept as an independent oracle.

use crate::error::{Error, Result};
use crate::estimate::FixationEstimate;
use crate::math::mean_and_std_error;
use crate::rng::StreamKey;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Quadrature rule for expectations against a standard normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// tanh-sinh on `[-truncation, 0]` and `[0, truncation]` against the
    /// normal density. The split puts a node cluster at the origin, where
    /// every integrand in this module has its removable singularity.
    TanhSinh,
    /// Gauss-Hermite via Golub-Welsch (stable symmetric-tridiagonal
    /// eigensolve; the three-term recurrence overflows long before n = 512).
    /// Ignores `truncation`.
    GaussHermite,
}

/// Node budget, truncation (in standard deviations) and scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub truncation: f64,
    pub scheme: Scheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        // 12 sigma: the discarded Gaussian tail is < 2e-32 and every
        // integrand here grows at most polynomially.
        QuadratureSpec { node_count: 512, truncation: 12.0, scheme: Scheme::TanhSinh }
    }
}

/// A quadrature result with a node-doubling error estimate.
///
/// `value` is the fine (doubled-node) evaluation; `estimated_abs_error` is
/// the absolute difference between the coarse and fine evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitValue {
    pub value: f64,
    pub estimated_abs_error: f64,
}

impl LimitValue {
    fn exact(value: f64) -> Self {
        LimitValue { value, estimated_abs_error: 0.0 }
    }
}

/// `phi(x) = x e^{-x} / sinh(x) = 2x / (e^{2x} - 1)`, the integrand factor
/// of every limit expectation; `phi(0) = 1` (removable), `phi(x) ~ 2|x|` as
/// `x -> -inf`, and `phi` decays like `2x e^{-2x}` as `x -> +inf`.
pub fn phi(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x > 400.0 {
        return 0.0;
    }
    2.0 * x / (2.0 * x).exp_m1()
}

fn standard_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// tanh-sinh rule for `int_a^b f(x) dx` with `levels` points per side of
/// the transformed axis (2*levels + 1 evaluations).
fn tanh_sinh_interval<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, levels: usize) -> f64 {
    let mid = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let h = 4.0 / levels as f64;
    let mut sum = 0.0;
    for j in -(levels as i64)..=(levels as i64) {
        let u = j as f64 * h;
        let s = 0.5 * PI * u.sinh();
        let t = s.tanh();
        let w = 0.5 * PI * u.cosh() / (s.cosh() * s.cosh());
        sum += w * f(mid + hw * t);
    }
    sum * hw * h
}

/// `E[f(Z)]`, `Z` standard normal, at the spec's node count.
fn gaussian_expectation_once<F: Fn(f64) -> f64>(f: &F, spec: &QuadratureSpec) -> f64 {
    match spec.scheme {
        Scheme::TanhSinh => {
            let g = |x: f64| f(x) * standard_normal_pdf(x);
            let levels = (spec.node_count / 4).max(4);
            tanh_sinh_interval(&g, -spec.truncation, 0.0, levels)
                + tanh_sinh_interval(&g, 0.0, spec.truncation, levels)
        }
        Scheme::GaussHermite => {
            let (nodes, weights) = gauss_hermite(spec.node_count);
            let scale = 1.0 / PI.sqrt();
            nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| scale * w * f(std::f64::consts::SQRT_2 * x))
                .sum()
        }
    }
}

/// `E[f(Z)]` with the node-doubling error estimate.
fn gaussian_expectation<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> LimitValue {
    let coarse = gaussian_expectation_once(&f, spec);
    let fine = gaussian_expectation_once(
        &f,
        &QuadratureSpec { node_count: 2 * spec.node_count, ..*spec },
    );
    LimitValue { value: fine, estimated_abs_error: (fine - coarse).abs() }
}

/// Gauss-Hermite nodes/weights for `int f(x) e^{-x^2} dx`, by eigensolving
/// the Jacobi matrix (diagonal 0, off-diagonal sqrt(k/2)); the weight is
/// sqrt(pi) times the squared first eigenvector component.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut d = vec![0.0f64; n];
    let mut e: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    e.push(0.0);
    let mut z = vec![0.0f64; n];
    z[0] = 1.0;
    symmetric_tridiagonal_ql(&mut d, &mut e, &mut z);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let nodes: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let weights: Vec<f64> = order.iter().map(|&i| PI.sqrt() * z[i] * z[i]).collect();
    (nodes, weights)
}

/// Implicit-shift QL for a symmetric tridiagonal matrix, rotating a single
/// tracked vector `z` along (enough to recover Gaussian quadrature weights).
fn symmetric_tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                if e[m].abs() <= eps * (d[m].abs() + d[m + 1].abs()) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                if f.abs() >= g.abs() {
                    c = g / f;
                    r = c.hypot(1.0);
                    e[i + 1] = f * r;
                    s = 1.0 / r;
                    c *= s;
                } else {
                    s = f / g;
                    r = s.hypot(1.0);
                    e[i + 1] = g * r;
                    c = 1.0 / r;
                    s *= c;
                }
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

/// `m_2(t) = t^{-1} E[phi(sqrt(t) Z)]`.
pub fn m2(t: f64, spec: &QuadratureSpec) -> Result<LimitValue> {
    check_positive("t", t)?;
    let s = t.sqrt();
    let v = gaussian_expectation(|z| phi(s * z), spec);
    Ok(LimitValue { value: v.value / t, estimated_abs_error: v.estimated_abs_error / t })
}

/// `m_alpha(t) = (alpha^2 / 4) m_2(alpha^2 t / 4)` by the scaling identity.
pub fn m_alpha(alpha: f64, t: f64, spec: &QuadratureSpec) -> Result<LimitValue> {
    check_positive("alpha", alpha)?;
    check_positive("t", t)?;
    let a2 = alpha * alpha / 4.0;
    let v = m2(a2 * t, spec)?;
    Ok(LimitValue { value: a2 * v.value, estimated_abs_error: a2 * v.estimated_abs_error })
}

/// The limit curve `g(c) = m_{c sqrt 2}(1) = E[phi(c Z / sqrt 2)]`;
/// `g(0) = 1` by continuity (the delta = 0 model has N * P = 1 exactly).
pub fn g(c: f64, spec: &QuadratureSpec) -> Result<LimitValue> {
    if c < 0.0 {
        return Err(Error::domain(format!("c must be nonnegative, got {c}")));
    }
    if c == 0.0 {
        return Ok(LimitValue::exact(1.0));
    }
    let s = c / std::f64::consts::SQRT_2;
    Ok(gaussian_expectation(|z| phi(s * z), spec))
}

/// Direct Monte Carlo for `g(c)`: trapezoid discretization of
/// `int_0^1 exp(sqrt(2) c B_s) ds` along simulated Brownian paths. An
/// independent oracle for the quadrature, with O(1/steps) discretization
/// bias. Reported in the estimate's `delta` slot is `c`; `n_sites` is 0
/// (no lattice involved).
pub fn brownian_mc_g(c: f64, paths: u64, steps: u32, seed: u64) -> Result<FixationEstimate> {
    if c < 0.0 {
        return Err(Error::domain(format!("c must be nonnegative, got {c}")));
    }
    if paths < 2 {
        return Err(Error::domain(format!("need at least 2 paths, got {paths}")));
    }
    if steps == 0 {
        return Err(Error::domain("need at least 1 step"));
    }
    let dt = 1.0 / steps as f64;
    let sd = dt.sqrt();
    let values: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|r| {
            let mut rng = StreamKey::for_experiment(seed, "brownian-g", r).rng();
            let mut b = 0.0;
            let mut prev = 1.0; // exp(sqrt(2) c B_0)
            let mut integral = 0.0;
            for _ in 0..steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                b += sd * z;
                let cur = (std::f64::consts::SQRT_2 * c * b).exp();
                integral += 0.5 * dt * (prev + cur);
                prev = cur;
            }
            1.0 / integral
        })
        .collect();
    let (mean, std_error) = mean_and_std_error(&values);
    Ok(FixationEstimate {
        mean,
        std_error,
        replicates: paths,
        seed: Some(seed),
        n_sites: 0,
        delta: c,
    })
}

/// First moment of `Y_M`: `E[B_M^- / int_0^M exp(2 B_s) ds]`, reduced to
/// `E[(-x/M) phi(x) 1_{x<=0}]` with `x ~ N(0, M)`. Tends to 1 as `M` grows.
pub fn y_first_moment(m: f64, spec: &QuadratureSpec) -> Result<LimitValue> {
    check_positive("M", m)?;
    let s = m.sqrt();
    Ok(gaussian_expectation(
        move |z| {
            let x = s * z;
            if x >= 0.0 {
                0.0
            } else {
                -x * phi(x) / m
            }
        },
        spec,
    ))
}

/// `x (u + 1) - (u - 1)` with `u = e^{2x}`: the bracket of the `Y_M` second
/// moment kernel. Direct evaluation cancels catastrophically near 0, so
/// small arguments use the series `sum_{j>=3} 2^{j-1} (j-2)/j! x^j`.
fn second_moment_bracket(x: f64) -> f64 {
    if x.abs() > 0.5 {
        let u = (2.0 * x).exp();
        return x * (u + 1.0) - (u - 1.0);
    }
    let mut sum = 0.0;
    // term_j = 2^{j-1} (j-2) / j! * x^j, started at j = 3.
    let mut pow = 4.0 * x * x * x; // 2^{j-1} x^j at j = 3
    let mut fact = 6.0; // j!
    for j in 3..30 {
        sum += pow * (j as f64 - 2.0) / fact;
        pow *= 2.0 * x;
        fact *= j as f64 + 1.0;
    }
    sum
}

/// Second moment of `Y_M`. The printed kernel
/// `e^{-2x} (x^2 sinh x + M x cosh x - M sinh x) / (M^2 sinh^3 x)` times
/// `x^2 1_{x<0}` is rewritten with `v = e^{2x} - 1` as
/// `4 x^2 [x^2 v + M (x(v+2) - v)] / (M^2 v^3)`, which neither overflows
/// (the `e^{-2x}/sinh^3` exponentials cancel exactly) nor cancels near 0.
/// Grows like `4 sqrt(2/pi) sqrt(M)`.
pub fn y_second_moment(m: f64, spec: &QuadratureSpec) -> Result<LimitValue> {
    check_positive("M", m)?;
    let s = m.sqrt();
    Ok(gaussian_expectation(
        move |z| {
            let x = s * z;
            if x >= 0.0 {
                return 0.0;
            }
            let v = (2.0 * x).exp_m1();
            let kernel = 4.0 * (x * x * v + m * second_moment_bracket(x)) / (m * m * v * v * v);
            x * x * kernel
        },
        spec,
    ))
}

/// `h(x) = x + 1 + (x - 1) e^{2x}`; `sign(h(x)) = sign(x)`, the convexity
/// inequality behind `g(c) > 1`.
pub fn convexity_h(x: f64) -> f64 {
    x + 1.0 + (x - 1.0) * (2.0 * x).exp()
}

/// The two finite-N predictions for the fixed-delta regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetterPrediction {
    /// Leading asymptotic for the fixation probability: `delta / sqrt(pi N)`.
    pub crude: f64,
    /// Refined curve on the `sqrt(pi N) * P` scale: `g(delta sqrt N) * sqrt(pi / N)`.
    pub refined: f64,
    /// The same refined curve on the fixation-probability scale: `g(delta sqrt N) / N`.
    pub refined_fixation: f64,
}

/// Crude and refined predictions at `(n, delta)`. The two refined fields
/// carry the same curve on the two scales used for plotting; divide either
/// by the corresponding scale of a measured mean to get the match ratio.
pub fn better_prediction(n: usize, delta: f64) -> Result<BetterPrediction> {
    if n == 0 {
        return Err(Error::domain("need at least 1 site"));
    }
    if delta < 0.0 {
        return Err(Error::domain(format!("delta must be nonnegative, got {delta}")));
    }
    let nf = n as f64;
    let gv = g(delta * nf.sqrt(), &QuadratureSpec::default())?.value;
    Ok(BetterPrediction {
        crude: delta / (PI * nf).sqrt(),
        refined: gv * (PI / nf).sqrt(),
        refined_fixation: gv / nf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn phi_at_zero_and_far_left() {
        assert_eq!(phi(0.0), 1.0);
        assert!((phi(-30.0) / 60.0 - 1.0).abs() < 1e-12);
        let naive = 1.0 * (-1.0f64).exp() / 1.0f64.sinh();
        assert!((phi(1.0) / naive - 1.0).abs() < 1e-14);
        assert_eq!(phi(500.0), 0.0);
        assert!(phi(-700.0).is_finite());
    }

    // Reference values frozen from an independent high-precision evaluation
    // of E[phi(c Z / sqrt 2)] (mpmath, 50 digits).
    const G2: f64 = 1.5161556512515221;
    const G3: f64 = 1.9745322243961193;
    const G50: f64 = 28.228032949962845;

    #[test]
    fn g_matches_frozen_references() {
        let spec = default_spec();
        assert!((g(2.0, &spec).unwrap().value - G2).abs() < 1e-9);
        assert!((g(3.0, &spec).unwrap().value - G3).abs() < 1e-9);
        assert!((g(50.0, &spec).unwrap().value - G50).abs() < 1e-7);
    }

    #[test]
    fn g_published_tolerances() {
        let spec = default_spec();
        assert!((g(2.0, &spec).unwrap().value - 1.516).abs() < 0.001);
        assert!((g(3.0, &spec).unwrap().value - 1.97).abs() < 0.01);
    }

    #[test]
    fn g_edge_cases() {
        let spec = default_spec();
        assert_eq!(g(0.0, &spec).unwrap().value, 1.0);
        assert!(g(-1.0, &spec).is_err());
    }

    #[test]
    fn g_small_c_quadratic_departure() {
        let spec = default_spec();
        let c = 0.05f64;
        let ratio = (g(c, &spec).unwrap().value - 1.0) / (c * c / 6.0);
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn g_large_c_linear_growth() {
        let spec = default_spec();
        let v = g(50.0, &spec).unwrap().value;
        let ratio = v * PI.sqrt() / 50.0;
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn schemes_agree() {
        let ts = QuadratureSpec { scheme: Scheme::TanhSinh, ..default_spec() };
        let gh = QuadratureSpec { scheme: Scheme::GaussHermite, ..default_spec() };
        for c in [0.3, 2.0, 5.0] {
            let a = g(c, &ts).unwrap().value;
            let b = g(c, &gh).unwrap().value;
            assert!((a - b).abs() < 1e-9, "c={c} ts={a} gh={b}");
        }
    }

    #[test]
    fn node_doubling_gate() {
        let spec = default_spec();
        for c in [0.05, 2.0, 50.0] {
            let v = g(c, &spec).unwrap();
            assert!(
                v.estimated_abs_error < 1e-10 * v.value.abs(),
                "c={c} err={}",
                v.estimated_abs_error
            );
        }
    }

    #[test]
    fn m2_small_t_expansion() {
        let spec = default_spec();
        let t = 1e-4;
        assert!((t * m2(t, &spec).unwrap().value - 1.0).abs() < 1e-3);
        let t = 0.02f64;
        let rem = t * m2(t, &spec).unwrap().value - 1.0 - t / 3.0;
        assert!(rem.abs() < 10.0 * t.powf(1.5), "rem {rem}");
    }

    #[test]
    fn m2_large_t_decay() {
        let spec = default_spec();
        let t = 100.0f64;
        let ratio = m2(t, &spec).unwrap().value * (PI * t / 2.0).sqrt();
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn m_alpha_scaling_identities() {
        let spec = default_spec();
        for t in [0.3, 1.0, 4.0] {
            let a = m_alpha(2.0, t, &spec).unwrap().value;
            let b = m2(t, &spec).unwrap().value;
            assert!((a - b).abs() < 1e-12);
        }
        // m_alpha(a, t) = (a^2/v^2) m_alpha(v, a^2 t / v^2), evaluated on
        // both sides by independent quadratures.
        let (alpha, nu, t) = (5.0, 3.0, 0.7);
        let lhs = m_alpha(alpha, t, &spec).unwrap().value;
        let scale = alpha * alpha / (nu * nu);
        let rhs = scale * m_alpha(nu, scale * t, &spec).unwrap().value;
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs(), "lhs {lhs} rhs {rhs}");
        let ratio = m_alpha(40.0, 1.0, &spec).unwrap().value * (2.0 * PI).sqrt() / 40.0;
        assert!((ratio - 1.0).abs() < 0.05);
    }

    #[test]
    fn y_first_moment_tends_to_one() {
        let spec = default_spec();
        let far = y_first_moment(1e4, &spec).unwrap().value;
        assert!((far - 1.0).abs() < 0.01, "far {far}");
        let near = y_first_moment(1e2, &spec).unwrap().value;
        assert!((far - 1.0).abs() < (near - 1.0).abs());
    }

    #[test]
    fn y_second_moment_matches_asymptotic() {
        let spec = default_spec();
        for (m, tol) in [(1e4, 0.02), (1e6, 0.01)] {
            let v = y_second_moment(m, &spec).unwrap().value;
            let asym = 4.0 * (2.0 / PI).sqrt() * m.sqrt();
            assert!((v / asym - 1.0).abs() < tol, "M={m} ratio {}", v / asym);
        }
    }

    #[test]
    fn second_moment_bracket_series_joins_direct_form() {
        for x in [-0.5f64, -0.49, -0.51, 0.49, 0.5, -0.01] {
            let u = (2.0 * x).exp();
            let direct = x * (u + 1.0) - (u - 1.0);
            let val = second_moment_bracket(x);
            // The direct form itself carries ~eps-of-its-terms cancellation
            // noise, so compare with an absolute floor.
            assert!((val - direct).abs() < 5e-17 + 1e-13 * direct.abs(), "x={x}");
        }
    }

    #[test]
    fn convexity_h_examples() {
        assert_eq!(convexity_h(0.0), 0.0);
        assert_eq!(convexity_h(1.0), 2.0);
        assert!(convexity_h(-2.0) < 0.0);
        assert!(convexity_h(2.0) > 0.0);
    }

    #[test]
    fn brownian_oracle_small_c_is_one() {
        let e = brownian_mc_g(1e-3, 2000, 100, 5).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-3, "mean {}", e.mean);
    }

    #[test]
    fn brownian_oracle_is_deterministic() {
        let a = brownian_mc_g(2.0, 500, 200, 9).unwrap();
        let b = brownian_mc_g(2.0, 500, 200, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn better_prediction_examples() {
        let spec = default_spec();
        let p = better_prediction(100, 0.2).unwrap();
        let g2 = g(2.0, &spec).unwrap().value;
        assert!((p.refined - g2 * (PI / 100.0).sqrt()).abs() < 1e-12);
        assert!((p.refined_fixation - g2 / 100.0).abs() < 1e-14);
        let p0 = better_prediction(64, 0.0).unwrap();
        assert_eq!(p0.crude, 0.0);
        assert!((p0.refined - (PI / 64.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gauss_hermite_integrates_polynomials() {
        let (x, w) = gauss_hermite(8);
        // int e^{-x^2} dx = sqrt(pi); int x^2 e^{-x^2} = sqrt(pi)/2.
        let s0: f64 = w.iter().sum();
        let s2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((s0 - PI.sqrt()).abs() < 1e-13);
        assert!((s2 - PI.sqrt() / 2.0).abs() < 1e-13);
        // Large rule stays finite and normalized (the naive recurrence
        // would have overflowed here).
        let (_, w) = gauss_hermite(512);
        let s0: f64 = w.iter().sum();
        assert!((s0 - PI.sqrt()).abs() < 1e-10);
    }
}

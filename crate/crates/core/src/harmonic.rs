//! The harmonic test function φ₀ (Δ_g φ₀ = 0, φ₀ = 0 on r = R), the Kelvin
//! inversion used to cross-check it, and the weighted cone integral pairing
//! φ₀ with an eigen test function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::metric::{MetricSpec, RadialCoefficient};
use crate::quadrature::{integrate, QuadOptions};
use crate::testfn::{Kind, Profile, TestFunction};
use crate::wave::cone_radius;

/// Absolute tolerance for the φ₀ quadratures.
pub const PHI0_TOL: f64 = 1e-12;

/// φ₀(r) = ∫_R^r K(s)/s ds on `grid`, with φ₀' = K/r and φ₀'' = K'/r − K/r².
pub fn build_phi0(metric: &MetricSpec, grid: &RadialGrid) -> Result<TestFunction> {
    let nodes = grid.nodes();
    if (nodes[0] - metric.r_inner).abs() > 1e-14 * metric.r_inner {
        return Err(Error::InvalidInput(format!(
            "grid starts at {} but the obstacle radius is {}",
            nodes[0], metric.r_inner
        )));
    }
    let mut values = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    values.push(0.0);
    for w in nodes.windows(2) {
        let q = integrate(|s| metric.eval_k(s) / s, w[0], w[1], QuadOptions::tol(PHI0_TOL / nodes.len() as f64, 1e-14))?;
        if q.abs_err > PHI0_TOL {
            return Err(Error::QuadratureFailure(format!(
                "φ₀ segment [{}, {}] error {:e}",
                w[0], w[1], q.abs_err
            )));
        }
        acc += q.value;
        values.push(acc);
    }
    let deriv = nodes.iter().map(|&r| metric.eval_k(r) / r).collect();
    let second = nodes
        .iter()
        .map(|&r| metric.eval_k_deriv(r, 1) / r - metric.eval_k(r) / (r * r))
        .collect();
    TestFunction::new(Kind::Phi0, grid.clone(), values, deriv, Some(second), metric.hash())
}

/// φ₀ evaluated off-grid by finishing the quadrature from the nearest node,
/// so it is smooth to round-off (finite differences of it are meaningful).
#[derive(Debug, Clone)]
pub struct Phi0Exact<'a> {
    pub metric: &'a MetricSpec,
    pub table: &'a TestFunction,
}

impl<'a> Phi0Exact<'a> {
    pub fn new(metric: &'a MetricSpec, table: &'a TestFunction) -> Self {
        Self { metric, table }
    }
}

impl Profile for Phi0Exact<'_> {
    fn value(&self, r: f64) -> f64 {
        let i = self.table.grid.locate(r);
        let r0 = self.table.nodes()[i];
        let tail = integrate(|s| self.metric.eval_k(s) / s, r0, r, QuadOptions::tol(1e-15, 1e-15))
            .map(|q| q.value)
            .unwrap_or(f64::NAN);
        self.table.values[i] + tail
    }
}

fn log_ratio(phi0: &TestFunction, r: f64) -> f64 {
    phi0.eval(r) / (r / phi0.grid.inner()).ln()
}

/// Bounds (inf, sup) of φ₀(r)/ln(r/R) over nodes r ≥ 2R. Fails when the ratio
/// keeps drifting without deceleration across the last far-field doublings.
pub fn verify_log_equivalence(phi0: &TestFunction) -> Result<(f64, f64)> {
    let big_r = phi0.grid.inner();
    let r_max = phi0.grid.outer();
    if r_max < 1e3 * big_r {
        return Err(Error::InvalidInput(format!(
            "log-equivalence needs r_max ≥ 10³·R, grid ends at {r_max}"
        )));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &r in phi0.nodes().iter().filter(|&&r| r >= 2.0 * big_r) {
        let v = log_ratio(phi0, r);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(Error::EquivalenceViolation(format!("bounds ({lo}, {hi}) not positive and finite")));
    }
    // Successive far-field doublings: a convergent ratio drifts by shrinking
    // increments, a divergent one does not.
    let ratios: Vec<f64> = (0..3).map(|k| log_ratio(phi0, r_max / 2f64.powi(k))).collect();
    let inc_outer = ratios[0] - ratios[1];
    let inc_inner = ratios[1] - ratios[2];
    let drift_tol = 1e-9;
    if inc_outer > drift_tol && inc_outer >= 0.95 * inc_inner {
        return Err(Error::EquivalenceViolation(format!(
            "φ₀/ln(r/R) keeps growing under far-field doubling (increments {inc_inner:.3e} → {inc_outer:.3e})"
        )));
    }
    if inc_outer < -drift_tol && inc_outer <= 0.95 * inc_inner {
        return Err(Error::EquivalenceViolation(format!(
            "φ₀/ln(r/R) keeps decaying under far-field doubling (increments {inc_inner:.3e} → {inc_outer:.3e})"
        )));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy)]
pub struct KelvinOptions {
    /// Finite-difference step in the inverted variable s = |x|.
    pub h: f64,
    pub richardson: bool,
}

impl Default for KelvinOptions {
    fn default() -> Self {
        Self { h: 1e-3, richardson: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KelvinReport {
    /// max |s⁴ Δ_h Φ(s)| over the samples; zero for g₁-harmonic φ.
    pub max_residual: f64,
    /// max |s⁴ Δ_h Φ(s) − Δ_{g₁} φ(1/s)| with the right side differenced in r.
    pub max_mismatch: f64,
}

fn radial_fd_laplacian<C, F>(coeff: C, f: F, x: f64, h: f64) -> f64
where
    C: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
{
    let (xm, xp) = (x - 0.5 * h, x + 0.5 * h);
    let flux_p = xp / coeff(xp) * (f(x + h) - f(x)) / h;
    let flux_m = xm / coeff(xm) * (f(x) - f(x - h)) / h;
    (flux_p - flux_m) / (h * coeff(x) * x)
}

fn maybe_richardson(d: impl Fn(f64) -> f64, h: f64, on: bool) -> f64 {
    if on {
        (4.0 * d(0.5 * h) - d(h)) / 3.0
    } else {
        d(h)
    }
}

/// Checks harmonicity of φ through inversion: Φ(x) = φ(1/|x|) on the punctured
/// disk with radial metric h₀ = K(1/s)²ds² + s²dθ², for which
/// Δ_{g₁}φ(x*) = s⁴ Δ_{h₀}Φ(x).
pub fn kelvin_pullback_check<P: Profile + ?Sized>(
    metric: &MetricSpec,
    phi: &P,
    r_max: f64,
    samples: &[f64],
    opts: KelvinOptions,
) -> Result<KelvinReport> {
    let s_lo = 1.0 / r_max;
    let s_hi = 1.0 / metric.r_inner;
    let mut report = KelvinReport { max_residual: 0.0, max_mismatch: 0.0 };
    for &s in samples {
        if !(s - opts.h > s_lo && s + opts.h < s_hi) {
            return Err(Error::OutOfDomain(format!(
                "|x| = {s} with step {} leaves ({s_lo}, {s_hi})",
                opts.h
            )));
        }
        let k_inv = |s: f64| metric.eval_k(1.0 / s);
        let big_phi = |s: f64| phi.value(1.0 / s);
        let pulled = s.powi(4) * maybe_richardson(|h| radial_fd_laplacian(k_inv, big_phi, s, h), opts.h, opts.richardson);
        let r = 1.0 / s;
        let direct = maybe_richardson(
            |h| radial_fd_laplacian(|r| metric.eval_k(r), |r| phi.value(r), r, h),
            opts.h * r * r,
            opts.richardson,
        );
        report.max_residual = report.max_residual.max(pulled.abs());
        report.max_mismatch = report.max_mismatch.max((pulled - direct).abs());
    }
    Ok(report)
}

/// Integrand of the weighted cone integral at radius `r`.
pub fn weighted_integrand<A: Profile + ?Sized, B: Profile + ?Sized>(
    metric: &MetricSpec,
    phi0: &A,
    phi_l1: &B,
    lambda1: f64,
    p: f64,
    t: f64,
    r: f64,
) -> f64 {
    let pp = p / (p - 1.0);
    let (a, b) = (phi0.value(r), phi_l1.value(r));
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    (pp * b.ln() - pp * lambda1 * t - a.ln() / (p - 1.0)).exp() * metric.eval_k(r) * r
}

#[derive(Debug, Clone, Copy)]
pub struct WeightedParams {
    pub lambda1: f64,
    pub p: f64,
    /// R₁ = ∫_R^{R₀} K, the initial cone offset.
    pub r1: f64,
    /// Width of the excluded boundary layer as a fraction of R.
    pub eta_rel: f64,
}

/// I(t) = ∫ over the cone {∫_R^r K ≤ t + R₁} of
/// φ₀^{−1/(p−1)} e^{−p′λ₁t} φ_{λ₁}^{p′} K r dr.
///
/// On (R, R + η) the integrand is replaced by its linear local model
/// (φ₀ and φ_{λ₁} both vanish linearly at R, so the integrand ∝ r − R).
pub fn weighted_integral_lemma(
    metric: &MetricSpec,
    phi0: &TestFunction,
    phi_l1: &TestFunction,
    params: WeightedParams,
    t: f64,
) -> Result<f64> {
    let WeightedParams { lambda1, p, r1, eta_rel } = params;
    if !(p > 1.0 && t >= 0.0) {
        return Err(Error::InvalidInput(format!("need p > 1 and t ≥ 0 (p = {p}, t = {t})")));
    }
    let big_r = metric.r_inner;
    let cone = cone_radius(metric, t, r1).root;
    if cone <= big_r {
        return Ok(0.0);
    }
    if cone > phi_l1.grid.outer() || cone > phi0.grid.outer() {
        return Err(Error::OutOfDomain(format!(
            "cone radius {cone} exceeds the test-function grids"
        )));
    }
    let eta = (eta_rel * big_r).min(cone - big_r);
    let pp = p / (p - 1.0);
    // Local model: φ₀ ≈ φ₀'(R)(r−R), φ_λ ≈ φ_λ'(R)(r−R) ⇒ integrand ≈ c·(r−R).
    let c = phi0.deriv_values[0].powf(-1.0 / (p - 1.0))
        * phi_l1.deriv_values[0].powf(pp)
        * (-pp * lambda1 * t).exp()
        * metric.eval_k(big_r)
        * big_r;
    let layer = 0.5 * c * eta * eta;

    let integrand = |r: f64| weighted_integrand(metric, phi0, phi_l1, lambda1, p, t, r);
    let mut breaks: Vec<f64> = vec![big_r + eta];
    breaks.extend(phi_l1.nodes().iter().copied().filter(|&r| r > big_r + eta && r < cone));
    breaks.push(cone);
    let mut total = layer;
    for w in breaks.windows(2) {
        total += integrate(integrand, w[0], w[1], QuadOptions::tol(0.0, 1e-10))?.value;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedReport {
    pub times: Vec<f64>,
    pub integrals: Vec<f64>,
    /// I(t) / [(ln(t+1))^{−1/(p−1)} (t+1)^{1−p′/2}].
    pub ratios: Vec<f64>,
    /// max/min of the ratios.
    pub spread: f64,
    /// Measured constant (max ratio) for this λ₁.
    pub constant: f64,
}

pub fn weighted_model(p: f64, t: f64) -> f64 {
    let pp = p / (p - 1.0);
    (t + 1.0).ln().powf(-1.0 / (p - 1.0)) * (t + 1.0).powf(1.0 - 0.5 * pp)
}

/// Sweeps `weighted_integral_lemma` over `times` and reports the ratio to the
/// model rate.
pub fn verify_weighted_integral(
    metric: &MetricSpec,
    phi0: &TestFunction,
    phi_l1: &TestFunction,
    params: WeightedParams,
    times: &[f64],
) -> Result<WeightedReport> {
    let integrals = times
        .iter()
        .map(|&t| weighted_integral_lemma(metric, phi0, phi_l1, params, t))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = times
        .iter()
        .zip(&integrals)
        .map(|(&t, &i)| i / weighted_model(params.p, t))
        .collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(WeightedReport {
        times: times.to_vec(),
        integrals,
        spread: max / min,
        constant: max,
        ratios,
    })
}

/// Radial g₁-Laplacian residual of φ₀ on its own grid (interior nodes).
pub fn phi0_residual<C: RadialCoefficient + ?Sized>(coeff: &C, phi0: &TestFunction) -> Result<f64> {
    let l = crate::metric::laplace_radial(coeff, &phi0.values, &phi0.grid)?;
    Ok(l[1..l.len() - 1].iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

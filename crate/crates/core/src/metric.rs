//! Radial asymptotically Euclidean metrics `K²(r)dr² + r²dθ²` on the
//! exterior of the disk of radius R, and their Laplace–Beltrami operator.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::quadrature::{integrate, QuadOptions};

/// One closed-form summand of the radial factor K (or of the radial g₃
/// profile). Derivatives are exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    /// `c`
    Const { c: f64 },
    /// `c·⟨r⟩^{−β}` with `⟨r⟩ = (1 + r²)^{1/2}`.
    Bracket { c: f64, beta: f64 },
    /// `c·e^{−γr}`
    Exp { c: f64, gamma: f64 },
    /// `c·ln⟨r⟩`; not asymptotically flat, kept for falsification runs.
    LogBracket { c: f64 },
}

impl Term {
    /// m-th radial derivative, m ≤ 2.
    pub fn deriv(&self, r: f64, m: u8) -> f64 {
        match *self {
            Term::Const { c } => {
                if m == 0 {
                    c
                } else {
                    0.0
                }
            }
            Term::Bracket { c, beta } => {
                let b = 1.0 + r * r;
                let e = -0.5 * beta;
                match m {
                    0 => c * b.powf(e),
                    1 => -c * beta * r * b.powf(e - 1.0),
                    _ => c * (-beta * b.powf(e - 1.0) + beta * (beta + 2.0) * r * r * b.powf(e - 2.0)),
                }
            }
            Term::Exp { c, gamma } => {
                let v = c * (-gamma * r).exp();
                match m {
                    0 => v,
                    1 => -gamma * v,
                    _ => gamma * gamma * v,
                }
            }
            Term::LogBracket { c } => {
                let b = 1.0 + r * r;
                match m {
                    0 => 0.5 * c * b.ln(),
                    1 => c * r / b,
                    _ => c * (1.0 - r * r) / (b * b),
                }
            }
        }
    }
}

fn sum_terms(terms: &[Term], r: f64, m: u8) -> f64 {
    terms.iter().map(|t| t.deriv(r, m)).sum()
}

/// Anything that provides a radial factor K with its first derivative;
/// implemented by the metric itself and by the g₃-perturbed coefficient.
pub trait RadialCoefficient: Sync {
    fn k(&self, r: f64) -> f64;
    fn dk(&self, r: f64) -> f64;
    fn inner_radius(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    #[serde(rename = "R")]
    pub r_inner: f64,
    #[serde(rename = "K_terms")]
    pub k_terms: Vec<Term>,
    pub rho1: f64,
    pub rho2: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub g3_terms: Option<Vec<Term>>,
    pub delta0: f64,
}

impl MetricSpec {
    /// Flat metric (K ≡ 1) outside the disk of radius `r_inner`.
    pub fn flat(r_inner: f64) -> Self {
        Self {
            r_inner,
            k_terms: vec![Term::Const { c: 1.0 }],
            rho1: 1.0,
            rho2: 2.0,
            alpha: None,
            g3_terms: None,
            delta0: 0.5,
        }
    }

    /// `K = 1 + amp·⟨r⟩^{−1}`, the long-range test profile.
    pub fn long_range(r_inner: f64, amp: f64) -> Self {
        Self {
            k_terms: vec![Term::Const { c: 1.0 }, Term::Bracket { c: amp, beta: 1.0 }],
            ..Self::flat(r_inner)
        }
    }

    pub fn with_terms(r_inner: f64, k_terms: Vec<Term>) -> Self {
        Self {
            k_terms,
            ..Self::flat(r_inner)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metric serializes")
    }

    /// Short stable fingerprint of the serialized metric.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.r_inner > 0.0 && self.r_inner.is_finite()) {
            return bad(format!("R must be positive, got {}", self.r_inner));
        }
        if !(self.rho1 > 0.0 && self.rho1 <= 1.0) {
            return bad(format!("rho1 must lie in (0, 1], got {}", self.rho1));
        }
        if !(self.rho2 > 1.0) {
            return bad(format!("rho2 must exceed 1, got {}", self.rho2));
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0) {
            return bad(format!("delta0 must lie in (0, 1), got {}", self.delta0));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0) {
                return bad(format!("alpha must be positive, got {a}"));
            }
        }
        if self.g3_terms.is_some() && self.alpha.is_none() {
            return bad("g3_terms require an alpha decay rate".into());
        }
        if self.k_terms.is_empty() {
            return bad("K_terms is empty".into());
        }
        Ok(())
    }

    pub fn eval_k(&self, r: f64) -> f64 {
        sum_terms(&self.k_terms, r, 0)
    }

    /// m-th derivative of K (m ≤ 2).
    pub fn eval_k_deriv(&self, r: f64, m: u8) -> f64 {
        sum_terms(&self.k_terms, r, m)
    }

    /// K(r) − 1 with the constant part cancelled before adding the rest.
    pub fn k_minus_one(&self, r: f64) -> f64 {
        let mut constant = -1.0;
        let mut rest = 0.0;
        for t in &self.k_terms {
            match t {
                Term::Const { c } => constant += c,
                other => rest += other.deriv(r, 0),
            }
        }
        constant + rest
    }

    pub fn g3(&self, r: f64, m: u8) -> f64 {
        self.g3_terms.as_deref().map_or(0.0, |t| sum_terms(t, r, m))
    }

    /// `∫_a^b K(s) ds`.
    pub fn k_integral(&self, a: f64, b: f64) -> f64 {
        integrate(|s| self.eval_k(s), a, b, QuadOptions::tol(1e-13, 1e-13))
            .map(|q| q.value)
            .unwrap_or(f64::NAN)
    }

    /// `∫_R^{r_i} K` at every node of `grid`, accumulated interval by interval.
    pub fn cumulative_k_integral(&self, nodes: &[f64]) -> Vec<f64> {
        let mut acc = 0.0;
        let mut prev = self.r_inner;
        nodes
            .iter()
            .map(|&r| {
                acc += self.k_integral(prev, r);
                prev = r;
                acc
            })
            .collect()
    }

    /// The coefficient √(K² + g₃) of the radially perturbed metric.
    pub fn perturbed(&self) -> Perturbed<'_> {
        Perturbed(self)
    }
}

impl RadialCoefficient for MetricSpec {
    fn k(&self, r: f64) -> f64 {
        self.eval_k(r)
    }
    fn dk(&self, r: f64) -> f64 {
        self.eval_k_deriv(r, 1)
    }
    fn inner_radius(&self) -> f64 {
        self.r_inner
    }
}

/// Radial factor of g₁ + g₃ with g₃ acting on the dr² coefficient:
/// `(K² + g₃(r))dr² + r²dθ²`.
#[derive(Debug, Clone, Copy)]
pub struct Perturbed<'a>(pub &'a MetricSpec);

impl RadialCoefficient for Perturbed<'_> {
    fn k(&self, r: f64) -> f64 {
        let k = self.0.eval_k(r);
        (k * k + self.0.g3(r, 0)).sqrt()
    }
    fn dk(&self, r: f64) -> f64 {
        let k = self.0.eval_k(r);
        let dk = self.0.eval_k_deriv(r, 1);
        (2.0 * k * dk + self.0.g3(r, 1)) / (2.0 * self.k(r))
    }
    fn inner_radius(&self) -> f64 {
        self.0.r_inner
    }
}

fn bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// Sampled sup of `⟨r⟩^{m+ρ₁}|∂_r^m(K−1)|`, m = 0, 1, 2.
    pub constants: [f64; 3],
    /// Same suprema with the far field doubled.
    pub extended: [f64; 3],
}

/// Growth factor under far-field doubling that is read as unbounded.
pub const DECAY_GROWTH_LIMIT: f64 = 1.2;

fn decay_sups(metric: &MetricSpec, nodes: &[f64]) -> [f64; 3] {
    let mut sups = [0.0f64; 3];
    for &r in nodes {
        let w = bracket(r);
        for (m, s) in sups.iter_mut().enumerate() {
            let d = if m == 0 {
                metric.k_minus_one(r)
            } else {
                metric.eval_k_deriv(r, m as u8)
            };
            *s = s.max(w.powf(m as f64 + metric.rho1) * d.abs());
        }
    }
    sups
}

/// Sampled decay constants of K − 1; fails when any of them keeps growing
/// as the far field is doubled.
pub fn verify_decay(metric: &MetricSpec, grid: &RadialGrid) -> Result<DecayReport> {
    if grid.outer() < 100.0 * metric.r_inner {
        return Err(Error::InvalidInput(format!(
            "decay check needs the grid to reach 100·R, it stops at {}",
            grid.outer()
        )));
    }
    let constants = decay_sups(metric, grid.nodes());
    let extended = decay_sups(metric, grid.extended_to(2.0 * grid.outer())?.nodes());
    for m in 0..3 {
        if extended[m] > DECAY_GROWTH_LIMIT * constants[m] && extended[m] > 1e-14 {
            return Err(Error::DecayViolation(format!(
                "sup ⟨r⟩^{{{m}+ρ₁}}|∂^{m}(K−1)| grows from {:.4e} to {:.4e} when the far field doubles",
                constants[m], extended[m]
            )));
        }
    }
    Ok(DecayReport { constants, extended })
}

/// Sampled constant C in `|g₃| + |∂_r g₃| ≤ C e^{−α∫_R^r K}`; fails if it
/// grows under far-field doubling.
pub fn verify_g3_decay(metric: &MetricSpec, grid: &RadialGrid) -> Result<f64> {
    let Some(alpha) = metric.alpha else {
        return Ok(0.0);
    };
    let sup = |nodes: &[f64]| {
        let dist = metric.cumulative_k_integral(nodes);
        nodes
            .iter()
            .zip(&dist)
            .map(|(&r, &d)| (metric.g3(r, 0).abs() + metric.g3(r, 1).abs()) * (alpha * d).exp())
            .fold(0.0f64, f64::max)
    };
    let c = sup(grid.nodes());
    let c_ext = sup(grid.extended_to(2.0 * grid.outer())?.nodes());
    if c_ext > DECAY_GROWTH_LIMIT * c && c_ext > 1e-14 {
        return Err(Error::DecayViolation(format!(
            "g3 weighted sup grows from {c:.4e} to {c_ext:.4e} under far-field doubling"
        )));
    }
    Ok(c)
}

/// Largest admissible δ₀ for `K²dr² + r²dθ²` on the sampled radii: the
/// inverse metric has eigenvalues K⁻² and 1, so δ₀ = min(K², K⁻², 1).
/// Fails when the declared δ₀ exceeds that estimate.
pub fn check_ellipticity<C: RadialCoefficient + ?Sized>(
    coeff: &C,
    declared: f64,
    grid: &RadialGrid,
) -> Result<f64> {
    let est = grid
        .nodes()
        .iter()
        .map(|&r| {
            let k2 = coeff.k(r).powi(2);
            k2.min(1.0 / k2).min(1.0)
        })
        .fold(1.0f64, f64::min);
    if declared > est {
        return Err(Error::EllipticityViolation(format!(
            "declared δ₀ = {declared} exceeds the sampled bound {est:.6}"
        )));
    }
    Ok(est)
}

/// Edge coefficients `a_{i+1/2} = r_{i+1/2} / (K(r_{i+1/2})(r_{i+1} − r_i))`
/// of the flux `F = K⁻¹ r ∂_r f`.
pub fn flux_coefficients<C: RadialCoefficient + ?Sized>(coeff: &C, nodes: &[f64]) -> Vec<f64> {
    nodes
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            mid / (coeff.k(mid) * (w[1] - w[0]))
        })
        .collect()
}

/// Discrete volume weights `K(r_i)·r_i·Δr_i` (dual-cell width) of g₁ per
/// unit angle.
pub fn volume_weights<C: RadialCoefficient + ?Sized>(coeff: &C, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { nodes[i] - nodes[i - 1] } else { 0.0 };
            let right = if i + 1 < n { nodes[i + 1] - nodes[i] } else { 0.0 };
            coeff.k(nodes[i]) * nodes[i] * 0.5 * (left + right)
        })
        .collect()
}

fn quadratic_extrapolate(x: [f64; 3], y: [f64; 3], at: f64) -> f64 {
    let l0 = (at - x[1]) * (at - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
    let l1 = (at - x[0]) * (at - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
    let l2 = (at - x[0]) * (at - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
    l0 * y[0] + l1 * y[1] + l2 * y[2]
}

/// Radial Laplace–Beltrami operator `K⁻¹r⁻¹∂_r(K⁻¹ r ∂_r f)` by flux
/// differencing. End values are quadratic extrapolations from the interior.
pub fn laplace_radial<C: RadialCoefficient + ?Sized>(
    coeff: &C,
    f: &[f64],
    grid: &RadialGrid,
) -> Result<Vec<f64>> {
    let nodes = grid.nodes();
    let n = nodes.len();
    if n < 4 {
        return Err(Error::GridTooCoarse(format!("{n} nodes, need at least 4")));
    }
    if f.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} samples on a {n}-node grid",
            f.len()
        )));
    }
    let a = flux_coefficients(coeff, nodes);
    let w = volume_weights(coeff, nodes);
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let flux_r = a[i] * (f[i + 1] - f[i]);
        let flux_l = a[i - 1] * (f[i] - f[i - 1]);
        out[i] = (flux_r - flux_l) / w[i];
    }
    out[0] = quadratic_extrapolate(
        [nodes[1], nodes[2], nodes[3]],
        [out[1], out[2], out[3]],
        nodes[0],
    );
    out[n - 1] = quadratic_extrapolate(
        [nodes[n - 4], nodes[n - 3], nodes[n - 2]],
        [out[n - 4], out[n - 3], out[n - 2]],
        nodes[n - 1],
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn k_evaluation() {
        assert_eq!(MetricSpec::flat(1.0).eval_k(5.0), 1.0);
        assert!((MetricSpec::long_range(1.0, 0.1).eval_k(0.0) - 1.1).abs() < 1e-15);
    }

    #[test]
    fn long_range_first_derivative_constant_is_finite() {
        // Dense sampling oracle with the analytic derivative −0.1 r⟨r⟩⁻³.
        let m = MetricSpec::long_range(1.0, 0.1);
        let mut sup = 0.0f64;
        for i in 0..200_000 {
            let r = i as f64 * 0.01;
            let b = (1.0 + r * r).sqrt();
            let analytic = -0.1 * r / b.powi(3);
            assert!((m.eval_k_deriv(r, 1) - analytic).abs() < 1e-15);
            sup = sup.max(b * b * analytic.abs());
        }
        assert!(sup < 0.1 && sup > 0.0999);
    }

    #[test]
    fn decay_constants() {
        let grid = RadialGrid::log_graded(1.0, 200.0, 64.0).unwrap();
        let flat = verify_decay(&MetricSpec::flat(1.0), &grid).unwrap();
        assert_eq!(flat.constants, [0.0; 3]);
        let lr = verify_decay(&MetricSpec::long_range(1.0, 0.1), &grid).unwrap();
        assert!((lr.constants[0] - 0.1).abs() < 1e-12);
        let log = MetricSpec::with_terms(1.0, vec![Term::Const { c: 1.0 }, Term::LogBracket { c: 0.1 }]);
        assert!(matches!(verify_decay(&log, &grid), Err(Error::DecayViolation(_))));
        let short = RadialGrid::log_graded(1.0, 50.0, 64.0).unwrap();
        assert!(matches!(verify_decay(&MetricSpec::flat(1.0), &short), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn ellipticity() {
        let grid = RadialGrid::uniform(1.0, 10.0, 0.1).unwrap();
        assert_eq!(check_ellipticity(&MetricSpec::flat(1.0), 0.5, &grid).unwrap(), 1.0);
        // K sweeps [0.9, 1.1] across the grid: δ₀ = min(0.9², 1/1.1²) = 0.81.
        let m = MetricSpec::with_terms(1.0, vec![Term::Const { c: 1.0 }, Term::Exp { c: 0.1, gamma: 0.0 }]);
        let sweep = RadialGrid::from_nodes(vec![1.0, 2.0, 3.0], grid.spacing()).unwrap();
        let est = check_ellipticity(&m, 0.5, &sweep).unwrap();
        assert!((est - 1.0 / 1.21).abs() < 1e-12);
        let low = MetricSpec::with_terms(1.0, vec![Term::Const { c: 0.9 }]);
        assert!((check_ellipticity(&low, 0.5, &sweep).unwrap() - 0.81).abs() < 1e-12);
        assert!(matches!(
            check_ellipticity(&m, 0.95, &sweep),
            Err(Error::EllipticityViolation(_))
        ));
    }

    #[test]
    fn laplacian_of_r_squared_is_four() {
        let grid = RadialGrid::uniform(1.0, 5.0, 0.05).unwrap();
        let f: Vec<f64> = grid.nodes().iter().map(|r| r * r).collect();
        let l = laplace_radial(&MetricSpec::flat(1.0), &f, &grid).unwrap();
        for v in l {
            assert!((v - 4.0).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn laplacian_log_converges_at_second_order() {
        let m = MetricSpec::flat(1.0);
        let mut prev = None;
        // Geometric grids reproduce ln r exactly (the discrete flux is constant),
        // so the order is measured on uniform grids.
        let mut g = RadialGrid::uniform(1.0, 20.0, 0.1).unwrap();
        for _ in 0..3 {
            let f: Vec<f64> = g.nodes().iter().map(|r| r.ln()).collect();
            let res = laplace_radial(&m, &f, &g)
                .unwrap()
                .iter()
                .zip(g.nodes())
                .map(|(v, r)| (v * r * r).abs())
                .fold(0.0f64, f64::max);
            if let Some(p) = prev {
                assert!(p / res >= 3.5, "ratio {}", p / res);
            }
            prev = Some(res);
            g = g.refined();
        }
    }

    #[test]
    fn too_coarse() {
        let g = RadialGrid::uniform(1.0, 1.3, 0.1).unwrap();
        assert!(matches!(
            laplace_radial(&MetricSpec::flat(1.0), &[0.0; 4][..3], &RadialGrid::uniform(1.0, 1.2, 0.1).unwrap()),
            Err(Error::GridTooCoarse(_))
        ));
        assert!(laplace_radial(&MetricSpec::flat(1.0), &[0.0; 4], &g).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let m = MetricSpec::long_range(1.5, 0.1);
        let text = m.to_json();
        assert!(text.contains("\"R\":1.5") && text.contains("K_terms"));
        assert_eq!(MetricSpec::from_json(&text).unwrap(), m);
        assert!(MetricSpec::from_json("{\"R\": -1}").is_err());
    }

    fn arb_terms() -> impl Strategy<Value = Vec<Term>> {
        let term = prop_oneof![
            (-0.3f64..0.3, 0.5f64..3.0).prop_map(|(c, beta)| Term::Bracket { c, beta }),
            (-0.3f64..0.3, 0.1f64..2.0).prop_map(|(c, gamma)| Term::Exp { c, gamma }),
        ];
        prop::collection::vec(term, 1..4).prop_map(|mut v| {
            v.push(Term::Const { c: 1.0 });
            v
        })
    }

    proptest! {
        #[test]
        fn derivatives_match_central_differences(terms in arb_terms(), r in 0.2f64..20.0) {
            let m = MetricSpec::with_terms(1.0, terms);
            for h in [1e-3, 5e-4] {
                let d1 = (m.eval_k(r + h) - m.eval_k(r - h)) / (2.0 * h);
                let d2 = (m.eval_k_deriv(r + h, 1) - m.eval_k_deriv(r - h, 1)) / (2.0 * h);
                prop_assert!((d1 - m.eval_k_deriv(r, 1)).abs() < 5.0 * h * h);
                prop_assert!((d2 - m.eval_k_deriv(r, 2)).abs() < 50.0 * h * h);
            }
        }

        #[test]
        fn discrete_operator_is_self_adjoint(
            terms in arb_terms(),
            fv in prop::collection::vec(-1.0f64..1.0, 30),
            gv in prop::collection::vec(-1.0f64..1.0, 30),
        ) {
            let m = MetricSpec::with_terms(1.0, terms);
            let grid = RadialGrid::log_graded(1.0, 10.0, 12.0).unwrap();
            let n = grid.len();
            let pad = |v: &[f64]| {
                let mut out = vec![0.0; n];
                for i in 1..n - 1 { out[i] = v[(i - 1) % v.len()]; }
                out
            };
            let (f, g) = (pad(&fv), pad(&gv));
            let w = volume_weights(&m, grid.nodes());
            let lf = laplace_radial(&m, &f, &grid).unwrap();
            let lg = laplace_radial(&m, &g, &grid).unwrap();
            let a: f64 = (1..n - 1).map(|i| w[i] * lf[i] * g[i]).sum();
            let b: f64 = (1..n - 1).map(|i| w[i] * f[i] * lg[i]).sum();
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }
}

//! Radial generalized eigenfunctions Δ_{g₁}φ_λ = λ²φ_λ with φ_λ(R) = 0.
//!
//! Two branches of `∂_r(K⁻¹ r ∂_r u) = λ² K r u` are integrated in Riccati
//! form (state `w = K⁻¹ r u'/u` and `ln u`), which keeps every quantity in
//! floating range however large `λr` gets:
//!
//! * the regular branch h_λ, started from the Frobenius series at r ≈ 0 and
//!   normalised by h_λ(1/λ) = 1;
//! * the decaying branch ψ, integrated backwards from `r_max` where it is
//!   initialised with the WKB log-derivative.
//!
//! Then φ_λ = h_λ − h_λ(R)·ψ/ψ(R).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, DEFAULT_PER_DECADE};
use crate::harmonic::build_phi0;
use crate::metric::{MetricSpec, RadialCoefficient};
use crate::ode::{solve, OdeOptions};
use crate::testfn::{Kind, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenConfig {
    /// Log-grid node density per decade.
    pub per_decade: f64,
    /// r_max = max(r_max_lambda / λ, r_max_inner · R, cover).
    pub r_max_lambda: f64,
    pub r_max_inner: f64,
    /// Extra radius that every member grid must reach (e.g. a light cone).
    pub cover: f64,
    pub rtol: f64,
    /// Node spacing is capped at `max_step_lambda / λ`, which keeps
    /// interpolation of the e^{λr} growth accurate between nodes.
    #[serde(default = "default_max_step_lambda")]
    pub max_step_lambda: f64,
}

fn default_max_step_lambda() -> f64 {
    0.25
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            per_decade: DEFAULT_PER_DECADE,
            r_max_lambda: 60.0,
            r_max_inner: 1e3,
            cover: 0.0,
            rtol: 1e-12,
            max_step_lambda: default_max_step_lambda(),
        }
    }
}

impl EigenConfig {
    pub fn r_max(&self, r_inner: f64, lambda: f64) -> f64 {
        (self.r_max_lambda / lambda).max(self.r_max_inner * r_inner).max(self.cover)
    }

    pub fn grid(&self, r_inner: f64, lambda: f64) -> Result<RadialGrid> {
        RadialGrid::log_capped(r_inner, self.r_max(r_inner, lambda), self.per_decade, self.max_step_lambda / lambda)
    }
}

/// Default working bound for λ: 0.4·min(1/(2R), α/2 when g₃ is present).
pub fn default_lambda_max(metric: &MetricSpec) -> f64 {
    let mut m = 0.5 / metric.r_inner;
    if metric.g3_terms.is_some() {
        if let Some(a) = metric.alpha {
            m = m.min(0.5 * a);
        }
    }
    0.4 * m
}

/// Default λ₁ used by the weighted integral and b_q: half of λ_max.
pub fn default_lambda1(metric: &MetricSpec) -> f64 {
    0.5 * default_lambda_max(metric)
}

/// Growing and decaying branches plus the assembled φ_λ on one grid.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub h: TestFunction,
    pub phi: TestFunction,
}

fn second_derivative<C: RadialCoefficient + ?Sized>(coeff: &C, lambda: f64, r: f64, u: f64, du: f64) -> f64 {
    let k = coeff.k(r);
    lambda * lambda * k * k * u - (1.0 / r - coeff.dk(r) / k) * du
}

fn riccati<C: RadialCoefficient + ?Sized>(coeff: &C, lambda: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    move |r, y| {
        let k = coeff.k(r);
        let w = y[0];
        [lambda * lambda * k * r - k * w * w / r, k * w / r]
    }
}

/// Regular branch normalised at 1/λ. Returns (w, ln h) at `nodes` and
/// ln h(1/λ).
fn growing_branch<C: RadialCoefficient + ?Sized>(
    coeff: &C,
    lambda: f64,
    nodes: &[f64],
    opts: OdeOptions,
) -> Result<(Vec<[f64; 2]>, f64)> {
    let anchor = 1.0 / lambda;
    let k0 = coeff.k(0.0);
    let r0 = 1e-3 * nodes[0].min(anchor);
    let a = 0.25 * lambda * lambda * k0 * k0;
    let y0 = [2.0 * a * r0 * r0 / k0, a * r0 * r0];
    let mut targets: Vec<f64> = nodes.to_vec();
    let pos = targets.partition_point(|&r| r < anchor);
    let has_anchor = targets.get(pos).is_some_and(|&r| r == anchor);
    if !has_anchor {
        targets.insert(pos, anchor);
    }
    let states = solve(riccati(coeff, lambda), r0, y0, &targets, opts)?;
    let ln_anchor = states[pos][1];
    let mut out = states;
    if !has_anchor {
        out.remove(pos);
    }
    Ok((out, ln_anchor))
}

/// Decaying branch integrated inwards from the last node; returns (w, ln ψ)
/// at `nodes` in increasing order.
fn decaying_branch<C: RadialCoefficient + ?Sized>(
    coeff: &C,
    lambda: f64,
    nodes: &[f64],
    opts: OdeOptions,
) -> Result<Vec<[f64; 2]>> {
    let r_max = *nodes.last().unwrap();
    let y0 = [-lambda * r_max - 0.5 / coeff.k(r_max), 0.0];
    let targets: Vec<f64> = nodes.iter().rev().copied().collect();
    let mut states = solve(riccati(coeff, lambda), r_max, y0, &targets, opts)?;
    states.reverse();
    // Away from the obstacle the decaying log-derivative must track −λK.
    for (&r, s) in nodes.iter().zip(&states) {
        if r >= 10.0 / lambda {
            let rel = -s[0] / (lambda * r);
            if (rel - 1.0).abs() > 0.1 {
                return Err(Error::BranchContamination(format!(
                    "decaying log-derivative is {rel:.3}·(−λK) at r = {r}; raise r_max"
                )));
            }
        }
    }
    Ok(states)
}

/// Builds h_λ and φ_λ for any radial coefficient on `grid`.
pub fn solve_pair<C: RadialCoefficient + ?Sized>(
    coeff: &C,
    lambda: f64,
    grid: &RadialGrid,
    rtol: f64,
    metric_hash: &str,
    perturbed: bool,
) -> Result<EigenPair> {
    Ok(solve_branches(coeff, lambda, grid, rtol, metric_hash, perturbed)?.0)
}

/// As [`solve_pair`], also returning the decaying branch as (ψ, ψ′) with
/// ψ(R) = 1.
fn solve_branches<C: RadialCoefficient + ?Sized>(
    coeff: &C,
    lambda: f64,
    grid: &RadialGrid,
    rtol: f64,
    metric_hash: &str,
    perturbed: bool,
) -> Result<(EigenPair, Vec<[f64; 2]>)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("λ must be positive, got {lambda}")));
    }
    let nodes = grid.nodes();
    if nodes[nodes.len() - 1] < 10.0 / lambda {
        return Err(Error::BranchContamination(format!(
            "r_max = {} is below 10/λ = {}",
            grid.outer(),
            10.0 / lambda
        )));
    }
    let opts = OdeOptions {
        rtol,
        atol: rtol * 1e-2,
        ..OdeOptions::default()
    };
    let (grow, ln_anchor) = growing_branch(coeff, lambda, nodes, opts)?;
    let decay = decaying_branch(coeff, lambda, nodes, opts)?;

    let n = nodes.len();
    let mut h = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    let mut d2h = Vec::with_capacity(n);
    for (&r, s) in nodes.iter().zip(&grow) {
        let v = (s[1] - ln_anchor).exp();
        let d = v * coeff.k(r) * s[0] / r;
        h.push(v);
        dh.push(d);
        d2h.push(second_derivative(coeff, lambda, r, v, d));
    }
    let h_r = h[0];
    let ln_psi_r = decay[0][1];
    let mut phi = Vec::with_capacity(n);
    let mut dphi = Vec::with_capacity(n);
    let mut d2phi = Vec::with_capacity(n);
    let mut unit_decay = Vec::with_capacity(n);
    for (i, (&r, s)) in nodes.iter().zip(&decay).enumerate() {
        let y = (s[1] - ln_psi_r).exp();
        let dy = y * coeff.k(r) * s[0] / r;
        unit_decay.push([y, dy]);
        let v = if i == 0 { 0.0 } else { h[i] - h_r * y };
        let d = dh[i] - h_r * dy;
        phi.push(v);
        dphi.push(d);
        d2phi.push(second_derivative(coeff, lambda, r, v, d));
    }
    let (h_kind, phi_kind) = if perturbed {
        (Kind::HLambda { lambda }, Kind::PhiLambdaPerturbed { lambda })
    } else {
        (Kind::HLambda { lambda }, Kind::PhiLambda { lambda })
    };
    let pair = EigenPair {
        lambda,
        h: TestFunction::new(h_kind, grid.clone(), h, dh, Some(d2h), metric_hash.to_string())?,
        phi: TestFunction::new(phi_kind, grid.clone(), phi, dphi, Some(d2phi), metric_hash.to_string())?,
    };
    Ok((pair, unit_decay))
}

/// r·K⁻¹·(φ_λψ′ − φ_λ′ψ) at every node, φ_λ and the decaying branch ψ
/// (normalised ψ(R) = 1). Constant for an exact solution.
pub fn wronskian<C: RadialCoefficient + ?Sized>(coeff: &C, lambda: f64, grid: &RadialGrid, rtol: f64) -> Result<Vec<f64>> {
    let (pair, decay) = solve_branches(coeff, lambda, grid, rtol, "", false)?;
    Ok(grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| r / coeff.k(r) * (pair.phi.values[i] * decay[i][1] - pair.phi.deriv_values[i] * decay[i][0]))
        .collect())
}

/// h_λ on the default grid for `metric`.
pub fn solve_h_lambda(metric: &MetricSpec, lambda: f64, cfg: &EigenConfig) -> Result<TestFunction> {
    let grid = cfg.grid(metric.r_inner, lambda)?;
    Ok(solve_pair(metric, lambda, &grid, cfg.rtol, &metric.hash(), false)?.h)
}

/// φ_λ on the default grid for `metric`.
pub fn solve_phi_lambda(metric: &MetricSpec, lambda: f64, cfg: &EigenConfig) -> Result<TestFunction> {
    let grid = cfg.grid(metric.r_inner, lambda)?;
    Ok(solve_pair(metric, lambda, &grid, cfg.rtol, &metric.hash(), false)?.phi)
}

#[derive(Debug, Clone)]
pub struct EigenFamily {
    pub metric: MetricSpec,
    pub lambdas: Vec<f64>,
    pub members: Vec<EigenPair>,
    pub lambda_max: f64,
}

impl EigenFamily {
    /// Solves every λ (in parallel; results are kept in the order of
    /// `lambdas`, which is sorted ascending).
    pub fn build(metric: &MetricSpec, lambdas: &[f64], lambda_max: f64, cfg: &EigenConfig) -> Result<Self> {
        let mut lambdas = lambdas.to_vec();
        lambdas.sort_by(f64::total_cmp);
        if let Some(&bad) = lambdas.iter().find(|&&l| !(l > 0.0 && l <= lambda_max)) {
            return Err(Error::InvalidInput(format!("λ = {bad} outside (0, {lambda_max}]")));
        }
        let hash = metric.hash();
        let members = lambdas
            .par_iter()
            .map(|&l| {
                let grid = cfg.grid(metric.r_inner, l)?;
                solve_pair(metric, l, &grid, cfg.rtol, &hash, false)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            metric: metric.clone(),
            lambdas,
            members,
            lambda_max,
        })
    }

    /// Geometric λ values, `per_decade` per decade, spanning [lo, hi].
    pub fn geometric_lambdas(lo: f64, hi: f64, per_decade: f64) -> Vec<f64> {
        let n = ((hi / lo).log10() * per_decade).round().max(1.0) as usize;
        (0..=n).map(|i| lo * (hi / lo).powf(i as f64 / n as f64)).collect()
    }
}

/// Sandwich h_λ − h_λ(R) ≤ φ_λ ≤ h_λ: worst relative violation over nodes
/// (≤ 0 when the sandwich holds exactly).
pub fn sandwich_violation(pair: &EigenPair) -> f64 {
    let h_r = pair.h.values[0];
    pair.h
        .values
        .iter()
        .zip(&pair.phi.values)
        .map(|(&h, &phi)| {
            let lower = (h - h_r) - phi;
            let upper = phi - h;
            lower.max(upper) / h.abs().max(f64::MIN_POSITIVE)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpread {
    pub lambda: f64,
    pub inner_min: f64,
    pub inner_max: f64,
    pub outer_min: f64,
    pub outer_max: f64,
}

impl RegimeSpread {
    pub fn inner(&self) -> f64 {
        self.inner_max / self.inner_min
    }
    pub fn outer(&self) -> f64 {
        self.outer_max / self.outer_min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// One entry per λ, in ascending λ.
    pub per_lambda: Vec<RegimeSpread>,
    pub max_inner_spread: f64,
    pub max_outer_spread: f64,
    /// λ-uniform spreads: max over λ of each ratio divided by min over λ.
    pub uniform_inner_spread: f64,
    pub uniform_outer_spread: f64,
}

/// Growth factor (smallest λ vs largest λ) that, together with a monotone
/// trend, is read as a λ-dependent spread.
pub const SPREAD_GROWTH_LIMIT: f64 = 1.5;

fn regime_ratios(metric: &MetricSpec, pair: &EigenPair) -> RegimeSpread {
    let lambda = pair.lambda;
    let big_r = metric.r_inner;
    let anchor = 1.0 / lambda;
    let log_scale = (1.0 / (big_r * lambda)).ln();
    let mut inner_pts: Vec<f64> = pair
        .phi
        .nodes()
        .iter()
        .copied()
        .filter(|&r| r >= 1.1 * big_r && r <= anchor)
        .collect();
    inner_pts.push(1.1 * big_r);
    inner_pts.push(anchor);
    let mut outer_pts: Vec<f64> = pair
        .phi
        .nodes()
        .iter()
        .copied()
        .filter(|&r| r >= anchor && r <= 30.0 * anchor)
        .collect();
    outer_pts.push(anchor);
    outer_pts.push(30.0 * anchor);

    let (mut imin, mut imax) = (f64::INFINITY, 0.0f64);
    for r in inner_pts {
        let v = pair.phi.eval(r) * log_scale / (r / big_r).ln();
        imin = imin.min(v);
        imax = imax.max(v);
    }
    outer_pts.sort_by(f64::total_cmp);
    let dist = metric.cumulative_k_integral(&outer_pts);
    let (mut omin, mut omax) = (f64::INFINITY, 0.0f64);
    for (r, d) in outer_pts.iter().zip(dist) {
        let v = pair.phi.eval(*r) * (1.0 + (r * lambda).powi(2)).powf(0.25) * (-lambda * d).exp();
        omin = omin.min(v);
        omax = omax.max(v);
    }
    RegimeSpread {
        lambda,
        inner_min: imin,
        inner_max: imax,
        outer_min: omin,
        outer_max: omax,
    }
}

fn grows_monotonically(values_by_decreasing_lambda: &[f64]) -> bool {
    let v = values_by_decreasing_lambda;
    v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]) && v[v.len() - 1] > SPREAD_GROWTH_LIMIT * v[0]
}

/// Two-regime check of φ_λ: inner ratio φ_λ·ln(1/(Rλ))/ln(r/R) on
/// [1.1R, 1/λ] and outer ratio φ_λ⟨rλ⟩^{1/2}e^{−λ∫_R^r K} on [1/λ, 30/λ].
pub fn verify_hypothesis_h(family: &EigenFamily) -> Result<HypothesisReport> {
    let (lo, hi) = match (family.lambdas.first(), family.lambdas.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::InvalidInput("empty family".into())),
    };
    if (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(Error::InvalidInput(format!(
            "family spans {:.2} decades, need ≥ 1.5",
            (hi / lo).log10()
        )));
    }
    let per_lambda: Vec<RegimeSpread> = family
        .members
        .par_iter()
        .map(|m| regime_ratios(&family.metric, m))
        .collect();
    let inner: Vec<f64> = per_lambda.iter().rev().map(RegimeSpread::inner).collect();
    let outer: Vec<f64> = per_lambda.iter().rev().map(RegimeSpread::outer).collect();
    if grows_monotonically(&inner) || grows_monotonically(&outer) {
        return Err(Error::HypothesisFailure(format!(
            "spread grows steadily as λ → 0 (inner {:.3} → {:.3}, outer {:.3} → {:.3})",
            inner[0],
            inner[inner.len() - 1],
            outer[0],
            outer[outer.len() - 1]
        )));
    }
    let fold = |f: fn(&RegimeSpread) -> f64, max: bool| {
        per_lambda.iter().map(f).fold(if max { 0.0 } else { f64::INFINITY }, |a, b| if max { a.max(b) } else { a.min(b) })
    };
    Ok(HypothesisReport {
        max_inner_spread: inner.iter().copied().fold(0.0, f64::max),
        max_outer_spread: outer.iter().copied().fold(0.0, f64::max),
        uniform_inner_spread: fold(|s| s.inner_max, true) / fold(|s| s.inner_min, false),
        uniform_outer_spread: fold(|s| s.outer_max, true) / fold(|s| s.outer_min, false),
        per_lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeBounds {
    /// max of ∂_rφ_λ / (λ²(r−R)φ_λ) over r ≥ R + 0.01/λ.
    pub first: f64,
    /// max of |∂_r²φ_λ| / (λ²φ_λ) over r ≥ R + 0.01/λ.
    pub second: f64,
    /// The same two ratios restricted to r ≥ 1/λ.
    pub first_outer: f64,
    pub second_outer: f64,
}

/// Derivative ratios of φ_λ. Near the boundary layer φ_λ ≈ c·ln(r/R), so the
/// first ratio there is about 1/(λ(r−R))² and the second about 1/(λ²R(r−R));
/// with the layer cut at 0.01/λ the first stays λ-independent while the
/// second grows like 1/λ. Both are O(1) for r ≥ 1/λ.
pub fn derivative_bounds_check(phi: &TestFunction, lambda: f64) -> Result<DerivativeBounds> {
    let sec = phi
        .second_values
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("φ_λ carries no second derivatives".into()))?;
    let big_r = phi.grid.inner();
    let l2 = lambda * lambda;
    let mut out = DerivativeBounds {
        first: 0.0,
        second: 0.0,
        first_outer: 0.0,
        second_outer: 0.0,
    };
    for (i, &r) in phi.nodes().iter().enumerate() {
        if r < big_r + 0.01 / lambda {
            continue;
        }
        let v = phi.values[i];
        let first = phi.deriv_values[i] / (l2 * (r - big_r) * v);
        let second = sec[i].abs() / (l2 * v);
        out.first = out.first.max(first);
        out.second = out.second.max(second);
        if r >= 1.0 / lambda {
            out.first_outer = out.first_outer.max(first);
            out.second_outer = out.second_outer.max(second);
        }
    }
    if ![out.first, out.second, out.first_outer, out.second_outer].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("derivative ratios are not finite".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PerturbedSolution {
    pub phi: TestFunction,
    /// Φ_λ = φ_λ − ψ.
    pub phi_perturbed: TestFunction,
    /// ψ at the nodes.
    pub psi: Vec<f64>,
    /// sup_{r>R} |ψ| / φ₀.
    pub psi_norm: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// Φ_λ for the metric `(K² + g₃)dr² + r²dθ²`, written as Φ_λ = φ_λ − ψ where ψ
/// is the bounded solution of `Δ_g ψ − λ²ψ = Δ_g φ_λ − λ²φ_λ` with ψ(R) = 0.
///
/// ψ comes from the Green's function of the perturbed operator built from its
/// own regular and decaying branches, so it is never formed as a difference
/// of two exponentially large functions.
pub fn solve_perturbed_radial(metric: &MetricSpec, lambda: f64, cfg: &EigenConfig) -> Result<PerturbedSolution> {
    let alpha = match (metric.g3_terms.as_ref(), metric.alpha) {
        (Some(_), Some(a)) => a,
        _ => return Err(Error::InvalidInput("metric carries no radial g3 perturbation".into())),
    };
    if !(alpha > 2.0 * lambda) {
        return Err(Error::InvalidInput(format!("need α > 2λ (α = {alpha}, λ = {lambda})")));
    }
    let grid = cfg.grid(metric.r_inner, lambda)?;
    let nodes = grid.nodes();
    let n = nodes.len();
    let hash = metric.hash();
    let base = solve_pair(metric, lambda, &grid, cfg.rtol, &hash, false)?;
    let pert_coeff = metric.perturbed();
    let (pert, y2) = solve_branches(&pert_coeff, lambda, &grid, cfg.rtol, &hash, true)?;
    let y1: Vec<[f64; 2]> = (0..n).map(|i| [pert.phi.values[i], pert.phi.deriv_values[i]]).collect();

    // Source F = K̃r(Δ_g φ_λ − λ²φ_λ) in divergence form.
    let l2 = lambda * lambda;
    let source: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let k = metric.eval_k(r);
            let kt = pert_coeff.k(r);
            let log_slope = metric.eval_k_deriv(r, 1) / k - pert_coeff.dk(r) / kt;
            let s = (-l2 * base.phi.values[i] * metric.g3(r, 0) + log_slope * base.phi.deriv_values[i]) / (kt * kt);
            kt * r * s
        })
        .collect();

    let j = grid.locate(1.0 / lambda).min(n - 1);
    let wr = nodes[j] / pert_coeff.k(nodes[j]) * (y1[j][0] * y2[j][1] - y1[j][1] * y2[j][0]);
    let mut inner = vec![0.0; n];
    for i in 1..n {
        let h = nodes[i] - nodes[i - 1];
        inner[i] = inner[i - 1] + 0.5 * h * (y1[i][0] * source[i] + y1[i - 1][0] * source[i - 1]);
    }
    let mut outer = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let h = nodes[i + 1] - nodes[i];
        outer[i] = outer[i + 1] + 0.5 * h * (y2[i][0] * source[i] + y2[i + 1][0] * source[i + 1]);
    }
    let mut psi = vec![0.0; n];
    let mut dpsi = vec![0.0; n];
    for i in 0..n {
        psi[i] = (y2[i][0] * inner[i] + y1[i][0] * outer[i]) / wr;
        dpsi[i] = (y2[i][1] * inner[i] + y1[i][1] * outer[i]) / wr;
    }
    psi[0] = 0.0;

    let values: Vec<f64> = (0..n).map(|i| base.phi.values[i] - psi[i]).collect();
    let derivs: Vec<f64> = (0..n).map(|i| base.phi.deriv_values[i] - dpsi[i]).collect();
    let second: Vec<f64> = (0..n)
        .map(|i| second_derivative(&pert_coeff, lambda, nodes[i], values[i], derivs[i]))
        .collect();
    let cap = TestFunction::new(
        Kind::PhiLambdaPerturbed { lambda },
        grid.clone(),
        values,
        derivs,
        Some(second),
        hash,
    )?;

    let phi0 = build_phi0(metric, &grid)?;
    let mut psi_norm = 0.0f64;
    let (mut ratio_min, mut ratio_max) = (f64::INFINITY, 0.0f64);
    for i in 1..n {
        psi_norm = psi_norm.max(psi[i].abs() / phi0.values[i]);
        let ratio = cap.values[i] / base.phi.values[i];
        ratio_min = ratio_min.min(ratio);
        ratio_max = ratio_max.max(ratio);
    }
    if psi_norm >= 1.0 {
        return Err(Error::PerturbationTooLarge(format!("sup |ψ|/φ₀ = {psi_norm:.3}")));
    }
    Ok(PerturbedSolution {
        phi: base.phi,
        phi_perturbed: cap,
        psi,
        psi_norm,
        ratio_min,
        ratio_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Term;

    #[test]
    fn normalisation_and_dirichlet_zero() {
        let m = MetricSpec::long_range(1.0, 0.1);
        let cfg = EigenConfig::default();
        let lambda = 0.07;
        let grid = cfg.grid(1.0, lambda).unwrap();
        let pair = solve_pair(&m, lambda, &grid, cfg.rtol, "x", false).unwrap();
        assert!((pair.h.eval(1.0 / lambda) - 1.0).abs() < 1e-9);
        assert_eq!(pair.phi.values[0], 0.0);
        assert!(pair.phi.values.windows(2).all(|w| w[1] > w[0]));
        assert!(sandwich_violation(&pair) <= 1e-8);
    }

    #[test]
    fn residual_is_second_order() {
        let m = MetricSpec::long_range(1.0, 0.1);
        let lambda = 0.1;
        let mut prev = None;
        let mut g = RadialGrid::log_graded(1.0, 1e3, 16.0).unwrap();
        for _ in 0..3 {
            let pair = solve_pair(&m, lambda, &g, 1e-12, "x", false).unwrap();
            let l = crate::metric::laplace_radial(&m, &pair.phi.values, &g).unwrap();
            let n = g.len();
            // Interior nodes below 30/λ, relative to φ.
            let res = (1..n - 1)
                .filter(|&i| g.nodes()[i] < 300.0)
                .map(|i| ((l[i] - lambda * lambda * pair.phi.values[i]) / pair.phi.values[i]).abs())
                .fold(0.0f64, f64::max);
            if let Some(p) = prev {
                let ratio: f64 = p / res;
                assert!(ratio > 3.5, "ratio {ratio}");
            }
            prev = Some(res);
            g = g.refined();
        }
    }

    #[test]
    fn derivative_bounds_are_lambda_stable() {
        let m = MetricSpec::flat(1.0);
        let cfg = EigenConfig::default();
        let a = derivative_bounds_check(&solve_phi_lambda(&m, 0.05, &cfg).unwrap(), 0.05).unwrap();
        let b = derivative_bounds_check(&solve_phi_lambda(&m, 0.1, &cfg).unwrap(), 0.1).unwrap();
        assert!((a.first / b.first - 1.0).abs() < 0.5, "{a:?} {b:?}");
        assert!((0.05 * a.second / (0.1 * b.second) - 1.0).abs() < 0.5, "{a:?} {b:?}");
        for d in [a, b] {
            assert!(d.first_outer <= 1.5 && d.second_outer <= 1.5, "{d:?}");
        }
    }

    #[test]
    fn flat_wronskian_is_constant() {
        let m = MetricSpec::flat(1.0);
        let g = EigenConfig::default().grid(1.0, 0.1).unwrap();
        let w = wronskian(&m, 0.1, &g, 1e-12).unwrap();
        let w0 = w[0];
        for (r, v) in g.nodes().iter().zip(&w) {
            if *r <= 300.0 {
                assert!((v / w0 - 1.0).abs() < 1e-8, "{r} {v} {w0}");
            }
        }
    }

    fn with_g3(amp: f64) -> MetricSpec {
        MetricSpec {
            alpha: Some(1.0),
            g3_terms: Some(vec![Term::Exp { c: amp, gamma: 1.0 }]),
            ..MetricSpec::flat(1.0)
        }
    }

    #[test]
    fn zero_perturbation_is_exact() {
        let sol = solve_perturbed_radial(&with_g3(0.0), 0.05, &EigenConfig::default()).unwrap();
        assert_eq!(sol.psi_norm, 0.0);
        assert_eq!(sol.phi.values, sol.phi_perturbed.values);
    }

    #[test]
    fn perturbed_profile_solves_perturbed_equation() {
        // Φ_λ must be a multiple of the directly integrated perturbed φ_λ.
        let m = with_g3(0.2);
        let lambda = 0.05;
        let cfg = EigenConfig::default();
        let sol = solve_perturbed_radial(&m, lambda, &cfg).unwrap();
        let grid = cfg.grid(1.0, lambda).unwrap();
        let direct = solve_pair(&m.perturbed(), lambda, &grid, 1e-12, "x", true).unwrap().phi;
        let ratios: Vec<f64> = grid
            .nodes()
            .iter()
            .enumerate()
            .filter(|&(i, &r)| i > 0 && r < 5.0 / lambda)
            .map(|(i, _)| sol.phi_perturbed.values[i] / direct.values[i])
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        assert!(hi / lo - 1.0 < 1e-3, "{lo} {hi}");
    }

    #[test]
    fn perturbation_response_is_linear() {
        let cfg = EigenConfig::default();
        let a = solve_perturbed_radial(&with_g3(0.01), 0.05, &cfg).unwrap().psi_norm;
        let b = solve_perturbed_radial(&with_g3(0.005), 0.05, &cfg).unwrap().psi_norm;
        assert!(a > 0.0 && a < 0.1);
        assert!((a / b - 2.0).abs() < 0.1, "{a} {b}");
        let s = solve_perturbed_radial(&with_g3(0.05), 0.05, &cfg).unwrap();
        assert!(s.ratio_min >= 0.5 && s.ratio_max <= 2.0);
        assert!(solve_perturbed_radial(&MetricSpec::flat(1.0), 0.05, &cfg).is_err());
    }

    #[test]
    fn short_domain_is_rejected() {
        let m = MetricSpec::flat(1.0);
        let g = RadialGrid::log_graded(1.0, 50.0, 32.0).unwrap();
        assert!(matches!(
            solve_pair(&m, 0.1, &g, 1e-12, "x", false),
            Err(Error::BranchContamination(_))
        ));
    }
}

//! Radial semilinear wave equation `u_tt − Δ_{g₁}u = |u|^p` outside the disk
//! r = R with Dirichlet data, stepped by kick-drift-kick leapfrog.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::quadrature::{integrate_to_infinity, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeRadius {
    /// Root of ∫_R^r K = t + R₁.
    pub root: f64,
    /// (t + R₂)/δ₀ with R₂ = R₁ + δ₀R.
    pub crude_bound: f64,
}

/// Outer edge of the finite-speed cone at time `t`.
pub fn cone_radius(metric: &MetricSpec, t: f64, r1: f64) -> ConeRadius {
    let big_r = metric.r_inner;
    let target = t + r1;
    let crude_bound = (target + metric.delta0 * big_r) / metric.delta0;
    if target <= 0.0 {
        return ConeRadius { root: big_r, crude_bound };
    }
    // Newton on the monotone map r ↦ ∫_R^r K, kept inside a shrinking bracket.
    let (mut lo, mut hi) = (big_r, crude_bound.max(big_r + target / metric.eval_k(big_r)) * 2.0);
    let mut r = big_r + target;
    for _ in 0..200 {
        if !(r > lo && r < hi) {
            r = 0.5 * (lo + hi);
        }
        let f = metric.k_integral(big_r, r) - target;
        if f.abs() < 1e-12 * target.max(1.0) {
            break;
        }
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        r -= f / metric.eval_k(r);
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    ConeRadius { root: r, crude_bound }
}

/// Compactly supported bump `a·(1 − ((r − c)/w)²)^k` (k = 4 by default); centre and width default
/// to the midpoint and half-width of [R, R₀].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub center: Option<f64>,
    #[serde(default)]
    pub width: Option<f64>,
    /// Exponent k of `(1 − x²)^k`; the profile is C^{k−1} at its edges.
    #[serde(default = "default_power")]
    pub power: i32,
}

fn one() -> f64 {
    1.0
}

fn default_power() -> i32 {
    4
}

impl Default for Bump {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            center: None,
            width: None,
            power: default_power(),
        }
    }
}

impl Bump {
    pub fn resolve(&self, r_inner: f64, r0: f64) -> (f64, f64) {
        (
            self.center.unwrap_or(0.5 * (r_inner + r0)),
            self.width.unwrap_or(0.5 * (r0 - r_inner)),
        )
    }

    pub fn eval(&self, r: f64, r_inner: f64, r0: f64) -> f64 {
        let (c, w) = self.resolve(r_inner, r0);
        let x = (r - c) / w;
        if x.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - x * x).powi(self.power)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    pub metric: MetricSpec,
    pub p: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub u0_profile: Bump,
    #[serde(default)]
    pub u1_profile: Bump,
    #[serde(rename = "R0", default = "default_r0")]
    pub r0: f64,
    pub t_max: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Uniform radial step.
    #[serde(default = "default_dr")]
    pub dr: f64,
    #[serde(default = "default_threshold")]
    pub blowup_threshold: f64,
    #[serde(default = "default_dt_floor")]
    pub dt_floor: f64,
    /// `false` switches the |u|^p source off (linear runs).
    #[serde(default = "yes")]
    pub source: bool,
    /// Re-run with halved dt to confirm a detected blow-up time.
    #[serde(default = "yes")]
    pub confirm: bool,
    #[serde(default = "default_log_dt")]
    pub log_dt: f64,
    /// Snapshot spacing for the space-time history; `None` keeps none.
    #[serde(default)]
    pub history_dt: Option<f64>,
    /// Extra radius added beyond the crude cone bound at t_max.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Support is measured above this fraction of sup(|u| + |v|).
    #[serde(default = "default_support_tol")]
    pub support_tol: f64,
}

fn default_r0() -> f64 {
    3.0
}
fn default_cfl() -> f64 {
    0.5
}
fn default_dr() -> f64 {
    0.05
}
fn default_threshold() -> f64 {
    1e6
}
fn default_dt_floor() -> f64 {
    1e-12
}
fn yes() -> bool {
    true
}
fn default_log_dt() -> f64 {
    0.5
}
fn default_margin() -> f64 {
    5.0
}
fn default_support_tol() -> f64 {
    1e-4
}

/// dt is halved until `dt·√(p·max|u|^{p−1}) ≤ STIFF_STEP`.
pub const STIFF_STEP: f64 = 0.2;
/// Relative agreement required between the base and halved-dt blow-up times.
pub const CONFIRM_TOL: f64 = 0.02;
/// Energy-identity residual tolerated (relative) before the run is rejected.
pub const ENERGY_RESIDUAL_LIMIT: f64 = 0.1;
const FLUSH: f64 = 1e-250;

impl WaveConfig {
    pub fn new(metric: MetricSpec, p: f64, epsilon: f64, t_max: f64) -> Self {
        Self {
            metric,
            p,
            epsilon,
            u0_profile: Bump::default(),
            u1_profile: Bump::default(),
            r0: default_r0(),
            t_max,
            cfl: default_cfl(),
            dr: default_dr(),
            blowup_threshold: default_threshold(),
            dt_floor: default_dt_floor(),
            source: true,
            confirm: true,
            log_dt: default_log_dt(),
            history_dt: None,
            margin: default_margin(),
            support_tol: default_support_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.metric.validate()?;
        let big_r = self.metric.r_inner;
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.p > 1.0) {
            return bad(format!("p must exceed 1, got {}", self.p));
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("ε must be nonnegative, got {}", self.epsilon));
        }
        if !(self.r0 > big_r) {
            return bad(format!("R0 = {} must exceed R = {big_r}", self.r0));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return bad(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if !(self.dr > 0.0 && self.t_max > 0.0 && self.log_dt > 0.0 && self.dt_floor > 0.0) {
            return bad("dr, t_max, log_dt and dt_floor must be positive".into());
        }
        if !(self.support_tol > 0.0 && self.support_tol < 1.0) {
            return bad(format!("support_tol must lie in (0, 1), got {}", self.support_tol));
        }
        if self.history_dt.is_some_and(|h| !(h > 0.0)) {
            return bad("history_dt must be positive".into());
        }
        for (name, b) in [("u0", &self.u0_profile), ("u1", &self.u1_profile)] {
            let (c, w) = b.resolve(big_r, self.r0);
            if !(b.amplitude >= 0.0 && b.power >= 1 && w > 0.0 && c - w >= big_r - 1e-12 && c + w <= self.r0 + 1e-12) {
                return bad(format!("{name} bump must be nonnegative with support in [R, R0]"));
            }
        }
        Ok(())
    }

    /// R₁ = ∫_R^{R₀} K.
    pub fn r1(&self) -> f64 {
        self.metric.k_integral(self.metric.r_inner, self.r0)
    }

    /// Outer radius of the computational grid: the crude cone bound at t_max
    /// plus `margin`.
    pub fn outer_radius(&self) -> f64 {
        cone_radius(&self.metric, self.t_max, self.r1()).crude_bound + self.margin
    }

    pub fn u0(&self, r: f64) -> f64 {
        self.epsilon * self.u0_profile.eval(r, self.metric.r_inner, self.r0)
    }

    pub fn u1(&self, r: f64) -> f64 {
        self.epsilon * self.u1_profile.eval(r, self.metric.r_inner, self.r0)
    }

    pub fn base_dt(&self) -> f64 {
        self.cfl * self.metric.delta0 * self.dr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub t: f64,
    pub r_inner: f64,
    pub dr: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Last node where |u| + |v| > 0.
    pub support_index: usize,
}

impl WaveState {
    pub fn radius(&self, i: usize) -> f64 {
        self.r_inner + i as f64 * self.dr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t")]
pub enum Outcome {
    BlewUp(f64),
    Survived(f64),
    StepCollapse(f64),
}

impl Outcome {
    pub fn time(&self) -> f64 {
        match *self {
            Outcome::BlewUp(t) | Outcome::Survived(t) | Outcome::StepCollapse(t) => t,
        }
    }

    pub fn blew_up(&self) -> bool {
        matches!(self, Outcome::BlewUp(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::BlewUp(_) => "blew_up",
            Outcome::Survived(_) => "survived",
            Outcome::StepCollapse(_) => "step_collapse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    /// ½∫(u_t² + K⁻²u_r²) dV.
    pub energy: f64,
    /// ∫₀^t∫|u|^p u_t dV ds, evaluated through the antiderivative of |u|^p.
    pub work: f64,
    pub residual: f64,
    pub max_u: f64,
    pub support_radius: f64,
    pub cone_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    /// u on nodes 0..len (trailing zeros dropped).
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confirmation {
    pub t_refined: f64,
    pub rel_diff: f64,
    pub confirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub outcome: Outcome,
    pub steps: u64,
    pub dr: f64,
    pub dt0: f64,
    pub r1: f64,
    pub energy_log: Vec<EnergySample>,
    pub confirmation: Option<Confirmation>,
    #[serde(skip)]
    pub history: Vec<Snapshot>,
    #[serde(skip)]
    pub final_state: Option<WaveState>,
}

impl SimResult {
    /// (t, max|u|) pairs.
    pub fn max_u_log(&self) -> Vec<(f64, f64)> {
        self.energy_log.iter().map(|s| (s.t, s.max_u)).collect()
    }

    /// Largest |E(t) − E(0)|/E(0) in the log.
    pub fn energy_drift(&self) -> f64 {
        let e0 = match self.energy_log.first() {
            Some(s) if s.energy > 0.0 => s.energy,
            _ => return 0.0,
        };
        self.energy_log
            .iter()
            .map(|s| (s.energy - e0).abs() / e0)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    pub fn energy_csv(&self) -> String {
        let mut out = String::from("t,energy,work,residual,max_u,support_radius,cone_radius\n");
        for s in &self.energy_log {
            let _ = writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                s.t, s.energy, s.work, s.residual, s.max_u, s.support_radius, s.cone_radius
            );
        }
        out
    }
}

/// Precomputed coefficients of the semi-discrete operator on a uniform grid.
struct Operator {
    r: Vec<f64>,
    /// Flux coefficient r/(K·dr) at i + ½.
    a: Vec<f64>,
    /// Volume weight K·r·dr.
    w: Vec<f64>,
    inv_w: Vec<f64>,
    /// ∫_R^{r_i} K.
    dist: Vec<f64>,
}

impl Operator {
    fn new(metric: &MetricSpec, dr: f64, r_outer: f64) -> Self {
        let big_r = metric.r_inner;
        let n = ((r_outer - big_r) / dr).ceil() as usize + 1;
        let r: Vec<f64> = (0..n).map(|i| big_r + i as f64 * dr).collect();
        let a = r[..n - 1]
            .iter()
            .map(|&ri| {
                let m = ri + 0.5 * dr;
                m / (metric.eval_k(m) * dr)
            })
            .collect();
        let w: Vec<f64> = r.iter().map(|&ri| metric.eval_k(ri) * ri * dr).collect();
        let inv_w = w.iter().map(|x| 1.0 / x).collect();
        let dist = metric.cumulative_k_integral(&r);
        Self { r, a, w, inv_w, dist }
    }

    fn len(&self) -> usize {
        self.r.len()
    }

    /// Radius where ∫_R^r K reaches `d`, by linear interpolation in the table.
    fn radius_at_distance(&self, d: f64) -> f64 {
        let k = self.dist.partition_point(|&x| x < d);
        if k == 0 {
            return self.r[0];
        }
        if k >= self.dist.len() {
            return f64::INFINITY;
        }
        let (d0, d1) = (self.dist[k - 1], self.dist[k]);
        self.r[k - 1] + (d - d0) / (d1 - d0) * (self.r[k] - self.r[k - 1])
    }
}

fn source_term(u: f64, p: f64) -> f64 {
    if p == 2.0 {
        u * u
    } else {
        u.abs().powf(p)
    }
}

/// ∫₀^u |s|^p ds.
fn source_antiderivative(u: f64, p: f64) -> f64 {
    u * u.abs().powf(p) / (p + 1.0)
}

/// Width of the three-point stencil in units of dr.
pub const STENCIL_WIDTH: f64 = 2.0;

/// How far ahead of the exact cone the leapfrog front reaches at relative
/// level `tol`: the low-wavenumber dispersion `ω ≈ k − (1−c²)dr²k³/24` gives
/// an Airy precursor of width `(t·dr²/8)^{1/3}` (taking c → 0), decaying like
/// `exp(−(2/3)x^{3/2})`.
pub fn dispersive_lead(t: f64, dr: f64, tol: f64) -> f64 {
    (t * dr * dr / 8.0).cbrt() * (1.5 * (1.0 / tol).ln()).powf(2.0 / 3.0)
}

/// Step for the current amplitude: `dt0/2^k` with the smallest k that keeps
/// `dt·√(p·m^{p−1})` at most [`STIFF_STEP`].
pub fn adaptive_dt(dt0: f64, p: f64, max_u: f64, source: bool) -> f64 {
    let mut dt = dt0;
    if source && max_u > 0.0 {
        let limit = STIFF_STEP / (p * max_u.powf(p - 1.0)).sqrt();
        while dt > limit {
            dt *= 0.5;
        }
    }
    dt
}

fn accel(op: &Operator, u: &[f64], acc: &mut [f64], hi: usize, p: f64, source: bool) {
    for i in 1..=hi {
        let lap = (op.a[i] * (u[i + 1] - u[i]) - op.a[i - 1] * (u[i] - u[i - 1])) * op.inv_w[i];
        acc[i] = if source { lap + source_term(u[i], p) } else { lap };
    }
}

struct Diagnostics {
    energy: f64,
    potential: f64,
    max_u: f64,
    support_radius: f64,
}

fn diagnostics(op: &Operator, u: &[f64], v: &[f64], hi: usize, p: f64, support_tol: f64) -> Diagnostics {
    let two_pi = 2.0 * std::f64::consts::PI;
    let (mut kin, mut grad, mut pot, mut max_u, mut sup) = (0.0, 0.0, 0.0, 0.0f64, 0.0f64);
    for i in 0..=hi {
        kin += op.w[i] * v[i] * v[i];
        let du = u[i + 1] - u[i];
        grad += op.a[i] * du * du;
        pot += op.w[i] * source_antiderivative(u[i], p);
        max_u = max_u.max(u[i].abs());
        sup = sup.max(u[i].abs() + v[i].abs());
    }
    let cut = support_tol * sup;
    let support = (0..=hi)
        .rev()
        .find(|&i| u[i].abs() + v[i].abs() > cut)
        .unwrap_or(0);
    Diagnostics {
        energy: 0.5 * two_pi * (kin + grad),
        potential: two_pi * pot,
        max_u,
        support_radius: op.r[support],
    }
}

/// Runs the configured problem; on blow-up, optionally confirms the time with
/// a halved-dt run.
pub fn simulate(cfg: &WaveConfig) -> Result<SimResult> {
    cfg.validate()?;
    let mut result = run(cfg)?;
    if let (Outcome::BlewUp(t), true) = (result.outcome, cfg.confirm) {
        let refined = WaveConfig {
            cfl: 0.5 * cfg.cfl,
            confirm: false,
            history_dt: None,
            ..cfg.clone()
        };
        let t2 = run(&refined)?.outcome;
        let t_refined = t2.time();
        let rel_diff = (t - t_refined).abs() / t_refined;
        result.confirmation = Some(Confirmation {
            t_refined,
            rel_diff,
            confirmed: t2.blew_up() && rel_diff <= CONFIRM_TOL,
        });
    }
    Ok(result)
}

fn run(cfg: &WaveConfig) -> Result<SimResult> {
    let op = Operator::new(&cfg.metric, cfg.dr, cfg.outer_radius());
    let n = op.len();
    let p = cfg.p;
    let r1 = cfg.r1();
    let mut u: Vec<f64> = op.r.iter().map(|&r| cfg.u0(r)).collect();
    let mut v: Vec<f64> = op.r.iter().map(|&r| cfg.u1(r)).collect();
    u[0] = 0.0;
    v[0] = 0.0;
    u[n - 1] = 0.0;
    v[n - 1] = 0.0;
    let mut acc = vec![0.0; n];
    let mut hi = (0..n).rev().find(|&i| u[i] != 0.0 || v[i] != 0.0).unwrap_or(0);
    let dt0 = cfg.base_dt();

    let d0 = diagnostics(&op, &u, &v, (hi + 1).min(n - 2), p, cfg.support_tol);
    let (e0, g0) = (d0.energy, d0.potential);
    let mut log = vec![EnergySample {
        t: 0.0,
        energy: e0,
        work: 0.0,
        residual: 0.0,
        max_u: d0.max_u,
        support_radius: d0.support_radius,
        cone_radius: op.radius_at_distance(r1),
    }];
    let mut history = Vec::new();
    let keep_history = cfg.history_dt.is_some();
    let trim = |u: &[f64], hi: usize| u[..=(hi + 1).min(u.len() - 1)].to_vec();
    if keep_history {
        history.push(Snapshot { t: 0.0, u: trim(&u, hi) });
    }
    let mut next_hist = cfg.history_dt.unwrap_or(f64::INFINITY);
    let mut next_log = cfg.log_dt;

    accel(&op, &u, &mut acc, (hi + 1).min(n - 2), p, cfg.source);
    let mut max_u = d0.max_u;
    let mut t = 0.0;
    let mut steps = 0u64;
    let outcome = loop {
        if max_u >= cfg.blowup_threshold {
            break Outcome::BlewUp(t);
        }
        if t >= cfg.t_max {
            break Outcome::Survived(t);
        }
        let mut dt = adaptive_dt(dt0, p, max_u, cfg.source);
        if dt < cfg.dt_floor {
            break Outcome::StepCollapse(t);
        }
        let last = cfg.t_max - t <= dt;
        if last {
            dt = cfg.t_max - t;
        }
        let active = (hi + 2).min(n - 2);
        let half = 0.5 * dt;
        for i in 1..=active {
            v[i] += half * acc[i];
            u[i] += dt * v[i];
        }
        accel(&op, &u, &mut acc, active, p, cfg.source);
        max_u = 0.0;
        for i in 1..=active {
            v[i] += half * acc[i];
            if u[i].abs() < FLUSH {
                u[i] = 0.0;
            }
            if v[i].abs() < FLUSH {
                v[i] = 0.0;
            }
            max_u = max_u.max(u[i].abs());
        }
        hi = (1..=active).rev().find(|&i| u[i] != 0.0 || v[i] != 0.0).unwrap_or(0);
        t = if last { cfg.t_max } else { t + dt };
        steps += 1;
        if !max_u.is_finite() {
            break Outcome::BlewUp(t);
        }

        if keep_history && t >= next_hist {
            history.push(Snapshot { t, u: trim(&u, hi) });
            while next_hist <= t {
                next_hist += cfg.history_dt.unwrap();
            }
        }
        if t >= next_log || last || max_u >= cfg.blowup_threshold {
            let d = diagnostics(&op, &u, &v, (hi + 1).min(n - 2), p, cfg.support_tol);
            let work = d.potential - g0;
            let residual = d.energy - e0 - work;
            let scale = e0.max(d.energy).max(work.abs()).max(f64::MIN_POSITIVE);
            let cone = op.radius_at_distance(t + r1);
            log.push(EnergySample {
                t,
                energy: d.energy,
                work,
                residual,
                max_u: d.max_u,
                support_radius: d.support_radius,
                cone_radius: cone,
            });
            let allowed = 2.0 * STENCIL_WIDTH * cfg.dr + dispersive_lead(t, cfg.dr, cfg.support_tol);
            if d.support_radius > cone + allowed {
                return Err(Error::ConeViolation(format!(
                    "support radius {} exceeds cone {cone} by more than {allowed} at t = {t}",
                    d.support_radius
                )));
            }
            if max_u < cfg.blowup_threshold && residual.abs() > ENERGY_RESIDUAL_LIMIT * scale {
                return Err(Error::UnstableScheme(format!(
                    "energy residual {residual:.3e} against scale {scale:.3e} at t = {t}"
                )));
            }
            while next_log <= t {
                next_log += cfg.log_dt;
            }
        }
    };
    Ok(SimResult {
        outcome,
        steps,
        dr: cfg.dr,
        dt0,
        r1,
        energy_log: log,
        confirmation: None,
        history,
        final_state: Some(WaveState {
            t,
            r_inner: cfg.metric.r_inner,
            dr: cfg.dr,
            u,
            v,
            support_index: hi,
        }),
    })
}

/// Blow-up time of `v'' = v^p`, `v(0) = A`, `v'(0) = B`, from the first
/// integral `T = ∫_A^∞ ds / √(B² + 2(s^{p+1} − A^{p+1})/(p+1))`.
pub fn ode_blowup_oracle(p: f64, a: f64, b: f64) -> Result<f64> {
    if !(p > 1.0 && a >= 0.0 && b >= 0.0 && (a > 0.0 || b > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "need p > 1, A, B ≥ 0 and not both zero (p = {p}, A = {a}, B = {b})"
        )));
    }
    let q = p + 1.0;
    // s = A + w² removes the inverse square-root singularity at s = A when B = 0.
    let f = |w: f64| {
        let w2 = w * w;
        let gap = if a > 0.0 {
            a.powf(q) * (q * (w2 / a).ln_1p()).exp_m1()
        } else {
            w2.powf(q)
        };
        let denom = (b * b + 2.0 * gap / q).sqrt();
        if w == 0.0 {
            if b > 0.0 {
                0.0
            } else {
                2.0 / (2.0 * a.powf(p)).sqrt()
            }
        } else {
            2.0 * w / denom
        }
    };
    Ok(integrate_to_infinity(f, 0.0, QuadOptions::tol(1e-13, 1e-12))?.value)
}

/// The detector applied to the spatially frozen problem `v'' = |v|^p`: same
/// leapfrog, adaptive step and threshold as [`simulate`].
pub fn frozen_blowup_time(p: f64, a: f64, b: f64, dt0: f64, threshold: f64) -> f64 {
    let (mut v, mut w, mut t) = (a, b, 0.0);
    let mut acc = source_term(v, p);
    while v.abs() < threshold && v.is_finite() {
        let dt = adaptive_dt(dt0, p, v.abs(), true);
        w += 0.5 * dt * acc;
        v += dt * w;
        acc = source_term(v, p);
        w += 0.5 * dt * acc;
        t += dt;
    }
    t
}

/// Time still left when `v'' = v^p` crosses `threshold` from rest-dominated
/// growth, i.e. the detector's lag `∫_m^∞ ds/√(2s^{p+1}/(p+1))`.
pub fn threshold_lag(p: f64, threshold: f64) -> f64 {
    ((p + 1.0) / 2.0).sqrt() * 2.0 / (p - 1.0) * threshold.powf((1.0 - p) / 2.0)
}

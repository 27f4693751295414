//! ε-sweeps of the wave solver, lifespan scaling fits, and the weighted
//! space-time functionals evaluated on stored solution histories.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bq::BqEvaluator;
use crate::cutoff::{eta, eta_star};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::testfn::Profile;
use crate::wave::{simulate, Outcome, SimResult, WaveConfig};

/// Positive root of (n−1)p² − (n+1)p − 2 = 0.
pub fn critical_exponent(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {n}")));
    }
    let a = (n - 1) as f64;
    let b = (n + 1) as f64;
    // Written to avoid cancellation: p = 4 / (√(b² + 8a) − b) = (b + √(b²+8a)) / (2a).
    Ok((b + (b * b + 8.0 * a).sqrt()) / (2.0 * a))
}

/// γ(2, p) = 2 + 3p − p².
pub fn gamma2(p: f64) -> f64 {
    2.0 + 3.0 * p - p * p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// T = C ε^a.
    Power,
    /// T = C (ε^{−1} ln ε^{−1})^a.
    PowerLog,
    /// ln T = C ε^{−a}.
    ExpPower,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Model::Power => "power",
            Model::PowerLog => "power_log",
            Model::ExpPower => "exp_power",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub model: Model,
    /// Slope of the linearized model: a for power and power_log, −p(p−1)
    /// for exp_power (slope of ln ln T against ln ε).
    pub slope: f64,
}

/// Tolerance for treating p as the critical exponent.
pub const CRITICAL_TOL: f64 = 1e-9;

/// Upper-bound lifespan law for p ∈ (1, p_c(2)].
pub fn predicted_exponent(p: f64) -> Result<Prediction> {
    let pc = critical_exponent(2)?;
    if !(p > 1.0) || p > pc + CRITICAL_TOL {
        return Err(Error::OutOfRange(format!("p = {p} outside (1, {pc:.9}]")));
    }
    Ok(if (p - pc).abs() <= CRITICAL_TOL {
        Prediction {
            model: Model::ExpPower,
            slope: -p * (p - 1.0),
        }
    } else if p < 2.0 {
        Prediction {
            model: Model::PowerLog,
            slope: (p - 1.0) / (3.0 - p),
        }
    } else {
        Prediction {
            model: Model::Power,
            slope: -2.0 * p * (p - 1.0) / gamma2(p),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSettings {
    pub threshold: f64,
    pub cfl: f64,
    pub dr: f64,
    pub confirm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanRecord {
    pub epsilon: f64,
    pub p: f64,
    /// Detector time (blow-up time, or the time the run stopped).
    pub t_num: f64,
    pub outcome: Option<Outcome>,
    /// Relative difference to the halved-dt run, when confirmed.
    pub confirmation: Option<f64>,
    pub grid_fingerprint: String,
    pub detector: DetectorSettings,
    /// Set when the run itself failed.
    pub error: Option<String>,
}

impl LifespanRecord {
    /// Only confirmed blow-ups enter fits.
    pub fn usable(&self) -> bool {
        matches!(self.outcome, Some(Outcome::BlewUp(_))) && self.error.is_none()
    }
}

/// Fingerprint of the spatial discretization of `cfg`.
pub fn grid_fingerprint(cfg: &WaveConfig) -> String {
    let text = format!("{}|{:e}|{:e}", cfg.metric.hash(), cfg.dr, cfg.outer_radius());
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

fn record(cfg: &WaveConfig, res: Result<SimResult>) -> LifespanRecord {
    let detector = DetectorSettings {
        threshold: cfg.blowup_threshold,
        cfl: cfg.cfl,
        dr: cfg.dr,
        confirm: cfg.confirm,
    };
    let base = LifespanRecord {
        epsilon: cfg.epsilon,
        p: cfg.p,
        t_num: f64::NAN,
        outcome: None,
        confirmation: None,
        grid_fingerprint: grid_fingerprint(cfg),
        detector,
        error: None,
    };
    match res {
        Ok(r) => {
            let unconfirmed = r.confirmation.is_some_and(|c| !c.confirmed);
            LifespanRecord {
                t_num: r.outcome.time(),
                outcome: Some(r.outcome),
                confirmation: r.confirmation.map(|c| c.rel_diff),
                error: unconfirmed.then(|| "blow-up time not confirmed under dt halving".to_string()),
                ..base
            }
        }
        Err(e) => LifespanRecord {
            error: Some(e.to_string()),
            ..base
        },
    }
}

/// Runs `base` once per ε (in parallel). Per-run failures are recorded, not
/// propagated. `epsilons` must be sorted in decreasing order.
pub fn sweep(base: &WaveConfig, epsilons: &[f64]) -> Result<Vec<LifespanRecord>> {
    if epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("ε list must be strictly decreasing".into()));
    }
    Ok(epsilons
        .par_iter()
        .map(|&eps| {
            let cfg = WaveConfig {
                epsilon: eps,
                ..base.clone()
            };
            record(&cfg, simulate(&cfg))
        })
        .collect())
}

/// Relative jitter tolerated when checking that T_num decreases with ε.
pub const MONOTONE_JITTER: f64 = 0.02;

/// True when the usable records' blow-up times increase as ε decreases.
pub fn is_monotone(records: &[LifespanRecord]) -> bool {
    let mut used: Vec<&LifespanRecord> = records.iter().filter(|r| r.usable()).collect();
    used.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
    used.windows(2).all(|w| w[1].t_num >= w[0].t_num * (1.0 - MONOTONE_JITTER))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub slope: f64,
    pub intercept: f64,
    /// exp(intercept): the constant of the fitted law.
    pub constant: f64,
    pub rms: f64,
    pub points: usize,
    /// Predicted slope for this p when the model matches the predicted law.
    pub predicted: Option<f64>,
    /// slope/predicted inside [0.75, 1.35].
    pub agreement: Option<bool>,
    /// C with the slope pinned to the prediction (power model only):
    /// exp(mean(ln T − a ln ε)).
    pub envelope_constant: Option<f64>,
    /// max T_num / (C ε^a) for that pinned C.
    pub envelope_max_ratio: Option<f64>,
}

/// Accepted range of fitted/predicted slope.
pub const AGREEMENT_WINDOW: (f64, f64) = (0.75, 1.35);

pub const MIN_FIT_POINTS: usize = 5;

fn linearize(model: Model, eps: f64, t: f64) -> Option<(f64, f64)> {
    match model {
        Model::Power => Some((eps.ln(), t.ln())),
        Model::PowerLog => {
            let inv = 1.0 / eps;
            (inv.ln() > 0.0).then(|| ((inv * inv.ln()).ln(), t.ln()))
        }
        Model::ExpPower => (t > 1.0).then(|| (eps.ln(), t.ln().ln())),
    }
}

/// Ordinary least squares y = a x + b. Returns (a, b, rms).
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rms = (x.iter().zip(y).map(|(u, v)| (v - a * u - b).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// Fits `model` to the usable records (all must share p).
pub fn fit_lifespan(records: &[LifespanRecord], model: Model) -> Result<FitResult> {
    let used: Vec<&LifespanRecord> = records.iter().filter(|r| r.usable()).collect();
    if let Some(first) = used.first() {
        if used.iter().any(|r| r.p != first.p) {
            return Err(Error::InvalidInput("records mix different p".into()));
        }
    }
    let pts: Vec<(f64, f64)> = used.iter().filter_map(|r| linearize(model, r.epsilon, r.t_num)).collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} usable points for the {model} model, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, intercept, rms) = least_squares(&x, &y);
    let prediction = predicted_exponent(used[0].p).ok().filter(|pr| pr.model == model);
    let predicted = prediction.map(|pr| pr.slope);
    let agreement = predicted.map(|a| {
        let ratio = slope / a;
        ratio >= AGREEMENT_WINDOW.0 && ratio <= AGREEMENT_WINDOW.1
    });
    let (envelope_constant, envelope_max_ratio) = match (model, predicted) {
        (Model::Power, Some(a)) => {
            let logs: Vec<f64> = used.iter().map(|r| r.t_num.ln() - a * r.epsilon.ln()).collect();
            let c = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
            let max = used
                .iter()
                .map(|r| r.t_num / (c * r.epsilon.powf(a)))
                .fold(0.0, f64::max);
            (Some(c), Some(max))
        }
        _ => (None, None),
    };
    Ok(FitResult {
        model,
        slope,
        intercept,
        constant: intercept.exp(),
        rms,
        points: pts.len(),
        predicted,
        agreement,
        envelope_constant,
        envelope_max_ratio,
    })
}

/// CSV of a sweep: epsilon, T_num, outcome.
pub fn records_csv(records: &[LifespanRecord]) -> String {
    let mut out = String::from("epsilon,T_num,outcome\n");
    for r in records {
        let label = match (&r.outcome, &r.error) {
            (Some(o), None) => o.label(),
            (Some(_), Some(_)) => "unconfirmed",
            (None, _) => "error",
        };
        out.push_str(&format!("{:.17e},{:.17e},{label}\n", r.epsilon, r.t_num));
    }
    out
}

/// T bound exp(K₃ δ^{−(p₁−1)/(p₁−p₂+1)}) of the ODE comparison lemma.
pub fn ode_lemma_bound(delta: f64, k1: f64, k2: f64, k3: f64, p1: f64, p2: f64) -> Result<f64> {
    if !(p2 < p1 + 1.0) {
        return Err(Error::ParameterViolation(format!("need p₂ < p₁ + 1 (p₁ = {p1}, p₂ = {p2})")));
    }
    if !(p1 > 1.0 && delta > 0.0 && k1 > 0.0 && k2 > 0.0 && k3 > 0.0) {
        return Err(Error::ParameterViolation(
            "need p₁ > 1 and positive δ, K₁, K₂, K₃".into(),
        ));
    }
    Ok((k3 * delta.powf(-(p1 - 1.0) / (p1 - p2 + 1.0))).exp())
}

/// Critical envelope exp(K ε^{−p(p−1)}), i.e. the lemma bound with
/// p₁ = p₂ = p and δ = ε^p.
pub fn critical_envelope(epsilon: f64, p: f64, k: f64) -> Result<f64> {
    ode_lemma_bound(epsilon.powf(p), 1.0, 1.0, k, p, p)
}

/// Reference curve a(ε) solving a²ε² ln(1 + a) = 1.
pub fn log_reference_curve(epsilon: f64) -> f64 {
    let g = |a: f64| a * a * epsilon * epsilon * (1.0 + a).ln() - 1.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    pub t: f64,
    /// F(T) = ∫₀^T∫ |u|^p η_T^{2p′} φ₀ dV dt.
    pub f: f64,
    /// F(T) / (T^{3−2p′} ln T).
    pub upper_ratio: f64,
    /// F*(T) with η_T^* in place of η_T.
    pub f_star: f64,
    /// F*(T) / (ε^p T^{2−p/2} ln T).
    pub lower_ratio: f64,
    /// ∫₀^T∫ |u|^p b_q (η_T^*)^{2p′} dV dt, when b_q is supplied.
    pub m_dy: Option<f64>,
    /// m_dy / ε^p.
    pub m_dy_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub p: f64,
    pub epsilon: f64,
    /// L = ε ∫ u₁ φ₀ dV.
    pub l: f64,
    pub samples: Vec<FunctionalSample>,
    /// max/min of `upper_ratio` over the samples.
    pub upper_spread: f64,
}

/// ∫ f(r) dV over the radial nodes r_i = R + i·dr (trapezoid, with the
/// 2π angular factor).
fn volume_integral(metric: &crate::metric::MetricSpec, r_inner: f64, dr: f64, f: impl Fn(usize, f64) -> f64, n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let r = r_inner + i as f64 * dr;
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * f(i, r) * metric.eval_k(r) * r;
    }
    2.0 * std::f64::consts::PI * dr * acc
}

/// Weighted functionals of a stored history at the times `t_values`.
///
/// Time integrals use the trapezoid rule over the snapshots; the cutoff
/// vanishes at the upper limit, so the last partial interval closes at zero.
pub fn functional_monitor(
    result: &SimResult,
    cfg: &WaveConfig,
    phi0: &dyn Profile,
    bq: Option<&BqEvaluator>,
    t_values: &[f64],
) -> Result<FunctionalReport> {
    let hist = &result.history;
    let t_top = t_values.iter().copied().fold(0.0, f64::max);
    if hist.len() < 2 || hist[hist.len() - 1].t < t_top {
        return Err(Error::HistoryMissing(format!(
            "{} snapshots do not cover t = {t_top}",
            hist.len()
        )));
    }
    let p = cfg.p;
    let pp = p / (p - 1.0);
    let metric = &cfg.metric;
    let big_r = metric.r_inner;
    let dr = result.dr;
    let phi_nodes: Vec<f64> = {
        let n = hist.iter().map(|s| s.u.len()).max().unwrap_or(0);
        (0..n).map(|i| phi0.value(big_r + i as f64 * dr)).collect()
    };
    // Spatial integrals per snapshot.
    let base: Vec<f64> = hist
        .iter()
        .map(|s| volume_integral(metric, big_r, dr, |i, _| s.u[i].abs().powf(p) * phi_nodes[i], s.u.len()))
        .collect();

    let time_integral = |weights: &dyn Fn(f64) -> f64, spatial: &dyn Fn(usize) -> f64, upper: f64| -> f64 {
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (k, s) in hist.iter().enumerate() {
            if s.t > upper {
                break;
            }
            let val = weights(s.t) * spatial(k);
            if let Some((tp, vp)) = prev {
                acc += 0.5 * (s.t - tp) * (val + vp);
            }
            prev = Some((s.t, val));
        }
        if let Some((tp, vp)) = prev {
            acc += 0.5 * (upper - tp) * vp;
        }
        acc
    };

    let mut samples = Vec::with_capacity(t_values.len());
    for &t in t_values {
        if !(t > 1.0) {
            return Err(Error::InvalidInput(format!("functional times must exceed 1, got {t}")));
        }
        let f = time_integral(&|s| eta(s / t).powf(2.0 * pp), &|k| base[k], t);
        let f_star = time_integral(&|s| eta_star(s / t).powf(2.0 * pp), &|k| base[k], t);
        let (m_dy, m_dy_ratio) = match bq {
            Some(ev) => {
                let spatial = |k: usize| -> f64 {
                    let s = &hist[k];
                    if eta_star(s.t / t) == 0.0 {
                        return 0.0;
                    }
                    volume_integral(
                        metric,
                        big_r,
                        dr,
                        |i, r| {
                            let u = s.u[i].abs();
                            if u == 0.0 {
                                0.0
                            } else {
                                u.powf(p) * ev.value(0.0, s.t, r).unwrap_or(f64::NAN)
                            }
                        },
                        s.u.len(),
                    )
                };
                let v = time_integral(&|s| eta_star(s / t).powf(2.0 * pp), &spatial, t);
                (Some(v), Some(v / cfg.epsilon.powf(p)))
            }
            None => (None, None),
        };
        samples.push(FunctionalSample {
            t,
            f,
            upper_ratio: f / (t.powf(3.0 - 2.0 * pp) * t.ln()),
            f_star,
            lower_ratio: f_star / (cfg.epsilon.powf(p) * t.powf(2.0 - 0.5 * p) * t.ln()),
            m_dy,
            m_dy_ratio,
        });
    }
    if samples.iter().any(|s| s.m_dy.is_some_and(|v| !v.is_finite())) {
        return Err(Error::InvalidInput("b_q evaluation failed inside the history".into()));
    }
    let ratios: Vec<f64> = samples.iter().map(|s| s.upper_ratio).collect();
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FunctionalReport {
        p,
        epsilon: cfg.epsilon,
        l: data_pairing(cfg, phi0)?,
        samples,
        upper_spread: max / min,
    })
}

/// L = ∫ u₁ φ₀ dV (u₁ already carries ε).
pub fn data_pairing(cfg: &WaveConfig, phi0: &dyn Profile) -> Result<f64> {
    let big_r = cfg.metric.r_inner;
    let (c, w) = cfg.u1_profile.resolve(big_r, cfg.r0);
    if cfg.epsilon == 0.0 || cfg.u1_profile.amplitude == 0.0 {
        return Ok(0.0);
    }
    let q = integrate(
        |r| cfg.u1(r) * phi0.value(r) * cfg.metric.eval_k(r) * r,
        (c - w).max(big_r),
        c + w,
        QuadOptions::tol(0.0, 1e-13),
    )?;
    Ok(2.0 * std::f64::consts::PI * q.value)
}

/// Dyadic fractions T/8, T/4, T/2 of a blow-up time.
pub fn dyadic_fractions(t_num: f64) -> Vec<f64> {
    vec![t_num / 8.0, t_num / 4.0, t_num / 2.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricSpec;

    #[test]
    fn critical_exponents() {
        let p2 = critical_exponent(2).unwrap();
        assert!((p2 - (3.0 + 17f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((p2 * p2 - 3.0 * p2 - 2.0).abs() < 1e-12);
        let p3 = critical_exponent(3).unwrap();
        assert!((p3 - (1.0 + 2f64.sqrt())).abs() < 1e-14);
        assert!(critical_exponent(1).is_err());
    }

    #[test]
    fn predicted_laws() {
        let at = |p: f64| predicted_exponent(p).unwrap();
        assert_eq!(at(2.0).model, Model::Power);
        assert!((at(2.0).slope + 1.0).abs() < 1e-15);
        assert!((at(3.0).slope + 6.0).abs() < 1e-14);
        assert_eq!(at(1.5).model, Model::PowerLog);
        assert!((at(1.5).slope - 1.0 / 3.0).abs() < 1e-15);
        let pc = critical_exponent(2).unwrap();
        assert_eq!(at(pc).model, Model::ExpPower);
        assert!(matches!(predicted_exponent(3.7), Err(Error::OutOfRange(_))));
        assert!(matches!(predicted_exponent(1.0), Err(Error::OutOfRange(_))));
    }

    fn synthetic(eps: &[f64], t: impl Fn(f64) -> f64, p: f64) -> Vec<LifespanRecord> {
        eps.iter()
            .map(|&e| LifespanRecord {
                epsilon: e,
                p,
                t_num: t(e),
                outcome: Some(Outcome::BlewUp(t(e))),
                confirmation: Some(0.0),
                grid_fingerprint: "x".into(),
                detector: DetectorSettings {
                    threshold: 1e6,
                    cfl: 0.5,
                    dr: 0.05,
                    confirm: true,
                },
                error: None,
            })
            .collect()
    }

    #[test]
    fn planted_exponents_are_recovered() {
        let eps = [0.4, 0.3, 0.2, 0.1, 0.05, 0.02];
        let fit = fit_lifespan(&synthetic(&eps, |e| 3.0 / e, 2.0), Model::Power).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12 && fit.rms < 1e-12);
        assert!((fit.constant - 3.0).abs() < 1e-11);
        assert_eq!(fit.agreement, Some(true));
        assert!((fit.envelope_max_ratio.unwrap() - 1.0).abs() < 1e-12);

        let pl = |e: f64| ((1.0 / e) * (1.0 / e).ln()).powf(1.0 / 3.0);
        let fit = fit_lifespan(&synthetic(&eps, pl, 1.5), Model::PowerLog).unwrap();
        assert!((fit.slope - 1.0 / 3.0).abs() < 1e-10);
        assert_eq!(fit.agreement, Some(true));

        let pc = critical_exponent(2).unwrap();
        let ex = |e: f64| (0.5 * e.powf(-pc * (pc - 1.0))).exp();
        let eps = [0.9, 0.85, 0.8, 0.75, 0.7];
        let fit = fit_lifespan(&synthetic(&eps, ex, pc), Model::ExpPower).unwrap();
        assert!((fit.slope + pc * (pc - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn censored_records_are_excluded() {
        let eps = [0.4, 0.3, 0.2, 0.1, 0.05];
        let mut recs = synthetic(&eps, |e| 3.0 / e, 2.0);
        recs[4].outcome = Some(Outcome::Survived(50.0));
        assert!(matches!(fit_lifespan(&recs, Model::Power), Err(Error::InsufficientData(_))));
        assert!(is_monotone(&recs));
        recs[1].t_num = 100.0;
        recs[1].outcome = Some(Outcome::BlewUp(100.0));
        assert!(!is_monotone(&recs));
    }

    #[test]
    fn lemma_bound() {
        let p = 2.5;
        let (eps, k) = (0.3f64, 0.7);
        let b = ode_lemma_bound(eps.powf(p), 1.0, 1.0, k, p, p).unwrap();
        assert!((b.ln() - k * eps.powf(-p * (p - 1.0))).abs() < 1e-12 * b.ln());
        assert!(matches!(ode_lemma_bound(0.1, 1.0, 1.0, 1.0, 2.0, 3.0), Err(Error::ParameterViolation(_))));
        assert!(ode_lemma_bound(0.2, 1.0, 1.0, 1.0, 2.0, 1.5).unwrap() < ode_lemma_bound(0.1, 1.0, 1.0, 1.0, 2.0, 1.5).unwrap());
    }

    #[test]
    fn reference_curve_solves_its_equation() {
        for e in [0.5, 0.1, 0.01] {
            let a = log_reference_curve(e);
            assert!((a * a * e * e * (1.0 + a).ln() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_contracts() {
        let base = WaveConfig::new(MetricSpec::flat(1.0), 2.0, 0.4, 30.0);
        assert!(sweep(&base, &[]).unwrap().is_empty());
        assert!(sweep(&base, &[0.1, 0.2]).is_err());
        let recs = sweep(&base, &[0.4, 0.01]).unwrap();
        assert!(recs[0].usable());
        assert!(matches!(recs[1].outcome, Some(Outcome::Survived(_))));
        assert!(!recs[1].usable());
        let csv = records_csv(&recs);
        assert!(csv.lines().nth(2).unwrap().ends_with(",survived"));
    }

    #[test]
    fn zero_solution_has_zero_functionals() {
        let mut cfg = WaveConfig::new(MetricSpec::flat(1.0), 2.0, 0.0, 8.0);
        cfg.history_dt = Some(0.25);
        let res = simulate(&cfg).unwrap();
        let phi0 = |r: f64| r.ln();
        let rep = functional_monitor(&res, &cfg, &phi0, None, &[2.0, 4.0, 8.0]).unwrap();
        assert_eq!(rep.l, 0.0);
        assert!(rep.samples.iter().all(|s| s.f == 0.0 && s.f_star == 0.0));
        cfg.history_dt = None;
        let res = simulate(&cfg).unwrap();
        assert!(matches!(
            functional_monitor(&res, &cfg, &phi0, None, &[2.0]),
            Err(Error::HistoryMissing(_))
        ));
    }

    #[test]
    fn data_pairing_matches_independent_quadrature() {
        let cfg = WaveConfig::new(MetricSpec::long_range(1.0, 0.1), 2.0, 0.3, 1.0);
        let phi0 = |r: f64| r.ln();
        let l = data_pairing(&cfg, &phi0).unwrap();
        // Composite Simpson with 20000 panels.
        let (c, w) = cfg.u1_profile.resolve(1.0, cfg.r0);
        let (a, b) = (c - w, c + w);
        let n = 20000;
        let h = (b - a) / n as f64;
        let f = |r: f64| cfg.u1(r) * r.ln() * cfg.metric.eval_k(r) * r;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let simpson = 2.0 * std::f64::consts::PI * s * h / 3.0;
        assert!((l - simpson).abs() < 1e-10 * simpson.abs());
    }
}

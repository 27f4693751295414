//! Star-shaped obstacles, the radial straightening map onto the exterior of
//! a disk, Jacobian certificates and the pulled-back flat metric.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::{mu, mu_deriv, C_MU};
use crate::error::{Error, Result};

/// Number of θ samples used when validating R(θ).
pub const BOUNDS_SAMPLES: usize = 4096;
/// Slack allowed on the Jacobian bounds.
pub const JACOBIAN_TOL: f64 = 1e-12;
/// Forward-then-inverse accuracy demanded of the inversion.
pub const ROUND_TRIP_TOL: f64 = 1e-10;

/// Obstacle `{r < R(θ)}` with `R(θ) = a0 + Σ_k (cos[k−1]·cos kθ + sin[k−1]·sin kθ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarObstacle {
    pub a0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    pub delta2: f64,
}

/// Range of R(θ) on the validation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusRange {
    pub min: f64,
    pub max: f64,
    /// Whether `R(θ) ≥ 2δ₂` holds as well. Not required by the map; the
    /// certificate below is what guarantees the Jacobian bound.
    pub lower_margin_ok: bool,
}

impl StarObstacle {
    pub fn circle(radius: f64, delta2: f64) -> Self {
        Self {
            a0: radius,
            cos: vec![],
            sin: vec![],
            delta2,
        }
    }

    /// `R(θ) = δ₂(2.5 + cos 2θ)`.
    pub fn ellipse_like(delta2: f64) -> Self {
        Self {
            a0: 2.5 * delta2,
            cos: vec![0.0, delta2],
            sin: vec![],
            delta2,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn r3(&self) -> f64 {
        self.delta2
    }

    pub fn r4(&self) -> f64 {
        1.0 / self.delta2
    }

    /// R(θ) and R′(θ).
    pub fn radius(&self, theta: f64) -> (f64, f64) {
        let mut r = self.a0;
        let mut dr = 0.0;
        for (k, c) in self.cos.iter().enumerate() {
            let m = (k + 1) as f64;
            let (s, co) = (m * theta).sin_cos();
            r += c * co;
            dr -= c * m * s;
        }
        for (k, c) in self.sin.iter().enumerate() {
            let m = (k + 1) as f64;
            let (s, co) = (m * theta).sin_cos();
            r += c * s;
            dr += c * m * co;
        }
        (r, dr)
    }

    /// Checks `0 < R(θ) ≤ R₄/2` on a dense θ grid. The upper bound keeps the
    /// boundary inside the region where μ = 1.
    pub fn validate(&self) -> Result<RadiusRange> {
        let d = self.delta2;
        if !(d.is_finite() && d > 0.0 && d < 1.0) {
            return Err(Error::ObstacleBoundsViolation(format!("delta2 = {d} must lie in (0, 1)")));
        }
        let coeffs = std::iter::once(&self.a0).chain(&self.cos).chain(&self.sin);
        if coeffs.clone().any(|c| !c.is_finite()) {
            return Err(Error::ObstacleBoundsViolation("non-finite Fourier coefficient".into()));
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..BOUNDS_SAMPLES {
            let (r, _) = self.radius(2.0 * PI * i as f64 / BOUNDS_SAMPLES as f64);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if lo <= 0.0 {
            return Err(Error::ObstacleBoundsViolation(format!("min R(θ) = {lo} is not positive")));
        }
        if hi > 0.5 * self.r4() {
            return Err(Error::ObstacleBoundsViolation(format!("max R(θ) = {hi} exceeds 1/(2δ₂) = {}", 0.5 * self.r4())));
        }
        Ok(RadiusRange {
            min: lo,
            max: hi,
            lower_margin_ok: lo >= 2.0 * d,
        })
    }
}

/// `f(r,θ) = μ(r/R₄)(R₃/R(θ))r + (1 − μ(r/R₄))r`, acting radially.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoMap {
    pub obstacle: StarObstacle,
    pub r3: f64,
    pub r4: f64,
    pub c_mu: f64,
    pub range: RadiusRange,
}

/// f together with its partials at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSample {
    pub f: f64,
    pub f_r: f64,
    pub f_theta: f64,
}

pub fn build_star_map(obs: &StarObstacle) -> Result<DiffeoMap> {
    let range = obs.validate()?;
    Ok(DiffeoMap {
        obstacle: obs.clone(),
        r3: obs.r3(),
        r4: obs.r4(),
        c_mu: C_MU,
        range,
    })
}

impl DiffeoMap {
    pub fn boundary(&self, theta: f64) -> f64 {
        self.obstacle.radius(theta).0
    }

    pub fn eval(&self, r: f64, theta: f64) -> MapSample {
        let s = r / self.r4;
        if s >= 2.0 {
            return MapSample { f: r, f_r: 1.0, f_theta: 0.0 };
        }
        let (big_r, dbig_r) = self.obstacle.radius(theta);
        let a = self.r3 / big_r;
        let (m, dm) = (mu(s), mu_deriv(s));
        MapSample {
            f: m * a * r + (1.0 - m) * r,
            f_r: m * a + (1.0 - m) + dm * s * (a - 1.0),
            f_theta: -m * r * a * dbig_r / big_r,
        }
    }

    /// Admissible range for ∂_r f.
    pub fn jacobian_bounds(&self) -> (f64, f64) {
        (2.0 * self.r3 * self.r3, 1.0 + 2.0 * self.c_mu)
    }

    /// Solves `f(r, θ) = ρ` for r. Exact for ρ ≥ 2R₄.
    pub fn invert(&self, rho: f64, theta: f64) -> Result<f64> {
        if !rho.is_finite() || rho < self.r3 {
            return Err(Error::InversionFailure(format!("image radius {rho} below R₃ = {}", self.r3)));
        }
        if rho >= 2.0 * self.r4 {
            return Ok(rho);
        }
        let (mut lo, mut hi) = (self.boundary(theta), 2.0 * self.r4);
        let mut r = lo + (hi - lo) * (rho - self.r3) / (hi - self.r3);
        for _ in 0..200 {
            let s = self.eval(r, theta);
            let g = s.f - rho;
            if g.abs() <= 1e-15 * rho {
                return Ok(r);
            }
            if g > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let newton = r - g / s.f_r;
            r = if s.f_r > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * hi {
                return Ok(r);
            }
        }
        Err(Error::InversionFailure(format!("no convergence at ρ = {rho}, θ = {theta}")))
    }

    /// CSV with columns `r,theta,f,df_dr,df_dtheta` on an `n_r × n_theta`
    /// grid between the boundary and 2.5R₄.
    pub fn to_csv(&self, n_r: usize, n_theta: usize) -> String {
        let mut out = String::from("r,theta,f,df_dr,df_dtheta\n");
        for j in 0..n_theta {
            let theta = 2.0 * PI * j as f64 / n_theta as f64;
            let r0 = self.boundary(theta);
            for i in 0..n_r {
                let r = r0 + (2.5 * self.r4 - r0) * i as f64 / (n_r - 1).max(1) as f64;
                let s = self.eval(r, theta);
                let _ = writeln!(out, "{r:.17e},{theta:.17e},{:.17e},{:.17e},{:.17e}", s.f, s.f_r, s.f_theta);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianCertificate {
    pub min_df_dr: f64,
    pub max_df_dr: f64,
    /// Minimum of `∂_r f · f / r`.
    pub min_det: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// max_θ |f(R(θ),θ) − R₃|.
    pub boundary_error: f64,
    /// max |∂_r f − 1| + |f − r| over samples with r ≥ 2R₄.
    pub far_identity_error: f64,
    pub samples: usize,
}

/// Samples ∂_r f and the Jacobian determinant on `n_r × n_theta` points with
/// r running from R(θ) to 3R₄.
pub fn jacobian_certificate(map: &DiffeoMap, n_r: usize, n_theta: usize) -> Result<JacobianCertificate> {
    if n_r < 2 || n_theta < 1 {
        return Err(Error::InvalidInput("certificate grid needs n_r ≥ 2 and n_theta ≥ 1".into()));
    }
    let per_theta: Vec<[f64; 5]> = (0..n_theta)
        .into_par_iter()
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n_theta as f64;
            let r0 = map.boundary(theta);
            let mut acc = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, 0.0, 0.0];
            acc[3] = (map.eval(r0, theta).f - map.r3).abs();
            for i in 0..n_r {
                let r = r0 + (3.0 * map.r4 - r0) * i as f64 / (n_r - 1) as f64;
                let s = map.eval(r, theta);
                acc[0] = acc[0].min(s.f_r);
                acc[1] = acc[1].max(s.f_r);
                acc[2] = acc[2].min(s.f_r * s.f / r);
                if r >= 2.0 * map.r4 {
                    acc[4] = acc[4].max((s.f_r - 1.0).abs() + (s.f - r).abs() + s.f_theta.abs());
                }
            }
            acc
        })
        .collect();
    let fold = |k: usize, init: f64, op: fn(f64, f64) -> f64| per_theta.iter().map(|a| a[k]).fold(init, op);
    let (lower_bound, upper_bound) = map.jacobian_bounds();
    let cert = JacobianCertificate {
        min_df_dr: fold(0, f64::INFINITY, f64::min),
        max_df_dr: fold(1, f64::NEG_INFINITY, f64::max),
        min_det: fold(2, f64::INFINITY, f64::min),
        lower_bound,
        upper_bound,
        boundary_error: fold(3, 0.0, f64::max),
        far_identity_error: fold(4, 0.0, f64::max),
        samples: n_r * n_theta,
    };
    if cert.min_df_dr < lower_bound - JACOBIAN_TOL {
        return Err(Error::JacobianViolation(format!("min ∂_r f = {} < {lower_bound}", cert.min_df_dr)));
    }
    if cert.max_df_dr > upper_bound + JACOBIAN_TOL {
        return Err(Error::JacobianViolation(format!("max ∂_r f = {} > {upper_bound}", cert.max_df_dr)));
    }
    if cert.min_det <= 0.0 {
        return Err(Error::JacobianViolation(format!("Jacobian determinant reaches {}", cert.min_det)));
    }
    Ok(cert)
}

/// Pulled-back flat metric at one point `(x, y)` of `{|x| ≥ R₃}`, in
/// Cartesian components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub x: f64,
    pub y: f64,
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub eig_min: f64,
    pub eig_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackReport {
    pub samples: Vec<MetricSample>,
    pub eig_min: f64,
    pub eig_max: f64,
    /// Largest deviation of g̃ from δ over samples with image radius ≥ 2R₄.
    pub far_deviation: f64,
    pub max_round_trip: f64,
    /// Lower bound for a radial factor K derived from the ellipticity.
    pub delta0: f64,
}

/// Flat metric `dr² + r²dθ²` of the physical domain written in the image
/// coordinates (ρ, θ), ρ = f(r, θ), then converted to Cartesian components.
pub fn metric_at(map: &DiffeoMap, rho: f64, theta: f64) -> Result<(MetricSample, f64)> {
    let r = map.invert(rho, theta)?;
    let s = map.eval(r, theta);
    let round_trip = (s.f - rho).abs() / rho;
    let r_rho = 1.0 / s.f_r;
    let r_theta = -s.f_theta / s.f_r;
    // orthonormal polar frame (dρ, ρ dθ)
    let a = r_rho * r_rho;
    let b = r_rho * r_theta / rho;
    let c = (r_theta * r_theta + r * r) / (rho * rho);
    let (sn, cs) = theta.sin_cos();
    let g11 = a * cs * cs - 2.0 * b * cs * sn + c * sn * sn;
    let g12 = (a - c) * cs * sn + b * (cs * cs - sn * sn);
    let g22 = a * sn * sn + 2.0 * b * cs * sn + c * cs * cs;
    let (eig_min, eig_max) = sym_eigenvalues(g11, g12, g22);
    Ok((
        MetricSample {
            x: rho * cs,
            y: rho * sn,
            g11,
            g12,
            g22,
            eig_min,
            eig_max,
        },
        round_trip,
    ))
}

fn sym_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean - rad, mean + rad)
}

/// Samples g̃ on `n_rho × n_theta` points with ρ from R₃ to 3R₄.
pub fn pullback_flat_metric(map: &DiffeoMap, n_rho: usize, n_theta: usize) -> Result<PullbackReport> {
    if n_rho < 2 || n_theta < 1 {
        return Err(Error::InvalidInput("metric grid needs n_rho ≥ 2 and n_theta ≥ 1".into()));
    }
    let rows: Vec<Vec<(MetricSample, f64)>> = (0..n_theta)
        .into_par_iter()
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n_theta as f64;
            (0..n_rho)
                .map(|i| {
                    let rho = map.r3 + (3.0 * map.r4 - map.r3) * i as f64 / (n_rho - 1) as f64;
                    metric_at(map, rho, theta)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(n_rho * n_theta);
    let (mut eig_min, mut eig_max, mut far, mut trip) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for (m, rt) in rows.into_iter().flatten() {
        if !(m.eig_min > 0.0) {
            return Err(Error::InversionFailure(format!("pulled-back metric not positive definite at ({}, {})", m.x, m.y)));
        }
        eig_min = eig_min.min(m.eig_min);
        eig_max = eig_max.max(m.eig_max);
        trip = trip.max(rt);
        if m.x.hypot(m.y) >= 2.0 * map.r4 {
            far = far.max((m.g11 - 1.0).abs() + m.g12.abs() + (m.g22 - 1.0).abs());
        }
        samples.push(m);
    }
    if trip > ROUND_TRIP_TOL {
        return Err(Error::InversionFailure(format!("round trip error {trip:e}")));
    }
    Ok(PullbackReport {
        samples,
        eig_min,
        eig_max,
        far_deviation: far,
        max_round_trip: trip,
        delta0: eig_min.sqrt(),
    })
}

impl PullbackReport {
    /// CSV with columns `x,y,g11,g12,g22`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,g11,g12,g22\n");
        for m in &self.samples {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", m.x, m.y, m.g11, m.g12, m.g22);
        }
        out
    }
}

/// θ-average of the radial coefficient `√g̃_ρρ` and of `g̃_θθ/ρ²`, the input
/// for a radially averaged model of a nonradial pullback.
pub fn radial_average(map: &DiffeoMap, n_rho: usize, n_theta: usize) -> Result<Vec<[f64; 3]>> {
    (0..n_rho)
        .map(|i| {
            let rho = map.r3 + (3.0 * map.r4 - map.r3) * i as f64 / (n_rho - 1).max(1) as f64;
            let (mut k, mut ang) = (0.0, 0.0);
            for j in 0..n_theta {
                let theta = 2.0 * PI * j as f64 / n_theta as f64;
                let r = map.invert(rho, theta)?;
                let s = map.eval(r, theta);
                k += 1.0 / s.f_r;
                let r_theta = s.f_theta / s.f_r;
                ang += (r_theta * r_theta + r * r) / (rho * rho);
            }
            Ok([rho, k / n_theta as f64, ang / n_theta as f64])
        })
        .collect()
}

/// Externally supplied map sampled on rays: rows `(r, θ, f)` with the first
/// row of every ray on the obstacle boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapTable {
    pub r3: f64,
    pub rows: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableCertificate {
    pub rays: usize,
    pub min_df_dr: f64,
    pub max_df_dr: f64,
    pub min_det: f64,
    pub boundary_error: f64,
}

impl MapTable {
    /// Reads the first three columns (`r,theta,f`) of a CSV with a header
    /// line; the map export of [`DiffeoMap::to_csv`] is accepted as is.
    pub fn from_csv(r3: f64, text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',').map(|v| v.trim().parse::<f64>());
            let mut next = || match it.next() {
                Some(Ok(v)) => Ok(v),
                _ => Err(Error::InvalidInput(format!("map table line {}: expected r,theta,f", n + 1))),
            };
            rows.push([next()?, next()?, next()?]);
        }
        Ok(Self { r3, rows })
    }
}

/// Jacobian positivity and boundary preservation for a tabulated map, with
/// ∂_r f taken from divided differences along each ray.
pub fn table_certificate(table: &MapTable) -> Result<TableCertificate> {
    let mut cert = TableCertificate {
        rays: 0,
        min_df_dr: f64::INFINITY,
        max_df_dr: f64::NEG_INFINITY,
        min_det: f64::INFINITY,
        boundary_error: 0.0,
    };
    let mut start = 0;
    while start < table.rows.len() {
        let theta = table.rows[start][1];
        let mut end = start + 1;
        while end < table.rows.len() && table.rows[end][1] == theta {
            end += 1;
        }
        let ray = &table.rows[start..end];
        if ray.len() < 2 {
            return Err(Error::InvalidInput(format!("ray θ = {theta} has a single sample")));
        }
        cert.rays += 1;
        cert.boundary_error = cert.boundary_error.max((ray[0][2] - table.r3).abs());
        for w in ray.windows(2) {
            let dr = w[1][0] - w[0][0];
            if !(dr > 0.0) {
                return Err(Error::InvalidInput(format!("radii not increasing on ray θ = {theta}")));
            }
            let d = (w[1][2] - w[0][2]) / dr;
            cert.min_df_dr = cert.min_df_dr.min(d);
            cert.max_df_dr = cert.max_df_dr.max(d);
            let rm = 0.5 * (w[0][0] + w[1][0]);
            let fm = 0.5 * (w[0][2] + w[1][2]);
            cert.min_det = cert.min_det.min(d * fm / rm);
        }
        start = end;
    }
    if cert.rays == 0 {
        return Err(Error::InvalidInput("empty map table".into()));
    }
    if cert.min_df_dr <= 0.0 || cert.min_det <= 0.0 {
        return Err(Error::JacobianViolation(format!("tabulated ∂_r f reaches {}", cert.min_df_dr)));
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_of_radius_r3_is_identity() {
        let map = build_star_map(&StarObstacle::circle(0.2, 0.2)).unwrap();
        for &(r, th) in &[(0.2, 0.0), (1.0, 1.0), (7.0, 2.0), (12.0, 4.0)] {
            let s = map.eval(r, th);
            assert!((s.f - r).abs() < 1e-15 * r && (s.f_r - 1.0).abs() < 1e-15 && s.f_theta == 0.0);
        }
        let cert = jacobian_certificate(&map, 200, 16).unwrap();
        assert!((cert.min_df_dr - 1.0).abs() < 1e-15 && (cert.max_df_dr - 1.0).abs() < 1e-15);
        let pb = pullback_flat_metric(&map, 40, 16).unwrap();
        assert!((pb.eig_min - 1.0).abs() < 1e-14 && (pb.eig_max - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ellipse_certificate_by_brute_force() {
        let map = build_star_map(&StarObstacle::ellipse_like(0.2)).unwrap();
        assert!(!map.range.lower_margin_ok);
        let cert = jacobian_certificate(&map, 1000, 1000).unwrap();
        assert!(cert.min_df_dr >= 0.08 - 1e-6);
        assert!(cert.boundary_error < 1e-12 && cert.far_identity_error == 0.0);
        // independent oracle: central differences of f on a coarser grid
        let mut fd_min = f64::INFINITY;
        for j in 0..300 {
            let th = 2.0 * PI * j as f64 / 300.0;
            let r0 = map.boundary(th);
            for i in 0..300 {
                let r = r0 + (10.0 - r0) * (i as f64 + 0.5) / 300.0;
                let h = 1e-6;
                let d = (map.eval(r + h, th).f - map.eval(r - h, th).f) / (2.0 * h);
                assert!((d - map.eval(r, th).f_r).abs() < 1e-6);
                let dth = (map.eval(r, th + h).f - map.eval(r, th - h).f) / (2.0 * h);
                assert!((dth - map.eval(r, th).f_theta).abs() < 1e-6);
                fd_min = fd_min.min(d);
            }
        }
        assert!(fd_min >= 0.08 && (fd_min - cert.min_df_dr).abs() < 1e-2, "{fd_min} {}", cert.min_df_dr);
    }

    #[test]
    fn far_field_is_identity() {
        let map = build_star_map(&StarObstacle::ellipse_like(0.2)).unwrap();
        for i in 0..50 {
            let r = 10.0 + i as f64 * 0.3;
            let s = map.eval(r, i as f64 * 0.37);
            assert_eq!((s.f, s.f_r, s.f_theta), (r, 1.0, 0.0));
            assert_eq!(map.invert(r, 0.4).unwrap(), r);
        }
    }

    #[test]
    fn pullback_is_spd_and_flat_outside() {
        let map = build_star_map(&StarObstacle::ellipse_like(0.2)).unwrap();
        let pb = pullback_flat_metric(&map, 200, 64).unwrap();
        assert!(pb.eig_min > 0.0 && pb.max_round_trip < 1e-10);
        assert!(pb.far_deviation < 1e-14, "{}", pb.far_deviation);
        assert!(pb.eig_min >= 0.01 * 0.08 * 0.08);
        // g̃ should send the image of a physical displacement back to its flat length
        let (th, r) = (0.7, 1.3);
        let s = map.eval(r, th);
        let (m, _) = metric_at(&map, s.f, th).unwrap();
        let h = 1e-6;
        let p = map.eval(r + h, th);
        let (x0, y0) = (s.f * th.cos(), s.f * th.sin());
        let (x1, y1) = (p.f * th.cos(), p.f * th.sin());
        let (dx, dy) = ((x1 - x0) / h, (y1 - y0) / h);
        let len2 = m.g11 * dx * dx + 2.0 * m.g12 * dx * dy + m.g22 * dy * dy;
        assert!((len2 - 1.0).abs() < 1e-5, "{len2}");
    }

    #[test]
    fn bounds_are_enforced() {
        let mut big = StarObstacle::ellipse_like(0.2);
        big.a0 = 3.0;
        assert!(matches!(build_star_map(&big), Err(Error::ObstacleBoundsViolation(_))));
        let neg = StarObstacle {
            a0: 0.1,
            cos: vec![0.3],
            sin: vec![],
            delta2: 0.2,
        };
        assert!(matches!(build_star_map(&neg), Err(Error::ObstacleBoundsViolation(_))));
    }

    #[test]
    fn small_obstacle_fails_the_certificate() {
        // boundary well inside R₃ stretches too hard in the transition band
        let map = build_star_map(&StarObstacle::circle(0.01, 0.2)).unwrap();
        assert!(matches!(jacobian_certificate(&map, 400, 4), Err(Error::JacobianViolation(_))));
    }

    #[test]
    fn exported_table_passes_table_certificate() {
        let map = build_star_map(&StarObstacle::ellipse_like(0.2)).unwrap();
        let csv = map.to_csv(400, 32);
        assert!(csv.starts_with("r,theta,f,df_dr,df_dtheta\n"));
        let table = MapTable::from_csv(map.r3, &csv).unwrap();
        let cert = table_certificate(&table).unwrap();
        assert_eq!(cert.rays, 32);
        assert!(cert.boundary_error < 1e-12 && cert.min_df_dr > 0.08);
    }

    #[test]
    fn json_round_trip() {
        let obs = StarObstacle::from_json(r#"{"a0":0.5,"cos":[0,0.2],"delta2":0.2}"#).unwrap();
        assert_eq!(obs, StarObstacle::ellipse_like(0.2));
        let (r, _) = obs.radius(0.0);
        assert!((r - 0.7).abs() < 1e-15);
    }
}

//! Radial test functions sampled on a [`RadialGrid`] with derivative data.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kind {
    Phi0,
    PhiLambda { lambda: f64 },
    HLambda { lambda: f64 },
    /// Perturbed-metric eigenfunction Φ_λ.
    PhiLambdaPerturbed { lambda: f64 },
    Bq { q: f64, t: f64 },
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kind::Phi0 => write!(f, "phi0"),
            Kind::PhiLambda { lambda } => write!(f, "phi_lambda({lambda})"),
            Kind::HLambda { lambda } => write!(f, "h_lambda({lambda})"),
            Kind::PhiLambdaPerturbed { lambda } => write!(f, "Phi_lambda({lambda})"),
            Kind::Bq { q, t } => write!(f, "bq(q={q},t={t})"),
        }
    }
}

/// Something that can be evaluated at an arbitrary radius.
pub trait Profile {
    fn value(&self, r: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Profile for F {
    fn value(&self, r: f64) -> f64 {
        self(r)
    }
}

/// A radial scalar field with first (and optionally second) derivatives at
/// every node. Between nodes it is evaluated by Hermite interpolation: quintic
/// when second derivatives are present, cubic otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: Kind,
    pub grid: RadialGrid,
    pub values: Vec<f64>,
    pub deriv_values: Vec<f64>,
    pub second_values: Option<Vec<f64>>,
    /// Fingerprint of the metric the function was built on.
    pub metric_hash: String,
}

impl TestFunction {
    pub fn new(
        kind: Kind,
        grid: RadialGrid,
        values: Vec<f64>,
        deriv_values: Vec<f64>,
        second_values: Option<Vec<f64>>,
        metric_hash: String,
    ) -> Result<Self> {
        let n = grid.len();
        if values.len() != n || deriv_values.len() != n || second_values.as_ref().is_some_and(|s| s.len() != n) {
            return Err(Error::InvalidInput(format!("sample count mismatch on a {n}-node grid")));
        }
        Ok(Self {
            kind,
            grid,
            values,
            deriv_values,
            second_values,
            metric_hash,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    /// Value at `r`; outside the grid the nearest end segment is extrapolated.
    pub fn eval(&self, r: f64) -> f64 {
        self.eval_with_deriv(r).0
    }

    /// Value and first derivative at `r`.
    pub fn eval_with_deriv(&self, r: f64) -> (f64, f64) {
        let nodes = self.grid.nodes();
        let i = self.grid.locate(r);
        let (x0, x1) = (nodes[i], nodes[i + 1]);
        let h = x1 - x0;
        let s = (r - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.deriv_values[i] * h, self.deriv_values[i + 1] * h);
        match &self.second_values {
            Some(sec) => {
                let (c0, c1) = (sec[i] * h * h, sec[i + 1] * h * h);
                let (v, dv) = quintic_hermite(s, [y0, d0, c0], [y1, d1, c1]);
                (v, dv / h)
            }
            None => {
                let (v, dv) = cubic_hermite(s, [y0, d0], [y1, d1]);
                (v, dv / h)
            }
        }
    }

    /// Monotonicity of the node values (nondecreasing).
    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    /// CSV with columns `r,value,derivative`; the header comment records the
    /// kind and metric fingerprint.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# kind={} metric={}", self.kind, self.metric_hash);
        out.push_str("r,value,derivative\n");
        for ((r, v), d) in self.nodes().iter().zip(&self.values).zip(&self.deriv_values) {
            let _ = writeln!(out, "{r:.17e},{v:.17e},{d:.17e}");
        }
        out
    }
}

impl Profile for TestFunction {
    fn value(&self, r: f64) -> f64 {
        self.eval(r)
    }
}

fn cubic_hermite(s: f64, a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let v = h00 * a[0] + h10 * a[1] + h01 * b[0] + h11 * b[1];
    let dv = (6.0 * s2 - 6.0 * s) * a[0] + (3.0 * s2 - 4.0 * s + 1.0) * a[1] + (-6.0 * s2 + 6.0 * s) * b[0] + (3.0 * s2 - 2.0 * s) * b[1];
    (v, dv)
}

fn quintic_hermite(s: f64, a: [f64; 3], b: [f64; 3]) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h3 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let d3 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let v = h0 * a[0] + h1 * a[1] + h2 * a[2] + h5 * b[0] + h4 * b[1] + h3 * b[2];
    let dv = d0 * a[0] + d1 * a[1] + d2 * a[2] + d5 * b[0] + d4 * b[1] + d3 * b[2];
    (v, dv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(f: impl Fn(f64) -> [f64; 3], second: bool) -> TestFunction {
        let grid = RadialGrid::log_graded(1.0, 100.0, 16.0).unwrap();
        let s: Vec<[f64; 3]> = grid.nodes().iter().map(|&r| f(r)).collect();
        TestFunction::new(
            Kind::Phi0,
            grid,
            s.iter().map(|v| v[0]).collect(),
            s.iter().map(|v| v[1]).collect(),
            second.then(|| s.iter().map(|v| v[2]).collect()),
            "test".into(),
        )
        .unwrap()
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let tf = sampled(|r| [r.ln(), 1.0 / r, -1.0 / (r * r)], true);
        for (r, v) in tf.nodes().iter().zip(&tf.values) {
            assert_eq!(tf.eval(*r), *v);
        }
    }

    #[test]
    fn quintic_beats_cubic() {
        let f = |r: f64| [r.ln(), 1.0 / r, -1.0 / (r * r)];
        let quintic = sampled(f, true);
        let cubic = sampled(f, false);
        let (mut eq, mut ec) = (0.0f64, 0.0f64);
        for i in 0..1000 {
            let r = 1.0 + i as f64 * 0.099;
            eq = eq.max((quintic.eval(r) - r.ln()).abs());
            ec = ec.max((cubic.eval(r) - r.ln()).abs());
            let (_, d) = quintic.eval_with_deriv(r);
            assert!((d - 1.0 / r).abs() < 1e-5);
        }
        assert!(eq < 1e-7 && ec < 1e-4 && eq < 0.1 * ec, "{eq} {ec}");
    }

    #[test]
    fn csv_header_records_kind_and_metric() {
        let tf = sampled(|r| [r, 1.0, 0.0], false);
        let csv = tf.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "# kind=phi0 metric=test");
        assert_eq!(lines.next().unwrap(), "r,value,derivative");
        assert_eq!(csv.lines().count(), tf.nodes().len() + 2);
    }
}

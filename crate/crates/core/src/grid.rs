use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the nodes of a [`RadialGrid`] are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spacing {
    /// Constant step `h`.
    Uniform { h: f64 },
    /// Geometric spacing `r_i = R·10^{i/per_decade}`.
    LogGraded { per_decade: f64 },
    /// Geometric until the step reaches `max_step`, uniform beyond.
    LogCapped { per_decade: f64, max_step: f64 },
    /// Arbitrary increasing nodes.
    Irregular,
}

/// Strictly increasing radii starting exactly at the inner radius R.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    spacing: Spacing,
}

pub const DEFAULT_PER_DECADE: f64 = 64.0;

impl RadialGrid {
    /// Geometric grid from `r_inner` covering at least `r_outer`.
    pub fn log_graded(r_inner: f64, r_outer: f64, per_decade: f64) -> Result<Self> {
        if !(r_inner > 0.0 && r_outer > r_inner && per_decade > 0.0) {
            return Err(Error::InvalidInput(format!(
                "log grid needs 0 < R < r_max and positive density (R = {r_inner}, r_max = {r_outer})"
            )));
        }
        let decades = (r_outer / r_inner).log10();
        let n = (decades * per_decade).ceil() as usize;
        let step = std::f64::consts::LN_10 / per_decade;
        let mut nodes: Vec<f64> = (0..=n).map(|i| r_inner * (i as f64 * step).exp()).collect();
        nodes[0] = r_inner;
        Ok(Self {
            nodes,
            spacing: Spacing::LogGraded { per_decade },
        })
    }

    /// Geometric grid whose step never exceeds `max_step`.
    pub fn log_capped(r_inner: f64, r_outer: f64, per_decade: f64, max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(Error::InvalidInput(format!("step cap must be positive, got {max_step}")));
        }
        let log = Self::log_graded(r_inner, r_outer, per_decade)?;
        let mut nodes = Vec::with_capacity(log.nodes.len());
        for &r in &log.nodes {
            match nodes.last() {
                Some(&last) if r - last > max_step => break,
                _ => nodes.push(r),
            }
        }
        let mut last = *nodes.last().unwrap();
        while last < r_outer {
            last += max_step;
            nodes.push(last);
        }
        Ok(Self {
            nodes,
            spacing: Spacing::LogCapped { per_decade, max_step },
        })
    }

    /// Uniform grid with step `h` from `r_inner` covering at least `r_outer`.
    pub fn uniform(r_inner: f64, r_outer: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && r_outer > r_inner) {
            return Err(Error::InvalidInput(format!(
                "uniform grid needs h > 0 and r_max > R (h = {h})"
            )));
        }
        let n = ((r_outer - r_inner) / h - 1e-9).ceil() as usize;
        let nodes = (0..=n).map(|i| r_inner + i as f64 * h).collect();
        Ok(Self {
            nodes,
            spacing: Spacing::Uniform { h },
        })
    }

    /// Builds a grid from explicit nodes (validated for strict increase).
    pub fn from_nodes(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if nodes.len() < 2 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("grid nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes, spacing })
    }

    /// Grid with twice the node density; contains every node of `self`.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len());
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            let mid = match self.spacing {
                Spacing::Uniform { .. } => 0.5 * (w[0] + w[1]),
                Spacing::LogGraded { .. } => (w[0] * w[1]).sqrt(),
                Spacing::LogCapped { max_step, .. } if w[1] - w[0] < max_step * (1.0 - 1e-9) => (w[0] * w[1]).sqrt(),
                Spacing::LogCapped { .. } | Spacing::Irregular => 0.5 * (w[0] + w[1]),
            };
            nodes.push(mid);
        }
        nodes.push(*self.nodes.last().unwrap());
        let spacing = match self.spacing {
            Spacing::Uniform { h } => Spacing::Uniform { h: 0.5 * h },
            Spacing::LogGraded { per_decade } => Spacing::LogGraded {
                per_decade: 2.0 * per_decade,
            },
            Spacing::LogCapped { per_decade, max_step } => Spacing::LogCapped {
                per_decade: 2.0 * per_decade,
                max_step: 0.5 * max_step,
            },
            Spacing::Irregular => Spacing::Irregular,
        };
        Self { nodes, spacing }
    }

    /// Same spacing policy, extended to `r_outer`.
    pub fn extended_to(&self, r_outer: f64) -> Result<Self> {
        match self.spacing {
            Spacing::Uniform { h } => Self::uniform(self.inner(), r_outer, h),
            Spacing::LogGraded { per_decade } => Self::log_graded(self.inner(), r_outer, per_decade),
            Spacing::LogCapped { per_decade, max_step } => Self::log_capped(self.inner(), r_outer, per_decade, max_step),
            Spacing::Irregular => {
                let mut nodes = self.nodes.clone();
                let last = *nodes.last().unwrap();
                if r_outer > last {
                    nodes.push(r_outer);
                }
                Self::from_nodes(nodes, Spacing::Irregular)
            }
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn inner(&self) -> f64 {
        self.nodes[0]
    }

    pub fn outer(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Largest node index `i` with `nodes[i] <= r` (clamped to the grid).
    pub fn locate(&self, r: f64) -> usize {
        match self.nodes.partition_point(|&x| x <= r) {
            0 => 0,
            k => (k - 1).min(self.nodes.len() - 2),
        }
    }

    pub fn min_step(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

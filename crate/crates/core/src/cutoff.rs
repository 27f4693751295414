//! Polynomial cutoffs built from the quintic smoothstep. They are C² with
//! exactly known slopes, so certificates that use sup|μ′| stay exact.

/// `10s³ − 15s⁴ + 6s⁵` clamped to [0, 1].
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    }
}

pub fn smoothstep_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

pub fn smoothstep_deriv2(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
    }
}

/// Time cutoff: 1 on [0, 1/2], 0 on [1, ∞).
pub fn eta(t: f64) -> f64 {
    1.0 - smoothstep(2.0 * t - 1.0)
}

pub fn eta_deriv(t: f64) -> f64 {
    -2.0 * smoothstep_deriv(2.0 * t - 1.0)
}

/// η restricted to its transition window [1/2, 1].
pub fn eta_star(t: f64) -> f64 {
    if (0.5..=1.0).contains(&t) {
        eta(t)
    } else {
        0.0
    }
}

/// η_T(t) = η(t/T).
pub fn eta_scaled(t: f64, big_t: f64) -> f64 {
    eta(t / big_t)
}

/// Radial cutoff: 1 on [0, 1], 0 on [2, ∞).
pub fn mu(r: f64) -> f64 {
    1.0 - smoothstep(r - 1.0)
}

pub fn mu_deriv(r: f64) -> f64 {
    -smoothstep_deriv(r - 1.0)
}

/// sup |μ′|, attained at r = 3/2.
pub const C_MU: f64 = 15.0 / 8.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_conditions_are_exact() {
        assert_eq!(eta(0.5), 1.0);
        assert_eq!(eta(1.0), 0.0);
        assert_eq!(eta_scaled(7.0, 7.0), 0.0);
        assert_eq!(eta_deriv(0.0), 0.0);
        assert_eq!(eta_deriv(1.0), 0.0);
        assert_eq!(mu(1.0), 1.0);
        assert_eq!(mu(2.0), 0.0);
        assert_eq!(eta_star(0.25), 0.0);
    }

    #[test]
    fn mu_slope_bound() {
        assert_eq!(mu_deriv(1.5).abs(), C_MU);
        let max = (0..=10_000)
            .map(|i| mu_deriv(1.0 + i as f64 * 1e-4).abs())
            .fold(0.0, f64::max);
        assert!(max <= C_MU);
    }

    #[test]
    fn derivatives_match_differences() {
        for &s in &[0.1, 0.37, 0.5, 0.81] {
            let h = 1e-5;
            let d = (smoothstep(s + h) - smoothstep(s - h)) / (2.0 * h);
            let d2 = (smoothstep_deriv(s + h) - smoothstep_deriv(s - h)) / (2.0 * h);
            assert!((d - smoothstep_deriv(s)).abs() < 1e-8);
            assert!((d2 - smoothstep_deriv2(s)).abs() < 1e-7);
        }
    }
}

//! Gauss–Kronrod quadrature: a globally adaptive 10/21-point integrator and
//! the fixed 7/15-point panel rule used for the λ-direction of `b_q`.

use crate::error::{Error, Result};

const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_292_099_343,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod abscissae above.
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_952_692_397_223,
];

const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights on XGK15[1], XGK15[3], XGK15[5], XGK15[7].
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of per-interval |Kronrod − Gauss| differences.
    pub abs_err: f64,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK21[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = h * XGK21[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK21[j] * pair;
        if j % 2 == 1 {
            gauss += WG10[j / 2] * pair;
        }
    }
    (kron * h, (kron - gauss).abs() * h)
}

/// One 7/15 Gauss–Kronrod panel on [a, b]; returns (kronrod, |kronrod − gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> (f64, f64) {
    let (nodes, kw, gw) = gk15_rule(a, b);
    let mut kron = 0.0;
    let mut gauss = 0.0;
    for i in 0..15 {
        let v = f(nodes[i]);
        kron += kw[i] * v;
        gauss += gw[i] * v;
    }
    (kron, (kron - gauss).abs())
}

/// Nodes with Kronrod and Gauss weights (Gauss weight zero on Kronrod-only
/// nodes) of the 7/15 rule mapped onto [a, b].
pub fn gk15_rule(a: f64, b: f64) -> ([f64; 15], [f64; 15], [f64; 15]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [0.0; 15];
    let mut kw = [0.0; 15];
    let mut gw = [0.0; 15];
    for j in 0..7 {
        x[2 * j] = c - h * XGK15[j];
        x[2 * j + 1] = c + h * XGK15[j];
        kw[2 * j] = WGK15[j] * h;
        kw[2 * j + 1] = WGK15[j] * h;
        if j % 2 == 1 {
            gw[2 * j] = WG7[j / 2] * h;
            gw[2 * j + 1] = WG7[j / 2] * h;
        }
    }
    x[14] = c;
    kw[14] = WGK15[7] * h;
    gw[14] = WG7[3] * h;
    (x, kw, gw)
}

/// Globally adaptive Gauss–Kronrod integration of `f` over the finite
/// interval [a, b]. The interval with the largest error estimate is bisected
/// until the summed estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::QuadratureFailure(format!("non-finite limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_err: 0.0, evals: 0 });
    }
    let (v, e) = gk21(&f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut evals = 21;
    loop {
        let total: f64 = intervals.iter().map(|iv| iv.2).sum();
        let err: f64 = intervals.iter().map(|iv| iv.3).sum();
        if !total.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        let scale: f64 = intervals.iter().map(|iv| iv.2.abs()).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target || err <= 50.0 * f64::EPSILON * scale {
            return Ok(QuadResult { value: total, abs_err: err, evals });
        }
        if intervals.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "tolerance {target:e} not reached on [{a}, {b}] (estimate {err:e})"
            )));
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::QuadratureFailure(format!(
                "interval [{lo}, {hi}] cannot be subdivided further"
            )));
        }
        let (v1, e1) = gk21(&f, lo, mid);
        let (v2, e2) = gk21(&f, mid, hi);
        evals += 42;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Integral of `f` over [a, ∞) via the map s = a + x/(1 − x), x ∈ [0, 1).
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate(
        |x| {
            let w = 1.0 - x;
            let v = f(a + x / w) / (w * w);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s21: f64 = 2.0 * WGK21[..10].iter().sum::<f64>() + WGK21[10];
        let g10: f64 = 2.0 * WG10.iter().sum::<f64>();
        let s15: f64 = 2.0 * WGK15[..7].iter().sum::<f64>() + WGK15[7];
        let g7: f64 = 2.0 * WG7[..3].iter().sum::<f64>() + WG7[3];
        for s in [s21, g10, s15, g7] {
            assert!((s - 2.0).abs() < 1e-14, "{s}");
        }
    }

    #[test]
    fn panel_rule_is_exact_on_polynomials() {
        // G7 is exact to degree 13, K15 to degree 22.
        let (k, e) = gk15(|x| x.powi(12) + 3.0 * x.powi(5), 0.0, 1.0);
        assert!((k - (1.0 / 13.0 + 0.5)).abs() < 1e-14);
        assert!(e < 1e-14);
    }

    #[test]
    fn adaptive_handles_smooth_and_peaked() {
        let r = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, QuadOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let r = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadOptions::default()).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((r.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn infinite_range() {
        let r = integrate_to_infinity(|x: f64| (-x).exp(), 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = integrate(|x| x, 2.0, 2.0, QuadOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }
}

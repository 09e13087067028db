use super::Probability;
use crate::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Φ(x) without input validation.
#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> Result<Probability> {
    if !x.is_finite() {
        return Err(Error::domain(format!("normal CDF of non-finite {x}")));
    }
    Ok(Probability(phi(x)))
}

/// Standard normal quantile Φ⁻¹(p) for `0 < p < 1`.
pub fn std_normal_quantile(p: Probability) -> Result<f64> {
    let p = p.value();
    if p <= 0.0 || p >= 1.0 {
        return Err(Error::domain(format!("normal quantile needs 0 < p < 1, got {p}")));
    }
    Ok(phi_inv(p))
}

// Acklam's rational approximation, relative error below 1.15e-9.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
const P_LOW: f64 = 0.02425;

/// Φ⁻¹(p) for `0 < p < 1`, no validation.
///
/// The upper half is mapped onto the lower half so that `p` and `1 - p`
/// give exactly opposite results whenever `1 - p` is representable.
#[inline]
pub(crate) fn phi_inv(p: f64) -> f64 {
    if p > 0.5 {
        -lower_quantile(1.0 - p)
    } else {
        lower_quantile(p)
    }
}

/// Quantile for `0 < p <= 0.5`: rational start plus one Newton step on Φ.
#[inline]
fn lower_quantile(p: f64) -> f64 {
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        if q == 0.0 {
            return 0.0;
        }
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    x - (phi(x) - p) / std_normal_pdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent erfc: all-positive series below 3, Lentz continued
    /// fraction above. Shares nothing with the production path.
    fn erfc_oracle(x: f64) -> f64 {
        if x < 0.0 {
            return 2.0 - erfc_oracle(-x);
        }
        let two_over_sqrt_pi = 2.0 / std::f64::consts::PI.sqrt();
        if x < 3.0 {
            // erf(x) = 2/√π e^{-x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!
            let mut term = x;
            let mut sum = x;
            let mut n = 0.0;
            while term > 1e-18 * sum {
                n += 1.0;
                term *= 2.0 * x * x / (2.0 * n + 1.0);
                sum += term;
            }
            1.0 - two_over_sqrt_pi * (-x * x).exp() * sum
        } else {
            // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
            let tiny = 1e-300;
            let mut f = x;
            let mut c = x;
            let mut d = 0.0;
            for k in 1..500 {
                let a = k as f64 / 2.0;
                d = x + a * d;
                d = if d.abs() < tiny { 1.0 / tiny } else { 1.0 / d };
                c = x + a / c;
                if c.abs() < tiny {
                    c = tiny;
                }
                let delta = c * d;
                f *= delta;
                if (delta - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            (-x * x).exp() / std::f64::consts::PI.sqrt() / f
        }
    }

    fn phi_oracle(x: f64) -> f64 {
        0.5 * erfc_oracle(-x / std::f64::consts::SQRT_2)
    }

    #[test]
    fn cdf_basic_values() {
        assert_eq!(std_normal_cdf(0.0).unwrap().value(), 0.5);
        // 40-digit erf evaluation: Φ(1.959964) = 0.97500000090355759...
        let p = std_normal_cdf(1.959964).unwrap().value();
        assert!((p - 0.975_000_000_903_557_6).abs() < 1e-15);
        for x in [0.1, 0.77, 1.5, 3.3, 7.9] {
            let a = std_normal_cdf(x).unwrap().value();
            let b = std_normal_cdf(-x).unwrap().value();
            assert!((a + b - 1.0).abs() <= 1e-14, "x={x}");
        }
    }

    #[test]
    fn cdf_matches_frozen_high_precision_values() {
        let cases = [
            (-8.0, 6.220_960_574_271_784e-16),
            (-5.0, 2.866_515_718_791_939e-7),
            (-3.0, 1.349_898_031_630_094_5e-3),
            (-1.2, 0.115_069_670_221_708_27),
            (0.7, 0.758_036_347_776_927),
            (1.5, 0.933_192_798_731_141_9),
            (2.2, 0.986_096_552_486_501_4),
            (6.0, 0.999_999_999_013_412_4),
        ];
        for (x, want) in cases {
            let got = std_normal_cdf(x).unwrap().value();
            assert!((got - want).abs() <= 1e-15, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn cdf_agrees_with_series_oracle() {
        let mut x = -8.0;
        while x <= 8.0 {
            let got = phi(x);
            let want = phi_oracle(x);
            assert!((got - want).abs() <= 1e-12, "x={x}: {got} vs {want}");
            x += 0.0137;
        }
    }

    #[test]
    fn cdf_rejects_non_finite() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn quantile_basic_values() {
        let q = |p: f64| std_normal_quantile(Probability::new(p).unwrap()).unwrap();
        assert_eq!(q(0.5), 0.0);
        // root of Φ(z) = 5/6 solved at 40 digits
        assert!((q(5.0 / 6.0) - 0.967_421_566_101_701).abs() < 1e-13);
        let frozen = [
            (1e-12, -7.034_483_825_301_132),
            (1e-6, -4.753_424_308_822_899),
            (0.02, -2.053_748_910_631_823),
            (0.3, -0.524_400_512_708_040_8),
            (0.9, 1.281_551_565_544_600_5),
            (0.999, 3.090_232_306_167_813_5),
        ];
        for (p, want) in frozen {
            let got = q(p);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "p={p}: {got}");
        }
        for p in [2f64.powi(-30), 0.01, 0.2, 0.25, 0.4375] {
            assert!((q(p) + q(1.0 - p)).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn quantile_rejects_endpoints() {
        assert!(std_normal_quantile(Probability::new(0.0).unwrap()).is_err());
        assert!(std_normal_quantile(Probability::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn quantile_round_trip_over_probability_grid() {
        // log-spaced in the tails, linear in the middle
        let mut ps = Vec::new();
        let mut e = -12.0;
        while e < -0.31 {
            let p = 10f64.powf(e);
            ps.push(p);
            ps.push(1.0 - p);
            e += 0.01;
        }
        for i in 1..1000 {
            ps.push(i as f64 / 1000.0);
        }
        for p in ps {
            let z = phi_inv(p);
            assert!((phi(z) - p).abs() <= 1e-10, "p={p}");
        }
    }

    #[test]
    fn cdf_round_trip_in_x() {
        let mut x = -6.0;
        while x <= 6.0 {
            let back = phi_inv(phi(x));
            // Above x ≈ 5.4 Φ(x) is within one ulp of 1 and the rounding of
            // Φ(x) alone moves the quantile by up to ulp(1) / φ(x).
            let tol = if x <= 5.0 { 1e-9 } else { 1e-9 + f64::EPSILON / std_normal_pdf(x) };
            assert!((back - x).abs() <= tol, "x={x}: {back}");
            x += 0.001;
        }
    }

    #[test]
    fn cdf_strictly_increasing_on_grid() {
        // beyond |x| = 6 neighbouring grid values collide in double precision
        let n = 10_000;
        let mut prev = phi(-6.0);
        for i in 1..=n {
            let x = -6.0 + 12.0 * i as f64 / n as f64;
            let p = phi(x);
            assert!(p > prev, "x={x}");
            prev = p;
        }
    }
}

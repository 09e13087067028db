use super::{DegreesOfFreedom, Probability};
use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// ln Γ(x) for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection keeps the series in its accurate range
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Stirling correction lnΓ(z) − [(z − ½)ln z − z + ½ln 2π], valid for z ≥ 20.
fn stirling_tail(z: f64) -> f64 {
    let r = 1.0 / z;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0 - r2 / 1188.0))))
}

/// ln B(a, b). For a large parameter the lnΓ difference is formed from the
/// Stirling series directly instead of subtracting two huge lnΓ values.
fn ln_beta(a: f64, b: f64) -> f64 {
    let (big, small) = if a >= b { (a, b) } else { (b, a) };
    if big < 20.0 {
        return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    }
    // lnΓ(big) − lnΓ(big + small)
    let ratio = -small * big.ln() - (big + small - 0.5) * (small / big).ln_1p() + small + stirling_tail(big)
        - stirling_tail(big + small);
    ln_gamma(small) + ratio
}

const CF_MAX_ITER: usize = 100_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Continued fraction for I_x(a, b) (modified Lentz), without the prefactor.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// I_x(a, b) with `y = 1 - x` supplied separately so that callers holding
/// an accurate complement do not lose it to cancellation.
fn beta_reg_split(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * y.ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, y) / b
    }
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("incomplete beta needs a, b > 0, got ({a}, {b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("incomplete beta needs 0 <= x <= 1, got {x}")));
    }
    Ok(beta_reg_split(a, b, x, 1.0 - x))
}

/// F_ν(−|t|): the lower tail of Student t at minus the absolute value.
/// Precise in relative terms, which is what Φ⁻¹ needs downstream.
#[inline]
pub(crate) fn t_lower_tail(t: f64, nu: f64) -> f64 {
    let t2 = t * t;
    if t2 == 0.0 {
        return 0.5;
    }
    if !t2.is_finite() {
        return 0.0;
    }
    let denom = nu + t2;
    0.5 * beta_reg_split(0.5 * nu, 0.5, nu / denom, t2 / denom)
}

/// Student t CDF F_ν(x) via the regularized incomplete beta function.
pub fn student_t_cdf(x: f64, nu: DegreesOfFreedom) -> Result<Probability> {
    if !x.is_finite() {
        return Err(Error::domain(format!("t CDF of non-finite {x}")));
    }
    let tail = t_lower_tail(x, nu.get() as f64);
    Ok(Probability(if x > 0.0 { 1.0 - tail } else { tail }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn df(nu: u64) -> DegreesOfFreedom {
        DegreesOfFreedom::new(nu).unwrap()
    }

    fn cdf(x: f64, nu: u64) -> f64 {
        student_t_cdf(x, df(nu)).unwrap().value()
    }

    fn cauchy(x: f64) -> f64 {
        0.5 + x.atan() / std::f64::consts::PI
    }

    fn t2_closed(x: f64) -> f64 {
        0.5 + x / (2.0 * (2.0 + x * x).sqrt())
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        // ln 10! = ln 3628800
        assert!((ln_gamma(11.0) - 3_628_800f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_beta_stirling_branch_is_continuous() {
        // B(a, 1/2) = B(a+1, 1/2) (a + 1/2) / a links the two branches
        for a in [18.0, 19.5, 19.9, 20.0, 20.5, 31.0, 500.0, 123_456.5] {
            let lhs = ln_beta(a, 0.5);
            let rhs = ln_beta(a + 1.0, 0.5) + ((a + 0.5) / a).ln();
            assert!((lhs - rhs).abs() < 1e-13, "a={a}: {lhs} vs {rhs}");
        }
        // exact: B(1, b) = 1/b
        assert!((ln_beta(1.0, 30.0) + 30f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn incomplete_beta_edges() {
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 0.0).unwrap(), 0.0);
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 1.0).unwrap(), 1.0);
        assert!((regularized_incomplete_beta(1.0, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
        // I_x(a, 1) = x^a
        let v = regularized_incomplete_beta(3.5, 1.0, 0.6).unwrap();
        assert!((v - 0.6f64.powf(3.5)).abs() < 1e-14);
        assert!(regularized_incomplete_beta(0.0, 1.0, 0.5).is_err());
        assert!(regularized_incomplete_beta(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn t_cdf_examples() {
        assert_eq!(cdf(0.0, 1), 0.5);
        assert_eq!(cdf(0.0, 37), 0.5);
        assert!((cdf(1.0, 1) - 0.75).abs() < 1e-15);
        assert!((cdf(1.0, 2) - (0.5 + 1.0 / (2.0 * 3f64.sqrt()))).abs() < 1e-15);
        // Φ(1.5) - F_30(1.5) = 5.2257632954649e-3 at 40 digits
        let gap = super::super::phi(1.5) - cdf(1.5, 30);
        assert!((gap - 5.225_763_295_464_935e-3).abs() < 1e-13, "{gap}");
        // the 2e-3 band is first reached between ν = 60 and ν = 100
        assert!((cdf(1.5, 100) - super::super::phi(1.5)).abs() < 2e-3);
    }

    #[test]
    fn t_cdf_matches_frozen_high_precision_values() {
        // 40-digit incomplete-beta evaluations
        let cases = [
            (1.5, 30, 0.927_967_035_435_677),
            (-2.5, 3, 0.043_853_323_504_032_77),
            (0.3, 7, 0.613_554_974_798_933),
            (4.0, 5, 0.994_838_292_259_584_3),
            (-10.0, 10, 7.947_765_877_982_06e-7),
            (2.0, 1000, 0.977_114_826_753_374_2),
            (-6.0, 4, 1.941_268_523_480_255_2e-3),
            (1.7, 200, 0.954_657_260_254_259_2),
            (-3.0, 9, 7.478_181_955_207_107e-3),
        ];
        for (x, nu, want) in cases {
            let got = cdf(x, nu);
            assert!((got - want).abs() <= 1e-13, "t({x}, {nu}) = {got} vs {want}");
        }
        // deep tail keeps relative accuracy: F_50(−30) = 6.19001139799363e-34
        let tail = t_lower_tail(-30.0, 50.0);
        assert!((tail / 6.190_011_397_993_633e-34 - 1.0).abs() < 1e-11);
    }

    #[test]
    fn t_cdf_closed_forms_over_wide_range() {
        let mut x = -50.0;
        while x <= 50.0 {
            assert!((cdf(x, 1) - cauchy(x)).abs() <= 1e-12, "nu=1 x={x}");
            assert!((cdf(x, 2) - t2_closed(x)).abs() <= 1e-12, "nu=2 x={x}");
            x += 0.01;
        }
    }

    /// Composite Gauss–Legendre integration of the t density from 0 to x.
    fn t_cdf_quadrature(x: f64, nu: f64) -> f64 {
        let nodes = [
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let norm =
            (ln_gamma_oracle((nu + 1.0) / 2.0) - ln_gamma_oracle(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln())
                .exp();
        let density = |t: f64| norm * (1.0 + t * t / nu).powf(-(nu + 1.0) / 2.0);
        let panels = 2000;
        let h = x / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * h;
            for (z, w) in nodes {
                acc += w * density(mid + 0.5 * h * z);
            }
        }
        0.5 + 0.5 * h * acc
    }

    /// ln Γ via the Stirling series after shifting the argument above 30.
    fn ln_gamma_oracle(x: f64) -> f64 {
        let mut shift = 0.0;
        let mut z = x;
        while z < 30.0 {
            shift -= z.ln();
            z += 1.0;
        }
        shift + (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * z)
            - 1.0 / (360.0 * z.powi(3))
            + 1.0 / (1260.0 * z.powi(5))
    }

    #[test]
    fn t_cdf_agrees_with_quadrature() {
        for nu in [3u64, 4, 5, 8, 13, 40, 97, 400] {
            for x in [0.25, 0.9, 1.6, 2.7, 4.4] {
                let want = t_cdf_quadrature(x, nu as f64);
                let got = cdf(x, nu);
                assert!((got - want).abs() < 1e-12, "nu={nu} x={x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn t_cdf_monotone_on_grid() {
        for nu in [1u64, 3, 12, 200] {
            let n = 10_000;
            let mut prev = cdf(-8.0, nu);
            for i in 1..=n {
                let x = -8.0 + 16.0 * i as f64 / n as f64;
                let p = cdf(x, nu);
                assert!(p > prev, "nu={nu} x={x}");
                prev = p;
            }
        }
    }

    #[test]
    fn t_cdf_approaches_normal_as_nu_doubles() {
        let sup_gap = |nu: u64| {
            (0..=800)
                .map(|i| -4.0 + 8.0 * i as f64 / 800.0)
                .map(|x| (cdf(x, nu) - super::super::phi(x)).abs())
                .fold(0.0, f64::max)
        };
        let gaps: Vec<f64> = [4u64, 8, 16, 32, 64, 128, 256].iter().map(|&nu| sup_gap(nu)).collect();
        for w in gaps.windows(2) {
            assert!(w[1] < w[0], "{gaps:?}");
        }
    }

    #[test]
    fn t_cdf_symmetry_and_huge_nu() {
        for &(x, nu) in &[(0.7, 3u64), (2.5, 60), (1.1, 5_000_000)] {
            assert!((cdf(x, nu) + cdf(-x, nu) - 1.0).abs() < 1e-14);
        }
        assert!((cdf(1.1, 5_000_000) - super::super::phi(1.1)).abs() < 1e-7);
        assert!(student_t_cdf(f64::NAN, df(3)).is_err());
    }
}

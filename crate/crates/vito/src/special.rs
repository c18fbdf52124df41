//! Scalar special functions backing the kernel normalizations and drift
//! transforms. Everything here is deterministic and allocation free.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function via the Lanczos approximation (g = 7, nine coefficients),
/// with the reflection formula for arguments below 1/2. Relative accuracy is
/// around 1e-13 on (0, 10), the range used by the kernel constants.
pub fn gamma(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    if x < 0.5 {
        // Gamma(x) Gamma(1-x) = pi / sin(pi x)
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS_COEFF[0];
        for (i, c) in LANCZOS_COEFF.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
    }
}

/// Dawson integral D(y) = exp(-y^2) * int_0^y exp(u^2) du.
///
/// Maclaurin series below |y| = 4, asymptotic expansion above. The crossover
/// keeps the absolute error below ~1e-8, enough for drift tables whose other
/// error sources (spectral truncation) are far larger.
pub fn dawson(y: f64) -> f64 {
    let a = y.abs();
    let s = if y < 0.0 { -1.0 } else { 1.0 };
    if a < 4.0 {
        // D(y) = sum_k (-2)^k y^(2k+1) / (1 * 3 * ... * (2k+1))
        let mut term = a;
        let mut sum = a;
        let mut k = 0u32;
        while term.abs() > 1e-18 * sum.abs().max(1.0) && k < 200 {
            term *= -2.0 * a * a / (2.0 * f64::from(k) + 3.0);
            sum += term;
            k += 1;
        }
        s * sum
    } else {
        // D(y) ~ (1/(2y)) * sum_k (2k-1)!! / (2y^2)^k
        let inv2 = 1.0 / (2.0 * a * a);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..24 {
            let next = term * (2.0 * f64::from(k) - 1.0) * inv2;
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
        }
        s * sum / (2.0 * a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 30-digit arbitrary precision arithmetic.
    const GAMMA_TABLE: [(f64, f64); 10] = [
        (0.1, 9.5135076986687318363),
        (0.5, 1.7724538509055160273),
        (0.75, 1.2254167024651776451),
        (0.8, 1.1642297137253033736),
        (1.0, 1.0),
        (1.3, 0.89747069630627718849),
        (1.5, 0.88622692545275801365),
        (4.0, 6.0),
        (6.5, 287.885277815044361),
        (9.5, 119292.46199460900709),
    ];

    #[test]
    fn gamma_matches_reference_table() {
        for (x, want) in GAMMA_TABLE {
            let got = gamma(x);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs(),
                "gamma({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn gamma_reflection_range() {
        assert!((gamma(0.3) - 2.9915689876875906283).abs() < 1e-12 * 3.0);
        assert!((gamma(-1.5) - 2.3632718012073547031).abs() < 1e-12 * 2.4);
    }

    #[test]
    fn gamma_recurrence_property() {
        for &x in &[0.2, 0.7, 1.9, 3.3, 6.1] {
            let lhs = gamma(x + 1.0);
            let rhs = x * gamma(x);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn dawson_matches_reference_table() {
        // Same 30-digit reference source as the gamma table.
        let table = [
            (0.5, 0.42443638350202229593),
            (1.0, 0.53807950691276841914),
            (2.0, 0.30134038892379196603),
            (3.0, 0.17827103061055828734),
            (5.0, 0.10213407442427683544),
            (7.0, 0.072180974658236292028),
        ];
        for (y, want) in table {
            let got = dawson(y);
            assert!(
                (got - want).abs() <= 3e-9,
                "dawson({y}) = {got}, want {want}"
            );
            assert!((dawson(-y) + want).abs() <= 3e-9);
        }
    }

    #[test]
    fn dawson_large_argument_tail() {
        // 2y D(y) = 1 + 1/(2y^2) + O(y^-4) for large y.
        for &y in &[20.0f64, 100.0] {
            let resid = dawson(y) * 2.0 * y - 1.0 - 1.0 / (2.0 * y * y);
            assert!(resid.abs() < 2.0 / y.powi(4), "y={y}: resid {resid}");
        }
    }
}

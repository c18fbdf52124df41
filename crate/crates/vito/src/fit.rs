//! Ordinary least squares on small point sets, shared by every log-log
//! exponent estimate in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LinFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rms_residual: f64,
    pub max_abs_residual: f64,
    pub n_points: usize,
}

/// Least squares fit of y = intercept + slope * x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinFit> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "fit inputs have mismatched lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 points for a line, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("fit inputs must be finite".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let scale: f64 = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sxx <= 1e-24 * scale.max(1.0).powi(2) {
        return Err(Error::InsufficientData(
            "abscissae are degenerate, slope is not identifiable".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut max_abs = 0.0f64;
    for (a, b) in x.iter().zip(y) {
        let r = b - (intercept + slope * a);
        ss_res += r * r;
        max_abs = max_abs.max(r.abs());
    }
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let r_squared = if ss_tot <= 1e-28 * (1.0 + my * my) {
        if ss_res <= 1e-28 * (1.0 + my * my) {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinFit {
        slope,
        intercept,
        r_squared,
        rms_residual: (ss_res / n).sqrt(),
        max_abs_residual: max_abs,
        n_points: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let x: Vec<f64> = (0..12).map(|i| 0.3 * i as f64 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 0.75).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-12);
        assert!((f.intercept + 0.75).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(f.max_abs_residual < 1e-12);
    }

    #[test]
    fn rejects_degenerate_abscissae() {
        let x = vec![2.0; 5];
        let y = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            linear_fit(&x, &y),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(linear_fit(&[0.0, 1.0], &[0.0]).is_err());
        assert!(linear_fit(&[0.0], &[0.0]).is_err());
        assert!(linear_fit(&[0.0, f64::NAN], &[0.0, 1.0]).is_err());
    }
}

//! Quadrature helpers for kernel moduli.
//!
//! The integrands here have at worst an integrable endpoint singularity of
//! power or logarithmic type. A plain uniform rule badly underestimates such
//! integrals, so the singular routine walks geometric panels toward the
//! endpoint and closes the remaining tail by ratio extrapolation, using a
//! geometric model when panel sums decay geometrically and a power model when
//! they decay polynomially (the logarithmic-kernel case).

use crate::error::{Error, Result};

/// Composite Simpson rule on [a, b] with `n` subintervals (rounded up to even).
pub(crate) fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2) + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

const MAX_PANELS: usize = 600;

/// Integral of `g` over (0, len] where `g` may blow up at 0 like h^p with
/// p > -1, possibly with logarithmic factors. Panels halve geometrically
/// toward 0; each panel is smooth and handled by Simpson with `panel_n`
/// subintervals. Returns a quadrature error when the panel sums do not decay,
/// which signals a non-integrable singularity.
pub(crate) fn integrate_singular0<F: Fn(f64) -> f64>(
    g: &F,
    len: f64,
    panel_n: usize,
) -> Result<f64> {
    if len <= 0.0 {
        return Ok(0.0);
    }
    let mut acc = 0.0f64;
    let mut hi = len;
    let mut panels: Vec<f64> = Vec::new();
    for _ in 0..MAX_PANELS {
        let lo = hi * 0.5;
        let p = simpson(g, lo, hi, panel_n);
        if !p.is_finite() {
            return Err(Error::Quadrature(format!(
                "integrand not finite on panel [{lo:e}, {hi:e}]"
            )));
        }
        acc += p;
        panels.push(p);
        hi = lo;
        if p.abs() <= 1e-15 * acc.abs().max(1e-300) {
            return Ok(acc);
        }
    }
    // Tail beyond the last panel, from the decay of the panel sums.
    let k = panels.len();
    let last = panels[k - 1];
    let prev = panels[k - 2];
    if prev == 0.0 || last == 0.0 {
        return Ok(acc);
    }
    let rho = last / prev;
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Quadrature(
            "panel sums do not decay toward the singular endpoint; integrand looks non-integrable"
                .into(),
        ));
    }
    let tail = if rho <= 0.9 {
        last * rho / (1.0 - rho)
    } else {
        // Panel sums behave like k^(-alpha); sum the tail of that power law.
        let kf = k as f64;
        let alpha = rho.ln() / ((kf - 1.0) / kf).ln();
        if alpha <= 1.02 {
            return Err(Error::Quadrature(
                "panel sums decay too slowly; integrand looks non-integrable".into(),
            ));
        }
        last * kf / (alpha - 1.0)
    };
    Ok(acc + tail)
}

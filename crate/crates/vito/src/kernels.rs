//! Volterra kernel families, their moduli, and regularity certificates.
//!
//! A two-parameter kernel K(t,s) vanishes for s >= t and may blow up on the
//! diagonal. The modulus
//!
//! omega_p(t,s) = (int_0^s |K(t,r)-K(s,r)|^p dr)^{1/p}
//!              + (int_s^t |K(t,r)|^p dr)^{1/p}
//!
//! controls how strongly increments of the driven process decorrelate, and
//! the local non-determinism constant
//!
//! r(s,t) = (t-s)^{-2H} int_s^t K(t,r)^2 dr
//!
//! bounds the conditional variance of X_t given the past at s from below.
//! `certify_kernel` measures both on a grid and reports fitted growth
//! exponents together with the worst deviation from a pure power law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::grid::TimeGrid;
use crate::quad::integrate_singular0;
use crate::special::gamma;

/// Which coefficient a kernel multiplies in the state equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelRole {
    Drift,
    Diffusion,
}

/// Supported kernel families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// (t-s)^{H-1/2} / Gamma(H+1/2).
    RiemannLiouville { h: f64 },
    /// Kernel of fractional Brownian motion; carries no pointwise formula
    /// here, paths are drawn from the covariance instead.
    FbmMolchanGolosov { h: f64 },
    /// log(1 + 1/(t-s)).
    LogFractional,
    /// |(t-s) log(1/(t-s))^{2q}|^{-1/2}, valid for gaps below one.
    QLog { q: f64 },
    Constant { c: f64 },
    /// Bilinear interpolation of tabulated values on a rectangular node set.
    Tabulated {
        t_nodes: Vec<f64>,
        s_nodes: Vec<f64>,
        values: Vec<f64>,
    },
}

/// A kernel family tagged with the coefficient slot it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub role: KernelRole,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, role: KernelRole) -> Result<Self> {
        let spec = KernelSpec { family, role };
        spec.validate()?;
        Ok(spec)
    }

    pub fn riemann_liouville(h: f64, role: KernelRole) -> Result<Self> {
        Self::new(KernelFamily::RiemannLiouville { h }, role)
    }

    pub fn qlog(q: f64, role: KernelRole) -> Result<Self> {
        Self::new(KernelFamily::QLog { q }, role)
    }

    pub fn constant(c: f64, role: KernelRole) -> Result<Self> {
        Self::new(KernelFamily::Constant { c }, role)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.family {
            KernelFamily::RiemannLiouville { h } => {
                if !h.is_finite() || *h <= 0.0 {
                    return Err(Error::Domain(format!(
                        "riemann_liouville requires h > 0, got {h}"
                    )));
                }
            }
            KernelFamily::FbmMolchanGolosov { h } => {
                if !h.is_finite() || *h <= 0.0 || *h >= 1.0 {
                    return Err(Error::Domain(format!(
                        "fbm_molchan_golosov requires h in (0,1), got {h}"
                    )));
                }
            }
            KernelFamily::LogFractional => {}
            KernelFamily::QLog { q } => {
                if !q.is_finite() || *q <= 0.5 {
                    return Err(Error::Domain(format!("qlog requires q > 1/2, got {q}")));
                }
            }
            KernelFamily::Constant { c } => {
                if !c.is_finite() {
                    return Err(Error::Domain("constant kernel value must be finite".into()));
                }
            }
            KernelFamily::Tabulated {
                t_nodes,
                s_nodes,
                values,
            } => {
                if t_nodes.len() < 2 || s_nodes.len() < 2 {
                    return Err(Error::Domain(
                        "tabulated kernel needs at least 2 nodes per axis".into(),
                    ));
                }
                if values.len() != t_nodes.len() * s_nodes.len() {
                    return Err(Error::Domain(format!(
                        "tabulated kernel has {} values for a {}x{} node box",
                        values.len(),
                        t_nodes.len(),
                        s_nodes.len()
                    )));
                }
                for nodes in [t_nodes, s_nodes] {
                    if nodes.windows(2).any(|w| !(w[1] > w[0]))
                        || nodes.iter().any(|v| !v.is_finite())
                    {
                        return Err(Error::Domain(
                            "tabulated kernel nodes must be finite and strictly increasing".into(),
                        ));
                    }
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("tabulated kernel values must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// True when K(t,s) depends on t-s only, enabling O(1)-per-lag weights.
    pub fn is_convolution(&self) -> bool {
        matches!(
            self.family,
            KernelFamily::RiemannLiouville { .. }
                | KernelFamily::LogFractional
                | KernelFamily::QLog { .. }
                | KernelFamily::Constant { .. }
        )
    }

    /// Kernel value at positive gap t-s, for convolution families.
    pub(crate) fn eval_gap(&self, gap: f64) -> Result<f64> {
        debug_assert!(gap > 0.0);
        match &self.family {
            KernelFamily::RiemannLiouville { h } => {
                Ok(gap.powf(h - 0.5) / gamma(h + 0.5))
            }
            KernelFamily::LogFractional => Ok((1.0 + 1.0 / gap).ln()),
            KernelFamily::QLog { q } => {
                if gap >= 1.0 {
                    return Err(Error::Domain(format!(
                        "qlog kernel is only defined for gaps below 1, got {gap}"
                    )));
                }
                let l = (1.0 / gap).ln();
                Ok(1.0 / (gap * l.powf(2.0 * q)).sqrt())
            }
            KernelFamily::Constant { c } => Ok(*c),
            _ => Err(Error::Domain(
                "kernel family is not of convolution type".into(),
            )),
        }
    }
}

/// Pointwise kernel value K(t,s); zero whenever s >= t.
pub fn eval_kernel(spec: &KernelSpec, t: f64, s: f64) -> Result<f64> {
    spec.validate()?;
    if !t.is_finite() || !s.is_finite() || t < 0.0 || s < 0.0 {
        return Err(Error::Domain(format!(
            "kernel arguments must be finite and nonnegative, got t={t}, s={s}"
        )));
    }
    if s >= t {
        return Ok(0.0);
    }
    match &spec.family {
        KernelFamily::FbmMolchanGolosov { .. } => Err(Error::Domain(
            "fbm_molchan_golosov has no pointwise kernel here; sample paths from the covariance"
                .into(),
        )),
        KernelFamily::Tabulated {
            t_nodes,
            s_nodes,
            values,
        } => bilinear(t_nodes, s_nodes, values, t, s),
        _ => spec.eval_gap(t - s),
    }
}

fn bilinear(t_nodes: &[f64], s_nodes: &[f64], values: &[f64], t: f64, s: f64) -> Result<f64> {
    let locate = |nodes: &[f64], x: f64, axis: &str| -> Result<(usize, f64)> {
        if x < nodes[0] || x > nodes[nodes.len() - 1] {
            return Err(Error::Domain(format!(
                "tabulated kernel {axis}-argument {x} outside node range [{}, {}]",
                nodes[0],
                nodes[nodes.len() - 1]
            )));
        }
        let i = match nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(nodes.len() - 2),
            Err(i) => i - 1,
        };
        let w = (x - nodes[i]) / (nodes[i + 1] - nodes[i]);
        Ok((i, w))
    };
    let (i, wt) = locate(t_nodes, t, "t")?;
    let (j, ws) = locate(s_nodes, s, "s")?;
    let ns = s_nodes.len();
    let v = |a: usize, b: usize| values[a * ns + b];
    Ok(v(i, j) * (1.0 - wt) * (1.0 - ws)
        + v(i + 1, j) * wt * (1.0 - ws)
        + v(i, j + 1) * (1.0 - wt) * ws
        + v(i + 1, j + 1) * wt * ws)
}

/// Average of the Riemann-Liouville kernel over a gap cell (0, dt].
pub(crate) fn rl_cell_average(h: f64, dt: f64) -> f64 {
    dt.powf(h - 0.5) / ((h + 0.5) * gamma(h + 0.5))
}

/// Closed-form diagonal piece int_0^gap |K|^p over the gap variable, when
/// available; None means use quadrature.
fn diag_closed(spec: &KernelSpec, p: u32, gap: f64) -> Option<f64> {
    match (&spec.family, p) {
        (KernelFamily::RiemannLiouville { h }, _) => {
            let beta = h - 0.5;
            let e = p as f64 * beta + 1.0;
            Some(gap.powf(e) / (e * gamma(h + 0.5).powi(p as i32)))
        }
        (KernelFamily::Constant { c }, _) => Some(c.abs().powi(p as i32) * gap),
        (KernelFamily::QLog { q }, 2) => {
            let l = (1.0 / gap).ln();
            Some(l.powf(1.0 - 2.0 * q) / (2.0 * q - 1.0))
        }
        _ => None,
    }
}

fn abs_pow(x: f64, p: u32) -> f64 {
    if p == 1 {
        x.abs()
    } else {
        x * x
    }
}

/// int_0^gap |K(gap-offset...)|, i.e. the p-th moment of the kernel over the
/// final gap, for an arbitrary family via graded quadrature.
fn diag_piece(spec: &KernelSpec, p: u32, s: f64, t: f64, quad_n: usize) -> Result<f64> {
    let gap = t - s;
    if gap <= 0.0 {
        return Ok(0.0);
    }
    if let Some(v) = diag_closed(spec, p, gap) {
        return Ok(v);
    }
    if let (KernelFamily::QLog { q }, 1) = (&spec.family, p) {
        // Substituting h = m^2 turns int_0^gap (h L_h^{2q})^{-1/2} dh into
        // int_0^sqrt(gap) 2 (2 log(1/m))^{-q} dm with a mild endpoint.
        let q = *q;
        let g = move |m: f64| 2.0 * (2.0 * (1.0 / m).ln()).powf(-q);
        return integrate_singular0(&g, gap.sqrt(), quad_n);
    }
    if spec.is_convolution() {
        let spec = spec.clone();
        let g = move |h: f64| abs_pow(spec.eval_gap(h).unwrap_or(f64::NAN), p);
        return integrate_singular0(&g, gap, quad_n);
    }
    // Tabulated: integrand is bounded, integrate K(t, r) for r in (s, t).
    let spec = spec.clone();
    let g = move |h: f64| abs_pow(eval_kernel(&spec, t, t - h).unwrap_or(f64::NAN), p);
    let v = integrate_singular0(&g, gap, quad_n)?;
    Ok(v)
}

/// int_0^s |K(t,r) - K(s,r)|^p dr, singular at r = s.
fn diff_piece(spec: &KernelSpec, p: u32, s: f64, t: f64, quad_n: usize) -> Result<f64> {
    if s <= 0.0 || t <= s {
        return Ok(0.0);
    }
    let gap = t - s;
    if spec.is_convolution() {
        let spec = spec.clone();
        let g = move |u: f64| {
            let a = spec.eval_gap(u + gap).unwrap_or(f64::NAN);
            let b = spec.eval_gap(u).unwrap_or(f64::NAN);
            abs_pow(a - b, p)
        };
        integrate_singular0(&g, s, quad_n)
    } else {
        let spec = spec.clone();
        let g = move |u: f64| {
            let a = eval_kernel(&spec, t, s - u).unwrap_or(f64::NAN);
            let b = eval_kernel(&spec, s, s - u).unwrap_or(f64::NAN);
            abs_pow(a - b, p)
        };
        integrate_singular0(&g, s, quad_n)
    }
}

fn omega_once(spec: &KernelSpec, p: u32, s: f64, t: f64, quad_n: usize) -> Result<f64> {
    let pf = 1.0 / p as f64;
    let diag = diag_piece(spec, p, s, t, quad_n)?;
    let diff = diff_piece(spec, p, s, t, quad_n)?;
    Ok(diff.powf(pf) + diag.powf(pf))
}

fn check_modulus_args(spec: &KernelSpec, p: f64, s: f64, t: f64) -> Result<u32> {
    spec.validate()?;
    if matches!(spec.family, KernelFamily::FbmMolchanGolosov { .. }) {
        return Err(Error::Domain(
            "fbm_molchan_golosov has no pointwise kernel; its modulus is not defined here".into(),
        ));
    }
    if p != 1.0 && p != 2.0 {
        return Err(Error::Domain(format!("modulus order must be 1 or 2, got {p}")));
    }
    if !(s.is_finite() && t.is_finite()) || s < 0.0 || t < s {
        return Err(Error::Domain(format!(
            "modulus needs 0 <= s <= t, got s={s}, t={t}"
        )));
    }
    if matches!(spec.family, KernelFamily::QLog { .. }) && t >= 1.0 {
        return Err(Error::Domain(
            "qlog modulus needs t < 1 so every evaluated gap stays below 1".into(),
        ));
    }
    Ok(p as u32)
}

/// The kernel modulus omega_p(t,s), by closed forms where available and
/// graded singular quadrature otherwise. A refinement at doubled panel order
/// must agree to a relative 1e-5 or a quadrature error is returned.
pub fn modulus_omega(spec: &KernelSpec, p: f64, s: f64, t: f64, quad_n: usize) -> Result<f64> {
    let p = check_modulus_args(spec, p, s, t)?;
    if quad_n < 16 {
        return Err(Error::Domain(format!("quad_n must be at least 16, got {quad_n}")));
    }
    let coarse = omega_once(spec, p, s, t, quad_n)?;
    let fine = omega_once(spec, p, s, t, quad_n * 2)?;
    let scale = fine.abs().max(1e-12);
    if (fine - coarse).abs() > 1e-5 * scale {
        return Err(Error::Quadrature(format!(
            "modulus quadrature did not settle: {coarse} vs {fine} at doubled order"
        )));
    }
    Ok(fine)
}

/// Lower bound certificate for kernel regularity on a grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelCertificate {
    /// Fitted growth exponent of omega_1 against the gap.
    pub gamma_b: f64,
    /// Fitted growth exponent of omega_2 against the gap.
    pub gamma_sigma: f64,
    /// Exponent the local non-determinism ratio was tested against.
    pub lnd_h: f64,
    /// Minimum over grid pairs of (t-s)^{-2H} int_s^t K(t,r)^2 dr.
    pub lnd_constant: f64,
    /// Largest log-fit residual for omega_1, in log units.
    pub residual_b: f64,
    /// Largest log-fit residual for omega_2, in log units.
    pub residual_sigma: f64,
    /// Worst multiplicative deviation of either modulus from its power fit.
    pub max_relative_violation: f64,
    pub valid: bool,
}

const CERTIFY_QUAD_N: usize = 16;

/// Measures the local non-determinism constant and modulus growth exponents
/// of a kernel over all pairs of grid nodes. The exponent fits use, per gap,
/// the smallest modulus over all positions, restricted to gaps up to a
/// quarter of the horizon where the power-law regime is cleanest. The
/// certificate is valid when the constant is positive and no fitted modulus
/// deviates from its power law by more than `tolerance` (relative).
pub fn certify_kernel(
    spec: &KernelSpec,
    grid: &TimeGrid,
    h_hypothesis: f64,
    tolerance: f64,
) -> Result<KernelCertificate> {
    spec.validate()?;
    if !h_hypothesis.is_finite() || h_hypothesis <= 0.0 {
        return Err(Error::Domain(format!(
            "h_hypothesis must be positive, got {h_hypothesis}"
        )));
    }
    if !tolerance.is_finite() || tolerance <= 0.0 {
        return Err(Error::Domain(format!("tolerance must be positive, got {tolerance}")));
    }
    if matches!(spec.family, KernelFamily::FbmMolchanGolosov { .. }) {
        return Err(Error::Domain(
            "fbm_molchan_golosov has no pointwise kernel to certify".into(),
        ));
    }
    if matches!(spec.family, KernelFamily::QLog { .. }) && grid.horizon() >= 1.0 {
        return Err(Error::Domain(
            "qlog certification needs horizon < 1".into(),
        ));
    }
    let n = grid.n_steps();
    if n < 24 {
        return Err(Error::InsufficientData(format!(
            "certification needs at least 24 grid steps for a stable fit, got {n}"
        )));
    }

    let mut lnd = f64::INFINITY;
    let max_lag = n / 4;
    // Per gap the cleanest observation of the power law is the smallest
    // modulus over positions: late positions inflate omega with lower-order
    // boundary terms that bias the fitted slope at coarse resolution.
    let mut env1 = vec![f64::INFINITY; max_lag + 1];
    let mut env2 = vec![f64::INFINITY; max_lag + 1];
    for lag in 1..=n {
        for i in 0..=(n - lag) {
            let s = grid.node(i);
            let t = grid.node(i + lag);
            let gap = t - s;
            let d2 = diag_piece(spec, 2, s, t, CERTIFY_QUAD_N)?;
            let r = d2 / gap.powf(2.0 * h_hypothesis);
            if r < lnd {
                lnd = r;
            }
            if lag <= max_lag {
                let w1 = omega_once(spec, 1, s, t, CERTIFY_QUAD_N)?;
                let w2 = diff_piece(spec, 2, s, t, CERTIFY_QUAD_N)?.sqrt() + d2.sqrt();
                if w1 < env1[lag] {
                    env1[lag] = w1;
                }
                if w2 < env2[lag] {
                    env2[lag] = w2;
                }
            }
        }
    }

    let invalid = |lnd: f64| KernelCertificate {
        gamma_b: 0.0,
        gamma_sigma: 0.0,
        lnd_h: h_hypothesis,
        lnd_constant: lnd,
        residual_b: f64::INFINITY,
        residual_sigma: f64::INFINITY,
        max_relative_violation: f64::INFINITY,
        valid: false,
    };
    if !(lnd > 0.0)
        || env1[1..].iter().any(|&e| !(e > 0.0) || !e.is_finite())
        || env2[1..].iter().any(|&e| !(e > 0.0) || !e.is_finite())
    {
        return Ok(invalid(lnd.max(0.0)));
    }

    let xs: Vec<f64> = (1..=max_lag).map(|l| (l as f64 * grid.dt()).ln()).collect();
    let y1: Vec<f64> = (1..=max_lag).map(|l| env1[l].ln()).collect();
    let y2: Vec<f64> = (1..=max_lag).map(|l| env2[l].ln()).collect();
    let f1 = linear_fit(&xs, &y1)?;
    let f2 = linear_fit(&xs, &y2)?;
    let violation = (f1.max_abs_residual.max(f2.max_abs_residual)).exp() - 1.0;
    Ok(KernelCertificate {
        gamma_b: f1.slope,
        gamma_sigma: f2.slope,
        lnd_h: h_hypothesis,
        lnd_constant: lnd,
        residual_b: f1.max_abs_residual,
        residual_sigma: f2.max_abs_residual,
        max_relative_violation: violation,
        valid: lnd > 0.0 && violation <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    fn rl(h: f64) -> KernelSpec {
        KernelSpec::riemann_liouville(h, KernelRole::Diffusion).unwrap()
    }

    #[test]
    fn rl_pointwise_values() {
        let k = rl(0.5);
        assert!((eval_kernel(&k, 0.7, 0.2).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(eval_kernel(&k, 0.2, 0.7).unwrap(), 0.0);
        assert_eq!(eval_kernel(&k, 0.2, 0.2).unwrap(), 0.0);
        let k25 = rl(0.25);
        // 1/Gamma(3/4) to high precision.
        let want = 0.816_048_939_098_263_0;
        assert!((eval_kernel(&k25, 1.0, 0.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn rl_scaling_relation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for &h in &[0.1, 0.3, 0.45, 0.7] {
            let k = rl(h);
            for _ in 0..50 {
                let s: f64 = rng.gen_range(0.0..1.0);
                let t: f64 = s + rng.gen_range(1e-4..1.0);
                let lam: f64 = rng.gen_range(0.1..5.0);
                let lhs = eval_kernel(&k, lam * t, lam * s).unwrap();
                let rhs = lam.powf(h - 0.5) * eval_kernel(&k, t, s).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn qlog_and_log_values() {
        let k = KernelSpec::qlog(1.0, KernelRole::Diffusion).unwrap();
        // (0.25 * ln(4)^2)^{-1/2} = 1/ln(2).
        let got = eval_kernel(&k, 0.5, 0.25).unwrap();
        assert!((got - 1.442_695_040_888_963_4).abs() < 1e-13);
        assert!(eval_kernel(&k, 1.5, 0.2).is_err());
        let lf = KernelSpec::new(KernelFamily::LogFractional, KernelRole::Drift).unwrap();
        let got = eval_kernel(&lf, 0.9, 0.4).unwrap();
        assert!((got - 3.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn family_validation() {
        assert!(KernelSpec::riemann_liouville(0.0, KernelRole::Drift).is_err());
        assert!(KernelSpec::qlog(0.5, KernelRole::Drift).is_err());
        assert!(KernelSpec::new(
            KernelFamily::FbmMolchanGolosov { h: 1.0 },
            KernelRole::Diffusion
        )
        .is_err());
        let fbm = KernelSpec {
            family: KernelFamily::FbmMolchanGolosov { h: 0.3 },
            role: KernelRole::Diffusion,
        };
        assert!(eval_kernel(&fbm, 0.5, 0.2).is_err());
    }

    #[test]
    fn tabulated_bilinear_matches_plane() {
        // K(t,s) = t + 2s is reproduced exactly by bilinear interpolation.
        let t_nodes = vec![0.0, 0.5, 1.0];
        let s_nodes = vec![0.0, 0.25, 1.0];
        let mut values = Vec::new();
        for &t in &t_nodes {
            for &s in &s_nodes {
                values.push(t + 2.0 * s);
            }
        }
        let spec = KernelSpec::new(
            KernelFamily::Tabulated {
                t_nodes,
                s_nodes,
                values,
            },
            KernelRole::Diffusion,
        )
        .unwrap();
        let got = eval_kernel(&spec, 0.8, 0.3).unwrap();
        assert!((got - (0.8 + 0.6)).abs() < 1e-12);
        assert_eq!(eval_kernel(&spec, 0.3, 0.8).unwrap(), 0.0);
        assert!(eval_kernel(&spec, 1.2, 0.1).is_err());
    }

    #[test]
    fn modulus_closed_forms() {
        let c = KernelSpec::constant(1.0, KernelRole::Drift).unwrap();
        assert!((modulus_omega(&c, 1.0, 0.3, 0.8, 16).unwrap() - 0.5).abs() < 1e-12);
        let k = rl(0.5);
        let got = modulus_omega(&k, 2.0, 0.0, 0.5, 16).unwrap();
        assert!((got - 0.5f64.sqrt()).abs() < 1e-12);
        let k3 = rl(0.3);
        let got = modulus_omega(&k3, 2.0, 0.0, 1.0, 16).unwrap();
        assert!((got - 1.229_621_338_324_261_3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn modulus_quadrature_oracles() {
        // Reference values from high-precision quadrature of the defining
        // integrals, frozen here.
        let k3 = rl(0.3);
        let got = modulus_omega(&k3, 2.0, 0.4, 0.9, 16).unwrap();
        assert!(
            (got - 1.202_759_946_271_308_3).abs() < 2e-5,
            "rl omega2 got {got}"
        );
        let q = KernelSpec::qlog(1.0, KernelRole::Diffusion).unwrap();
        let got = modulus_omega(&q, 1.0, 0.0, 0.25, 16).unwrap();
        assert!(
            (got - 0.378_671_043_061_088).abs() < 2e-4,
            "qlog omega1 diag got {got}"
        );
        let got = modulus_omega(&q, 2.0, 0.25, 0.3, 16).unwrap();
        assert!(
            (got - 0.962_653_068_690_310_3).abs() < 5e-5,
            "qlog omega2 got {got}"
        );
    }

    #[test]
    fn modulus_degenerate_and_bad_args() {
        let k = rl(0.3);
        assert_eq!(modulus_omega(&k, 2.0, 0.4, 0.4, 16).unwrap(), 0.0);
        assert!(modulus_omega(&k, 3.0, 0.0, 1.0, 16).is_err());
        assert!(modulus_omega(&k, 2.0, 0.5, 0.4, 16).is_err());
        assert!(modulus_omega(&k, 2.0, 0.0, 1.0, 8).is_err());
        let q = KernelSpec::qlog(1.0, KernelRole::Diffusion).unwrap();
        assert!(modulus_omega(&q, 2.0, 0.5, 1.2, 16).is_err());
    }

    #[test]
    fn modulus_monotone_in_t() {
        for spec in [rl(0.3), KernelSpec::qlog(1.0, KernelRole::Diffusion).unwrap()] {
            let s = 0.1;
            let mut prev = 0.0;
            for i in 1..10 {
                let t = s + 0.08 * i as f64;
                let w = modulus_omega(&spec, 2.0, s, t, 16).unwrap();
                assert!(w >= prev - 1e-9, "omega_2 dipped at t={t}");
                prev = w;
            }
        }
    }

    #[test]
    fn certificate_riemann_liouville() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let cert = certify_kernel(&rl(0.3), &grid, 0.3, 0.1).unwrap();
        assert!(cert.valid, "violation {}", cert.max_relative_violation);
        assert!((cert.lnd_constant - 1.229_621_338_324_261_3).abs() < 1e-10 * 1.23);
        assert!(
            (cert.gamma_sigma - 0.3).abs() <= 0.05,
            "gamma_sigma {}",
            cert.gamma_sigma
        );
        assert!(
            (cert.gamma_b - 0.8).abs() <= 0.05,
            "gamma_b {}",
            cert.gamma_b
        );
    }

    #[test]
    fn certificate_constant_kernel() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let cert = certify_kernel(
            &KernelSpec::constant(1.0, KernelRole::Diffusion).unwrap(),
            &grid,
            0.5,
            0.01,
        )
        .unwrap();
        assert!(cert.valid);
        assert!((cert.lnd_constant - 1.0).abs() < 1e-12);
        assert!((cert.gamma_sigma - 0.5).abs() < 1e-8);
        assert!((cert.gamma_b - 1.0).abs() < 1e-8);
    }

    #[test]
    fn certificate_qlog() {
        let grid = TimeGrid::new(0.5, 48).unwrap();
        let q = KernelSpec::qlog(1.0, KernelRole::Diffusion).unwrap();
        let cert = certify_kernel(&q, &grid, 0.5, 0.1).unwrap();
        assert!(
            cert.valid,
            "lnd {} violation {}",
            cert.lnd_constant, cert.max_relative_violation
        );
        assert!(cert.lnd_constant > 0.0);
    }

    #[test]
    fn certificate_zero_kernel_is_invalid_not_panic() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let cert = certify_kernel(
            &KernelSpec::constant(0.0, KernelRole::Drift).unwrap(),
            &grid,
            0.5,
            0.1,
        )
        .unwrap();
        assert!(!cert.valid);
    }

    #[test]
    fn cell_average_matches_quadrature() {
        let h = 0.3;
        let dt = 1.0 / 256.0;
        let want = rl_cell_average(h, dt);
        let g = |u: f64| u.powf(h - 0.5) / gamma(h + 0.5);
        let got = crate::quad::integrate_singular0(&g, dt, 16).unwrap() / dt;
        assert!((got - want).abs() < 1e-6 * want);
    }
}

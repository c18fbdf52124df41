//! Riemann-sum sewing driver for one-parameter germs.
//!
//! A germ assigns a d-vector A_{s,t} to each interval with A_{s,s} = 0.
//! Summing germ evaluations over dyadic partitions of [s,t] and refining
//! produces a limit whenever the defect
//!
//! delta_r A_{s,t} = A_{s,t} - A_{s,r} - A_{r,t}
//!
//! is small in the declared kappa_1 / kappa_2 senses; the dyadic Cauchy
//! differences then decay at rate min(kappa_1 - 1, kappa_2 - 1/2) per
//! level, which `sewing_rate` measures by regression.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinFit};
use crate::grid::SamplePath;

/// Ambient data a germ may consult during evaluation.
#[derive(Clone, Copy, Default)]
pub struct GermContext<'a> {
    pub path: Option<&'a SamplePath>,
}

impl<'a> GermContext<'a> {
    pub fn empty() -> Self {
        GermContext { path: None }
    }

    pub fn with_path(path: &'a SamplePath) -> Self {
        GermContext { path: Some(path) }
    }
}

type GermFn = dyn Fn(f64, f64, &GermContext) -> Vec<f64> + Send + Sync;

/// Interval germ with declared regularity exponents.
#[derive(Clone)]
pub struct Germ1D {
    dim: usize,
    declared_kappa1: Option<f64>,
    declared_kappa2: f64,
    eval: Arc<GermFn>,
}

impl Germ1D {
    /// Germ from a closure; exponents default to kappa_1 = none,
    /// kappa_2 = 1. The closure must vanish on degenerate intervals.
    pub fn new<F>(dim: usize, eval: F) -> Result<Self>
    where
        F: Fn(f64, f64, &GermContext) -> Vec<f64> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::Domain("germ dimension must be positive".into()));
        }
        Ok(Germ1D {
            dim,
            declared_kappa1: None,
            declared_kappa2: 1.0,
            eval: Arc::new(eval),
        })
    }

    /// Declares (kappa_1, kappa_2); kappa_1 must exceed 1 when present and
    /// kappa_2 must exceed 1/2.
    pub fn with_exponents(mut self, kappa1: Option<f64>, kappa2: f64) -> Result<Self> {
        if let Some(k1) = kappa1 {
            if !(k1 > 1.0) {
                return Err(Error::Domain(format!("kappa_1 must exceed 1, got {k1}")));
            }
        }
        if !(kappa2 > 0.5) {
            return Err(Error::Domain(format!("kappa_2 must exceed 1/2, got {kappa2}")));
        }
        self.declared_kappa1 = kappa1;
        self.declared_kappa2 = kappa2;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn declared_kappa1(&self) -> Option<f64> {
        self.declared_kappa1
    }

    pub fn declared_kappa2(&self) -> f64 {
        self.declared_kappa2
    }

    /// Dyadic Cauchy rate implied by the declared exponents.
    pub fn expected_rate(&self) -> f64 {
        let from_k2 = self.declared_kappa2 - 0.5;
        match self.declared_kappa1 {
            Some(k1) => (k1 - 1.0).min(from_k2),
            None => from_k2,
        }
    }

    pub fn evaluate(&self, s: f64, t: f64, ctx: &GermContext) -> Vec<f64> {
        (self.eval)(s, t, ctx)
    }
}

/// Frozen-coefficient occupation germ of a scalar Brownian path at
/// frequency xi, as a (re, im) pair:
///
/// A_{u,v} = e^{i xi X_u} (2/xi^2)(1 - e^{-(v-u) xi^2 / 2}).
///
/// Evaluation reads the path from the context and requires u on the grid.
pub fn frozen_brownian_germ(xi: f64) -> Result<Germ1D> {
    if !(xi != 0.0) || !xi.is_finite() {
        return Err(Error::Domain(format!("frequency must be nonzero, got {xi}")));
    }
    Germ1D::new(2, move |u, v, ctx| {
        let path = ctx
            .path
            .expect("frozen Brownian germ evaluated without a path context");
        let node = path
            .grid()
            .index_of(u)
            .expect("frozen Brownian germ evaluated off the path grid");
        let x = path.value(node)[0];
        let (sphase, cphase) = (xi * x).sin_cos();
        let amp = 2.0 / (xi * xi) * (1.0 - (-(v - u) * xi * xi / 2.0).exp());
        vec![amp * cphase, amp * sphase]
    })?
    .with_exponents(None, 0.95)
}

fn add_assign(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src.iter()) {
        *a += b;
    }
}

/// Sums rows with a pairwise tree fixed by index, independent of thread
/// scheduling.
pub(crate) fn pairwise_sum(mut rows: Vec<Vec<f64>>, dim: usize) -> Vec<f64> {
    if rows.is_empty() {
        return vec![0.0; dim];
    }
    while rows.len() > 1 {
        let mut next = Vec::with_capacity(rows.len().div_ceil(2));
        let mut it = rows.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                add_assign(&mut a, &b);
            }
            next.push(a);
        }
        rows = next;
    }
    rows.pop().unwrap()
}

pub const MAX_SEWING_LEVEL: u32 = 16;

/// Sum of germ evaluations over the dyadic partition of [s,t] at the given
/// level (2^level cells).
pub fn sewing_sum(
    germ: &Germ1D,
    s: f64,
    t: f64,
    level: u32,
    ctx: &GermContext,
) -> Result<Vec<f64>> {
    if !s.is_finite() || !t.is_finite() || s > t {
        return Err(Error::Domain(format!("invalid interval [{s}, {t}]")));
    }
    if level > MAX_SEWING_LEVEL {
        return Err(Error::Domain(format!(
            "level {level} exceeds the maximum {MAX_SEWING_LEVEL}"
        )));
    }
    if s == t {
        return Ok(vec![0.0; germ.dim()]);
    }
    let cells = 1usize << level;
    let h = (t - s) / cells as f64;
    let rows: Vec<Vec<f64>> = (0..cells)
        .into_par_iter()
        .map(|j| {
            let u = s + j as f64 * h;
            let v = if j + 1 == cells { t } else { s + (j + 1) as f64 * h };
            germ.evaluate(u, v, ctx)
        })
        .collect();
    Ok(pairwise_sum(rows, germ.dim()))
}

/// Sewing defect delta_r A_{s,t} = A_{s,t} - A_{s,r} - A_{r,t}.
pub fn delta_defect(germ: &Germ1D, s: f64, r: f64, t: f64, ctx: &GermContext) -> Vec<f64> {
    let mut out = germ.evaluate(s, t, ctx);
    let left = germ.evaluate(s, r, ctx);
    let right = germ.evaluate(r, t, ctx);
    for ((o, l), rr) in out.iter_mut().zip(left.iter()).zip(right.iter()) {
        *o -= l + rr;
    }
    out
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Measured dyadic Cauchy behavior of a germ over an interval.
#[derive(Clone, Debug)]
pub enum SewingRate {
    /// Successive-level differences vanish to rounding: additive germ.
    Exact,
    /// Fitted decay: differences behave like C 2^{-rate * level}.
    Fitted {
        rate: f64,
        fit: LinFit,
        levels: Vec<u32>,
        diffs: Vec<f64>,
    },
}

impl SewingRate {
    pub fn is_exact(&self) -> bool {
        matches!(self, SewingRate::Exact)
    }

    pub fn rate(&self) -> Option<f64> {
        match self {
            SewingRate::Exact => None,
            SewingRate::Fitted { rate, .. } => Some(*rate),
        }
    }
}

/// Regresses log2 of successive-level sum differences on the level over
/// `levels` (at least 4 consecutive levels); reports Exact when all
/// differences sit at rounding scale.
pub fn sewing_rate(
    germ: &Germ1D,
    s: f64,
    t: f64,
    levels: std::ops::Range<u32>,
    ctx: &GermContext,
) -> Result<SewingRate> {
    let lv: Vec<u32> = levels.collect();
    if lv.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} levels for rate regression, need at least 4",
            lv.len()
        )));
    }
    let sums: Vec<Vec<f64>> = lv
        .iter()
        .map(|&l| sewing_sum(germ, s, t, l, ctx))
        .collect::<Result<_>>()?;
    let scale = 1.0 + sums.iter().map(|v| l2(v)).fold(0.0, f64::max);
    let mut dl = Vec::new();
    let mut dd = Vec::new();
    let mut all_exact = true;
    for w in 0..sums.len() - 1 {
        let diff: Vec<f64> = sums[w + 1]
            .iter()
            .zip(sums[w].iter())
            .map(|(a, b)| a - b)
            .collect();
        let d = l2(&diff);
        if d > 1e-14 * scale {
            all_exact = false;
            dl.push(lv[w] as f64);
            dd.push(d.log2());
        }
    }
    if all_exact {
        return Ok(SewingRate::Exact);
    }
    if dl.len() < 3 {
        return Err(Error::InsufficientData(
            "fewer than 3 usable Cauchy differences for the rate fit".into(),
        ));
    }
    let fit = linear_fit(&dl, &dd)?;
    Ok(SewingRate::Fitted {
        rate: -fit.slope,
        fit,
        levels: lv,
        diffs: dd.iter().map(|y| y.exp2()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::occupation::{occupation_ft, SpectralGrid};
    use crate::simulate::brownian_path;

    fn riemann_germ<F>(f: F) -> Germ1D
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Germ1D::new(1, move |u, v, _| vec![f(u) * (v - u)]).unwrap()
    }

    fn additive_germ<F>(f: F) -> Germ1D
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Germ1D::new(1, move |u, v, _| vec![f(v) - f(u)]).unwrap()
    }

    #[test]
    fn riemann_germ_converges_to_integral() {
        let germ = riemann_germ(|r| r);
        let ctx = GermContext::empty();
        let (s, t) = (0.0, 1.0);
        let sum = sewing_sum(&germ, s, t, 10, &ctx).unwrap();
        let exact = (t * t - s * s) / 2.0;
        assert!((sum[0] - exact).abs() <= 2f64.powi(-10) * t * t);
        // Left Riemann error for f(r) = r is (t-s)^2 2^{-L-1} exactly.
        let want_err = (t - s) * (t - s) * 2f64.powi(-11);
        assert!(((exact - sum[0]) - want_err).abs() < 1e-12);
    }

    #[test]
    fn additive_germ_telescopes() {
        let germ = additive_germ(f64::sin);
        let ctx = GermContext::empty();
        let (s, t) = (0.2f64, 1.4f64);
        let exact = t.sin() - s.sin();
        for level in 0..=8 {
            let sum = sewing_sum(&germ, s, t, level, &ctx).unwrap();
            assert!((sum[0] - exact).abs() < 1e-13);
        }
        let rate = sewing_rate(&germ, s, t, 3..9, &ctx).unwrap();
        assert!(rate.is_exact());
    }

    #[test]
    fn riemann_rate_is_one() {
        let ctx = GermContext::empty();
        let linear = riemann_germ(|r| r);
        match sewing_rate(&linear, 0.0, 1.0, 4..10, &ctx).unwrap() {
            SewingRate::Fitted { rate, fit, .. } => {
                assert!((rate - 1.0).abs() < 1e-6, "rate {rate}");
                assert!(fit.r_squared > 1.0 - 1e-9);
            }
            SewingRate::Exact => panic!("Riemann germ is not additive"),
        }
        let smooth = riemann_germ(f64::cos);
        let rate = sewing_rate(&smooth, 0.0, 1.0, 4..10, &ctx)
            .unwrap()
            .rate()
            .unwrap();
        assert!(rate >= 0.99, "rate {rate}");
    }

    #[test]
    fn defect_characterizes_additivity() {
        let ctx = GermContext::empty();
        let additive = additive_germ(|r| (1.3 * r).cos());
        for j in 0..20 {
            let s = 0.05 * j as f64;
            let r = s + 0.3;
            let t = r + 0.45;
            let d = delta_defect(&additive, s, r, t, &ctx);
            assert!(d[0].abs() < 1e-15);
        }
        let nonadd = riemann_germ(|r| r);
        let d = delta_defect(&nonadd, 0.0, 0.5, 1.0, &ctx);
        assert!(d[0].abs() > 0.1);
    }

    #[test]
    fn anchor_offset_within_cauchy_envelope() {
        let ctx = GermContext::empty();
        let germ = riemann_germ(f64::cos);
        let direct = sewing_sum(&germ, 0.0, 1.0, 10, &ctx).unwrap();
        let left = sewing_sum(&germ, 0.0, 1.0 / 3.0, 10, &ctx).unwrap();
        let right = sewing_sum(&germ, 1.0 / 3.0, 1.0, 10, &ctx).unwrap();
        let split = left[0] + right[0];
        let envelope = match sewing_rate(&germ, 0.0, 1.0, 4..10, &ctx).unwrap() {
            SewingRate::Fitted { fit, .. } => (fit.intercept + fit.slope * 10.0).exp2(),
            SewingRate::Exact => 0.0,
        };
        assert!((direct[0] - split).abs() <= 16.0 * envelope + 1e-13);
        assert!((direct[0] - 1f64.sin()).abs() < 1e-3);
    }

    #[test]
    fn frozen_brownian_sum_matches_occupation_transform() {
        let n = 4096usize;
        let grid = TimeGrid::new(1.0, n).unwrap();
        let xi = 8.0;
        let germ = frozen_brownian_germ(xi).unwrap();
        let spectral = SpectralGrid::new(vec![xi], vec![1.0], 1).unwrap();
        for seed in 1..=3u64 {
            let path = brownian_path(&grid, 1, seed, 0);
            let ctx = GermContext::with_path(&path);
            let w = vec![1.0; grid.n_nodes()];
            let ft =
                occupation_ft(&path, &w, 0.0, &spectral, &[(0.0, 1.0), (0.25, 0.75)]).unwrap();
            let full = sewing_sum(&germ, 0.0, 1.0, 12, &ctx).unwrap();
            let v = ft.value(0, 0);
            assert!(
                ((full[0] - v.re).powi(2) + (full[1] - v.im).powi(2)).sqrt() < 5e-3,
                "seed {seed}"
            );
            let win = sewing_sum(&germ, 0.25, 0.75, 11, &ctx).unwrap();
            let vw = ft.value(1, 0);
            assert!(((win[0] - vw.re).powi(2) + (win[1] - vw.im).powi(2)).sqrt() < 5e-3);
        }
    }

    #[test]
    fn frozen_brownian_rate_is_positive() {
        let n = 4096usize;
        let grid = TimeGrid::new(1.0, n).unwrap();
        let germ = frozen_brownian_germ(8.0).unwrap();
        let mut rates = Vec::new();
        for seed in 0..50u64 {
            let path = brownian_path(&grid, 1, 900, seed);
            let ctx = GermContext::with_path(&path);
            let rate = sewing_rate(&germ, 0.0, 1.0, 6..12, &ctx)
                .unwrap()
                .rate()
                .unwrap();
            assert!(rate.is_finite());
            rates.push(rate);
        }
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        assert!(
            mean >= germ.expected_rate() - 0.05,
            "mean rate {mean} vs expected {}",
            germ.expected_rate()
        );
    }

    #[test]
    fn validation_errors() {
        let germ = riemann_germ(|r| r);
        let ctx = GermContext::empty();
        assert!(sewing_sum(&germ, 1.0, 0.0, 4, &ctx).is_err());
        assert!(sewing_sum(&germ, 0.0, 1.0, 17, &ctx).is_err());
        let zero = sewing_sum(&germ, 0.5, 0.5, 4, &ctx).unwrap();
        assert_eq!(zero[0], 0.0);
        assert!(sewing_rate(&germ, 0.0, 1.0, 4..7, &ctx).is_err());
        assert!(Germ1D::new(0, |_, _, _: &GermContext| vec![]).is_err());
        assert!(riemann_germ(|r| r).with_exponents(Some(0.9), 1.0).is_err());
        assert!(riemann_germ(|r| r).with_exponents(None, 0.4).is_err());
        assert!(frozen_brownian_germ(0.0).is_err());
    }
}

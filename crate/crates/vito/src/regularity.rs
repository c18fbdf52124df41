//! Predicted and measured regularity exponents of occupation measures.
//!
//! The prediction side evaluates the regularity index
//!
//! kappa*(eta) = (zeta + eta)^{-1} min{ (1 ^ delta) chi (1 + eta/H),
//!                                      eta (zeta/H - 1) },
//!
//! which collapses to (eta/(zeta+eta))(zeta/H - 1) when the weight carries
//! no increment information (delta = 0). The measurement side estimates
//! L^p(Omega) moments of occupation transforms over a path ensemble with
//! block-jackknife error bars and fits decay exponents in log-log space.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::grid::SamplePath;
use crate::occupation::{occupation_ft, OccupationFt, SpectralGrid};
use crate::simulate::WeightProcess;

/// Predicted Fourier-Lebesgue regularity of a weighted occupation measure.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RegularityPrediction {
    pub h: f64,
    pub zeta: f64,
    pub eta: f64,
    pub delta: f64,
    pub chi: f64,
    pub kappa_star: f64,
}

/// Evaluates the regularity index kappa*(eta).
pub fn predict_kappa(
    h: f64,
    zeta: f64,
    eta: f64,
    delta: f64,
    chi: f64,
) -> Result<RegularityPrediction> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("H must be positive, got {h}")));
    }
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::Domain(format!("eta must lie in (0, 1/2), got {eta}")));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be nonnegative, got {delta}")));
    }
    if !(0.0..=1.0).contains(&chi) {
        return Err(Error::Domain(format!("chi must lie in [0,1], got {chi}")));
    }
    if !(zeta > h) {
        return Err(Error::Domain(format!(
            "zeta <= H: no smoothing regime (zeta={zeta}, H={h})"
        )));
    }
    let second = eta * (zeta / h - 1.0);
    let kappa_star = if delta == 0.0 {
        second / (zeta + eta)
    } else {
        let first = delta.min(1.0) * chi * (1.0 + eta / h);
        first.min(second) / (zeta + eta)
    };
    Ok(RegularityPrediction {
        h,
        zeta,
        eta,
        delta,
        chi,
        kappa_star,
    })
}

/// Largest kappa*(eta) over an eta grid in (0, 1/2); the measured decay is
/// compared against the best available prediction.
pub fn best_kappa_over_eta(
    h: f64,
    zeta: f64,
    delta: f64,
    chi: f64,
    etas: &[f64],
) -> Result<RegularityPrediction> {
    let mut best: Option<RegularityPrediction> = None;
    for &eta in etas {
        let p = predict_kappa(h, zeta, eta, delta, chi)?;
        if best.map_or(true, |b| p.kappa_star > b.kappa_star) {
            best = Some(p);
        }
    }
    best.ok_or_else(|| Error::InsufficientData("empty eta grid".into()))
}

/// Log-log decay fit of a moment curve against 1 + |xi|.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    /// Negated slope: moment ~ C (1+|xi|)^{-exponent}.
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub xi_range: (f64, f64),
    pub p_moment: f64,
}

/// Monte Carlo L^p moments of an occupation-transform ensemble.
#[derive(Clone, Debug)]
pub struct EnsembleMoments {
    pub p: f64,
    pub n_paths: usize,
    pub n_pairs: usize,
    pub nk: usize,
    /// Pair-major moment estimates, (M^{-1} sum |v|^p)^{1/p}.
    pub moments: Vec<f64>,
    /// Block-jackknife standard errors, same layout.
    pub std_errors: Vec<f64>,
    pub pair_times: Vec<(f64, f64)>,
}

impl EnsembleMoments {
    pub fn curve(&self, pair: usize) -> &[f64] {
        &self.moments[pair * self.nk..(pair + 1) * self.nk]
    }

    pub fn errors(&self, pair: usize) -> &[f64] {
        &self.std_errors[pair * self.nk..(pair + 1) * self.nk]
    }
}

/// Complex ensemble means of occupation transforms with jackknife errors.
#[derive(Clone, Debug)]
pub struct EnsembleMeanCurve {
    pub n_paths: usize,
    pub n_pairs: usize,
    pub nk: usize,
    pub means: Vec<Complex64>,
    pub std_errors: Vec<f64>,
    pub pair_times: Vec<(f64, f64)>,
}

impl EnsembleMeanCurve {
    pub fn curve(&self, pair: usize) -> &[Complex64] {
        &self.means[pair * self.nk..(pair + 1) * self.nk]
    }

    pub fn errors(&self, pair: usize) -> &[f64] {
        &self.std_errors[pair * self.nk..(pair + 1) * self.nk]
    }
}

fn check_ensemble_shape(ensemble: &[OccupationFt], min_size: usize) -> Result<(usize, usize)> {
    if ensemble.len() < min_size {
        return Err(Error::InsufficientData(format!(
            "ensemble of {} transforms, need at least {min_size}",
            ensemble.len()
        )));
    }
    let n_pairs = ensemble[0].n_pairs();
    let nk = ensemble[0].spectral.len();
    for ft in ensemble.iter().skip(1) {
        if ft.n_pairs() != n_pairs || ft.spectral.len() != nk {
            return Err(Error::Domain(
                "ensemble members have mismatched pair or frequency layouts".into(),
            ));
        }
    }
    Ok((n_pairs, nk))
}

/// Near-equal contiguous jackknife blocks targeting 100 paths per block.
fn jackknife_bounds(m: usize) -> Vec<(usize, usize)> {
    let b = (m / 100).max(2);
    (0..b)
        .map(|j| (j * m / b, (j + 1) * m / b))
        .collect()
}

/// L^p(Omega) moment curve of an ensemble with block-jackknife errors.
pub fn lp_moment_curve(ensemble: &[OccupationFt], p: f64) -> Result<EnsembleMoments> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("moment order must satisfy p >= 1, got {p}")));
    }
    let (n_pairs, nk) = check_ensemble_shape(ensemble, 100)?;
    let m = ensemble.len();
    let total = n_pairs * nk;
    let rows: Vec<Vec<f64>> = ensemble
        .par_iter()
        .map(|ft| ft.values.iter().map(|v| v.norm().powf(p)).collect())
        .collect();
    let blocks = jackknife_bounds(m);
    let b = blocks.len();
    let mut block_sums = vec![0.0f64; b * total];
    for (j, &(lo, hi)) in blocks.iter().enumerate() {
        let dst = &mut block_sums[j * total..(j + 1) * total];
        for row in &rows[lo..hi] {
            for (slot, v) in dst.iter_mut().zip(row.iter()) {
                *slot += v;
            }
        }
    }
    let mut moments = vec![0.0f64; total];
    let mut std_errors = vec![0.0f64; total];
    for e in 0..total {
        let s_total: f64 = (0..b).map(|j| block_sums[j * total + e]).sum();
        let theta = (s_total / m as f64).powf(1.0 / p);
        moments[e] = theta;
        let mut acc = 0.0;
        for (j, &(lo, hi)) in blocks.iter().enumerate() {
            let rest = (s_total - block_sums[j * total + e]) / (m - (hi - lo)) as f64;
            let d = rest.powf(1.0 / p) - theta;
            acc += d * d;
        }
        std_errors[e] = ((b as f64 - 1.0) / b as f64 * acc).sqrt();
    }
    Ok(EnsembleMoments {
        p,
        n_paths: m,
        n_pairs,
        nk,
        moments,
        std_errors,
        pair_times: ensemble[0].pair_times.clone(),
    })
}

/// Complex mean curve of an ensemble with block-jackknife errors.
pub fn mean_curve(ensemble: &[OccupationFt]) -> Result<EnsembleMeanCurve> {
    let (n_pairs, nk) = check_ensemble_shape(ensemble, 100)?;
    let m = ensemble.len();
    let total = n_pairs * nk;
    let blocks = jackknife_bounds(m);
    let b = blocks.len();
    let mut block_sums = vec![Complex64::new(0.0, 0.0); b * total];
    for (j, &(lo, hi)) in blocks.iter().enumerate() {
        let dst = &mut block_sums[j * total..(j + 1) * total];
        for ft in &ensemble[lo..hi] {
            for (slot, v) in dst.iter_mut().zip(ft.values.iter()) {
                *slot += v;
            }
        }
    }
    let mut means = vec![Complex64::new(0.0, 0.0); total];
    let mut std_errors = vec![0.0f64; total];
    for e in 0..total {
        let s_total: Complex64 = (0..b).map(|j| block_sums[j * total + e]).sum();
        let theta = s_total / m as f64;
        means[e] = theta;
        let mut acc = 0.0;
        for (j, &(lo, hi)) in blocks.iter().enumerate() {
            let rest = (s_total - block_sums[j * total + e]) / (m - (hi - lo)) as f64;
            acc += (rest - theta).norm_sqr();
        }
        std_errors[e] = ((b as f64 - 1.0) / b as f64 * acc).sqrt();
    }
    Ok(EnsembleMeanCurve {
        n_paths: m,
        n_pairs,
        nk,
        means,
        std_errors,
        pair_times: ensemble[0].pair_times.clone(),
    })
}

/// Occupation transforms of many paths in parallel (same weight process,
/// delta, spectral grid, and windows for each).
pub fn occupation_ensemble(
    paths: &[SamplePath],
    weight: &WeightProcess,
    delta: f64,
    spectral: &SpectralGrid,
    pairs: &[(f64, f64)],
) -> Result<Vec<OccupationFt>> {
    paths
        .par_iter()
        .map(|p| {
            let w = weight.eval_along(p);
            occupation_ft(p, &w, delta, spectral, pairs)
        })
        .collect()
}

/// Fits moment ~ C (1+|xi|)^{-exponent} over frequencies with magnitude in
/// [xi_min, xi_max]; needs at least 6 such frequencies.
pub fn fit_decay(
    curve: &[f64],
    spectral: &SpectralGrid,
    xi_min: f64,
    xi_max: f64,
    p_moment: f64,
) -> Result<DecayFit> {
    if curve.len() != spectral.len() {
        return Err(Error::Domain(format!(
            "{} curve values on a {}-point spectral grid",
            curve.len(),
            spectral.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &v) in curve.iter().enumerate() {
        let mag = spectral.magnitude(k);
        if mag < xi_min || mag > xi_max {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "non-positive moment {v} at |xi| = {mag} inside the fit window"
            )));
        }
        xs.push((1.0 + mag).ln());
        ys.push(v.ln());
    }
    if xs.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "{} frequencies in [{xi_min}, {xi_max}], need at least 6",
            xs.len()
        )));
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(DecayFit {
        exponent: -fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        xi_range: (xi_min, xi_max),
        p_moment,
    })
}

/// Slope of log(moment) against log(t-s) across nested windows at fixed
/// frequency; needs at least 5 gap sizes.
pub fn fit_time_exponent(gaps: &[f64], moments: &[f64]) -> Result<f64> {
    if gaps.len() != moments.len() {
        return Err(Error::Domain(format!(
            "{} gaps vs {} moments",
            gaps.len(),
            moments.len()
        )));
    }
    if gaps.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} gap sizes, need at least 5",
            gaps.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&g, &v) in gaps.iter().zip(moments.iter()) {
        if !(g > 0.0) || !(v > 0.0) {
            return Err(Error::Domain(
                "gaps and moments must be positive for the log fit".into(),
            ));
        }
        xs.push(g.ln());
        ys.push(v.ln());
    }
    Ok(linear_fit(&xs, &ys)?.slope)
}

/// Empirical characteristic function of a weighted terminal law.
#[derive(Clone, Debug)]
pub struct CharFnDecay {
    /// |E sigma_*(X_t)^delta e^{i xi X_t}| per spectral point.
    pub curve: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fit: DecayFit,
}

/// Estimates the modulus of the weighted characteristic function at time t
/// over a path ensemble and fits its spatial decay on [xi_min, xi_max].
pub fn char_fn_decay(
    paths: &[SamplePath],
    t: f64,
    weight: &WeightProcess,
    delta: f64,
    spectral: &SpectralGrid,
    xi_min: f64,
    xi_max: f64,
) -> Result<CharFnDecay> {
    let m = paths.len();
    if m < 1000 {
        return Err(Error::InsufficientData(format!(
            "characteristic function estimation needs at least 1000 paths, got {m}"
        )));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be nonnegative, got {delta}")));
    }
    let node = paths[0].grid().index_of(t)?;
    let dim = paths[0].dim();
    if spectral.dim() != dim {
        return Err(Error::Domain(
            "spectral dimension does not match path dimension".into(),
        ));
    }
    let nk = spectral.len();
    let rows: Vec<Vec<Complex64>> = paths
        .par_iter()
        .map(|p| {
            let w = weight.eval_along(p)[node].powf(delta);
            (0..nk)
                .map(|k| {
                    let dot: f64 = spectral
                        .point(k)
                        .iter()
                        .zip(p.value(node))
                        .map(|(a, b)| a * b)
                        .sum();
                    let (s, c) = dot.sin_cos();
                    w * Complex64::new(c, s)
                })
                .collect()
        })
        .collect();
    let blocks = jackknife_bounds(m);
    let b = blocks.len();
    let mut block_sums = vec![Complex64::new(0.0, 0.0); b * nk];
    for (j, &(lo, hi)) in blocks.iter().enumerate() {
        let dst = &mut block_sums[j * nk..(j + 1) * nk];
        for row in &rows[lo..hi] {
            for (slot, v) in dst.iter_mut().zip(row.iter()) {
                *slot += v;
            }
        }
    }
    let mut curve = vec![0.0f64; nk];
    let mut std_errors = vec![0.0f64; nk];
    for k in 0..nk {
        let s_total: Complex64 = (0..b).map(|j| block_sums[j * nk + k]).sum();
        let theta = s_total / m as f64;
        curve[k] = theta.norm();
        let mut acc = 0.0;
        for (j, &(lo, hi)) in blocks.iter().enumerate() {
            let rest = (s_total - block_sums[j * nk + k]) / (m - (hi - lo)) as f64;
            acc += (rest - theta).norm_sqr();
        }
        std_errors[k] = ((b as f64 - 1.0) / b as f64 * acc).sqrt();
    }
    let fit = fit_decay(&curve, spectral, xi_min, xi_max, 1.0)?;
    Ok(CharFnDecay {
        curve,
        std_errors,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::simulate::brownian_path;

    #[test]
    fn kappa_star_reference_cases() {
        // delta = 0, zeta = 2H: kappa* = eta/(2H + eta).
        for &h in &[0.2, 0.35] {
            let p = predict_kappa(h, 2.0 * h, 0.4, 0.0, 1.0).unwrap();
            assert!((p.kappa_star - 0.4 / (2.0 * h + 0.4)).abs() < 1e-14);
        }
        // Perturbation form: (zeta/(zeta+eta)) eta/H - eta/(zeta+eta).
        let (h, zeta, eta) = (0.3, 0.9, 0.25);
        let p = predict_kappa(h, zeta, eta, 0.0, 1.0).unwrap();
        let alt = zeta / (zeta + eta) * (eta / h) - eta / (zeta + eta);
        assert!((p.kappa_star - alt).abs() < 1e-14);
        // Power-diffusion form: eta*theta/(H(1+theta)+eta) when the second
        // branch is active.
        let (h, theta, eta) = (0.25, 0.5, 0.3);
        let zeta = h * (1.0 + theta);
        let p = predict_kappa(h, zeta, eta, eta / h, 1.0).unwrap();
        assert!((p.kappa_star - eta * theta / (zeta + eta)).abs() < 1e-14);
    }

    #[test]
    fn kappa_star_domain_errors() {
        assert!(predict_kappa(0.3, 0.2, 0.3, 0.0, 1.0).is_err());
        assert!(predict_kappa(0.3, 0.3, 0.3, 0.0, 1.0).is_err());
        assert!(predict_kappa(0.3, 0.6, 0.6, 0.0, 1.0).is_err());
        assert!(predict_kappa(0.3, 0.6, 0.3, -0.1, 1.0).is_err());
        assert!(predict_kappa(0.3, 0.6, 0.3, 0.0, 1.5).is_err());
    }

    #[test]
    fn kappa_star_limits_and_monotonicity() {
        let (h, zeta) = (0.3, 0.75);
        let mut prev = 0.0;
        for j in 1..=40 {
            let eta = 0.012 * j as f64;
            let k = predict_kappa(h, zeta, eta, 0.0, 1.0).unwrap().kappa_star;
            assert!(k > prev, "not monotone at eta={eta}");
            prev = k;
        }
        let tiny = predict_kappa(h, zeta, 1e-9, 0.0, 1.0).unwrap().kappa_star;
        assert!(tiny < 1e-7);
    }

    #[test]
    fn moment_curve_degenerate_ensembles() {
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let spectral = SpectralGrid::uniform_1d(8.0, 9).unwrap();
        let path = brownian_path(&grid, 1, 3, 0);
        let w = vec![1.0; grid.n_nodes()];
        let ft = occupation_ft(&path, &w, 0.0, &spectral, &[(0.0, 1.0)]).unwrap();
        let ensemble: Vec<OccupationFt> = (0..200).map(|_| ft.clone()).collect();
        let m = lp_moment_curve(&ensemble, 2.0).unwrap();
        for k in 0..spectral.len() {
            assert!((m.curve(0)[k] - ft.value(0, k).norm()).abs() < 1e-12);
            assert!(m.errors(0)[k] < 1e-12);
        }
        assert!(lp_moment_curve(&ensemble[..50], 2.0).is_err());
    }

    #[test]
    fn constant_path_moment_is_window_length() {
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let spectral = SpectralGrid::uniform_1d(4.0, 9).unwrap();
        let mut path = crate::grid::SamplePath::zeros(grid, 1);
        for i in 0..=16 {
            path.value_mut(i)[0] = 0.0;
        }
        let w = vec![1.0; grid.n_nodes()];
        let ensemble: Vec<OccupationFt> = (0..150)
            .map(|_| occupation_ft(&path, &w, 1.0, &spectral, &[(0.25, 0.75)]).unwrap())
            .collect();
        let m = lp_moment_curve(&ensemble, 2.0).unwrap();
        for k in 0..spectral.len() {
            assert!((m.curve(0)[k] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn brownian_mean_curve_with_jackknife_band() {
        let grid = TimeGrid::new(1.0, 256).unwrap();
        let spectral =
            SpectralGrid::new(vec![1.0, 2.0, 4.0], vec![1.0, 1.0, 1.0], 1).unwrap();
        let paths: Vec<_> = (0..2000u64).map(|p| brownian_path(&grid, 1, 50, p)).collect();
        let ensemble = occupation_ensemble(
            &paths,
            &WeightProcess::one(),
            0.0,
            &spectral,
            &[(0.0, 1.0)],
        )
        .unwrap();
        let mc = mean_curve(&ensemble).unwrap();
        for k in 0..3 {
            let xi = spectral.point(k)[0];
            let want = 2.0 / (xi * xi) * (1.0 - (-xi * xi / 2.0).exp());
            let err = (mc.curve(0)[k] - Complex64::new(want, 0.0)).norm();
            assert!(
                err <= 3.0 * mc.errors(0)[k] + 2.0 * grid.dt(),
                "xi={xi}: err {err}, se {}",
                mc.errors(0)[k]
            );
        }
    }

    #[test]
    fn decay_fit_exact_power_laws() {
        let spectral = SpectralGrid::uniform_1d(64.0, 65).unwrap();
        let mk = |e: f64| -> Vec<f64> {
            (0..spectral.len())
                .map(|k| 3.0 * (1.0 + spectral.magnitude(k)).powf(-e))
                .collect()
        };
        let fit = fit_decay(&mk(2.0), &spectral, 4.0, 64.0, 2.0).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
        let flat = fit_decay(&mk(0.0), &spectral, 4.0, 64.0, 2.0).unwrap();
        assert!(flat.exponent.abs() < 1e-10);
        assert!(fit_decay(&mk(1.0), &spectral, 63.0, 64.0, 2.0).is_err());
    }

    #[test]
    fn brownian_mean_curve_decay_exponent() {
        let spectral = SpectralGrid::uniform_1d(64.0, 129).unwrap();
        let curve: Vec<f64> = (0..spectral.len())
            .map(|k| {
                let xi = spectral.magnitude(k).max(1e-9);
                2.0 / (xi * xi) * (1.0 - (-xi * xi / 2.0).exp())
            })
            .collect();
        let fit = fit_decay(&curve, &spectral, 4.0, 64.0, 1.0).unwrap();
        assert!((fit.exponent - 2.0).abs() < 0.15, "exponent {}", fit.exponent);
    }

    #[test]
    fn time_exponent_fits() {
        let gaps: Vec<f64> = (0..6).map(|j| 0.01 * 2f64.powi(j)).collect();
        let ms: Vec<f64> = gaps.iter().map(|g| 1.7 * g.powf(0.6)).collect();
        let got = fit_time_exponent(&gaps, &ms).unwrap();
        assert!((got - 0.6).abs() < 1e-10);
        let ones: Vec<f64> = gaps.iter().map(|g| *g).collect();
        assert!((fit_time_exponent(&gaps, &ones).unwrap() - 1.0).abs() < 1e-12);
        assert!(fit_time_exponent(&gaps[..4], &ms[..4]).is_err());
    }

    #[test]
    fn weight_power_scaling_is_monotone() {
        // Constant weights: l^delta = c^delta l^0, so moments decrease in
        // delta exactly, pointwise.
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let spectral = SpectralGrid::uniform_1d(16.0, 17).unwrap();
        let c = 0.6f64;
        let w = vec![c; grid.n_nodes()];
        let paths: Vec<_> = (0..120u64).map(|p| brownian_path(&grid, 1, 8, p)).collect();
        let ens = |delta: f64| -> Vec<OccupationFt> {
            paths
                .iter()
                .map(|p| occupation_ft(p, &w, delta, &spectral, &[(0.0, 1.0)]).unwrap())
                .collect()
        };
        let m05 = lp_moment_curve(&ens(0.5), 2.0).unwrap();
        let m20 = lp_moment_curve(&ens(2.0), 2.0).unwrap();
        for k in 0..spectral.len() {
            assert!(m20.curve(0)[k] <= m05.curve(0)[k] + 1e-14);
        }
        // At xi = 0 the transform is the total mass, monotone for any
        // weights.
        let k0 = spectral.len() / 2;
        let wv: Vec<f64> = (0..grid.n_nodes()).map(|i| 0.2 + 0.6 * ((i % 3) as f64) / 2.0).collect();
        let ft_a = occupation_ft(&paths[0], &wv, 0.5, &spectral, &[(0.0, 1.0)]).unwrap();
        let ft_b = occupation_ft(&paths[0], &wv, 2.0, &spectral, &[(0.0, 1.0)]).unwrap();
        assert!(ft_b.value(0, k0).re <= ft_a.value(0, k0).re + 1e-14);
    }

    #[test]
    fn one_sided_decay_consistency_brownian() {
        let grid = TimeGrid::new(1.0, 512).unwrap();
        let spectral = SpectralGrid::uniform_1d(64.0, 129).unwrap();
        let paths: Vec<_> = (0..600u64).map(|p| brownian_path(&grid, 1, 60, p)).collect();
        let ensemble = occupation_ensemble(
            &paths,
            &WeightProcess::one(),
            0.0,
            &spectral,
            &[(0.0, 1.0)],
        )
        .unwrap();
        let m = lp_moment_curve(&ensemble, 2.0).unwrap();
        let fit = fit_decay(m.curve(0), &spectral, 8.0, 32.0, 2.0).unwrap();
        // Best prediction over eta for H=1/2, zeta=1, delta=0.
        let etas: Vec<f64> = (1..=9).map(|j| 0.05 * j as f64).collect();
        let best = best_kappa_over_eta(0.5, 1.0, 0.0, 1.0, &etas).unwrap();
        assert!(
            fit.exponent >= best.kappa_star - 0.2,
            "measured {} vs predicted {}",
            fit.exponent,
            best.kappa_star
        );
    }

    #[test]
    fn char_fn_gaussian_curve() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let paths: Vec<_> = (0..4000u64).map(|p| brownian_path(&grid, 1, 90, p)).collect();
        let spectral = SpectralGrid::uniform_1d(8.0, 33).unwrap();
        let cf = char_fn_decay(
            &paths,
            1.0,
            &WeightProcess::one(),
            0.0,
            &spectral,
            1.0,
            3.0,
        )
        .unwrap();
        for k in 0..spectral.len() {
            let xi = spectral.point(k)[0];
            if xi.abs() > 3.0 {
                continue;
            }
            let want = (-xi * xi / 2.0).exp();
            assert!(
                (cf.curve[k] - want).abs() <= 3.0 * cf.std_errors[k] + 1e-3,
                "xi={xi}: {} vs {want}",
                cf.curve[k]
            );
        }
        assert!(cf.fit.exponent > 2.5, "exponent {}", cf.fit.exponent);
        let zero = char_fn_decay(
            &paths,
            1.0,
            &WeightProcess::state(|_| 0.0, 1.0),
            1.0,
            &spectral,
            1.0,
            3.0,
        );
        assert!(zero.is_err() || zero.unwrap().curve.iter().all(|&v| v == 0.0));
    }
}

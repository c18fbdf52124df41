//! Self-interacting equations with drifts prescribed in frequency space.
//!
//! The state u solves u_t = u0 + int_0^t int_0^t b(u_{r2} - u_{r1}) dr1 dr2
//! + z_t for a sampled driving path z, where b may be a distribution (point
//! mass, its gradient, a fractional-singularity gradient). Writing
//! theta = u - z, the drift term is the averaged field
//!
//!   A(t1, t2, theta) = (2 pi)^{-d} sum_k w_k bhat(xi_k) Ghat_{t1,t2}(xi_k)
//!                      e^{i <xi_k, theta>}   (real part),
//!
//! the convolution of b with the reflected two-time self-intersection measure
//! of z, evaluated on a symmetric frequency grid. `build_field` tabulates A
//! as a two-parameter field for inspection; `solve_picard` solves the fixed
//! point equation theta_i = u0 + sum over the square grid [0, t_i)^2 of the
//! drift box contributions, using the exact product factorization of the
//! square sum: with psi_j = theta_j + z_j,
//!
//!   theta_i = u0 + sum_k r_k |E_i(xi_k)|^2,   E_i(xi) = sum_{j<i} e^{i xi psi_j},
//!
//! with r_k = dt^2 w_k Re(bhat(xi_k)) / (2 pi). The prefix sums E carry the
//! old-window contributions exactly, so each windowed Picard sweep costs
//! O(window * n_freq). Windows shrink automatically until the measured
//! iteration contraction factor is at most 1/2.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{SamplePath, TimeGrid};
use crate::occupation::{fl_norm, phase_row, SelfIntersectionFt, SpectralGrid};
use crate::special::{dawson, gamma};
use crate::young2d::{path_holder_seminorm, TwoParamField};

type DriftFn = Arc<dyn Fn(&[f64], &mut [Complex64]) + Send + Sync>;

/// A drift given through its Fourier transform bhat, together with the
/// weighted-frequency norm indices it is measured in. Real-valued drifts
/// require bhat(-xi) = conj(bhat(xi)); this is checked on every working grid.
#[derive(Clone)]
pub struct FourierDrift {
    dim: usize,
    eval: DriftFn,
    /// Frequency weight exponent delta of the norm ||<xi>^delta bhat||.
    pub fl_delta: f64,
    /// Integrability order of that norm, in [1, infinity].
    pub fl_qprime: f64,
    pub description: String,
}

impl FourierDrift {
    /// Drift from a closure writing the d complex components of bhat(xi).
    pub fn new<F>(dim: usize, fl_delta: f64, fl_qprime: f64, description: &str, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [Complex64]) + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::Domain("drift dimension must be positive".into()));
        }
        if !fl_delta.is_finite() {
            return Err(Error::Domain(format!("fl_delta must be finite, got {fl_delta}")));
        }
        if fl_qprime.is_nan() || fl_qprime < 1.0 {
            return Err(Error::Domain(format!(
                "fl_qprime must satisfy q' >= 1, got {fl_qprime}"
            )));
        }
        Ok(FourierDrift {
            dim,
            eval: Arc::new(f),
            fl_delta,
            fl_qprime,
            description: description.to_string(),
        })
    }

    /// Scalar (d = 1) drift from bhat as a complex-valued function of xi.
    pub fn scalar<F>(fl_delta: f64, fl_qprime: f64, description: &str, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        FourierDrift::new(1, fl_delta, fl_qprime, description, move |xi, out| {
            out[0] = f(xi[0])
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// bhat at a frequency vector of length dim.
    pub fn eval(&self, xi: &[f64]) -> Vec<f64> {
        assert_eq!(xi.len(), self.dim, "frequency vector length mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        (self.eval)(xi, &mut out);
        out.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    /// bhat at a scalar frequency, for d = 1 drifts.
    pub fn eval1(&self, xi: f64) -> Complex64 {
        assert_eq!(self.dim, 1, "eval1 needs a scalar drift");
        let mut out = [Complex64::new(0.0, 0.0)];
        (self.eval)(&[xi], &mut out);
        out[0]
    }

    /// Heat-kernel mollification bhat_n(xi) = bhat(xi) e^{-|xi|^2 / (2 n^2)}.
    pub fn mollified(&self, level: f64) -> Result<FourierDrift> {
        if !(level > 0.0) || !level.is_finite() {
            return Err(Error::Domain(format!(
                "mollification level must be positive, got {level}"
            )));
        }
        let base = self.eval.clone();
        let half_inv = 0.5 / (level * level);
        Ok(FourierDrift {
            dim: self.dim,
            eval: Arc::new(move |xi: &[f64], out: &mut [Complex64]| {
                base(xi, out);
                let q: f64 = xi.iter().map(|v| v * v).sum();
                let damp = (-q * half_inv).exp();
                for c in out.iter_mut() {
                    *c *= damp;
                }
            }),
            fl_delta: self.fl_delta,
            fl_qprime: self.fl_qprime,
            description: format!("{} (heat mollification, level {level})", self.description),
        })
    }
}

/// Smooth scalar reference drift b(x) = e^{-x^2/2} / sqrt(2 pi), so that
/// bhat(xi) = e^{-xi^2/2}.
pub fn gaussian_bump() -> FourierDrift {
    FourierDrift::scalar(0.0, f64::INFINITY, "gaussian bump", |xi| {
        Complex64::new((-0.5 * xi * xi).exp(), 0.0)
    })
    .expect("static drift data is valid")
}

/// Named singular drifts at their solvability thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdPreset {
    /// Point mass at the origin, d = 1: bhat = 1.
    SkewDelta0,
    /// Gradient of the point mass: bhat(xi) = i xi (componentwise).
    EdwardsGradDelta0 { dim: usize },
    /// Gradient of the localized fractional singularity |x|^{-alpha} chi,
    /// alpha in (0, d-1): |bhat(xi)| ~ |xi|^{alpha-d+1} at large xi.
    EdwardsFractional { alpha: f64, dim: usize },
    /// Localized sign drift sgn(x) e^{-x^2/2}, d = 1: |bhat(xi)| ~ 2/|xi|.
    DurrettRogers,
}

/// Drift data and the admissible Hurst bound for a preset: the equation is
/// solvable pathwise for driving noise rougher than the returned bound.
pub fn threshold_preset(preset: ThresholdPreset) -> Result<(FourierDrift, f64)> {
    match preset {
        ThresholdPreset::SkewDelta0 => {
            let drift = FourierDrift::scalar(0.0, f64::INFINITY, "point mass at 0 (d = 1)", |_| {
                Complex64::new(1.0, 0.0)
            })?;
            Ok((drift, 0.25))
        }
        ThresholdPreset::EdwardsGradDelta0 { dim } => {
            let drift = FourierDrift::new(
                dim,
                -1.0,
                f64::INFINITY,
                "gradient of the point mass at 0",
                |xi, out| {
                    for (o, &x) in out.iter_mut().zip(xi) {
                        *o = Complex64::new(0.0, x);
                    }
                },
            )?;
            Ok((drift, 1.0 / (dim as f64 + 4.0)))
        }
        ThresholdPreset::EdwardsFractional { alpha, dim } => {
            let d = dim as f64;
            if !(alpha > 0.0 && alpha < d - 1.0) {
                return Err(Error::Domain(format!(
                    "alpha must lie in (0, d-1) = (0, {}), got {alpha}",
                    d - 1.0
                )));
            }
            // Transform constant of |x|^{-alpha}: c |xi|^{alpha-d} with
            // c = 2^{d-alpha} pi^{d/2} Gamma((d-alpha)/2) / Gamma(alpha/2);
            // the (1+|xi|^2)^{(alpha-d)/2} profile smooths the crossover at
            // |xi| = 1 where the localizer takes over.
            let c = 2.0f64.powf(d - alpha) * PI.powf(0.5 * d) * gamma(0.5 * (d - alpha))
                / gamma(0.5 * alpha);
            let expo = 0.5 * (alpha - d);
            let drift = FourierDrift::new(
                dim,
                d - 1.0 - alpha,
                f64::INFINITY,
                "gradient of |x|^-alpha localized, (1+|xi|^2)^((alpha-d)/2) profile",
                move |xi, out| {
                    let q: f64 = xi.iter().map(|v| v * v).sum();
                    let radial = c * (1.0 + q).powf(expo);
                    for (o, &x) in out.iter_mut().zip(xi) {
                        *o = Complex64::new(0.0, x * radial);
                    }
                },
            )?;
            Ok((drift, 1.0 / (4.0 + alpha)))
        }
        ThresholdPreset::DurrettRogers => {
            let drift = FourierDrift::scalar(
                1.0,
                f64::INFINITY,
                "sign drift with gaussian localizer (d = 1)",
                |xi| Complex64::new(0.0, -2.0 * SQRT_2 * dawson(xi / SQRT_2)),
            )?;
            Ok((drift, 1.0 / 3.0))
        }
    }
}

/// For each frequency index the index of its sign-negated partner.
fn symmetric_partner(spectral: &SpectralGrid) -> Result<Vec<usize>> {
    let n = spectral.len();
    let d = spectral.dim();
    let mut map = vec![usize::MAX; n];
    for k in 0..n {
        if map[k] != usize::MAX {
            continue;
        }
        let pk = spectral.point(k);
        let mut found = None;
        'search: for j in 0..n {
            let pj = spectral.point(j);
            for c in 0..d {
                let scale = 1.0 + pk[c].abs().max(pj[c].abs());
                if (pk[c] + pj[c]).abs() > 1e-9 * scale {
                    continue 'search;
                }
            }
            found = Some(j);
            break;
        }
        match found {
            Some(j) => {
                map[k] = j;
                map[j] = k;
            }
            None => {
                return Err(Error::AsymmetricGrid(format!(
                    "no partner -xi for the point at index {k}"
                )))
            }
        }
    }
    Ok(map)
}

/// bhat tabulated on the grid (point-major, d per point) after the conjugate
/// symmetry check against the partner map.
fn drift_values_checked(
    drift: &FourierDrift,
    spectral: &SpectralGrid,
    partner: &[usize],
) -> Result<Vec<Complex64>> {
    let nk = spectral.len();
    let d = spectral.dim();
    let mut values = vec![Complex64::new(0.0, 0.0); nk * d];
    for k in 0..nk {
        (drift.eval)(spectral.point(k), &mut values[k * d..(k + 1) * d]);
    }
    for v in &values {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::Domain(
                "drift transform produced a non-finite value on the grid".into(),
            ));
        }
    }
    for k in 0..nk {
        let j = partner[k];
        for c in 0..d {
            let a = values[k * d + c];
            let b = values[j * d + c];
            let err = (a - b.conj()).norm();
            if err > 1e-9 * (1.0 + a.norm().max(b.norm())) {
                return Err(Error::Domain(format!(
                    "drift transform is not conjugate-symmetric: component {c} at \
                     frequency index {k} differs from the reflected value by {err:.3e}"
                )));
            }
        }
    }
    Ok(values)
}

/// Tabulated averaged field together with its reality diagnostics.
pub struct BuiltField {
    pub field: TwoParamField,
    /// max |imaginary part| / (1 + max |real part|) over the probe set.
    pub imag_residue: f64,
    /// Set when the boundary-frequency summand exceeds 1% of the accumulated
    /// coefficient mass for some tabulated time pair.
    pub truncation_warning: bool,
}

/// Convolution of the drift with the reflected two-time self-intersection
/// measure, tabulated at the measure's time pairs. Evaluation times snap to
/// the nearest tabulated node. Storage is (pairs x frequencies x d), so this
/// is meant for inspection-scale grids; the solver works from the raw
/// frequency data instead.
pub fn build_field(drift: &FourierDrift, g: &SelfIntersectionFt) -> Result<BuiltField> {
    let spectral = &g.spectral;
    let d = spectral.dim();
    if drift.dim() != d {
        return Err(Error::Domain(format!(
            "drift dimension {} does not match spectral dimension {d}",
            drift.dim()
        )));
    }
    let nk = spectral.len();
    let n1 = g.t1_nodes.len();
    let n2 = g.t2_nodes.len();
    if n1 == 0 || n2 == 0 {
        return Err(Error::Domain(
            "field tabulation needs at least one time node per axis".into(),
        ));
    }
    let entries = n1
        .checked_mul(n2)
        .and_then(|v| v.checked_mul(nk))
        .and_then(|v| v.checked_mul(d))
        .ok_or_else(|| Error::Domain("field tabulation size overflows".into()))?;
    if entries > (1 << 24) {
        return Err(Error::Domain(format!(
            "field tabulation would need {entries} coefficients; \
             use coarser time or frequency grids for inspection"
        )));
    }
    let partner = symmetric_partner(spectral)?;
    let bhat = drift_values_checked(drift, spectral, &partner)?;

    let norm = (2.0 * PI).powi(d as i32);
    let mut coef = vec![Complex64::new(0.0, 0.0); entries];
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            let base = (i1 * n2 + i2) * nk * d;
            for k in 0..nk {
                let w = spectral.weight(k) / norm;
                let gv = g.value(i1, i2, k);
                for c in 0..d {
                    coef[base + k * d + c] = bhat[k * d + c] * gv * w;
                }
            }
        }
    }

    let t1s: Vec<f64> = g.t1_nodes.iter().map(|&i| g.grid.node(i)).collect();
    let t2s: Vec<f64> = g.t2_nodes.iter().map(|&i| g.grid.node(i)).collect();

    let (imag_residue, truncation_warning) =
        probe_reality(&coef, spectral, n1, n2);

    let coef = Arc::new(coef);
    let points: Arc<Vec<f64>> = Arc::new(spectral.points().to_vec());
    let t1c = Arc::new(t1s);
    let t2c = Arc::new(t2s);

    let eval = {
        let coef = coef.clone();
        let points = points.clone();
        let (t1c, t2c) = (t1c.clone(), t2c.clone());
        move |t1: f64, t2: f64, x: &[f64], out: &mut [f64]| {
            let i1 = snap_index(&t1c, t1);
            let i2 = snap_index(&t2c, t2);
            let base = (i1 * n2 + i2) * nk * d;
            out.fill(0.0);
            for k in 0..nk {
                let dot: f64 = points[k * d..(k + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
                let (s, c) = dot.sin_cos();
                for comp in 0..d {
                    let cf = coef[base + k * d + comp];
                    out[comp] += cf.re * c - cf.im * s;
                }
            }
        }
    };
    let grad = move |t1: f64, t2: f64, x: &[f64], out: &mut [f64]| {
        let i1 = snap_index(&t1c, t1);
        let i2 = snap_index(&t2c, t2);
        let base = (i1 * n2 + i2) * nk * d;
        out.fill(0.0);
        for k in 0..nk {
            let xi = &points[k * d..(k + 1) * d];
            let dot: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
            let (s, c) = dot.sin_cos();
            for comp in 0..d {
                let cf = coef[base + k * d + comp];
                let im_part = cf.re * s + cf.im * c;
                for (l, &xil) in xi.iter().enumerate() {
                    out[comp * d + l] -= xil * im_part;
                }
            }
        }
    };

    let field = TwoParamField::new(d, 1.0, 1.0, eval, grad)?;
    Ok(BuiltField {
        field,
        imag_residue,
        truncation_warning,
    })
}

fn snap_index(times: &[f64], t: f64) -> usize {
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (i, &node) in times.iter().enumerate() {
        let d = (t - node).abs();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    best
}

/// Reality and truncation diagnostics over a strided probe set.
fn probe_reality(
    coef: &[Complex64],
    spectral: &SpectralGrid,
    n1: usize,
    n2: usize,
) -> (f64, bool) {
    let nk = spectral.len();
    let d = spectral.dim();
    let stride1 = n1.div_ceil(8);
    let stride2 = n2.div_ceil(8);
    let xi_max = (0..nk).map(|k| spectral.magnitude(k)).fold(0.0f64, f64::max);
    let probes: Vec<f64> = (0..13).map(|i| -3.0 + 0.5 * i as f64).collect();

    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    let mut warning = false;
    let mut x = vec![0.0; d];
    for i1 in (0..n1).step_by(stride1) {
        for i2 in (0..n2).step_by(stride2) {
            let base = (i1 * n2 + i2) * nk * d;
            let mut total = 0.0;
            let mut tail = 0.0f64;
            for k in 0..nk {
                let mag: f64 = (0..d)
                    .map(|c| coef[base + k * d + c].norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                total += mag;
                if spectral.magnitude(k) >= xi_max - 1e-9 * (1.0 + xi_max) {
                    tail = tail.max(mag);
                }
            }
            if total > 0.0 && tail > 0.01 * total {
                warning = true;
            }
            for &p in &probes {
                x.iter_mut().for_each(|v| *v = p);
                let mut acc = vec![Complex64::new(0.0, 0.0); d];
                for k in 0..nk {
                    let dot: f64 = spectral.point(k).iter().zip(&x).map(|(a, b)| a * b).sum();
                    let phase = Complex64::new(0.0, dot).exp();
                    for (comp, a) in acc.iter_mut().enumerate() {
                        *a += coef[base + k * d + comp] * phase;
                    }
                }
                for a in &acc {
                    max_re = max_re.max(a.re.abs());
                    max_im = max_im.max(a.im.abs());
                }
            }
        }
    }
    (max_im / (1.0 + max_re), warning)
}

/// Solver parameters for the windowed Picard iteration.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Holder exponent of the grid norm used to measure iterate differences.
    pub gamma: f64,
    pub u0: f64,
    /// Window length; None selects it automatically from the measured
    /// contraction factor.
    pub step_tau: Option<f64>,
    pub picard_tol: f64,
    pub max_iters: usize,
}

impl SolverConfig {
    pub fn new(gamma: f64, u0: f64) -> Result<Self> {
        if !(gamma > 0.5 && gamma < 1.0) {
            return Err(Error::Domain(format!(
                "gamma must lie in (1/2, 1), got {gamma}"
            )));
        }
        if !u0.is_finite() {
            return Err(Error::Domain("u0 must be finite".into()));
        }
        Ok(SolverConfig {
            gamma,
            u0,
            step_tau: None,
            picard_tol: 1e-8,
            max_iters: 64,
        })
    }

    pub fn with_step(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Domain(format!("step tau must be positive, got {tau}")));
        }
        self.step_tau = Some(tau);
        Ok(self)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::Domain(format!(
                "picard_tol must be positive, got {tol}"
            )));
        }
        self.picard_tol = tol;
        Ok(self)
    }

    pub fn with_max_iters(mut self, iters: usize) -> Result<Self> {
        if iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1".into()));
        }
        self.max_iters = iters;
        Ok(self)
    }
}

/// Per-run solver record.
#[derive(Clone, Debug)]
pub struct SolveDiagnostics {
    /// Accepted window length.
    pub tau: f64,
    /// Automatic halvings performed before acceptance.
    pub tau_halvings: u32,
    pub n_windows: usize,
    /// Picard sweeps per window.
    pub iterations: Vec<usize>,
    /// Largest measured ratio of consecutive iterate differences per window.
    pub contraction_factors: Vec<f64>,
    pub max_contraction: f64,
    /// Post-hoc residual max_i |theta_i - u0 - square sum over [0, t_i)^2|.
    pub defect: f64,
}

pub struct PicardSolution {
    pub u: SamplePath,
    pub theta: SamplePath,
    pub diagnostics: SolveDiagnostics,
}

enum WindowOutcome {
    Converged {
        theta: Vec<f64>,
        iterations: Vec<usize>,
        factors: Vec<f64>,
    },
    Failed(String),
}

/// Solve theta_i = u0 + sum_k r_k |E_i(xi_k)|^2 by Picard iteration on
/// consecutive windows, holding converged earlier windows fixed through the
/// cached prefix phase sums. Scalar state only.
pub fn solve_picard(
    drift: &FourierDrift,
    spectral: &SpectralGrid,
    cfg: &SolverConfig,
    z: &SamplePath,
) -> Result<PicardSolution> {
    if drift.dim() != 1 || spectral.dim() != 1 || z.dim() != 1 {
        return Err(Error::Domain(
            "the Picard solver handles scalar state (drift, grid and path with d = 1)".into(),
        ));
    }
    let partner = symmetric_partner(spectral)?;
    let bhat = drift_values_checked(drift, spectral, &partner)?;
    let grid = *z.grid();
    let n = grid.n_steps();
    let dt = grid.dt();
    let rk: Vec<f64> = (0..spectral.len())
        .map(|k| dt * dt * spectral.weight(k) * bhat[k].re / (2.0 * PI))
        .collect();
    let zs: Vec<f64> = (0..=n).map(|i| z.scalar(i)).collect();

    let fixed_tau = cfg.step_tau.is_some();
    let tau0 = cfg.step_tau.unwrap_or(grid.horizon());
    if tau0 > grid.horizon() * (1.0 + 1e-9) {
        return Err(Error::Domain(format!(
            "step tau {tau0} exceeds the horizon {}",
            grid.horizon()
        )));
    }
    let mut steps = ((tau0 / dt).round() as usize).clamp(1, n);
    let mut halvings = 0u32;

    loop {
        let outcome = run_windows(spectral, &rk, &zs, &grid, cfg, steps);
        match outcome {
            WindowOutcome::Converged {
                theta,
                iterations,
                factors,
            } => {
                let max_factor = factors.iter().fold(0.0f64, |m, &f| m.max(f));
                let accept = if fixed_tau {
                    true
                } else if max_factor <= 0.5 {
                    true
                } else if steps > 1 {
                    false
                } else if max_factor <= 0.9 {
                    true
                } else {
                    return Err(Error::NoContraction(format!(
                        "contraction factor {max_factor:.3} > 0.9 at the smallest window"
                    )));
                };
                if !accept {
                    steps /= 2;
                    halvings += 1;
                    continue;
                }
                let defect = square_sum_defect(spectral, &rk, &zs, &theta, cfg.u0);
                let u_values: Vec<f64> = theta.iter().zip(&zs).map(|(t, z)| t + z).collect();
                let diagnostics = SolveDiagnostics {
                    tau: steps as f64 * dt,
                    tau_halvings: halvings,
                    n_windows: iterations.len(),
                    iterations,
                    contraction_factors: factors,
                    max_contraction: max_factor,
                    defect,
                };
                return Ok(PicardSolution {
                    u: SamplePath::new(grid, 1, u_values)?,
                    theta: SamplePath::new(grid, 1, theta)?,
                    diagnostics,
                });
            }
            WindowOutcome::Failed(reason) => {
                if !fixed_tau && steps > 1 {
                    steps /= 2;
                    halvings += 1;
                    continue;
                }
                return Err(Error::NoContraction(reason));
            }
        }
    }
}

fn run_windows(
    spectral: &SpectralGrid,
    rk: &[f64],
    zs: &[f64],
    grid: &TimeGrid,
    cfg: &SolverConfig,
    steps_per_window: usize,
) -> WindowOutcome {
    let n = grid.n_steps();
    let nk = rk.len();
    let mut theta = vec![cfg.u0; n + 1];
    let mut prefix = vec![Complex64::new(0.0, 0.0); nk];
    let mut row = vec![Complex64::new(0.0, 0.0); nk];
    let mut iterations = Vec::new();
    let mut factors = Vec::new();

    let mut i0 = 0usize;
    while i0 < n {
        let i1 = (i0 + steps_per_window).min(n);
        let m = i1 - i0;
        let anchor = theta[i0];
        for v in &mut theta[i0 + 1..=i1] {
            *v = anchor;
        }
        let gap_pows: Vec<f64> = (0..=m)
            .map(|g| (g as f64 * grid.dt()).powf(cfg.gamma))
            .collect();

        let mut window_factor = 0.0f64;
        let mut prev_delta: Option<f64> = None;
        let mut converged_in = None;
        for iter in 1..=cfg.max_iters {
            let prev: Vec<f64> = theta[i0..=i1].to_vec();
            let mut e = prefix.clone();
            let mut new_vals = vec![0.0; m];
            for (step, slot) in new_vals.iter_mut().enumerate() {
                let node = i0 + step;
                phase_row(spectral, &[prev[step] + zs[node]], &mut row);
                for (ek, rk_) in e.iter_mut().zip(&row) {
                    *ek += rk_;
                }
                let s: f64 = rk.iter().zip(&e).map(|(r, ek)| r * ek.norm_sqr()).sum();
                *slot = cfg.u0 + s;
            }
            if new_vals.iter().any(|v| !v.is_finite()) {
                return WindowOutcome::Failed("iterates diverged to non-finite values".into());
            }
            let mut diffs = vec![0.0; m + 1];
            for (d, (nv, pv)) in diffs[1..].iter_mut().zip(new_vals.iter().zip(&prev[1..])) {
                *d = nv - pv;
            }
            let delta = window_proxy(&diffs, &gap_pows);
            theta[i0 + 1..=i1].copy_from_slice(&new_vals);
            if let Some(pd) = prev_delta {
                if pd > 0.0 {
                    window_factor = window_factor.max(delta / pd);
                }
            }
            if delta <= cfg.picard_tol {
                converged_in = Some(iter);
                break;
            }
            prev_delta = Some(delta);
        }
        let Some(iters) = converged_in else {
            return WindowOutcome::Failed(format!(
                "window starting at node {i0} did not reach tolerance within {} sweeps",
                cfg.max_iters
            ));
        };
        iterations.push(iters);
        factors.push(window_factor);
        for j in i0..i1 {
            phase_row(spectral, &[theta[j] + zs[j]], &mut row);
            for (p, r) in prefix.iter_mut().zip(&row) {
                *p += r;
            }
        }
        i0 = i1;
    }
    WindowOutcome::Converged {
        theta,
        iterations,
        factors,
    }
}

/// sup + Holder-gamma seminorm of a window difference on an equally spaced
/// local grid; gap_pows[g] = (g dt)^gamma.
fn window_proxy(diffs: &[f64], gap_pows: &[f64]) -> f64 {
    let mut sup = 0.0f64;
    let mut semi = 0.0f64;
    for a in 0..diffs.len() {
        sup = sup.max(diffs[a].abs());
        for b in a + 1..diffs.len() {
            semi = semi.max((diffs[b] - diffs[a]).abs() / gap_pows[b - a]);
        }
    }
    sup + semi
}

fn square_sum_defect(
    spectral: &SpectralGrid,
    rk: &[f64],
    zs: &[f64],
    theta: &[f64],
    u0: f64,
) -> f64 {
    let nk = rk.len();
    let mut e = vec![Complex64::new(0.0, 0.0); nk];
    let mut row = vec![Complex64::new(0.0, 0.0); nk];
    let mut defect = 0.0f64;
    for i in 1..theta.len() {
        phase_row(spectral, &[theta[i - 1] + zs[i - 1]], &mut row);
        for (ek, r) in e.iter_mut().zip(&row) {
            *ek += r;
        }
        let s: f64 = rk.iter().zip(&e).map(|(r, ek)| r * ek.norm_sqr()).sum();
        defect = defect.max((theta[i] - u0 - s).abs());
    }
    defect
}

/// sup norm plus Holder-gamma seminorm of a path, the grid proxy for the
/// C^gamma distance used by the solver and the stability experiment.
pub fn cgamma_proxy(path: &SamplePath, gamma: f64) -> f64 {
    path.sup_norm() + path_holder_seminorm(path, gamma)
}

/// Reference fixed point of the same square-grid equation with b evaluated
/// pointwise: theta_i = u0 + dt^2 sum_{j1 < i, j2 < i} b(u_{j2} - u_{j1}),
/// u = theta + z. Plain (unwindowed) Picard; for smooth bounded b.
pub fn classical_picard<F>(
    b: F,
    z: &SamplePath,
    u0: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(SamplePath, SamplePath)>
where
    F: Fn(f64) -> f64,
{
    if z.dim() != 1 {
        return Err(Error::Domain("classical reference needs a scalar path".into()));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if max_iters == 0 {
        return Err(Error::Domain("max_iters must be at least 1".into()));
    }
    let grid = *z.grid();
    let n = grid.n_steps();
    let h2 = grid.dt() * grid.dt();
    let zs: Vec<f64> = (0..=n).map(|i| z.scalar(i)).collect();
    let mut theta = vec![u0; n + 1];
    for _ in 0..max_iters {
        let u: Vec<f64> = theta.iter().zip(&zs).map(|(t, z)| t + z).collect();
        let mut new_theta = vec![u0; n + 1];
        let mut s = 0.0;
        for i in 1..=n {
            let ui = u[i - 1];
            let mut add = b(0.0);
            for &uj in &u[..i - 1] {
                add += b(ui - uj) + b(uj - ui);
            }
            s += h2 * add;
            new_theta[i] = u0 + s;
        }
        let diff = theta
            .iter()
            .zip(&new_theta)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        theta = new_theta;
        if diff <= tol {
            let u_values: Vec<f64> = theta.iter().zip(&zs).map(|(t, z)| t + z).collect();
            return Ok((
                SamplePath::new(grid, 1, u_values)?,
                SamplePath::new(grid, 1, theta)?,
            ));
        }
        if !diff.is_finite() {
            return Err(Error::NoContraction(
                "classical iteration diverged to non-finite values".into(),
            ));
        }
    }
    Err(Error::NoContraction(format!(
        "classical iteration did not reach tolerance within {max_iters} sweeps"
    )))
}

/// One mollification level of the stability table.
#[derive(Clone, Debug)]
pub struct StabilityRow {
    pub level: f64,
    /// Weighted-frequency norm of bhat_n - bhat on the working grid.
    pub fl_distance: f64,
    /// C^gamma proxy distance of u_n to the unmollified solution.
    pub u_distance: f64,
    /// u_distance / fl_distance (the initial state is held fixed).
    pub ratio: f64,
}

pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    pub reference: PicardSolution,
    pub solutions: Vec<PicardSolution>,
}

/// Solve with the drift replaced by its heat mollifications
/// bhat e^{-|xi|^2/(2 n^2)} at each level n, against the unmollified
/// solution. The ratio column measures how the solution distance scales with
/// the drift distance.
pub fn stability_experiment(
    drift: &FourierDrift,
    levels: &[f64],
    spectral: &SpectralGrid,
    cfg: &SolverConfig,
    z: &SamplePath,
) -> Result<StabilityReport> {
    if levels.is_empty() {
        return Err(Error::Domain("stability experiment needs at least one level".into()));
    }
    let reference = solve_picard(drift, spectral, cfg, z)?;
    let nk = spectral.len();
    let mut rows = Vec::with_capacity(levels.len());
    let mut solutions = Vec::with_capacity(levels.len());
    for &level in levels {
        let bn = drift.mollified(level)?;
        let sol = solve_picard(&bn, spectral, cfg, z)?;
        let diff_hat: Vec<Complex64> = (0..nk)
            .map(|k| bn.eval1(spectral.point(k)[0]) - drift.eval1(spectral.point(k)[0]))
            .collect();
        let fl_distance = fl_norm(&diff_hat, spectral, drift.fl_delta, drift.fl_qprime)?;
        let diff_u: Vec<f64> = sol
            .u
            .values()
            .iter()
            .zip(reference.u.values())
            .map(|(a, b)| a - b)
            .collect();
        let diff_path = SamplePath::new(*z.grid(), 1, diff_u)?;
        let u_distance = cgamma_proxy(&diff_path, cfg.gamma);
        let ratio = if fl_distance > 0.0 {
            u_distance / fl_distance
        } else if u_distance == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(StabilityRow {
            level,
            fl_distance,
            u_distance,
            ratio,
        });
        solutions.push(sol);
    }
    Ok(StabilityReport {
        rows,
        reference,
        solutions,
    })
}

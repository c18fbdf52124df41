//! Sample path generation for Volterra Ito processes on uniform grids.
//!
//! The scheme is the explicit left-point Euler-Volterra discretization
//!
//! X_{t_i} = g(t_i) + sum_{j<i} K_b(t_i, t_j*) b_j Delta
//!         + sum_{j<i} K_sigma(t_i, t_j*) sigma_j dB_j,
//!
//! with coefficients frozen at the left cell endpoint and kernels evaluated
//! at the cell midpoint t_j* to stay off the diagonal singularity. For the
//! Riemann-Liouville kernel the final cell (j = i-1) uses the exact cell
//! average instead of the midpoint, which preserves the Ito isometry of the
//! cell that dominates local non-determinism. Fractional Brownian motion is
//! simulated exactly from its covariance, not through a kernel.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{SamplePath, TimeGrid};
use crate::kernels::{rl_cell_average, KernelFamily, KernelSpec};
use crate::rng::path_rng;

/// Default bound on |X| beyond which a path is declared blown up.
pub const DEFAULT_BLOWUP_BOUND: f64 = 1e8;

/// View of the already-simulated head of a path, for path-dependent
/// coefficients. Only nodes up to `step` are visible.
pub struct PathContext<'a> {
    grid: &'a TimeGrid,
    dim: usize,
    step: usize,
    values: &'a [f64],
}

impl<'a> PathContext<'a> {
    pub fn grid(&self) -> &TimeGrid {
        self.grid
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// State vector at a node index not beyond the current step.
    pub fn value(&self, node: usize) -> &[f64] {
        assert!(node <= self.step, "coefficient looked ahead of the current step");
        &self.values[node * self.dim..(node + 1) * self.dim]
    }
}

type StateFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type PathFn = Arc<dyn Fn(&PathContext, &mut [f64]) + Send + Sync>;

/// A drift or diffusion coefficient process.
#[derive(Clone)]
pub enum Coefficient {
    /// Fixed output vector (length d for drift, d*m row-major for diffusion).
    ConstantVector(Vec<f64>),
    /// Function of the current state.
    StateFunction(StateFn),
    /// Function of the whole visible path head.
    PathFunctional(PathFn),
}

/// Coefficient together with its declared Holder regularity in time.
#[derive(Clone)]
pub struct CoefficientProcess {
    pub coefficient: Coefficient,
    pub holder_alpha: f64,
}

impl CoefficientProcess {
    pub fn constant(values: Vec<f64>) -> Self {
        CoefficientProcess {
            coefficient: Coefficient::ConstantVector(values),
            holder_alpha: 0.0,
        }
    }

    pub fn state<F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static>(f: F) -> Self {
        CoefficientProcess {
            coefficient: Coefficient::StateFunction(Arc::new(f)),
            holder_alpha: 0.0,
        }
    }

    pub fn path_functional<F: Fn(&PathContext, &mut [f64]) + Send + Sync + 'static>(
        f: F,
    ) -> Self {
        CoefficientProcess {
            coefficient: Coefficient::PathFunctional(Arc::new(f)),
            holder_alpha: 0.0,
        }
    }

    pub fn with_holder(mut self, alpha: f64) -> Self {
        self.holder_alpha = alpha;
        self
    }
}

/// Weight process rho with values in [0,1], used to tilt occupation measures.
#[derive(Clone)]
pub enum WeightKind {
    One,
    /// sigma_*(X_t): function of the state, clamped to [0,1].
    StateFunction(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
    /// Arbitrary per-node weight (node index, time), clamped to [0,1].
    Custom(Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>),
}

#[derive(Clone)]
pub struct WeightProcess {
    pub kind: WeightKind,
    pub holder_chi: f64,
}

impl WeightProcess {
    pub fn one() -> Self {
        WeightProcess {
            kind: WeightKind::One,
            holder_chi: 1.0,
        }
    }

    pub fn state<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(f: F, chi: f64) -> Self {
        WeightProcess {
            kind: WeightKind::StateFunction(Arc::new(f)),
            holder_chi: chi,
        }
    }

    /// Weight at every node of a path, clamped to [0,1].
    pub fn eval_along(&self, path: &SamplePath) -> Vec<f64> {
        let n_nodes = path.grid().n_nodes();
        match &self.kind {
            WeightKind::One => vec![1.0; n_nodes],
            WeightKind::StateFunction(f) => (0..n_nodes)
                .map(|i| f(path.value(i)).clamp(0.0, 1.0))
                .collect(),
            WeightKind::Custom(f) => (0..n_nodes)
                .map(|i| f(i, path.grid().node(i)).clamp(0.0, 1.0))
                .collect(),
        }
    }
}

/// Deterministic initial curve g(t).
#[derive(Clone)]
pub enum InitialCurve {
    Constant(Vec<f64>),
    Curve(Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>),
    Path(SamplePath),
}

impl InitialCurve {
    pub fn constant(values: Vec<f64>) -> Self {
        InitialCurve::Constant(values)
    }

    pub fn curve<F: Fn(f64, &mut [f64]) + Send + Sync + 'static>(f: F) -> Self {
        InitialCurve::Curve(Arc::new(f))
    }

    fn eval(&self, node: usize, t: f64, out: &mut [f64]) {
        match self {
            InitialCurve::Constant(v) => out.copy_from_slice(v),
            InitialCurve::Curve(f) => f(t, out),
            InitialCurve::Path(p) => out.copy_from_slice(p.value(node)),
        }
    }
}

/// Full specification of a Volterra Ito model dX-free form.
#[derive(Clone)]
pub struct VolterraModel {
    pub initial: InitialCurve,
    pub kernel_b: KernelSpec,
    pub kernel_sigma: KernelSpec,
    pub drift: CoefficientProcess,
    pub diffusion: CoefficientProcess,
    /// State dimension d.
    pub dim: usize,
    /// Driving noise dimension m.
    pub noise_dim: usize,
    pub blowup_bound: f64,
}

impl VolterraModel {
    /// Scalar model with one driving noise and the default blowup bound.
    pub fn scalar(
        initial: InitialCurve,
        kernel_b: KernelSpec,
        kernel_sigma: KernelSpec,
        drift: CoefficientProcess,
        diffusion: CoefficientProcess,
    ) -> Self {
        VolterraModel {
            initial,
            kernel_b,
            kernel_sigma,
            drift,
            diffusion,
            dim: 1,
            noise_dim: 1,
            blowup_bound: DEFAULT_BLOWUP_BOUND,
        }
    }
}

enum KernelWeights {
    /// w[lag] for lag = 1..=n (entry 0 unused).
    Convolution(Vec<f64>),
    /// Row i-1 holds K(t_i, t_j*) for j = 0..i, packed triangular.
    General(Vec<f64>),
}

impl KernelWeights {
    fn build(spec: &KernelSpec, grid: &TimeGrid) -> Result<Self> {
        let n = grid.n_steps();
        let dt = grid.dt();
        if spec.is_convolution() {
            let mut w = vec![0.0; n + 1];
            for (lag, slot) in w.iter_mut().enumerate().skip(1) {
                *slot = if lag == 1 {
                    match spec.family {
                        KernelFamily::RiemannLiouville { h } => rl_cell_average(h, dt),
                        _ => spec.eval_gap(0.5 * dt)?,
                    }
                } else {
                    spec.eval_gap((lag as f64 - 0.5) * dt)?
                };
            }
            Ok(KernelWeights::Convolution(w))
        } else {
            let mut w = vec![0.0; n * (n + 1) / 2];
            for i in 1..=n {
                let t = grid.node(i);
                let base = (i - 1) * i / 2;
                for j in 0..i {
                    let t_star = (j as f64 + 0.5) * dt;
                    w[base + j] = crate::kernels::eval_kernel(spec, t, t_star)?;
                }
            }
            Ok(KernelWeights::General(w))
        }
    }

    #[inline]
    fn row_weight(&self, i: usize, j: usize) -> f64 {
        match self {
            KernelWeights::Convolution(w) => w[i - j],
            KernelWeights::General(w) => w[(i - 1) * i / 2 + j],
        }
    }
}

/// Precomputed simulator for one model on one grid.
pub struct Simulator {
    model: VolterraModel,
    grid: TimeGrid,
    wb: KernelWeights,
    ws: KernelWeights,
    /// Set when both kernels are constant, enabling the O(n) recursion.
    constant_pair: Option<(f64, f64)>,
}

impl Simulator {
    pub fn new(model: VolterraModel, grid: TimeGrid) -> Result<Self> {
        if model.dim == 0 || model.noise_dim == 0 {
            return Err(Error::Domain("model dimensions must be positive".into()));
        }
        if !(model.blowup_bound > 0.0) {
            return Err(Error::Domain("blowup bound must be positive".into()));
        }
        if let Coefficient::ConstantVector(v) = &model.drift.coefficient {
            if v.len() != model.dim {
                return Err(Error::Domain(format!(
                    "constant drift has length {}, state dimension is {}",
                    v.len(),
                    model.dim
                )));
            }
        }
        if let Coefficient::ConstantVector(v) = &model.diffusion.coefficient {
            if v.len() != model.dim * model.noise_dim {
                return Err(Error::Domain(format!(
                    "constant diffusion has length {}, expected d*m = {}",
                    v.len(),
                    model.dim * model.noise_dim
                )));
            }
        }
        if let InitialCurve::Path(p) = &model.initial {
            if p.grid() != &grid || p.dim() != model.dim {
                return Err(Error::Domain(
                    "initial path must live on the simulation grid with the model dimension"
                        .into(),
                ));
            }
        }
        model.kernel_b.validate()?;
        model.kernel_sigma.validate()?;
        for spec in [&model.kernel_b, &model.kernel_sigma] {
            if matches!(spec.family, KernelFamily::FbmMolchanGolosov { .. }) {
                return Err(Error::Domain(
                    "fbm_molchan_golosov cannot drive the Euler-Volterra scheme; use the \
                     covariance sampler"
                        .into(),
                ));
            }
        }
        let wb = KernelWeights::build(&model.kernel_b, &grid)?;
        let ws = KernelWeights::build(&model.kernel_sigma, &grid)?;
        let constant_pair = match (&model.kernel_b.family, &model.kernel_sigma.family) {
            (KernelFamily::Constant { c: cb }, KernelFamily::Constant { c: cs }) => {
                Some((*cb, *cs))
            }
            _ => None,
        };
        Ok(Simulator {
            model,
            grid,
            wb,
            ws,
            constant_pair,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// One path from the stream keyed by (seed, path_index).
    pub fn sample_path(&self, seed: u64, path_index: u64) -> Result<SamplePath> {
        let increments = sample_brownian(&self.grid, self.model.noise_dim, seed, path_index);
        self.sample_path_with_increments(&increments)
    }

    /// Path driven by externally supplied noise increments (n_steps * m,
    /// step-major). Useful for coupling resolutions and for adaptedness
    /// checks.
    pub fn sample_path_with_increments(&self, increments: &[f64]) -> Result<SamplePath> {
        let n = self.grid.n_steps();
        let d = self.model.dim;
        let m = self.model.noise_dim;
        if increments.len() != n * m {
            return Err(Error::Domain(format!(
                "expected {} increments, got {}",
                n * m,
                increments.len()
            )));
        }
        let mut path = SamplePath::zeros(self.grid, d);
        let mut bdt = vec![0.0; n * d];
        let mut sdb = vec![0.0; n * d];
        let mut gbuf = vec![0.0; d];
        let mut sigbuf = vec![0.0; d * m];
        let mut acc = vec![0.0; d];

        self.model.initial.eval(0, 0.0, &mut gbuf);
        path.value_mut(0).copy_from_slice(&gbuf);
        self.check_state(0, path.value(0))?;

        for i in 1..=n {
            // Coefficients at the left endpoint of cell i-1.
            {
                let j = i - 1;
                let (head, _) = path.values().split_at(i * d);
                let ctx = PathContext {
                    grid: &self.grid,
                    dim: d,
                    step: j,
                    values: head,
                };
                let x = &head[j * d..i * d];
                let brow = &mut bdt[j * d..i * d];
                eval_coefficient(&self.model.drift.coefficient, &ctx, x, brow)?;
                for v in brow.iter_mut() {
                    *v *= self.grid.dt();
                }
                eval_coefficient_matrix(
                    &self.model.diffusion.coefficient,
                    &ctx,
                    x,
                    &mut sigbuf,
                )?;
                let db = &increments[j * m..i * m];
                let srow = &mut sdb[j * d..i * d];
                for (di, slot) in srow.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (c, dbc) in db.iter().enumerate() {
                        acc += sigbuf[di * m + c] * dbc;
                    }
                    *slot = acc;
                }
            }

            self.model.initial.eval(i, self.grid.node(i), &mut gbuf);
            if let Some((cb, cs)) = self.constant_pair {
                // Constant kernels: X_i - X_{i-1} = g_i - g_{i-1} + cb*b dt + cs*s dB.
                let mut gprev = vec![0.0; d];
                self.model
                    .initial
                    .eval(i - 1, self.grid.node(i - 1), &mut gprev);
                let j = i - 1;
                for di in 0..d {
                    acc[di] = path.value(j)[di] + (gbuf[di] - gprev[di])
                        + cb * bdt[j * d + di]
                        + cs * sdb[j * d + di];
                }
            } else if d == 1 {
                let mut s = gbuf[0];
                match (&self.wb, &self.ws) {
                    (KernelWeights::Convolution(wb), KernelWeights::Convolution(ws)) => {
                        for j in 0..i {
                            s += wb[i - j] * bdt[j] + ws[i - j] * sdb[j];
                        }
                    }
                    _ => {
                        for j in 0..i {
                            s += self.wb.row_weight(i, j) * bdt[j]
                                + self.ws.row_weight(i, j) * sdb[j];
                        }
                    }
                }
                acc[0] = s;
            } else {
                acc.copy_from_slice(&gbuf);
                for j in 0..i {
                    let wbv = self.wb.row_weight(i, j);
                    let wsv = self.ws.row_weight(i, j);
                    for di in 0..d {
                        acc[di] += wbv * bdt[j * d + di] + wsv * sdb[j * d + di];
                    }
                }
            }
            path.value_mut(i).copy_from_slice(&acc);
            self.check_state(i, path.value(i))?;
        }
        Ok(path)
    }

    /// Independent paths with indices in `range`, in parallel; path `p` is
    /// bit-identical to `sample_path(seed, p)`.
    pub fn sample_paths(&self, seed: u64, range: Range<u64>) -> Result<Vec<SamplePath>> {
        range
            .into_par_iter()
            .map(|p| self.sample_path(seed, p))
            .collect()
    }

    fn check_state(&self, step: usize, x: &[f64]) -> Result<()> {
        for &v in x {
            if !v.is_finite() || v.abs() > self.model.blowup_bound {
                return Err(Error::Blowup {
                    step,
                    value: v,
                    bound: self.model.blowup_bound,
                });
            }
        }
        Ok(())
    }
}

fn eval_coefficient(
    coeff: &Coefficient,
    ctx: &PathContext,
    x: &[f64],
    out: &mut [f64],
) -> Result<()> {
    match coeff {
        Coefficient::ConstantVector(v) => out.copy_from_slice(v),
        Coefficient::StateFunction(f) => f(x, out),
        Coefficient::PathFunctional(f) => f(ctx, out),
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "drift produced a non-finite value at step {}",
            ctx.step()
        )));
    }
    Ok(())
}

fn eval_coefficient_matrix(
    coeff: &Coefficient,
    ctx: &PathContext,
    x: &[f64],
    out: &mut [f64],
) -> Result<()> {
    match coeff {
        Coefficient::ConstantVector(v) => out.copy_from_slice(v),
        Coefficient::StateFunction(f) => f(x, out),
        Coefficient::PathFunctional(f) => f(ctx, out),
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "diffusion produced a non-finite value at step {}",
            ctx.step()
        )));
    }
    Ok(())
}

/// Gaussian increments dB_i ~ N(0, dt I_m), step-major, from the stream
/// keyed by (seed, path_index).
pub fn sample_brownian(grid: &TimeGrid, dim_m: usize, seed: u64, path_index: u64) -> Vec<f64> {
    let mut rng = path_rng(seed, path_index);
    let scale = grid.dt().sqrt();
    (0..grid.n_steps() * dim_m)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * scale
        })
        .collect()
}

/// Brownian path started at zero (cumulative sum of increments).
pub fn brownian_path(grid: &TimeGrid, dim: usize, seed: u64, path_index: u64) -> SamplePath {
    let incr = sample_brownian(grid, dim, seed, path_index);
    let mut path = SamplePath::zeros(*grid, dim);
    for i in 1..=grid.n_steps() {
        for c in 0..dim {
            let prev = path.value(i - 1)[c];
            path.value_mut(i)[c] = prev + incr[(i - 1) * dim + c];
        }
    }
    path
}

/// Single path of the Euler-Volterra scheme; thin wrapper over `Simulator`.
pub fn simulate_volterra_ito(
    initial: InitialCurve,
    kernel_b: KernelSpec,
    kernel_sigma: KernelSpec,
    drift: CoefficientProcess,
    diffusion: CoefficientProcess,
    grid: &TimeGrid,
    seed: u64,
) -> Result<SamplePath> {
    let model = VolterraModel::scalar(initial, kernel_b, kernel_sigma, drift, diffusion);
    Simulator::new(model, *grid)?.sample_path(seed, 0)
}

enum FbmFactor {
    /// Packed lower-triangular Cholesky rows for nodes 1..=n.
    Cholesky(Vec<f64>),
    /// Dense U sqrt(max(lambda,0)) when Cholesky fails.
    Eigen(Vec<f64>),
}

/// Exact Gaussian sampler for fractional Brownian motion on a grid.
pub struct FbmSampler {
    grid: TimeGrid,
    h: f64,
    dim: usize,
    factor: FbmFactor,
    /// True when the covariance factorization fell back to eigenvalue
    /// clipping at zero.
    pub clipped: bool,
}

/// Covariance factor: Cholesky, or eigen square root with negative
/// eigenvalues clipped to zero (flagged).
fn factor_covariance(c: DMatrix<f64>) -> (FbmFactor, bool) {
    let n = c.nrows();
    match c.clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            let mut packed = vec![0.0; n * (n + 1) / 2];
            for i in 0..n {
                let base = i * (i + 1) / 2;
                for j in 0..=i {
                    packed[base + j] = l[(i, j)];
                }
            }
            (FbmFactor::Cholesky(packed), false)
        }
        None => {
            let eig = SymmetricEigen::new(c);
            let mut b = vec![0.0; n * n];
            for j in 0..n {
                let lam = eig.eigenvalues[j].max(0.0).sqrt();
                for i in 0..n {
                    b[i * n + j] = eig.eigenvectors[(i, j)] * lam;
                }
            }
            (FbmFactor::Eigen(b), true)
        }
    }
}

impl FbmSampler {
    pub fn new(h: f64, grid: &TimeGrid, dim: usize) -> Result<Self> {
        if !(0.0 < h && h < 1.0) {
            return Err(Error::Domain(format!("hurst index must lie in (0,1), got {h}")));
        }
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        let n = grid.n_steps();
        if n > 8192 {
            return Err(Error::Domain(format!(
                "covariance factorization is guarded at 8192 steps, got {n}"
            )));
        }
        let two_h = 2.0 * h;
        let mut c = DMatrix::zeros(n, n);
        for i in 1..=n {
            let ti = grid.node(i);
            for j in 1..=i {
                let tj = grid.node(j);
                let v = 0.5 * (ti.powf(two_h) + tj.powf(two_h) - (ti - tj).powf(two_h));
                c[(i - 1, j - 1)] = v;
                c[(j - 1, i - 1)] = v;
            }
        }
        let (factor, clipped) = factor_covariance(c);
        Ok(FbmSampler {
            grid: *grid,
            h,
            dim,
            factor,
            clipped,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.h
    }

    /// One fBm path from the stream keyed by (seed, path_index); X_0 = 0.
    pub fn sample(&self, seed: u64, path_index: u64) -> SamplePath {
        let n = self.grid.n_steps();
        let d = self.dim;
        let mut rng = path_rng(seed, path_index);
        let mut path = SamplePath::zeros(self.grid, d);
        let mut z = vec![0.0; n];
        for c in 0..d {
            for slot in z.iter_mut() {
                *slot = rng.sample(StandardNormal);
            }
            match &self.factor {
                FbmFactor::Cholesky(packed) => {
                    for i in 0..n {
                        let base = i * (i + 1) / 2;
                        let mut acc = 0.0;
                        for (j, zj) in z[..=i].iter().enumerate() {
                            acc += packed[base + j] * zj;
                        }
                        path.value_mut(i + 1)[c] = acc;
                    }
                }
                FbmFactor::Eigen(b) => {
                    for i in 0..n {
                        let row = &b[i * n..(i + 1) * n];
                        let mut acc = 0.0;
                        for (j, zj) in z.iter().enumerate() {
                            acc += row[j] * zj;
                        }
                        path.value_mut(i + 1)[c] = acc;
                    }
                }
            }
        }
        path
    }

    /// Independent paths for indices in `range`, in parallel; path `p` is
    /// bit-identical to `sample(seed, p)`.
    pub fn sample_many(&self, seed: u64, range: Range<u64>) -> Vec<SamplePath> {
        range
            .into_par_iter()
            .map(|p| self.sample(seed, p))
            .collect()
    }
}

/// Exact fBm path via covariance factorization.
pub fn simulate_fbm(
    h: f64,
    grid: &TimeGrid,
    dim: usize,
    seed: u64,
    path_index: u64,
) -> Result<SamplePath> {
    Ok(FbmSampler::new(h, grid, dim)?.sample(seed, path_index))
}

/// Euler-Volterra scheme for the power-diffusion model
/// X_t = x0 + int K (b0 + beta X_s) ds + int K max(X_s,0)^theta dB_s
/// with K the Riemann-Liouville kernel of index `h`.
pub fn simulate_volterra_power(
    h: f64,
    x0: f64,
    b0: f64,
    beta: f64,
    theta: f64,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> Result<SamplePath> {
    if !(0.5..=1.0).contains(&theta) {
        return Err(Error::Domain(format!(
            "power diffusion exponent must lie in [1/2,1], got {theta}"
        )));
    }
    if x0 < 0.0 || b0 < 0.0 {
        return Err(Error::Domain(
            "power diffusion model needs x0 >= 0 and b0 >= 0".into(),
        ));
    }
    let kb = KernelSpec::riemann_liouville(h, crate::kernels::KernelRole::Drift)?;
    let ks = KernelSpec::riemann_liouville(h, crate::kernels::KernelRole::Diffusion)?;
    let drift = CoefficientProcess::state(move |x: &[f64], out: &mut [f64]| {
        out[0] = b0 + beta * x[0];
    });
    let diffusion = CoefficientProcess::state(move |x: &[f64], out: &mut [f64]| {
        out[0] = x[0].max(0.0).powf(theta);
    });
    let model = VolterraModel::scalar(
        InitialCurve::constant(vec![x0]),
        kb,
        ks,
        drift,
        diffusion,
    );
    Simulator::new(model, *grid)?.sample_path(seed, path_index)
}

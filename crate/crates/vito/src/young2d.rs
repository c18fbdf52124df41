//! Two-parameter Hölder calculus on grids and the nonlinear Young
//! integral.
//!
//! The box increment of a two-parameter function,
//!
//! box_{s,t} f = f(t1,t2) - f(t1,s2) - f(s1,t2) + f(s1,s2),
//!
//! drives everything here: mixed Hölder seminorms bound box increments by
//! (t1-s1)^a1 (t2-s2)^a2, and the nonlinear Young integral of a field A
//! against a path theta is the limit of sums of box_{cell} A(., ., x)
//! frozen at x = theta(u2) - theta(u1), the increment at the lower-left
//! cell corner. Sums converge when gamma + kappa * beta > 1 for A in
//! C^gamma_t C^{1+kappa}_x and theta beta-Hölder, with germ defect of
//! order Delta^{2 gamma + kappa beta} on boxes of side Delta.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinFit};
use crate::grid::{SamplePath, TimeGrid};
use crate::sewing::pairwise_sum;

/// Two-parameter function sampled on a product grid, node-major in the
/// first axis.
#[derive(Clone, Debug)]
pub struct GridField2 {
    grid1: TimeGrid,
    grid2: TimeGrid,
    values: Vec<f64>,
}

impl GridField2 {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid1: TimeGrid, grid2: TimeGrid, f: F) -> Self {
        let (n1, n2) = (grid1.n_nodes(), grid2.n_nodes());
        let mut values = Vec::with_capacity(n1 * n2);
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                values.push(f(grid1.node(i1), grid2.node(i2)));
            }
        }
        GridField2 { grid1, grid2, values }
    }

    /// Samples by node index instead of time, for exactly representable
    /// test data.
    pub fn from_node_fn<F: Fn(usize, usize) -> f64>(
        grid1: TimeGrid,
        grid2: TimeGrid,
        f: F,
    ) -> Self {
        let (n1, n2) = (grid1.n_nodes(), grid2.n_nodes());
        let mut values = Vec::with_capacity(n1 * n2);
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                values.push(f(i1, i2));
            }
        }
        GridField2 { grid1, grid2, values }
    }

    pub fn grids(&self) -> (&TimeGrid, &TimeGrid) {
        (&self.grid1, &self.grid2)
    }

    pub fn value(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.grid2.n_nodes() + i2]
    }
}

/// Four-point alternating sum of f over the box [s1,t1] x [s2,t2].
pub fn box_increment(f: &GridField2, s: (f64, f64), t: (f64, f64)) -> Result<f64> {
    if s.0 > t.0 || s.1 > t.1 {
        return Err(Error::Domain(format!(
            "box corners must be ordered, got s=({}, {}), t=({}, {})",
            s.0, s.1, t.0, t.1
        )));
    }
    let s1 = f.grid1.index_of(s.0)?;
    let t1 = f.grid1.index_of(t.0)?;
    let s2 = f.grid2.index_of(s.1)?;
    let t2 = f.grid2.index_of(t.1)?;
    Ok(f.value(t1, t2) - f.value(t1, s2) - f.value(s1, t2) + f.value(s1, s2))
}

/// The three mixed Hölder seminorms of a grid-sampled function.
#[derive(Clone, Copy, Debug)]
pub struct Holder2Seminorms {
    /// sup |f(t1,.) - f(s1,.)| / (t1-s1)^a1.
    pub d10: f64,
    /// sup |f(.,t2) - f(.,s2)| / (t2-s2)^a2.
    pub d01: f64,
    /// sup |box f| / ((t1-s1)^a1 (t2-s2)^a2).
    pub d11: f64,
}

impl Holder2Seminorms {
    pub fn total(&self) -> f64 {
        self.d10 + self.d01 + self.d11
    }
}

/// Maximizes the three increment ratios over all admissible grid pairs.
pub fn holder2_seminorms(f: &GridField2, alpha: (f64, f64)) -> Result<Holder2Seminorms> {
    let (n1, n2) = (f.grid1.n_nodes(), f.grid2.n_nodes());
    if n1 < 4 || n2 < 4 {
        return Err(Error::InsufficientData(format!(
            "seminorms need at least 4 nodes per axis, got {n1} x {n2}"
        )));
    }
    if !(alpha.0 > 0.0) || !(alpha.1 > 0.0) {
        return Err(Error::Domain(format!(
            "Hölder exponents must be positive, got ({}, {})",
            alpha.0, alpha.1
        )));
    }
    let mut d10 = 0.0f64;
    let mut d01 = 0.0f64;
    let mut d11 = 0.0f64;
    for s1 in 0..n1 {
        for t1 in s1 + 1..n1 {
            let w1 = (f.grid1.node(t1) - f.grid1.node(s1)).powf(alpha.0);
            for s2 in 0..n2 {
                let a = (f.value(t1, s2) - f.value(s1, s2)).abs() / w1;
                d10 = d10.max(a);
                for t2 in s2 + 1..n2 {
                    let w2 = (f.grid2.node(t2) - f.grid2.node(s2)).powf(alpha.1);
                    let b = (f.value(t1, t2) - f.value(t1, s2) - f.value(s1, t2)
                        + f.value(s1, s2))
                    .abs()
                        / (w1 * w2);
                    d11 = d11.max(b);
                }
            }
        }
    }
    for s2 in 0..n2 {
        for t2 in s2 + 1..n2 {
            let w2 = (f.grid2.node(t2) - f.grid2.node(s2)).powf(alpha.1);
            for i1 in 0..n1 {
                let a = (f.value(i1, t2) - f.value(i1, s2)).abs() / w2;
                d01 = d01.max(a);
            }
        }
    }
    Ok(Holder2Seminorms { d10, d01, d11 })
}

type FieldFn = dyn Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync;

/// Time-indexed vector field A(t1, t2, x) with an analytic spatial
/// gradient and declared regularity.
#[derive(Clone)]
pub struct TwoParamField {
    dim: usize,
    eval: Arc<FieldFn>,
    grad: Arc<FieldFn>,
    gamma: f64,
    spatial_kappa: f64,
}

impl TwoParamField {
    /// Field from closures writing the value (d entries) and the row-major
    /// x-gradient (d*d entries); gamma in (1/2, 1], spatial_kappa in
    /// (0, 1].
    pub fn new<F, G>(dim: usize, gamma: f64, spatial_kappa: f64, eval: F, grad: G) -> Result<Self>
    where
        F: Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        G: Fn(f64, f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::Domain("field dimension must be positive".into()));
        }
        if !(gamma > 0.5 && gamma <= 1.0) {
            return Err(Error::Domain(format!("gamma must lie in (1/2, 1], got {gamma}")));
        }
        if !(spatial_kappa > 0.0 && spatial_kappa <= 1.0) {
            return Err(Error::Domain(format!(
                "spatial kappa must lie in (0, 1], got {spatial_kappa}"
            )));
        }
        Ok(TwoParamField {
            dim,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            gamma,
            spatial_kappa,
        })
    }

    /// Scalar field t1 t2-free convenience wrapper.
    pub fn scalar<F, G>(gamma: f64, spatial_kappa: f64, f: F, g: G) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        TwoParamField::new(
            1,
            gamma,
            spatial_kappa,
            move |t1, t2, x, out| out[0] = f(t1, t2, x[0]),
            move |t1, t2, x, out| out[0] = g(t1, t2, x[0]),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn spatial_kappa(&self) -> f64 {
        self.spatial_kappa
    }

    pub fn eval(&self, t1: f64, t2: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.eval)(t1, t2, x, &mut out);
        out
    }

    /// Row-major d x d spatial gradient.
    pub fn grad_x(&self, t1: f64, t2: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        (self.grad)(t1, t2, x, &mut out);
        out
    }

    fn box_at(&self, u: (f64, f64), v: (f64, f64), x: &[f64], scratch: &mut [f64]) -> Vec<f64> {
        let mut out = self.eval(v.0, v.1, x);
        (self.eval)(v.0, u.1, x, scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o -= s;
        }
        (self.eval)(u.0, v.1, x, scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o -= s;
        }
        (self.eval)(u.0, u.1, x, scratch);
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o += s;
        }
        out
    }
}

/// Largest increment ratio |theta_t - theta_s| / (t-s)^beta over grid
/// pairs.
pub fn path_holder_seminorm(theta: &SamplePath, beta: f64) -> f64 {
    let n = theta.grid().n_nodes();
    let mut best = 0.0f64;
    for s in 0..n {
        for t in s + 1..n {
            let gap = theta.grid().node(t) - theta.grid().node(s);
            let inc: f64 = theta
                .value(t)
                .iter()
                .zip(theta.value(s))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            best = best.max(inc / gap.powf(beta));
        }
    }
    best
}

pub const MAX_YOUNG_LEVEL: u32 = 13;

/// Nonlinear Young integral value with its refinement diagnostics.
#[derive(Clone, Debug)]
pub struct YoungIntegral2 {
    pub value: Vec<f64>,
    /// Norm of the difference between the last two refinement levels.
    pub error_indicator: f64,
    /// False when the refinement differences showed no net decrease over
    /// the last three levels.
    pub converged: bool,
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn rect_sum(
    a: &TwoParamField,
    theta: &SamplePath,
    rect: ((f64, f64), (f64, f64)),
    level: u32,
) -> Result<Vec<f64>> {
    let ((s1, t1), (s2, t2)) = rect;
    let cells = 1usize << level;
    let h1 = (t1 - s1) / cells as f64;
    let h2 = (t2 - s2) / cells as f64;
    let d = a.dim();
    let rows: Vec<Vec<f64>> = (0..cells)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut row = vec![0.0; d];
            let mut scratch = vec![0.0; d];
            let mut x = vec![0.0; d];
            let u1 = s1 + i as f64 * h1;
            let v1 = if i + 1 == cells { t1 } else { s1 + (i + 1) as f64 * h1 };
            let n1 = theta.grid().index_of(u1)?;
            for j in 0..cells {
                let u2 = s2 + j as f64 * h2;
                let v2 = if j + 1 == cells { t2 } else { s2 + (j + 1) as f64 * h2 };
                let n2 = theta.grid().index_of(u2)?;
                for (xk, (a2, a1)) in x
                    .iter_mut()
                    .zip(theta.value(n2).iter().zip(theta.value(n1).iter()))
                {
                    *xk = a2 - a1;
                }
                let cell = a.box_at((u1, u2), (v1, v2), &x, &mut scratch);
                for (r, c) in row.iter_mut().zip(cell.iter()) {
                    *r += c;
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(rows, d))
}

/// Riemann sums of box_{cell} A(., ., theta_{u2} - theta_{u1}) over the
/// dyadic partition of the rectangle at the given level, with the
/// difference to the previous level as error indicator.
pub fn nl_young_integral(
    a: &TwoParamField,
    theta: &SamplePath,
    theta_beta: f64,
    rect: ((f64, f64), (f64, f64)),
    level: u32,
) -> Result<YoungIntegral2> {
    if !(theta_beta > 0.0 && theta_beta <= 1.0) {
        return Err(Error::Domain(format!(
            "path Hölder exponent must lie in (0, 1], got {theta_beta}"
        )));
    }
    if a.gamma + a.spatial_kappa * theta_beta <= 1.0 {
        return Err(Error::Domain(format!(
            "gamma + kappa * beta = {} does not exceed 1; sums need not converge",
            a.gamma + a.spatial_kappa * theta_beta
        )));
    }
    let ((s1, t1), (s2, t2)) = rect;
    if s1 > t1 || s2 > t2 {
        return Err(Error::Domain("rectangle corners must be ordered".into()));
    }
    if level < 1 || level > MAX_YOUNG_LEVEL {
        return Err(Error::Domain(format!(
            "level must lie in [1, {MAX_YOUNG_LEVEL}], got {level}"
        )));
    }
    if s1 == t1 || s2 == t2 {
        return Ok(YoungIntegral2 {
            value: vec![0.0; a.dim()],
            error_indicator: 0.0,
            converged: true,
        });
    }
    let first = level.saturating_sub(3);
    let sums: Vec<Vec<f64>> = (first..=level)
        .map(|l| rect_sum(a, theta, rect, l))
        .collect::<Result<_>>()?;
    let diffs: Vec<f64> = (1..sums.len())
        .map(|i| {
            l2(&sums[i]
                .iter()
                .zip(sums[i - 1].iter())
                .map(|(x, y)| x - y)
                .collect::<Vec<_>>())
        })
        .collect();
    let error_indicator = diffs.last().copied().unwrap_or(0.0);
    let converged = if diffs.len() >= 3 {
        let k = diffs.len();
        let scale = 1e-14 * (1.0 + l2(&sums[sums.len() - 1]));
        let stalled = diffs[k - 1] >= diffs[k - 3];
        !stalled || diffs[k - 1] <= scale
    } else {
        true
    };
    Ok(YoungIntegral2 {
        value: sums.last().cloned().unwrap(),
        error_indicator,
        converged,
    })
}

/// Fitted defect scaling of the one-cell germ against the integral.
#[derive(Clone, Debug)]
pub enum GermExponent {
    /// Defects vanish to rounding: the field is additive in time boxes.
    Exact,
    Fitted { exponent: f64, fit: LinFit },
}

impl GermExponent {
    pub fn exponent(&self) -> Option<f64> {
        match self {
            GermExponent::Exact => None,
            GermExponent::Fitted { exponent, .. } => Some(*exponent),
        }
    }
}

/// Measures |integral over box - box A(corner increment)| on dyadically
/// shrinking squares anchored at `corner` with largest side `delta0`, and
/// regresses the defect on the side length; expected slope at least
/// 2 gamma + kappa beta.
pub fn germ_error_exponent(
    a: &TwoParamField,
    theta: &SamplePath,
    theta_beta: f64,
    corner: (f64, f64),
    delta0: f64,
    n_sizes: usize,
    level: u32,
) -> Result<GermExponent> {
    if n_sizes < 5 {
        return Err(Error::InsufficientData(format!(
            "{n_sizes} box sizes, need at least 5"
        )));
    }
    if !(delta0 > 0.0) {
        return Err(Error::Domain(format!("box side must be positive, got {delta0}")));
    }
    let mut ln_delta = Vec::with_capacity(n_sizes);
    let mut ln_defect = Vec::with_capacity(n_sizes);
    let mut defects = Vec::with_capacity(n_sizes);
    let mut scale = 0.0f64;
    for j in 0..n_sizes {
        let delta = delta0 * 2f64.powi(-(j as i32));
        let rect = (
            (corner.0, corner.0 + delta),
            (corner.1, corner.1 + delta),
        );
        let integral = nl_young_integral(a, theta, theta_beta, rect, level)?;
        let n1 = theta.grid().index_of(corner.0)?;
        let n2 = theta.grid().index_of(corner.1)?;
        let x: Vec<f64> = theta
            .value(n2)
            .iter()
            .zip(theta.value(n1).iter())
            .map(|(b, c)| b - c)
            .collect();
        let mut scratch = vec![0.0; a.dim()];
        let germ = a.box_at(
            (corner.0, corner.1),
            (corner.0 + delta, corner.1 + delta),
            &x,
            &mut scratch,
        );
        let defect = l2(&integral
            .value
            .iter()
            .zip(germ.iter())
            .map(|(p, q)| p - q)
            .collect::<Vec<_>>());
        scale = scale.max(l2(&germ));
        ln_delta.push(delta.ln());
        defects.push(defect);
    }
    if defects.iter().all(|&d| d <= 1e-13 * (1.0 + scale)) {
        return Ok(GermExponent::Exact);
    }
    for &d in &defects {
        if !(d > 0.0) {
            return Err(Error::Domain(
                "zero defect mixed with nonzero defects; no power law to fit".into(),
            ));
        }
        ln_defect.push(d.ln());
    }
    let fit = linear_fit(&ln_delta, &ln_defect)?;
    Ok(GermExponent::Fitted {
        exponent: fit.slope,
        fit,
    })
}

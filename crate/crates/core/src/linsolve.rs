//! MINRES for symmetric, possibly indefinite, systems.
//!
//! The recurrence is the Paige-Saunders formulation with an optional
//! symmetric positive diagonal preconditioner. Convergence is declared on
//! the true residual `‖b − Mx‖ / ‖b‖`: when the recurrence estimate reaches
//! the tolerance but the recomputed residual has not (rounding drift on
//! long runs), the iteration resumes from the current iterate.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::CsrMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("operator is not symmetric: |xᵀMy − yᵀMx| = {discrepancy:.3e} (scale {scale:.3e})")]
    NonSymmetric { discrepancy: f64, scale: f64 },

    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("dimension mismatch: operator {operator}, vector {vector}")]
    DimensionMismatch { operator: usize, vector: usize },

    #[error("invalid solver configuration: {0}")]
    Config(String),
}

/// A square linear operator `y = M x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Diagonal entries, used by the Jacobi preconditioner.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.nrows(), self.ncols());
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(CsrMatrix::diagonal(self))
    }
}

/// Dense row-major operator, mainly for small systems and tests.
impl LinearOperator for Vec<Vec<f64>> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, row) in y.iter_mut().zip(self) {
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some((0..self.len()).map(|i| self[i][i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Relative residual tolerance, in (0, 1).
    pub tol: f64,
    /// Iteration cap; `None` means 20 × system dimension.
    pub max_iter: Option<usize>,
    /// Precondition with `|diag(M)|` (entries of zero are treated as 1).
    pub jacobi: bool,
    /// Run the random-probe symmetry check before iterating.
    pub check_symmetry: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: None,
            jacobi: false,
            check_symmetry: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(SolveError::Config(format!(
                "tolerance {} not in (0, 1)",
                self.tol
            )));
        }
        if self.max_iter == Some(0) {
            return Err(SolveError::Config("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: Vec<f64>,
    /// Recomputed `‖b − Mx‖ / ‖b‖`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Recurrence residual estimate relative to `‖b‖` after each iteration.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Random-probe symmetry test: `|xᵀMy − yᵀMx| ≤ 1e−10 · ‖x‖‖My‖`.
pub fn check_symmetry<O: LinearOperator + ?Sized>(op: &O, seed: u64) -> Result<(), SolveError> {
    let n = op.dim();
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut mx = vec![0.0; n];
    let mut my = vec![0.0; n];
    op.apply(&x, &mut mx);
    op.apply(&y, &mut my);
    let discrepancy = (dot(&x, &my) - dot(&y, &mx)).abs();
    let scale = (norm(&x) * norm(&my))
        .max(norm(&y) * norm(&mx))
        .max(f64::MIN_POSITIVE);
    if discrepancy > 1e-10 * scale || !discrepancy.is_finite() {
        return Err(SolveError::NonSymmetric { discrepancy, scale });
    }
    Ok(())
}

/// Solves `M x = b` starting from zero.
pub fn minres<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveOutcome, SolveError> {
    minres_from(op, b, None, cfg)
}

/// Solves `M x = b` starting from `x0` (zero when `None`).
pub fn minres_from<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<SolveOutcome, SolveError> {
    let weights = if cfg.jacobi {
        let diag = op
            .diagonal()
            .ok_or_else(|| SolveError::Config("operator exposes no diagonal".into()))?;
        Some(
            diag.iter()
                .map(|&d| if d == 0.0 { 1.0 } else { d.abs() })
                .collect::<Vec<_>>(),
        )
    } else {
        None
    };
    minres_preconditioned(op, b, x0, weights.as_deref(), cfg)
}

/// Solves `M x = b` with the diagonal preconditioner `P = diag(weights)`
/// (applied as `P⁻¹`), which must be positive. `cfg.jacobi` is ignored.
pub fn minres_preconditioned<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[f64],
    x0: Option<&[f64]>,
    weights: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<SolveOutcome, SolveError> {
    cfg.validate()?;
    let n = op.dim();
    if b.len() != n {
        return Err(SolveError::DimensionMismatch {
            operator: n,
            vector: b.len(),
        });
    }
    for v in [x0, weights].into_iter().flatten() {
        if v.len() != n {
            return Err(SolveError::DimensionMismatch {
                operator: n,
                vector: v.len(),
            });
        }
    }
    if let Some(w) = weights {
        if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(SolveError::Config(
                "preconditioner weights must be positive".into(),
            ));
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite { iteration: 0 });
    }
    if cfg.check_symmetry {
        check_symmetry(op, 0x5eed)?;
    }

    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(SolveOutcome {
            solution: vec![0.0; n],
            residual: 0.0,
            iterations: 0,
            converged: true,
            history: Vec::new(),
        });
    }

    let precond: Option<Vec<f64>> = weights.map(|w| w.iter().map(|v| 1.0 / v).collect());

    let max_iter = cfg.max_iter.unwrap_or(20 * n).max(1);
    let mut x: Vec<f64> = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut scratch = vec![0.0; n];

    let true_residual = |x: &[f64], r: &mut Vec<f64>| -> f64 {
        op.apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        norm(r) / bnorm
    };

    let mut residual = true_residual(&x, &mut scratch);
    // A handful of resumptions covers rounding drift; more means stagnation.
    for _cycle in 0..8 {
        if residual <= cfg.tol || iterations >= max_iter {
            break;
        }
        let r0 = scratch.clone();
        let (done, its) = minres_cycle(
            op,
            &r0,
            bnorm,
            precond.as_deref(),
            &mut x,
            cfg.tol,
            max_iter - iterations,
            iterations,
            &mut history,
        )?;
        iterations += its;
        residual = true_residual(&x, &mut scratch);
        if !residual.is_finite() {
            return Err(SolveError::NonFinite {
                iteration: iterations,
            });
        }
        if !done {
            break;
        }
    }

    Ok(SolveOutcome {
        solution: x,
        residual,
        iterations,
        converged: residual <= cfg.tol,
        history,
    })
}

/// One MINRES run on the correction equation `M e = r0`, accumulating into
/// `x`. Returns whether the estimate reached the tolerance and how many
/// iterations were used.
#[allow(clippy::too_many_arguments)]
fn minres_cycle<O: LinearOperator + ?Sized>(
    op: &O,
    r0: &[f64],
    bnorm: f64,
    precond: Option<&[f64]>,
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    offset: usize,
    history: &mut Vec<f64>,
) -> Result<(bool, usize), SolveError> {
    let n = r0.len();
    let apply_prec = |src: &[f64], dst: &mut [f64]| match precond {
        Some(p) => dst.iter_mut().zip(src).zip(p).for_each(|((d, s), w)| *d = s * w),
        None => dst.copy_from_slice(src),
    };

    let mut r1 = r0.to_vec();
    let mut r2 = r0.to_vec();
    let mut y = vec![0.0; n];
    apply_prec(&r1, &mut y);
    let beta1 = dot(&r1, &y);
    if beta1 < 0.0 {
        return Err(SolveError::Config(
            "preconditioner is not positive definite".into(),
        ));
    }
    let beta1 = beta1.sqrt();
    if beta1 == 0.0 {
        return Ok((true, 0));
    }
    // The recurrence estimate is in the preconditioned norm; scale it to the
    // Euclidean norm of the starting residual so the stopping test compares
    // like with like.
    let scale = norm(r0) / beta1;

    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];

    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0, 0.0);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);

    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        v.iter_mut().zip(&y).for_each(|(vi, yi)| *vi = s * yi);
        op.apply(&v, &mut y);
        if itn >= 2 {
            let f = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(yi, ri)| *yi -= f * ri);
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(yi, ri)| *yi -= f * ri);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        apply_prec(&r2, &mut y);
        oldb = beta;
        let bb = dot(&r2, &y);
        if !bb.is_finite() || !alfa.is_finite() {
            return Err(SolveError::NonFinite {
                iteration: offset + itn,
            });
        }
        beta = bb.max(0.0).sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;

        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }

        let rel = phibar.abs() * scale / bnorm;
        history.push(rel);
        log::trace!("minres it {} rel {:.3e}", offset + itn, rel);
        if rel <= tol || beta == 0.0 {
            return Ok((true, itn));
        }
    }
    Ok((false, max_iter))
}

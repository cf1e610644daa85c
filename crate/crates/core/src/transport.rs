//! Semi-Lagrangian transport: the Euler upwind map `X₁(w, Δt)(x) = x − w(x)Δt`
//! and evaluation of `u ∘ X₁` at element quadrature points.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::fem::FEField;
use crate::mesh::SimplexMesh;
use crate::quadrature::QuadratureRule;
use crate::{Error, Point, Result};

/// Feet outside the closed domain by at most this much are clamped back.
pub const CLAMP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflCheck {
    /// `Δt ‖w‖_{1,∞}`.
    pub product: f64,
    /// `product < 1`, which keeps every upwind point inside the domain.
    pub admissible: bool,
}

/// Evaluates `Δt ‖w‖_{1,∞}` for a velocity field with zero boundary values.
pub fn check_cfl(mesh: &SimplexMesh, w: &FEField, dt: f64) -> CflCheck {
    let product = dt * w.norms(mesh).w1inf;
    CflCheck {
        product,
        admissible: product < 1.0,
    }
}

/// Upwind-point evaluator for a fixed transporting velocity and time step.
#[derive(Debug)]
pub struct UpwindEvaluator<'a> {
    mesh: &'a SimplexMesh,
    w: &'a FEField,
    dt: f64,
    clamped: AtomicUsize,
    feet: AtomicUsize,
}

impl<'a> UpwindEvaluator<'a> {
    /// Builds an evaluator after checking `Δt ‖w‖_{1,∞} < 1`.
    pub fn new(mesh: &'a SimplexMesh, w: &'a FEField, dt: f64) -> Result<(Self, CflCheck)> {
        let cfl = check_cfl(mesh, w, dt);
        if !cfl.admissible {
            return Err(Error::Cfl {
                step: 0,
                product: cfl.product,
                limit: 1.0,
            });
        }
        Ok((Self::unchecked(mesh, w, dt), cfl))
    }

    /// Builds an evaluator without the CFL check; the caller is responsible
    /// for having verified it.
    pub fn unchecked(mesh: &'a SimplexMesh, w: &'a FEField, dt: f64) -> Self {
        assert_eq!(
            w.components(),
            mesh.dim(),
            "transporting field must be a velocity"
        );
        UpwindEvaluator {
            mesh,
            w,
            dt,
            clamped: AtomicUsize::new(0),
            feet: AtomicUsize::new(0),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of feet clamped back into the domain so far.
    pub fn clamp_count(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }

    /// Number of feet computed so far.
    pub fn foot_count(&self) -> usize {
        self.feet.load(Ordering::Relaxed)
    }

    /// `x − w(x) Δt` for an arbitrary `x` in the closed domain.
    pub fn upwind_point(&self, x: &Point) -> Result<Point> {
        let wx = self.w.eval_at(self.mesh, x)?;
        self.foot(x, &wx)
    }

    /// `x − wx Δt`, clamped to the domain when the excursion is rounding.
    fn foot(&self, x: &Point, wx: &[f64; 3]) -> Result<Point> {
        self.feet.fetch_add(1, Ordering::Relaxed);
        let d = self.mesh.dim();
        let mut y = [0.0; 3];
        let mut excess: f64 = 0.0;
        for c in 0..d {
            y[c] = x[c] - wx[c] * self.dt;
            excess = excess.max(-y[c]).max(y[c] - 1.0);
        }
        if excess > 0.0 {
            if excess > CLAMP_TOL {
                return Err(Error::FootOutside {
                    foot: y[..d].to_vec(),
                    excess,
                });
            }
            for c in y.iter_mut().take(d) {
                *c = c.clamp(0.0, 1.0);
            }
            self.clamped.fetch_add(1, Ordering::Relaxed);
        }
        Ok(y)
    }

    /// `(u ∘ X₁)(x_q)` for every element and quadrature point, stored as
    /// `values[e * rule.len() + q]`.
    pub fn composed_values(&self, u: &FEField, rule: &QuadratureRule) -> Result<Vec<[f64; 3]>> {
        let mesh = self.mesh;
        let d = mesh.dim();
        let nq = rule.len();
        let mut out = vec![[0.0; 3]; mesh.num_elements() * nq];
        out.par_chunks_mut(nq)
            .enumerate()
            .try_for_each(|(e, chunk)| -> Result<()> {
                for (q, slot) in chunk.iter_mut().enumerate() {
                    let bary = &rule.points()[q][..=d];
                    let x = mesh.point_from_barycentric(e, bary);
                    let wx = self.w.eval_bary(mesh, e, bary);
                    let y = if self.dt == 0.0 { x } else { self.foot(&x, &wx)? };
                    *slot = if y == x {
                        u.eval_bary(mesh, e, bary)
                    } else {
                        u.eval(mesh, &mesh.locate(&y)?)
                    };
                }
                Ok(())
            })?;
        Ok(out)
    }
}

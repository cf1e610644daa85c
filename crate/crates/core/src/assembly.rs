//! Global matrices and right-hand sides of the stabilized scheme.
//!
//! Unknowns of the saddle system are ordered as
//!
//! ```text
//! [ interior velocity DOFs (component-major) | pressure (all vertices) | λ ]
//! ```
//!
//! where `λ` is the Lagrange multiplier enforcing `(p_h, 1) = 0`. Homogeneous
//! Dirichlet velocity DOFs are eliminated, so the system matrix is
//!
//! ```text
//! [ A   Bᵀ  0 ]
//! [ B  −C   m ]
//! [ 0   mᵀ  0 ]
//! ```
//!
//! with `A = M/Δt + K` (or `K` alone for the Stokes projection).

use rayon::prelude::*;

use crate::fem::FEField;
use crate::mesh::SimplexMesh;
use crate::quadrature::QuadratureRule;
use crate::sparse::{CsrBuilder, CsrMatrix};
use crate::transport::UpwindEvaluator;
use crate::{Gradient, Point, Result};

const NONE: usize = usize::MAX;

/// Maps mesh vertices and components to saddle-system unknowns.
#[derive(Debug, Clone)]
pub struct DofMap {
    dim: usize,
    num_vertices: usize,
    velocity: Vec<usize>,
    num_velocity: usize,
}

impl DofMap {
    pub fn new(mesh: &SimplexMesh) -> Self {
        let (d, nv) = (mesh.dim(), mesh.num_vertices());
        let mut velocity = vec![NONE; d * nv];
        let mut next = 0;
        for c in 0..d {
            for v in 0..nv {
                if !mesh.is_boundary(v) {
                    velocity[c * nv + v] = next;
                    next += 1;
                }
            }
        }
        DofMap {
            dim: d,
            num_vertices: nv,
            velocity,
            num_velocity: next,
        }
    }

    pub fn velocity(&self, component: usize, vertex: usize) -> Option<usize> {
        self.velocity_full(component * self.num_vertices + vertex)
    }

    /// Interior index of a component-major full velocity index.
    fn velocity_full(&self, full: usize) -> Option<usize> {
        match self.velocity[full] {
            NONE => None,
            i => Some(i),
        }
    }

    pub fn pressure(&self, vertex: usize) -> usize {
        self.num_velocity + vertex
    }

    pub fn multiplier(&self) -> usize {
        self.num_velocity + self.num_vertices
    }

    pub fn num_velocity(&self) -> usize {
        self.num_velocity
    }

    /// Total number of unknowns.
    pub fn len(&self) -> usize {
        self.num_velocity + self.num_vertices + 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Splits a solution vector into velocity and pressure fields.
    pub fn split(&self, mesh: &SimplexMesh, x: &[f64]) -> (FEField, FEField) {
        assert_eq!(x.len(), self.len());
        let nv = self.num_vertices;
        let mut u = vec![0.0; self.dim * nv];
        for (full, &i) in self.velocity.iter().enumerate() {
            if i != NONE {
                u[full] = x[i];
            }
        }
        let p = x[self.num_velocity..self.num_velocity + nv].to_vec();
        (
            FEField::from_values(mesh, self.dim, u),
            FEField::from_values(mesh, 1, p),
        )
    }

    /// Packs fields into a solution vector (boundary velocity values and the
    /// multiplier are dropped / zeroed).
    pub fn pack(&self, u: &FEField, p: &FEField) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        for (full, &i) in self.velocity.iter().enumerate() {
            if i != NONE {
                x[i] = u.values()[full];
            }
        }
        x[self.num_velocity..self.num_velocity + self.num_vertices].copy_from_slice(p.values());
        x
    }
}

/// Sorted vertex neighbourhoods (each vertex is its own neighbour).
fn vertex_pattern(mesh: &SimplexMesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.num_vertices()];
    for e in 0..mesh.num_elements() {
        let verts = mesh.element(e);
        for &a in verts {
            adj[a].extend_from_slice(verts);
        }
    }
    for row in adj.iter_mut() {
        row.sort_unstable();
        row.dedup();
    }
    adj
}

/// Pattern of a `components × components` block operator on vertex
/// unknowns, component-major. With `coupled = false` only diagonal blocks
/// are present.
fn block_pattern(adj: &[Vec<usize>], components: usize, coupled: bool) -> Vec<Vec<usize>> {
    let nv = adj.len();
    let mut rows = Vec::with_capacity(components * nv);
    for c in 0..components {
        for nbrs in adj {
            let mut cols = Vec::with_capacity(nbrs.len() * components);
            for c2 in 0..components {
                if coupled || c2 == c {
                    cols.extend(nbrs.iter().map(|&v| c2 * nv + v));
                }
            }
            rows.push(cols);
        }
    }
    rows
}

/// Consistent P1 mass matrix, block-diagonal over `components`.
pub fn assemble_mass(mesh: &SimplexMesh, components: usize) -> CsrMatrix {
    let adj = vertex_pattern(mesh);
    let nv = mesh.num_vertices();
    let n = components * nv;
    let mut m = CsrMatrix::from_pattern(n, n, block_pattern(&adj, components, false));
    let d = mesh.dim();
    let denom = ((d + 1) * (d + 2)) as f64;
    for e in 0..mesh.num_elements() {
        let w = mesh.geometry(e).volume / denom;
        let verts = mesh.element(e);
        for (i, &a) in verts.iter().enumerate() {
            for (j, &b) in verts.iter().enumerate() {
                let val = if i == j { 2.0 * w } else { w };
                for c in 0..components {
                    m.add(c * nv + a, c * nv + b, val);
                }
            }
        }
    }
    m
}

/// `a(u, v) = 2ν (D(u), D(v))` on all velocity DOFs.
pub fn assemble_viscous(mesh: &SimplexMesh, nu: f64) -> CsrMatrix {
    let d = mesh.dim();
    let nv = mesh.num_vertices();
    let adj = vertex_pattern(mesh);
    let mut k = CsrMatrix::from_pattern(d * nv, d * nv, block_pattern(&adj, d, true));
    for e in 0..mesh.num_elements() {
        let geo = mesh.geometry(e);
        let g = &geo.grads;
        let s = nu * geo.volume;
        let verts = mesh.element(e);
        for (i, &vi) in verts.iter().enumerate() {
            for (j, &vj) in verts.iter().enumerate() {
                let gij: f64 = (0..d).map(|l| g[i][l] * g[j][l]).sum();
                for a in 0..d {
                    for b in 0..d {
                        // 2ν ∫ D(φ_j e_b) : D(φ_i e_a) = ν|K| (δ_ab ∇φ_i·∇φ_j + ∂_bφ_i ∂_aφ_j)
                        let mut val = g[i][b] * g[j][a];
                        if a == b {
                            val += gij;
                        }
                        k.add(a * nv + vi, b * nv + vj, s * val);
                    }
                }
            }
        }
    }
    k
}

/// `b(v, q) = −(∇·v, q)`: rows are pressure vertices, columns are
/// component-major velocity DOFs.
pub fn assemble_divergence(mesh: &SimplexMesh) -> CsrMatrix {
    let d = mesh.dim();
    let nv = mesh.num_vertices();
    let adj = vertex_pattern(mesh);
    let rows: Vec<Vec<usize>> = adj
        .iter()
        .map(|nbrs| {
            (0..d)
                .flat_map(|c| nbrs.iter().map(move |&v| c * nv + v))
                .collect()
        })
        .collect();
    let mut b = CsrMatrix::from_pattern(nv, d * nv, rows);
    for e in 0..mesh.num_elements() {
        let geo = mesh.geometry(e);
        let w = geo.volume / (d + 1) as f64;
        let verts = mesh.element(e);
        for &vi in verts {
            for (j, &vj) in verts.iter().enumerate() {
                for c in 0..d {
                    b.add(vi, c * nv + vj, -w * geo.grads[j][c]);
                }
            }
        }
    }
    b
}

/// Brezzi-Pitkäranta term `δ₀ Σ_K h_K² (∇p, ∇q)_K`.
pub fn assemble_stabilization(mesh: &SimplexMesh, delta0: f64) -> CsrMatrix {
    let d = mesh.dim();
    let nv = mesh.num_vertices();
    let mut c = CsrMatrix::from_pattern(nv, nv, vertex_pattern(mesh));
    for e in 0..mesh.num_elements() {
        let geo = mesh.geometry(e);
        let hk = mesh.diameter(e);
        let s = delta0 * hk * hk * geo.volume;
        let verts = mesh.element(e);
        for (i, &vi) in verts.iter().enumerate() {
            for (j, &vj) in verts.iter().enumerate() {
                let gij: f64 = (0..d).map(|l| geo.grads[i][l] * geo.grads[j][l]).sum();
                c.add(vi, vj, s * gij);
            }
        }
    }
    c
}

/// `m_i = ∫ ψ_i`, the pressure basis integrals.
pub fn pressure_mass_vector(mesh: &SimplexMesh) -> Vec<f64> {
    let d = mesh.dim();
    let mut m = vec![0.0; mesh.num_vertices()];
    for e in 0..mesh.num_elements() {
        let w = mesh.geometry(e).volume / (d + 1) as f64;
        for &v in mesh.element(e) {
            m[v] += w;
        }
    }
    m
}

/// The symmetric saddle-point system and the blocks it was built from.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    /// Full operator on `[interior velocity | pressure | λ]`.
    pub matrix: CsrMatrix,
    pub dofs: DofMap,
    /// Velocity block on all (including Dirichlet) velocity DOFs.
    pub a: CsrMatrix,
    /// Divergence block on all velocity DOFs.
    pub b: CsrMatrix,
    /// Stabilization block.
    pub c: CsrMatrix,
    /// Zero-mean constraint column.
    pub m: Vec<f64>,
}

impl SaddleSystem {
    /// Time-stepping system with `A = M/Δt + K`.
    pub fn navier_stokes(mesh: &SimplexMesh, nu: f64, dt: f64, delta0: f64) -> Self {
        let mass = assemble_mass(mesh, mesh.dim());
        let visc = assemble_viscous(mesh, nu);
        let a = CsrMatrix::linear_combination(1.0 / dt, &mass, 1.0, &visc);
        Self::from_blocks(
            mesh,
            a,
            assemble_divergence(mesh),
            assemble_stabilization(mesh, delta0),
        )
    }

    /// Stationary Stokes system with `A = K`, used for the Stokes projection.
    pub fn stokes(mesh: &SimplexMesh, nu: f64, delta0: f64) -> Self {
        Self::from_blocks(
            mesh,
            assemble_viscous(mesh, nu),
            assemble_divergence(mesh),
            assemble_stabilization(mesh, delta0),
        )
    }

    /// Eliminates Dirichlet rows and columns and lays the blocks out in the
    /// symmetric saddle form.
    pub fn from_blocks(mesh: &SimplexMesh, a: CsrMatrix, b: CsrMatrix, c: CsrMatrix) -> Self {
        let dofs = DofMap::new(mesh);
        let m = pressure_mass_vector(mesh);
        let nv = mesh.num_vertices();
        let n = dofs.len();
        let bt = b.transpose();
        let mut out = CsrBuilder::new(n);

        // Velocity rows. The interior numbering is monotone in the full
        // component-major index, so mapped columns stay sorted.
        for full in 0..a.nrows() {
            if dofs.velocity_full(full).is_none() {
                continue;
            }
            let (cols, vals) = a.row(full);
            for (&col, &v) in cols.iter().zip(vals) {
                if let Some(j) = dofs.velocity_full(col) {
                    out.push(j, v);
                }
            }
            let (cols, vals) = bt.row(full);
            for (&col, &v) in cols.iter().zip(vals) {
                out.push(dofs.pressure(col), v);
            }
            out.end_row();
        }
        // Pressure rows.
        for p in 0..nv {
            let (cols, vals) = b.row(p);
            for (&col, &v) in cols.iter().zip(vals) {
                if let Some(j) = dofs.velocity_full(col) {
                    out.push(j, v);
                }
            }
            let (cols, vals) = c.row(p);
            for (&col, &v) in cols.iter().zip(vals) {
                out.push(dofs.pressure(col), -v);
            }
            out.push(dofs.multiplier(), m[p]);
            out.end_row();
        }
        // Multiplier row.
        for (p, &mp) in m.iter().enumerate() {
            out.push(dofs.pressure(p), mp);
        }
        out.end_row();

        SaddleSystem {
            matrix: out.finish(),
            dofs,
            a,
            b,
            c,
            m,
        }
    }
}

/// Right-hand side of one time step together with transport diagnostics.
#[derive(Debug, Clone)]
pub struct StepRhs {
    pub rhs: Vec<f64>,
    pub clamped: usize,
    pub feet: usize,
}

/// Velocity block `(1/Δt)(u_prev ∘ X₁(w, Δt), v_h) + (f(·, t), v_h)`; the
/// pressure and multiplier entries are zero.
#[allow(clippy::too_many_arguments)]
pub fn assemble_rhs<F>(
    mesh: &SimplexMesh,
    dofs: &DofMap,
    rule: &QuadratureRule,
    u_prev: &FEField,
    w: &FEField,
    dt: f64,
    forcing: F,
    t: f64,
) -> Result<StepRhs>
where
    F: Fn(&Point, f64) -> [f64; 3] + Sync,
{
    let d = mesh.dim();
    let nq = rule.len();
    let transport = UpwindEvaluator::unchecked(mesh, w, dt);
    let composed = transport.composed_values(u_prev, rule)?;
    let inv_dt = 1.0 / dt;

    // Element vectors in parallel, scattered sequentially for determinism.
    let local: Vec<[[f64; 3]; 4]> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let vol = mesh.geometry(e).volume;
            let mut loc = [[0.0; 3]; 4];
            for (q, bary) in rule.points().iter().enumerate() {
                let x = mesh.point_from_barycentric(e, &bary[..=d]);
                let f = forcing(&x, t);
                let c = &composed[e * nq + q];
                let wq = rule.physical_weight(q, vol);
                for (i, li) in loc.iter_mut().enumerate().take(d + 1) {
                    for k in 0..d {
                        li[k] += wq * bary[i] * (c[k] * inv_dt + f[k]);
                    }
                }
            }
            loc
        })
        .collect();

    let mut rhs = vec![0.0; dofs.len()];
    for (e, loc) in local.iter().enumerate() {
        for (i, &v) in mesh.element(e).iter().enumerate() {
            for (k, val) in loc[i].iter().enumerate().take(d) {
                if let Some(row) = dofs.velocity(k, v) {
                    rhs[row] += val;
                }
            }
        }
    }
    Ok(StepRhs {
        rhs,
        clamped: transport.clamp_count(),
        feet: transport.foot_count(),
    })
}

/// Right-hand side `𝒜((w, r), (v_h, q_h)) = a(w, v_h) + b(v_h, r) + b(w, q_h)`
/// of the Stokes projection, by quadrature of the exact data.
pub fn assemble_stokes_rhs<G, R>(
    mesh: &SimplexMesh,
    dofs: &DofMap,
    rule: &QuadratureRule,
    nu: f64,
    grad_w: G,
    r: R,
) -> Vec<f64>
where
    G: Fn(&Point) -> Gradient + Sync,
    R: Fn(&Point) -> f64 + Sync,
{
    let d = mesh.dim();
    // (velocity rows per vertex and component, pressure row per vertex)
    let local: Vec<([[f64; 3]; 4], [f64; 4])> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let geo = mesh.geometry(e);
            let mut lu = [[0.0; 3]; 4];
            let mut lp = [0.0; 4];
            for (q, bary) in rule.points().iter().enumerate() {
                let x = mesh.point_from_barycentric(e, &bary[..=d]);
                let g = grad_w(&x);
                let rx = r(&x);
                let wq = rule.physical_weight(q, geo.volume);
                let div: f64 = (0..d).map(|k| g[k][k]).sum();
                for i in 0..=d {
                    let gi = &geo.grads[i];
                    for c in 0..d {
                        // 2ν D(w) : D(φ_i e_c) = 2ν Σ_j D(w)_cj ∂_jφ_i
                        let strain: f64 = (0..d).map(|j| 0.5 * (g[c][j] + g[j][c]) * gi[j]).sum();
                        lu[i][c] += wq * (2.0 * nu * strain - rx * gi[c]);
                    }
                    lp[i] -= wq * div * bary[i];
                }
            }
            (lu, lp)
        })
        .collect();

    let mut rhs = vec![0.0; dofs.len()];
    for (e, (lu, lp)) in local.iter().enumerate() {
        for (i, &v) in mesh.element(e).iter().enumerate() {
            for (c, val) in lu[i].iter().enumerate().take(d) {
                if let Some(row) = dofs.velocity(c, v) {
                    rhs[row] += val;
                }
            }
            rhs[dofs.pressure(v)] += lp[i];
        }
    }
    rhs
}

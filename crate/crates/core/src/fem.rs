//! Continuous P1 fields on a [`SimplexMesh`].
//!
//! Vector fields are stored component-major: all first components, then all
//! second components, and so on, one value per mesh vertex.

use std::io::Write;
use std::path::Path;

use crate::mesh::{ElementLocation, SimplexMesh};
use crate::quadrature::QuadratureRule;
use crate::{Gradient, Point, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FEField {
    components: usize,
    num_vertices: usize,
    values: Vec<f64>,
}

/// Discrete norms of a P1 field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub linf: f64,
    pub w1inf: f64,
}

impl Norms {
    /// Full H¹ norm, `(‖u‖₀² + |u|₁²)^{1/2}`.
    pub fn h1(&self) -> f64 {
        self.l2.hypot(self.h1_semi)
    }
}

impl FEField {
    pub fn zeros(mesh: &SimplexMesh, components: usize) -> Self {
        FEField {
            components,
            num_vertices: mesh.num_vertices(),
            values: vec![0.0; components * mesh.num_vertices()],
        }
    }

    /// Wraps a component-major nodal vector.
    pub fn from_values(mesh: &SimplexMesh, components: usize, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            components * mesh.num_vertices(),
            "nodal vector length"
        );
        FEField {
            components,
            num_vertices: mesh.num_vertices(),
            values,
        }
    }

    /// Lagrange interpolation: nodal values of `g` at the mesh vertices.
    /// Only the first `components` entries of `g`'s result are used.
    pub fn interpolate<G: Fn(&Point) -> [f64; 3]>(mesh: &SimplexMesh, components: usize, g: G) -> Self {
        let nv = mesh.num_vertices();
        let mut values = vec![0.0; components * nv];
        for (v, x) in mesh.vertices().iter().enumerate() {
            let gx = g(x);
            for c in 0..components {
                values[c * nv + v] = gx[c];
            }
        }
        FEField {
            components,
            num_vertices: nv,
            values,
        }
    }

    pub fn interpolate_scalar<G: Fn(&Point) -> f64>(mesh: &SimplexMesh, g: G) -> Self {
        Self::interpolate(mesh, 1, |x| [g(x), 0.0, 0.0])
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.values[c * self.num_vertices..(c + 1) * self.num_vertices]
    }

    #[inline]
    pub fn nodal(&self, c: usize, v: usize) -> f64 {
        self.values[c * self.num_vertices + v]
    }

    /// Value at a located point.
    pub fn eval(&self, mesh: &SimplexMesh, loc: &ElementLocation) -> [f64; 3] {
        self.eval_bary(mesh, loc.element, &loc.bary)
    }

    #[inline]
    pub fn eval_bary(&self, mesh: &SimplexMesh, element: usize, bary: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, &v) in mesh.element(element).iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate().take(self.components) {
                *o += bary[i] * self.nodal(c, v);
            }
        }
        out
    }

    /// Value at an arbitrary point of the closed domain.
    pub fn eval_at(&self, mesh: &SimplexMesh, x: &Point) -> Result<[f64; 3]> {
        Ok(self.eval(mesh, &mesh.locate(x)?))
    }

    /// Constant gradient on `element`; row `c` is `∇u_c`.
    pub fn element_gradient(&self, mesh: &SimplexMesh, element: usize) -> Gradient {
        let d = mesh.dim();
        let grads = &mesh.geometry(element).grads;
        let mut g = [[0.0; 3]; 3];
        for (i, &v) in mesh.element(element).iter().enumerate() {
            for (c, row) in g.iter_mut().enumerate().take(self.components) {
                let u = self.nodal(c, v);
                for j in 0..d {
                    row[j] += u * grads[i][j];
                }
            }
        }
        g
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when every boundary-vertex value is exactly zero.
    pub fn has_zero_boundary(&self, mesh: &SimplexMesh) -> bool {
        (0..self.num_vertices)
            .filter(|&v| mesh.is_boundary(v))
            .all(|v| (0..self.components).all(|c| self.nodal(c, v) == 0.0))
    }

    /// `self - other`, for fields of equal shape.
    pub fn sub(&self, other: &FEField) -> FEField {
        assert_eq!(self.values.len(), other.values.len());
        FEField {
            components: self.components,
            num_vertices: self.num_vertices,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> FEField {
        FEField {
            components: self.components,
            num_vertices: self.num_vertices,
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    /// `(u, 1)`, per component, integrated exactly.
    pub fn integral(&self, mesh: &SimplexMesh) -> [f64; 3] {
        let d = mesh.dim();
        let mut out = [0.0; 3];
        for e in 0..mesh.num_elements() {
            let w = mesh.geometry(e).volume / (d + 1) as f64;
            for &v in mesh.element(e) {
                for (c, o) in out.iter_mut().enumerate().take(self.components) {
                    *o += w * self.nodal(c, v);
                }
            }
        }
        out
    }

    /// L², H¹-seminorm, L∞ and W^{1,∞} norms. The integral norms use the
    /// degree-5 rule, which is exact for the quadratic integrands of P1
    /// fields; L∞ is the nodal maximum, which is exact for P1.
    pub fn norms(&self, mesh: &SimplexMesh) -> Norms {
        let rule = QuadratureRule::degree5(mesh.dim()).expect("mesh dimension is 2 or 3");
        let d = mesh.dim();
        let mut l2 = 0.0;
        let mut semi = 0.0;
        let mut grad_max: f64 = 0.0;
        for e in 0..mesh.num_elements() {
            let vol = mesh.geometry(e).volume;
            for (q, b) in rule.points().iter().enumerate() {
                let val = self.eval_bary(mesh, e, &b[..=d]);
                let sq: f64 = val[..self.components].iter().map(|v| v * v).sum();
                l2 += rule.physical_weight(q, vol) * sq;
            }
            let g = self.element_gradient(mesh, e);
            let mut gsq = 0.0;
            for row in g.iter().take(self.components) {
                let row_sum: f64 = row[..d].iter().map(|v| v.abs()).sum();
                grad_max = grad_max.max(row_sum);
                gsq += row[..d].iter().map(|v| v * v).sum::<f64>();
            }
            semi += vol * gsq;
        }
        let linf = self.max_abs();
        Norms {
            l2: l2.sqrt(),
            h1_semi: semi.sqrt(),
            linf,
            w1inf: linf + grad_max,
        }
    }

    /// Writes `vertex,x,y[,z],value_0,...` rows.
    pub fn write_csv(&self, mesh: &SimplexMesh, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let d = mesh.dim();
        let coords = ["x", "y", "z"];
        let mut header = vec!["vertex".to_string()];
        header.extend(coords[..d].iter().map(|s| s.to_string()));
        header.extend((0..self.components).map(|c| format!("value_{c}")));
        writeln!(out, "{}", header.join(","))?;
        for v in 0..self.num_vertices {
            let x = mesh.vertex(v);
            let mut row = vec![v.to_string()];
            row.extend(x[..d].iter().map(|c| format!("{c}")));
            row.extend((0..self.components).map(|c| format!("{:e}", self.nodal(c, v))));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::ManufacturedProblem;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn affine(x: &Point) -> [f64; 3] {
        [
            0.3 + 2.0 * x[0] - x[1] + 0.7 * x[2],
            -1.0 + 0.5 * x[1] + 3.0 * x[2],
            4.0 * x[0],
        ]
    }

    #[test]
    fn constant_interpolation() {
        let m = SimplexMesh::unit(2, 5).unwrap();
        let f = FEField::interpolate_scalar(&m, |_| 2.5);
        assert!(f.values().iter().all(|&v| v == 2.5));
        let n = f.norms(&m);
        assert!((n.linf - 2.5).abs() < 1e-15);
        assert!(n.h1_semi < 1e-13);
    }

    #[test]
    fn p1_reproduces_affine_functions() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for d in [2, 3] {
            let m = SimplexMesh::unit(d, 5).unwrap();
            let f = FEField::interpolate(&m, d, affine);
            for _ in 0..500 {
                let mut x = [0.0; 3];
                for c in x.iter_mut().take(d) {
                    *c = rng.gen::<f64>();
                }
                let got = f.eval_at(&m, &x).unwrap();
                let want = affine(&x);
                for c in 0..d {
                    assert!((got[c] - want[c]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eval_at_vertex_and_centroid() {
        let m = SimplexMesh::unit(3, 3).unwrap();
        let f = FEField::interpolate_scalar(&m, |x| (5.0 * x[0]).sin() + x[1] * x[2]);
        let e = 17;
        let verts = m.element(e);
        let mut b = [0.0; 4];
        b[2] = 1.0;
        assert_eq!(f.eval_bary(&m, e, &b)[0], f.nodal(0, verts[2]));
        let mean = verts.iter().map(|&v| f.nodal(0, v)).sum::<f64>() / 4.0;
        assert!((f.eval_bary(&m, e, &[0.25; 4])[0] - mean).abs() < 1e-15);
    }

    #[test]
    fn gradients_of_linear_fields() {
        let m = SimplexMesh::unit(2, 4).unwrap();
        let x1 = FEField::interpolate_scalar(&m, |x| x[0]);
        let lin = FEField::interpolate_scalar(&m, |x| 3.0 * x[0] - 2.0 * x[1]);
        let c = FEField::interpolate_scalar(&m, |_| 7.0);
        for e in 0..m.num_elements() {
            let g = x1.element_gradient(&m, e);
            assert!((g[0][0] - 1.0).abs() < 1e-12 && g[0][1].abs() < 1e-12);
            let g = lin.element_gradient(&m, e);
            assert!((g[0][0] - 3.0).abs() < 1e-12 && (g[0][1] + 2.0).abs() < 1e-12);
            let g = c.element_gradient(&m, e);
            assert!(g[0][0].abs() < 1e-12 && g[0][1].abs() < 1e-12);
        }
    }

    #[test]
    fn norms_of_x1() {
        let m = SimplexMesh::unit(2, 8).unwrap();
        let f = FEField::interpolate_scalar(&m, |x| x[0]);
        let n = f.norms(&m);
        assert!((n.l2 - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((n.h1_semi - 1.0).abs() < 1e-12);
        assert!((n.linf - 1.0).abs() < 1e-15);
        assert!((n.w1inf - 2.0).abs() < 1e-12);
        let z = FEField::zeros(&m, 2).norms(&m);
        assert_eq!(
            z,
            Norms {
                l2: 0.0,
                h1_semi: 0.0,
                linf: 0.0,
                w1inf: 0.0
            }
        );
    }

    #[test]
    fn initial_velocity_interpolant_vanishes_on_boundary() {
        for d in [2, 3] {
            let m = SimplexMesh::unit(d, 6).unwrap();
            let p = ManufacturedProblem::new(d, 0.1).unwrap();
            let u0 = FEField::interpolate(&m, d, |x| p.velocity(x, 0.0));
            for v in 0..m.num_vertices() {
                if m.is_boundary(v) {
                    for c in 0..d {
                        assert!(u0.nodal(c, v).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn csv_export() {
        let m = SimplexMesh::unit(2, 2).unwrap();
        let f = FEField::interpolate(&m, 2, affine);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        f.write_csv(&m, &path).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(text.starts_with("vertex,x,y,value_0,value_1"));
    }

    proptest! {
        #[test]
        fn norm_homogeneity(s in -5.0f64..5.0, seed in 0u64..1000) {
            let m = SimplexMesh::unit(2, 4).unwrap();
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let vals: Vec<f64> = (0..2 * m.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = FEField::from_values(&m, 2, vals);
            let (a, b) = (f.norms(&m), f.scaled(s).norms(&m));
            prop_assert!((b.l2 - s.abs() * a.l2).abs() < 1e-12);
            prop_assert!((b.h1_semi - s.abs() * a.h1_semi).abs() < 1e-12);
            prop_assert!((b.linf - s.abs() * a.linf).abs() < 1e-12);
        }
    }
}

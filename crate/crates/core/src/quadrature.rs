//! Degree-5 quadrature on the reference triangle and tetrahedron.
//!
//! Points are stored in barycentric coordinates and weights are scaled to
//! the reference simplex volume (1/2 and 1/6), so the same rule maps onto
//! any physical simplex by multiplying the weights by `d! |K|`.

use crate::mesh::SimplexMesh;
use crate::{Error, Point, Result};

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dim: usize,
    points: Vec<[f64; 4]>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// The 7-point (triangle) or 15-point (tetrahedron) degree-5 rule.
    pub fn degree5(dim: usize) -> Result<Self> {
        match dim {
            2 => Ok(triangle7()),
            3 => Ok(tetrahedron15()),
            _ => Err(Error::Dimension(dim)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Barycentric coordinates of the quadrature points.
    pub fn points(&self) -> &[[f64; 4]] {
        &self.points
    }

    /// Weights on the reference simplex.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Reference simplex volume, `1/d!`.
    pub fn reference_volume(&self) -> f64 {
        if self.dim == 2 {
            0.5
        } else {
            1.0 / 6.0
        }
    }

    /// Weights scaled for an element of volume `volume`.
    pub fn physical_weight(&self, q: usize, volume: f64) -> f64 {
        self.weights[q] * volume / self.reference_volume()
    }

    /// Integrates `f` over the reference simplex with vertices at the
    /// origin and the unit vectors.
    pub fn integrate_reference<F: Fn(&Point) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(b, w)| {
                let mut x = [0.0; 3];
                x[..self.dim].copy_from_slice(&b[1..=self.dim]);
                w * f(&x)
            })
            .sum()
    }

    /// Integrates `f` over element `element` of `mesh`.
    pub fn integrate_on_element<F: Fn(&Point) -> f64>(
        &self,
        mesh: &SimplexMesh,
        element: usize,
        f: F,
    ) -> f64 {
        let vol = mesh.geometry(element).volume;
        let mut s = 0.0;
        for (b, w) in self.points.iter().zip(&self.weights) {
            let x = mesh.point_from_barycentric(element, &b[..=self.dim]);
            s += w * f(&x);
        }
        s * vol / self.reference_volume()
    }

    /// Integrates `f` over an arbitrary simplex given by its `d + 1`
    /// vertices.
    pub fn integrate_on_simplex<F: Fn(&Point) -> f64>(&self, vertices: &[Point], f: F) -> f64 {
        let d = self.dim;
        let v0 = vertices[0];
        let mut jac = [[0.0; 3]; 3];
        for k in 0..d {
            for c in 0..d {
                jac[c][k] = vertices[k + 1][c] - v0[c];
            }
        }
        let det = if d == 2 {
            jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
        } else {
            jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
                - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
                + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0])
        };
        let mut s = 0.0;
        for (b, w) in self.points.iter().zip(&self.weights) {
            let mut x = [0.0; 3];
            for (i, v) in vertices.iter().enumerate().take(d + 1) {
                for c in 0..d {
                    x[c] += b[i] * v[c];
                }
            }
            s += w * f(&x);
        }
        s * det.abs()
    }

    /// Integrates `f` over the whole mesh.
    pub fn integrate<F: Fn(&Point) -> f64>(&self, mesh: &SimplexMesh, f: F) -> f64 {
        (0..mesh.num_elements())
            .map(|e| self.integrate_on_element(mesh, e, &f))
            .sum()
    }
}

fn triangle7() -> QuadratureRule {
    let r15 = 15f64.sqrt();
    let a = (6.0 - r15) / 21.0;
    let b = (6.0 + r15) / 21.0;
    let wa = (155.0 - r15) / 2400.0;
    let wb = (155.0 + r15) / 2400.0;
    let mut points = vec![[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]];
    let mut weights = vec![9.0 / 80.0];
    for (c, w) in [(a, wa), (b, wb)] {
        let o = 1.0 - 2.0 * c;
        points.push([o, c, c, 0.0]);
        points.push([c, o, c, 0.0]);
        points.push([c, c, o, 0.0]);
        weights.extend([w; 3]);
    }
    QuadratureRule {
        dim: 2,
        points,
        weights,
    }
}

fn tetrahedron15() -> QuadratureRule {
    let r15 = 15f64.sqrt();
    let vol = 1.0 / 6.0;
    let mut points = vec![[0.25; 4]];
    let mut weights = vec![16.0 / 135.0 * vol];
    for (c, w) in [
        ((7.0 - r15) / 34.0, (2665.0 + 14.0 * r15) / 37800.0),
        ((7.0 + r15) / 34.0, (2665.0 - 14.0 * r15) / 37800.0),
    ] {
        let o = 1.0 - 3.0 * c;
        for k in 0..4 {
            let mut p = [c; 4];
            p[k] = o;
            points.push(p);
            weights.push(w * vol);
        }
    }
    let b = (10.0 - 2.0 * r15) / 40.0;
    let o = 0.5 - b;
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut p = [o; 4];
        p[i] = b;
        p[j] = b;
        points.push(p);
        weights.push(10.0 / 189.0 * vol);
    }
    QuadratureRule {
        dim: 3,
        points,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ x^a y^b z^c over the unit reference simplex (Dirichlet integral).
    fn monomial_exact(d: usize, e: [u32; 3]) -> f64 {
        let num: f64 = e[..d].iter().map(|&k| factorial(k)).product();
        let total: u32 = e[..d].iter().sum();
        num / factorial(total + d as u32)
    }

    fn exponents(d: usize, max: u32) -> Vec<[u32; 3]> {
        let mut out = Vec::new();
        for a in 0..=max {
            for b in 0..=max - a {
                if d == 2 {
                    out.push([a, b, 0]);
                } else {
                    for c in 0..=max - a - b {
                        out.push([a, b, c]);
                    }
                }
            }
        }
        out
    }

    fn eval(e: [u32; 3], x: &Point) -> f64 {
        x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32)
    }

    #[test]
    fn sizes_and_weights() {
        let t = QuadratureRule::degree5(2).unwrap();
        assert_eq!(t.len(), 7);
        assert!((t.weights().iter().sum::<f64>() - 0.5).abs() < 1e-14);
        assert!(t.weights().iter().all(|&w| w > 0.0));
        let t = QuadratureRule::degree5(3).unwrap();
        assert_eq!(t.len(), 15);
        assert!((t.weights().iter().sum::<f64>() - 1.0 / 6.0).abs() < 1e-14);
        assert!(t.weights().iter().all(|&w| w > 0.0));
        for p in t.points() {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert!(QuadratureRule::degree5(4).is_err());
    }

    #[test]
    fn exact_for_all_monomials_up_to_degree_five() {
        for d in [2, 3] {
            let rule = QuadratureRule::degree5(d).unwrap();
            for e in exponents(d, 5) {
                let got = rule.integrate_reference(|x| eval(e, x));
                let want = monomial_exact(d, e);
                assert!((got - want).abs() < 1e-14, "d={d} {e:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn named_reference_integrals() {
        let tri = QuadratureRule::degree5(2).unwrap();
        assert!((tri.integrate_reference(|_| 1.0) - 0.5).abs() < 1e-14);
        // 2! 3! / 7!
        let x2y3 = tri.integrate_reference(|x| x[0] * x[0] * x[1].powi(3));
        assert!((x2y3 - 12.0 / 5040.0).abs() < 1e-14);
        let tet = QuadratureRule::degree5(3).unwrap();
        let lin = tet.integrate_reference(|x| x[0] + x[1] + x[2]);
        assert!((lin - 1.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn element_integration() {
        for d in [2, 3] {
            let mesh = SimplexMesh::unit(d, 3).unwrap();
            let rule = QuadratureRule::degree5(d).unwrap();
            for e in [0, mesh.num_elements() / 2 + 1, mesh.num_elements() - 1] {
                let vol = mesh.geometry(e).volume;
                assert!((rule.integrate_on_element(&mesh, e, |_| 1.0) - vol).abs() < 1e-14);
                // linear: integral equals volume times value at centroid
                let f = |x: &Point| 1.0 + 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[2];
                let bc = [1.0 / (d as f64 + 1.0); 4];
                let c = mesh.point_from_barycentric(e, &bc[..=d]);
                assert!((rule.integrate_on_element(&mesh, e, f) - vol * f(&c)).abs() < 1e-14);
            }
        }
    }

    /// Sparse polynomial in (ξ1, ξ2, ξ3), used as a symbolic oracle.
    type Poly = std::collections::BTreeMap<[u32; 3], f64>;

    fn poly_mul(a: &Poly, b: &Poly) -> Poly {
        let mut out = Poly::new();
        for (ea, ca) in a {
            for (eb, cb) in b {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                *out.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out
    }

    /// Exact integral of the monomial `x^e` over the simplex with the given
    /// vertices: pull back to the reference simplex, expand symbolically,
    /// integrate each reference monomial in closed form.
    fn symbolic_integral(d: usize, verts: &[Point], e: [u32; 3]) -> f64 {
        let v0 = verts[0];
        let mut jac = [[0.0; 3]; 3];
        let mut poly: Poly = [([0, 0, 0], 1.0)].into_iter().collect();
        for c in 0..d {
            // x_c = v0_c + Σ_k ξ_k (v_k - v0)_c
            let mut lin = Poly::new();
            lin.insert([0, 0, 0], v0[c]);
            for k in 0..d {
                let mut ek = [0, 0, 0];
                ek[k] = 1;
                jac[c][k] = verts[k + 1][c] - v0[c];
                lin.insert(ek, jac[c][k]);
            }
            for _ in 0..e[c] {
                poly = poly_mul(&poly, &lin);
            }
        }
        let det = if d == 2 {
            jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
        } else {
            jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
                - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
                + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0])
        };
        poly.iter().map(|(ex, c)| c * monomial_exact(d, *ex)).sum::<f64>() * det.abs()
    }

    #[test]
    fn exact_on_skewed_and_mesh_elements() {
        let skewed2 = [[0.1, 0.2, 0.0], [0.9, 0.35, 0.0], [0.3, 0.8, 0.0]];
        let skewed3 = [
            [0.1, 0.1, 0.2],
            [0.8, 0.2, 0.1],
            [0.3, 0.9, 0.25],
            [0.35, 0.3, 0.95],
        ];
        for d in [2, 3] {
            let rule = QuadratureRule::degree5(d).unwrap();
            let mesh = SimplexMesh::unit(d, 3).unwrap();
            let e = mesh.num_elements() - 3;
            let mesh_verts: Vec<Point> = mesh.element(e).iter().map(|&v| *mesh.vertex(v)).collect();
            let skewed: Vec<Point> = if d == 2 {
                skewed2.to_vec()
            } else {
                skewed3.to_vec()
            };
            for ex in exponents(d, 5) {
                let want = symbolic_integral(d, &skewed, ex);
                let got = rule.integrate_on_simplex(&skewed, |x| eval(ex, x));
                assert!((got - want).abs() < 1e-12, "skewed d={d} {ex:?}: {got} vs {want}");

                let want = symbolic_integral(d, &mesh_verts, ex);
                let got = rule.integrate_on_element(&mesh, e, |x| eval(ex, x));
                assert!((got - want).abs() < 1e-12, "mesh d={d} {ex:?}: {got} vs {want}");
            }
        }
    }
}

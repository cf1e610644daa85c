//! Structured simplicial triangulations of the unit square and cube.
//!
//! Vertices are numbered lexicographically with the first coordinate
//! running fastest, `v = i + (N+1) j + (N+1)^2 k`. Each grid cell is split
//! into simplices with a fixed pattern that is the same in every cell:
//!
//! - `d = 2`: two triangles sharing the diagonal from `(i, j)` to
//!   `(i+1, j+1)`.
//! - `d = 3`: the six Kuhn tetrahedra sharing the main diagonal from
//!   `(i, j, k)` to `(i+1, j+1, k+1)`, one per ordering of the axes.
//!
//! Simplex `s` of cell `c` has global index `c * per_cell + s`, with cells
//! numbered like vertices (`c = i + N j + N^2 k`).

use std::io::Write;
use std::path::Path;

use crate::{Error, Point, Result};

/// Tolerance for deciding that a point lies inside a simplex or the domain.
pub const LOCATE_TOL: f64 = 1e-12;

/// Axis orderings of the Kuhn subdivision. Tetrahedron `s` contains the
/// points of the cell whose local coordinates satisfy
/// `ξ[p[0]] >= ξ[p[1]] >= ξ[p[2]]`.
const KUHN_PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Affine data of one simplex, precomputed at construction.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    /// Positive volume `|K|`.
    pub volume: f64,
    /// Constant gradients of the barycentric coordinates, one row per vertex.
    pub grads: [[f64; 3]; 4],
}

/// A simplex together with barycentric coordinates of a point inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementLocation {
    pub element: usize,
    /// `d + 1` barycentric coordinates; unused tail entries are zero.
    pub bary: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct SimplexMesh {
    dim: usize,
    divisions: usize,
    vertices: Vec<Point>,
    simplices: Vec<[usize; 4]>,
    boundary: Vec<bool>,
    geometry: Vec<ElementGeometry>,
    diameters: Vec<f64>,
    h: f64,
}

impl SimplexMesh {
    /// Builds the structured triangulation of `(0,1)^dim` with `divisions`
    /// cells per side.
    pub fn unit(dim: usize, divisions: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        if divisions < 2 {
            return Err(Error::Divisions(divisions));
        }
        let n = divisions;
        let np = n + 1;
        let nz = if dim == 3 { np } else { 1 };

        let mut vertices = Vec::with_capacity(np * np * nz);
        let mut boundary = Vec::with_capacity(np * np * nz);
        for k in 0..nz {
            for j in 0..np {
                for i in 0..np {
                    let z = if dim == 3 { k as f64 / n as f64 } else { 0.0 };
                    vertices.push([i as f64 / n as f64, j as f64 / n as f64, z]);
                    let on = |m: usize| m == 0 || m == n;
                    boundary.push(on(i) || on(j) || (dim == 3 && on(k)));
                }
            }
        }

        let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        let mut simplices = Vec::with_capacity(if dim == 2 { 2 * n * n } else { 6 * n * n * n });
        let cz = if dim == 3 { n } else { 1 };
        for k in 0..cz {
            for j in 0..n {
                for i in 0..n {
                    if dim == 2 {
                        let (v00, v10, v01, v11) = (
                            vid(i, j, 0),
                            vid(i + 1, j, 0),
                            vid(i, j + 1, 0),
                            vid(i + 1, j + 1, 0),
                        );
                        simplices.push([v00, v10, v11, usize::MAX]);
                        simplices.push([v00, v11, v01, usize::MAX]);
                    } else {
                        for perm in KUHN_PERMUTATIONS {
                            let mut corner = [i, j, k];
                            let mut tet = [vid(i, j, k), 0, 0, 0];
                            for (slot, &axis) in perm.iter().enumerate() {
                                corner[axis] += 1;
                                tet[slot + 1] = vid(corner[0], corner[1], corner[2]);
                            }
                            simplices.push(tet);
                        }
                    }
                }
            }
        }

        let mut mesh = SimplexMesh {
            dim,
            divisions: n,
            vertices,
            simplices,
            boundary,
            geometry: Vec::new(),
            diameters: Vec::new(),
            h: 0.0,
        };
        mesh.orient_and_measure();
        Ok(mesh)
    }

    fn orient_and_measure(&mut self) {
        let d = self.dim;
        let mut geometry = Vec::with_capacity(self.simplices.len());
        let mut diameters = Vec::with_capacity(self.simplices.len());
        for s in 0..self.simplices.len() {
            let mut g = affine_geometry(&self.vertices, &self.simplices[s], d);
            if g.1 < 0.0 {
                self.simplices[s].swap(d - 1, d);
                g = affine_geometry(&self.vertices, &self.simplices[s], d);
            }
            let (grads, det) = g;
            geometry.push(ElementGeometry {
                volume: det / factorial(d),
                grads,
            });
            let verts = &self.simplices[s][..=d];
            let mut diam: f64 = 0.0;
            for a in 0..=d {
                for b in a + 1..=d {
                    diam = diam.max(distance(&self.vertices[verts[a]], &self.vertices[verts[b]]));
                }
            }
            diameters.push(diam);
        }
        self.h = diameters.iter().cloned().fold(0.0, f64::max);
        self.geometry = geometry;
        self.diameters = diameters;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Divisions per side, `N`.
    pub fn divisions(&self) -> usize {
        self.divisions
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.simplices.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> &Point {
        &self.vertices[v]
    }

    /// Vertex indices of element `e` (exactly `d + 1` entries).
    pub fn element(&self, e: usize) -> &[usize] {
        &self.simplices[e][..=self.dim]
    }

    pub fn geometry(&self, e: usize) -> &ElementGeometry {
        &self.geometry[e]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// Diameter `h_K` of element `e`.
    pub fn diameter(&self, e: usize) -> f64 {
        self.diameters[e]
    }

    /// Global mesh size `h = max_K h_K`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Grid spacing `1/N`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.divisions as f64
    }

    fn per_cell(&self) -> usize {
        if self.dim == 2 {
            2
        } else {
            6
        }
    }

    /// Barycentric coordinates of `x` with respect to element `e`.
    pub fn barycentric(&self, e: usize, x: &Point) -> [f64; 4] {
        let d = self.dim;
        let v0 = &self.vertices[self.simplices[e][0]];
        let g = &self.geometry[e].grads;
        let mut bary = [0.0; 4];
        let mut rest = 0.0;
        for (i, b) in bary.iter_mut().enumerate().take(d + 1).skip(1) {
            let mut s = 0.0;
            for c in 0..d {
                s += g[i][c] * (x[c] - v0[c]);
            }
            *b = s;
            rest += s;
        }
        bary[0] = 1.0 - rest;
        bary
    }

    /// Physical point with barycentric coordinates `bary` in element `e`.
    pub fn point_from_barycentric(&self, e: usize, bary: &[f64]) -> Point {
        let mut x = [0.0; 3];
        for (i, &v) in self.element(e).iter().enumerate() {
            for c in 0..self.dim {
                x[c] += bary[i] * self.vertices[v][c];
            }
        }
        x
    }

    /// Finds the simplex containing `x`. Points on shared faces resolve to
    /// the lowest simplex index.
    pub fn locate(&self, x: &Point) -> Result<ElementLocation> {
        let d = self.dim;
        let n = self.divisions;
        let nf = n as f64;
        for &c in &x[..d] {
            if !(c >= -LOCATE_TOL && c <= 1.0 + LOCATE_TOL) {
                return Err(Error::OutsideDomain(x[..d].to_vec()));
            }
        }

        // Candidate cell indices per axis: the floor cell, plus its lower
        // neighbour when x sits on (or within tolerance of) the grid plane.
        let mut cand: [[usize; 2]; 3] = [[0; 2]; 3];
        let mut ncand = [1usize; 3];
        for a in 0..d {
            let s = x[a] * nf;
            let i = (s.floor().max(0.0) as usize).min(n - 1);
            cand[a][0] = i;
            if i > 0 && s - (i as f64) <= LOCATE_TOL * nf {
                cand[a] = [i - 1, i];
                ncand[a] = 2;
            }
        }
        let per = self.per_cell();
        let mut fallback: Option<(usize, [f64; 4], f64)> = None;
        let mut found: Option<(usize, [f64; 4])> = None;
        let kz = if d == 3 { ncand[2] } else { 1 };
        // Cells are visited in increasing global index, so the first hit is
        // the lowest-index simplex containing x.
        'search: for kk in 0..kz {
            for jj in 0..ncand[1] {
                for ii in 0..ncand[0] {
                    let k = if d == 3 { cand[2][kk] } else { 0 };
                    let cell = cand[0][ii] + n * (cand[1][jj] + n * k);
                    for s in 0..per {
                        let e = cell * per + s;
                        let bary = self.barycentric(e, x);
                        let worst = bary[..=d].iter().cloned().fold(f64::INFINITY, f64::min);
                        if worst >= -LOCATE_TOL {
                            found = Some((e, bary));
                            break 'search;
                        }
                        if fallback.map_or(true, |(_, _, w)| w < worst) {
                            fallback = Some((e, bary, worst));
                        }
                    }
                }
            }
        }
        let best = found.or_else(|| fallback.map(|(e, b, _)| (e, b)));
        let (element, mut bary) = best.expect("at least one candidate cell");
        for b in bary[..=d].iter_mut() {
            if *b < 0.0 && *b >= -LOCATE_TOL {
                *b = 0.0;
            }
        }
        Ok(ElementLocation { element, bary })
    }

    /// Writes the mesh as a legacy ASCII VTK unstructured grid.
    pub fn write_vtk(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "lgns mesh d={} N={}", self.dim, self.divisions)?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(out, "POINTS {} double", self.vertices.len())?;
        for p in &self.vertices {
            writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
        }
        let nv = self.dim + 1;
        writeln!(
            out,
            "CELLS {} {}",
            self.simplices.len(),
            self.simplices.len() * (nv + 1)
        )?;
        for e in 0..self.simplices.len() {
            let ids: Vec<String> = self.element(e).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{} {}", nv, ids.join(" "))?;
        }
        writeln!(out, "CELL_TYPES {}", self.simplices.len())?;
        let cell_type = if self.dim == 2 { 5 } else { 10 };
        for _ in 0..self.simplices.len() {
            writeln!(out, "{cell_type}")?;
        }
        Ok(())
    }
}

fn factorial(d: usize) -> f64 {
    (1..=d).product::<usize>() as f64
}

fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Barycentric gradients and the signed Jacobian determinant of a simplex.
fn affine_geometry(vertices: &[Point], simplex: &[usize; 4], d: usize) -> ([[f64; 3]; 4], f64) {
    let v0 = vertices[simplex[0]];
    // Columns of the Jacobian are the edge vectors from vertex 0.
    let mut jac = [[0.0; 3]; 3];
    for k in 0..d {
        let vk = vertices[simplex[k + 1]];
        for r in 0..d {
            jac[r][k] = vk[r] - v0[r];
        }
    }
    let (inv, det) = if d == 2 {
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det, 0.0],
            [-jac[1][0] / det, jac[0][0] / det, 0.0],
            [0.0; 3],
        ];
        (inv, det)
    } else {
        invert3(&jac)
    };
    let mut grads = [[0.0; 3]; 4];
    for k in 0..d {
        grads[k + 1] = inv[k];
        for c in 0..d {
            grads[0][c] -= inv[k][c];
        }
    }
    (grads, det)
}

fn invert3(m: &[[f64; 3]; 3]) -> ([[f64; 3]; 3], f64) {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    let inv = [
        [
            c00 / det,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det,
        ],
        [
            c01 / det,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det,
        ],
        [
            c02 / det,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det,
        ],
    ];
    (inv, det)
}

//! P1 finite-element matrices for the Robin and delta-interaction forms.
//!
//! For a mesh and a tag marking where the boundary term lives, [`assemble`]
//! produces the stiffness matrix `A` (Dirichlet energy), the mass matrix `M`
//! and the boundary mass `B` (squared trace norm on the tagged edges). All
//! element integrals are exact for piecewise-linear functions. The form at
//! coupling `beta` is `A - beta * B`, see [`pencil`].

use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{BoundaryTag, Mesh, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("triangle {index} is degenerate (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },
    #[error("boundary term must live on Robin or Interface edges, got {0}")]
    InvalidTag(BoundaryTag),
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector has zero mass norm")]
    ZeroVector,
    #[error("matrix patterns differ")]
    PatternMismatch,
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

type Result<T> = std::result::Result<T, AssemblyError>;

/// Sparsity pattern of the upper triangle (`row <= col`) in compressed
/// column form, row indices sorted within each column.
#[derive(Debug, PartialEq, Eq)]
pub struct Pattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl Pattern {
    /// Builds a pattern from `(row, col)` pairs in any order; duplicates
    /// are merged and pairs are mirrored into the upper triangle.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Pattern {
        let mut keys: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(i, j)| {
                assert!(i < n && j < n, "index out of range");
                (i.max(j), i.min(j))
            })
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let mut col_ptr = vec![0; n + 1];
        for &(col, _) in &keys {
            col_ptr[col + 1] += 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let row_idx = keys.into_iter().map(|(_, row)| row).collect();
        Pattern {
            n,
            col_ptr,
            row_idx,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    /// Position of `(row, col)` in the value array, if stored.
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let (row, col) = (row.min(col), row.max(col));
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        self.row_idx[range.clone()]
            .binary_search(&row)
            .ok()
            .map(|k| range.start + k)
    }
}

/// Symmetric sparse matrix stored by its upper triangle.
///
/// The pattern is shared between matrices assembled together, so linear
/// combinations of the forms cost one pass over the values and a sparse
/// factorization can reuse its symbolic analysis across couplings.
#[derive(Debug, Clone)]
pub struct SymSparse {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SymSparse {
    pub fn new(pattern: Arc<Pattern>, values: Vec<f64>) -> Result<SymSparse> {
        if values.len() != pattern.nnz() {
            return Err(AssemblyError::DimensionMismatch {
                expected: pattern.nnz(),
                got: values.len(),
            });
        }
        let m = SymSparse { pattern, values };
        if let Some((row, col, _)) = m.entries().find(|e| !e.2.is_finite()) {
            return Err(AssemblyError::NonFinite { row, col });
        }
        Ok(m)
    }

    /// Sums `(row, col, value)` triplets; `(i, j)` and `(j, i)` address the
    /// same entry.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<SymSparse> {
        let pattern = Arc::new(Pattern::from_pairs(
            n,
            triplets.iter().map(|&(i, j, _)| (i, j)),
        ));
        let mut values = vec![0.0; pattern.nnz()];
        for &(i, j, v) in triplets {
            values[pattern.find(i, j).unwrap()] += v;
        }
        SymSparse::new(pattern, values)
    }

    /// Reads the upper triangle of a dense symmetric matrix, keeping nonzeros
    /// and the diagonal.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<SymSparse> {
        let n = rows.len();
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(AssemblyError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate().skip(i) {
                if v != 0.0 || i == j {
                    triplets.push((i, j, v));
                }
            }
        }
        SymSparse::from_triplets(n, &triplets)
    }

    pub fn diagonal(d: &[f64]) -> Result<SymSparse> {
        let triplets: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        SymSparse::from_triplets(d.len(), &triplets)
    }

    pub fn identity(n: usize) -> SymSparse {
        SymSparse::diagonal(&vec![1.0; n]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |k| self.values[k])
    }

    /// Stored upper-triangle entries `(row, col, value)`, column by column.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let p = &self.pattern;
        (0..p.n).flat_map(move |col| {
            (p.col_ptr[col]..p.col_ptr[col + 1]).map(move |k| (p.row_idx[k], col, self.values[k]))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        y.fill(0.0);
        let p = &self.pattern;
        for col in 0..p.n {
            let mut acc = 0.0;
            for k in p.col_ptr[col]..p.col_ptr[col + 1] {
                let (row, v) = (p.row_idx[k], self.values[k]);
                acc += v * x[row];
                if row != col {
                    y[row] += v * x[col];
                }
            }
            y[col] += acc;
        }
    }

    /// `x^T S x`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.entries()
            .map(|(i, j, v)| if i == j { v * x[i] * x[i] } else { 2.0 * v * x[i] * x[j] })
            .sum()
    }

    /// `x^T S y`
    pub fn bilinear_form(&self, x: &[f64], y: &[f64]) -> f64 {
        self.entries()
            .map(|(i, j, v)| {
                if i == j {
                    v * x[i] * y[i]
                } else {
                    v * (x[i] * y[j] + x[j] * y[i])
                }
            })
            .sum()
    }

    /// `a * self + b * other`; the result keeps the union of both patterns.
    pub fn combine(&self, a: f64, other: &SymSparse, b: f64) -> Result<SymSparse> {
        if self.dim() != other.dim() {
            return Err(AssemblyError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        if Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern {
            let values = self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect();
            return Ok(SymSparse {
                pattern: self.pattern.clone(),
                values,
            });
        }
        let mut triplets: Vec<_> = self.entries().map(|(i, j, v)| (i, j, a * v)).collect();
        triplets.extend(other.entries().map(|(i, j, v)| (i, j, b * v)));
        SymSparse::from_triplets(self.dim(), &triplets)
    }

    pub fn scaled(&self, s: f64) -> SymSparse {
        SymSparse {
            pattern: self.pattern.clone(),
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for (i, j, v) in self.entries() {
            d[i][j] = v;
            d[j][i] = v;
        }
        d
    }

    /// Coordinate dump: header `n nnz`, then `row col value` per stored
    /// upper-triangle entry.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.dim(), self.nnz())?;
        for (i, j, v) in self.entries() {
            writeln!(w, "{i} {j} {v:e}")?;
        }
        Ok(())
    }
}

/// The three forms of one mesh, on a common pattern.
#[derive(Debug, Clone)]
pub struct FormSet {
    /// Stiffness: `x^T A x = ||grad f||^2`.
    pub a: SymSparse,
    /// Mass: `x^T M x = ||f||^2`.
    pub m: SymSparse,
    /// Boundary mass on the tagged edges: `x^T B x = ||f|_Sigma||^2`.
    pub b: SymSparse,
    /// Mesh vertex of each free dof.
    pub free_dofs: Vec<usize>,
    /// Free dof of each mesh vertex (`None` on the Dirichlet boundary).
    pub dof_of_vertex: Vec<Option<usize>>,
    pub boundary_tag: BoundaryTag,
}

impl FormSet {
    pub fn num_dofs(&self) -> usize {
        self.free_dofs.len()
    }

    /// Extends a free-dof vector by zero to all mesh vertices.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.dof_of_vertex
            .iter()
            .map(|d| d.map_or(0.0, |k| x[k]))
            .collect()
    }

    /// Restricts a vertex vector to the free dofs.
    pub fn restrict(&self, values: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&v| values[v]).collect()
    }
}

/// Element stiffness `T grad(l_i) . grad(l_j)` of a P1 triangle.
pub fn element_stiffness(p: [Point; 3]) -> [[f64; 3]; 3] {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    // grad(l_i) = perp(p_{i+2} - p_{i+1}) / (2T), so T grad_i . grad_j = e_i . e_j / (4T)
    let e: Vec<[f64; 2]> = (0..3)
        .map(|i| {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            [b[0] - a[0], b[1] - a[1]]
        })
        .collect();
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (e[i][0] * e[j][0] + e[i][1] * e[j][1]) / (2.0 * area2);
        }
    }
    k
}

/// Element mass `(T / 12) [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    m
}

/// Edge mass `(L / 6) [[2,1],[1,2]]`.
pub fn edge_mass(length: f64) -> [[f64; 2]; 2] {
    [[length / 3.0, length / 6.0], [length / 6.0, length / 3.0]]
}

/// Assembles the forms on the free dofs (vertices not touching an
/// ArtificialDirichlet edge), with the boundary term on `boundary_tag` edges.
pub fn assemble(mesh: &Mesh, boundary_tag: BoundaryTag) -> Result<FormSet> {
    assemble_with(mesh, boundary_tag, true)
}

/// As [`assemble`] but keeps every vertex as a dof (no Dirichlet reduction).
pub fn assemble_unreduced(mesh: &Mesh, boundary_tag: BoundaryTag) -> Result<FormSet> {
    assemble_with(mesh, boundary_tag, false)
}

fn assemble_with(mesh: &Mesh, boundary_tag: BoundaryTag, reduce: bool) -> Result<FormSet> {
    if boundary_tag == BoundaryTag::ArtificialDirichlet {
        return Err(AssemblyError::InvalidTag(boundary_tag));
    }
    let nv = mesh.vertices.len();
    let mut dirichlet = vec![false; nv];
    if reduce {
        for e in &mesh.tagged_edges {
            if e.tag == BoundaryTag::ArtificialDirichlet {
                dirichlet[e.vertices[0]] = true;
                dirichlet[e.vertices[1]] = true;
            }
        }
    }
    let mut dof_of_vertex = vec![None; nv];
    let mut free_dofs = Vec::new();
    for v in 0..nv {
        if !dirichlet[v] {
            dof_of_vertex[v] = Some(free_dofs.len());
            free_dofs.push(v);
        }
    }
    let n = free_dofs.len();

    let mut areas = Vec::with_capacity(mesh.triangles.len());
    for (index, t) in mesh.triangles.iter().enumerate() {
        let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        let scale = crate::geometry::dist(p[0], p[1])
            .max(crate::geometry::dist(p[1], p[2]))
            .max(crate::geometry::dist(p[2], p[0]));
        if !(area > 1e-14 * scale * scale) {
            return Err(AssemblyError::DegenerateTriangle { index, area });
        }
        areas.push(area);
    }

    let dof = |v: usize| dof_of_vertex[v];
    let mut pairs = Vec::with_capacity(6 * mesh.triangles.len() + n);
    pairs.extend((0..n).map(|i| (i, i)));
    for t in &mesh.triangles {
        for i in 0..3 {
            for j in i + 1..3 {
                if let (Some(a), Some(b)) = (dof(t[i]), dof(t[j])) {
                    pairs.push((a, b));
                }
            }
        }
    }
    let pattern = Arc::new(Pattern::from_pairs(n, pairs));
    let mut a = vec![0.0; pattern.nnz()];
    let mut m = vec![0.0; pattern.nnz()];
    let mut b = vec![0.0; pattern.nnz()];

    for (t, &area) in mesh.triangles.iter().zip(&areas) {
        let p = [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]];
        let ke = element_stiffness(p);
        let me = element_mass(area);
        for i in 0..3 {
            for j in i..3 {
                if let (Some(di), Some(dj)) = (dof(t[i]), dof(t[j])) {
                    let k = pattern.find(di, dj).unwrap();
                    a[k] += ke[i][j];
                    m[k] += me[i][j];
                }
            }
        }
    }
    for e in mesh.tagged_edges.iter().filter(|e| e.tag == boundary_tag) {
        let [u, v] = e.vertices;
        let be = edge_mass(crate::geometry::dist(mesh.vertices[u], mesh.vertices[v]));
        let ids = [dof(u), dof(v)];
        for i in 0..2 {
            for j in i..2 {
                if let (Some(di), Some(dj)) = (ids[i], ids[j]) {
                    b[pattern.find(di, dj).unwrap()] += be[i][j];
                }
            }
        }
    }

    Ok(FormSet {
        a: SymSparse::new(pattern.clone(), a)?,
        m: SymSparse::new(pattern.clone(), m)?,
        b: SymSparse::new(pattern, b)?,
        free_dofs,
        dof_of_vertex,
        boundary_tag,
    })
}

/// `S = A - beta * B` on the free dofs.
pub fn pencil(forms: &FormSet, beta: f64) -> SymSparse {
    forms
        .a
        .combine(1.0, &forms.b, -beta)
        .expect("forms share one pattern")
}

/// Rayleigh quotient `x^T (A - beta B) x / x^T M x`.
pub fn rayleigh(forms: &FormSet, beta: f64, x: &[f64]) -> Result<f64> {
    if x.len() != forms.num_dofs() {
        return Err(AssemblyError::DimensionMismatch {
            expected: forms.num_dofs(),
            got: x.len(),
        });
    }
    let mass = forms.m.quadratic_form(x);
    if !(mass > 0.0) {
        return Err(AssemblyError::ZeroVector);
    }
    Ok((forms.a.quadratic_form(x) - beta * forms.b.quadratic_form(x)) / mass)
}

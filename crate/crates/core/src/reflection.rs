//! Reflection across the boundary of a wedge,
//! `(E f)(x1, x2) = f(x1, 2 xi(x1) - x2)` below the graph of
//! `xi(x1) = cot(phi/2) |x1|`.
//!
//! The map is affine on each half `x1 >= 0`, `x1 <= 0` with unit
//! Jacobian determinant, so a wedge mesh whose axis is a union of edges
//! maps triangle by triangle onto a mesh of the complement, and `E` sends
//! P1 functions to P1 functions. The discrete norm of `E` is then the
//! largest eigenvalue of a pencil on the wedge dofs.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, element_mass, element_stiffness, FormSet, SymSparse};
use crate::eigensolve::{EigenOptions, PencilSolver};
use crate::error::{Error, Result};
use crate::format::fmt_float;
use crate::geometry::{BoundaryTag, DomainKind, Mesh, MeshRole, Point, Provenance, TaggedEdge};

/// A wedge mesh glued to its mirror image.
#[derive(Clone, Debug)]
pub struct MirrorMesh {
    pub angle: f64,
    pub wedge: Mesh,
    /// Wedge vertices keep their indices; mirrored copies of the vertices
    /// off the wedge boundary follow.
    pub full: Mesh,
    /// Preimage (wedge vertex) of every vertex of `full`.
    pub mirror_map: Vec<usize>,
    /// For every triangle of `full`, the wedge triangle it is the image of
    /// (itself for wedge triangles).
    pub preimage_triangle: Vec<usize>,
}

impl MirrorMesh {
    pub fn num_wedge_triangles(&self) -> usize {
        self.wedge.triangles.len()
    }

    /// Whether full-mesh triangle `t` lies in the complement.
    pub fn is_mirrored(&self, t: usize) -> bool {
        t >= self.wedge.triangles.len()
    }

    /// `cot(phi/2)`
    pub fn slope(&self) -> f64 {
        1.0 / (self.angle / 2.0).tan()
    }

    /// The reflection `(x1, x2) -> (x1, 2 xi(x1) - x2)`.
    pub fn reflect(&self, p: Point) -> Point {
        reflect(self.slope(), p)
    }
}

fn reflect(slope: f64, p: Point) -> Point {
    let xi = if slope.abs() < 1e-15 { 0.0 } else { slope * p[0].abs() };
    [p[0], 2.0 * xi - p[1]]
}

fn wedge_angle(mesh: &Mesh) -> Result<f64> {
    match (&mesh.provenance.spec.kind, mesh.provenance.role) {
        (DomainKind::Wedge { angle }, MeshRole::Domain) => Ok(*angle),
        (DomainKind::HalfPlane, MeshRole::Domain) => Ok(PI),
        _ => Err(Error::Unsupported(
            "the reflection is defined for Robin meshes of wedges and the half-plane".into(),
        )),
    }
}

/// Reflects every wedge triangle across the wedge boundary.
pub fn build_mirror_mesh(wedge: &Mesh) -> Result<MirrorMesh> {
    let angle = wedge_angle(wedge)?;
    let slope = 1.0 / (angle / 2.0).tan();
    let scale = wedge
        .vertices
        .iter()
        .fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let eps = 1e-12 * scale;

    for (t, tri) in wedge.triangles.iter().enumerate() {
        let left = tri.iter().any(|&v| wedge.vertices[v][0] < -eps);
        let right = tri.iter().any(|&v| wedge.vertices[v][0] > eps);
        if left && right {
            return Err(Error::InvalidInput(format!(
                "triangle {t} crosses the axis x1 = 0; the mesh must resolve the axis by edges"
            )));
        }
    }

    let nw = wedge.vertices.len();
    let mut vertices = wedge.vertices.clone();
    let mut mirror_map: Vec<usize> = (0..nw).collect();
    let mut image = vec![0usize; nw];
    for (v, &p) in wedge.vertices.iter().enumerate() {
        let q = reflect(slope, p);
        if (q[1] - p[1]).abs() <= eps {
            image[v] = v;
        } else {
            image[v] = vertices.len();
            vertices.push(q);
            mirror_map.push(v);
        }
    }

    let mut triangles = wedge.triangles.clone();
    let mut preimage_triangle: Vec<usize> = (0..wedge.triangles.len()).collect();
    for (t, tri) in wedge.triangles.iter().enumerate() {
        // the reflection reverses orientation
        triangles.push([image[tri[0]], image[tri[2]], image[tri[1]]]);
        preimage_triangle.push(t);
    }

    let mut tagged_edges = Vec::new();
    for e in &wedge.tagged_edges {
        match e.tag {
            BoundaryTag::ArtificialDirichlet => {
                tagged_edges.push(*e);
                let [a, b] = e.vertices;
                if image[a] != a || image[b] != b {
                    tagged_edges.push(TaggedEdge {
                        vertices: [image[a], image[b]],
                        tag: e.tag,
                    });
                }
            }
            BoundaryTag::Robin => tagged_edges.push(TaggedEdge {
                vertices: e.vertices,
                tag: BoundaryTag::Interface,
            }),
            BoundaryTag::Interface => {}
        }
    }

    let full = Mesh {
        vertices,
        triangles,
        tagged_edges,
        provenance: Provenance {
            spec: wedge.provenance.spec.clone(),
            role: MeshRole::Mirror,
            refinements: wedge.provenance.refinements,
        },
    };
    full.validate()?;
    Ok(MirrorMesh {
        angle,
        wedge: wedge.clone(),
        full,
        mirror_map,
        preimage_triangle,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedFunction {
    pub wedge_coeffs: Vec<f64>,
    pub full_coeffs: Vec<f64>,
    pub mirror_map: Vec<usize>,
}

/// `E f` for a P1 function given by its values at the wedge vertices.
pub fn extend(mirror: &MirrorMesh, wedge_coeffs: &[f64]) -> Result<ExtendedFunction> {
    if wedge_coeffs.len() != mirror.wedge.vertices.len() {
        return Err(Error::InvalidInput(format!(
            "expected {} wedge coefficients, got {}",
            mirror.wedge.vertices.len(),
            wedge_coeffs.len()
        )));
    }
    Ok(ExtendedFunction {
        wedge_coeffs: wedge_coeffs.to_vec(),
        full_coeffs: mirror.mirror_map.iter().map(|&v| wedge_coeffs[v]).collect(),
        mirror_map: mirror.mirror_map.clone(),
    })
}

impl ExtendedFunction {
    /// Values on the wedge vertices (the first block of `full_coeffs`).
    pub fn restrict(&self) -> &[f64] {
        &self.full_coeffs[..self.wedge_coeffs.len()]
    }
}

fn corners(mesh: &Mesh, t: usize) -> [Point; 3] {
    let tri = mesh.triangles[t];
    [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]]
}

/// Constant gradient of a P1 function on triangle `t`.
pub fn p1_gradient(mesh: &Mesh, t: usize, coeffs: &[f64]) -> [f64; 2] {
    let tri = mesh.triangles[t];
    let p = corners(mesh, t);
    let (u1, u2) = ([p[1][0] - p[0][0], p[1][1] - p[0][1]], [p[2][0] - p[0][0], p[2][1] - p[0][1]]);
    let (d1, d2) = (coeffs[tri[1]] - coeffs[tri[0]], coeffs[tri[2]] - coeffs[tri[0]]);
    let det = u1[0] * u2[1] - u1[1] * u2[0];
    [(d1 * u2[1] - d2 * u1[1]) / det, (u1[0] * d2 - u2[0] * d1) / det]
}

/// The H1 form `A + M` of the wedge on its free dofs, and the pull-back of
/// the full-mesh H1 form through `E`, on the same pattern.
pub fn reflection_pencil(mirror: &MirrorMesh) -> Result<(FormSet, SymSparse, SymSparse)> {
    let forms = assemble(&mirror.wedge, BoundaryTag::Robin)?;
    let q1 = forms.a.combine(1.0, &forms.m, 1.0)?;
    let pattern = q1.pattern().clone();
    let mut values = q1.values().to_vec();
    for t in mirror.num_wedge_triangles()..mirror.full.triangles.len() {
        let p = corners(&mirror.full, t);
        let area = mirror.full.signed_area(t);
        let (k, m) = (element_stiffness(p), element_mass(area));
        let dofs = mirror.full.triangles[t].map(|v| forms.dof_of_vertex[mirror.mirror_map[v]]);
        for i in 0..3 {
            for j in i..3 {
                if let (Some(a), Some(b)) = (dofs[i], dofs[j]) {
                    let pos = pattern.find(a, b).expect("mirrored triangles reuse wedge couplings");
                    values[pos] += k[i][j] + m[i][j];
                }
            }
        }
    }
    let qe = SymSparse::new(pattern, values)?;
    Ok((forms, q1, qe))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub angle: f64,
    /// `sqrt(lambda_max)` of the pencil `(Q_E, Q_1)`.
    pub value: f64,
    pub upper_bound: f64,
    pub relative_residual: f64,
    pub iterations: usize,
    pub num_dofs: usize,
}

/// `max |E f|_1 / |f|_1` over P1 functions on the wedge mesh vanishing on
/// the truncation arc. These are H1 functions on the wedge, so the value
/// is a lower estimate of the norm of `E`.
pub fn discrete_operator_norm(wedge: &Mesh) -> Result<OperatorNorm> {
    discrete_operator_norm_with(wedge, &EigenOptions::default())
}

pub fn discrete_operator_norm_with(wedge: &Mesh, opts: &EigenOptions) -> Result<OperatorNorm> {
    let mirror = build_mirror_mesh(wedge)?;
    let (forms, q1, qe) = reflection_pencil(&mirror)?;
    let r = PencilSolver::new(q1).largest(&qe, opts)?;
    Ok(OperatorNorm {
        angle: mirror.angle,
        value: r.eigenvalue.sqrt(),
        upper_bound: crate::analytic::wedge_upper_bound(mirror.angle)?,
        relative_residual: r.relative_residual,
        iterations: r.iterations,
        num_dofs: forms.num_dofs(),
    })
}

/// Per-triangle gradient check and the norm identities of the reflection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientDiagnostics {
    /// `(full-mesh triangle, deviation)` for each mirrored triangle:
    /// `|grad(Ef) - J^T grad f(preimage)|` (max norm).
    pub deviations: Vec<(usize, f64)>,
    pub max_deviation: f64,
    /// `|Ef|^2` on the full mesh and `|f|^2` on the wedge.
    pub l2_full: f64,
    pub l2_wedge: f64,
    pub d1_full: f64,
    pub d1_wedge: f64,
    pub d2_full: f64,
    pub d2_wedge: f64,
}

impl GradientDiagnostics {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "triangle_id,deviation")?;
        for (t, d) in &self.deviations {
            writeln!(w, "{t},{}", fmt_float(*d))?;
        }
        Ok(())
    }

    /// Right side of `|d1 Ef|^2 <= (2 + t)|d1 f|^2 + 4 cot^2 (1 + 1/t)|d2 f|^2`.
    pub fn d1_bound(&self, angle: f64, t: f64) -> f64 {
        let cot = 1.0 / (angle / 2.0).tan();
        (2.0 + t) * self.d1_wedge + 4.0 * cot * cot * (1.0 + 1.0 / t) * self.d2_wedge
    }
}

/// Compares the gradient of `E f` on every mirrored triangle with the
/// chain rule `d1 Ef = d1 f + 2 sign(x1) cot(phi/2) d2 f`,
/// `d2 Ef = -d2 f` evaluated on the preimage.
pub fn verify_gradient_identities(mirror: &MirrorMesh, wedge_coeffs: &[f64]) -> Result<GradientDiagnostics> {
    let ext = extend(mirror, wedge_coeffs)?;
    let slope = mirror.slope();
    let mut deviations = Vec::new();
    let mut sums = [0.0; 6];
    for t in 0..mirror.full.triangles.len() {
        let area = mirror.full.signed_area(t);
        let g = p1_gradient(&mirror.full, t, &ext.full_coeffs);
        let tri = mirror.full.triangles[t];
        let vals = tri.map(|v| ext.full_coeffs[v]);
        let s1: f64 = vals.iter().sum();
        let s2: f64 = vals.iter().map(|v| v * v).sum();
        let l2 = area / 12.0 * (s1 * s1 + s2);
        let off = if mirror.is_mirrored(t) { 0 } else { 3 };
        sums[off] += l2;
        sums[off + 1] += area * g[0] * g[0];
        sums[off + 2] += area * g[1] * g[1];
        if mirror.is_mirrored(t) {
            let pre = mirror.preimage_triangle[t];
            let gf = p1_gradient(&mirror.wedge, pre, wedge_coeffs);
            let cx: f64 = corners(&mirror.wedge, pre).iter().map(|p| p[0]).sum();
            let sign = if cx >= 0.0 { 1.0 } else { -1.0 };
            let expected = [gf[0] + 2.0 * sign * slope * gf[1], -gf[1]];
            let dev = (g[0] - expected[0]).abs().max((g[1] - expected[1]).abs());
            deviations.push((t, dev));
        }
    }
    let max_deviation = deviations.iter().fold(0.0f64, |m, d| m.max(d.1));
    Ok(GradientDiagnostics {
        deviations,
        max_deviation,
        l2_full: sums[0] + sums[3],
        l2_wedge: sums[3],
        d1_full: sums[1] + sums[4],
        d1_wedge: sums[4],
        d2_full: sums[2] + sums[5],
        d2_wedge: sums[5],
    })
}

/// Vertex index of each point of `full` that is fixed by the reflection.
pub fn fixed_vertices(mirror: &MirrorMesh) -> Vec<usize> {
    let mut images: HashMap<usize, usize> = HashMap::new();
    for (v, &pre) in mirror.mirror_map.iter().enumerate().skip(mirror.wedge.vertices.len()) {
        images.insert(pre, v);
    }
    (0..mirror.wedge.vertices.len())
        .filter(|v| !images.contains_key(v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, DomainSpec};

    fn wedge_mesh(angle: f64, r: f64, h: f64) -> Mesh {
        let kind = if angle == PI { DomainKind::HalfPlane } else { DomainKind::wedge(angle).unwrap() };
        build_mesh(&DomainSpec::new(kind, r, h).unwrap()).unwrap()
    }

    #[test]
    fn half_plane_mirror_is_symmetric() {
        let m = build_mirror_mesh(&wedge_mesh(PI, 2.0, 0.5)).unwrap();
        for (v, &pre) in m.mirror_map.iter().enumerate().skip(m.wedge.vertices.len()) {
            let (p, q) = (m.full.vertices[v], m.wedge.vertices[pre]);
            assert_eq!(p, [q[0], -q[1]]);
        }
        for v in fixed_vertices(&m) {
            assert!(m.wedge.vertices[v][1].abs() < 1e-12);
        }
    }

    #[test]
    fn mirrored_areas_match() {
        let m = build_mirror_mesh(&wedge_mesh(PI / 2.0, 2.0, 0.3)).unwrap();
        for t in m.num_wedge_triangles()..m.full.triangles.len() {
            let a = m.full.signed_area(t);
            let b = m.wedge.signed_area(m.preimage_triangle[t]);
            assert!((a - b).abs() < 1e-12);
        }
        assert!((m.full.area() - 2.0 * m.wedge.area()).abs() < 1e-10);
    }

    #[test]
    fn boundary_vertices_are_fixed() {
        let m = build_mirror_mesh(&wedge_mesh(PI / 3.0, 2.0, 0.3)).unwrap();
        let slope = m.slope();
        for v in fixed_vertices(&m) {
            let p = m.wedge.vertices[v];
            assert!((p[1] - slope * p[0].abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_function_passes_gradient_check() {
        let m = build_mirror_mesh(&wedge_mesh(2.0 * PI / 3.0, 2.0, 0.3)).unwrap();
        let f: Vec<f64> = m.wedge.vertices.iter().map(|p| 0.3 * p[0] - 1.7 * p[1] + 0.2).collect();
        let d = verify_gradient_identities(&m, &f).unwrap();
        assert!(d.max_deviation <= 1e-12, "{}", d.max_deviation);
    }

    #[test]
    fn odd_function_about_boundary() {
        let m = build_mirror_mesh(&wedge_mesh(PI / 2.0, 2.0, 0.4)).unwrap();
        let slope = m.slope();
        let f: Vec<f64> = m.wedge.vertices.iter().map(|p| p[1] - slope * p[0].abs()).collect();
        let e = extend(&m, &f).unwrap();
        for (v, p) in m.full.vertices.iter().enumerate().skip(m.wedge.vertices.len()) {
            let expected = -(p[1] - slope * p[0].abs());
            assert!((e.full_coeffs[v] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_wedge_meshes() {
        let spec = DomainSpec::bounded(DomainKind::rectangle(1.0, 1.0).unwrap(), 0.5).unwrap();
        assert!(build_mirror_mesh(&build_mesh(&spec).unwrap()).is_err());
    }
}

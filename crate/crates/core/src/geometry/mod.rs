//! Planar domains and conforming P1 triangulations.
//!
//! Every domain is described by a [`DomainSpec`]. Unbounded kinds (wedges,
//! their complements, the half-plane, exterior domains) are truncated at a
//! user supplied radius and carry an artificial homogeneous Dirichlet
//! condition on the truncation curve. Meshes are immutable once built.

mod grid;
mod polygon;
mod rings;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use polygon::{polygon_area, polygon_is_simple};

/// A point in the plane.
pub type Point = [f64; 2];

/// Smallest wedge opening accepted by the mesher. Below this the fan
/// triangles at the apex cannot keep every angle above [`MIN_ANGLE_DEG`].
pub const MIN_WEDGE_ANGLE: f64 = PI / 6.0;

/// Minimum interior angle, in degrees, accepted for ring (wedge type) meshes.
pub const MIN_ANGLE_DEG: f64 = 15.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("wedge angle {angle} is outside (0, pi]")]
    AngleOutOfRange { angle: f64 },
    #[error(
        "wedge angle {angle} is too small: minimum supported angle is {min_supported} \
         (minimum triangle angle {min_angle_deg} deg)"
    )]
    AngleTooSmall {
        angle: f64,
        min_supported: f64,
        min_angle_deg: f64,
    },
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("polygon is not simple: {0}")]
    NonSimplePolygon(String),
    #[error("truncation radius {radius} does not enclose the domain (need > {required})")]
    TruncationTooSmall { radius: f64, required: f64 },
    #[error("{0} has no delta-interaction configuration")]
    NoInterface(&'static str),
    #[error("mesh quality: minimum angle {min_angle_deg:.3} deg is below {limit_deg} deg")]
    PoorQuality { min_angle_deg: f64, limit_deg: f64 },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("triangulation failed: {0}")]
    Triangulation(String),
}

type Result<T> = std::result::Result<T, GeometryError>;

/// Symbolic description of the planar domain.
///
/// Wedges open upwards with apex at the origin:
/// `{ x2 > cot(angle/2) |x1| }`. Rectangles are `(0, a) x (0, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainKind {
    Wedge { angle: f64 },
    WedgeComplement { angle: f64 },
    Rectangle { a: f64, b: f64 },
    RectangleComplement { a: f64, b: f64 },
    HalfPlane,
    Polygon { vertices: Vec<Point> },
    /// Exterior of a simple polygon.
    PolygonComplement { vertices: Vec<Point> },
}

impl DomainKind {
    /// Wedge of opening `angle`; `angle == pi` yields [`DomainKind::HalfPlane`].
    pub fn wedge(angle: f64) -> Result<Self> {
        let angle = check_angle(angle)?;
        if angle == PI {
            Ok(DomainKind::HalfPlane)
        } else {
            Ok(DomainKind::Wedge { angle })
        }
    }

    pub fn wedge_complement(angle: f64) -> Result<Self> {
        Ok(DomainKind::WedgeComplement {
            angle: check_angle(angle)?,
        })
    }

    pub fn rectangle(a: f64, b: f64) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        Ok(DomainKind::Rectangle { a, b })
    }

    pub fn rectangle_complement(a: f64, b: f64) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        Ok(DomainKind::RectangleComplement { a, b })
    }

    /// Simple polygon; clockwise input is reversed.
    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        Ok(DomainKind::Polygon {
            vertices: normalize_polygon(vertices)?,
        })
    }

    pub fn polygon_complement(vertices: Vec<Point>) -> Result<Self> {
        Ok(DomainKind::PolygonComplement {
            vertices: normalize_polygon(vertices)?,
        })
    }

    /// Re-checks the invariants of an already constructed kind (e.g. after
    /// deserialization).
    pub fn validate(&self) -> Result<()> {
        match self {
            DomainKind::Wedge { angle } | DomainKind::WedgeComplement { angle } => {
                check_angle(*angle).map(|_| ())
            }
            DomainKind::Rectangle { a, b } | DomainKind::RectangleComplement { a, b } => {
                positive("a", *a)?;
                positive("b", *b).map(|_| ())
            }
            DomainKind::HalfPlane => Ok(()),
            DomainKind::Polygon { vertices } | DomainKind::PolygonComplement { vertices } => {
                let normalized = normalize_polygon(vertices.clone())?;
                if &normalized != vertices {
                    return Err(GeometryError::NonSimplePolygon(
                        "vertices must be counterclockwise".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, DomainKind::Rectangle { .. } | DomainKind::Polygon { .. })
    }

    /// Opening angle of wedge-type kinds; the half-plane reports `pi`.
    pub fn wedge_angle(&self) -> Option<f64> {
        match self {
            DomainKind::Wedge { angle } => Some(*angle),
            DomainKind::HalfPlane => Some(PI),
            _ => None,
        }
    }

    /// The exterior domain `R^2 \ closure(self)`.
    pub fn complement(&self) -> DomainKind {
        match self {
            DomainKind::Wedge { angle } => DomainKind::WedgeComplement { angle: *angle },
            DomainKind::HalfPlane => DomainKind::WedgeComplement { angle: PI },
            DomainKind::WedgeComplement { angle } => {
                if *angle == PI {
                    DomainKind::HalfPlane
                } else {
                    DomainKind::Wedge { angle: *angle }
                }
            }
            DomainKind::Rectangle { a, b } => DomainKind::RectangleComplement { a: *a, b: *b },
            DomainKind::RectangleComplement { a, b } => DomainKind::Rectangle { a: *a, b: *b },
            DomainKind::Polygon { vertices } => DomainKind::PolygonComplement {
                vertices: vertices.clone(),
            },
            DomainKind::PolygonComplement { vertices } => DomainKind::Polygon {
                vertices: vertices.clone(),
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainKind::Wedge { .. } => "wedge",
            DomainKind::WedgeComplement { .. } => "wedge_complement",
            DomainKind::Rectangle { .. } => "rectangle",
            DomainKind::RectangleComplement { .. } => "rectangle_complement",
            DomainKind::HalfPlane => "halfplane",
            DomainKind::Polygon { .. } => "polygon",
            DomainKind::PolygonComplement { .. } => "polygon_complement",
        }
    }

    /// Half-width of the smallest box around the domain (or around the
    /// bounded part of the complement) centred at its bounding-box centre.
    pub fn half_extent(&self) -> Option<f64> {
        match self {
            DomainKind::Rectangle { a, b } | DomainKind::RectangleComplement { a, b } => {
                Some(0.5 * a.max(*b))
            }
            DomainKind::Polygon { vertices } | DomainKind::PolygonComplement { vertices } => {
                let (lo, hi) = vertices.iter().fold(
                    ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                    |(lo, hi), p| {
                        ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
                    },
                );
                Some(0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]))
            }
            _ => None,
        }
    }

    /// Total length of the boundary curve, `None` when infinite.
    pub fn perimeter(&self) -> Option<f64> {
        match self {
            DomainKind::Rectangle { a, b } | DomainKind::RectangleComplement { a, b } => {
                Some(2.0 * (a + b))
            }
            DomainKind::Polygon { vertices } | DomainKind::PolygonComplement { vertices } => {
                Some(polygon::perimeter(vertices))
            }
            _ => None,
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainKind::Wedge { angle } => write!(f, "wedge(angle={angle})"),
            DomainKind::WedgeComplement { angle } => write!(f, "wedge_complement(angle={angle})"),
            DomainKind::Rectangle { a, b } => write!(f, "rectangle(a={a}, b={b})"),
            DomainKind::RectangleComplement { a, b } => {
                write!(f, "rectangle_complement(a={a}, b={b})")
            }
            DomainKind::HalfPlane => write!(f, "halfplane"),
            DomainKind::Polygon { vertices } => write!(f, "polygon({} vertices)", vertices.len()),
            DomainKind::PolygonComplement { vertices } => {
                write!(f, "polygon_complement({} vertices)", vertices.len())
            }
        }
    }
}

/// Domain kind plus discretization geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Present iff the domain is unbounded.
    pub truncation_radius: Option<f64>,
    pub mesh_size: f64,
}

impl DomainSpec {
    /// Builds a spec; `truncation_radius` is kept only for unbounded kinds.
    pub fn new(kind: DomainKind, truncation_radius: f64, mesh_size: f64) -> Result<Self> {
        kind.validate()?;
        positive("mesh_size", mesh_size)?;
        let truncation_radius = if kind.is_bounded() {
            None
        } else {
            Some(positive("truncation_radius", truncation_radius)?)
        };
        Ok(Self {
            kind,
            truncation_radius,
            mesh_size,
        })
    }

    pub fn bounded(kind: DomainKind, mesh_size: f64) -> Result<Self> {
        Self::new(kind, 1.0, mesh_size)
    }

    fn radius(&self) -> Result<f64> {
        self.truncation_radius.ok_or(GeometryError::NonPositive {
            name: "truncation_radius",
            value: f64::NAN,
        })
    }
}

/// Role of a tagged edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// Part of the true boundary, carries the coupling term.
    Robin,
    /// Created by truncation, homogeneous essential condition.
    ArtificialDirichlet,
    /// Interior edge on the curve supporting the delta interaction.
    Interface,
}

impl BoundaryTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryTag::Robin => "Robin",
            BoundaryTag::ArtificialDirichlet => "ArtificialDirichlet",
            BoundaryTag::Interface => "Interface",
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeshRole {
    /// Triangulation of the (truncated) domain itself.
    Domain,
    /// Box containing the interface curve.
    Delta { box_radius: f64 },
    /// Wedge mesh glued to its reflected copy.
    Mirror,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: DomainSpec,
    pub role: MeshRole,
    pub refinements: u32,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub tagged_edges: Vec<TaggedEdge>,
    pub provenance: Provenance,
}

#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[inline]
pub(crate) fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.provenance.spec
    }

    /// Signed area of triangle `t` (positive for counterclockwise).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * cross(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn edge_length(&self, e: [usize; 2]) -> f64 {
        dist(self.vertices[e[0]], self.vertices[e[1]])
    }

    pub fn tagged_length(&self, tag: BoundaryTag) -> f64 {
        self.tagged_edges
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| self.edge_length(e.vertices))
            .sum()
    }

    pub fn count_tag(&self, tag: BoundaryTag) -> usize {
        self.tagged_edges.iter().filter(|e| e.tag == tag).count()
    }

    /// Undirected edge -> adjacent triangles.
    pub fn edge_triangles(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                map.entry(edge_key(tri[i], tri[(i + 1) % 3]))
                    .or_default()
                    .push(t);
            }
        }
        map
    }

    /// Edges adjacent to exactly one triangle.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = self
            .edge_triangles()
            .into_iter()
            .filter(|(_, ts)| ts.len() == 1)
            .map(|(k, _)| [k.0, k.1])
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |i| [t[i], t[(i + 1) % 3]]))
            .map(|e| self.edge_length(e))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut min = 180.0f64;
        for tri in &self.triangles {
            for i in 0..3 {
                let p = self.vertices[tri[i]];
                let q = self.vertices[tri[(i + 1) % 3]];
                let r = self.vertices[tri[(i + 2) % 3]];
                let u = [q[0] - p[0], q[1] - p[1]];
                let v = [r[0] - p[0], r[1] - p[1]];
                let c = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min = min.min(c.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Vertices touched by edges carrying `tag`.
    pub fn tagged_vertices(&self, tag: BoundaryTag) -> Vec<bool> {
        let mut mark = vec![false; self.vertices.len()];
        for e in self.tagged_edges.iter().filter(|e| e.tag == tag) {
            mark[e.vertices[0]] = true;
            mark[e.vertices[1]] = true;
        }
        mark
    }

    /// Checks orientation, conformity and the tag partition.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(GeometryError::InvalidMesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let area = self.signed_area(t);
            if !(area > 0.0) {
                return Err(GeometryError::InvalidMesh(format!(
                    "triangle {t} has non-positive signed area {area:e}"
                )));
            }
        }
        let mut directed = HashMap::with_capacity(3 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                if let Some(other) = directed.insert((tri[i], tri[(i + 1) % 3]), t) {
                    return Err(GeometryError::InvalidMesh(format!(
                        "directed edge {:?} shared by triangles {other} and {t}",
                        (tri[i], tri[(i + 1) % 3])
                    )));
                }
            }
        }
        let adjacency = self.edge_triangles();
        let mut tags: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for e in &self.tagged_edges {
            let key = edge_key(e.vertices[0], e.vertices[1]);
            if tags.insert(key, e.tag).is_some() {
                return Err(GeometryError::InvalidMesh(format!(
                    "edge {key:?} tagged twice"
                )));
            }
            let count = adjacency.get(&key).map_or(0, |v| v.len());
            let expected = if e.tag == BoundaryTag::Interface { 2 } else { 1 };
            if count != expected {
                return Err(GeometryError::InvalidMesh(format!(
                    "{} edge {key:?} lies on {count} triangles",
                    e.tag
                )));
            }
        }
        for (key, ts) in &adjacency {
            if ts.len() == 1 && !tags.contains_key(key) {
                return Err(GeometryError::InvalidMesh(format!(
                    "boundary edge {key:?} is untagged (hanging node or gap)"
                )));
            }
        }
        Ok(())
    }

    /// Plain-text export: `vertices N triangles M edges K`, then vertex
    /// coordinates, triangles (0-based) and tagged edges.
    pub fn write_text<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "vertices {} triangles {} edges {}",
            self.vertices.len(),
            self.triangles.len(),
            self.tagged_edges.len()
        )?;
        for p in &self.vertices {
            writeln!(w, "{} {}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        for e in &self.tagged_edges {
            writeln!(w, "{} {} {}", e.vertices[0], e.vertices[1], e.tag)?;
        }
        Ok(())
    }

    /// Parses the format written by [`Mesh::write_text`].
    pub fn read_text(text: &str, provenance: Provenance) -> Result<Mesh> {
        let bad = |msg: &str| GeometryError::InvalidMesh(format!("mesh text: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty"))?
            .split_whitespace()
            .collect();
        if header.len() != 6 || header[0] != "vertices" || header[2] != "triangles" || header[4] != "edges" {
            return Err(bad("malformed header"));
        }
        let count = |s: &str| s.parse::<usize>().map_err(|_| bad("bad count"));
        let (nv, nt, ne) = (count(header[1])?, count(header[3])?, count(header[5])?);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let f: Vec<f64> = lines
                .next()
                .ok_or_else(|| bad("truncated vertices"))?
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| bad("bad coordinate")))
                .collect::<Result<_>>()?;
            if f.len() != 2 {
                return Err(bad("vertex line needs 2 values"));
            }
            vertices.push([f[0], f[1]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let f: Vec<usize> = lines
                .next()
                .ok_or_else(|| bad("truncated triangles"))?
                .split_whitespace()
                .map(count)
                .collect::<Result<_>>()?;
            if f.len() != 3 {
                return Err(bad("triangle line needs 3 indices"));
            }
            triangles.push([f[0], f[1], f[2]]);
        }
        let mut tagged_edges = Vec::with_capacity(ne);
        for _ in 0..ne {
            let f: Vec<&str> = lines
                .next()
                .ok_or_else(|| bad("truncated edges"))?
                .split_whitespace()
                .collect();
            if f.len() != 3 {
                return Err(bad("edge line needs 3 fields"));
            }
            let tag = match f[2] {
                "Robin" => BoundaryTag::Robin,
                "ArtificialDirichlet" => BoundaryTag::ArtificialDirichlet,
                "Interface" => BoundaryTag::Interface,
                _ => return Err(bad("unknown tag")),
            };
            tagged_edges.push(TaggedEdge {
                vertices: [count(f[0])?, count(f[1])?],
                tag,
            });
        }
        Ok(Mesh {
            vertices,
            triangles,
            tagged_edges,
            provenance,
        })
    }

    fn check_quality(self, limit_deg: f64) -> Result<Mesh> {
        let min_angle = self.min_angle_deg();
        if min_angle < limit_deg - 1e-9 {
            return Err(GeometryError::PoorQuality {
                min_angle_deg: min_angle,
                limit_deg,
            });
        }
        Ok(self)
    }
}

/// Triangulates the (truncated) domain described by `spec`.
///
/// Edges on the true boundary are tagged [`BoundaryTag::Robin`], edges on
/// the truncation curve [`BoundaryTag::ArtificialDirichlet`].
pub fn build_mesh(spec: &DomainSpec) -> Result<Mesh> {
    spec.kind.validate()?;
    positive("mesh_size", spec.mesh_size)?;
    let h = spec.mesh_size;
    let provenance = Provenance {
        spec: spec.clone(),
        role: MeshRole::Domain,
        refinements: 0,
    };
    let (vertices, triangles, tagged_edges) = match &spec.kind {
        DomainKind::Wedge { angle } => {
            check_min_wedge_angle(*angle)?;
            rings::wedge(*angle, spec.radius()?, h, false)
        }
        DomainKind::HalfPlane => rings::wedge(PI, spec.radius()?, h, false),
        DomainKind::WedgeComplement { angle } => rings::wedge(*angle, spec.radius()?, h, true),
        DomainKind::Rectangle { a, b } => grid::rectangle(*a, *b, h),
        DomainKind::RectangleComplement { a, b } => {
            grid::rectangle_complement(*a, *b, spec.radius()?, h)?
        }
        DomainKind::Polygon { vertices } => polygon::interior(vertices, h)?,
        DomainKind::PolygonComplement { vertices } => {
            polygon::exterior(vertices, spec.radius()?, h)?
        }
    };
    let mesh = Mesh {
        vertices,
        triangles,
        tagged_edges,
        provenance,
    };
    match spec.kind {
        DomainKind::Wedge { .. } | DomainKind::WedgeComplement { .. } | DomainKind::HalfPlane => {
            mesh.check_quality(MIN_ANGLE_DEG)
        }
        _ => Ok(mesh),
    }
}

/// Triangulates the box `[-R, R]^2` (centered at the wedge apex, or at the
/// centre of a bounded domain) with the boundary curve of the domain
/// resolved by interior edges tagged [`BoundaryTag::Interface`].
pub fn build_delta_mesh(spec: &DomainSpec, box_radius: f64) -> Result<Mesh> {
    spec.kind.validate()?;
    positive("box_radius", box_radius)?;
    positive("mesh_size", spec.mesh_size)?;
    let h = spec.mesh_size;
    let provenance = Provenance {
        spec: spec.clone(),
        role: MeshRole::Delta { box_radius },
        refinements: 0,
    };
    let (vertices, triangles, tagged_edges) = match &spec.kind {
        DomainKind::Wedge { angle } => {
            check_min_wedge_angle(*angle)?;
            rings::delta_box(*angle, box_radius, h)?
        }
        DomainKind::HalfPlane => rings::delta_box(PI, box_radius, h)?,
        DomainKind::Rectangle { a, b } => grid::rectangle_delta(*a, *b, box_radius, h)?,
        DomainKind::Polygon { vertices } => polygon::delta(vertices, box_radius, h)?,
        DomainKind::WedgeComplement { .. } => {
            return Err(GeometryError::NoInterface(
                "wedge_complement (use the wedge: the interface is shared)",
            ))
        }
        DomainKind::RectangleComplement { .. } => {
            return Err(GeometryError::NoInterface(
                "rectangle_complement (use the rectangle: the interface is shared)",
            ))
        }
        DomainKind::PolygonComplement { .. } => {
            return Err(GeometryError::NoInterface(
                "polygon_complement (use the polygon: the interface is shared)",
            ))
        }
    };
    let mesh = Mesh {
        vertices,
        triangles,
        tagged_edges,
        provenance,
    };
    match spec.kind {
        DomainKind::Wedge { .. } | DomainKind::HalfPlane => mesh.check_quality(MIN_ANGLE_DEG),
        _ => Ok(mesh),
    }
}

/// Uniform red refinement: every triangle is split into four through its
/// edge midpoints. Coarse vertices keep their indices, so the P1 space of
/// the input is contained in the P1 space of the output.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<(usize, usize), usize> =
        HashMap::with_capacity(3 * mesh.triangles.len() / 2 + 1);
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        *midpoint.entry(edge_key(a, b)).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut tagged_edges = Vec::with_capacity(2 * mesh.tagged_edges.len());
    for e in &mesh.tagged_edges {
        let [a, b] = e.vertices;
        let m = mid(a, b, &mut vertices);
        tagged_edges.push(TaggedEdge {
            vertices: [a, m],
            tag: e.tag,
        });
        tagged_edges.push(TaggedEdge {
            vertices: [m, b],
            tag: e.tag,
        });
    }
    let mut provenance = mesh.provenance.clone();
    provenance.refinements += 1;
    Mesh {
        vertices,
        triangles,
        tagged_edges,
        provenance,
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(GeometryError::NonPositive { name, value })
    }
}

fn check_angle(angle: f64) -> Result<f64> {
    if !(angle.is_finite() && angle > 0.0 && angle <= PI + 1e-14) {
        return Err(GeometryError::AngleOutOfRange { angle });
    }
    Ok(if (angle - PI).abs() <= 1e-14 { PI } else { angle })
}

fn check_min_wedge_angle(angle: f64) -> Result<()> {
    if angle < MIN_WEDGE_ANGLE - 1e-12 {
        return Err(GeometryError::AngleTooSmall {
            angle,
            min_supported: MIN_WEDGE_ANGLE,
            min_angle_deg: MIN_ANGLE_DEG,
        });
    }
    Ok(())
}

fn normalize_polygon(mut vertices: Vec<Point>) -> Result<Vec<Point>> {
    if vertices.len() < 3 {
        return Err(GeometryError::NonSimplePolygon(
            "fewer than three vertices".into(),
        ));
    }
    if vertices.iter().flatten().any(|c| !c.is_finite()) {
        return Err(GeometryError::NonSimplePolygon("non-finite coordinate".into()));
    }
    if vertices.first() == vertices.last() {
        vertices.pop();
    }
    polygon_is_simple(&vertices).map_err(GeometryError::NonSimplePolygon)?;
    let area = polygon_area(&vertices);
    if area == 0.0 {
        return Err(GeometryError::NonSimplePolygon("zero area".into()));
    }
    if area < 0.0 {
        vertices.reverse();
    }
    Ok(vertices)
}

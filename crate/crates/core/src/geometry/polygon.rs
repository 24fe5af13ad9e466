//! Unstructured meshes for simple polygons, their truncated exterior and
//! the delta box containing both.
//!
//! The coarse triangulation comes from ear clipping (the exterior is a box
//! with the polygon as a hole, joined by a bridge edge). It is then refined
//! by repeatedly bisecting the globally longest edge, with Lawson flips in
//! between. Tagged edges are never flipped, so boundaries stay resolved.

use std::collections::{BinaryHeap, HashMap};

use super::{cross, dist, edge_key, BoundaryTag, GeometryError, Point, TaggedEdge};

type Parts = (Vec<Point>, Vec<[usize; 3]>, Vec<TaggedEdge>);

/// Signed area (positive for counter-clockwise vertex order).
pub fn polygon_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (vertices[i], vertices[(i + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

pub(super) fn perimeter(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    (0..n).map(|i| dist(vertices[i], vertices[(i + 1) % n])).sum()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(a, b, c)
}

fn on_segment(p: Point, q: Point, r: Point) -> bool {
    r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Checks that the closed polyline through `vertices` does not touch itself.
pub fn polygon_is_simple(vertices: &[Point]) -> Result<(), String> {
    let n = vertices.len();
    if n < 3 {
        return Err("fewer than three vertices".into());
    }
    for i in 0..n {
        if vertices[i] == vertices[(i + 1) % n] {
            return Err(format!("repeated vertex {i}"));
        }
    }
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        // adjacent edge folding back onto this one
        let c = vertices[(i + 2) % n];
        if n > 3 && orient(a, b, c) == 0.0 {
            let (u, v) = ([b[0] - a[0], b[1] - a[1]], [c[0] - b[0], c[1] - b[1]]);
            if u[0] * v[0] + u[1] * v[1] < 0.0 {
                return Err(format!("edges {i} and {} overlap", (i + 1) % n));
            }
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (p, q) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, p, q) {
                return Err(format!("edges {i} and {j} intersect"));
            }
        }
    }
    Ok(())
}

pub(super) fn interior(vertices: &[Point], h: f64) -> Result<Parts, GeometryError> {
    let mut builder = Builder::default();
    let ring = builder.add_loop(vertices, spacing(vertices, h), BoundaryTag::Robin);
    let triangles = ear_clip(&builder.points, &ring)?;
    builder.finish(triangles, h)
}

pub(super) fn exterior(vertices: &[Point], radius: f64, h: f64) -> Result<Parts, GeometryError> {
    let mut builder = Builder::default();
    let ring = builder.add_loop(vertices, spacing(vertices, h), BoundaryTag::Robin);
    let corners = box_corners(vertices, radius)?;
    let outer = builder.add_loop(&corners, h.max(radius / 4.0), BoundaryTag::ArtificialDirichlet);
    let bridged = builder.bridge(&outer, &ring);
    let triangles = ear_clip(&builder.points, &bridged)?;
    builder.finish(triangles, h)
}

pub(super) fn delta(vertices: &[Point], radius: f64, h: f64) -> Result<Parts, GeometryError> {
    let mut builder = Builder::default();
    let ring = builder.add_loop(vertices, spacing(vertices, h), BoundaryTag::Interface);
    let corners = box_corners(vertices, radius)?;
    let outer = builder.add_loop(&corners, h.max(radius / 4.0), BoundaryTag::ArtificialDirichlet);
    let mut triangles = ear_clip(&builder.points, &ring)?;
    let bridged = builder.bridge(&outer, &ring);
    triangles.extend(ear_clip(&builder.points, &bridged)?);
    builder.finish(triangles, h)
}

/// Initial boundary spacing; refinement takes it down to `h` afterwards.
fn spacing(vertices: &[Point], h: f64) -> f64 {
    h.max(perimeter(vertices) / 64.0)
}

/// Counter-clockwise corners of the box of half-width `radius` around the
/// centre of the bounding box.
fn box_corners(vertices: &[Point], radius: f64) -> Result<Vec<Point>, GeometryError> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in vertices {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let required = 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if radius <= required {
        return Err(GeometryError::TruncationTooSmall { radius, required });
    }
    Ok(vec![
        [c[0] - radius, c[1] - radius],
        [c[0] + radius, c[1] - radius],
        [c[0] + radius, c[1] + radius],
        [c[0] - radius, c[1] + radius],
    ])
}

#[derive(Default)]
struct Builder {
    points: Vec<Point>,
    tags: HashMap<(usize, usize), BoundaryTag>,
}

impl Builder {
    /// Adds a closed counter-clockwise loop, subdividing each side to at
    /// most `step`. Returns the vertex indices in order.
    fn add_loop(&mut self, corners: &[Point], step: f64, tag: BoundaryTag) -> Vec<usize> {
        let n = corners.len();
        let mut ids = Vec::new();
        for i in 0..n {
            let (p, q) = (corners[i], corners[(i + 1) % n]);
            let m = ((dist(p, q) / step) - 1e-9).ceil().max(1.0) as usize;
            for k in 0..m {
                let s = k as f64 / m as f64;
                self.points
                    .push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
                ids.push(self.points.len() - 1);
            }
        }
        for i in 0..ids.len() {
            self.tags
                .insert(edge_key(ids[i], ids[(i + 1) % ids.len()]), tag);
        }
        ids
    }

    /// Single weakly simple loop: outer boundary with the (reversed) hole
    /// attached through a horizontal bridge from its rightmost vertex.
    fn bridge(&mut self, outer: &[usize], hole: &[usize]) -> Vec<usize> {
        let pts = &self.points;
        let start = (0..hole.len())
            .max_by(|&i, &j| {
                let (p, q) = (pts[hole[i]], pts[hole[j]]);
                p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1]))
            })
            .unwrap();
        let anchor = pts[hole[start]];
        let right = outer.iter().map(|&i| pts[i][0]).fold(f64::NEG_INFINITY, f64::max);

        // locate (or insert) the box vertex at the anchor height on the right side
        let n = outer.len();
        let mut outer = outer.to_vec();
        let mut at = None;
        for k in 0..n {
            let (p, q) = (self.points[outer[k]], self.points[outer[(k + 1) % n]]);
            if p[0] == right && q[0] == right {
                if p[1] == anchor[1] {
                    at = Some(k);
                    break;
                }
                if p[1] < anchor[1] && anchor[1] < q[1] {
                    let tag = self.tags.remove(&edge_key(outer[k], outer[(k + 1) % n])).unwrap();
                    self.points.push([right, anchor[1]]);
                    let id = self.points.len() - 1;
                    self.tags.insert(edge_key(outer[k], id), tag);
                    self.tags.insert(edge_key(id, outer[(k + 1) % n]), tag);
                    outer.insert(k + 1, id);
                    at = Some(k + 1);
                    break;
                }
            }
        }
        let at = at.expect("box right side spans the polygon");

        let mut loop_ids = outer[..=at].to_vec();
        let m = hole.len();
        for k in 0..=m {
            // clockwise around the hole, starting and ending at the anchor
            loop_ids.push(hole[(start + m - k % m) % m]);
        }
        loop_ids.push(outer[at]);
        loop_ids.extend_from_slice(&outer[at + 1..]);
        loop_ids
    }

    fn finish(self, triangles: Vec<[usize; 3]>, h: f64) -> Result<Parts, GeometryError> {
        let mut mesh = Refiner::new(self.points, triangles, self.tags);
        mesh.refine(h)?;
        Ok(mesh.into_parts())
    }
}

fn point_in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}

/// Ear clipping of a counter-clockwise (possibly weakly simple) loop.
fn ear_clip(points: &[Point], ring: &[usize]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let mut ids = ring.to_vec();
    let mut triangles = Vec::with_capacity(ids.len());
    let mut i = 0;
    let mut stalled = 0;
    while ids.len() > 3 {
        let n = ids.len();
        let (ia, ib, ic) = (ids[(i + n - 1) % n], ids[i % n], ids[(i + 1) % n]);
        let (a, b, c) = (points[ia], points[ib], points[ic]);
        let mut ear = orient(a, b, c) > 0.0;
        if ear {
            ear = !ids.iter().any(|&k| {
                k != ia && k != ib && k != ic && point_in_triangle(points[k], a, b, c)
            });
        }
        if ear {
            triangles.push([ia, ib, ic]);
            ids.remove(i % n);
            stalled = 0;
            i %= ids.len();
        } else {
            i = (i + 1) % n;
            stalled += 1;
            if stalled > n {
                return Err(GeometryError::Triangulation("ear clipping found no ear".into()));
            }
        }
    }
    let (a, b, c) = (ids[0], ids[1], ids[2]);
    if orient(points[a], points[b], points[c]) <= 0.0 {
        return Err(GeometryError::Triangulation("degenerate final ear".into()));
    }
    triangles.push([a, b, c]);
    Ok(triangles)
}

const NONE: usize = usize::MAX;

struct Refiner {
    points: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: HashMap<(usize, usize), [usize; 2]>,
    tags: HashMap<(usize, usize), BoundaryTag>,
}

impl Refiner {
    fn new(
        points: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        tags: HashMap<(usize, usize), BoundaryTag>,
    ) -> Self {
        let mut r = Refiner {
            points,
            triangles: Vec::new(),
            edges: HashMap::new(),
            tags,
        };
        for t in triangles {
            r.push(t);
        }
        r
    }

    fn link(&mut self, t: usize) {
        let tri = self.triangles[t];
        for k in 0..3 {
            let slot = self
                .edges
                .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                .or_insert([NONE, NONE]);
            if slot[0] == NONE {
                slot[0] = t;
            } else {
                slot[1] = t;
            }
        }
    }

    fn unlink(&mut self, t: usize) {
        let tri = self.triangles[t];
        for k in 0..3 {
            let key = edge_key(tri[k], tri[(k + 1) % 3]);
            let slot = self.edges.get_mut(&key).unwrap();
            if slot[0] == t {
                slot[0] = slot[1];
            }
            slot[1] = NONE;
            if slot[0] == NONE {
                self.edges.remove(&key);
            }
        }
    }

    fn push(&mut self, tri: [usize; 3]) -> usize {
        self.triangles.push(tri);
        let t = self.triangles.len() - 1;
        self.link(t);
        t
    }

    fn replace(&mut self, t: usize, tri: [usize; 3]) {
        self.unlink(t);
        self.triangles[t] = tri;
        self.link(t);
    }

    fn length(&self, e: (usize, usize)) -> f64 {
        dist(self.points[e.0], self.points[e.1])
    }

    /// Rotates triangle `t` so that it reads `(a, b, c)` with `{a, b}` the edge.
    fn oriented(&self, t: usize, e: (usize, usize)) -> [usize; 3] {
        let tri = self.triangles[t];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if edge_key(a, b) == e {
                return [a, b, tri[(k + 2) % 3]];
            }
        }
        unreachable!("edge not in triangle")
    }

    fn split(&mut self, e: (usize, usize)) -> Vec<(usize, usize)> {
        let (p, q) = (self.points[e.0], self.points[e.1]);
        self.points.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        let m = self.points.len() - 1;
        if let Some(tag) = self.tags.remove(&e) {
            self.tags.insert(edge_key(e.0, m), tag);
            self.tags.insert(edge_key(m, e.1), tag);
        }
        let adjacent = self.edges[&e];
        let mut touched = vec![edge_key(e.0, m), edge_key(m, e.1)];
        for t in adjacent.into_iter().filter(|&t| t != NONE) {
            let [a, b, c] = self.oriented(t, e);
            self.replace(t, [a, m, c]);
            self.push([m, b, c]);
            touched.push(edge_key(m, c));
        }
        touched
    }

    fn should_flip(&self, e: (usize, usize)) -> Option<(usize, usize, [usize; 4])> {
        if self.tags.contains_key(&e) {
            return None;
        }
        let [t0, t1] = *self.edges.get(&e)?;
        if t1 == NONE {
            return None;
        }
        let [a, b, c] = self.oriented(t0, e);
        let [_, _, d] = self.oriented(t1, e);
        let p = |i: usize| self.points[i];
        // the flipped pair (a, d, c), (d, b, c) must be valid
        if orient(p(a), p(d), p(c)) <= 0.0 || orient(p(d), p(b), p(c)) <= 0.0 {
            return None;
        }
        (incircle(p(a), p(b), p(c), p(d)) > 1e-12 * self.length(e).powi(4))
            .then_some((t0, t1, [a, b, c, d]))
    }

    fn flip_all(&mut self) {
        let mut stack: Vec<(usize, usize)> = self.edges.keys().copied().collect();
        stack.sort_unstable();
        while let Some(e) = stack.pop() {
            if let Some((t0, t1, [a, b, c, d])) = self.should_flip(e) {
                self.unlink(t0);
                self.unlink(t1);
                self.triangles[t0] = [a, d, c];
                self.triangles[t1] = [d, b, c];
                self.link(t0);
                self.link(t1);
                stack.extend([edge_key(a, d), edge_key(d, b), edge_key(b, c), edge_key(c, a)]);
            }
        }
    }

    fn refine(&mut self, h: f64) -> Result<(), GeometryError> {
        self.flip_all();
        for _ in 0..32 {
            let mut heap: BinaryHeap<(u64, usize, usize)> = self
                .edges
                .keys()
                .filter(|&&e| self.length(e) > h)
                .map(|&e| (self.length(e).to_bits(), e.0, e.1))
                .collect();
            if heap.is_empty() {
                return Ok(());
            }
            while let Some((bits, a, b)) = heap.pop() {
                let e = (a, b);
                if !self.edges.contains_key(&e) || self.length(e).to_bits() != bits {
                    continue;
                }
                for f in self.split(e) {
                    let len = self.length(f);
                    if len > h {
                        heap.push((len.to_bits(), f.0, f.1));
                    }
                }
            }
            self.flip_all();
            if self.edges.keys().all(|&e| self.length(e) <= 1.5 * h) {
                return Ok(());
            }
        }
        Err(GeometryError::Triangulation("refinement did not reach the mesh size".into()))
    }

    fn into_parts(self) -> Parts {
        let mut tagged: Vec<TaggedEdge> = self
            .tags
            .into_iter()
            .map(|(e, tag)| TaggedEdge {
                vertices: [e.0, e.1],
                tag,
            })
            .collect();
        tagged.sort_unstable_by_key(|e| e.vertices);
        (self.points, self.triangles, tagged)
    }
}

/// Positive when `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `(a, b, c)`.
fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (ax, ay) = (a[0] - d[0], a[1] - d[1]);
    let (bx, by) = (b[0] - d[0], b[1] - d[1]);
    let (cx, cy) = (c[0] - d[0], c[1] - d[1]);
    (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_shape() -> Vec<Point> {
        vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]
    }

    fn area(parts: &Parts) -> f64 {
        parts
            .1
            .iter()
            .map(|t| 0.5 * cross(parts.0[t[0]], parts.0[t[1]], parts.0[t[2]]))
            .sum()
    }

    fn tagged_length(parts: &Parts, tag: BoundaryTag) -> f64 {
        parts
            .2
            .iter()
            .filter(|e| e.tag == tag)
            .map(|e| dist(parts.0[e.vertices[0]], parts.0[e.vertices[1]]))
            .sum()
    }

    #[test]
    fn shoelace() {
        assert_eq!(polygon_area(&l_shape()), 3.0);
        let mut cw = l_shape();
        cw.reverse();
        assert_eq!(polygon_area(&cw), -3.0);
    }

    #[test]
    fn bow_tie_is_not_simple() {
        let v = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(polygon_is_simple(&v).is_err());
        assert!(polygon_is_simple(&l_shape()).is_ok());
    }

    #[test]
    fn interior_of_l_shape() {
        let parts = interior(&l_shape(), 0.2).unwrap();
        assert!((area(&parts) - 3.0).abs() < 1e-12);
        assert!((tagged_length(&parts, BoundaryTag::Robin) - 8.0).abs() < 1e-12);
        assert!(parts.1.iter().all(|t| cross(parts.0[t[0]], parts.0[t[1]], parts.0[t[2]]) > 0.0));
    }

    #[test]
    fn exterior_and_delta() {
        let ext = exterior(&l_shape(), 3.0, 0.3).unwrap();
        assert!((area(&ext) - (36.0 - 3.0)).abs() < 1e-10);
        assert!((tagged_length(&ext, BoundaryTag::Robin) - 8.0).abs() < 1e-12);
        assert!((tagged_length(&ext, BoundaryTag::ArtificialDirichlet) - 24.0).abs() < 1e-10);
        let del = delta(&l_shape(), 3.0, 0.3).unwrap();
        assert!((area(&del) - 36.0).abs() < 1e-10);
        assert!((tagged_length(&del, BoundaryTag::Interface) - 8.0).abs() < 1e-12);
    }
}

//! Ring meshes around a wedge apex.
//!
//! The region is split into angular pieces bounded by rays from the apex.
//! Each piece is covered by nested rings (circles, or squares for the delta
//! box) whose radii are graded geometrically towards the apex with ratio
//! 1.5 and become uniform once the spacing reaches the target size.
//! Consecutive rings are stitched by an angle-ordered zipper, so rays are
//! unions of mesh edges by construction.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::{cross, dist, BoundaryTag, GeometryError, Point, TaggedEdge};

type Parts = (Vec<Point>, Vec<[usize; 3]>, Vec<TaggedEdge>);

const GRADING_RATIO: f64 = 1.5;
/// First ring radius as a fraction of the target size.
const APEX_FRACTION: f64 = 0.125;
const SPACING_FACTOR: f64 = 0.95;
const SQUARE_SPACING_FACTOR: f64 = 0.75;
/// Smallest angle between a ray and a box corner kept as a vertex.
const CORNER_SEPARATION: f64 = 0.3;
const CUT_CORNER_FACTOR: f64 = 0.8;

struct Ray {
    theta: f64,
    tag: Option<BoundaryTag>,
}

struct Piece {
    from: usize,
    to: usize,
    start: f64,
    end: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Shape {
    Circle,
    /// Squares `max(|x|, |y|) = r`.
    Square,
}

struct Layout {
    rays: Vec<Ray>,
    pieces: Vec<Piece>,
    shape: Shape,
    radius: f64,
    h: f64,
}

/// Truncated wedge (or its complement) of opening `angle`, split along the
/// symmetry axis `x1 = 0`.
pub(super) fn wedge(angle: f64, radius: f64, h: f64, complement: bool) -> Parts {
    let half = 0.5 * angle;
    let (right, axis, left) = if complement {
        (FRAC_PI_2 + half, 1.5 * PI, 2.5 * PI - half)
    } else {
        (FRAC_PI_2 - half, FRAC_PI_2, FRAC_PI_2 + half)
    };
    let layout = Layout {
        rays: vec![
            Ray {
                theta: right,
                tag: Some(BoundaryTag::Robin),
            },
            Ray {
                theta: axis,
                tag: None,
            },
            Ray {
                theta: left,
                tag: Some(BoundaryTag::Robin),
            },
        ],
        pieces: vec![
            Piece {
                from: 0,
                to: 1,
                start: right,
                end: axis,
            },
            Piece {
                from: 1,
                to: 2,
                start: axis,
                end: left,
            },
        ],
        shape: Shape::Circle,
        radius,
        h,
    };
    layout
        .build()
        .expect("circular ring meshes are valid by construction")
}

/// Box `[-R, R]^2` around the apex with both wedge rays as interface.
pub(super) fn delta_box(angle: f64, radius: f64, h: f64) -> Result<Parts, GeometryError> {
    let half = 0.5 * angle;
    let (a, b) = (FRAC_PI_2 - half, FRAC_PI_2 + half);
    let layout = Layout {
        rays: vec![
            Ray {
                theta: a,
                tag: Some(BoundaryTag::Interface),
            },
            Ray {
                theta: b,
                tag: Some(BoundaryTag::Interface),
            },
        ],
        pieces: vec![
            Piece {
                from: 0,
                to: 1,
                start: a,
                end: b,
            },
            Piece {
                from: 1,
                to: 0,
                start: b,
                end: a + 2.0 * PI,
            },
        ],
        shape: Shape::Square,
        radius,
        h,
    };
    layout.build()
}

/// Ring radii: `0` (apex), a geometric sequence with ratio
/// [`GRADING_RATIO`] while the spacing is below `max_spacing`, then uniform
/// spacing up to `outer`.
fn ring_radii(outer: f64, max_spacing: f64) -> Vec<f64> {
    let mut r = (APEX_FRACTION * max_spacing).min(0.25 * outer);
    let mut radii = vec![0.0, r];
    while (GRADING_RATIO - 1.0) * r <= max_spacing && GRADING_RATIO * r < outer {
        r *= GRADING_RATIO;
        radii.push(r);
    }
    let spacing = |radii: &[f64]| {
        let n = radii.len();
        radii[n - 1] - radii[n - 2]
    };
    while radii.len() > 2 && outer - r < 0.5 * spacing(&radii) {
        radii.pop();
        r = *radii.last().unwrap();
    }
    let rem = outer - r;
    let n = ((rem / max_spacing) - 1e-9).ceil().max(1.0) as usize;
    for k in 1..n {
        radii.push(r + rem * k as f64 / n as f64);
    }
    radii.push(outer);
    radii
}

fn direction(theta: f64) -> (f64, f64) {
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    (snap(theta.cos()), snap(theta.sin()))
}

/// Point at angle `theta` on the circle or square of radius `r`.
fn ring_point(r: f64, square: bool, theta: f64) -> Point {
    let (c, s) = direction(theta);
    if square {
        let m = c.abs().max(s.abs());
        [r * (c / m), r * (s / m)]
    } else {
        [r * c, r * s]
    }
}

struct RingPoint {
    id: usize,
    theta: f64,
}

impl Layout {
    fn max_spacing(&self) -> f64 {
        match self.shape {
            Shape::Circle => SPACING_FACTOR * self.h,
            // corner edges run diagonally between square rings
            Shape::Square => SQUARE_SPACING_FACTOR * self.h,
        }
    }

    fn build(&self) -> Result<Parts, GeometryError> {
        let radii = ring_radii(self.radius, self.max_spacing());
        let last = radii.len() - 1;
        let mut vertices: Vec<Point> = vec![[0.0, 0.0]];
        let mut ray_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut triangles = Vec::new();
        let mut tagged_edges = Vec::new();

        for piece in &self.pieces {
            let mut inner: Vec<RingPoint> = vec![RingPoint {
                id: 0,
                theta: piece.start,
            }];
            for k in 1..=last {
                let outer =
                    self.ring(piece, k, &radii, &mut vertices, &mut ray_ids)?;
                if k == 1 {
                    for w in outer.windows(2) {
                        triangles.push([0, w[0].id, w[1].id]);
                    }
                } else {
                    zipper(&inner, &outer, &vertices, &mut triangles)?;
                }
                if k == last {
                    for w in outer.windows(2) {
                        tagged_edges.push(TaggedEdge {
                            vertices: [w[0].id, w[1].id],
                            tag: BoundaryTag::ArtificialDirichlet,
                        });
                    }
                }
                inner = outer;
            }
        }

        for (index, ray) in self.rays.iter().enumerate() {
            if let Some(tag) = ray.tag {
                let mut prev = 0;
                for k in 1..=last {
                    let id = ray_ids[&(index, k)];
                    tagged_edges.push(TaggedEdge {
                        vertices: [prev, id],
                        tag,
                    });
                    prev = id;
                }
            }
        }
        Ok((vertices, triangles, tagged_edges))
    }

    /// Points of ring `k` inside `piece`, ordered by angle, endpoints on the rays.
    fn ring(
        &self,
        piece: &Piece,
        k: usize,
        radii: &[f64],
        vertices: &mut Vec<Point>,
        ray_ids: &mut HashMap<(usize, usize), usize>,
    ) -> Result<Vec<RingPoint>, GeometryError> {
        let r = radii[k];
        let square = self.shape == Shape::Square;
        // the apex fan gets wider sectors than the graded rings
        let fraction = if k == 1 { 0.9 } else { GRADING_RATIO - 1.0 };
        let target = (fraction * r).min(self.max_spacing());

        let mut ray_point = |ray: usize, vertices: &mut Vec<Point>| -> usize {
            *ray_ids.entry((ray, k)).or_insert_with(|| {
                let mut p = ring_point(r, square, self.rays[ray].theta);
                if square {
                    if let Some(c) = nearest_corner(p, r) {
                        if dist(p, c) <= 1e-12 * r {
                            p = c;
                        }
                    }
                }
                vertices.push(p);
                vertices.len() - 1
            })
        };
        let first = ray_point(piece.from, vertices);
        let last = ray_point(piece.to, vertices);

        // breakpoints: rays, plus the corners of square rings
        let mut breaks: Vec<(f64, Option<usize>)> = vec![(piece.start, Some(first))];
        if square {
            let mut corner = FRAC_PI_4 + (((piece.start - FRAC_PI_4) / FRAC_PI_2).floor()) * FRAC_PI_2;
            while corner < piece.end {
                if corner > piece.start {
                    let (c, s) = direction(corner);
                    let cp = [r * c.signum(), r * s.signum()];
                    // a corner close in angle to a ray is left out on every
                    // ring; the ring then cuts across it by less than half a
                    // segment, which keeps the truncation conforming
                    if (corner - piece.start).min(piece.end - corner) >= CORNER_SEPARATION {
                        vertices.push(cp);
                        breaks.push((corner, Some(vertices.len() - 1)));
                    }
                }
                corner += FRAC_PI_2;
            }
        }
        breaks.push((piece.end, Some(last)));

        let mut points = Vec::new();
        for (i, w) in breaks.windows(2).enumerate() {
            let (a, ida) = w[0];
            let (b, _) = w[1];
            if i == 0 {
                points.push(RingPoint {
                    id: ida.unwrap(),
                    theta: a,
                });
            }
            // finer segments where the ring cuts across a left-out corner
            let cuts_corner = square && {
                let next = FRAC_PI_4 + ((a - FRAC_PI_4) / FRAC_PI_2).floor() * FRAC_PI_2 + FRAC_PI_2;
                next < b
            };
            let step = if cuts_corner { CUT_CORNER_FACTOR * target } else { target };
            for theta in subdivide(r, square, a, b, step) {
                vertices.push(ring_point(r, square, theta));
                points.push(RingPoint {
                    id: vertices.len() - 1,
                    theta,
                });
            }
            points.push(RingPoint {
                id: w[1].1.unwrap(),
                theta: b,
            });
        }
        Ok(points)
    }
}

fn nearest_corner(p: Point, r: f64) -> Option<Point> {
    let c = [r * p[0].signum(), r * p[1].signum()];
    (p[0] != 0.0 && p[1] != 0.0).then_some(c)
}

/// Interior angles splitting the ring arc `[a, b]` into near-equal lengths
/// no longer than `target`.
fn subdivide(r: f64, square: bool, a: f64, b: f64, target: f64) -> Vec<f64> {
    const SAMPLES: usize = 64;
    if !square {
        let n = ((r * (b - a) / target) - 1e-9).ceil().max(1.0) as usize;
        return (1..n).map(|j| a + (b - a) * j as f64 / n as f64).collect();
    }
    let thetas: Vec<f64> = (0..=SAMPLES)
        .map(|j| a + (b - a) * j as f64 / SAMPLES as f64)
        .collect();
    let mut cum = vec![0.0];
    for w in thetas.windows(2) {
        let d = dist(ring_point(r, square, w[0]), ring_point(r, square, w[1]));
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let n = ((total / target) - 1e-9).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    let mut seg = 0;
    for j in 1..n {
        let s = total * j as f64 / n as f64;
        while cum[seg + 1] < s {
            seg += 1;
        }
        let f = (s - cum[seg]) / (cum[seg + 1] - cum[seg]);
        out.push(thetas[seg] + f * (thetas[seg + 1] - thetas[seg]));
    }
    out
}

/// Stitches two consecutive rings of one piece, advancing along the ring
/// whose next point has the smaller angle. When the two next angles are
/// close, the candidate triangle with the larger minimum angle is taken.
fn zipper(
    inner: &[RingPoint],
    outer: &[RingPoint],
    vertices: &[Point],
    triangles: &mut Vec<[usize; 3]>,
) -> Result<(), GeometryError> {
    let (mut i, mut j) = (0, 0);
    let quality = |t: [usize; 3]| -> Option<f64> {
        let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
        (cross(p[0], p[1], p[2]) > 0.0).then(|| min_angle(p))
    };
    while i + 1 < inner.len() || j + 1 < outer.len() {
        let advance_inner = (i + 1 < inner.len())
            .then(|| [inner[i].id, outer[j].id, inner[i + 1].id])
            .and_then(|t| quality(t).map(|q| (q, t)));
        let advance_outer = (j + 1 < outer.len())
            .then(|| [inner[i].id, outer[j].id, outer[j + 1].id])
            .and_then(|t| quality(t).map(|q| (q, t)));
        let prefer_inner = match (advance_inner, advance_outer) {
            (Some((qi, _)), Some((qo, _))) => {
                let (a, b) = (inner[i + 1].theta, outer[j + 1].theta);
                let step = (a - inner[i].theta).min(b - outer[j].theta);
                if (a - b).abs() < 0.5 * step {
                    qi >= qo
                } else {
                    a < b
                }
            }
            _ => false,
        };
        match (advance_inner, advance_outer) {
            (Some((_, ti)), Some(_)) if prefer_inner => {
                triangles.push(ti);
                i += 1;
            }
            (_, Some((_, to))) => {
                triangles.push(to);
                j += 1;
            }
            (Some((_, ti)), None) => {
                triangles.push(ti);
                i += 1;
            }
            (None, None) => {
                return Err(GeometryError::Triangulation(format!(
                    "ring stitching failed near vertex {}",
                    inner[i].id
                )))
            }
        }
    }
    Ok(())
}

/// Smallest interior angle of a triangle, via the law of cosines.
fn min_angle(p: [Point; 3]) -> f64 {
    let l = [dist(p[1], p[2]), dist(p[2], p[0]), dist(p[0], p[1])];
    (0..3)
        .map(|k| {
            let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
            ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0).acos()
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_are_graded_then_uniform() {
        let radii = ring_radii(8.0, 0.095);
        assert_eq!(radii[0], 0.0);
        assert_eq!(*radii.last().unwrap(), 8.0);
        let gaps: Vec<f64> = radii.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(gaps.iter().all(|&g| g > 0.0 && g <= 0.095 + 1e-12));
        assert!((radii[3] / radii[2] - GRADING_RATIO).abs() < 1e-12);
    }

    #[test]
    fn small_radius() {
        let radii = ring_radii(1.0, 0.95);
        assert_eq!(*radii.last().unwrap(), 1.0);
        assert!(radii.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn square_ring_points_are_on_the_box() {
        for theta in [0.1, 0.9, 2.0, 3.0, 4.4, 6.0] {
            let p = ring_point(3.0, true, theta);
            assert!((p[0].abs().max(p[1].abs()) - 3.0).abs() < 1e-15);
        }
    }
}

//! Structured tensor-product meshes for rectangles and their exterior.

use std::collections::HashMap;

use super::{edge_key, BoundaryTag, GeometryError, Point, TaggedEdge};

type Parts = (Vec<Point>, Vec<[usize; 3]>, Vec<TaggedEdge>);

/// Subdivides consecutive breakpoints into pieces no longer than `h`.
/// Breakpoints themselves are reproduced exactly.
fn lines(breaks: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let (u, v) = (w[0], w[1]);
        let n = (((v - u) / h) - 1e-9).ceil().max(1.0) as usize;
        for k in 1..n {
            out.push(u + (v - u) * k as f64 / n as f64);
        }
        out.push(v);
    }
    out
}

struct Grid {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
}

/// Keeps the cells whose centre satisfies `keep`, two triangles per cell.
fn tensor(xs: &[f64], ys: &[f64], keep: impl Fn(f64, f64) -> bool) -> Grid {
    let nx = xs.len();
    let mut index = vec![usize::MAX; xs.len() * ys.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut id = |i: usize, j: usize, vertices: &mut Vec<Point>| -> usize {
        let slot = &mut index[j * nx + i];
        if *slot == usize::MAX {
            *slot = vertices.len();
            vertices.push([xs[i], ys[j]]);
        }
        *slot
    };
    for j in 0..ys.len() - 1 {
        for i in 0..nx - 1 {
            let cx = 0.5 * (xs[i] + xs[i + 1]);
            let cy = 0.5 * (ys[j] + ys[j + 1]);
            if !keep(cx, cy) {
                continue;
            }
            let p00 = id(i, j, &mut vertices);
            let p10 = id(i + 1, j, &mut vertices);
            let p11 = id(i + 1, j + 1, &mut vertices);
            let p01 = id(i, j + 1, &mut vertices);
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }
    Grid {
        vertices,
        triangles,
    }
}

/// Tags edges by `classify(p, q, on_one_triangle)`.
fn tag_edges(
    grid: &Grid,
    classify: impl Fn(Point, Point, bool) -> Option<BoundaryTag>,
) -> Vec<TaggedEdge> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &grid.triangles {
        for i in 0..3 {
            *count.entry(edge_key(t[i], t[(i + 1) % 3])).or_default() += 1;
        }
    }
    let mut keys: Vec<_> = count.into_iter().collect();
    keys.sort_unstable();
    keys.into_iter()
        .filter_map(|((a, b), n)| {
            classify(grid.vertices[a], grid.vertices[b], n == 1).map(|tag| TaggedEdge {
                vertices: [a, b],
                tag,
            })
        })
        .collect()
}

fn on_rectangle_perimeter(p: Point, q: Point, a: f64, b: f64) -> bool {
    let vertical = p[0] == q[0] && (p[0] == 0.0 || p[0] == a);
    let horizontal = p[1] == q[1] && (p[1] == 0.0 || p[1] == b);
    let inside_x = |x: f64| (0.0..=a).contains(&x);
    let inside_y = |y: f64| (0.0..=b).contains(&y);
    (vertical && inside_y(p[1]) && inside_y(q[1])) || (horizontal && inside_x(p[0]) && inside_x(q[0]))
}

pub(super) fn rectangle(a: f64, b: f64, h: f64) -> Parts {
    let grid = tensor(&lines(&[0.0, a], h), &lines(&[0.0, b], h), |_, _| true);
    let edges = tag_edges(&grid, |_, _, boundary| boundary.then_some(BoundaryTag::Robin));
    (grid.vertices, grid.triangles, edges)
}

fn box_lines(a: f64, b: f64, radius: f64, h: f64) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let required = 0.5 * a.max(b);
    if radius <= required {
        return Err(GeometryError::TruncationTooSmall { radius, required });
    }
    let (cx, cy) = (0.5 * a, 0.5 * b);
    Ok((
        lines(&[cx - radius, 0.0, a, cx + radius], h),
        lines(&[cy - radius, 0.0, b, cy + radius], h),
    ))
}

/// Box `[c - R, c + R]^2` around the rectangle centre with the rectangle removed.
pub(super) fn rectangle_complement(
    a: f64,
    b: f64,
    radius: f64,
    h: f64,
) -> Result<Parts, GeometryError> {
    let (xs, ys) = box_lines(a, b, radius, h)?;
    let grid = tensor(&xs, &ys, |x, y| !(x > 0.0 && x < a && y > 0.0 && y < b));
    let edges = tag_edges(&grid, |p, q, boundary| {
        if !boundary {
            None
        } else if on_rectangle_perimeter(p, q, a, b) {
            Some(BoundaryTag::Robin)
        } else {
            Some(BoundaryTag::ArtificialDirichlet)
        }
    });
    Ok((grid.vertices, grid.triangles, edges))
}

/// Full box with the rectangle perimeter as an interface.
pub(super) fn rectangle_delta(
    a: f64,
    b: f64,
    radius: f64,
    h: f64,
) -> Result<Parts, GeometryError> {
    let (xs, ys) = box_lines(a, b, radius, h)?;
    let grid = tensor(&xs, &ys, |_, _| true);
    let edges = tag_edges(&grid, |p, q, boundary| {
        if boundary {
            Some(BoundaryTag::ArtificialDirichlet)
        } else if on_rectangle_perimeter(p, q, a, b) {
            Some(BoundaryTag::Interface)
        } else {
            None
        }
    });
    Ok((grid.vertices, grid.triangles, edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakpoints_are_exact() {
        let xs = lines(&[-3.7, 0.0, 1.3, 4.2], 0.4);
        assert!(xs.contains(&0.0) && xs.contains(&1.3));
        assert_eq!(*xs.last().unwrap(), 4.2);
        assert!(xs.windows(2).all(|w| w[1] - w[0] <= 0.4 + 1e-12));
    }

    #[test]
    fn complement_tags() {
        let (v, t, e) = rectangle_complement(1.0, 2.0, 3.0, 0.25).unwrap();
        assert!(!v.is_empty() && !t.is_empty());
        let robin: f64 = e
            .iter()
            .filter(|e| e.tag == BoundaryTag::Robin)
            .map(|e| super::super::dist(v[e.vertices[0]], v[e.vertices[1]]))
            .sum();
        assert!((robin - 6.0).abs() < 1e-12);
    }

    #[test]
    fn box_must_enclose_rectangle() {
        assert!(matches!(
            rectangle_delta(4.0, 1.0, 1.5, 0.5),
            Err(GeometryError::TruncationTooSmall { .. })
        ));
    }
}

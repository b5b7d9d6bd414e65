use robust::{incircle, orient2d, Coord};

use crate::geom::Point2;

const NONE: usize = usize::MAX;

#[inline]
fn c(p: Point2) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

struct Tri {
    v: [usize; 3],
    /// `n[i]` is the neighbour across the edge opposite `v[i]`.
    n: [usize; 3],
    alive: bool,
}

/// Incremental Bowyer-Watson triangulation with a bounding super-triangle
/// and exact orientation/in-circle predicates.
struct Builder {
    pts: Vec<Point2>,
    tris: Vec<Tri>,
    free: Vec<usize>,
    last: usize,
}

impl Builder {
    fn new(points: &[Point2]) -> Self {
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
        let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let r = span * 1.0e4;
        let mut pts = points.to_vec();
        pts.push([mid[0] - 2.0 * r, mid[1] - r]);
        pts.push([mid[0] + 2.0 * r, mid[1] - r]);
        pts.push([mid[0], mid[1] + 2.0 * r]);
        let n = points.len();
        let mut b = Builder {
            pts,
            tris: Vec::with_capacity(2 * n + 8),
            free: Vec::new(),
            last: 0,
        };
        b.tris.push(Tri {
            v: b.ccw([n, n + 1, n + 2]),
            n: [NONE; 3],
            alive: true,
        });
        b
    }

    fn ccw(&self, v: [usize; 3]) -> [usize; 3] {
        if orient2d(c(self.pts[v[0]]), c(self.pts[v[1]]), c(self.pts[v[2]])) < 0.0 {
            [v[0], v[2], v[1]]
        } else {
            v
        }
    }

    fn in_circle(&self, t: usize, p: Point2) -> bool {
        let v = self.tris[t].v;
        incircle(c(self.pts[v[0]]), c(self.pts[v[1]]), c(self.pts[v[2]]), c(p)) > 0.0
    }

    /// Visibility walk from the last touched triangle.
    fn locate(&self, p: Point2) -> usize {
        let mut t = self.last;
        let mut steps = 0usize;
        'walk: loop {
            steps += 1;
            if steps > self.tris.len() + 16 {
                break;
            }
            let tri = &self.tris[t];
            for k in 0..3 {
                let i = (k + steps) % 3;
                let a = self.pts[tri.v[(i + 1) % 3]];
                let b = self.pts[tri.v[(i + 2) % 3]];
                if orient2d(c(a), c(b), c(p)) < 0.0 && tri.n[i] != NONE {
                    t = tri.n[i];
                    continue 'walk;
                }
            }
            return t;
        }
        // Fallback linear scan.
        (0..self.tris.len())
            .find(|&t| {
                let tri = &self.tris[t];
                tri.alive
                    && (0..3).all(|i| {
                        let a = self.pts[tri.v[(i + 1) % 3]];
                        let b = self.pts[tri.v[(i + 2) % 3]];
                        orient2d(c(a), c(b), c(p)) >= 0.0
                    })
            })
            .unwrap_or(self.last)
    }

    fn alloc(&mut self, tri: Tri) -> usize {
        match self.free.pop() {
            Some(i) => {
                self.tris[i] = tri;
                i
            }
            None => {
                self.tris.push(tri);
                self.tris.len() - 1
            }
        }
    }

    fn insert(&mut self, pi: usize) {
        let p = self.pts[pi];
        let start = self.locate(p);
        if self.tris[start].v.iter().any(|&v| self.pts[v] == p) {
            return;
        }

        let mut cavity = vec![start];
        let mut in_cavity = std::collections::HashSet::new();
        in_cavity.insert(start);
        let mut head = 0;
        // Boundary edges (a, b, outside neighbour), CCW as seen from the cavity.
        let mut edges: Vec<(usize, usize, usize)> = Vec::new();
        while head < cavity.len() {
            let t = cavity[head];
            head += 1;
            for i in 0..3 {
                let nb = self.tris[t].n[i];
                let a = self.tris[t].v[(i + 1) % 3];
                let b = self.tris[t].v[(i + 2) % 3];
                if nb != NONE && in_cavity.contains(&nb) {
                    continue;
                }
                if nb != NONE && self.in_circle(nb, p) {
                    in_cavity.insert(nb);
                    cavity.push(nb);
                } else {
                    edges.push((a, b, nb));
                }
            }
        }
        // A neighbour first classified as outside may have joined later.
        edges.retain(|&(_, _, nb)| nb == NONE || !in_cavity.contains(&nb));

        for &t in &cavity {
            self.tris[t].alive = false;
            self.free.push(t);
        }
        let mut created = Vec::with_capacity(edges.len());
        for &(a, b, nb) in &edges {
            let t = self.alloc(Tri {
                v: [a, b, pi],
                n: [NONE, NONE, nb],
                alive: true,
            });
            if nb != NONE {
                let nt = &mut self.tris[nb];
                for k in 0..3 {
                    let (x, y) = (nt.v[(k + 1) % 3], nt.v[(k + 2) % 3]);
                    if x == b && y == a {
                        nt.n[k] = t;
                    }
                }
            }
            created.push((a, b, t));
        }
        // Link the fan: edge (b, p) of (a, b, p) borders the triangle starting at b.
        let by_start: std::collections::HashMap<usize, usize> =
            created.iter().map(|&(a, _, t)| (a, t)).collect();
        let by_end: std::collections::HashMap<usize, usize> =
            created.iter().map(|&(_, b, t)| (b, t)).collect();
        for &(a, b, t) in &created {
            self.tris[t].n[0] = by_start.get(&b).copied().unwrap_or(NONE);
            self.tris[t].n[1] = by_end.get(&a).copied().unwrap_or(NONE);
        }
        self.last = created.first().map_or(self.last, |&(_, _, t)| t);
    }
}

/// Hilbert-curve index on a 2^16 grid, used as an insertion order.
fn hilbert_d(mut x: u32, mut y: u32) -> u64 {
    let n: u32 = 1 << 16;
    let mut d: u64 = 0;
    let mut s = n / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += s as u64 * s as u64 * ((3 * rx) ^ ry) as u64;
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

/// Delaunay triangulation of `points`. Triangles are index triples in
/// counter-clockwise order (positive `orient2d`). Fewer than three points or
/// an all-collinear set yield no triangles.
pub fn delaunay(points: &[Point2]) -> Vec<[usize; 3]> {
    if points.len() < 3 {
        return Vec::new();
    }
    let mut b = Builder::new(points);

    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let scale = |v: f64, k: usize| {
        let span = (hi[k] - lo[k]).max(f64::MIN_POSITIVE);
        (((v - lo[k]) / span) * 65535.0).round() as u32
    };
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| hilbert_d(scale(points[i][0], 0), scale(points[i][1], 1)));
    for i in order {
        b.insert(i);
    }

    let n = points.len();
    b.tris
        .iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .filter(|t| orient2d(c(points[t.v[0]]), c(points[t.v[1]]), c(points[t.v[2]])) > 0.0)
        .map(|t| t.v)
        .collect()
}

#[cfg(test)]
fn circumcircle_violations(points: &[Point2], tris: &[[usize; 3]], slack: f64) -> usize {
    // Plain floating-point circumcentre check, independent of the predicates.
    let mut bad = 0;
    for t in tris {
        let [a, b, cc] = [points[t[0]], points[t[1]], points[t[2]]];
        let d = 2.0 * (a[0] * (b[1] - cc[1]) + b[0] * (cc[1] - a[1]) + cc[0] * (a[1] - b[1]));
        let sq = |p: Point2| p[0] * p[0] + p[1] * p[1];
        let ux = (sq(a) * (b[1] - cc[1]) + sq(b) * (cc[1] - a[1]) + sq(cc) * (a[1] - b[1])) / d;
        let uy = (sq(a) * (cc[0] - b[0]) + sq(b) * (a[0] - cc[0]) + sq(cc) * (b[0] - a[0])) / d;
        let r = ((a[0] - ux).powi(2) + (a[1] - uy).powi(2)).sqrt();
        for (i, p) in points.iter().enumerate() {
            if t.contains(&i) {
                continue;
            }
            let dist = ((p[0] - ux).powi(2) + (p[1] - uy).powi(2)).sqrt();
            if dist < r - slack * r.max(1.0) {
                bad += 1;
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_inputs() {
        assert!(delaunay(&[]).is_empty());
        assert!(delaunay(&[[0.0, 0.0], [1.0, 1.0]]).is_empty());
        assert!(delaunay(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0]]).is_empty());
    }

    #[test]
    fn three_points_one_triangle() {
        let t = delaunay(&[[0.0, 0.0], [4.0, 0.0], [1.0, 3.0]]);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn convex_quad_two_triangles_with_delaunay_diagonal() {
        let pts = [[0.0, 0.0], [10.0, 0.0], [11.0, 3.0], [0.0, 2.0]];
        let t = delaunay(&pts);
        assert_eq!(t.len(), 2);
        assert_eq!(circumcircle_violations(&pts, &t, 1e-9), 0);
    }

    #[test]
    fn random_sets_have_empty_circumcircles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pts: Vec<Point2> = (0..200)
                .map(|_| [rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)])
                .collect();
            let t = delaunay(&pts);
            assert!(t.len() > 300);
            assert_eq!(circumcircle_violations(&pts, &t, 1e-9), 0);
        }
    }

    #[test]
    fn integer_grid_is_fully_triangulated() {
        let mut pts = Vec::new();
        for y in 0..12 {
            for x in 0..15 {
                pts.push([x as f64, y as f64]);
            }
        }
        let t = delaunay(&pts);
        assert_eq!(t.len(), 2 * 14 * 11);
        assert_eq!(circumcircle_violations(&pts, &t, 1e-9), 0);
    }

    #[test]
    fn euler_count_for_random_points() {
        // With h hull vertices a full triangulation has 2n - h - 2 triangles.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point2> = (0..500)
            .map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)])
            .collect();
        let hull = crate::geom::convex_hull(&pts).len();
        assert_eq!(delaunay(&pts).len(), 2 * pts.len() - hull - 2);
    }
}

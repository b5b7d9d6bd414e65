use crate::model::SegmentMask;

/// Pixel coordinate `[x, y]`.
pub type Pixel = [u32; 2];

const N4: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
const N8: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Foreground pixel with at least one 4-neighbour in the background.
/// Pixels outside the image count as background.
pub fn is_boundary(mask: &SegmentMask, x: u32, y: u32) -> bool {
    mask.get(x, y)
        && N4
            .iter()
            .any(|(dx, dy)| !mask.get_i(x as i64 + dx, y as i64 + dy))
}

/// Groups boundary pixels into 8-connected contours, each ordered by a
/// neighbour walk that starts at its top-left pixel.
pub fn trace_boundary(mask: &SegmentMask) -> Vec<Vec<Pixel>> {
    let (w, h) = (mask.width, mask.height);
    let idx = |x: u32, y: u32| (y * w + x) as usize;
    let mut boundary = vec![false; mask.bits.len()];
    for y in 0..h {
        for x in 0..w {
            boundary[idx(x, y)] = is_boundary(mask, x, y);
        }
    }
    let on = |b: &[bool], x: i64, y: i64| {
        x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && b[(y as u32 * w + x as u32) as usize]
    };

    let mut seen = vec![false; mask.bits.len()];
    let mut contours = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !boundary[idx(x, y)] || seen[idx(x, y)] {
                continue;
            }
            // Collect the component.
            let mut comp = vec![[x, y]];
            seen[idx(x, y)] = true;
            let mut head = 0;
            while head < comp.len() {
                let [cx, cy] = comp[head];
                head += 1;
                for (dx, dy) in N8 {
                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                    if on(&boundary, nx, ny) && !seen[idx(nx as u32, ny as u32)] {
                        seen[idx(nx as u32, ny as u32)] = true;
                        comp.push([nx as u32, ny as u32]);
                    }
                }
            }
            contours.push(order_walk(&comp, w, h));
        }
    }
    contours
}

fn order_walk(comp: &[Pixel], w: u32, h: u32) -> Vec<Pixel> {
    use std::collections::HashMap;
    let slot: HashMap<Pixel, usize> = comp.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut used = vec![false; comp.len()];
    let mut out = Vec::with_capacity(comp.len());
    let mut cur = 0;
    loop {
        used[cur] = true;
        out.push(comp[cur]);
        if out.len() == comp.len() {
            break;
        }
        let [cx, cy] = comp[cur];
        let step = |dirs: &[(i64, i64)], used: &[bool]| {
            dirs.iter().find_map(|(dx, dy)| {
                let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    return None;
                }
                slot.get(&[nx as u32, ny as u32])
                    .copied()
                    .filter(|&i| !used[i])
            })
        };
        cur = match step(&N4, &used).or_else(|| step(&N8, &used)) {
            Some(i) => i,
            None => {
                // Dead end: jump to the nearest unvisited pixel.
                let d2 = |p: &Pixel| {
                    let dx = p[0] as i64 - cx as i64;
                    let dy = p[1] as i64 - cy as i64;
                    dx * dx + dy * dy
                };
                (0..comp.len())
                    .filter(|&i| !used[i])
                    .min_by_key(|&i| d2(&comp[i]))
                    .expect("unvisited pixel remains")
            }
        };
    }
    out
}

/// Contour pixels followed by the non-contour foreground pixels lying on the
/// `stride` grid (both row and column divisible by `stride`).
pub fn subsample_interior(mask: &SegmentMask, stride: u32, contours: &[Vec<Pixel>]) -> Vec<Pixel> {
    let stride = stride.max(1);
    let mut on_contour = vec![false; mask.bits.len()];
    let mut out = Vec::new();
    for p in contours.iter().flatten() {
        let i = (p[1] * mask.width + p[0]) as usize;
        if !on_contour[i] {
            on_contour[i] = true;
            out.push(*p);
        }
    }
    for y in (0..mask.height).step_by(stride as usize) {
        for x in (0..mask.width).step_by(stride as usize) {
            let i = (y * mask.width + x) as usize;
            if mask.bits[i] && !on_contour[i] {
                out.push([x, y]);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(w: u32, h: u32, x0: u32, y0: u32, side: u32) -> SegmentMask {
        let mut m = SegmentMask::new(w, h);
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                m.set(x, y, true);
            }
        }
        m
    }

    fn adjacent(a: Pixel, b: Pixel) -> bool {
        let dx = (a[0] as i64 - b[0] as i64).abs();
        let dy = (a[1] as i64 - b[1] as i64).abs();
        dx <= 1 && dy <= 1 && (dx, dy) != (0, 0)
    }

    #[test]
    fn empty_mask_has_no_contours() {
        assert!(trace_boundary(&SegmentMask::new(20, 20)).is_empty());
    }

    #[test]
    fn square_contour_is_a_closed_loop() {
        let m = square(20, 20, 5, 5, 10);
        let c = trace_boundary(&m);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 36);
        for i in 0..c[0].len() {
            assert!(adjacent(c[0][i], c[0][(i + 1) % c[0].len()]));
        }
    }

    #[test]
    fn square_touching_image_edge() {
        let m = square(64, 64, 0, 0, 64);
        let c = trace_boundary(&m);
        assert_eq!(c.iter().map(Vec::len).sum::<usize>(), 252);
    }

    #[test]
    fn ring_gives_two_contours() {
        let mut m = square(30, 30, 5, 5, 20);
        for y in 12..18 {
            for x in 12..18 {
                m.set(x, y, false);
            }
        }
        let c = trace_boundary(&m);
        assert_eq!(c.len(), 2);
        let total: usize = c.iter().map(Vec::len).sum();
        assert_eq!(total, 76 + 24);
    }

    #[test]
    fn stride_one_keeps_every_pixel() {
        let m = square(40, 40, 3, 7, 17);
        let pts = subsample_interior(&m, 1, &trace_boundary(&m));
        assert_eq!(pts.len(), m.count());
    }

    #[test]
    fn stride_32_square_count_matches_enumeration() {
        let m = square(64, 64, 0, 0, 64);
        let c = trace_boundary(&m);
        let pts = subsample_interior(&m, 32, &c);
        let mut expected = 0;
        for y in 0..64u32 {
            for x in 0..64u32 {
                let edge = x == 0 || y == 0 || x == 63 || y == 63;
                if edge || (x % 32 == 0 && y % 32 == 0) {
                    expected += 1;
                }
            }
        }
        assert_eq!(pts.len(), expected);
        assert_eq!(pts.len(), 253);
    }
}

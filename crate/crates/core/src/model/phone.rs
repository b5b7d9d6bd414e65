use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::geom::{self, Homography, Point2};
use crate::{Error, Result};

/// Cells per marker side: a one-cell solid border around a 4×4 bit grid.
pub const MARKER_GRID: usize = 6;
const BITS_SIDE: usize = MARKER_GRID - 2;

/// One fiducial on the phone screen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MarkerSpec {
    pub marker_id: u32,
    /// Phone-frame corners (metres, z = 0), ordered top-left, top-right,
    /// bottom-right, bottom-left.
    pub corners: [Point2; 4],
    /// Row-major 4×4 interior bit pattern, MSB = top-left cell. A set bit is
    /// drawn in marker ink.
    pub bit_pattern: u16,
}

impl MarkerSpec {
    /// Maps phone-frame coordinates into marker cell coordinates in
    /// `[0, MARKER_GRID]²`, x toward the top-right corner, y toward bottom-left.
    pub fn cell_map(&self) -> Homography {
        let g = MARKER_GRID as f64;
        let cells = [[0.0, 0.0], [g, 0.0], [g, g], [0.0, g]];
        Homography::estimate(&self.corners, &cells).expect("validated convex marker quad")
    }

    /// Whether the cell at (`col`, `row`) is inked.
    pub fn cell_is_ink(&self, col: usize, row: usize) -> bool {
        if col == 0 || row == 0 || col == MARKER_GRID - 1 || row == MARKER_GRID - 1 {
            return true;
        }
        bit_at(self.bit_pattern, col - 1, row - 1)
    }
}

#[inline]
pub(crate) fn bit_at(code: u16, col: usize, row: usize) -> bool {
    let i = row * BITS_SIDE + col;
    (code >> (15 - i)) & 1 == 1
}

/// Rotates a 4×4 bit pattern by 90° clockwise.
pub(crate) fn rotate_code(code: u16) -> u16 {
    let mut out = 0u16;
    for row in 0..BITS_SIDE {
        for col in 0..BITS_SIDE {
            if bit_at(code, col, row) {
                // (col, row) -> (n-1-row, col)
                let nc = BITS_SIDE - 1 - row;
                let nr = col;
                out |= 1 << (15 - (nr * BITS_SIDE + nc));
            }
        }
    }
    out
}

/// Deterministic family of rotation-distinguishable 4×4 codes.
pub struct MarkerDictionary;

impl MarkerDictionary {
    pub const MIN_DISTANCE: u32 = 4;

    /// First `n` codes of a greedy search: each code differs from every
    /// rotation of every other code (and from its own non-trivial rotations)
    /// in at least `MIN_DISTANCE` bits.
    pub fn generate(n: usize) -> Vec<u16> {
        let mut codes: Vec<u16> = Vec::with_capacity(n);
        let mut k: u32 = 0;
        while codes.len() < n && k < 1 << 16 {
            // Odd multiplier scrambles the visiting order over all 16-bit codes.
            let c = (k.wrapping_mul(40503) & 0xFFFF) as u16;
            k += 1;
            let ones = c.count_ones();
            if !(6..=10).contains(&ones) {
                continue;
            }
            let rots = rotations(c);
            if rots[1..]
                .iter()
                .any(|r| (r ^ c).count_ones() < Self::MIN_DISTANCE)
            {
                continue;
            }
            let far = codes.iter().all(|&other| {
                rotations(other)
                    .iter()
                    .all(|r| (r ^ c).count_ones() >= Self::MIN_DISTANCE)
            });
            if far {
                codes.push(c);
            }
        }
        codes
    }
}

pub fn rotations(c: u16) -> [u16; 4] {
    let r1 = rotate_code(c);
    let r2 = rotate_code(r1);
    let r3 = rotate_code(r2);
    [c, r1, r2, r3]
}

/// Physical phone screen and the marker array drawn on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhoneGeometry {
    pub screen_width: f64,
    pub screen_height: f64,
    pub marker_layout: Vec<MarkerSpec>,
}

impl Default for PhoneGeometry {
    fn default() -> Self {
        PhoneGeometry::grid_layout(0.07, 0.14, 2, 4, 0.025)
    }
}

impl PhoneGeometry {
    /// `cols × rows` grid of square markers of side `marker_size`, each
    /// centred in its cell of the screen.
    pub fn grid_layout(width: f64, height: f64, cols: usize, rows: usize, marker_size: f64) -> Self {
        let codes = MarkerDictionary::generate(cols * rows);
        let cw = width / cols as f64;
        let ch = height / rows as f64;
        let h = marker_size / 2.0;
        let mut markers = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                let id = (r * cols + c) as u32;
                let x = -width / 2.0 + (c as f64 + 0.5) * cw;
                // Row 0 at the top of the screen (largest y).
                let y = height / 2.0 - (r as f64 + 0.5) * ch;
                markers.push(MarkerSpec {
                    marker_id: id,
                    corners: [[x - h, y + h], [x + h, y + h], [x + h, y - h], [x - h, y - h]],
                    bit_pattern: codes[id as usize],
                });
            }
        }
        PhoneGeometry {
            screen_width: width,
            screen_height: height,
            marker_layout: markers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.screen_width > 0.0 && self.screen_height > 0.0) {
            return Err(Error::Config("screen dimensions must be positive".into()));
        }
        if self.marker_layout.is_empty() {
            return Err(Error::Config("phone geometry needs at least one marker".into()));
        }
        let mut ids = HashSet::new();
        for m in &self.marker_layout {
            if !ids.insert(m.marker_id) {
                return Err(Error::Config(format!("duplicate marker id {}", m.marker_id)));
            }
            if !geom::is_convex(&m.corners) {
                return Err(Error::Config(format!(
                    "marker {} corners do not form a convex quad",
                    m.marker_id
                )));
            }
        }
        Ok(())
    }

    pub fn marker(&self, id: u32) -> Option<&MarkerSpec> {
        self.marker_layout.iter().find(|m| m.marker_id == id)
    }

    /// Screen rectangle corners in the phone frame, top-left first, clockwise
    /// as seen from the viewer.
    pub fn screen_corners(&self) -> [Point2; 4] {
        let (w, h) = (self.screen_width / 2.0, self.screen_height / 2.0);
        [[-w, h], [w, h], [w, -h], [-w, -h]]
    }

    /// Whether a phone-frame point on the screen plane is inked by a marker.
    pub fn is_marker_ink(&self, p: Point2) -> bool {
        self.ink_lookup().is_ink(p)
    }

    /// Precomputed marker cell maps for repeated ink queries.
    pub fn ink_lookup(&self) -> InkLookup {
        InkLookup {
            markers: self
                .marker_layout
                .iter()
                .map(|m| {
                    let xs = m.corners.iter().map(|c| c[0]);
                    let ys = m.corners.iter().map(|c| c[1]);
                    let bbox = [
                        xs.clone().fold(f64::INFINITY, f64::min),
                        ys.clone().fold(f64::INFINITY, f64::min),
                        xs.fold(f64::NEG_INFINITY, f64::max),
                        ys.fold(f64::NEG_INFINITY, f64::max),
                    ];
                    (m.clone(), m.cell_map(), bbox)
                })
                .collect(),
        }
    }
}

pub struct InkLookup {
    markers: Vec<(MarkerSpec, Homography, [f64; 4])>,
}

impl InkLookup {
    pub fn is_ink(&self, p: Point2) -> bool {
        self.markers.iter().any(|(m, map, bb)| {
            if p[0] < bb[0] || p[0] > bb[2] || p[1] < bb[1] || p[1] > bb[3] {
                return false;
            }
            if !geom::in_convex_polygon(&m.corners, p, 0.0) {
                return false;
            }
            let c = map.apply(p);
            let g = MARKER_GRID as f64;
            let col = c[0].clamp(0.0, g - 1e-9).floor() as usize;
            let row = c[1].clamp(0.0, g - 1e-9).floor() as usize;
            m.cell_is_ink(col, row)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout_is_valid() {
        let g = PhoneGeometry::default();
        g.validate().unwrap();
        assert_eq!(g.marker_layout.len(), 8);
    }

    #[test]
    fn dictionary_codes_are_rotation_distinct() {
        let codes = MarkerDictionary::generate(16);
        assert_eq!(codes.len(), 16);
        for (i, &a) in codes.iter().enumerate() {
            for (j, &b) in codes.iter().enumerate() {
                for (k, r) in rotations(b).iter().enumerate() {
                    if i == j && k == 0 {
                        continue;
                    }
                    assert!((a ^ r).count_ones() >= MarkerDictionary::MIN_DISTANCE);
                }
            }
        }
    }

    #[test]
    fn four_rotations_return_to_start() {
        for c in [0x1234u16, 0xBEEF, 0x8001] {
            assert_eq!(rotate_code(rotate_code(rotate_code(rotate_code(c)))), c);
        }
    }

    #[test]
    fn rejects_duplicate_ids_and_concave_markers() {
        let mut g = PhoneGeometry::default();
        g.marker_layout[1].marker_id = g.marker_layout[0].marker_id;
        assert!(g.validate().is_err());
        let mut g = PhoneGeometry::default();
        g.marker_layout[0].corners[1] = g.marker_layout[0].corners[3];
        assert!(g.validate().is_err());
        let g = PhoneGeometry {
            marker_layout: vec![],
            ..PhoneGeometry::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn marker_border_is_ink() {
        let g = PhoneGeometry::default();
        let m = &g.marker_layout[0];
        let [tl, tr, _, bl] = m.corners;
        let eps = 1e-4;
        let p = [tl[0] + eps, tl[1] - eps];
        assert!(g.is_marker_ink(p));
        let mid_top = [(tl[0] + tr[0]) / 2.0, tl[1] - eps];
        assert!(g.is_marker_ink(mid_top));
        let outside = [bl[0] - 0.002, bl[1]];
        assert!(!g.is_marker_ink(outside));
    }
}

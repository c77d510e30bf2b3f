//! Marching-squares contour extraction and polygon measures.
//!
//! Grid convention: pixel `(x, y)` has its center at integer coordinates
//! `(x, y)`, with `y` growing downward. Each marching-squares cell spans four
//! neighbouring pixel centers. The image is padded with one ring of
//! background so that every contour is closed, including blobs that touch
//! the frame.
//!
//! Segments are oriented so the foreground lies on a fixed side. Outer
//! boundaries therefore come out with positive signed area and hole
//! boundaries with negative signed area.

use std::io::Write;

use crate::error::{Error, Result};
use crate::mask::{Bone, LabelMask};

/// Iso-level applied to the 0/1 class indicator image.
pub const ISO_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Closed polyline. The closing edge from the last vertex back to the first
/// is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    vertices: Vec<Point>,
    hole: bool,
    seed: Option<(u32, u32)>,
}

impl Contour {
    /// Builds a contour from explicit vertices. Requires at least three
    /// vertices and no two consecutive (cyclically) equal ones.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "contour needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let n = vertices.len();
        if (0..n).any(|i| vertices[i] == vertices[(i + 1) % n]) {
            return Err(Error::InvalidArgument(
                "contour has repeated consecutive vertices".into(),
            ));
        }
        Ok(Self {
            vertices,
            hole: false,
            seed: None,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// True when the contour bounds an interior background region.
    pub fn is_hole(&self) -> bool {
        self.hole
    }

    /// A foreground pixel adjacent to the contour, when it came from a mask.
    pub fn seed_pixel(&self) -> Option<(u32, u32)> {
        self.seed
    }

    /// Shoelace sum halved; sign follows vertex orientation.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            acc += p.x * q.y - q.x * p.y;
        }
        acc / 2.0
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Contour {
        Contour {
            vertices: self
                .vertices
                .iter()
                .map(|p| Point::new(p.x + dx, p.y + dy))
                .collect(),
            hole: self.hole,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolygonMeasures {
    pub area: f64,
    pub perimeter: f64,
}

impl PolygonMeasures {
    pub fn of(c: &Contour) -> Self {
        Self {
            area: polygon_area(c),
            perimeter: polygon_perimeter(c),
        }
    }
}

pub fn polygon_area(c: &Contour) -> f64 {
    c.signed_area().abs()
}

pub fn polygon_perimeter(c: &Contour) -> f64 {
    let v = &c.vertices;
    let n = v.len();
    (0..n).map(|i| v[i].distance(v[(i + 1) % n])).sum()
}

/// Maximal-area contour; the earliest one wins ties.
pub fn largest_contour(contours: &[Contour]) -> Result<&Contour> {
    let mut best: Option<(&Contour, f64)> = None;
    for c in contours {
        let area = polygon_area(c);
        match best {
            Some((_, a)) if area <= a => {}
            _ => best = Some((c, area)),
        }
    }
    best.map(|(c, _)| c)
        .ok_or(Error::Empty("largest_contour needs at least one contour"))
}

/// Contours of the `bone` indicator image at [`ISO_LEVEL`], in the order
/// their first crossing edge is met in a raster scan.
pub fn extract_contours(mask: &LabelMask, bone: Bone) -> Vec<Contour> {
    let label = bone.label();
    let w = mask.width() as usize;
    let values: Vec<f64> = mask
        .labels()
        .iter()
        .map(|&v| if v == label { 1.0 } else { 0.0 })
        .collect();
    march(&values, w, mask.height() as usize, ISO_LEVEL)
}

/// Same as [`extract_contours`] with a raw class id, rejecting ids other
/// than femur and tibia.
pub fn extract_contours_for_class(mask: &LabelMask, class_id: u8) -> Result<Vec<Contour>> {
    Ok(extract_contours(mask, Bone::try_from(class_id)?))
}

// Corners of a cell, clockwise on screen from top-left.
const TL: usize = 0;
const TR: usize = 1;
const BR: usize = 2;
const BL: usize = 3;

// Cell sides as corner pairs: top, right, bottom, left.
const SIDES: [(usize, usize); 4] = [(TL, TR), (TR, BR), (BL, BR), (TL, BL)];

// The two sides meeting at each corner.
const CORNER_SIDES: [(usize, usize); 4] = [(0, 3), (0, 1), (1, 2), (2, 3)];

struct Segment {
    from_edge: usize,
    to_edge: usize,
}

/// Marching squares over a row-major scalar field padded with a zero ring.
fn march(values: &[f64], width: usize, height: usize, level: f64) -> Vec<Contour> {
    // Padded corner grid: pixel (x, y) sits at (x + 1, y + 1).
    let pw = width + 2;
    let ph = height + 2;
    let value_at = |px: usize, py: usize| -> f64 {
        if px == 0 || py == 0 || px > width || py > height {
            0.0
        } else {
            values[(py - 1) * width + (px - 1)]
        }
    };
    // Horizontal edge (px,py)-(px+1,py) -> 2*i, vertical (px,py)-(px,py+1) -> 2*i+1.
    let edge_id = |px: usize, py: usize, vertical: bool| 2 * (py * pw + px) + vertical as usize;

    let edge_count = 2 * pw * ph;
    let mut next = vec![usize::MAX; edge_count];
    let mut point = vec![Point::new(0.0, 0.0); edge_count];
    let mut seed = vec![(0u32, 0u32); edge_count];

    for py in 0..ph - 1 {
        for px in 0..pw - 1 {
            let corner_pos = [(px, py), (px + 1, py), (px + 1, py + 1), (px, py + 1)];
            let v = corner_pos.map(|(x, y)| value_at(x, y));
            let fg = v.map(|x| x >= level);
            let mask = fg.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8);
            if mask == 0 || mask == 0b1111 {
                continue;
            }

            let side_ids = [
                edge_id(px, py, false),
                edge_id(px + 1, py, true),
                edge_id(px, py + 1, false),
                edge_id(px, py, true),
            ];
            let crossing = |side: usize| -> (Point, (usize, usize)) {
                let (a, b) = SIDES[side];
                let t = (level - v[a]) / (v[b] - v[a]);
                let (ax, ay) = corner_pos[a];
                let (bx, by) = corner_pos[b];
                let p = Point::new(
                    ax as f64 + t * (bx as f64 - ax as f64) - 1.0,
                    ay as f64 + t * (by as f64 - ay as f64) - 1.0,
                );
                let f = if fg[a] { corner_pos[a] } else { corner_pos[b] };
                (p, f)
            };

            let crossing_sides: Vec<usize> =
                (0..4).filter(|&s| fg[SIDES[s].0] != fg[SIDES[s].1]).collect();
            let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(2);
            if crossing_sides.len() == 2 {
                pairs.push((crossing_sides[0], crossing_sides[1]));
            } else {
                // Saddle: diagonal corners share a class. The cell-center
                // average decides whether the foreground diagonal connects.
                let center = v.iter().sum::<f64>() / 4.0;
                let connect_fg = center >= level;
                for corner in [TL, TR, BR, BL] {
                    if fg[corner] != connect_fg {
                        pairs.push(CORNER_SIDES[corner]);
                    }
                }
            }

            for (s1, s2) in pairs {
                let (p1, f1) = crossing(s1);
                let (p2, _) = crossing(s2);
                let fx = f1.0 as f64 - 1.0 - p1.x;
                let fy = f1.1 as f64 - 1.0 - p1.y;
                let cross = (p2.x - p1.x) * fy - (p2.y - p1.y) * fx;
                let seg = if cross > 0.0 {
                    Segment {
                        from_edge: side_ids[s1],
                        to_edge: side_ids[s2],
                    }
                } else {
                    Segment {
                        from_edge: side_ids[s2],
                        to_edge: side_ids[s1],
                    }
                };
                for (side, e) in [(s1, side_ids[s1]), (s2, side_ids[s2])] {
                    let (p, f) = crossing(side);
                    point[e] = p;
                    seed[e] = ((f.0 - 1) as u32, (f.1 - 1) as u32);
                }
                next[seg.from_edge] = seg.to_edge;
            }
        }
    }

    let mut visited = vec![false; edge_count];
    let mut contours = Vec::new();
    for start in 0..edge_count {
        if next[start] == usize::MAX || visited[start] {
            continue;
        }
        let mut vertices = Vec::new();
        let mut e = start;
        while !visited[e] {
            visited[e] = true;
            let p = point[e];
            if vertices.last() != Some(&p) {
                vertices.push(p);
            }
            e = next[e];
            debug_assert!(e != usize::MAX, "open contour");
        }
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            continue;
        }
        let mut c = Contour {
            vertices,
            hole: false,
            seed: Some(seed[start]),
        };
        c.hole = c.signed_area() < 0.0;
        contours.push(c);
    }
    contours
}

/// Debug dump as `contour_id,vertex_index,x,y`.
pub fn write_contours_csv<W: Write>(contours: &[Contour], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["contour_id", "vertex_index", "x", "y"])?;
    for (ci, c) in contours.iter().enumerate() {
        for (vi, p) in c.vertices.iter().enumerate() {
            w.write_record([ci.to_string(), vi.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))
}

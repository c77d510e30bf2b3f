use std::f64::consts::PI;

use osteomorph_core::geometry::{extract_contours, largest_contour, polygon_area, polygon_perimeter};
use osteomorph_core::morphometry::circularity;
use osteomorph_core::synth::{Shape, SyntheticSpec};
use osteomorph_core::{Bone, LabelMask};
use proptest::prelude::*;

/// Row intervals of a simply connected blob: consecutive rows overlap.
fn blob_rows(max_rows: usize, max_width: u32) -> impl Strategy<Value = Vec<(u32, u32)>> {
    prop::collection::vec((0..max_width, 1..max_width), 1..max_rows).prop_map(move |raw| {
        let mut rows: Vec<(u32, u32)> = Vec::with_capacity(raw.len());
        for (start, len) in raw {
            let mut lo = start;
            let mut hi = (start + len).min(max_width);
            if let Some(&(plo, phi)) = rows.last() {
                // Force overlap with the previous row.
                if hi <= plo {
                    hi = plo + 1;
                }
                if lo >= phi {
                    lo = phi - 1;
                }
            }
            if hi <= lo {
                hi = lo + 1;
            }
            rows.push((lo, hi));
        }
        rows
    })
}

fn paint(rows: &[(u32, u32)], w: u32, h: u32, dx: u32, dy: u32) -> LabelMask {
    let mut m = LabelMask::empty(w, h).unwrap();
    for (y, &(lo, hi)) in rows.iter().enumerate() {
        for x in lo..hi {
            m.set(x + dx, y as u32 + dy, 1).unwrap();
        }
    }
    m
}

fn boundary_pixels(m: &LabelMask) -> usize {
    let (w, h) = (m.width() as i64, m.height() as i64);
    let mut count = 0;
    for y in 0..h {
        for x in 0..w {
            if m.get(x as u32, y as u32) != 1 {
                continue;
            }
            let touches_bg = (-1..=1).any(|dy| {
                (-1..=1).any(|dx| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx < 0 || ny < 0 || nx >= w || ny >= h || m.get(nx as u32, ny as u32) != 1
                })
            });
            count += touches_bg as usize;
        }
    }
    count
}

fn canvas_disk(r: f64) -> LabelMask {
    SyntheticSpec::new(Shape::Disk { radius: r }, (319.5, 319.5), Bone::Femur, (640, 640))
        .render()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn translation_moves_vertices_exactly(rows in blob_rows(12, 12), dx in 0u32..6, dy in 0u32..6) {
        let base = extract_contours(&paint(&rows, 24, 24, 0, 0), Bone::Femur);
        let moved = extract_contours(&paint(&rows, 24, 24, dx, dy), Bone::Femur);
        prop_assert_eq!(base.len(), moved.len());
        for (a, b) in base.iter().zip(&moved) {
            let shifted = a.translated(dx as f64, dy as f64);
            prop_assert_eq!(shifted.vertices(), b.vertices());
        }
    }

    #[test]
    fn area_is_bounded_by_pixel_count(rows in blob_rows(15, 15)) {
        let m = paint(&rows, 17, 17, 1, 1);
        let n = m.count(1) as f64;
        let cs = extract_contours(&m, Bone::Femur);
        prop_assert_eq!(cs.len(), 1);
        let area = polygon_area(&cs[0]);
        let lower = (n - boundary_pixels(&m) as f64).max(0.5 * n);
        prop_assert!(area <= n + 1e-9, "area {} > n {}", area, n);
        prop_assert!(area >= lower - 1e-9, "area {} < {}", area, lower);
    }

    #[test]
    fn disjoint_blobs_add(a in blob_rows(10, 10), b in blob_rows(10, 10)) {
        let left = paint(&a, 24, 12, 0, 1);
        let right = paint(&b, 24, 12, 13, 1);
        let mut both = left.clone();
        for y in 0..12 {
            for x in 13..24 {
                if right.get(x, y) == 1 {
                    both.set(x, y, 1).unwrap();
                }
            }
        }
        let alone: f64 = [left, right]
            .iter()
            .map(|m| polygon_area(&extract_contours(m, Bone::Femur)[0]))
            .sum();
        let cs = extract_contours(&both, Bone::Femur);
        prop_assert_eq!(cs.len(), 2);
        let together: f64 = cs.iter().map(polygon_area).sum();
        prop_assert!((alone - together).abs() < 1e-9);
    }

    #[test]
    fn isoperimetric_bound(rows in blob_rows(15, 15)) {
        let m = paint(&rows, 17, 17, 1, 1);
        let cs = extract_contours(&m, Bone::Femur);
        let c = largest_contour(&cs).unwrap();
        let circ = circularity(polygon_area(c), polygon_perimeter(c)).unwrap();
        prop_assert!(circ <= 1.0 + 1e-9);
    }
}

#[test]
fn disk_area_converges() {
    let mut prev = f64::INFINITY;
    for r in [25.0, 50.0, 100.0, 200.0] {
        let cs = extract_contours(&canvas_disk(r), Bone::Femur);
        let exact = PI * r * r;
        let err = (polygon_area(largest_contour(&cs).unwrap()) - exact).abs() / exact;
        assert!(err <= 0.01, "r={r} err={err}");
        assert!(err <= prev, "r={r}: {err} > {prev}");
        prev = err;
    }
}

#[test]
fn disk_perimeter_matches_midpoint_bias() {
    // Independent oracle: a marching-squares contour through edge midpoints
    // follows a digital straight edge at angle t with length factor
    // cos t + (sqrt2 - 1) sin t, whose mean over [0, pi/4] is 8(sqrt2 - 1)/pi.
    let bias = 8.0 * (2f64.sqrt() - 1.0) / PI;
    for r in [50.0, 100.0, 200.0] {
        let cs = extract_contours(&canvas_disk(r), Bone::Femur);
        let ratio = polygon_perimeter(largest_contour(&cs).unwrap()) / (2.0 * PI * r);
        assert!((ratio / bias - 1.0).abs() < 0.01, "r={r} ratio={ratio}");
    }
}

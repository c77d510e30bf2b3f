//! Minimal SVG bar charts: one bar per pain group at the mean, with a
//! ±1 std whisker. No timestamps, so reruns give identical files.

use std::fmt::Write as _;

use osteomorph_core::morphometry::ShapeMetric;
use osteomorph_core::{Bone, GroupStats, PainCategory};

const WIDTH: f64 = 420.0;
const HEIGHT: f64 = 320.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn colour(c: PainCategory) -> &'static str {
    match c {
        PainCategory::Worsened => "#c0504d",
        PainCategory::Improved => "#4f81bd",
        PainCategory::NoChange => "#9bbb59",
    }
}

fn label(c: PainCategory) -> &'static str {
    match c {
        PainCategory::Worsened => "Worsened",
        PainCategory::Improved => "Improved",
        PainCategory::NoChange => "No change",
    }
}

/// Chart of `metric` for `bone`. Both metrics live in [0, 1], so the y axis
/// is fixed to that range (whiskers are clipped to it).
pub fn group_bar_chart(stats: &[GroupStats], bone: Bone, metric: ShapeMetric) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y_of = |v: f64| TOP + plot_h * (1.0 - v.clamp(0.0, 1.0));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{} {} (mean ± std)</text>"#,
        WIDTH / 2.0,
        bone.name(),
        metric.name()
    );
    for i in 0..=5 {
        let v = i as f64 * 0.2;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#,
        TOP + plot_h
    );

    let slot = plot_w / PainCategory::ALL.len() as f64;
    for (i, cat) in PainCategory::ALL.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            label(*cat)
        );
        let Some(g) = stats
            .iter()
            .find(|g| g.bone == bone && g.metric == metric && g.category == *cat)
        else {
            continue;
        };
        let bar_w = slot * 0.6;
        let top = y_of(g.mean);
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{top:.1}" width="{bar_w:.1}" height="{:.1}" fill="{}"/>"#,
            cx - bar_w / 2.0,
            TOP + plot_h - top,
            colour(*cat)
        );
        let (lo, hi) = (y_of(g.mean - g.std), y_of(g.mean + g.std));
        let _ = writeln!(
            s,
            r#"<path d="M{cx:.1},{lo:.1}V{hi:.1}M{:.1},{lo:.1}H{:.1}M{:.1},{hi:.1}H{:.1}" stroke="black" fill="none"/>"#,
            cx - 6.0,
            cx + 6.0,
            cx - 6.0,
            cx + 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle" font-size="10">n={}</text>"#,
            TOP + plot_h + 34.0,
            g.n
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_one_bar_per_present_group() {
        let stats = vec![
            GroupStats {
                category: PainCategory::Worsened,
                bone: Bone::Femur,
                metric: ShapeMetric::Eccentricity,
                mean: 0.5,
                std: 0.1,
                n: 3,
            },
            GroupStats {
                category: PainCategory::NoChange,
                bone: Bone::Femur,
                metric: ShapeMetric::Eccentricity,
                mean: 0.7,
                std: 0.0,
                n: 1,
            },
        ];
        let svg = group_bar_chart(&stats, Bone::Femur, ShapeMetric::Eccentricity);
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg, group_bar_chart(&stats, Bone::Femur, ShapeMetric::Eccentricity));
        assert_eq!(group_bar_chart(&stats, Bone::Tibia, ShapeMetric::Eccentricity).matches("<rect").count(), 0);
    }
}

//! Static SVG rendering of orbits: one polyline per body, start markers,
//! equal-aspect viewport. Output is a pure function of the inputs, so two
//! runs over the same data produce byte-identical files.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::group::SymmetryProblem;
use crate::path::{extend_to_period, DiscretizedPath, PathCoefficients};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Renders the full-period orbit to an SVG file. Supports d = 2 directly
/// and d = 3 by orthographic projection onto the x-y plane (noted in a
/// legend); other dimensions are rejected.
pub fn render_orbit(
    problem: &SymmetryProblem,
    coeffs: &PathCoefficients,
    s: usize,
    out: impl AsRef<Path>,
) -> Result<()> {
    let svg = render_orbit_svg(problem, coeffs, s)?;
    fs::write(out.as_ref(), svg)
        .map_err(|e| Error::io(format!("writing {}", out.as_ref().display()), e))
}

/// The SVG document as a string.
pub fn render_orbit_svg(
    problem: &SymmetryProblem,
    coeffs: &PathCoefficients,
    s: usize,
) -> Result<String> {
    let d = problem.dim();
    if d != 2 && d != 3 {
        return Err(Error::UnsupportedDimension(d));
    }
    let path = extend_to_period(coeffs, problem, s)?;
    Ok(svg_document(problem, &path, d == 3))
}

fn svg_document(problem: &SymmetryProblem, path: &DiscretizedPath, projected: bool) -> String {
    let n = problem.bodies();
    // project to the x-y plane; SVG's y axis points down, so flip it
    let point = |sample: &nalgebra::DMatrix<f64>, i: usize| -> (f64, f64) {
        (sample[(i, 0)], -sample[(i, 1)])
    };

    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for sample in &path.samples {
        for i in 0..n {
            let (x, y) = point(sample, i);
            min_x = min_x.min(x);
            max_x = max_x.max(x);
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1e-6);
    let margin = 0.08 * span;
    let view_w = max_x - min_x + 2.0 * margin;
    let view_h = max_y - min_y + 2.0 * margin;
    let x0 = min_x - margin;
    let y0 = min_y - margin;
    let stroke = 0.006 * span;
    let marker = 0.015 * span;

    let fmt = |v: f64| format!("{v:.6}");
    let mut svg = String::new();
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="640" height="640" viewBox="{} {} {} {}" preserveAspectRatio="xMidYMid meet">"#,
        fmt(x0),
        fmt(y0),
        fmt(view_w),
        fmt(view_h)
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="white"/>"#,
        fmt(x0),
        fmt(y0),
        fmt(view_w),
        fmt(view_h)
    ));
    svg.push('\n');
    for i in 0..n {
        let color = PALETTE[i % PALETTE.len()];
        svg.push_str(&format!(
            r#"<polyline fill="none" stroke="{color}" stroke-width="{}" points=""#,
            fmt(stroke)
        ));
        for sample in &path.samples {
            let (x, y) = point(sample, i);
            svg.push_str(&format!("{},{} ", fmt(x), fmt(y)));
        }
        // close the loop back to the first sample
        let (x, y) = point(&path.samples[0], i);
        svg.push_str(&format!("{},{}", fmt(x), fmt(y)));
        svg.push_str("\"/>\n");
        svg.push_str(&format!(
            r#"<circle cx="{}" cy="{}" r="{}" fill="{color}"/>"#,
            fmt(x),
            fmt(y),
            fmt(marker)
        ));
        svg.push('\n');
    }
    let title = if projected {
        format!("{} (orthographic projection onto the x-y plane)", problem.name())
    } else {
        problem.name().to_string()
    };
    svg.push_str(&format!(
        r##"<text x="{}" y="{}" font-size="{}" font-family="sans-serif" fill="#333">{}</text>"##,
        fmt(x0 + 0.02 * span),
        fmt(y0 + 0.05 * span),
        fmt(0.04 * span),
        title
    ));
    svg.push('\n');
    svg.push_str("</svg>\n");
    svg
}

//! Deterministic SVG snapshots of 2-D decision-boundary complexes.

use std::fmt::Write as _;
use std::io::Write;

use crate::cloud::LabeledPointCloud;
use crate::error::{Error, Result};
use crate::filtration::ComplexSnapshot;

const CANVAS: f64 = 720.0;
const MARGIN: f64 = 24.0;
const CLASS_COLORS: [&str; 2] = ["#d62728", "#1f77b4"];

/// Renders the points of `cloud` with the edges and filled triangles of
/// `snapshot`. Only 2-D clouds can be drawn.
pub fn render_complex_svg<W: Write>(
    cloud: &LabeledPointCloud,
    snapshot: &ComplexSnapshot,
    mut writer: W,
) -> Result<()> {
    if cloud.dim() != 2 {
        return Err(Error::invalid(
            "cloud",
            format!("rendering requires 2-D points, got dimension {}", cloud.dim()),
        ));
    }
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in cloud.points() {
        min_x = min_x.min(p[0]);
        max_x = max_x.max(p[0]);
        min_y = min_y.min(p[1]);
        max_y = max_y.max(p[1]);
    }
    if cloud.is_empty() {
        (min_x, max_x, min_y, max_y) = (0.0, 1.0, 0.0, 1.0);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(1e-12);
    let scale = (CANVAS - 2.0 * MARGIN) / span;
    let sx = |x: f64| MARGIN + (x - min_x) * scale;
    // flip y so the drawing matches plot orientation
    let sy = |y: f64| CANVAS - MARGIN - (y - min_y) * scale;

    let mut body = String::new();
    let width = MARGIN * 2.0 + (max_x - min_x) * scale;
    let height = MARGIN * 2.0 + (max_y - min_y) * scale;
    writeln!(
        body,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.2}\" height=\"{height:.2}\" viewBox=\"0 0 {width:.2} {height:.2}\">"
    )
    .unwrap();
    writeln!(body, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>").unwrap();

    if let Some(triangles) = snapshot.by_dim.get(2) {
        for t in triangles {
            let mut pts = String::new();
            for &v in &t.vertices {
                let p = cloud.point(v as usize);
                write!(pts, "{:.3},{:.3} ", sx(p[0]), sy(p[1])).unwrap();
            }
            writeln!(
                body,
                "<polygon points=\"{}\" fill=\"#9e9e9e\" fill-opacity=\"0.25\"/>",
                pts.trim_end()
            )
            .unwrap();
        }
    }
    if let Some(edges) = snapshot.by_dim.get(1) {
        for e in edges {
            let a = cloud.point(e.vertices[0] as usize);
            let b = cloud.point(e.vertices[1] as usize);
            writeln!(
                body,
                "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#555555\" stroke-width=\"0.8\"/>",
                sx(a[0]),
                sy(a[1]),
                sx(b[0]),
                sy(b[1])
            )
            .unwrap();
        }
    }
    for i in 0..cloud.len() {
        let p = cloud.point(i);
        writeln!(
            body,
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"2.2\" fill=\"{}\"/>",
            sx(p[0]),
            sy(p[1]),
            CLASS_COLORS[cloud.label(i) as usize]
        )
        .unwrap();
    }
    writeln!(body, "</svg>").unwrap();
    writer.write_all(body.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{generate, SyntheticSpec};
    use crate::filtration::boundary_filtration;
    use crate::neighborhood::FiltrationMode;

    #[test]
    fn svg_is_deterministic_and_wellformed() {
        let cloud = generate(&SyntheticSpec::noisy_circle(2)).unwrap();
        let labels: Vec<u8> = (0..cloud.len()).map(|i| (i % 2) as u8).collect();
        let cloud =
            crate::cloud::LabeledPointCloud::new(cloud.points().to_vec(), labels).unwrap();
        let filt = boundary_filtration(
            &cloud,
            crate::cloud::DistanceOracle::Euclidean(&cloud),
            FiltrationMode::Plain,
            1,
            20,
            2,
        )
        .unwrap();
        let snap = filt.complex_at(0.4);
        let mut a = Vec::new();
        let mut b = Vec::new();
        render_complex_svg(&cloud, &snap, &mut a).unwrap();
        render_complex_svg(&cloud, &snap, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.ends_with("</svg>\n"));
    }

    #[test]
    fn non_planar_cloud_rejected() {
        let cloud = crate::cloud::LabeledPointCloud::new(
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
            vec![0, 1],
        )
        .unwrap();
        let snap = ComplexSnapshot { by_dim: vec![Vec::new()] };
        assert!(render_complex_svg(&cloud, &snap, Vec::new()).is_err());
    }
}

//! Deterministic SVG rendering of point configurations: points as filled
//! circles, graph edges as segments, the scoring window as a border, and an
//! optional title line. Coordinates are formatted with fixed precision so
//! identical inputs produce identical bytes.

use lowtail::geometry::PointConfig;

pub struct Scene<'a> {
    pub config: &'a PointConfig,
    /// index pairs into the configuration
    pub edges: Vec<(usize, usize)>,
    /// closed polygons in absolute coordinates (Voronoi cells)
    pub polygons: Vec<Vec<[f64; 2]>>,
    /// side of the window border to draw, centered like the config window
    pub border_side: f64,
    pub title: String,
}

const CANVAS: f64 = 800.0;
const PAD: f64 = 24.0;

pub fn render(scene: &Scene) -> String {
    let w = scene.config.window();
    let half = w.side / 2.0;
    let scale = (CANVAS - 2.0 * PAD) / w.side;
    let cx = w.center.first().copied().unwrap_or(0.0);
    let cy = w.center.get(1).copied().unwrap_or(0.0);
    let map = |x: f64, y: f64| -> (f64, f64) {
        (
            PAD + (x - (cx - half)) * scale,
            PAD + ((cy + half) - y) * scale,
        )
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
        CANVAS as u32,
        (CANVAS + 30.0) as u32
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    for poly in &scene.polygons {
        if poly.len() < 3 {
            continue;
        }
        let pts: Vec<String> = poly
            .iter()
            .map(|v| {
                let (x, y) = map(v[0], v[1]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        out.push_str(&format!(
            "<polygon points=\"{}\" fill=\"none\" stroke=\"#b8cbe0\" stroke-width=\"0.8\"/>\n",
            pts.join(" ")
        ));
    }

    for &(i, j) in &scene.edges {
        let p = scene.config.point(i);
        let q = scene.config.point(j);
        let (x1, y1) = map(p[0], p[1]);
        let (x2, y2) = map(q[0], q[1]);
        out.push_str(&format!(
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"#8899aa\" stroke-width=\"0.9\"/>\n"
        ));
    }

    for p in scene.config.iter_points() {
        let (x, y) = map(p[0], p[1.min(p.len() - 1)]);
        out.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.6\" fill=\"#1f4e79\"/>\n"
        ));
    }

    // scoring-window border on top of the geometry
    let bh = scene.border_side / 2.0;
    let (bx, by) = map(cx - bh, cy + bh);
    let side_px = scene.border_side * scale;
    out.push_str(&format!(
        "<rect x=\"{bx:.2}\" y=\"{by:.2}\" width=\"{side_px:.2}\" height=\"{side_px:.2}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.4\"/>\n"
    ));

    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        PAD,
        CANVAS + 18.0,
        xml_escape(&scene.title)
    ));
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

//! Deterministic CSV and SVG emission. Identical inputs produce identical
//! bytes: floats print through Rust's shortest-roundtrip formatter and all
//! layout is fixed.

use sha2::{Digest, Sha256};

/// First 16 hex chars of the SHA-256 of the canonical config bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// CSV with `# key=value` comment headers and one row per record.
pub struct Csv {
    out: String,
}

impl Csv {
    pub fn new() -> Csv {
        Csv { out: String::new() }
    }

    pub fn comment(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.out.push_str(&format!("# {key}={value}\n"));
        self
    }

    pub fn header(&mut self, cols: &[&str]) -> &mut Self {
        self.out.push_str(&cols.join(","));
        self.out.push('\n');
        self
    }

    pub fn row(&mut self, cells: &[String]) -> &mut Self {
        self.out.push_str(&cells.join(","));
        self.out.push('\n');
        self
    }

    pub fn finish(&self) -> &str {
        &self.out
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// One polyline series of an [`svg_line_chart`].
pub struct Series<'a> {
    pub name: &'a str,
    pub points: &'a [(f64, f64)],
}

/// Minimal hand-emitted line chart: fixed 640x420 canvas, axes with five
/// ticks per side, one polyline per series.
pub fn svg_line_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    comment: &str,
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in s.points {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !xmin.is_finite() || xmin == xmax {
        xmin -= 0.5;
        xmax = xmin + 1.0;
    }
    if !ymin.is_finite() || ymin == ymax {
        ymin -= 0.5;
        ymax = ymin + 1.0;
    }
    let sx = |x: f64| ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str(&format!("<!-- {comment} -->\n"));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n",
        W / 2.0
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        H - MB
    ));
    for k in 0..=4 {
        let fx = xmin + (xmax - xmin) * k as f64 / 4.0;
        let fy = ymin + (ymax - ymin) * k as f64 / 4.0;
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{:.4}</text>\n",
            sx(fx),
            H - MB + 18.0,
            fx
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.4}</text>\n",
            ML - 6.0,
            sy(fy) + 4.0,
            fy
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#dddddd\"/>\n",
            ML,
            sy(fy),
            W - MR,
            sy(fy)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{xlabel}</text>\n",
        (ML + W - MR) / 2.0,
        H - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{ylabel}</text>\n",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    ));
    for (si, s) in series.iter().enumerate() {
        let color = colors[si % colors.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            W - MR - 150.0,
            MT + 16.0 * (si as f64 + 1.0),
            s.name
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

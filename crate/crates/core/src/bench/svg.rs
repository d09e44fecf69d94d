use std::fmt::Write as _;

/// Minimal SVG document builder. Coordinates are in pixels with y down.
pub(crate) struct Svg {
    width: f64,
    height: f64,
    body: String,
}

pub(crate) const PALETTE: [&str; 6] = [
    "#7f7f7f", "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#d62728",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn open_group(&mut self, id: &str) {
        let _ = writeln!(self.body, r#"<g id="{}">"#, escape(id));
    }

    pub fn close_group(&mut self) {
        self.body.push_str("</g>\n");
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, stroke: Option<&str>) {
        let stroke = stroke.map_or(String::new(), |s| {
            format!(r#" stroke="{s}" stroke-width="1""#)
        });
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"{stroke}/>"#
        );
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, fill: &str, stroke: Option<&str>) {
        let stroke = stroke.map_or(String::new(), |s| {
            format!(r#" stroke="{s}" stroke-width="1.5""#)
        });
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}" fill="{fill}"{stroke}/>"#
        );
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width}"/>"#
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        if points.is_empty() {
            return;
        }
        let mut pts = String::new();
        for (x, y) in points {
            let _ = write!(pts, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
            pts.trim_end()
        );
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(content)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Plot area with linear axes mapping data to pixels.
pub(crate) struct Axes {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub log_x: bool,
}

impl Axes {
    fn tx(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        let f = if self.log_x {
            (x.ln() - lo.ln()) / (hi.ln() - lo.ln())
        } else {
            (x - lo) / (hi - lo)
        };
        self.left + f * self.width
    }

    fn ty(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.top + self.height - (y - lo) / (hi - lo) * self.height
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (self.tx(x), self.ty(y))
    }

    /// Frame, ticks on the y axis and axis labels.
    pub fn draw_frame(&self, svg: &mut Svg, x_label: &str, y_label: &str, y_ticks: usize) {
        svg.open_group("axes");
        let bottom = self.top + self.height;
        svg.line(
            self.left,
            bottom,
            self.left + self.width,
            bottom,
            "black",
            1.0,
        );
        svg.line(self.left, self.top, self.left, bottom, "black", 1.0);
        let (lo, hi) = self.y_range;
        for i in 0..=y_ticks {
            let v = lo + (hi - lo) * i as f64 / y_ticks as f64;
            let y = self.ty(v);
            svg.line(self.left - 4.0, y, self.left, y, "black", 1.0);
            svg.text(self.left - 6.0, y + 4.0, 11.0, "end", &format_tick(v));
        }
        svg.text(
            self.left + self.width / 2.0,
            bottom + 36.0,
            13.0,
            "middle",
            x_label,
        );
        let _ = writeln!(
            svg.body,
            r#"<text transform="translate({:.2},{:.2}) rotate(-90)" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
            self.left - 44.0,
            self.top + self.height / 2.0,
            escape(y_label)
        );
        svg.close_group();
    }

    pub fn x_tick(&self, svg: &mut Svg, x: f64, label: &str) {
        let bottom = self.top + self.height;
        let px = self.tx(x);
        svg.line(px, bottom, px, bottom + 4.0, "black", 1.0);
        svg.text(px, bottom + 17.0, 11.0, "middle", label);
    }
}

fn format_tick(v: f64) -> String {
    if v == v.round() {
        format!("{v:.0}")
    } else if (v * 10.0 - (v * 10.0).round()).abs() < 1e-9 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

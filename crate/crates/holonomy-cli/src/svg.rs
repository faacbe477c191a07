use std::fmt::Write as _;

/// Polylines in named layers, scaled to fit a fixed canvas.
pub type Polyline = Vec<(f64, f64)>;

#[derive(Debug)]
struct Layer {
    id: String,
    color: String,
    lines: Vec<Polyline>,
}

#[derive(Debug, Default)]
pub struct Plot {
    layers: Vec<Layer>,
}

const SIZE: f64 = 800.0;
const PAD: f64 = 20.0;

impl Plot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn layer(&mut self, id: &str, color: &str, lines: Vec<Polyline>) {
        self.layers.push(Layer {
            id: id.to_string(),
            color: color.to_string(),
            lines,
        });
    }

    pub fn render(&self) -> String {
        let pts = self
            .layers
            .iter()
            .flat_map(|l| l.lines.iter().flatten())
            .filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-12);
        let scale = (SIZE - 2.0 * PAD) / span;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n"
        );
        for Layer { id, color, lines } in &self.layers {
            let _ = writeln!(s, "<g id=\"{id}\" stroke=\"{color}\" fill=\"none\" stroke-width=\"1\">");
            for line in lines {
                let coords: Vec<String> = line
                    .iter()
                    .filter(|p| p.0.is_finite() && p.1.is_finite())
                    .map(|&(x, y)| format!("{:.3},{:.3}", PAD + (x - x0) * scale, SIZE - PAD - (y - y0) * scale))
                    .collect();
                let _ = writeln!(s, "<polyline points=\"{}\"/>", coords.join(" "));
            }
            s.push_str("</g>\n");
        }
        s.push_str("</svg>\n");
        s
    }
}

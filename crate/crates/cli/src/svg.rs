//! Minimal bar chart of per-class values.

pub fn bar_chart(title: &str, labels: &[String], values: &[Option<f64>]) -> String {
    let (w, h, margin) = (80.0 * labels.len().max(1) as f64 + 80.0, 300.0, 40.0);
    let max = values.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    let scale = if max > 0.0 { (h - 2.0 * margin) / max } else { 0.0 };
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    out.push_str(&format!("<text x=\"{margin}\" y=\"20\">{}</text>\n", escape(title)));
    for (i, (label, v)) in labels.iter().zip(values).enumerate() {
        let x = margin + 80.0 * i as f64;
        let bar = v.unwrap_or(0.0) * scale;
        let y = h - margin - bar;
        out.push_str(&format!(
            "<rect x=\"{x}\" y=\"{y:.2}\" width=\"50\" height=\"{bar:.2}\" fill=\"#4a7ab0\"/>\n"
        ));
        let text = v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
        out.push_str(&format!("<text x=\"{x}\" y=\"{:.2}\">{text}</text>\n", y - 4.0));
        out.push_str(&format!("<text x=\"{x}\" y=\"{:.2}\">{}</text>\n", h - margin + 16.0, escape(label)));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

//! Minimal SVG line charts of result CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use super::SimulationError;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_Y: f64 = 36.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn default_columns(header: &[String]) -> Vec<String> {
    for pair in [["A_pref", "A_evid"], ["A_pref_mean", "A_evid_mean"]] {
        if pair.iter().all(|c| header.iter().any(|h| h == c)) {
            return pair.iter().map(|s| s.to_string()).collect();
        }
    }
    Vec::new()
}

/// Reads a result CSV and renders one series per (arm, seed, column).
/// With no columns given, alignment metrics are plotted.
pub fn plot_csv<R: Read>(input: R, columns: &[String], title: &str) -> Result<String, SimulationError> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let idx = |name: &str| header.iter().position(|h| h == name);
    let round = idx("round").ok_or_else(|| SimulationError::Plot("no round column".into()))?;
    let columns = if columns.is_empty() {
        default_columns(&header)
    } else {
        columns.to_vec()
    };
    if columns.is_empty() {
        return Err(SimulationError::Plot("no columns to plot".into()));
    }
    let ys: Vec<(String, usize)> = columns
        .iter()
        .map(|c| {
            idx(c)
                .map(|i| (c.clone(), i))
                .ok_or_else(|| SimulationError::Plot(format!("no column {c}")))
        })
        .collect::<Result<_, _>>()?;
    let keys: Vec<usize> = ["arm", "seed"].iter().filter_map(|k| idx(k)).collect();

    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64, SimulationError> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| SimulationError::Plot(format!("{}: {e}", &rec[i])))
        };
        let x = parse(round)?;
        let mut prefix: Vec<String> = keys
            .iter()
            .map(|&i| match header[i].as_str() {
                "seed" => format!("seed {}", &rec[i]),
                _ => rec[i].to_string(),
            })
            .collect();
        for (name, i) in &ys {
            if ys.len() > 1 {
                prefix.push(name.clone());
            }
            series.entry(prefix.join(" ")).or_default().push((x, parse(*i)?));
            if ys.len() > 1 {
                prefix.pop();
            }
        }
    }
    let series: Vec<Series> = series
        .into_iter()
        .map(|(label, points)| Series { label, points })
        .collect();
    Ok(render_svg(&series, title))
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(series: &[Series], title: &str) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        if y.is_finite() {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    let (x0, x1) = if x1 - x0 < 1e-12 && x0.is_finite() { (x0, x0 + 1.0) } else { nice_range(x0, x1) };
    let (y0, y1) = nice_range(y0, y1);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN_Y - (y - y0) / (y1 - y0) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-size="14">{}</text>"#,
        MARGIN_LEFT,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_Y}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_LEFT}" x2="{}" y1="{py:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{fy:.3}</text>"##,
            MARGIN_LEFT + plot_w,
            MARGIN_LEFT - 4.0,
            sy(fy) + 4.0,
            py = sy(fy),
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{fx:.0}</text>"#,
            sx(fx),
            HEIGHT - MARGIN_Y + 14.0
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_Y + 14.0 * i as f64 + 6.0;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 16.0,
            lx + 20.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "round,arm,seed,A_pref,A_evid\n1,prefer-mmr,0,0.3,0.5\n2,prefer-mmr,0,0.6,0.7\n1,static-mmr,0,0.3,0.4\n2,static-mmr,0,0.3,0.45\n";

    #[test]
    fn one_polyline_per_arm_and_column() {
        let svg = plot_csv(CSV.as_bytes(), &[], "alignment").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert!(svg.contains("prefer-mmr seed 0 A_pref"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn single_column_labels_omit_the_column() {
        let svg = plot_csv(CSV.as_bytes(), &["A_evid".to_string()], "t").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">static-mmr seed 0<"));
    }

    #[test]
    fn missing_column_is_an_error() {
        assert!(plot_csv(CSV.as_bytes(), &["nope".to_string()], "t").is_err());
        assert!(plot_csv("a,b\n1,2\n".as_bytes(), &[], "t").is_err());
    }

    #[test]
    fn title_is_escaped() {
        let svg = render_svg(&[], "a<b & c");
        assert!(svg.contains("a&lt;b &amp; c"));
    }
}

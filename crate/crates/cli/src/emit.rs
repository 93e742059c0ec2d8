//! Sweep output: CSV, JSON and SVG heatmaps.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use qkdlc::SweepRecordF64 as SweepRecord;
use serde::Serialize;

use crate::CliError;

pub const CSV_HEADER: &str =
    "distance_km,leak_fraction,intensity_lc,intensity_base,rate_lc,rate_base,ratio";

/// Color of cells with no value on the chosen scale.
pub const SENTINEL_COLOR: &str = "#bdbdbd";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            _ => Err(format!("unknown format `{s}` (csv, json, svg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(Scale::Linear),
            "log" => Ok(Scale::Log),
            _ => Err(format!("unknown scale `{s}` (linear, log)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    IntensityLc,
    IntensityBase,
    RateLc,
    RateBase,
    Ratio,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::IntensityLc => "intensity_lc",
            Column::IntensityBase => "intensity_base",
            Column::RateLc => "rate_lc",
            Column::RateBase => "rate_base",
            Column::Ratio => "ratio",
        }
    }

    pub fn get(self, r: &SweepRecord) -> f64 {
        match self {
            Column::IntensityLc => r.optimal_intensity_lc,
            Column::IntensityBase => r.optimal_intensity_baseline,
            Column::RateLc => r.rate_lc,
            Column::RateBase => r.rate_baseline,
            Column::Ratio => r.ratio,
        }
    }
}

impl FromStr for Column {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [
            Column::IntensityLc,
            Column::IntensityBase,
            Column::RateLc,
            Column::RateBase,
            Column::Ratio,
        ]
        .into_iter()
        .find(|c| c.name() == s.replace('-', "_"))
        .ok_or_else(|| format!("unknown column `{s}`"))
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn emit_csv<W: Write>(records: &[SweepRecord], mut out: W) -> Result<usize, CliError> {
    if records.is_empty() {
        return Err(CliError::Invalid("no records to write".into()));
    }
    let mut text = String::with_capacity(64 * (records.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in records {
        let fields = [
            r.distance_km,
            r.leak_fraction,
            r.optimal_intensity_lc,
            r.optimal_intensity_baseline,
            r.rate_lc,
            r.rate_baseline,
            r.ratio,
        ];
        let row: Vec<String> = fields.into_iter().map(num).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(text.len())
}

pub fn read_csv(text: &str) -> Result<Vec<SweepRecord>, CliError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(bad_csv)?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(CliError::Invalid(format!("unexpected header `{header}`")));
    }
    reader
        .deserialize()
        .map(|row| row.map_err(bad_csv))
        .collect()
}

fn bad_csv(e: csv::Error) -> CliError {
    CliError::Invalid(format!("sweep csv: {e}"))
}

#[derive(Serialize)]
struct JsonDoc<'a, C: Serialize> {
    config: &'a C,
    records: &'a [SweepRecord],
}

/// `{"config": …, "records": […]}`; non-finite ratios become `null`.
pub fn emit_json<W: Write, C: Serialize>(
    records: &[SweepRecord],
    config: &C,
    mut out: W,
) -> Result<usize, CliError> {
    if records.is_empty() {
        return Err(CliError::Invalid("no records to write".into()));
    }
    let mut text = serde_json::to_string_pretty(&JsonDoc { config, records })
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    text.push('\n');
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(text.len())
}

/// Axis values of a complete row-major grid (distance outer, leak inner).
pub fn grid_axes(records: &[SweepRecord]) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let incomplete =
        |why: &str| CliError::Invalid(format!("records do not form a complete grid: {why}"));
    if records.is_empty() {
        return Err(incomplete("no records"));
    }
    let mut distances: Vec<f64> = Vec::new();
    let mut leaks: Vec<f64> = Vec::new();
    for r in records {
        if !distances.contains(&r.distance_km) {
            distances.push(r.distance_km);
        }
        if !leaks.contains(&r.leak_fraction) {
            leaks.push(r.leak_fraction);
        }
    }
    distances.sort_by(f64::total_cmp);
    leaks.sort_by(f64::total_cmp);
    if distances.len() * leaks.len() != records.len() {
        return Err(incomplete(&format!(
            "{} records for {} distances × {} leaks",
            records.len(),
            distances.len(),
            leaks.len()
        )));
    }
    for (i, r) in records.iter().enumerate() {
        let (d, l) = (distances[i / leaks.len()], leaks[i % leaks.len()]);
        if r.distance_km != d || r.leak_fraction != l {
            return Err(incomplete(&format!(
                "cell {i} is out of order or duplicated"
            )));
        }
    }
    Ok((distances, leaks))
}

/// Position of `value` on the color bar, or `None` for sentinel cells.
pub fn color_fraction(value: f64, min: f64, max: f64, scale: Scale) -> Option<f64> {
    let (v, lo, hi) = match scale {
        Scale::Linear if value.is_finite() => (value, min, max),
        Scale::Log if value.is_finite() && value > 0.0 => (value.log10(), min.log10(), max.log10()),
        _ => return None,
    };
    if hi > lo {
        Some(((v - lo) / (hi - lo)).clamp(0.0, 1.0))
    } else {
        Some(0.5)
    }
}

/// Finite range of the column on the given scale.
pub fn value_range(values: &[f64], scale: Scale) -> Option<(f64, f64)> {
    values
        .iter()
        .copied()
        .filter(|v| v.is_finite() && (scale == Scale::Linear || *v > 0.0))
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

// viridis, sampled
const PALETTE: [(u8, u8, u8); 9] = [
    (68, 1, 84),
    (71, 44, 122),
    (59, 81, 139),
    (44, 113, 142),
    (33, 144, 141),
    (39, 173, 129),
    (92, 200, 99),
    (170, 220, 50),
    (253, 231, 37),
];

pub fn palette_color(f: f64) -> String {
    let pos = f.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let i = (pos.floor() as usize).min(PALETTE.len() - 2);
    let t = pos - i as f64;
    let (a, b) = (PALETTE[i], PALETTE[i + 1]);
    let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn label(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.3e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Standalone SVG heatmap of `column`: distance on x, leak fraction on y.
pub fn render_svg(
    records: &[SweepRecord],
    column: Column,
    scale: Scale,
    title: &str,
) -> Result<String, CliError> {
    let (distances, leaks) = grid_axes(records)?;
    let values: Vec<f64> = records.iter().map(|r| column.get(r)).collect();
    let range = value_range(&values, scale);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let cw = plot_w / distances.len() as f64;
    let ch = plot_h / leaks.len() as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    let _ = writeln!(s, r#"<g class="cells">"#);
    for (i, (r, &v)) in records.iter().zip(&values).enumerate() {
        let (di, li) = (i / leaks.len(), i % leaks.len());
        let x = LEFT + di as f64 * cw;
        // leak grows upward
        let y = TOP + plot_h - (li + 1) as f64 * ch;
        let fill = match range.and_then(|(lo, hi)| color_fraction(v, lo, hi, scale)) {
            Some(f) => palette_color(f),
            None => SENTINEL_COLOR.to_string(),
        };
        let _ = writeln!(
            s,
            r#"<rect class="cell" x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{fill}"><title>D={} km, r_E={}, {}={}</title></rect>"#,
            label(r.distance_km),
            label(r.leak_fraction),
            column.name(),
            label(v)
        );
    }
    let _ = writeln!(s, "</g>");

    // axes
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let axis_y = TOP + plot_h;
    let ticks = |n: usize| -> Vec<usize> {
        if n <= 6 {
            (0..n).collect()
        } else {
            let mut v: Vec<usize> = (0..6).map(|k| k * (n - 1) / 5).collect();
            v.dedup();
            v
        }
    };
    for i in ticks(distances.len()) {
        let x = LEFT + (i as f64 + 0.5) * cw;
        let _ = writeln!(
            s,
            r#"<text x="{x:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
            axis_y + 16.0,
            label(distances[i])
        );
    }
    for i in ticks(leaks.len()) {
        let y = axis_y - (i as f64 + 0.5) * ch;
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{y:.3}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            LEFT - 6.0,
            label(leaks[i])
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{:.3}" y="{:.3}" text-anchor="middle">distance (km)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="18" y="{:.3}" text-anchor="middle" transform="rotate(-90 18 {:.3})">leak fraction r_E</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    // legend
    let lx = WIDTH - RIGHT + 30.0;
    let steps = 32;
    let _ = writeln!(s, r#"<g class="legend">"#);
    for k in 0..steps {
        let f = k as f64 / (steps - 1) as f64;
        let y = TOP + plot_h - (k + 1) as f64 * plot_h / steps as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{y:.3}" width="20" height="{:.3}" fill="{}"/>"#,
            plot_h / steps as f64 + 0.5,
            palette_color(f)
        );
    }
    let (min_label, max_label) = match range {
        Some((lo, hi)) => (label(lo), label(hi)),
        None => ("n/a".to_string(), "n/a".to_string()),
    };
    let _ = writeln!(
        s,
        r#"<text class="legend-max" x="{}" y="{}" dominant-baseline="middle">{max_label}</text>"#,
        lx + 26.0,
        TOP + 6.0
    );
    let _ = writeln!(
        s,
        r#"<text class="legend-min" x="{}" y="{}" dominant-baseline="middle">{min_label}</text>"#,
        lx + 26.0,
        TOP + plot_h - 6.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{lx}" y="{}">{} ({})</text>"#,
        TOP - 8.0,
        column.name(),
        match scale {
            Scale::Linear => "linear",
            Scale::Log => "log",
        }
    );
    let _ = writeln!(
        s,
        r#"<rect x="{lx}" y="{}" width="20" height="12" fill="{SENTINEL_COLOR}"/><text x="{}" y="{}">no value</text>"#,
        TOP + plot_h + 14.0,
        lx + 26.0,
        TOP + plot_h + 24.0
    );
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg<W: Write>(
    records: &[SweepRecord],
    column: Column,
    scale: Scale,
    title: &str,
    mut out: W,
) -> Result<usize, CliError> {
    let svg = render_svg(records, column, scale, title)?;
    out.write_all(svg.as_bytes())?;
    out.flush()?;
    Ok(svg.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(d: f64, r: f64, ratio: f64) -> SweepRecord {
        SweepRecord {
            distance_km: d,
            leak_fraction: r,
            optimal_intensity_lc: 1.0,
            optimal_intensity_baseline: 1.0,
            rate_lc: ratio,
            rate_baseline: 1.0,
            ratio,
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut buf = Vec::new();
        let n = emit_csv(&[rec(1.0, 0.1, 2.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(n, text.len());
        assert_eq!(text.lines().count(), 2);
        assert!(text.ends_with('\n'));
        assert!(text.starts_with(CSV_HEADER));
        assert!(matches!(
            emit_csv(&[], Vec::new()),
            Err(CliError::Invalid(_))
        ));
    }

    #[test]
    fn csv_round_trips_exactly() {
        let records = vec![
            rec(0.1 + 0.2, 1.0 / 3.0, std::f64::consts::PI),
            rec(0.1 + 0.2, 0.7, f64::INFINITY),
            rec(5e-324, 0.7, f64::NAN),
        ];
        let mut buf = Vec::new();
        emit_csv(&records, &mut buf).unwrap();
        let back = read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[0], records[0]);
        assert_eq!(back[1], records[1]);
        assert!(back[2].ratio.is_nan());
        assert_eq!(back[2].distance_km, 5e-324);
    }

    #[test]
    fn grid_checks() {
        let full = vec![
            rec(1.0, 0.1, 1.0),
            rec(1.0, 0.2, 1.0),
            rec(2.0, 0.1, 1.0),
            rec(2.0, 0.2, 1.0),
        ];
        let (d, l) = grid_axes(&full).unwrap();
        assert_eq!(d, vec![1.0, 2.0]);
        assert_eq!(l, vec![0.1, 0.2]);
        assert!(grid_axes(&full[..3]).is_err());
        let mut swapped = full.clone();
        swapped.swap(0, 1);
        assert!(grid_axes(&swapped).is_err());
    }

    #[test]
    fn color_fraction_behaviour() {
        assert_eq!(color_fraction(5.0, 0.0, 10.0, Scale::Linear), Some(0.5));
        assert_eq!(color_fraction(10.0, 1.0, 100.0, Scale::Log), Some(0.5));
        assert_eq!(color_fraction(0.0, 1.0, 100.0, Scale::Log), None);
        assert_eq!(color_fraction(-1.0, 1.0, 100.0, Scale::Log), None);
        assert_eq!(color_fraction(f64::NAN, 1.0, 100.0, Scale::Linear), None);
        assert_eq!(color_fraction(3.0, 3.0, 3.0, Scale::Linear), Some(0.5));
        assert_eq!(palette_color(0.0), "#440154");
        assert_eq!(palette_color(1.0), "#fde725");
    }

    #[test]
    fn single_cell_svg() {
        let svg = render_svg(&[rec(100.0, 0.01, 67.0)], Column::Ratio, Scale::Linear, "t").unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("distance (km)"));
        assert!(svg.contains("leak fraction"));
    }

    #[test]
    fn all_zero_log_svg_is_sentinel() {
        let records: Vec<_> = [1.0, 2.0]
            .iter()
            .flat_map(|&d| [0.1, 0.2].map(|r| rec(d, r, 0.0)))
            .collect();
        let svg = render_svg(&records, Column::Ratio, Scale::Log, "zeros").unwrap();
        assert_eq!(
            svg.matches(&format!(r#"fill="{SENTINEL_COLOR}"><title>"#))
                .count(),
            4
        );
        assert!(svg.contains(">n/a<"));
    }
}

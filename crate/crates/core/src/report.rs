//! Text renderings of daily series: CSV tables and minimal SVG line charts.

use std::collections::BTreeSet;
use std::fmt::Write;

use chrono::NaiveDate;

use crate::analytics::DailySeries;

/// Provenance lines each artifact starts with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("tool_version={}", self.tool_version),
            format!("seed={}", self.seed),
            format!("config_hash={}", self.config_hash),
        ]
    }
}

fn format_value(v: f64) -> String {
    // shortest representation that round-trips
    format!("{v:?}")
}

/// `day,value,rolling_mean`, one row per present day.
pub fn series_csv(series: &DailySeries, rolling: &DailySeries, provenance: &Provenance) -> String {
    let mut out = String::new();
    for line in provenance.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "# quantity={}", series.quantity);
    out.push_str("day,value,rolling_mean\n");
    for (p, r) in series.points.iter().zip(&rolling.points) {
        debug_assert_eq!(p.day, r.day);
        let _ = writeln!(out, "{},{},{}", p.day, format_value(p.value), format_value(r.value));
    }
    out
}

/// `day,reason,detail` for every gap.
pub fn gaps_csv(series: &DailySeries, provenance: &Provenance) -> String {
    let mut out = String::new();
    for line in provenance.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("day,reason,detail\n");
    for gap in &series.gaps {
        let detail = gap.detail.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        let _ = writeln!(out, "{},{},\"{}\"", gap.day, gap.reason, detail);
    }
    out
}

pub struct ChartLine<'a> {
    pub label: &'a str,
    pub series: &'a DailySeries,
    pub rolling: &'a DailySeries,
    pub color: &'a str,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Daily values as dots, rolling means as lines, gap days as gray bands and
/// an optional vertical marker.
pub fn series_svg(
    title: &str,
    lines: &[ChartLine<'_>],
    marker: Option<NaiveDate>,
    provenance: &Provenance,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    for line in provenance.lines() {
        let _ = writeln!(out, "<!-- {} -->", escape(&line));
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    let days: Vec<NaiveDate> = lines
        .iter()
        .flat_map(|l| {
            l.series
                .points
                .iter()
                .map(|p| p.day)
                .chain(l.series.gaps.iter().map(|g| g.day))
        })
        .collect();
    let values: Vec<f64> = lines
        .iter()
        .flat_map(|l| l.series.points.iter().chain(&l.rolling.points).map(|p| p.value))
        .filter(|v| v.is_finite())
        .collect();
    let (Some(&first), Some(&last)) = (days.iter().min(), days.iter().max()) else {
        out.push_str("</svg>\n");
        return out;
    };
    let span = ((last - first).num_days().max(1)) as f64;
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let x = |d: NaiveDate| MARGIN + (d - first).num_days() as f64 / span * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
    let day_width = ((WIDTH - 2.0 * MARGIN) / span).max(1.0);

    let gap_days: BTreeSet<NaiveDate> = lines
        .iter()
        .flat_map(|l| l.series.gaps.iter().map(|g| g.day))
        .collect();
    for day in &gap_days {
        let _ = writeln!(
            out,
            r##"<rect class="gap" x="{:.2}" y="{MARGIN}" width="{:.2}" height="{}" fill="#dddddd"/>"##,
            x(*day) - day_width / 2.0,
            day_width,
            HEIGHT - 2.0 * MARGIN
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (v, anchor) in [(lo, HEIGHT - MARGIN), (hi, MARGIN)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{anchor:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.4}</text>"#,
            MARGIN - 4.0
        );
    }
    for (d, anchor) in [(first, "start"), (last, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{d}</text>"#,
            x(d),
            HEIGHT - MARGIN + 14.0
        );
    }
    if let Some(m) = marker.filter(|m| *m >= first && *m <= last) {
        let _ = writeln!(
            out,
            r#"<line class="marker" x1="{0:.2}" x2="{0:.2}" y1="{MARGIN}" y2="{1}" stroke="gray"/>"#,
            x(m),
            HEIGHT - MARGIN
        );
    }
    for (i, line) in lines.iter().enumerate() {
        for p in line.series.points.iter().filter(|p| p.value.is_finite()) {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="{}" fill-opacity="0.5"/>"#,
                x(p.day),
                y(p.value),
                line.color
            );
        }
        let path: Vec<String> = line
            .rolling
            .points
            .iter()
            .filter(|p| p.value.is_finite())
            .map(|p| format!("{:.2},{:.2}", x(p.day), y(p.value)))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                path.join(" "),
                line.color
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 14.0 * (i + 1) as f64,
            line.color,
            escape(line.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{rolling_mean, Gap, Quantity, SeriesPoint};

    fn provenance() -> Provenance {
        Provenance {
            tool_version: "0.1.0".into(),
            seed: 7,
            config_hash: "abc".into(),
        }
    }

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2017, 11, d).unwrap()
    }

    fn series() -> DailySeries {
        DailySeries {
            quantity: Quantity::Cramming(None),
            points: vec![
                SeriesPoint { day: day(1), value: 0.1 },
                SeriesPoint { day: day(3), value: 0.3 },
            ],
            gaps: vec![Gap {
                day: day(2),
                reason: "missing".into(),
                detail: None,
            }],
        }
    }

    #[test]
    fn csv_omits_gaps() {
        let s = series();
        let csv = series_csv(&s, &rolling_mean(&s, 10), &provenance());
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows, vec!["day,value,rolling_mean", "2017-11-01,0.1,0.1", "2017-11-03,0.3,0.2"]);
        assert!(csv.starts_with("# tool_version=0.1.0\n# seed=7\n# config_hash=abc\n"));
    }

    #[test]
    fn single_point_csv() {
        let mut s = series();
        s.points.truncate(1);
        let csv = series_csv(&s, &rolling_mean(&s, 10), &provenance());
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 2);
    }

    #[test]
    fn svg_shades_gaps() {
        let s = series();
        let r = rolling_mean(&s, 10);
        let svg = series_svg(
            "cramming",
            &[ChartLine { label: "web", series: &s, rolling: &r, color: "steelblue" }],
            Some(day(2)),
            &provenance(),
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(r#"class="gap""#).count(), 1);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains(r#"class="marker""#));
        assert!(svg.contains("<!-- seed=7 -->"));
    }

    #[test]
    fn svg_of_empty_series_is_valid() {
        let s = DailySeries::new(Quantity::Cramming(None));
        let svg = series_svg("x", &[ChartLine { label: "a", series: &s, rolling: &s, color: "red" }], None, &provenance());
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}

//! Summary tables and line charts from a metrics table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::csvfmt::{float, opt_float, MetricsRow};

pub const SUMMARY_HEADER: &str =
    "b,beta,runs,median_itr2loss,median_itr2acc,median_time2acc_s,mean_throughput";

/// Aggregates over all runs sharing `(b, β)`. Runs that never reached a target
/// count as infinitely slow, so a median is missing when half or more missed.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub b: usize,
    pub beta: usize,
    pub runs: usize,
    pub median_itr2loss: Option<f64>,
    pub median_itr2acc: Option<f64>,
    pub median_time2acc_s: Option<f64>,
    pub mean_throughput: f64,
}

pub fn median(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    m.is_finite().then_some(m)
}

pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, usize), Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.b, r.beta)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((b, beta), g)| SummaryRow {
            b,
            beta,
            runs: g.len(),
            median_itr2loss: median(g.iter().map(|r| r.itr2loss.map(|x| x as f64))),
            median_itr2acc: median(g.iter().map(|r| r.itr2acc.map(|x| x as f64))),
            median_time2acc_s: median(g.iter().map(|r| r.time2acc_s)),
            mean_throughput: g.iter().map(|r| r.throughput).sum::<f64>() / g.len() as f64,
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.b,
            r.beta,
            r.runs,
            opt_float(r.median_itr2loss),
            opt_float(r.median_itr2acc),
            opt_float(r.median_time2acc_s),
            float(r.mean_throughput)
        );
    }
    out
}

/// Fixed-width table for the terminal.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let cell = |x: Option<f64>| x.map(|v| format!("{:.4}", v)).unwrap_or_else(|| "-".into());
    let mut out = format!(
        "{:>6} {:>6} {:>5} {:>14} {:>14} {:>16} {:>16}\n",
        "b", "beta", "runs", "itr2loss", "itr2acc", "time2acc_s", "throughput"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>5} {:>14} {:>14} {:>16} {:>16.4}",
            r.b,
            r.beta,
            r.runs,
            cell(r.median_itr2loss),
            cell(r.median_itr2acc),
            cell(r.median_time2acc_s),
            r.mean_throughput
        );
    }
    out
}

/// One named polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Median iteration-to-loss against `b`, one series per β (`by_b`), or
/// against β, one series per `b`.
pub fn itr2loss_series(summary: &[SummaryRow], by_b: bool) -> Vec<Series> {
    let mut lines: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in summary {
        let (key, x) = if by_b { (r.beta, r.b) } else { (r.b, r.beta) };
        let pts = lines.entry(key).or_default();
        if let Some(y) = r.median_itr2loss {
            pts.push((x as f64, y));
        }
    }
    lines
        .into_iter()
        .filter(|(_, p)| !p.is_empty())
        .map(|(key, points)| Series {
            label: if by_b {
                format!("beta = {}", key)
            } else {
                format!("b = {}", key)
            },
            points,
        })
        .collect()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Minimal line chart: axes, end-point tick labels, legend and one polyline per series.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let (ax, ay) = (LEFT, TOP + ph);
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black"><line x1="{ax}" y1="{ay}" x2="{}" y2="{ay}"/><line x1="{ax}" y1="{TOP}" x2="{ax}" y2="{ay}"/></g>"#,
        LEFT + pw
    );
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="{anchor}">{}</text>"#,
            sx(x),
            ay + 16.0,
            x
        );
    }
    for y in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            ax - 6.0,
            sy(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (k, line) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&line.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: usize, b: usize, beta: usize, itr: Option<usize>) -> MetricsRow {
        MetricsRow {
            run_id: id,
            b,
            beta,
            eta: 0.1,
            seed: 1,
            itr2loss: itr,
            itr2acc: None,
            time2acc_s: None,
            throughput: 2.0,
        }
    }

    #[test]
    fn median_counts_misses_as_slow() {
        assert_eq!(median([Some(1.0), Some(3.0), None]), Some(3.0));
        assert_eq!(median([Some(1.0), None]), None);
        assert_eq!(median([Some(1.0), Some(4.0)]), Some(2.5));
        assert_eq!(median(std::iter::empty()), None);
    }

    #[test]
    fn summary_groups_by_b_and_beta() {
        let s = summarize(&[row(0, 10, 2, Some(5)), row(1, 10, 2, Some(7)), row(2, 20, 2, None)]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].runs, 2);
        assert_eq!(s[0].median_itr2loss, Some(6.0));
        assert_eq!(s[1].median_itr2loss, None);
        let csv = summary_csv(&s);
        assert_eq!(csv.lines().nth(2).unwrap(), "20,2,1,,,,2.0");
    }

    #[test]
    fn chart_has_one_point_per_row() {
        let s = summarize(&[row(0, 10, 2, Some(5)), row(1, 20, 2, Some(9))]);
        let series = itr2loss_series(&s, true);
        assert_eq!(series.len(), 1);
        let svg = line_chart("t", "b", "iterations", &series);
        let poly = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = poly.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        assert_eq!(pts.split(' ').count(), 2);
        assert!(svg.contains("beta = 2"));
    }
}

//! Minimal SVG line charts of per-hour RMSE, one chart per scenario.

use std::fmt::Write;

use super::report::EvaluatedResult;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Chart of every estimator's per-hour RMSE in `scenario`, or `None` if it has no results.
pub fn per_hour_chart(scenario: &str, evaluated: &[EvaluatedResult]) -> Option<String> {
    let lines: Vec<&EvaluatedResult> = evaluated.iter().filter(|e| e.scenario == scenario).collect();
    if lines.is_empty() {
        return None;
    }
    let y_max = lines
        .iter()
        .flat_map(|e| e.metrics.per_hour_rmse.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.05;
    let x = |h: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * h as f64 / 23.0;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * v / y_max;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="20">{scenario}: RMSE by hour of day (kW)</text>"#);
    let (x0, x1, y0, y1) = (x(0), x(23), y(0.0), y(y_max));
    let _ = writeln!(s, r#"<path d="M{x0:.1},{y1:.1} V{y0:.1} H{x1:.1}" stroke="black" fill="none"/>"#);
    for h in (0..24).step_by(3) {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{h}</text>"#, x(h), y0 + 15.0);
    }
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.0}</text>"#, x0 - 5.0, y(v) + 4.0);
    }
    for (i, e) in lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = e
            .metrics
            .per_hour_rmse
            .iter()
            .enumerate()
            .map(|(h, v)| format!("{:.1},{:.1}", x(h), y(*v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{color}">{}</text>"#,
            x1 - 70.0,
            e.estimator
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

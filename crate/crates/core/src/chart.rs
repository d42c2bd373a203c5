//! Self-contained SVG line chart for equity curves. Plumbing output; the
//! exact pixels are not contractual, but the bytes are deterministic for a
//! given input.

use crate::backtest::EquityCurve;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 48.0;

/// Strategy colors follow the comparison convention: Q-learning blue,
/// ML signal red, baseline green.
fn color_for(name: &str) -> &'static str {
    match name {
        "qlearning" => "#1f77b4",
        "ml" => "#d62728",
        "baseline" => "#2ca02c",
        "oracle" => "#7f7f7f",
        _ => "#9467bd",
    }
}

/// Render the curves into one SVG document. Curves should share a date
/// range; the x axis is the day index.
pub fn equity_chart_svg(curves: &[EquityCurve]) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut n_days = 0usize;
    for curve in curves {
        n_days = n_days.max(curve.points.len());
        for p in &curve.points {
            lo = lo.min(p.equity);
            hi = hi.max(p.equity);
        }
    }
    if !lo.is_finite() || !hi.is_finite() || n_days == 0 {
        lo = 0.0;
        hi = 1.0;
        n_days = 1;
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_at = |i: usize| MARGIN_LEFT + plot_w * i as f64 / (n_days.max(2) - 1) as f64;
    let y_at = |e: f64| MARGIN_TOP + plot_h * (1.0 - (e - lo) / (hi - lo));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Horizontal grid lines at five equity levels.
    for k in 0..=4 {
        let value = lo + (hi - lo) * f64::from(k) / 4.0;
        let y = y_at(value);
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            WIDTH - MARGIN_RIGHT
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\" fill=\"#444444\">{value:.2}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
    }

    // Axis dates.
    if let Some(curve) = curves.iter().find(|c| !c.points.is_empty()) {
        let first = curve.points.first().unwrap().date;
        let last = curve.points.last().unwrap().date;
        svg.push_str(&format!(
            "<text x=\"{MARGIN_LEFT:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#444444\">{first}</text>\n",
            HEIGHT - 16.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\" fill=\"#444444\">{last}</text>\n",
            WIDTH - MARGIN_RIGHT,
            HEIGHT - 16.0
        ));
    }

    for curve in curves {
        if curve.points.is_empty() {
            continue;
        }
        let mut path = String::new();
        // Every curve starts at equity 1.0 the day before its first record.
        path.push_str(&format!("M{:.2},{:.2}", x_at(0), y_at(1.0)));
        for (i, p) in curve.points.iter().enumerate() {
            path.push_str(&format!(" L{:.2},{:.2}", x_at(i), y_at(p.equity)));
        }
        svg.push_str(&format!(
            "<path d=\"{path}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>\n",
            color_for(&curve.name)
        ));
    }

    // Legend.
    for (k, curve) in curves.iter().enumerate() {
        let y = MARGIN_TOP + 18.0 * k as f64 + 6.0;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"4\" fill=\"{}\"/>\n",
            MARGIN_LEFT + 12.0,
            y,
            color_for(&curve.name)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222222\">{} ({:.3}x)</text>\n",
            MARGIN_LEFT + 30.0,
            y + 5.0,
            curve.name,
            curve.final_equity()
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::EquityPoint;
    use chrono::NaiveDate;

    fn curve(name: &str, equities: &[f64]) -> EquityCurve {
        let start = NaiveDate::from_ymd_opt(2016, 1, 4).unwrap();
        EquityCurve {
            name: name.to_string(),
            points: equities
                .iter()
                .enumerate()
                .map(|(i, &equity)| EquityPoint {
                    date: crate::calendar::trading_days(start, equities.len())[i],
                    position: 1,
                    ret: 0.0,
                    equity,
                })
                .collect(),
        }
    }

    #[test]
    fn chart_contains_curves_and_legend() {
        let svg = equity_chart_svg(&[
            curve("qlearning", &[1.0, 1.1, 1.2]),
            curve("oracle", &[1.1, 1.3, 1.5]),
        ]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("#1f77b4"));
        assert!(svg.contains("qlearning"));
        assert!(svg.contains("oracle"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn chart_is_deterministic() {
        let curves = [curve("ml", &[1.0, 0.9, 1.05])];
        assert_eq!(equity_chart_svg(&curves), equity_chart_svg(&curves));
    }

    #[test]
    fn empty_input_still_renders() {
        let svg = equity_chart_svg(&[]);
        assert!(svg.starts_with("<svg"));
    }
}

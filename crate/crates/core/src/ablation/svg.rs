use std::fmt::Write as _;

use super::AblationResult;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Mean accuracy against sensor count, one line per training fraction, with
/// the min..max range drawn as a shaded band.
pub fn render_svg(result: &AblationResult, title: &str) -> String {
    let agg = result.aggregates();
    let mut ks: Vec<usize> = agg.iter().map(|a| a.k).collect();
    ks.dedup();
    let mut fractions: Vec<f64> = agg.iter().map(|a| a.train_fraction).collect();
    fractions.sort_by(f64::total_cmp);
    fractions.dedup();

    let (k_lo, k_hi) = (*ks.first().unwrap_or(&1) as f64, *ks.last().unwrap_or(&1) as f64);
    let y_lo = (agg.iter().map(|a| a.min).fold(1.0, f64::min) * 10.0).floor() / 10.0;
    let y_lo = y_lo.min(0.9);
    let x = |k: f64| {
        if k_hi > k_lo {
            MARGIN + (k - k_lo) / (k_hi - k_lo) * (W - 2.0 * MARGIN)
        } else {
            W / 2.0
        }
    };
    let y = |a: f64| H - MARGIN - (a - y_lo) / (1.0 - y_lo) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    // axes
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN
    );
    for &k in &ks {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{k}</text>"#,
            x(k as f64),
            H - MARGIN + 18.0
        );
    }
    let steps = ((1.0 - y_lo) * 10.0).round() as usize;
    for i in 0..=steps {
        let a = y_lo + i as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{m}" y1="{yy:.1}" x2="{r}" y2="{yy:.1}" stroke="lightgray"/><text x="{tx}" y="{ty:.1}" text-anchor="end">{a:.1}</text>"#,
            m = MARGIN,
            r = W - MARGIN,
            yy = y(a),
            tx = MARGIN - 6.0,
            ty = y(a) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">sensors (k)</text>"#,
        W / 2.0,
        H - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">accuracy</text>"#,
        H / 2.0,
        H / 2.0
    );

    for (i, &f) in fractions.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let series: Vec<_> = agg.iter().filter(|a| a.train_fraction == f).collect();
        let upper = series.iter().map(|a| format!("{:.1},{:.1}", x(a.k as f64), y(a.max)));
        let lower = series
            .iter()
            .rev()
            .map(|a| format!("{:.1},{:.1}", x(a.k as f64), y(a.min)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = series
            .iter()
            .map(|a| format!("{:.1},{:.1}", x(a.k as f64), y(a.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for a in &series {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                x(a.k as f64),
                y(a.mean)
            );
        }
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{:.1}" width="12" height="3" fill="{color}"/><text x="{}" y="{:.1}">train fraction {f}</text>"#,
            W - MARGIN - 130.0,
            ly - 4.0,
            W - MARGIN - 112.0,
            ly
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

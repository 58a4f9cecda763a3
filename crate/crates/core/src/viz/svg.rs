use std::fmt::Write as _;

use super::color::{hex, ColorScale};
use super::region::RegionMap;
use crate::error::{Error, Result};
use crate::similarity::SimilarityReport;

const MAP_W: f64 = 640.0;
const MAP_H: f64 = 480.0;
const MARGIN: f64 = 20.0;
const LEGEND_W: f64 = 140.0;
const BAR_X: f64 = MAP_W + 30.0;
const BAR_W: f64 = 24.0;

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Text safe inside `<!-- -->`.
fn comment_text(s: &str) -> String {
    s.replace("--", "- -")
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Standalone SVG 1.1 choropleth of `scale.metric`. Regions whose class has
/// no report row are drawn hatched gray. Output depends only on the inputs.
pub fn render_choropleth(
    report: &SimilarityReport,
    map: &RegionMap,
    scale: &ColorScale,
) -> Result<String> {
    map.validate()?;
    let metric = scale.metric;
    let matched = map
        .regions
        .iter()
        .filter(|r| report.row(&r.class).is_some())
        .count();
    if matched == 0 {
        return Err(Error::Export(format!(
            "no region class matches a report row (report classes: {:?})",
            report
                .rows
                .iter()
                .map(|r| r.class.as_str())
                .collect::<Vec<_>>()
        )));
    }

    let (x0, y0, x1, y1) = map.bounds();
    let span = ((x1 - x0) / (MAP_W - 2.0 * MARGIN)).max((y1 - y0) / (MAP_H - 2.0 * MARGIN));
    let k = if span > 0.0 { 1.0 / span } else { 1.0 };
    let project = |x: f64, y: f64| (MARGIN + (x - x0) * k, MAP_H - MARGIN - (y - y0) * k);

    let mut svg = String::new();
    let width = MAP_W + LEGEND_W;
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(width),
        num(MAP_H),
        num(width),
        num(MAP_H)
    );
    let _ = writeln!(
        svg,
        "<title>{} relative to {}</title>",
        metric,
        escape(&report.reference)
    );
    let _ = writeln!(svg, "<defs>");
    let _ = writeln!(
        svg,
        r##"<pattern id="hatch" patternUnits="userSpaceOnUse" width="8" height="8"><rect width="8" height="8" fill="#dddddd"/><path d="M0,8 L8,0" stroke="#888888" stroke-width="1"/></pattern>"##
    );
    let _ = writeln!(
        svg,
        r#"<linearGradient id="legend-gradient" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient>"#,
        hex(scale.low),
        hex(scale.high)
    );
    let _ = writeln!(svg, "</defs>");

    let mut warnings = Vec::new();
    let _ = writeln!(
        svg,
        r##"<g id="regions" stroke="#333333" stroke-width="1">"##
    );
    for region in &map.regions {
        let mut d = String::new();
        for (i, &[x, y]) in region.polygon.iter().enumerate() {
            let (px, py) = project(x, y);
            let _ = write!(
                d,
                "{}{},{} ",
                if i == 0 { "M" } else { "L" },
                num(px),
                num(py)
            );
        }
        d.push('Z');
        let id = escape(&region.id);
        let class = escape(&region.class);
        match report.row(&region.class) {
            Some(row) => {
                let value = metric.value(row);
                let (rgb, clamped) = scale.color(value);
                if clamped {
                    warnings.push(format!(
                        "region {}: {metric} {value} outside [{}, {}], clamped",
                        region.id, scale.domain.0, scale.domain.1
                    ));
                }
                let _ = writeln!(
                    svg,
                    r#"<path id="{id}" class="matched" data-class="{class}" data-value="{:.4}" fill="{}" d="{d}"><title>{}: {:.4}</title></path>"#,
                    value,
                    hex(rgb),
                    escape(&region.name),
                    value
                );
            }
            None => {
                let _ = writeln!(
                    svg,
                    r#"<path id="{id}" class="unmatched" data-class="{class}" fill="url(#hatch)" d="{d}"><title>{}: no data</title></path>"#,
                    escape(&region.name)
                );
            }
        }
    }
    let _ = writeln!(svg, "</g>");

    let (bar_top, bar_bottom) = (MARGIN + 20.0, MAP_H - MARGIN);
    let _ = writeln!(
        svg,
        r#"<g id="legend" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}">{}</text>"#,
        num(BAR_X),
        num(MARGIN + 8.0),
        metric
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="url(#legend-gradient)" stroke="#333333"/>"##,
        num(BAR_X),
        num(bar_top),
        num(BAR_W),
        num(bar_bottom - bar_top)
    );
    for (i, tick) in scale.ticks().iter().enumerate() {
        let y = bar_bottom - (bar_bottom - bar_top) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r##"<line class="tick" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#333333"/><text class="tick-label" x="{}" y="{}" data-value="{:.4}">{:.4}</text>"##,
            num(BAR_X + BAR_W),
            num(y),
            num(BAR_X + BAR_W + 5.0),
            num(y),
            num(BAR_X + BAR_W + 8.0),
            num(y + 4.0),
            tick,
            tick
        );
    }
    let _ = writeln!(svg, "</g>");
    for w in &warnings {
        let _ = writeln!(svg, "<!-- warning: {} -->", comment_text(w));
    }
    svg.push_str("</svg>\n");
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(svg)
}

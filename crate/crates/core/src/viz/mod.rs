//! SVG choropleth and CSV export of similarity reports.

mod color;
mod region;
mod svg;

pub use color::{hex, parse_hex, ColorScale, Metric, Rgb, DEFAULT_HIGH, DEFAULT_LOW};
pub use region::{Region, RegionMap};
pub use svg::{escape, render_choropleth};

use crate::similarity::SimilarityReport;

/// `class,euclidean,manhattan,cosine` with four decimals, reference row first.
pub fn export_csv(report: &SimilarityReport) -> String {
    report.to_csv()
}

//! Class prototypes and the cosine / Euclidean / Manhattan reference report.

mod metrics;
mod prototype;
mod report;

pub use metrics::{cosine, cosine_unclamped, dot, euclidean, l2_normalize, manhattan, norm};
pub use prototype::{class_prototypes, prototype, Prototype};
pub use report::{reference_report, ReportRow, SimilarityReport, CSV_HEADER};

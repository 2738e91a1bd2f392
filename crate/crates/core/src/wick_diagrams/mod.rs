//! Diagram tables, pairing enumeration and the diagram formula for moments
//! and cumulants of products of Hermite polynomials.

mod moments;
mod table;

pub use moments::{
    count_connected, count_diagrams, hermite_cumulant, hermite_cumulant_enumerated, hermite_moment,
    hermite_moment_enumerated, product_expectation, taqqu_diagram_bound, MOMENT_POINT_LIMIT,
};
pub use table::{enumerate_diagrams, enumerate_diagrams_with_limit, is_connected, Diagram, DiagramIter, DiagramTable, POINT_LIMIT};

//! Off-diagonal moment sums, their scaling bound and Hölder bookkeeping.

mod fourth;
mod holder;
mod lemma;

pub use fourth::{fourth_moment_bound, FourthMomentReport, PatternTerm};
pub use holder::{diagram_index_sum, holder_quantities, subset_splits, HolderQuantities, SubsetSplit};
pub use lemma::{bound_rhs, offdiag_sum, ratio_scan, BoundInstance, BoundReport, BoundRow, MAX_N, MAX_P};

/// True when the max over the larger-index half of `series` is at most
/// `factor` times the max over the smaller-index half.
pub fn no_upward_trend(series: &[f64], factor: f64) -> bool {
    if series.len() < 2 {
        return true;
    }
    let mid = series.len() / 2;
    let lo = series[..mid].iter().copied().fold(0.0, f64::max);
    let hi = series[mid..].iter().copied().fold(0.0, f64::max);
    hi <= factor * lo
}

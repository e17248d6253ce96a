//! Recurrent sets of lines: slices, thickened candidates, recurrence checks
//! and interval certificates for projections.

pub mod grid;
pub mod slice;
pub mod survival;
pub mod candidate;
pub mod check;
pub mod certify;

//! Atomic decomposition of tent functions, re-atoming at a smaller scale
//! and change of aperture.

mod aperture;
mod decompose;
mod ladder;
mod reatom;
mod split;

pub use aperture::{aperture_compare, grid_doubling_constant, ApertureReport};
pub use decompose::{
    atomic_decompose, dilation_factor, piece_whitney_lambda, reconstruct, verify_decomposition, DecomposeConfig,
    Decomposition, DecompositionReport, LevelSummary, PieceSummary, Term, TermChecks,
};
pub use ladder::{stopping_ladder, LadderLevel, StoppingLadder};
pub use reatom::{reatom, reatom_constants, ReatomConstants, Reatoming, REATOM_MARGIN};
pub use split::{base_distance, piece_key, support_splitter, Piece, SPLIT_KAPPA, SPLIT_MAX_LAYER};

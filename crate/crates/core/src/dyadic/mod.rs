//! Anchored dyadic grids and the layered cube cover of a region.

mod anchor;
mod cover;
mod cube;

pub use anchor::{boundary_denominators, draw_anchor, Anchor};
pub use cover::{
    build_cover, cover_diagnostics, grid_cubes_inside, CoverDiagnostics, DepthPolicy, DyadicCover,
    LayerDiagnostics, MAX_GRID_K,
};
pub use cube::{grid_index, AnchoredCube, MAX_LEVEL};

#[cfg(test)]
mod tests;

//! Core engine for interactive large-scale scatterplots.
//!
//! - [`data`]: columnar point tables, CSV ingestion, column statistics and
//!   distribution summaries.
//! - [`index`]: quadtree for extent queries, exact visible counts and
//!   nearest-point picking.
//! - [`selection`]: lasso and index selections plus set algebra.
//! - [`encoding`]: normalizers, color maps, size maps and defaults.
//! - [`view`]: cameras, density-adaptive opacity and synchronized view
//!   groups.
//! - [`wire`]: binary frames and control envelopes.
//! - [`raster`]: deterministic PNG rendering.

// `!(a > b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod encoding;
pub mod error;
pub mod index;
pub mod raster;
pub mod selection;
pub mod view;
pub mod wire;

pub use data::{ingest_csv, ChannelKind, Column, ColumnStats, PointTable};
pub use error::{Error, Result};
pub use index::{Extent, SpatialIndex};
pub use selection::{combine, lasso_select, query_select, CombineMode, LassoPolygon, SelectionSet};
pub use view::{Camera, ComposeGroup, ViewportPx};

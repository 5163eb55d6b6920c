//! Session service for the scatterplot engine.
//!
//! - [`session`]: the pure per-session protocol state machine
//! - [`hub`]: session registry with per-session serialized dispatch
//! - [`http`]: axum router with the `/ws` socket and static file serving

// `!(a > b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod hub;
pub mod http;
pub mod session;

pub use hub::{Hub, SessionHandle};
pub use session::{ClientId, Message, SelectionChange, Session, TOOLTIP_HISTOGRAM_BINS};

//! Exact symbolic kernel for the affine surfaces `yu = xP(x)`, `xv = uQ(u)`,
//! `yv = P(x)Q(u)` and their complete algebraic vector fields: chart
//! push-forwards, Lie-bracket certificates for the submodule construction,
//! explicit isomorphisms, and flow-based transitivity planning.

pub mod autoflow;
pub mod fields;
pub mod gauss;
pub mod ideal;
pub mod liecert;
pub mod numeric;
pub mod parse;
pub mod poly;
pub mod surface;

pub use gauss::GaussRat;
pub use poly::{Mono, MultiPoly, RatioPoly, Sym, UniPoly};
pub use surface::{AmbientField, ChartId, Point, Surface};

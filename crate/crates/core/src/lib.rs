//! Minimax recursions on Galton-Watson trees.
//!
//! Alternating min/max levels on a tree with offspring law `M` give the
//! one-step map `f = R∘R`, `R = 1 - G`, where `G` is the generating function
//! of `M`. `P(W_2n <= x) = f^n(x)` for i.i.d. uniform leaves.

pub mod analysis;
pub mod dd;
pub mod dist;
pub mod endogeny;
pub mod error;
pub mod jet;
pub mod mcsim;
pub mod scaling;
pub mod special;

pub use analysis::{
    find_fixed_points, limit_law, Atom, EndpointCriterion, FixedPointRecord, FixedPointSet,
    LimitLaw, Stability,
};
pub use dist::{DistSpec, OffspringDistribution, Truncation};
pub use endogeny::{decide_endogeny, EndogenyReport, Verdict};
pub use error::{Error, Result};
pub use jet::Jet;
pub use mcsim::{Boundary, SimConfig};
pub use scaling::{Precision, ScalingRegime};

//! Global sensitivity analysis toolkit.
//!
//! Variance-based indices (pick-freeze Sobol', extended FAST, binned main
//! effects), Shapley effects, the moment-independent delta index, accumulated
//! local effects, Morris elementary effects, derivative-based measures and
//! definitive screening designs, all driven by seeded, reproducible sampling.

pub mod ale;
pub mod converge;
pub mod curve;
pub mod delta;
pub mod design;
pub mod dgsm;
pub mod doe;
pub mod error;
pub mod io;
pub mod method;
pub mod model;
pub mod morris;
pub mod rng;
pub mod sample;
pub mod shapley;
pub mod space;
pub mod stats;
pub mod variance;

mod binning;

pub use curve::{CurveKind, EffectCurve};
pub use design::{DesignMatrix, RowOrigin};
pub use error::{Error, Result};
pub use method::Method;
pub use model::{builtin_truth, Builtin, Counted, ExternalModel, FnModel, Model, ModelHandle, TableModel};
pub use sample::{sample, Scheme};
pub use space::{InputSpace, MarginalDist};

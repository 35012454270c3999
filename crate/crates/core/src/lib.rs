//! Reconfiguration of polygonal chains in 3D: straightening, convexifying,
//! certified motion validation and locked examples.

pub mod arch;
pub mod barbed;
pub mod chain;
pub mod flips;
pub mod gen;
pub mod io;
pub mod locked;
pub mod error;
pub mod geom;
pub mod motion;
pub mod straighten;

pub use chain::{make_chain, ChainConfig, LinkLengths, Shape};
pub use error::{Error, Result};
pub use geom::Point;
pub use motion::{apply, pose_at, validate, Move, MotionPlan, ValidationPolicy, ValidationReport};

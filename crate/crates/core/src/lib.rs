//! Separation of the inner shell from the outer shell of double-layered
//! point clouds by simulated particle diffusion.
//!
//! Balls spawned inside the cloud random-walk with specular-plus-noise
//! reflections until they hit their collision or step budget, or cross an
//! escape sphere around the cloud. Points hit by any ball form the detected
//! inner layer; the number of escapes classifies the surface as watertight or
//! open.
//!
//! ```no_run
//! use shellsep::{synthetic, sim};
//!
//! let cloud = synthetic::generate_double_sphere(&synthetic::DoubleSphereSpec::closed(20_000, 20_000, 0))?;
//! let result = sim::run_simulation(&cloud, &sim::SimConfig { max_balls: 50_000, ..Default::default() })?;
//! println!("detected {} points, watertight = {}", result.inter_indices.len(), result.watertight);
//! # Ok::<(), shellsep::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod collision;
pub mod error;
pub mod geometry;
pub mod io;
pub mod kdtree;
pub mod metrics;
pub mod parallel;
pub mod rng;
pub mod sim;
pub mod synthetic;

pub use error::{Error, Result};
pub use geometry::{Label, PointCloud, Vec3};
pub use kdtree::SpatialIndex;
pub use sim::{run_simulation, SeparationResult, SimConfig};

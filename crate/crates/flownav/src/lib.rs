//! Deterministic LiDAR navigation stack: a quadrotor flies through dynamic
//! clutter using a change-aware sensing representation (distance map + point
//! flow) and an acceleration policy trained with PPO.
//!
//! The crate is organized around the data path:
//!
//! - [`world`] — geometric world, double-integrator kinematics, obstacle
//!   motion, ray and distance queries, termination rules.
//! - [`lidar`] — simulated sweeps and their encoding into the raycast grid,
//!   grayscale image, and 36×6 distance map.
//! - [`flow`] — point flow: resize, frame stacking, block-matching flow,
//!   sliding average, downsample, per-axis scaling.
//! - [`reward`] — state/goal/safety terms and the relative-motion reshaped
//!   distance field for dynamic obstacles.
//! - [`policy`] — the CNN+MLP actor-critic with hand-written forward and
//!   backward passes and a binary checkpoint format.
//! - [`env`] — composes the above into a steppable RL environment.
//! - [`ppo`] — rollout collection, GAE, clipped-surrogate updates, training.
//! - [`metrics`] — episode logs, evaluation metrics, benchmark grids.
//!
//! Everything is seeded: identical seeds give bit-identical worlds, scans,
//! rollouts, and training curves. See the `examples/` directory for runnable
//! entry points per capability, and the `flownav` binary for a thin CLI.

pub mod cli;
pub mod config;
pub mod env;
pub mod error;
pub mod flow;
pub mod geom;
pub mod image2d;
pub mod lidar;
pub mod metrics;
pub mod nn;
pub mod policy;
pub mod ppo;
pub mod reward;
pub mod world;

pub use error::{Error, Result};

//! Semi-implicit P1 finite element simulation of solid-state dewetting with a
//! thickness-dependent surface energy.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod film;
pub mod film2d;
pub mod film3d;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod profiles;
pub mod sparse;
pub mod wetting;

pub use error::{Error, Result};
pub use film::{FilmState, RunRecord, SimOptions, WeakForm};
pub use mesh::{IntervalMesh, TriMesh};
pub use wetting::WettingParams;

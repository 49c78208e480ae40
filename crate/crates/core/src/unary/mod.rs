//! RBS gate algebra, unary-amplitude states, data loaders and a full
//! statevector reference simulator.

mod circuit;
mod gate;
mod loader;
mod state;
mod statevector;

pub use circuit::{apply_circuit, Circuit};
pub use gate::RbsGate;
pub use loader::{
    build_loader, compute_loader_angles, load, loader_circuit, loader_schedule, LoaderAngles, LoaderLayout,
};
pub use state::{unit_tolerance, UnaryState};
pub use statevector::{apply_full_statevector, unary_restriction, MAX_FULL_WIDTH};


pub mod demo;
pub mod fixtures;
pub mod invariants;
pub mod io;
pub mod lmi;
pub mod model;
pub mod pde;
pub mod polymat;
pub mod subspace;
pub mod sim;
pub mod synthesis;

pub use model::{DetectionFilter, FaultSignature, FmiiModel, RoesserModel};
pub use subspace::Subspace;

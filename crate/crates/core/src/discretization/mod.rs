//! Piecewise-linear finite-element model of the beam.
//!
//! The clamped node is eliminated; tip masses and feedback gains sit on the
//! last node of each field, so the tip velocities of the continuous model are
//! exactly the last velocity entries of each block.

mod forcing;
mod generator;
mod initial;
mod system;

pub use crate::mesh::Mesh;
pub use forcing::Forcing;
pub use generator::{generator, GeneratorMatrix};
pub use initial::{mode_mix_terms, project_initial_data, InitialData, Preset};
pub use system::{
    assemble, assemble_scalar, scalar_matrices, BoundaryTraces, Model, SemiDiscreteSystem,
};

/// Same as [`Mesh::new`].
pub fn build_mesh(elements: usize, length: f64) -> crate::Result<Mesh> {
    Mesh::new(elements, length)
}

/// `(V_x(L), P_x(L), u, eta)` of a state vector.
pub fn boundary_traces(
    x: &[f64],
    system: &SemiDiscreteSystem,
) -> crate::Result<BoundaryTraces<f64>> {
    system.check_state_len(x.len())?;
    Ok(system.traces(x))
}

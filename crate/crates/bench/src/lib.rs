//! Shared fixtures for the kernel benchmarks.

use nalgebra::DVector;
use piezo_lab_core::{
    assemble, generator, project_initial_data, BeamParameters, GeneratorMatrix, InitialData, Mesh,
    Preset, SemiDiscreteSystem,
};

/// Default beam on `n` elements, its generator, and projected Gaussian data.
pub struct Fixture {
    pub system: SemiDiscreteSystem,
    pub generator: GeneratorMatrix,
    pub x0: DVector<f64>,
}

pub fn fixture(n: usize) -> Fixture {
    let params = BeamParameters::default();
    let mesh = Mesh::new(n, params.length).expect("valid mesh");
    let system = assemble(&mesh, &params).expect("default parameters are valid");
    let generator = generator(&system).expect("generator assembles");
    let x0 = project_initial_data(&InitialData::from(Preset::GaussianVelocity), &system)
        .expect("preset projects");
    Fixture {
        system,
        generator,
        x0,
    }
}

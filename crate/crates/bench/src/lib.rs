//! Shared fixtures for the kernel benchmarks.

use ep_core::elliptic::{assemble_coupled, BoundaryProfiles, CoupledSystem, LinearSystemSpec};
use ep_core::eos::{background_coefficients, StateConstants};
use ep_core::solver::{BoundaryData, PerturbationAmplitudes, RhsAssembler};
use ep_core::{
    sample_background, solve_background, Background2D, BackgroundParams, Grid2D, ScalarField,
    VectorField,
};

pub struct BenchFixture {
    pub bg2: Background2D,
    pub grid: Grid2D,
    pub boundary: BoundaryData,
    pub assembler: RhsAssembler,
}

pub fn fixture(n1: usize, n2: usize) -> BenchFixture {
    let mut params = BackgroundParams::uniform_fixture();
    params.e0 = 0.1;
    let bg = solve_background(&params, n1).unwrap();
    let grid = Grid2D::new(n1, n2, params.length).unwrap();
    let bg2 = sample_background(&bg, &grid).unwrap();
    let boundary = BoundaryData::build(&bg2, &grid, &PerturbationAmplitudes::uniform(0.01)).unwrap();
    let assembler = RhsAssembler::new(&bg2, &boundary).unwrap();
    BenchFixture {
        bg2,
        grid,
        boundary,
        assembler,
    }
}

pub fn coupled_system(fx: &BenchFixture) -> CoupledSystem {
    let sc = StateConstants::from(&fx.bg2.params);
    let coeffs = background_coefficients(&fx.bg2, &sc).unwrap();
    let spec = LinearSystemSpec {
        coeffs: &coeffs,
        f: &VectorField::zeros(&fx.grid),
        f1: &ScalarField::zeros(&fx.grid),
        g: vec![0.0; fx.grid.n2() + 1],
        psi_bd: BoundaryProfiles::zeros(&fx.grid),
        wall_flux: None,
        coercivity_pairs: 0,
        coercivity_seed: 1,
    };
    assemble_coupled(&spec).unwrap()
}

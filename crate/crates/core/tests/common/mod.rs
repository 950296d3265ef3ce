#![allow(dead_code)]

use std::sync::Arc;

use preqmc::fem::{Mesh, SolverOptions};
use preqmc::fields::FieldExpansion;
use preqmc::parametric::ParametricModel;
use preqmc::weights::{WeightFunctionSpec, WeightScheme};

pub const MU: f64 = 0.05;
pub const EPS: f64 = 0.1;

/// Point of evaluation of the QoI.
pub fn qoi_point(dim: usize) -> Vec<f64> {
    if dim == 1 {
        vec![0.5]
    } else {
        vec![0.5f64.sqrt(); 2]
    }
}

pub fn model(dim: usize, s: usize, alpha: f64, theta: f64, level: u32) -> ParametricModel {
    let fe = Arc::new(FieldExpansion::paper_family(dim, s, alpha, theta).unwrap());
    let mesh = Mesh::uniform(dim, level).unwrap();
    ParametricModel::new(fe, mesh, &qoi_point(dim), SolverOptions::default()).unwrap()
}

/// d = 2, s = 8, α = 1, θ = 2, h = 2⁻⁵.
pub fn desk_model() -> ParametricModel {
    model(2, 8, 1.0, 2.0, 5)
}

pub fn gaussian() -> WeightFunctionSpec {
    WeightFunctionSpec::gaussian(MU).unwrap()
}

/// Practical POD weights (w₁..w_s, z₁..z_s), or with w₀ prepended.
pub fn weights(model: &ParametricModel, include_w0: bool) -> WeightScheme {
    WeightScheme::practical(model.fields().norms(), &gaussian(), EPS, include_w0).unwrap()
}

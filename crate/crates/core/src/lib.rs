//! Front propagation in stratified infinite cylinders: diffuse
//! reaction-diffusion travelling waves, their sharp-interface limit and the
//! weighted variational functionals linking the two.

pub mod model;
pub mod numerics;
pub mod functionals;
pub mod speed;
pub mod conditions;
pub mod diffuse;
pub mod sharp;
pub mod harness;

use thiserror::Error;

/// Any failure of the library, for callers that do not need the module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Functional(#[from] functionals::FunctionalError),
    #[error(transparent)]
    Conditions(#[from] conditions::ConditionsError),
    #[error(transparent)]
    Diffuse(#[from] diffuse::DiffuseError),
    #[error(transparent)]
    Sharp(#[from] sharp::SharpError),
    #[error(transparent)]
    Harness(#[from] harness::HarnessError),
}

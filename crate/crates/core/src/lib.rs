pub mod cli;
pub mod ctrw;
pub mod error;
pub mod jump_intensity;
pub mod marginal_kernel;
pub mod operator_algebra;
pub mod option_engine;
pub mod path_law;
pub mod quadrature;
pub mod validation;

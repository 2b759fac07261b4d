pub mod cli;
pub mod error;
pub mod eta;
pub mod functionals;
pub mod solvers;
pub mod space;
pub mod theorems;

//! Numerical laboratory for the perturbed KdV equation
//! `∂ₜu = −∂ₓ(∂ₓ²u + f(u) − b(t,x)u)` and its modulated solitary waves.

pub mod effective;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod grid;
pub mod harness;
pub mod hessian;
pub mod lyapunov;
pub mod modulate;
pub mod potential;
pub mod profile;

pub use error::{Error, Result};
pub use grid::{Field, Grid};

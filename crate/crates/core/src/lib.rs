//! Steady-state analysis of the PH/MSP/1/∞ queue with a single exponential
//! vacation, solved through the roots of its characteristic equation.
//!
//! The pipeline is: validate a [`model::QueueModel`], truncate the kernel
//! families ([`kernels::KernelSet`]), locate the roots inside the unit disk
//! ([`roots::find_inner_roots`]), solve the boundary system and reconstruct
//! the queue-length distributions ([`solver`]). [`simulator`] provides an
//! independent discrete-event check and [`phfit`] builds PH arrival laws from
//! moment targets.

#![no_std]

extern crate alloc;

pub mod error;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod phfit;
pub mod random;
pub mod reference;
pub mod roots;
pub mod simulator;
pub mod solver;

pub use error::{Error, Result};

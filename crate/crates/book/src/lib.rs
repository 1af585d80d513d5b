//! The guide under `book/`, compiled so its code blocks run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod getting_started {}

#[doc = include_str!("../../../book/src/grids.md")]
pub mod grids {}

#[doc = include_str!("../../../book/src/potential.md")]
pub mod potential {}

#[doc = include_str!("../../../book/src/scheme.md")]
pub mod scheme {}

#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[doc = include_str!("../../../book/src/configuration.md")]
pub mod configuration {}

//! Reproducible experiments on Dirichlet domains of discrete groups of
//! hyperbolic isometries, with report and plot emitters and the `dirichlet`
//! command line.

pub mod cli;
pub mod cyclic;
pub mod example1;
pub mod example2;
pub mod fixtures;
pub mod genericity;
pub mod plot;
pub mod report;

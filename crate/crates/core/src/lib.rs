pub mod analysis;
pub mod cli;
pub mod dg;
pub mod kernel;
pub mod linalg;
pub mod poly;
pub mod quadrature;
pub mod space_fem;

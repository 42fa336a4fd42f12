
pub mod analysis;
pub mod design;
pub mod error;
pub mod exec;
pub mod fem;
pub mod field;
pub mod geometry;
pub mod ks;
pub mod mma;
pub mod optimizer;
pub mod problems;
pub mod sensitivity;

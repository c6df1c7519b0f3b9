//! Exact connected n-point functions of BKP tau-functions.

pub mod rational;
pub mod series;
pub mod affine;
pub mod fock;
pub mod table;
pub mod npoint;
pub mod lemma;
pub mod random;
pub mod verify;
pub mod cli;

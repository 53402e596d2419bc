//! Exact arithmetic for quaternion algebras with involution over towers of
//! valued fields.

pub mod brauer;
pub mod field;
pub mod herm;
pub mod quat;
pub mod scenario;
pub mod suites;
pub mod tower_forms;
pub mod unitary;

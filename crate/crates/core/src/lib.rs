//! Polynomial optimization via moment and sum-of-squares relaxations.

pub mod certify;
pub mod fixtures;
pub mod polyring;
pub mod relax;

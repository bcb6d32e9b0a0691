//! Ball enumeration, coset enumeration and low-index subgroups.

pub mod ball;

pub use ball::{Ball, BallError, BallLimits, BallStats, OUT_OF_BALL};
pub mod coset;

pub use coset::{todd_coxeter, CosetError, CosetTable};
pub mod low_index;

pub use coset::UNDEFINED;
pub use low_index::{low_index_subgroups, LowIndexError, SubgroupClass};

#![allow(dead_code)]

pub mod gradcheck;
pub mod per;
pub mod targets;
pub mod variation;
pub mod stats;

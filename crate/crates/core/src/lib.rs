//! Transfer from single-player to two-player byte-state games under self-play
//! double DQN, with RAM-complexity analysis and reporting.

pub mod dqn;
pub mod envcore;
pub mod neuralnet;
pub mod replay;
pub mod metrics;
pub mod ramscope;
pub mod trainer;

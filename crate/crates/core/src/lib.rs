//! Pieceable fault-tolerant CNOTs between the Steane [[7,1,3]] and
//! Reed-Muller [[15,1,3]] codes: stabilizer simulation, noisy exRec Monte
//! Carlo, lookup and neural-network decoders, and pseudo-threshold fitting.

pub mod circuit;
pub mod codes;
pub mod decoders;
pub mod ec;
pub mod error;
pub mod exrec;
pub mod frame;
pub mod ft;
pub mod logical;
pub mod nn;
pub mod noise;
pub mod parallel;
pub mod pauli;
pub mod pieceable;
pub mod sampling;
pub mod sim;
pub mod tableau;
pub mod threshold;

pub use error::{Error, Result};

pub mod error;
pub mod exponent;
pub mod gallager;
pub mod optim;
pub mod source;
pub mod tce_binary;
pub mod tce_general;
pub mod variable_rate;
pub mod simulator;
pub mod cli;

pub use error::{Error, Result};
pub use exponent::{Argmax, ExponentResult};
pub use source::JointSource;

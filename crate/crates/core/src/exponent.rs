use serde::Serialize;

use crate::optim::OptimizerTrace;
use crate::tce_general::MiddleMinimizer;

/// Threshold used when deciding whether an exponent is strictly positive.
pub const POSITIVITY_THRESHOLD: f64 = 1e-9;

/// Where an exponent's optimum was attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Argmax {
    /// Fixed-rate bound: the optimizing (ρ, s).
    RhoS { rho: f64, s: f64 },
    /// Variable-rate bound: (ρ, s) together with the optimal per-letter rates.
    VariableRate { rho: f64, s: f64, rates: Vec<f64> },
    /// Binary type-enumeration bound: the optimizing s.
    S { s: f64 },
    /// General type-enumeration bound: s and every global minimizer of the
    /// middle problem over the auxiliary Y-marginal.
    General { s: f64, minimizers: Vec<MiddleMinimizer> },
}

/// An exponent value, nats, with the parameters that achieve it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentResult {
    /// May be `+inf`, in which case `diverged` is set.
    pub value: f64,
    pub argmax: Argmax,
    pub diverged: bool,
    pub trace: Option<OptimizerTrace>,
}

impl ExponentResult {
    pub fn is_positive(&self) -> bool {
        self.value > POSITIVITY_THRESHOLD
    }

    pub fn rho(&self) -> Option<f64> {
        match self.argmax {
            Argmax::RhoS { rho, .. } | Argmax::VariableRate { rho, .. } => Some(rho),
            _ => None,
        }
    }

    pub fn s(&self) -> f64 {
        match self.argmax {
            Argmax::RhoS { s, .. }
            | Argmax::VariableRate { s, .. }
            | Argmax::S { s }
            | Argmax::General { s, .. } => s,
        }
    }

    /// The same optimum with `value + t`; used for E2 = E1 + T.
    pub(crate) fn shifted(mut self, t: f64) -> Self {
        self.value += t;
        self
    }
}

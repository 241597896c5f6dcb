use serde::{Deserialize, Serialize};

/// A value with its one-standard-deviation uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }

    /// Sum with uncertainties combined in quadrature.
    pub fn quadrature_sum<I: IntoIterator<Item = Measured>>(items: I) -> Self {
        let (value, var) = items.into_iter().fold((0.0, 0.0), |(v, s2), m| {
            (v + m.value, s2 + m.sigma * m.sigma)
        });
        Self {
            value,
            sigma: var.sqrt(),
        }
    }
}

impl std::fmt::Display for Measured {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{:.*} ± {:.*}", p, self.value, p, self.sigma),
            None => write!(f, "{} ± {}", self.value, self.sigma),
        }
    }
}

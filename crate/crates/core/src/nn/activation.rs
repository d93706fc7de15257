use serde::{Deserialize, Serialize};

/// Exponent arguments are clamped to this magnitude before `exp`.
const EXP_CLAMP: f64 = 500.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Sigmoid,
    Tanh,
    #[serde(alias = "ReLU")]
    Relu,
    Identity,
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z.clamp(-EXP_CLAMP, EXP_CLAMP)).exp())
}

impl ActivationKind {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => sigmoid(z),
            ActivationKind::Tanh => z.clamp(-EXP_CLAMP, EXP_CLAMP).tanh(),
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::Identity => z,
        }
    }

    /// dφ/dz evaluated at the pre-activation `z`. ReLU uses 0 at the kink.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            ActivationKind::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            ActivationKind::Tanh => {
                let t = self.apply(z);
                1.0 - t * t
            }
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Identity => 1.0,
        }
    }

    pub fn apply_vec(self, z: &[f64]) -> Vec<f64> {
        z.iter().map(|&v| self.apply(v)).collect()
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Self::Sigmoid),
            "tanh" => Ok(Self::Tanh),
            "relu" => Ok(Self::Relu),
            "identity" | "linear" => Ok(Self::Identity),
            _ => Err(crate::Error::Config(format!("unknown activation `{s}`"))),
        }
    }
}

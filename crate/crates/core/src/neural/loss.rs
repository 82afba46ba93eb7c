use serde::{Deserialize, Serialize};

/// Training loss for a scalar predictor and a ±1 label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
#[derive(Default)]
pub enum Loss {
    /// `(y - f)^2`, gradient `-2 (y - f)`.
    #[default]
    Square,
    /// `(1 - c y ybar)(1 - y f)_+` with `ybar` the batch label mean.
    /// `radius` bounds the second-layer norm in the layerwise trainer.
    Covariance { c: f64, radius: f64 },
    /// `(1 - y f)_+`.
    Hinge,
}

impl Loss {
    pub fn covariance() -> Self {
        Loss::Covariance {
            c: 2.0,
            radius: 10.0,
        }
    }

    pub fn value(&self, f: f64, y: f64, ybar: f64) -> f64 {
        match *self {
            Loss::Square => (y - f) * (y - f),
            Loss::Covariance { c, .. } => (1.0 - c * y * ybar) * (1.0 - y * f).max(0.0),
            Loss::Hinge => (1.0 - y * f).max(0.0),
        }
    }

    /// Derivative with respect to `f`. The hinge kink at `y f = 1` takes the
    /// zero branch.
    pub fn derivative(&self, f: f64, y: f64, ybar: f64) -> f64 {
        match *self {
            Loss::Square => -2.0 * (y - f),
            Loss::Covariance { c, .. } => {
                if y * f < 1.0 {
                    -(1.0 - c * y * ybar) * y
                } else {
                    0.0
                }
            }
            Loss::Hinge => {
                if y * f < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether the loss reads the batch label mean.
    pub fn uses_label_mean(&self) -> bool {
        matches!(self, Loss::Covariance { .. })
    }
}

/// `sign(z) max(|z| - lambda, 0)`.
pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Componentwise [`soft_threshold`] in place.
pub fn soft_threshold_slice(z: &mut [f64], lambda: f64) {
    for v in z {
        *v = soft_threshold(*v, lambda);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_examples() {
        assert!((soft_threshold(0.7, 0.5) - 0.2).abs() < 1e-15);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-0.8, 0.5), -0.8 + 0.5);
        let mut v = [1.0, -2.0, 0.1];
        soft_threshold_slice(&mut v, 0.5);
        assert_eq!(v, [0.5, -1.5, 0.0]);
    }

    #[test]
    fn covariance_reduces_to_hinge_at_zero_mean() {
        let l = Loss::covariance();
        assert_eq!(l.value(0.5, 1.0, 0.0), 0.5);
        assert_eq!(l.value(0.5, 1.0, 0.0), Loss::Hinge.value(0.5, 1.0, 0.0));
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-6;
        for loss in [Loss::Square, Loss::covariance(), Loss::Hinge] {
            for &(f, y, ybar) in &[(0.3, 1.0, 0.1), (-0.4, -1.0, -0.2), (2.0, -1.0, 0.3)] {
                let num = (loss.value(f + h, y, ybar) - loss.value(f - h, y, ybar)) / (2.0 * h);
                assert!((num - loss.derivative(f, y, ybar)).abs() < 1e-6, "{loss:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn scaling_identity(z in -10.0f64..10.0, lambda in 0.0f64..5.0, s in 1e-3f64..10.0) {
            let lhs = soft_threshold(s * z, s * lambda);
            let rhs = s * soft_threshold(z, lambda);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn covariance_nonnegative(f in -5.0f64..5.0, pos in any::<bool>(), ybar in -0.49f64..0.49) {
            let y = if pos { 1.0 } else { -1.0 };
            prop_assert!(Loss::covariance().value(f, y, ybar) >= 0.0);
        }
    }
}

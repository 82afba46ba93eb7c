use serde::{Deserialize, Serialize};

use super::bias::BiasVector;
use super::dist::InputDistribution;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Names accepted by [`build_named_distribution`].
pub const NAMED_DISTRIBUTIONS: &[&str] = &[
    "uniform",
    "slice",
    "product",
    "bias-mixture",
    "slice-mixture",
    "tied-mixture",
    "random-bias-mixture",
];

/// A named distribution family plus its parameters, as written in configs.
///
/// * `uniform`, `slice`: no parameters.
/// * `product`: `D_mu` with constant bias `mu` (required).
/// * `bias-mixture`: `1/2 D_mu + 1/2 uniform`, `mu` defaults to `1 - 2/d`.
/// * `slice-mixture`: `1/2 D_mu + 1/2 slice`, `mu` defaults to `1 - 2/d`.
/// * `tied-mixture`: `1/2 uniform + 1/2 tied(support)`; `support` required.
/// * `random-bias-mixture`: draws `mu ~ Unif[-1,1]^d` once, then
///   `1/2 D_mu + 1/2 uniform`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// 0-based coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<usize>>,
}

impl DistributionSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn with_support(mut self, support: Vec<usize>) -> Self {
        self.support = Some(support);
        self
    }

    /// Parameter checks that need no dimension or generator.
    pub fn validate(&self) -> Result<()> {
        if !NAMED_DISTRIBUTIONS.contains(&self.name.as_str()) {
            return Err(Error::arg(format!(
                "unknown distribution `{}` (known: {})",
                self.name,
                NAMED_DISTRIBUTIONS.join(", ")
            )));
        }
        if let Some(mu) = self.mu {
            if !(mu.is_finite() && mu.abs() <= 1.0) {
                return Err(Error::arg(format!("mu = {mu} outside [-1, 1]")));
            }
        }
        match self.name.as_str() {
            "product" if self.mu.is_none() => Err(Error::arg("`product` needs `mu`")),
            "tied-mixture" if self.support.is_none() => {
                Err(Error::arg("`tied-mixture` needs `support`"))
            }
            _ => Ok(()),
        }
    }
}

/// Builds a named distribution on `{-1,+1}^d`. Only `random-bias-mixture`
/// consumes the generator.
pub fn build_named_distribution(
    spec: &DistributionSpec,
    d: usize,
    rng: &mut Rng,
) -> Result<InputDistribution> {
    spec.validate()?;
    if d == 0 {
        return Err(Error::arg("dimension must be positive"));
    }
    let product = |mu: f64| BiasVector::constant(d, mu).map(InputDistribution::product);
    let half = |a: InputDistribution, b: InputDistribution| {
        InputDistribution::mixture(vec![(0.5, a), (0.5, b)])
    };
    let df = d as f64;
    match spec.name.as_str() {
        "uniform" => InputDistribution::uniform(d),
        "slice" => InputDistribution::slice(d),
        "product" => product(spec.mu.unwrap_or_default()),
        "bias-mixture" => half(
            product(spec.mu.unwrap_or(1.0 - 2.0 / df))?,
            InputDistribution::uniform(d)?,
        ),
        "slice-mixture" => half(
            product(spec.mu.unwrap_or(1.0 - 2.0 / df))?,
            InputDistribution::slice(d)?,
        ),
        "tied-mixture" => half(
            InputDistribution::uniform(d)?,
            InputDistribution::tied(d, spec.support.clone().unwrap_or_default())?,
        ),
        "random-bias-mixture" => half(
            InputDistribution::product(BiasVector::random(d, rng)?),
            InputDistribution::uniform(d)?,
        ),
        _ => unreachable!("validated above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn fixed_bias_mixture_layout() {
        let dist = build_named_distribution(
            &DistributionSpec::named("bias-mixture").with_mu(0.96),
            50,
            &mut seeded(0),
        )
        .unwrap();
        let InputDistribution::Mixture(m) = &dist else {
            panic!("expected a mixture");
        };
        assert_eq!(m.components().len(), 2);
        assert_eq!(m.components()[0].0, 0.5);
        assert_eq!(
            m.components()[0].1,
            InputDistribution::product(BiasVector::constant(50, 0.96).unwrap())
        );
        assert_eq!(m.components()[1].1, InputDistribution::uniform(50).unwrap());
    }

    #[test]
    fn slice_mixture_default_bias() {
        let dist =
            build_named_distribution(&DistributionSpec::named("slice-mixture"), 4, &mut seeded(0))
                .unwrap();
        let InputDistribution::Mixture(m) = &dist else {
            panic!("expected a mixture");
        };
        assert_eq!(
            m.components()[0].1,
            InputDistribution::product(BiasVector::constant(4, 0.5).unwrap())
        );
        assert_eq!(m.components()[1].1, InputDistribution::slice(4).unwrap());
    }

    #[test]
    fn tied_mixture_support_points_agree() {
        let dist = build_named_distribution(
            &DistributionSpec::named("tied-mixture").with_support(vec![0, 1]),
            3,
            &mut seeded(0),
        )
        .unwrap();
        let InputDistribution::Mixture(m) = &dist else {
            panic!("expected a mixture");
        };
        let batch = m.components()[1].1.sample(&mut seeded(1), 200);
        assert!(batch.rows().all(|r| r[0] == r[1]));
    }

    #[test]
    fn unknown_name_and_missing_params() {
        let mut rng = seeded(0);
        assert!(build_named_distribution(&DistributionSpec::named("nope"), 4, &mut rng).is_err());
        assert!(
            build_named_distribution(&DistributionSpec::named("product"), 4, &mut rng).is_err()
        );
        assert!(
            build_named_distribution(&DistributionSpec::named("tied-mixture"), 4, &mut rng)
                .is_err()
        );
    }
}

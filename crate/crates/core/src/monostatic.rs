//! Reference point for a sensing receiver that also knows the input.
//!
//! With `X` known at the estimator the distortion floor is
//! `E[Var(S|X,Z)]`, and the rate is `max I(X;Y|S)` under the power budget.

use crate::channel::ChannelModel;
use crate::classic::{capacity, capacity_with_cost, CapacityConfig, CapacityResult};
use crate::error::{Error, Result};
use crate::prob::{DiscreteDistribution, JointTable, TableMode};

#[derive(Debug, Clone, PartialEq)]
pub struct MonostaticReference {
    pub rate: CapacityResult,
    /// `E[Var(S|X,Z)]` under the rate-optimal input.
    pub distortion: f64,
}

/// `max I(X;Y|S)` subject to `E[X²] ≤ budget` when a budget is given.
///
/// `S` is independent of `X`, so `I(X;Y|S) = I(X;(Y,S))` and the composite
/// kernel `p(y,s|x)` feeds the classical solver directly.
pub fn monostatic_rate(
    channel: &ChannelModel,
    power_budget: Option<f64>,
    config: &CapacityConfig,
) -> Result<CapacityResult> {
    let k = channel.kernels();
    let kernel = JointTable::from_parts(
        vec![
            channel.input_alphabet().clone(),
            crate::prob::Alphabet::new(k.ny * k.ns)?,
        ],
        k.ys.clone(),
        TableMode::Conditional { given: vec![0] },
    );
    match power_budget {
        None => capacity(&kernel, config),
        Some(b) => {
            let cost: Vec<f64> = channel.input_values().iter().map(|x| x * x).collect();
            capacity_with_cost(&kernel, &cost, b, config)
        }
    }
}

/// `Σ_x p(x) Σ_z p(z|x) Var(S | X=x, Z=z)`.
pub fn monostatic_distortion(channel: &ChannelModel, input: &DiscreteDistribution) -> Result<f64> {
    let k = channel.kernels();
    if input.len() != k.nx {
        return Err(Error::Shape(format!(
            "input has {} entries for {} channel inputs",
            input.len(),
            k.nx
        )));
    }
    let s = channel.state_values();
    let mut total = 0.0;
    for (x, px) in input.mass().iter().enumerate() {
        if *px <= 0.0 {
            continue;
        }
        for z in 0..k.nz {
            let row = &k.zs[(x * k.nz + z) * k.ns..(x * k.nz + z + 1) * k.ns];
            let mass: f64 = row.iter().sum();
            if mass <= 0.0 {
                continue;
            }
            let mean = row.iter().zip(s).map(|(p, v)| p * v).sum::<f64>() / mass;
            let var: f64 = row.iter().zip(s).map(|(p, v)| p * (v - mean) * (v - mean)).sum();
            total += px * var;
        }
    }
    Ok(total)
}

/// Rate-optimal input and the distortion floor evaluated under it.
pub fn monostatic_reference(
    channel: &ChannelModel,
    power_budget: Option<f64>,
    config: &CapacityConfig,
) -> Result<MonostaticReference> {
    let rate = monostatic_rate(channel, power_budget, config)?;
    let distortion = monostatic_distortion(channel, &rate.input_dist)?;
    Ok(MonostaticReference { rate, distortion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{discretize_gaussian, GaussianSpec};
    use crate::prob::Alphabet;

    fn sensing_channel(kz: Vec<f64>) -> ChannelModel {
        let x = Alphabet::with_values(vec![-1.0, 1.0]).unwrap();
        let s = Alphabet::with_values(vec![-1.0, 1.0]).unwrap();
        let prior = DiscreteDistribution::new(s.clone(), vec![0.3, 0.7]).unwrap();
        let ky = JointTable::conditional(
            vec![x.clone(), s.clone(), Alphabet::new(2).unwrap()],
            vec![0.9, 0.1, 0.8, 0.2, 0.1, 0.9, 0.3, 0.7],
            vec![0, 1],
        )
        .unwrap();
        let kz = JointTable::conditional(vec![x, s, Alphabet::new(2).unwrap()], kz, vec![0, 1]).unwrap();
        ChannelModel::state_dependent(prior, ky, kz).unwrap()
    }

    #[test]
    fn noiseless_sensing_has_no_distortion() {
        let ch = sensing_channel(vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        let r = monostatic_reference(&ch, None, &CapacityConfig::default()).unwrap();
        assert!(r.distortion.abs() < 1e-15);
    }

    #[test]
    fn uninformative_sensing_leaves_prior_variance() {
        let ch = sensing_channel(vec![0.4, 0.6, 0.4, 0.6, 0.5, 0.5, 0.5, 0.5]);
        let r = monostatic_reference(&ch, None, &CapacityConfig::default()).unwrap();
        let var = ch.state_prior().variance().unwrap();
        assert!((r.distortion - var).abs() < 1e-14);
    }

    #[test]
    fn tiny_budget_leaves_little_rate() {
        let spec = GaussianSpec::new(1.0, 1.0, 2.0, 10.0).with_grids(9, 9, 17, 17);
        let ch = discretize_gaussian(&spec).unwrap();
        let r = monostatic_rate(&ch, Some(1e-4), &CapacityConfig::default()).unwrap();
        assert!(r.capacity < 1e-3);
    }

    #[test]
    fn very_noisy_link_has_little_rate() {
        let spec = GaussianSpec::new(1.0, 1e6, 2.0, 10.0).with_grids(9, 9, 17, 17);
        let ch = discretize_gaussian(&spec).unwrap();
        let r = monostatic_rate(&ch, Some(10.0), &CapacityConfig::default()).unwrap();
        assert!(r.capacity < 1e-3);
    }
}

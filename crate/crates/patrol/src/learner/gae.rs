//! Generalized advantage estimation over one finite-horizon episode.

/// GAE(γ, λ) advantages for a single episode.
///
/// `rewards[t]` and `values[t]` run over the episode's steps; the value
/// after the final step is zero because the shift simply ends. λ = 0
/// reduces to the one-step TD advantage, λ = 1 to the discounted
/// Monte-Carlo return minus the value baseline.
pub fn gae_advantages(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), values.len());
    let steps = rewards.len();
    let mut advantages = vec![0.0; steps];
    let mut carry = 0.0;
    for t in (0..steps).rev() {
        let next_value = if t + 1 < steps { values[t + 1] } else { 0.0 };
        let delta = rewards[t] + gamma * next_value - values[t];
        carry = delta + gamma * lambda * carry;
        advantages[t] = carry;
    }
    advantages
}

/// Discounted Monte-Carlo advantage (return minus baseline); what GAE
/// degenerates to at λ = 1, and the estimator used when GAE is disabled.
pub fn monte_carlo_advantages(rewards: &[f64], values: &[f64], gamma: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), values.len());
    let steps = rewards.len();
    let mut advantages = vec![0.0; steps];
    let mut ret = 0.0;
    for t in (0..steps).rev() {
        ret = rewards[t] + gamma * ret;
        advantages[t] = ret - values[t];
    }
    advantages
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAMMA: f64 = 0.9;

    // A 3-step synthetic trajectory, worked through by hand.
    const REWARDS: [f64; 3] = [1.0, -2.0, 3.0];
    const VALUES: [f64; 3] = [0.5, 1.5, -0.5];

    fn td_deltas() -> [f64; 3] {
        [
            REWARDS[0] + GAMMA * VALUES[1] - VALUES[0],
            REWARDS[1] + GAMMA * VALUES[2] - VALUES[1],
            REWARDS[2] - VALUES[2],
        ]
    }

    #[test]
    fn lambda_zero_is_one_step_td() {
        let adv = gae_advantages(&REWARDS, &VALUES, GAMMA, 0.0);
        let deltas = td_deltas();
        for (a, d) in adv.iter().zip(&deltas) {
            assert!((a - d).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_one_is_monte_carlo_minus_baseline() {
        let adv = gae_advantages(&REWARDS, &VALUES, GAMMA, 1.0);
        // Brute-force discounted returns.
        let returns = [
            REWARDS[0] + GAMMA * REWARDS[1] + GAMMA * GAMMA * REWARDS[2],
            REWARDS[1] + GAMMA * REWARDS[2],
            REWARDS[2],
        ];
        for t in 0..3 {
            assert!((adv[t] - (returns[t] - VALUES[t])).abs() < 1e-12);
        }
        let mc = monte_carlo_advantages(&REWARDS, &VALUES, GAMMA);
        for t in 0..3 {
            assert!((adv[t] - mc[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn intermediate_lambda_matches_expanded_sum() {
        // Brute force: A_t = Σ_k (γλ)^k δ_{t+k}.
        let lambda = 0.7;
        let deltas = td_deltas();
        let adv = gae_advantages(&REWARDS, &VALUES, GAMMA, lambda);
        for t in 0..3 {
            let mut expected = 0.0;
            for k in 0..(3 - t) {
                expected += (GAMMA * lambda).powi(k as i32) * deltas[t + k];
            }
            assert!((adv[t] - expected).abs() < 1e-12);
        }
    }
}

//! Position update rules. Each is a pure function of its inputs and the
//! pre-drawn [`DecayDraws`]; every returned coordinate lies in `[0,1]`.

use super::DecayDraws;

pub fn clip_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn replace_at(position: &[f64], source: &[f64], indices: &[usize]) -> Vec<f64> {
    let mut out = position.to_vec();
    for &j in indices {
        out[j] = source[j];
    }
    out
}

/// Alpha decay: the coordinates in `alpha_indices` are taken from the best particle.
pub fn alpha_decay_update(position: &[f64], best: &[f64], draws: &DecayDraws) -> Vec<f64> {
    replace_at(position, best, &draws.alpha_indices)
}

/// Gamma decay: the coordinates in `gamma_indices` are taken from a neighbor.
pub fn gamma_decay_update(position: &[f64], neighbor: &[f64], draws: &DecayDraws) -> Vec<f64> {
    replace_at(position, neighbor, &draws.gamma_indices)
}

/// `x + (tau1 * best - tau2 * center) / max(stability, eps)`, clipped.
pub fn beta_decay_update_1(
    position: &[f64],
    best: &[f64],
    center: &[f64],
    stability: f64,
    draws: &DecayDraws,
    sl_epsilon: f64,
) -> Vec<f64> {
    let scale = stability.max(sl_epsilon);
    position
        .iter()
        .zip(best)
        .zip(center)
        .map(|((x, b), c)| clip_unit(x + (draws.tau1 * b - draws.tau2 * c) / scale))
        .collect()
}

/// `x + (tau3 * best - tau4 * neighbor)`, clipped.
pub fn beta_decay_update_2(
    position: &[f64],
    best: &[f64],
    neighbor: &[f64],
    draws: &DecayDraws,
) -> Vec<f64> {
    position
        .iter()
        .zip(best)
        .zip(neighbor)
        .map(|((x, b), n)| clip_unit(x + (draws.tau3 * b - draws.tau4 * n)))
        .collect()
}

pub fn random_walk_update(position: &[f64], draws: &DecayDraws) -> Vec<f64> {
    position
        .iter()
        .zip(&draws.jump)
        .map(|(x, j)| clip_unit(x + j))
        .collect()
}

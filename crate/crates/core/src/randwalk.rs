//! Conductance-weighted random walk: `p(x, y) = c_xy / c(x)`.
//!
//! The escape probability `P[x → o]` (hit the origin before returning to the
//! start) is computed exactly from the harmonic extension with boundary
//! values 1 at the origin and 0 at the start vertex, and estimated by Monte
//! Carlo with reproducible per-excursion random streams.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::numkernel::{spd_solve, SymMatrix};

/// Default per-excursion step cap.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

pub fn transition_prob(net: &Network, x: usize, y: usize) -> Result<f64> {
    net.check_index(y)?;
    Ok(net.conductance(x, y) / net.total_conductance(x)?)
}

/// Row-stochastic transition matrix.
pub fn transition_matrix(net: &Network) -> DMatrix<f64> {
    let n = net.len();
    let mut p = DMatrix::zeros(n, n);
    for x in 0..n {
        let c = net.neighbors(x).iter().map(|&(_, c)| c).sum::<f64>();
        for &(y, cxy) in net.neighbors(x) {
            p[(x, y)] = cxy / c;
        }
    }
    p
}

fn require_non_origin(net: &Network, x: usize) -> Result<()> {
    net.check_index(x)?;
    if x == net.origin() {
        return Err(Error::InvalidArgument(
            "escape probability needs a start vertex other than the origin".into(),
        ));
    }
    Ok(())
}

/// `P[x → o]` via one SPD solve on `G \ {o, x}`.
pub fn escape_prob_exact(net: &Network, x: usize) -> Result<f64> {
    require_non_origin(net, x)?;
    let o = net.origin();
    let interior: Vec<usize> = (0..net.len()).filter(|&z| z != o && z != x).collect();
    let mut slot = vec![usize::MAX; net.len()];
    for (k, &z) in interior.iter().enumerate() {
        slot[z] = k;
    }

    let h = if interior.is_empty() {
        DVector::zeros(0)
    } else {
        let m = interior.len();
        let mut a = DMatrix::zeros(m, m);
        let mut rhs = DVector::zeros(m);
        for (k, &z) in interior.iter().enumerate() {
            for &(w, c) in net.neighbors(z) {
                a[(k, k)] += c;
                if w == o {
                    rhs[k] += c;
                } else if w != x {
                    a[(k, slot[w])] -= c;
                }
            }
        }
        spd_solve(&SymMatrix::new(a)?, &rhs)?
    };

    let cx = net.total_conductance(x)?;
    Ok(net
        .neighbors(x)
        .iter()
        .map(|&(y, c)| {
            let hy = if y == o {
                1.0
            } else {
                h[slot[y]]
            };
            c / cx * hy
        })
        .sum())
}

/// Exact and Monte Carlo escape probabilities for one start vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkEstimate {
    pub x: usize,
    pub exact: f64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub samples: u64,
    pub seed: u64,
    /// Excursions that hit the step cap (counted as non-escapes).
    pub capped: u64,
}

impl WalkEstimate {
    /// `|mc − exact|` in units of the standard error (0 when both agree exactly).
    pub fn deviation_sigma(&self) -> f64 {
        let d = (self.mc_estimate - self.exact).abs();
        if d == 0.0 {
            0.0
        } else if self.mc_stderr == 0.0 {
            f64::INFINITY
        } else {
            d / self.mc_stderr
        }
    }

    pub fn within_sigma(&self, k: f64) -> bool {
        self.deviation_sigma() <= k
    }

    /// Deviation between 3σ and 4σ is flagged, not failed.
    pub fn flagged(&self) -> bool {
        let s = self.deviation_sigma();
        s > 3.0 && s <= 4.0
    }

    pub fn to_json(&self, net: &Network) -> Value {
        json!({
            "x": net.id(self.x),
            "exact": self.exact,
            "mc_estimate": self.mc_estimate,
            "mc_stderr": self.mc_stderr,
            "samples": self.samples,
            "seed": self.seed,
            "capped": self.capped,
            "deviation_sigma": self.deviation_sigma(),
            "flagged": self.flagged(),
        })
    }
}

struct Sampler {
    cumulative: Vec<Vec<(f64, usize)>>,
}

impl Sampler {
    fn new(net: &Network) -> Self {
        let cumulative = (0..net.len())
            .map(|x| {
                let mut acc = 0.0;
                net.neighbors(x)
                    .iter()
                    .map(|&(y, c)| {
                        acc += c;
                        (acc, y)
                    })
                    .collect()
            })
            .collect();
        Sampler { cumulative }
    }

    fn step(&self, at: usize, rng: &mut impl Rng) -> usize {
        let row = &self.cumulative[at];
        let total = row.last().map_or(0.0, |&(c, _)| c);
        let r = rng.random::<f64>() * total;
        let k = row.partition_point(|&(c, _)| c <= r);
        row[k.min(row.len() - 1)].1
    }
}

enum Excursion {
    Escaped,
    Returned,
    Capped,
}

fn excursion(sampler: &Sampler, start: usize, origin: usize, cap: u64, rng: &mut impl Rng) -> Excursion {
    let mut at = start;
    let mut steps = 0u64;
    loop {
        if steps >= cap {
            return Excursion::Capped;
        }
        at = sampler.step(at, rng);
        steps += 1;
        if at == origin {
            return Excursion::Escaped;
        }
        if at == start {
            return Excursion::Returned;
        }
    }
}

/// Monte Carlo estimate with the default step cap.
pub fn escape_prob_mc(net: &Network, x: usize, samples: u64, seed: u64) -> Result<WalkEstimate> {
    escape_prob_mc_capped(net, x, samples, seed, DEFAULT_STEP_CAP)
}

/// Monte Carlo estimate; excursion `i` draws from ChaCha8 stream `i` of `seed`,
/// so results do not depend on thread scheduling.
pub fn escape_prob_mc_capped(
    net: &Network,
    x: usize,
    samples: u64,
    seed: u64,
    cap: u64,
) -> Result<WalkEstimate> {
    require_non_origin(net, x)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let exact = escape_prob_exact(net, x)?;
    let sampler = Sampler::new(net);
    let origin = net.origin();
    let (escaped, capped) = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            match excursion(&sampler, x, origin, cap, &mut rng) {
                Excursion::Escaped => (1u64, 0u64),
                Excursion::Returned => (0, 0),
                Excursion::Capped => (0, 1),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let p = escaped as f64 / samples as f64;
    if capped > 0 {
        return Err(Error::CapHit {
            capped,
            samples,
            partial: p,
        });
    }
    Ok(WalkEstimate {
        x,
        exact,
        mc_estimate: p,
        mc_stderr: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        seed,
        capped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{ConductanceProfile, Family};
    use approx::assert_relative_eq;

    fn p3() -> Network {
        Network::new([(0, 1, 1.0), (1, 2, 1.0)], 0).unwrap()
    }

    #[test]
    fn transition_examples() {
        let net = p3();
        assert_eq!(transition_prob(&net, 1, 0).unwrap(), 0.5);
        assert_eq!(transition_prob(&net, 2, 1).unwrap(), 1.0);
        let w = Network::new([(0, 1, 3.0), (1, 2, 1.0)], 0).unwrap();
        assert_eq!(transition_prob(&w, 1, 0).unwrap(), 0.75);
        assert!(transition_prob(&w, 1, 5).is_err());
    }

    #[test]
    fn rows_are_stochastic() {
        let net = Network::generate(
            Family::BinaryTree(3),
            &ConductanceProfile::Uniform { lo: 0.1, hi: 10.0, seed: 2 },
        )
        .unwrap();
        let p = transition_matrix(&net);
        for row in p.row_iter() {
            assert!((row.sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_examples() {
        let net = p3();
        assert_relative_eq!(escape_prob_exact(&net, 1).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(escape_prob_exact(&net, 2).unwrap(), 0.5, epsilon = 1e-15);
        let two = Network::new([(0, 1, 2.5)], 0).unwrap();
        assert_eq!(escape_prob_exact(&two, 1).unwrap(), 1.0);
        assert!(escape_prob_exact(&net, 0).is_err());
    }

    #[test]
    fn exact_matches_absorbing_chain_oracle() {
        // Oracle: first-step analysis on the full transition matrix, with o and
        // x made absorbing, solved by dense LU.
        let net = Network::generate(
            Family::Cycle(7),
            &ConductanceProfile::Uniform { lo: 0.5, hi: 3.0, seed: 11 },
        )
        .unwrap();
        let p = transition_matrix(&net);
        let n = net.len();
        for x in 1..n {
            let mut a = DMatrix::<f64>::identity(n, n);
            let mut b = DVector::zeros(n);
            for z in 0..n {
                if z == 0 {
                    b[z] = 1.0;
                } else if z != x {
                    for w in 0..n {
                        a[(z, w)] -= p[(z, w)];
                    }
                }
            }
            let h = a.lu().solve(&b).unwrap();
            let oracle: f64 = (0..n).map(|y| p[(x, y)] * h[y]).sum();
            assert_relative_eq!(escape_prob_exact(&net, x).unwrap(), oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn monte_carlo_examples() {
        let net = p3();
        let est = escape_prob_mc(&net, 1, 100_000, 7).unwrap();
        assert!(est.within_sigma(3.0), "{est:?}");
        let again = escape_prob_mc(&net, 1, 100_000, 7).unwrap();
        assert_eq!(est, again);
        let two = Network::new([(0, 1, 1.0)], 0).unwrap();
        let est = escape_prob_mc(&two, 1, 1000, 1).unwrap();
        assert_eq!(est.mc_estimate, 1.0);
        assert_eq!(est.deviation_sigma(), 0.0);
    }

    #[test]
    fn cap_is_reported() {
        let net = Network::generate(Family::Path(40), &ConductanceProfile::Unit).unwrap();
        match escape_prob_mc_capped(&net, 39, 200, 3, 5) {
            Err(Error::CapHit { capped, samples, .. }) => {
                assert_eq!(samples, 200);
                assert!(capped > 0);
            }
            other => panic!("expected CapHit, got {other:?}"),
        }
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(escape_prob_mc(&p3(), 1, 0, 1).is_err());
    }
}

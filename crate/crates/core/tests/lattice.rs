use energy_space::energy::EnergySpace;
use energy_space::multop::{exhaustion_grams, prefix_exhaustion, restricted_norm_from_gram, sufficiency_bound, Multiplier};
use energy_space::network::{ConductanceProfile, Family, Network};

fn segment(n: usize) -> EnergySpace {
    EnergySpace::new(Network::generate(Family::IntegerSegment(n), &ConductanceProfile::Unit).unwrap())
}

fn kernel_symbol(space: &EnergySpace, k: usize) -> Multiplier {
    let x = space.network().resolve(&k.to_string()).unwrap();
    Multiplier::kernel(space, x).unwrap()
}

#[test]
fn kernel_symbol_trace_saturates() {
    let space = segment(60);
    let m = kernel_symbol(&space, 5);
    let ex = prefix_exhaustion(space.network(), &(1..=60).collect::<Vec<_>>()).unwrap();
    let trace: Vec<f64> = exhaustion_grams(&space, &ex)
        .unwrap()
        .iter()
        .map(|g| restricted_norm_from_gram(g, &m).unwrap())
        .collect();
    for w in trace[..5].windows(2) {
        assert!(w[1] > w[0]);
    }
    // f = 5 − (5 − y)₊ on X: 5·I minus four rank-one point-mass terms.
    let uniform: f64 = 5.0 + (1..5).map(|x| (5 - x) as f64 * (2.0 * x as f64).sqrt()).sum::<f64>();
    for &r in &trace[5..] {
        assert!((r - trace[4]).abs() <= 1e-9 * trace[4], "{r} vs {}", trace[4]);
        assert!(r <= uniform);
    }
}

#[test]
fn sufficiency_sum_grows_with_the_segment() {
    let bound = |n: usize| {
        let space = segment(n);
        sufficiency_bound(&space, &kernel_symbol(&space, 5)).unwrap()
    };
    let (short, long) = (bound(40), bound(160));
    // Σ min(x, 5) √(c(x) x) grows like n^{3/2}.
    assert!(long / short > 7.0, "{short} {long}");
}

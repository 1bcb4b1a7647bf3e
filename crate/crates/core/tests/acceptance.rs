//! Acceptance suite: each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use energy_space::energy::{EnergySpace, EnergyVector};
use energy_space::multop::{
    bisect_bound, certify_bound, exhaustion_grams, hermitian_defect, normalized_projections,
    prefix_exhaustion, rank_one_identities, restricted_norm, restricted_norm_from_gram, s_matrix, sufficiency_bound,
    Multiplier,
};
use energy_space::network::{random_connected, ConductanceProfile, Family, Network, VertexFunction};
use energy_space::numkernel::{psd_check, sqrtm_psd, SymMatrix};
use energy_space::randwalk::{escape_prob_exact, escape_prob_mc};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn generated(family: Family) -> Network {
    Network::generate(family, &ConductanceProfile::Unit).expect("generator")
}

/// path(3), path(5), path(9), binary_tree(3) and a seeded random 12-vertex network.
fn test_networks() -> Vec<(String, Network)> {
    let mut out: Vec<(String, Network)> = [Family::Path(3), Family::Path(5), Family::Path(9), Family::BinaryTree(3)]
        .into_iter()
        .map(|f| (f.to_string(), generated(f)))
        .collect();
    out.push(("random:12".into(), random_connected(12, 8, 0.2, 5.0, 2024).expect("random network")));
    out
}

fn random_vector(net: &Network, rng: &mut ChaCha8Rng) -> EnergyVector {
    let values = (0..net.len())
        .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
        .collect();
    EnergyVector::new(net, values).expect("vector")
}

fn c1_lattice_gram() -> Outcome {
    let net = generated(Family::IntegerSegment(12));
    let space = EnergySpace::new(net.clone());
    let f: Vec<usize> = (1..=8).map(|i| net.resolve(&i.to_string()).unwrap()).collect();
    let gram = space.gram_matrix(&f).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 0..8 {
        for j in 0..8 {
            let want = (i.min(j) + 1) as f64;
            worst = worst.max((gram.matrix().matrix()[(i, j)] - want).abs());
        }
    }
    check(worst <= 1e-9, format!("max |V_ij - min(i,j)| = {worst:.2e}"))
}

fn c2_point_mass_dichotomy() -> Outcome {
    let mut worst_norm: f64 = 0.0;
    let mut problems = Vec::new();
    let mut count = 0;
    for (name, net) in test_networks() {
        let space = EnergySpace::new(net.clone());
        let xs = net.non_origin();
        let ex = vec![xs.clone()];
        for &x in &xs {
            count += 1;
            let m = Multiplier::delta(&net, x).unwrap();
            let c = net.total_conductance(x).unwrap();
            let r = space.effective_resistance(x).unwrap().value();
            let closed = (c * r).sqrt();
            let rho = restricted_norm(&space, &m, &xs).map_err(|e| e.to_string())?;
            worst_norm = worst_norm.max((rho - closed).abs());

            let above = certify_bound(&space, &m, closed + 1e-6, &ex, None).map_err(|e| e.to_string())?;
            if !above.iter().all(|v| v.is_psd) {
                problems.push(format!("{name} x={}: not certified above", net.id(x)));
            }
            let b = closed * (1.0 - 1e-3);
            let below = certify_bound(&space, &m, b, &ex, None).map_err(|e| e.to_string())?;
            match below.iter().find(|v| !v.is_psd) {
                None => problems.push(format!("{name} x={}: certified below", net.id(x))),
                Some(v) => {
                    // The witness ξ gives u = Σ ξ_y v_y with ‖M_x* u‖ > b ‖u‖.
                    let s = s_matrix(&space, &m, b, &xs).unwrap();
                    let form = s.quadratic_form(&v.witness);
                    let mut u = vec![Complex64::new(0.0, 0.0); net.len()];
                    let mut mu = u.clone();
                    for (k, &y) in xs.iter().enumerate() {
                        let vy = space.kernel_values(y).unwrap();
                        let scale = if y == x { v.witness[k] } else { Complex64::new(0.0, 0.0) };
                        for z in 0..net.len() {
                            u[z] += v.witness[k] * vy[z];
                            mu[z] += scale * vy[z];
                        }
                    }
                    let u = EnergyVector::new(&net, u).unwrap();
                    let mu = EnergyVector::new(&net, mu).unwrap();
                    if !(form < 0.0 && mu.norm() > b * u.norm()) {
                        problems.push(format!("{name} x={}: witness does not separate", net.id(x)));
                    }
                }
            }
        }
    }
    check(
        worst_norm <= 1e-6 && problems.is_empty(),
        format!("{count} vertices, max |rho - sqrt(cR)| = {worst_norm:.2e}{}", failures(&problems)),
    )
}

fn failures(problems: &[String]) -> String {
    if problems.is_empty() {
        String::new()
    } else {
        format!("; {}", problems.join("; "))
    }
}

fn c3_walk_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut problems = Vec::new();
    let mut coverage = Vec::new();
    for (name, net) in test_networks() {
        let space = EnergySpace::new(net.clone());
        for x in net.non_origin() {
            let c = net.total_conductance(x).unwrap();
            let r = space.effective_resistance(x).unwrap().value();
            let p = escape_prob_exact(&net, x).map_err(|e| e.to_string())?;
            worst = worst.max((c * r * p - 1.0).abs());
        }
        let x = net.len() - 1;
        let mut inside = 0;
        for seed in 0..20u64 {
            let est = escape_prob_mc(&net, x, 100_000, seed).map_err(|e| e.to_string())?;
            if est.within_sigma(3.0) {
                inside += 1;
            }
        }
        if inside < 19 {
            problems.push(format!("{name}: only {inside}/20 seeds within 3 sigma"));
        }
        coverage.push(format!("{name} {inside}/20"));
    }
    check(
        worst <= 1e-9 && problems.is_empty(),
        format!("max |cRP - 1| = {worst:.2e}; MC coverage {}{}", coverage.join(", "), failures(&problems)),
    )
}

fn kernel_trace(n: usize) -> Result<Vec<f64>, String> {
    let net = generated(Family::IntegerSegment(n));
    let space = EnergySpace::new(net.clone());
    let five = net.resolve("5").map_err(|e| e.to_string())?;
    let m = Multiplier::kernel(&space, five).map_err(|e| e.to_string())?;
    let sizes: Vec<usize> = (1..=n).collect();
    let ex = prefix_exhaustion(&net, &sizes).map_err(|e| e.to_string())?;
    let grams = exhaustion_grams(&space, &ex).map_err(|e| e.to_string())?;
    grams
        .iter()
        .map(|g| restricted_norm_from_gram(g, &m).map_err(|e| e.to_string()))
        .collect()
}

fn c4_unbounded_growth() -> Outcome {
    let short = kernel_trace(40)?;
    let long = kernel_trace(160)?;
    let first_stall = long
        .windows(2)
        .position(|w| w[1] <= w[0])
        .map(|k| k + 2);
    let ratio = long.last().unwrap() / short.last().unwrap();
    let detail = format!(
        "rho(m=1..6) = {:.9?}; rho_40(40) = {:.12}, rho_160(160) = {:.12}, ratio = {ratio:.6}; first non-increase at m = {}",
        &long[..6],
        short.last().unwrap(),
        long.last().unwrap(),
        first_stall.map_or("none".into(), |m| m.to_string())
    );
    check(first_stall.is_none() && ratio >= 1.5, detail)
}

fn c5_psd_norm_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let net = random_connected(8, 5, 0.2, 5.0, 7000 + k).map_err(|e| e.to_string())?;
        let space = EnergySpace::new(net.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        let f: Vec<Complex64> = (0..net.len())
            .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect();
        let m = Multiplier::new(&net, f).unwrap();
        let ex = prefix_exhaustion(&net, &(1..net.len()).collect::<Vec<_>>()).unwrap();
        let grams = exhaustion_grams(&space, &ex).map_err(|e| e.to_string())?;
        let rho = grams
            .iter()
            .map(|g| restricted_norm_from_gram(g, &m).unwrap())
            .fold(0.0, f64::max);
        let upper = sufficiency_bound(&space, &m).unwrap();
        let b = bisect_bound(&grams, &m, 0.0, upper, 1e-9, None).map_err(|e| e.to_string())?;
        worst = worst.max((b - rho).abs());
    }
    check(worst <= 1e-6, format!("50 multipliers, max |b_bisect - max rho| = {worst:.2e}"))
}

fn c6_rank_one_relations() -> Outcome {
    let mut worst_rank: f64 = 0.0;
    let mut worst_proj: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for family in [Family::Path(5), Family::BinaryTree(3)] {
        let net = generated(family);
        let space = EnergySpace::new(net.clone());
        let samples: Vec<EnergyVector> = (0..5).map(|_| random_vector(&net, &mut rng)).collect();
        for x in net.non_origin() {
            for y in net.non_origin() {
                let r = rank_one_identities(&space, x, y, &samples).map_err(|e| e.to_string())?;
                worst_rank = worst_rank.max(r.max_residual / r.scale.max(1.0));
                let p = normalized_projections(&space, x, y).map_err(|e| e.to_string())?;
                worst_proj = worst_proj.max(p.max_residual());
            }
        }
    }
    check(
        worst_rank <= 1e-8 && worst_proj <= 1e-8,
        format!("rank-one {worst_rank:.2e} (relative), projections {worst_proj:.2e}"),
    )
}

fn c7_reproducing_and_pairing() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (_, net) in test_networks() {
        let space = EnergySpace::new(net.clone());
        for _ in 0..200 {
            let u = random_vector(&net, &mut rng);
            let scale = 1.0 + u.norm();
            for x in net.non_origin() {
                worst = worst.max(space.reproducing_check(x, &u).unwrap() / scale);
            }
            for x in 0..net.len() {
                worst = worst.max(space.lap_pairing_check(x, &u).unwrap() / scale);
            }
        }
    }
    check(worst <= 1e-9, format!("max residual / (1 + |u|_E) = {worst:.2e}"))
}

fn c8_square_root() -> Outcome {
    let v = SymMatrix::new(DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0, 2.0, 3.0]))
        .map_err(|e| e.to_string())?;
    let root = sqrtm_psd(&v, None).map_err(|e| e.to_string())?;
    let err = (root.matrix() * root.matrix() - v.matrix()).amax();
    let psd = psd_check(&root, None).map_err(|e| e.to_string())?;
    check(
        err <= 1e-8 && psd.is_psd,
        format!("|B^2 - V| = {err:.2e}, lambda_min(B) = {:.6}", psd.min_eigenvalue),
    )
}

fn c9_banach_estimate() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (_, net) in test_networks() {
        let space = EnergySpace::new(net.clone());
        for _ in 0..100 {
            let est = space
                .pointwise_product(&random_vector(&net, &mut rng), &random_vector(&net, &mut rng))
                .map_err(|e| e.to_string())?;
            worst = worst.min(est.slack());
        }
    }
    check(worst >= -1e-9, format!("min slack = {worst:.3e}"))
}

fn basis(space: &EnergySpace) -> Vec<EnergyVector> {
    let net = space.network();
    let mut out: Vec<EnergyVector> = net.non_origin().into_iter().map(|x| space.energy_kernel(x).unwrap()).collect();
    for x in net.non_origin() {
        out.push(EnergyVector::from_function(net, &VertexFunction::dirac(net, x).unwrap()).unwrap());
    }
    out
}

fn max_defect(space: &EnergySpace, m: &Multiplier, basis: &[EnergyVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for u in basis {
        for v in basis {
            worst = worst.max(hermitian_defect(space, m, u, v).unwrap().norm());
        }
    }
    worst
}

fn c10_non_hermitian() -> Outcome {
    let networks = test_networks();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut smallest = f64::INFINITY;
    let mut largest_constant: f64 = 0.0;
    for k in 0..20 {
        let net = &networks[k % networks.len()].1;
        let space = EnergySpace::new(net.clone());
        let b = basis(&space);
        let values: Vec<f64> = (0..net.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let xs = net.non_origin();
        if xs.iter().all(|&x| values[x] == values[xs[0]]) {
            return Err("sampled multiplier is constant".into());
        }
        let m = Multiplier::from_real(net, &values).unwrap();
        smallest = smallest.min(max_defect(&space, &m, &b));
        let constant = Multiplier::constant(net, Complex64::new(rng.random_range(-3.0..3.0), 0.0));
        largest_constant = largest_constant.max(max_defect(&space, &constant, &b));
    }
    check(
        smallest > 1e-6 && largest_constant <= 1e-10,
        format!("min over multipliers of max defect = {smallest:.3e}; constant defect = {largest_constant:.2e}"),
    )
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "lattice Gram matrix", budget: Duration::from_secs(1), run: c1_lattice_gram },
        Criterion { id: 2, name: "point-mass norm dichotomy", budget: Duration::from_secs(5), run: c2_point_mass_dichotomy },
        Criterion { id: 3, name: "walk identity", budget: Duration::from_secs(30), run: c3_walk_identity },
        Criterion { id: 4, name: "unbounded growth of M_{v_5}", budget: Duration::from_secs(60), run: c4_unbounded_growth },
        Criterion { id: 5, name: "psd/norm equivalence", budget: Duration::from_secs(60), run: c5_psd_norm_equivalence },
        Criterion { id: 6, name: "rank-one relations", budget: Duration::from_secs(10), run: c6_rank_one_relations },
        Criterion { id: 7, name: "reproducing kernel and Laplacian pairing", budget: Duration::from_secs(10), run: c7_reproducing_and_pairing },
        Criterion { id: 8, name: "3x3 square root", budget: Duration::from_secs(1), run: c8_square_root },
        Criterion { id: 9, name: "Banach-algebra product estimate", budget: Duration::from_secs(10), run: c9_banach_estimate },
        Criterion { id: 10, name: "non-Hermitian witness", budget: Duration::from_secs(5), run: c10_non_hermitian },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) => (elapsed <= c.budget, d),
            Err(d) => (false, d),
        };
        let slow = if elapsed > c.budget { " [over time budget]" } else { "" };
        println!(
            "criterion {:>2} {}: {} ({:.2} s / {} s){}: {}",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            slow,
            detail
        );
        if !ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

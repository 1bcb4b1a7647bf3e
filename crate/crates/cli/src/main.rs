mod args;
mod output;

use std::fs;
use std::process::ExitCode;

use clap::Parser;
use energy_space::energy::{matrix_csv, EnergySpace, EnergyVector};
use energy_space::multop::{analyze, AnalysisOptions, Multiplier, Verdict};
use energy_space::network::{
    load_network, load_network_csv, random_connected, ConductanceProfile, Family, Network, VertexFunction,
};
use energy_space::numkernel::sqrtm_psd;
use energy_space::randwalk::escape_prob_mc_capped;
use energy_space::{Error, Result};
use num_complex::Complex64;
use serde_json::{json, Value};

use args::{Cli, Command, Format, NetworkArgs};
use output::{csv_pairs, pretty_matrix, pretty_pairs, sig, sig_complex, Output};

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn generate_random(spec: &str) -> Result<Network> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(invalid(format!("expected random:n:extra:seed, got '{spec}'")));
    }
    let num = |s: &str, what: &str| -> Result<u64> {
        s.trim().parse().map_err(|_| invalid(format!("random: {what} '{s}' is not a nonnegative integer")))
    };
    random_connected(
        num(parts[1], "n")? as usize,
        num(parts[2], "extra")? as usize,
        0.2,
        5.0,
        num(parts[3], "seed")?,
    )
}

fn load(args: &NetworkArgs) -> Result<Network> {
    let src = &args.source;
    if let Some(spec) = &src.generator {
        if spec.starts_with("random:") {
            if args.weights != "unit" {
                return Err(invalid("--weights does not apply to random networks"));
            }
            return generate_random(spec);
        }
        let family: Family = spec.parse()?;
        let profile: ConductanceProfile = args.weights.parse()?;
        Network::generate(family, &profile)
    } else if let Some(path) = &src.network {
        load_network(path)
    } else if let Some(path) = &src.csv {
        let origin = args.origin.as_deref().ok_or_else(|| invalid("--csv needs --origin"))?;
        load_network_csv(path, origin)
    } else {
        Err(invalid("no network source"))
    }
}

/// Vertex lookup; `o` names the origin unless a vertex is literally called `o`.
fn vertex(net: &Network, text: &str) -> Result<usize> {
    match net.resolve(text) {
        Ok(x) => Ok(x),
        Err(_) if text.trim() == "o" => Ok(net.origin()),
        Err(e) => Err(e),
    }
}

fn vertex_list(net: &Network, text: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = text.split_once("..") {
        let parse = |s: &str| -> Result<i64> {
            s.trim().parse().map_err(|_| invalid(format!("range bound '{s}' is not an integer")))
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a > b {
            return Err(invalid(format!("empty range {a}..{b}")));
        }
        (a..=b).map(|i| vertex(net, &i.to_string())).collect()
    } else {
        text.split(',').map(|s| vertex(net, s)).collect()
    }
}

fn parse_scalar(text: &str) -> Result<Complex64> {
    let mut parts = text.split(':');
    let num = |s: Option<&str>| -> Result<f64> {
        let s = s.unwrap_or("0");
        s.trim().parse().map_err(|_| invalid(format!("'{s}' is not a number")))
    };
    let re = num(parts.next())?;
    let im = num(parts.next())?;
    if parts.next().is_some() {
        return Err(invalid(format!("expected <re>[:<im>], got '{text}'")));
    }
    Ok(Complex64::new(re, im))
}

fn split_spec(spec: &str) -> Result<(&str, &str)> {
    spec.split_once(':')
        .ok_or_else(|| invalid(format!("expected kind:value, got '{spec}'")))
}

fn multiplier(space: &EnergySpace, spec: &str) -> Result<Multiplier> {
    let net = space.network();
    let (kind, rest) = split_spec(spec)?;
    match kind {
        "delta" => Multiplier::delta(net, vertex(net, rest)?),
        "kernel" => Multiplier::kernel(space, vertex(net, rest)?),
        "const" => Ok(Multiplier::constant(net, parse_scalar(rest)?)),
        "file" => Multiplier::from_json(net, &fs::read_to_string(rest)?),
        other => Err(invalid(format!("unknown multiplier kind '{other}'"))),
    }
}

fn energy_vector(space: &EnergySpace, spec: &str) -> Result<EnergyVector> {
    let net = space.network();
    let (kind, rest) = split_spec(spec)?;
    match kind {
        "kernel" => space.energy_kernel(vertex(net, rest)?),
        "delta" => EnergyVector::from_function(net, &VertexFunction::dirac(net, vertex(net, rest)?)?),
        "const" => EnergyVector::from_function(net, &VertexFunction::constant(net, parse_scalar(rest)?)),
        "file" => EnergyVector::from_json(net, &fs::read_to_string(rest)?),
        other => Err(invalid(format!("unknown vector kind '{other}'"))),
    }
}

fn exhaustion(net: &Network, spec: Option<&str>, trace: bool) -> Result<Vec<Vec<usize>>> {
    let size = net.len() - 1;
    let sizes: Vec<usize> = match spec {
        None if trace => (1..=size).collect(),
        None => vec![size],
        Some("all") => (1..=size).collect(),
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| invalid(format!("exhaustion size '{s}' is not an integer")))
            })
            .collect::<Result<_>>()?,
    };
    energy_space::multop::prefix_exhaustion(net, &sizes)
}

fn ids(net: &Network, xs: &[usize]) -> Vec<Value> {
    xs.iter().map(|&x| json!(net.id(x))).collect()
}

fn cmd_generate(net: &Network) -> Output {
    let doc: Value = serde_json::from_str(&net.to_json()).expect("canonical JSON");
    let mut csv = String::from("x,y,c\n");
    let mut pretty = format!("origin {}\n", net.id(net.origin()));
    for e in net.edges() {
        csv.push_str(&format!("{},{},{}\n", net.id(e.a), net.id(e.b), e.conductance));
        pretty.push_str(&format!("{} -- {}  c = {}\n", net.id(e.a), net.id(e.b), sig(e.conductance)));
    }
    Output {
        json: doc,
        csv,
        pretty,
        failed: false,
    }
}

fn cmd_kernel(space: &EnergySpace, x: usize) -> Result<Output> {
    let net = space.network();
    let v = space.kernel_values(x)?;
    let values: serde_json::Map<String, Value> = (0..net.len())
        .map(|z| (net.id(z).to_string(), json!(v[z])))
        .collect();
    let mut csv = String::from("vertex,value\n");
    for z in 0..net.len() {
        csv.push_str(&format!("{},{}\n", net.id(z), v[z]));
    }
    let sup = v.iter().fold(0.0f64, |m, &a| m.max(a.abs()));
    let values_pretty = (0..net.len())
        .map(|z| format!("{}={}", net.id(z), sig(v[z])))
        .collect::<Vec<_>>()
        .join(" ");
    if x == net.origin() {
        let notice = "v_o is the zero vector: the origin is the grounding vertex";
        return Ok(Output {
            json: json!({
                "vertex": net.id(x),
                "values": values,
                "resistance": 0.0,
                "sup_norm": 0.0,
                "bound_holds": true,
                "notice": notice,
            }),
            csv,
            pretty: pretty_pairs(&[("vertex", net.id(x).to_string()), ("values", values_pretty), ("notice", notice.into())]),
            failed: false,
        });
    }
    let r = space.effective_resistance(x)?;
    let holds = sup <= r.value() * (1.0 + 1e-12);
    Ok(Output {
        json: json!({
            "vertex": net.id(x),
            "values": values,
            "resistance": r.value(),
            "energy": r.energy,
            "sup_norm": sup,
            "bound_holds": holds,
        }),
        csv,
        pretty: pretty_pairs(&[
            ("vertex", net.id(x).to_string()),
            ("values", values_pretty),
            ("R(x)", sig(r.value())),
            ("E(v_x)", sig(r.energy)),
            ("sup |v_x|", sig(sup)),
            ("sup |v_x| <= R(x)", if holds { "PASS".into() } else { "FAIL".into() }),
        ]),
        failed: !holds,
    })
}

fn cmd_gram(space: &EnergySpace, set: &[usize], with_sqrt: bool) -> Result<Output> {
    let net = space.network();
    let gram = space.gram_matrix(set)?;
    let v = gram.matrix().matrix();
    let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    };
    let labels: Vec<String> = set.iter().map(|&x| net.id(x).to_string()).collect();
    let mut json = json!({
        "vertices": ids(net, set),
        "matrix": rows(v),
    });
    let mut csv = matrix_csv(net, set, v);
    let mut pretty = pretty_matrix(&labels, |i, j| v[(i, j)]);
    if with_sqrt {
        let root = sqrtm_psd(gram.matrix(), None)?;
        let b = root.matrix();
        let residual = (b * b - v).amax();
        json["sqrt"] = json!(rows(b));
        json["sqrt_residual"] = json!(residual);
        csv.push('\n');
        csv.push_str(&matrix_csv(net, set, b));
        pretty.push_str("\nsquare root\n");
        pretty.push_str(&pretty_matrix(&labels, |i, j| b[(i, j)]));
        pretty.push_str(&format!("max |B^2 - V| = {}\n", sig(residual)));
    }
    Ok(Output {
        json,
        csv,
        pretty,
        failed: false,
    })
}

fn cmd_mult(
    space: &EnergySpace,
    m: &Multiplier,
    ex: &[Vec<usize>],
    options: &AnalysisOptions,
) -> Result<Output> {
    let net = space.network();
    let report = analyze(space, m, ex, options)?;
    let mut csv = String::from("size,rho\n");
    for (k, r) in &report.lower_trace {
        csv.push_str(&format!("{k},{r}\n"));
    }
    let verdict = match report.verdict {
        Verdict::Certified(b) => format!("certified <= {}", sig(b)),
        Verdict::Exceeded(b) => format!("FAIL: norm exceeds {}", sig(b)),
        Verdict::UnboundedGrowth => "unbounded growth along the exhaustion".into(),
        Verdict::Inconclusive => "inconclusive".into(),
    };
    let trace = report
        .lower_trace
        .iter()
        .map(|(k, r)| format!("{k}:{}", sig(*r)))
        .collect::<Vec<_>>()
        .join(" ");
    let mut rows = vec![
        ("lower trace", trace),
        ("best lower", sig(report.best_lower)),
        ("sufficiency upper", sig(report.upper)),
    ];
    if let Some(b) = report.estimate {
        rows.push(("estimate", sig(b)));
    }
    let certs: Vec<String> = report
        .certs
        .iter()
        .map(|c| format!("b={} psd={} lambda_min={}", sig(c.b), c.psd, sig(c.lambda_min)))
        .collect();
    let certs = certs.join("; ");
    if !certs.is_empty() {
        rows.push(("certificates", certs));
    }
    if let Some(w) = &report.witness {
        let xi = w.xi.iter().map(|z| sig_complex(*z)).collect::<Vec<_>>().join(" ");
        rows.push(("witness xi", xi));
    }
    rows.push(("verdict", verdict));
    Ok(Output {
        json: report.to_json(net),
        csv,
        pretty: pretty_pairs(&rows),
        failed: report.verdict.is_failure(),
    })
}

fn cmd_walk(space: &EnergySpace, x: usize, samples: u64, seed: u64, cap: u64) -> Result<Output> {
    let net = space.network();
    let est = escape_prob_mc_capped(net, x, samples, seed, cap)?;
    let c = net.total_conductance(x)?;
    let r = space.effective_resistance(x)?.value();
    let residual = (c * r * est.exact - 1.0).abs();
    let identity = residual <= 1e-9;
    let sigma = est.deviation_sigma();
    let mc_ok = sigma <= 4.0;
    let mut json = est.to_json(net);
    json["conductance"] = json!(c);
    json["resistance"] = json!(r);
    json["identity_residual"] = json!(residual);
    json["identity_holds"] = json!(identity);
    let rows = [
        ("vertex", net.id(x).to_string()),
        ("exact P[x->o]", sig(est.exact)),
        ("Monte Carlo", format!("{} +- {}", sig(est.mc_estimate), sig(est.mc_stderr))),
        ("deviation (sigma)", sig(sigma)),
        ("samples / seed", format!("{} / {}", est.samples, est.seed)),
        ("c(x) R(x) P[x->o]", sig(c * r * est.exact)),
        (
            "verdict",
            match (identity, mc_ok, est.flagged()) {
                (true, true, false) => "PASS".into(),
                (true, true, true) => "PASS (flagged: between 3 and 4 sigma)".into(),
                _ => "FAIL".into(),
            },
        ),
    ];
    let csv_rows: Vec<(&str, String)> = [
        ("vertex", net.id(x).to_string()),
        ("exact", est.exact.to_string()),
        ("mc_estimate", est.mc_estimate.to_string()),
        ("mc_stderr", est.mc_stderr.to_string()),
        ("samples", est.samples.to_string()),
        ("seed", est.seed.to_string()),
        ("capped", est.capped.to_string()),
        ("identity_residual", residual.to_string()),
    ]
    .into();
    Ok(Output {
        json,
        csv: csv_pairs(&csv_rows),
        pretty: pretty_pairs(&rows),
        failed: !(identity && mc_ok),
    })
}

fn norms_json(u: &EnergyVector) -> Value {
    json!({
        "sup_norm": u.sup_norm(),
        "energy_norm": u.norm(),
        "algebra_norm": u.banach_norm(),
    })
}

fn cmd_banach(space: &EnergySpace, u: &EnergyVector, u2: Option<&EnergyVector>) -> Result<Output> {
    let mut json = json!({ "u": norms_json(u) });
    let mut rows = vec![
        ("|u|_inf", sig(u.sup_norm())),
        ("|u|_E", sig(u.norm())),
        ("|u|_A", sig(u.banach_norm())),
    ];
    let mut csv_rows = vec![
        ("u.sup_norm", u.sup_norm().to_string()),
        ("u.energy_norm", u.norm().to_string()),
        ("u.algebra_norm", u.banach_norm().to_string()),
    ];
    let mut failed = false;
    if let Some(u2) = u2 {
        let est = space.pointwise_product(u, u2)?;
        let holds = est.holds();
        failed = !holds;
        json["u2"] = norms_json(u2);
        json["product"] = json!({
            "energy": est.lhs,
            "bound": est.rhs,
            "slack": est.slack(),
            "algebra_norm": est.product.banach_norm(),
            "holds": holds,
        });
        rows.extend([
            ("|u2|_inf", sig(u2.sup_norm())),
            ("|u2|_E", sig(u2.norm())),
            ("|u2|_A", sig(u2.banach_norm())),
            ("|u u2|_E^2", sig(est.lhs)),
            ("bound", sig(est.rhs)),
            ("|u u2|_A", sig(est.product.banach_norm())),
            ("estimate", if holds { "PASS".into() } else { "FAIL".into() }),
        ]);
        csv_rows.extend([
            ("u2.sup_norm", u2.sup_norm().to_string()),
            ("u2.energy_norm", u2.norm().to_string()),
            ("u2.algebra_norm", u2.banach_norm().to_string()),
            ("product.energy", est.lhs.to_string()),
            ("product.bound", est.rhs.to_string()),
            ("product.slack", est.slack().to_string()),
        ]);
    }
    Ok(Output {
        json,
        csv: csv_pairs(&csv_rows),
        pretty: pretty_pairs(&rows),
        failed,
    })
}

fn positive(name: &str, value: Option<f64>) -> Result<()> {
    match value {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(invalid(format!("{name} must be positive, got {v}"))),
        _ => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Generate { net } => Ok(cmd_generate(&load(net)?)),
        Command::Kernel { net, vertex: v } => {
            let space = EnergySpace::new(load(net)?);
            let x = vertex(space.network(), v)?;
            cmd_kernel(&space, x)
        }
        Command::Gram { net, vertices, sqrt } => {
            let space = EnergySpace::new(load(net)?);
            let set = match vertices {
                Some(text) => vertex_list(space.network(), text)?,
                None => space.network().non_origin(),
            };
            cmd_gram(&space, &set, *sqrt)
        }
        Command::Mult {
            net,
            symbol,
            bounds,
            estimate,
            trace,
            exhaust,
            tol,
        } => {
            positive("--tol", *tol)?;
            if let Some(b) = bounds.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
                return Err(invalid(format!("--bound must be nonnegative, got {b}")));
            }
            let space = EnergySpace::new(load(net)?);
            let m = multiplier(&space, symbol)?;
            let ex = exhaustion(space.network(), exhaust.as_deref(), *trace)?;
            let options = AnalysisOptions {
                bounds: bounds.clone(),
                estimate: *estimate,
                psd_tolerance: *tol,
                bisection_tolerance: None,
            };
            cmd_mult(&space, &m, &ex, &options)
        }
        Command::Walk {
            net,
            vertex: v,
            samples,
            seed,
            cap,
        } => {
            let space = EnergySpace::new(load(net)?);
            let x = vertex(space.network(), v)?;
            cmd_walk(&space, x, *samples, *seed, *cap)
        }
        Command::Banach { net, u, u2 } => {
            let space = EnergySpace::new(load(net)?);
            let first = energy_vector(&space, u)?;
            let second = u2.as_deref().map(|s| energy_vector(&space, s)).transpose()?;
            cmd_banach(&space, &first, second.as_ref())
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(text) = std::env::var("ENERGY_SPACE_THREADS") {
        let n: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| invalid(format!("ENERGY_SPACE_THREADS must be a positive integer, got '{text}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| invalid(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(out) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("JSON output")),
                Format::Csv => print!("{}", out.csv),
                Format::Pretty => print!("{}", out.pretty),
            }
            if out.failed {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

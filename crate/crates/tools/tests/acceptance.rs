//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::time::Instant;

use rand::Rng as _;
use recourse_core::analytics::{
    empirical_multiplicity_cost, jensen_power, max_identity, multiplicity_bound, power_mean, single_model_bound,
    BoundComponents, BoundParameters, CostMode,
};
use recourse_core::classifier::{LinearModel, Scorer};
use recourse_core::engine::{
    brute_force_recourse, grid_recourse, joint_recourse, objective_value, ActionGrid, Engine, GridConfig, GsConfig,
    Method, Objective, RecourseRequest, RecourseResult,
};
use recourse_core::percentile::PercentileTransform;
use recourse_core::rng::{seeded, standard_normal, Rng};
use recourse_core::schema::{Direction, Feature, FeatureSchema, Likelihood};
use recourse_tools::config::ExperimentConfig;
use recourse_tools::experiments::{evaluate_seed, manifold_runs, run_bounds, Family, SeedOutcome};

/// Counterfactuals with the targets and schema they were generated under.
struct Emitted {
    source: &'static str,
    result: RecourseResult,
    targets: Vec<Box<dyn Scorer + Send + Sync>>,
    schema: FeatureSchema,
}

#[derive(Default)]
struct Outcome {
    lines: Vec<(usize, bool, String)>,
}

impl Outcome {
    fn record(&mut self, n: usize, pass: bool, detail: String) {
        println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((n, pass, detail));
    }
}

/// Validity, immutables and directions checked from the raw vectors.
fn recheck(e: &Emitted) -> Result<(), String> {
    let r = &e.result;
    if r.x.len() != e.schema.len() || r.x_cf.len() != e.schema.len() {
        return Err("dimension".into());
    }
    if r.found {
        for (i, t) in e.targets.iter().enumerate() {
            let s = t.score(&r.x_cf);
            if s.is_nan() || s <= 0.0 {
                return Err(format!("target {i} score {s}"));
            }
        }
    }
    for (j, f) in e.schema.features().iter().enumerate() {
        let (a, b) = (r.x[j], r.x_cf[j]);
        if !f.mutable && a.to_bits() != b.to_bits() {
            return Err(format!("immutable {} moved {a} -> {b}", f.name));
        }
        let ok = match f.direction {
            Direction::Free => true,
            Direction::DownOnly => b <= a,
            Direction::UpOnly => b >= a,
        };
        if !ok {
            return Err(format!("direction of {} violated {a} -> {b}", f.name));
        }
    }
    Ok(())
}

fn criterion_1(cfg: &ExperimentConfig, out: &mut Outcome, emitted: &mut Vec<Emitted>) {
    let t = Instant::now();
    let runs = manifold_runs(cfg, 0).expect("manifold fixture");
    let slack = 2.0 * cfg.bounds.manifold_step;
    let mut holds = 0;
    for (s, d) in &runs.pairs {
        if s.found && d.found && d.norm_cost <= 2.0 * s.norm_cost + slack {
            holds += 1;
        }
    }
    let n = runs.negatives.len();
    let secs = t.elapsed().as_secs_f64();
    out.record(
        1,
        n >= 200 && holds == n && secs < 120.0,
        format!("{holds}/{n} negatives satisfy support <= 2 sparse + {slack} ({secs:.1}s)"),
    );
    for (s, d) in runs.pairs {
        for result in [s, d] {
            emitted.push(Emitted {
                source: "manifold",
                result,
                targets: vec![Box::new(runs.rule.clone())],
                schema: runs.schema.clone(),
            });
        }
    }
}

fn criteria_2_10(cfg: &ExperimentConfig, out: &mut Outcome) {
    let t = Instant::now();
    let report = run_bounds(cfg, None).expect("bounds run");
    let secs = t.elapsed().as_secs_f64();
    let n = report.pairs.len();
    out.record(
        2,
        n == 20 && report.holds_count == 20 && secs < 300.0,
        format!("{}/{n} pairs hold ({secs:.1}s)", report.holds_count),
    );
    let mut s_bars: Vec<(String, f64)> =
        report.self_check.exact.methods.iter().map(|m| (m.method.clone(), m.s_bar)).collect();
    for rep in &report.self_check.engine {
        s_bars.extend(rep.methods.iter().map(|m| (m.method.clone(), m.s_bar)));
    }
    let worst = s_bars.iter().map(|(_, s)| (s - 1.0).abs()).fold(0.0, f64::max);
    let mut methods: Vec<&str> = s_bars.iter().map(|(m, _)| m.as_str()).collect();
    methods.sort();
    methods.dedup();
    let pass = worst <= 1e-9 && report.self_discrepancy == 0.0 && methods.len() >= 4;
    out.record(
        10,
        pass,
        format!("max |s_bar - 1| = {worst:e} over {methods:?}; delta(f,f) = {}", report.self_discrepancy),
    );
}

fn random_components(rng: &mut Rng) -> BoundComponents {
    loop {
        let pi: f64 = rng.random();
        let c = BoundComponents {
            pi,
            risk_neg: rng.random(),
            c_max: rng.random_range(0.0..5.0),
            c_pos_mean: -rng.random_range(0.0..5.0),
            c_neg_mean: -rng.random_range(0.0..5.0),
            c_pos_empty: false,
            c_neg_empty: false,
            n_neg_pos: rng.random_range(1..100),
            n_neg_neg: rng.random_range(1..100),
            n_pos_pos: rng.random_range(1..100),
            n_pos_neg: rng.random_range(1..100),
        };
        if pi * c.c_pos_mean - (1.0 - pi) * c.c_neg_mean + 2.0 * c.c_max * c.risk_neg >= 0.0 {
            return c;
        }
    }
}

fn criterion_3(out: &mut Outcome) {
    let mut rng = seeded(3);
    let mut worst = 0.0f64;
    let mut ok = 0;
    for _ in 0..100 {
        let c = random_components(&mut rng);
        let alpha = rng.random_range(0.01..3.0);
        let pair = multiplicity_bound(&c, &c, 0.0, BoundParameters { alpha, gamma: 1.0 }).expect("pair bound");
        let single = single_model_bound(&c, alpha).expect("single bound");
        let diff = (pair - 2.0 * single).abs();
        worst = worst.max(diff);
        ok += (diff <= 1e-12) as usize;
    }
    out.record(3, ok == 100, format!("{ok}/100 within 1e-12 (max diff {worst:e})"));
}

fn criterion_4(out: &mut Outcome) {
    let mut rng = seeded(4);
    let draws = 10_000;
    let gamma = |rng: &mut Rng| match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random::<f64>(),
    };
    let vector = |rng: &mut Rng| {
        let n = rng.random_range(1..30);
        let scale = 10f64.powi(rng.random_range(-3..4));
        (0..n).map(|_| if rng.random_bool(0.1) { 0.0 } else { scale * rng.random::<f64>() }).collect::<Vec<_>>()
    };
    let mut violations = [0usize; 3];
    for _ in 0..draws {
        let scale = 10f64.powi(rng.random_range(-3..4));
        let (a, b) = (scale * standard_normal(&mut rng), scale * standard_normal(&mut rng));
        violations[0] += !max_identity(a, b) as usize;
        let (z, g) = (vector(&mut rng), gamma(&mut rng));
        violations[1] += !power_mean(&z, g).expect("power mean input") as usize;
        let (z, g) = (vector(&mut rng), gamma(&mut rng));
        violations[2] += !jensen_power(&z, g).expect("jensen input") as usize;
    }
    out.record(
        4,
        violations == [0, 0, 0],
        format!(
            "violations in {draws} draws each: max {}, power mean {}, jensen {}",
            violations[0], violations[1], violations[2]
        ),
    );
}

type Instance = (FeatureSchema, PercentileTransform, Vec<f64>, Vec<LinearModel>, Vec<(usize, Vec<f64>)>);

fn random_instance(rng: &mut Rng) -> Instance {
    let d = rng.random_range(2..=5);
    let mut features: Vec<Feature> = (0..d)
        .map(|j| {
            let direction = [Direction::Free, Direction::DownOnly, Direction::UpOnly][rng.random_range(0..3)];
            Feature::new(&format!("f{j}"), rng.random_bool(0.8), Likelihood::Real).with_direction(direction)
        })
        .collect();
    if features.iter().all(|f| !f.mutable) {
        features[0].mutable = true;
    }
    let schema = FeatureSchema::new(features).expect("schema");
    let columns = (0..d).map(|_| (0..60).map(|_| standard_normal(rng)).collect()).collect();
    let transform = PercentileTransform::from_columns(columns).expect("transform");
    let x: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
    let n_targets = rng.random_range(1..=2);
    let targets = (0..n_targets)
        .map(|_| {
            let w: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
            let wx: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
            LinearModel::from_affine(w, -wx - rng.random_range(0.05..1.5))
        })
        .collect();
    let axes = schema
        .mutable_indices()
        .into_iter()
        .map(|j| {
            let k = rng.random_range(1..=12);
            let mut values: Vec<f64> =
                (0..k).map(|_| x[j] + 1.5 * standard_normal(rng)).filter(|v| schema.admits(j, x[j], *v)).collect();
            values.push(x[j]);
            (j, values)
        })
        .collect();
    (schema, transform, x, targets, axes)
}

fn criterion_5(out: &mut Outcome, emitted: &mut Vec<Emitted>) {
    let mut rng = seeded(5);
    let (mut equal, mut found, mut largest) = (0, 0, 0u128);
    for i in 0..200u64 {
        let (schema, transform, x, models, grid) = loop {
            let (schema, transform, x, models, axes) = random_instance(&mut rng);
            let grid = ActionGrid::new(&schema, &x, axes).expect("grid");
            if grid.size() <= 10_000 {
                break (schema, transform, x, models, grid);
            }
        };
        largest = largest.max(grid.size());
        let objective = if rng.random_bool(0.5) { Objective::TotalShift } else { Objective::MaxShift };
        let targets: Vec<&dyn Scorer> = models.iter().map(|m| m as &dyn Scorer).collect();
        let req = RecourseRequest::new(x.clone(), targets, &schema, 10_000_000, i).expect("request");
        let config = GridConfig { objective, ..GridConfig::default() };
        let g = grid_recourse(&req, &grid, &transform, &config).expect("grid recourse");
        let b = brute_force_recourse(&req, &grid, &transform, objective).expect("brute force");
        let same = g.found == b.found
            && (!g.found
                || objective_value(&transform, &x, &g.x_cf, objective)
                    == objective_value(&transform, &x, &b.x_cf, objective));
        equal += same as usize;
        found += g.found as usize;
        for result in [g, b] {
            emitted.push(Emitted {
                source: "grid instances",
                result,
                targets: models.iter().map(|m| Box::new(m.clone()) as Box<dyn Scorer + Send + Sync>).collect(),
                schema: schema.clone(),
            });
        }
    }
    out.record(5, equal == 200, format!("{equal}/200 objectives equal ({found} feasible, largest grid {largest})"));
}

fn criterion_6(out: &mut Outcome, emitted: &mut Vec<Emitted>) {
    let f = LinearModel::from_affine(vec![1.0, 0.0], -1.0);
    let g = LinearModel::from_affine(vec![0.0, 1.0], -1.0);
    let origin = [0.0, 0.0];
    let exact = empirical_multiplicity_cost(&f, &g, [&origin[..]], CostMode::ExactLinear).expect("exact cost").mean;
    let sqrt2 = std::f64::consts::SQRT_2;
    let schema = FeatureSchema::real(2);
    let engine = Engine::Gs(GsConfig::with_step(0.1));
    let mut within = 0;
    let mut costs = Vec::new();
    for seed in 0..20 {
        let r = joint_recourse(&f, &g, origin.to_vec(), &schema, &engine, 10_000, seed).expect("joint recourse");
        let inside = r.found && r.norm_cost >= sqrt2 && r.norm_cost <= 1.15 * sqrt2;
        within += inside as usize;
        costs.push(r.norm_cost);
        emitted.push(Emitted {
            source: "orthogonal pair",
            result: r,
            targets: vec![Box::new(f.clone()), Box::new(g.clone())],
            schema: schema.clone(),
        });
    }
    let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().copied().fold(0.0, f64::max);
    out.record(
        6,
        (exact - sqrt2).abs() <= 1e-6 && within >= 19,
        format!("exact {exact:.9}; GS within [sqrt2, 1.15 sqrt2] in {within}/20 seeds (range {lo:.4}..{hi:.4})"),
    );
}

fn linear_mean_t(o: &SeedOutcome, method: Method) -> Option<f64> {
    o.transfer
        .panels
        .iter()
        .find(|p| p.base_family == Family::Linear && p.peer_family == Family::Linear && p.method == method)
        .and_then(|p| p.mean_peer_t)
}

fn criteria_7_8(cfg: &ExperimentConfig, out: &mut Outcome, emitted: &mut Vec<Emitted>) {
    let t = Instant::now();
    let outcomes: Vec<SeedOutcome> = (0..5).map(|s| evaluate_seed(cfg, s).expect("seed evaluation")).collect();
    let secs = t.elapsed().as_secs_f64();

    let mut seeds_t = 0;
    let mut detail = Vec::new();
    for o in &outcomes {
        let latent = linear_mean_t(o, Method::Latent);
        let gs = linear_mean_t(o, Method::Gs);
        let grid = linear_mean_t(o, Method::Grid);
        let ok = matches!((latent, gs, grid), (Some(l), Some(s), Some(g)) if l >= s + 0.05 && l >= g + 0.05);
        seeds_t += ok as usize;
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        detail.push(format!("seed {}: latent {} gs {} grid {}", o.transfer.seed, show(latent), show(gs), show(grid)));
    }
    out.record(
        7,
        seeds_t >= 4 && secs < 600.0,
        format!("margin >= 0.05 in {seeds_t}/5 seeds ({secs:.1}s) [{}]", detail.join("; ")),
    );

    let mut seeds_median = 0;
    let mut seeds_corollary = 0;
    let mut detail = Vec::new();
    for o in &outcomes {
        let median = |m: Method| o.costs.methods.iter().find(|s| s.method == m).and_then(|s| s.median_cost_total);
        let (l, s, g) = (median(Method::Latent), median(Method::Gs), median(Method::Grid));
        seeds_median += matches!((l, s, g), (Some(l), Some(s), Some(g)) if l >= s && l >= g) as usize;
        let corollary = o.costs.corollary.len() == 2 && o.costs.corollary.iter().all(|c| c.holds == Some(true));
        seeds_corollary += corollary as usize;
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        detail.push(format!("seed {}: latent {} gs {} grid {}", o.costs.seed, show(l), show(s), show(g)));
    }
    out.record(
        8,
        seeds_median >= 4 && seeds_corollary == 5,
        format!(
            "median cost_total ordering in {seeds_median}/5 seeds, corollary in {seeds_corollary}/5 [{}]",
            detail.join("; ")
        ),
    );

    for o in outcomes {
        let schema = o.prepared.schema().clone();
        for run in o.runs {
            let base = o.prepared.base(run.base).model.clone();
            for result in run.results {
                emitted.push(Emitted {
                    source: "credit runs",
                    result,
                    targets: vec![Box::new(base.clone())],
                    schema: schema.clone(),
                });
            }
        }
    }
}

fn criterion_9(out: &mut Outcome, emitted: &[Emitted]) {
    let mut failures = Vec::new();
    let found = emitted.iter().filter(|e| e.result.found).count();
    for e in emitted {
        if let Err(reason) = recheck(e) {
            failures.push(format!("{}: {reason}", e.source));
        }
    }
    let mut sources: Vec<&str> = emitted.iter().map(|e| e.source).collect();
    sources.dedup();
    out.record(
        9,
        failures.is_empty() && !emitted.is_empty(),
        format!(
            "{} counterfactuals ({found} found) from {sources:?}; {} failures {}",
            emitted.len(),
            failures.len(),
            failures.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
        ),
    );
}

fn main() {
    let cfg = ExperimentConfig::default();
    let mut out = Outcome::default();
    let mut emitted = Vec::new();
    criterion_1(&cfg, &mut out, &mut emitted);
    criteria_2_10(&cfg, &mut out);
    criterion_3(&mut out);
    criterion_4(&mut out);
    criterion_5(&mut out, &mut emitted);
    criterion_6(&mut out, &mut emitted);
    criteria_7_8(&cfg, &mut out, &mut emitted);
    criterion_9(&mut out, &emitted);

    out.lines.sort_by_key(|l| l.0);
    println!("summary:");
    for (n, pass, _) in &out.lines {
        println!("  criterion {n}: {}", if *pass { "PASS" } else { "FAIL" });
    }
    if out.lines.iter().any(|l| !l.1) {
        std::process::exit(1);
    }
}

//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use combopt::environments::FeedbackMode;
use combopt::exp2::Exp2State;
use combopt::harness::{self, EtaSetting, PlayerSpec, SweepConfig};
use combopt::oracles::{
    brute_force_projection, exact_estimator_mean_exp2, exact_estimator_mean_osmd, exp2_alternating_regret,
    exp2_epsskew_regret, kl_bound_check, tech1_ratio, KlQ,
};
use combopt::osmd::{bregman_project, regret_bound, BoundFamily, OsmdState};
use combopt::{ActionSet, Adversary, LegendreFunction, PotentialSpec, Result};

type Criterion = (&'static str, fn() -> Result<Outcome>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn power(q: f64, d: usize) -> LegendreFunction {
    LegendreFunction::potential_legendre(PotentialSpec::power(q).unwrap(), d).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn bregman_duality() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = 5;
    let families = [LegendreFunction::negentropy(d), power(1.5, d), power(2.0, d), power(3.0, d)];
    let mut worst = 0.0f64;
    for f in &families {
        for _ in 0..1000 {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..1.0)).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..1.0)).collect();
            let primal = f.bregman(&x, &y)?;
            let dual = f.dual_bregman(&f.grad(&y)?, &f.grad(&x)?)?;
            worst = worst.max((primal - dual).abs() / primal.abs());
        }
    }
    outcome(worst <= 1e-8, format!("4 families x 1000 pairs, max relative error {worst:.2e} (tol 1e-8)"))
}

fn unbiasedness() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let sets = [ActionSet::mset(6, 2)?, ActionSet::parallel_games(6, 2)?, ActionSet::exp2_lower_bound(8)?];
    for set in &sets {
        let d = set.dim();
        let z: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        // move both players away from their symmetric starting points first
        let warm: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..2.0)).collect();
        let mut osmd = OsmdState::new(set, LegendreFunction::negentropy(d), 0.4, FeedbackMode::SemiBandit)?;
        osmd.update_with_estimate(&warm)?;
        let mean = exact_estimator_mean_osmd(set, osmd.mean(), &z, FeedbackMode::SemiBandit)?;
        worst = worst.max(max_abs_diff(&mean, &z));
        let mut exp2 = Exp2State::new(set, 0.4, 0.0, FeedbackMode::SemiBandit)?;
        exp2.update(&warm)?;
        worst = worst.max(max_abs_diff(&exact_estimator_mean_exp2(&exp2, &z)?, &z));
    }
    let set = ActionSet::mset(4, 1)?;
    let z: Vec<f64> = (0..4).map(|_| rng.gen::<f64>()).collect();
    let mut bandit = Exp2State::new(&set, 0.5, 0.2, FeedbackMode::Bandit)?;
    bandit.update(&[0.3, 1.2, 0.0, 2.0])?;
    let bandit_err = max_abs_diff(&exact_estimator_mean_exp2(&bandit, &z)?, &z);
    worst = worst.max(bandit_err);
    outcome(
        worst <= 1e-12,
        format!("semi-bandit OSMD/Exp2 on MSet(6,2), PG(6,2), Exp2LB(8) and bandit gamma=0.2 on MSet(4,1): max deviation {worst:.2e} (tol 1e-12)"),
    )
}

fn envelope(legendre: &str, family: BoundFamily) -> Result<(bool, String)> {
    let dir = tempfile::tempdir()?;
    let cfg = SweepConfig {
        set: "mset:d=8,m=2".into(),
        n: 5000,
        seeds: (0..32).collect(),
        players: vec![PlayerSpec::osmd(legendre.parse()?, EtaSetting::Auto, FeedbackMode::SemiBandit)],
        adversaries: vec!["iid".into(), "epsskew:eps=0.1".into()],
        eta_grid: None,
        output_dir: None,
    };
    let cells = harness::sweep_into(&cfg, dir.path())?;
    let bound = regret_bound(family, 2, 8, 5000)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for c in &cells {
        ok &= c.report.mean <= bound && c.report.bound == Some(bound);
        parts.push(format!("{} mean {:.2} (se {:.2})", c.adversary, c.report.mean, c.report.stderr));
    }
    Ok((ok, format!("{}; bound {bound:.2}", parts.join(", "))))
}

fn negentropy_envelope() -> Result<Outcome> {
    let (ok, detail) = envelope("negentropy", BoundFamily::Negentropy)?;
    outcome(ok, format!("OSMD negentropy, semi-bandit, MSet(8,2), n=5000, 32 seeds: {detail}"))
}

fn power_envelope() -> Result<Outcome> {
    let (ok, detail) = envelope("inf:q=2", BoundFamily::Power { q: 2.0 })?;
    let neg = regret_bound(BoundFamily::Negentropy, 1, 16, 1000)?;
    let pow = regret_bound(BoundFamily::Power { q: 2.0 }, 1, 16, 1000)?;
    // 2 sqrt(2 m d n) < sqrt(2 m d n log(d/m)) exactly when log(d/m) > 4
    let neg_wide = regret_bound(BoundFamily::Negentropy, 1, 64, 1000)?;
    let pow_wide = regret_bound(BoundFamily::Power { q: 2.0 }, 1, 64, 1000)?;
    outcome(
        ok && pow < neg,
        format!(
            "OSMD inf:q=2: {detail}; bound comparison at m=1,d=16,n=1000: power {pow:.2} vs negentropy {neg:.2} ({}); \
             the ordering flips at log(d/m)=4, e.g. m=1,d=64: power {pow_wide:.2} vs negentropy {neg_wide:.2}",
            if pow < neg { "power < negentropy" } else { "power >= negentropy" }
        ),
    )
}

fn alternating_monte_carlo() -> Result<Outcome> {
    let set = ActionSet::exp2_lower_bound(4)?;
    let adv = Adversary::from_descriptor("alternating", &set)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for eta in [0.1, 1.0] {
        let spec = PlayerSpec::exp2(EtaSetting::Fixed(eta), 0.0, FeedbackMode::Full);
        let traces = (0..64).map(|s| harness::run_game(&spec, &adv, &set, 100, s)).collect::<Result<Vec<_>>>()?;
        let report = harness::pseudo_regret(&traces, &set, &adv)?;
        let exact = exp2_alternating_regret(4, 100, eta)?;
        let within = (report.mean - exact).abs() <= 3.0 * report.stderr;
        ok &= within;
        parts.push(format!("eta={eta}: mean {:.3} (se {:.3}) vs closed form {exact:.3}", report.mean, report.stderr));
    }
    outcome(ok, format!("Exp2 full information, d=4, n=100, 64 seeds: {}", parts.join("; ")))
}

fn skew_eps(eta: f64, n: usize) -> f64 {
    (2f64.ln() / (eta * n as f64)).min(1.0)
}

fn epsskew_bound() -> Result<Outcome> {
    let n = 100;
    let mut worst_margin = f64::INFINITY;
    for d in [4usize, 8] {
        for eta in [0.001, 0.01, 0.1, 1.0, 10.0] {
            let value = exp2_epsskew_regret(d, n, eta, skew_eps(eta, n))?;
            let floor = (d as f64 * 2f64.ln() / (12.0 * eta)).min((n * d) as f64 / 12.0);
            worst_margin = worst_margin.min(value - floor);
        }
    }
    outcome(
        worst_margin >= 0.0,
        format!("d in {{4,8}}, eta in {{0.001,0.01,0.1,1,10}}, n=100: min(formula - bound) = {worst_margin:.3e}"),
    )
}

fn exp2_lower_bound_grid() -> Result<Outcome> {
    let (d, n) = (8usize, 64usize);
    let target = (0.04 * (n * d) as f64).min(0.01 * (d as f64).powf(1.5) * (n as f64).sqrt());
    let mut worst = f64::INFINITY;
    for k in 0..20 {
        let eta = 10f64.powf(-4.0 + 6.0 * k as f64 / 19.0);
        let alt = exp2_alternating_regret(d, n, eta)?;
        let skew = exp2_epsskew_regret(d, n, eta, skew_eps(eta, n))?;
        worst = worst.min(alt.max(skew));
    }
    outcome(
        worst >= target,
        format!("d=8, n=64, 20 eta values in [1e-4, 1e2]: min over eta of max(alternating, skew) {worst:.3} vs {target:.3}"),
    )
}

fn kl_grid() -> Result<Outcome> {
    let grid = [0.3, 0.4, 0.5, 0.6, 0.7];
    let (mut cases, mut violations) = (0, 0);
    let mut worst_ratio = 0.0f64;
    for &p in &grid {
        for &pp in &grid {
            for n in 2usize..=12 {
                for l in n.div_ceil(2)..=n {
                    for q in [KlQ::P, KlQ::PPrime] {
                        let (kl, bound) = kl_bound_check(p, pp, q, n, l, 0.5)?;
                        cases += 1;
                        if kl > bound {
                            violations += 1;
                        }
                        if bound > 0.0 {
                            worst_ratio = worst_ratio.max(kl / bound);
                        }
                    }
                }
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations in {cases} cases, max kl/bound {worst_ratio:.4}"))
}

fn tech1_grid() -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    for k in 1..=200 {
        for j in 0..=10 {
            worst = worst.min(tech1_ratio(k, 1.0 + j as f64 / 10.0)?);
        }
    }
    outcome(worst >= 1.0 / 3.0 - 1e-12, format!("k <= 200, 11 values of c: min ratio {worst:.12}"))
}

fn projection_vs_grid() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut gap, mut slack) = (0.0f64, f64::INFINITY);
    for (d, m) in [(2usize, 1usize), (3, 2)] {
        let set = ActionSet::mset(d, m)?;
        for f in [LegendreFunction::negentropy(d), power(2.0, d)] {
            for _ in 0..50 {
                let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0f64..2.0).exp()).collect();
                let x = bregman_project(&f, &w, &set)?;
                let grid = brute_force_projection(&f, &w, &set, 1e-3)?;
                gap = gap.max(max_abs_diff(&x, &grid));
                let dxw = f.bregman(&x, &w)?;
                for a in set.enumerate_vertices()? {
                    let a = a.to_dense();
                    slack = slack.min(f.bregman(&a, &w)? - f.bregman(&a, &x)? - dxw);
                }
            }
        }
    }
    outcome(
        gap <= 1e-3 && slack >= -1e-7,
        format!("MSet(2,1), MSet(3,2), 50 w each, both families: max gap {gap:.2e} (tol 1e-3), min Pythagorean slack {slack:.2e}"),
    )
}

fn read_all(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files = fs::read_dir(dir)?
        .map(|e| {
            let e = e?;
            Ok((e.file_name().to_string_lossy().into_owned(), fs::read(e.path())?))
        })
        .collect::<Result<Vec<_>>>()?;
    files.sort();
    Ok(files)
}

fn sweep_determinism() -> Result<Outcome> {
    let cfg: SweepConfig = serde_json::from_str(
        r#"{"set": "exp2lb:d=8", "n": 300, "seeds": [3, 1, 4, 1, 5],
            "players": [
                {"player": "osmd", "legendre": "negentropy", "eta": "auto", "feedback": "semi"},
                {"player": "osmd", "legendre": "inf:q=2", "eta": 0.05, "feedback": "full"},
                {"player": "exp2", "eta": "auto", "feedback": "semi"},
                {"player": "exp2", "eta": 0.1, "gamma": 0.2, "feedback": "bandit"}
            ],
            "adversaries": ["alternating", "epsskew:eps=0.2", "iid"]}"#,
    )?;
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    harness::sweep_into(&cfg, a.path())?;
    harness::sweep_into(&cfg, b.path())?;
    let (fa, fb) = (read_all(a.path())?, read_all(b.path())?);
    outcome(fa == fb && fa.len() == 14, format!("{} files compared byte for byte", fa.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("bregman duality", bregman_duality),
        ("estimator unbiasedness", unbiasedness),
        ("negentropy regret envelope", negentropy_envelope),
        ("power potential envelope", power_envelope),
        ("exp2 alternating closed form", alternating_monte_carlo),
        ("exp2 epsilon-skew bound", epsskew_bound),
        ("exp2 lower bound grid", exp2_lower_bound_grid),
        ("KL of Bernoulli sums", kl_grid),
        ("binomial ratio bound", tech1_grid),
        ("projection correctness", projection_vs_grid),
        ("sweep determinism", sweep_determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check().unwrap_or_else(|e| Outcome { passed: false, detail: format!("error: {e}") });
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {:>2} {:<30} {} [{secs:.2}s] {}",
            i + 1,
            name,
            if result.passed { "PASS" } else { "FAIL" },
            result.detail
        );
        failures += usize::from(!result.passed);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when any
//! criterion fails.

mod common;

use std::fs;
use std::time::{Duration, Instant};

use common::{random_problem, rel_err, synth_spec, table2, table2_path, table3_path, ExactFit};
use defect_model::baselines::{baseline_predict, BaselineModel};
use defect_model::cli;
use defect_model::gate::{
    group_by_candidate, rank_candidates, run_rounds, verify_cases, Candidate, GateCriteria,
    VerificationCase,
};
use defect_model::numerics::{t_cdf, t_quantile, Matrix};
use defect_model::regress::{fit_design, load_model, serialize_model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn run_cli(args: &[&str]) -> (u8, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(
        std::iter::once("defect-model").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    let mut text = String::from_utf8(out).unwrap();
    text.push_str(&String::from_utf8(err).unwrap());
    (code, text)
}

fn c1_equation() -> Outcome {
    const WANT: [(&str, f64, f64); 8] = [
        ("intercept", 4.00, 0.01),
        ("req_error", -0.204, 0.001),
        ("coding_error", -0.631, 0.001),
        ("kloc", 1.90, 0.01),
        ("req_pages", -0.140, 0.001),
        ("design_pages", 0.125, 0.001),
        ("total_test_cases", -0.169, 0.001),
        ("total_effort_days", 0.221, 0.001),
    ];
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let start = Instant::now();
    let (code, text) = run_cli(&["rounds", "--data", &table2_path(), "--out", out]);
    let elapsed = start.elapsed();
    if code != 0 {
        return outcome(false, format!("rounds exited {code}: {text}"));
    }
    let m = load_model(&fs::read_to_string(dir.path().join("round1.json")).unwrap()).unwrap();
    let mut worst = 0.0f64;
    let mut misses = Vec::new();
    for (term, want, tol) in WANT {
        let got = m.coefficient(term).unwrap();
        worst = worst.max((got - want).abs() / tol);
        if (got - want).abs() > tol {
            misses.push(format!("{term}={got:.4}"));
        }
    }
    let fast = elapsed < Duration::from_secs(1);
    outcome(
        misses.is_empty() && fast,
        format!(
            "worst deviation {worst:.2} of tolerance, runtime {:.1} ms{}",
            elapsed.as_secs_f64() * 1e3,
            if misses.is_empty() {
                String::new()
            } else {
                format!(", misses: {}", misses.join(" "))
            }
        ),
    )
}

fn c2_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_015);
    let trials = 120;
    let mut worst = [0.0f64; 4];
    for _ in 0..trials {
        let k = rng.gen_range(1..=5);
        let n = rng.gen_range(k + 3..=20);
        let prob = random_problem(&mut rng, n, k);
        let exact = ExactFit::solve(&prob.x, &prob.y, true);
        let m = fit_design(prob.spec.clone(), &prob.x, &prob.y).unwrap();
        let r = m.predict(&prob.x0[1..], 0.95).unwrap();
        let (lo, hi) = exact.prediction_interval(&prob.x0, 0.95);
        let errs = [
            rel_err(&m.coefficients, &exact.beta_f64()),
            rel_err(&m.std_errors, &exact.std_errors()),
            rel_err(&[m.r_squared], &[exact.r_squared()]),
            rel_err(&[r.pi_low, r.pi_high], &[lo, hi]),
        ];
        for (w, e) in worst.iter_mut().zip(errs) {
            *w = w.max(e);
        }
    }
    let pass = worst.iter().all(|&e| e <= 1e-8);
    outcome(
        pass,
        format!(
            "{trials} instances; max relative error coef {:.1e}, se {:.1e}, r2 {:.1e}, pi {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c3_gate() -> Outcome {
    let results = run_rounds(&table2(), &GateCriteria::default()).unwrap();
    let failing: Vec<String> = results
        .iter()
        .filter(|r| !r.report.pass)
        .map(|r| {
            let worst = r
                .report
                .verdicts
                .iter()
                .filter(|v| v.gated && !v.passed)
                .map(|v| format!("{} = {:.4}", v.item, v.value))
                .collect::<Vec<_>>()
                .join(", ");
            format!("round {} fails ({worst})", r.round.id)
        })
        .collect();
    let passed = results.iter().filter(|r| r.report.pass).count();
    outcome(
        failing.is_empty(),
        format!(
            "{passed}/4 rounds pass the default gate{}",
            if failing.is_empty() {
                String::new()
            } else {
                format!("; {}", failing.join("; "))
            }
        ),
    )
}

fn c4_distribution() -> Outcome {
    let table = [(1.0, 12.706), (6.0, 2.447), (10.0, 2.228)];
    let mut worst_table = 0.0f64;
    for (df, want) in table {
        worst_table = worst_table.max((t_quantile(0.975, df).unwrap() - want).abs());
    }
    let mut worst_inv = 0.0f64;
    for df in 1..=120 {
        for i in 1..=199 {
            let p = f64::from(i) / 200.0;
            let q = t_quantile(p, f64::from(df)).unwrap();
            worst_inv = worst_inv.max((t_cdf(q, f64::from(df)).unwrap() - p).abs());
        }
    }
    outcome(
        worst_table <= 1e-3 && worst_inv <= 1e-9,
        format!(
            "table error {worst_table:.1e}, inverse identity error {worst_inv:.1e} over df 1..120"
        ),
    )
}

fn c5_coverage() -> Outcome {
    let (n, k, trials) = (14usize, 7usize, 10_000usize);
    let mut rng = ChaCha8Rng::seed_from_u64(95);
    let beta: Vec<f64> = (0..=k).map(|j| 0.5 * j as f64 - 1.0).collect();
    let spec = synth_spec(k);
    let start = Instant::now();
    let mut covered = 0usize;
    let mut used = 0usize;
    let draw_row = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        std::iter::once(1.0)
            .chain((0..k).map(|_| rng.sample::<f64, _>(StandardNormal)))
            .collect()
    };
    while used < trials {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| draw_row(&mut rng)).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| {
                r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()
                    + rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let x0 = draw_row(&mut rng);
        let y0 = x0.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()
            + rng.sample::<f64, _>(StandardNormal);
        let Ok(m) = fit_design(spec.clone(), &Matrix::from_rows(&rows).unwrap(), &y) else {
            continue;
        };
        used += 1;
        let r = m.predict(&x0[1..], 0.95).unwrap();
        if r.pi_low <= y0 && y0 <= r.pi_high {
            covered += 1;
        }
    }
    let elapsed = start.elapsed();
    let coverage = covered as f64 / trials as f64;
    outcome(
        (0.93..=0.97).contains(&coverage) && elapsed < Duration::from_secs(30),
        format!(
            "coverage {coverage:.4} over {trials} trials, runtime {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c6_verification() -> Outcome {
    // (label, predicted inside, actual inside) from the published numbers
    const PATTERN: [(&str, bool, bool); 12] = [
        ("functional_total_effort:Project 1", true, true),
        ("functional_total_effort:Project 2", true, true),
        ("functional_total_effort:Project 3", true, true),
        ("all_total_effort:Project 1", true, false),
        ("all_total_effort:Project 2", true, true),
        ("all_total_effort:Project 3", true, true),
        ("functional_test_design_effort:Project 1", false, false),
        ("functional_test_design_effort:Project 2", true, true),
        ("functional_test_design_effort:Project 3", true, true),
        ("all_test_design_effort:Project 1", false, false),
        ("all_test_design_effort:Project 2", true, true),
        ("all_test_design_effort:Project 3", true, true),
    ];
    let text = fs::read_to_string(table3_path()).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let cases: Vec<VerificationCase> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let num = |i: usize| r[i].parse::<f64>().unwrap();
            VerificationCase {
                label: r[0].to_string(),
                predicted: num(1),
                actual: num(2),
                pi_low: num(3),
                pi_high: num(4),
            }
        })
        .collect();
    let overall = verify_cases(&cases).unwrap();
    let mut mismatches = Vec::new();
    for ((label, pred_in, act_in), got) in PATTERN.iter().zip(&overall.cases) {
        if got.label != *label || got.predicted_in_pi != *pred_in || got.actual_in_pi != *act_in {
            mismatches.push(got.label.clone());
        }
    }
    let candidates: Vec<Candidate> = group_by_candidate(&cases)
        .into_iter()
        .map(|(name, members)| Candidate {
            name,
            outcome: verify_cases(&members).unwrap(),
        })
        .collect();
    let ranked = rank_candidates(&candidates).unwrap();
    let first = ranked[0].name.clone();
    let (code, _) = run_cli(&["verify", "--cases", &table3_path()]);
    let pass = mismatches.is_empty()
        && overall.cases.len() == PATTERN.len()
        && first == "functional_total_effort"
        && code == 0;
    outcome(
        pass,
        format!(
            "predicted in PI {}/12, actual in PI {}/12, first ranked {first}{}",
            overall.predicted_in_count(),
            overall.actual_in_count(),
            if mismatches.is_empty() {
                String::new()
            } else {
                format!(", mismatches: {mismatches:?}")
            }
        ),
    )
}

fn c7_baselines() -> Outcome {
    let a = baseline_predict(BaselineModel::LinearLoc, 1000.0).unwrap();
    let b = baseline_predict(BaselineModel::PowerLoc, 0.0).unwrap();
    outcome(
        a == 22.86 && b == 4.2,
        format!("linear_loc(1000) = {a}, power_loc(0) = {b}"),
    )
}

fn c8_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    for trial in 0..200 {
        let k = rng.gen_range(1..=5);
        let n = rng.gen_range(k + 3..=20);
        let prob = random_problem(&mut rng, n, k);
        let m = fit_design(prob.spec.clone(), &prob.x, &prob.y).unwrap();
        let ynorm: f64 = prob.y.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);

        for j in 0..=k {
            let col = prob.x.column(j);
            let cn: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = col.iter().zip(&m.residuals).map(|(a, b)| a * b).sum();
            if dot.abs() > 1e-10 * cn * ynorm {
                failures.push(format!("orthogonality #{trial}"));
            }
        }

        if k > 1 {
            let rows: Vec<Vec<f64>> = (0..n).map(|i| prob.x.row(i)[..k].to_vec()).collect();
            let small = fit_design(
                synth_spec(k - 1),
                &Matrix::from_rows(&rows).unwrap(),
                &prob.y,
            )
            .unwrap();
            if small.r_squared > m.r_squared + 1e-12 {
                failures.push(format!("nested r2 #{trial}"));
            }
        }

        let c = 37.5;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = prob.x.row(i).to_vec();
                r[k] *= c;
                r
            })
            .collect();
        let scaled = fit_design(
            prob.spec.clone(),
            &Matrix::from_rows(&rows).unwrap(),
            &prob.y,
        )
        .unwrap();
        let want = m.coefficients[k] / c;
        let coef_ok =
            (scaled.coefficients[k] - want).abs() <= 1e-9 * want.abs().max(m.std_errors[k] / c);
        let p_ok = scaled
            .p_values
            .iter()
            .zip(&m.p_values)
            .all(|(a, b)| (a - b).abs() <= 1e-9);
        if !(coef_ok && p_ok) {
            failures.push(format!("scaling #{trial}"));
        }

        let r = m.predict(&prob.x0[1..], 0.95).unwrap();
        if !(r.pi_low <= r.ci_low && r.ci_high <= r.pi_high) {
            failures.push(format!("pi contains ci #{trial}"));
        }

        let again = fit_design(prob.spec.clone(), &prob.x, &prob.y).unwrap();
        if serialize_model(&m) != serialize_model(&again) {
            failures.push(format!("serialization #{trial}"));
        }
    }

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (_, ta) = run_cli(&[
        "rounds",
        "--data",
        &table2_path(),
        "--out",
        a.path().to_str().unwrap(),
    ]);
    let (_, tb) = run_cli(&[
        "rounds",
        "--data",
        &table2_path(),
        "--out",
        b.path().to_str().unwrap(),
    ]);
    let files_equal = (1..=4).all(|i| {
        let name = format!("round{i}.json");
        fs::read(a.path().join(&name)).unwrap() == fs::read(b.path().join(&name)).unwrap()
    });
    if ta != tb || !files_equal {
        failures.push("rerun output differs".into());
    }

    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "orthogonality, nested R², scaling, PI ⊇ CI and reruns hold on 200 instances"
                .to_string()
        } else {
            format!("violations: {}", failures.join(", "))
        },
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("C1", "round-1 equation reproduction", c1_equation),
        ("C2", "oracle equivalence", c2_oracle),
        ("C3", "gate reproduction", c3_gate),
        ("C4", "distribution accuracy", c4_distribution),
        ("C5", "prediction-interval coverage", c5_coverage),
        ("C6", "verification harness", c6_verification),
        ("C7", "baseline arithmetic", c7_baselines),
        ("C8", "invariant suites", c8_invariants),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {id} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

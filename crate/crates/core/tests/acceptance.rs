//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mfspin::cli::config::DEFAULT_SEED;
use mfspin::exact::{brute_force_moments, cw_distribution, exact_moments, ms_distribution};
use mfspin::experiments::{
    canonical_cases, cw_recovery_sweep, ms_case_sweep, sample_scaling_study, size_scaling_study, SweepCase,
};
use mfspin::meanfield::{chi_ms, solve_ms, unique_stable};
use mfspin::sampling::{replicate_seeds, Sampler};
use mfspin::{ms_invert, CwParams, FractionVector, Matrix, Model, MsParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    check(t < budget, || format!("took {t:.1?}, budget {budget:?}"))
}

fn random_symmetric(rng: &mut ChaCha20Rng, k: usize) -> Matrix {
    let mut j = Matrix::zeros(k);
    for a in 0..k {
        j[(a, a)] = rng.random_range(0.55..=1.2);
        for b in a + 1..k {
            let x = rng.random_range(-0.6..=1.1);
            j[(a, b)] = x;
            j[(b, a)] = x;
        }
    }
    j
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let model: Model = if trial % 2 == 0 {
            CwParams::new(
                rng.random_range(1..=12),
                rng.random_range(0.0..=1.2),
                rng.random_range(-0.3..=0.3),
            )
            .unwrap()
            .into()
        } else {
            let n1 = rng.random_range(1..=6);
            let n2 = rng.random_range(1..=12 - n1);
            let j = random_symmetric(&mut rng, 2);
            let h = vec![rng.random_range(-0.3..=0.3), rng.random_range(-0.3..=0.3)];
            MsParams::new(vec![n1, n2], j, h).unwrap().into()
        };
        let dist = match &model {
            Model::CurieWeiss(p) => cw_distribution(p),
            Model::MultiSpecies(p) => ms_distribution(p),
        }
        .map_err(|e| e.to_string())?;
        let fast = exact_moments(&dist);
        let slow = brute_force_moments(&model).map_err(|e| e.to_string())?;
        let diffs = fast
            .mean
            .iter()
            .zip(&slow.mean)
            .chain(fast.second.as_slice().iter().zip(slow.second.as_slice()))
            .chain(
                fast.finite_size_chi
                    .as_slice()
                    .iter()
                    .zip(slow.finite_size_chi.as_slice()),
            )
            .map(|(a, b)| (a - b).abs());
        for d in diffs {
            worst = worst.max(d);
        }
        check(worst <= 1e-10, || {
            format!("trial {trial} ({model:?}): deviation {worst:e}")
        })?;
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!("50 sets, max deviation {worst:.1e}"))
}

fn analytic_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    while accepted < 100 {
        let k = 1 + accepted % 3;
        let j = random_symmetric(&mut rng, k);
        let h: Vec<f64> = (0..k).map(|_| rng.random_range(-0.3..=0.3)).collect();
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(1..=1000)).collect();
        let alpha = FractionVector::from_sizes(&sizes).unwrap();
        let sols = solve_ms(&alpha, &j, &h).map_err(|e| e.to_string())?;
        let Ok(sol) = unique_stable(&sols) else { continue };
        if sols.len() != 1 {
            continue;
        }
        let chi = chi_ms(&alpha, &j, sol).map_err(|e| e.to_string())?;
        let inv = ms_invert(&sol.magnetization, chi.matrix(), &alpha).map_err(|e| e.to_string())?;
        let err = inv
            .j_exp
            .as_slice()
            .iter()
            .zip(j.as_slice())
            .chain(inv.h_exp.iter().zip(&h))
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        worst = worst.max(err);
        check(err <= 1e-10, || format!("k={k}, J={j:?}, h={h:?}: error {err:e}"))?;
        accepted += 1;
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!("100 sets over k = 1, 2, 3, max error {worst:.1e}"))
}

fn finite_size_scaling() -> Outcome {
    let start = Instant::now();
    let sizes: Vec<usize> = (1..=10).map(|i| 1000 * i).collect();
    let study = size_scaling_study(1.2, 0.3, &sizes).map_err(|e| e.to_string())?;
    let m = study.m_fit.fitted().ok_or("magnetization fit degenerate")?;
    let c = study.chi_fit.fitted().ok_or("susceptibility fit degenerate")?;
    for (name, f) in [("b", m), ("d", c)] {
        check((-1.05..=-0.95).contains(&f.exponent), || {
            format!("{name} = {}", f.exponent)
        })?;
        check(f.r_squared > 0.999, || format!("R² for {name} = {}", f.r_squared))?;
    }
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!(
        "a = {:.4}, b = {:.4}, c = {:.4}, d = {:.4}, R² = {:.7}, {:.7}",
        m.amplitude, m.exponent, c.amplitude, c.exponent, m.r_squared, c.r_squared
    ))
}

fn sample_size_scaling() -> Outcome {
    let start = Instant::now();
    let params = CwParams::new(10_000, 0.6, 0.1).unwrap();
    let study =
        sample_scaling_study(&params, &[100, 1_000, 10_000, 100_000], 20, DEFAULT_SEED).map_err(|e| e.to_string())?;
    let alpha = -study.m_fit.exponent;
    let beta = -study.chi_fit.exponent;
    check((alpha - 0.4933).abs() <= 0.12, || format!("alpha = {alpha}"))?;
    check((beta - 0.5175).abs() <= 0.2, || format!("beta = {beta}"))?;
    within_budget(start, Duration::from_secs(300))?;
    Ok(format!("alpha = {alpha:.4}, beta = {beta:.4}"))
}

fn curie_weiss_recovery() -> Outcome {
    let start = Instant::now();
    let grid: Vec<f64> = (0..7).map(|i| 0.6 + 0.1 * i as f64).collect();
    let mut worst_pct: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    for (i, h) in [0.1, -0.1].into_iter().enumerate() {
        let cases =
            cw_recovery_sweep(&grid, h, 10_000, 20_000, 20, DEFAULT_SEED + i as u64).map_err(|e| e.to_string())?;
        for c in &cases {
            let j = c.true_coupling()[(0, 0)];
            let mean = &c.result.mean;
            let std = c.result.std.as_ref().ok_or("no replicate spread")?;
            let (dj, sj) = ((mean.j_exp[(0, 0)] - j).abs(), std.j_exp[(0, 0)]);
            let (dh, sh) = ((mean.h_exp[0] - h).abs(), std.h_exp[0]);
            worst_sigma = worst_sigma.max(dj / sj).max(dh / sh);
            check(dj <= 3.0 * sj, || {
                format!("J = {j}, h = {h}: |ΔJ| = {dj:.4} > 3 × {sj:.4}")
            })?;
            check(dh <= 3.0 * sh, || {
                format!("J = {j}, h = {h}: |Δh| = {dh:.4} > 3 × {sh:.4}")
            })?;
            let pct = 100.0 * dj / j;
            worst_pct = worst_pct.max(pct);
            check(pct < 5.0, || format!("J = {j}, h = {h}: relative error {pct:.2}%"))?;
        }
    }
    within_budget(start, Duration::from_secs(600))?;
    Ok(format!(
        "14 grid points, worst {worst_sigma:.2} std, worst J error {worst_pct:.2}%"
    ))
}

fn canonical_sweep() -> &'static Result<Vec<SweepCase>, String> {
    static SWEEP: OnceLock<Result<Vec<SweepCase>, String>> = OnceLock::new();
    SWEEP.get_or_init(|| ms_case_sweep(&canonical_cases(), 10_000, 20, DEFAULT_SEED).map_err(|e| e.to_string()))
}

fn paper_case(id: usize, j: [[(f64, f64); 2]; 2], h: [(f64, f64); 2]) -> Outcome {
    let start = Instant::now();
    let sweep = canonical_sweep().as_ref().map_err(Clone::clone)?;
    let case = sweep.iter().find(|c| c.case_id == id).ok_or("case missing")?;
    let mean = &case.result.mean;
    let mut worst: f64 = 0.0;
    for (a, row) in j.iter().enumerate() {
        for (b, &(v, s)) in row.iter().enumerate() {
            let got = mean.j_exp[(a, b)];
            worst = worst.max((got - v).abs() / s);
            check((got - v).abs() <= 3.0 * s, || {
                format!("J_{}{} = {got:.4}, reference {v} ± {s}", a + 1, b + 1)
            })?;
        }
        let (v, s) = h[a];
        let got = mean.h_exp[a];
        worst = worst.max((got - v).abs() / s);
        check((got - v).abs() <= 3.0 * s, || {
            format!("h_{} = {got:.4}, reference {v} ± {s}", a + 1)
        })?;
    }
    within_budget(start, Duration::from_secs(900))?;
    Ok(format!(
        "J_exp = [[{:.3}, {:.3}], [{:.3}, {:.3}]], h_exp = ({:.3}, {:.3}), worst {worst:.2} reference std",
        mean.j_exp[(0, 0)],
        mean.j_exp[(0, 1)],
        mean.j_exp[(1, 0)],
        mean.j_exp[(1, 1)],
        mean.h_exp[0],
        mean.h_exp[1]
    ))
}

fn case_1() -> Outcome {
    paper_case(
        1,
        [[(1.173, 0.036), (0.993, 0.028)], [(0.993, 0.028), (0.794, 0.040)]],
        [(0.102, 0.012), (0.198, 0.011)],
    )
}

fn case_18() -> Outcome {
    paper_case(
        18,
        [[(0.601, 0.022), (-0.798, 0.019)], [(-0.798, 0.019), (0.901, 0.020)]],
        [(-0.201, 0.005), (-0.300, 0.005)],
    )
}

fn monotonicity() -> Outcome {
    let sizes = [100, 200, 500, 1000, 2000, 5000];
    let series = |j: f64, h: f64| -> Result<Vec<(f64, f64)>, String> {
        sizes
            .iter()
            .map(|&n| {
                let d = cw_distribution(&CwParams::new(n, j, h).unwrap()).map_err(|e| e.to_string())?;
                Ok(exact_moments(&d).scalar())
            })
            .collect()
    };
    let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let weak = series(0.6, 0.1)?;
    let strong = series(1.2, 0.3)?;
    let (wm, wc): (Vec<f64>, Vec<f64>) = weak.into_iter().unzip();
    let (sm, sc): (Vec<f64>, Vec<f64>) = strong.into_iter().unzip();
    check(increasing(&wm), || format!("m_N at J=0.6: {wm:?}"))?;
    check(increasing(&wc), || format!("chi_N at J=0.6: {wc:?}"))?;
    check(increasing(&sm), || format!("m_N at J=1.2: {sm:?}"))?;
    check(decreasing(&sc), || format!("chi_N at J=1.2: {sc:?}"))?;
    Ok("m_N increasing at both points, chi_N increasing at J=0.6 and decreasing at J=1.2".into())
}

/// Pearson statistic with adjacent cells merged until every bin expects
/// at least 5 draws.
fn chi_square(observed: &[u64], expected: &[f64]) -> (f64, usize) {
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob as f64;
        e += ex;
        if e >= 5.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += o;
        last.1 += e;
    }
    let stat = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    (stat, bins.len() - 1)
}

fn sampler_chi_square() -> Outcome {
    let dist = cw_distribution(&CwParams::new(100, 0.6, 0.1).unwrap()).map_err(|e| e.to_string())?;
    let sampler = Sampler::new(&dist).map_err(|e| e.to_string())?;
    let m = 1_000_000;
    let expected: Vec<f64> = dist.probabilities().iter().map(|p| p * m as f64).collect();
    let mut stats = Vec::new();
    for seed in replicate_seeds(DEFAULT_SEED, 3).unwrap() {
        let sample = sampler.draw(m, seed).map_err(|e| e.to_string())?;
        let mut observed = vec![0u64; dist.len()];
        for &c in sample.all_counts() {
            observed[c as usize] += 1;
        }
        let (stat, df) = chi_square(&observed, &expected);
        let critical = ChiSquared::new(df as f64).unwrap().inverse_cdf(0.999);
        check(stat < critical, || {
            format!("seed {seed}: {stat:.2} >= {critical:.2} (df {df})")
        })?;
        stats.push(format!("{stat:.1}/{critical:.1}"));
    }
    Ok(format!("statistic/critical: {}", stats.join(", ")))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let runs = [
        "sample --N 500 --J 0.8 --h 0.05 --M 2000 --R 3",
        "invert --N 1000 --J 0.6 --h 0.1 --M 5000 --R 5",
        "exact --model ms --N 30,40 --J 0.6,-0.8,-0.8,0.9 --h -0.2,-0.3",
        "study-n --N 1000,2000,4000 --J 1.2 --h 0.3",
        "study-m --N 2000 --J 0.6 --h 0.1 --M 100,1000,10000 --R 10",
        "sweep-cw --N 2000 --J 0.6,0.9,1.2 --h 0.1 --M 5000 --R 10",
        "sweep-ms --M 10000 --R 20",
    ];
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?;
    let mut files = 0;
    for (i, run) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let dir = tmp.path().join(format!("{i}-{attempt}"));
            let argv: Vec<String> = std::iter::once("mfspin".to_owned())
                .chain(run.split_whitespace().map(str::to_owned))
                .chain(["--output".to_owned(), dir.display().to_string()])
                .collect();
            let go = || -> Result<(), String> {
                let config = mfspin::cli::parse_config(argv).map_err(|e| e.to_string())?;
                let files = mfspin::cli::execute(&config).map_err(|e| format!("`{run}`: {e}"))?;
                mfspin::cli::emit(&files, &config, Duration::ZERO).map_err(|e| e.to_string())?;
                Ok(())
            };
            // The second run is single-threaded.
            if attempt == 0 {
                go()?;
            } else {
                single.install(go)?;
            }
            outputs.push(csv_files(&dir));
        }
        check(!outputs[0].is_empty(), || format!("`{run}` wrote no CSV"))?;
        check(outputs[0] == outputs[1], || format!("`{run}` differs between runs"))?;
        files += outputs[0].len();
    }
    Ok(format!(
        "{} commands, {files} CSV files byte-identical across runs and thread counts",
        runs.len()
    ))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("analytic round-trip", analytic_round_trip),
        ("finite-size scaling", finite_size_scaling),
        ("sample-size scaling", sample_size_scaling),
        ("Curie-Weiss recovery", curie_weiss_recovery),
        ("two-species case 1", case_1),
        ("two-species case 18", case_18),
        ("monotonicity", monotonicity),
        ("sampler chi-square", sampler_chi_square),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{t:.1?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{t:.1?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

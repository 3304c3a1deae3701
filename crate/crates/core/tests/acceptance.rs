//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, StudentsT};

use dtvw::combine::{bma_weights, Combiner, CombinerResult, FilterCombiner, IndividualModel};
use dtvw::config::RunConfig;
use dtvw::dgp::{simulate, Design, SimSpec};
use dtvw::diversity::scaled_diversity;
use dtvw::experiment::{run_experiment, with_threads, SCORES_FILE};
use dtvw::filter::{self, systematic_resample, FilterConfig};
use dtvw::link::softmax_link;
use dtvw::metrics::{crps_from_draws, crps_or_abs, dm_test, rmsfe};
use dtvw::rng::substream;
use dtvw::tune::{filter_crps_objective, grid_search, GridSpec, ObjectiveSpec};
use dtvw::{LatentMode, ModelMatrix};

const SEEDS: u64 = 20;
const T: usize = 100;

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

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn naive_diversity(col: &[f64]) -> Vec<f64> {
    let denom: f64 = col.iter().flat_map(|a| col.iter().map(move |b| (a - b).powi(2))).sum();
    col.iter()
        .map(|a| col.iter().map(|b| (a - b).powi(2)).sum::<f64>() / denom)
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let k = rng.random_range(2..=8);
        let l = rng.random_range(1..=3);
        let data: Vec<f64> = (0..k * l).map(|_| rng.random_range(-5.0..5.0)).collect();
        let m = ModelMatrix::from_vec(k, l, data.clone()).unwrap();
        let d = scaled_diversity(&m).unwrap();
        let (shift, scale) = (rng.random_range(-100.0..100.0), rng.random_range(0.01..100.0));
        let moved = ModelMatrix::from_vec(k, l, data.iter().map(|v| shift + scale * v).collect()).unwrap();
        let dm = scaled_diversity(&moved).unwrap();
        for j in 0..l {
            let col = &data[j * k..(j + 1) * k];
            let sum: f64 = (0..k).map(|i| d.get(i, j)).sum();
            worst = worst.max((sum - 1.0).abs());
            for (i, want) in naive_diversity(col).into_iter().enumerate() {
                worst = worst.max((d.get(i, j) - want).abs());
                worst = worst.max((dm.get(i, j) - d.get(i, j)).abs());
            }
        }
        let pair = ModelMatrix::from_vec(2, 1, vec![data[0], data[1] + 1.0]).unwrap();
        let p = scaled_diversity(&pair).unwrap();
        worst = worst.max((p.get(0, 0) - 0.5).abs()).max((p.get(1, 0) - 0.5).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-10 && secs < 1.0, format!("max deviation {worst:.2e}, {secs:.3}s"))
}

fn naive_crps(x: &[f64], y: f64) -> f64 {
    let n = x.len() as f64;
    let a: f64 = x.iter().map(|v| (v - y).abs()).sum::<f64>() / n;
    let b: f64 = x.iter().flat_map(|u| x.iter().map(move |v| (u - v).abs())).sum::<f64>() / (n * n);
    a - 0.5 * b
}

/// Closed-form CRPS of `N(0, 1)` at `y = 0`: `2 phi(0) - 1/sqrt(pi)`.
fn normal_crps_at_zero() -> f64 {
    let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    2.0 * phi0 - 1.0 / std::f64::consts::PI.sqrt()
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..2_000 {
        let d = rng.random_range(2..=200);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y = rng.random_range(-4.0..4.0);
        worst = worst.max((crps_from_draws(&x, y).unwrap() - naive_crps(&x, y)).abs());
    }
    let mut rng = substream(0, "acceptance-crps", 0);
    let draws: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
    let sample = crps_from_draws(&draws, 0.0).unwrap();
    let analytic = normal_crps_at_zero();
    let rel = (sample - analytic).abs() / analytic;
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && (analytic - 0.23370).abs() < 5e-5 && rel < 0.02 && secs < 1.0;
    outcome(
        pass,
        format!("sorted vs naive {worst:.2e}; N(0,1) sample {sample:.5} vs {analytic:.5} ({:.2}%), {secs:.3}s", 100.0 * rel),
    )
}

fn brute_dm(a: &[f64], b: &[f64], h: usize) -> (f64, f64) {
    let n = a.len();
    let d: Vec<f64> = (0..n).map(|i| a[i] - b[i]).collect();
    let mut dbar = 0.0;
    for v in &d {
        dbar += v;
    }
    dbar /= n as f64;
    let mut lrv = 0.0;
    for j in 0..h {
        let mut g = 0.0;
        for i in j..n {
            g += (d[i] - dbar) * (d[i - j] - dbar);
        }
        g /= n as f64;
        lrv += if j == 0 { g } else { 2.0 * (1.0 - j as f64 / h as f64) * g };
    }
    let (nf, hf) = (n as f64, h as f64);
    let correction = ((nf + 1.0 - 2.0 * hf + hf * (hf - 1.0) / nf) / nf).sqrt();
    let stat = correction * dbar / (lrv / nf).sqrt();
    let p = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, nf - 1.0).unwrap().cdf(stat.abs()));
    (stat, p)
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(20..200);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.2)).collect();
        for h in [1, 3] {
            let got = dm_test(&a, &b, h).unwrap();
            let (s, p) = brute_dm(&a, &b, h);
            worst = worst.max((got.statistic - s).abs()).max((got.p_value - p).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.2e} over 50 pairs, h = 1 and 3"))
}

fn criterion_4() -> Outcome {
    let n_steps = 200;
    let mut spec = SimSpec::new(Design::CompleteAr, n_steps, 4);
    spec.n_draws = 5;
    let (obs, panel) = simulate(&spec).unwrap();
    let cfg = FilterConfig {
        mode: LatentMode::Tvw,
        particles: 1,
        sigma_x: 0.0,
        sigma_alpha: 0.0,
        allow_zero_noise: true,
        seed: 4,
        ..FilterConfig::default()
    };
    let out = filter::run(&obs, &panel, &cfg).unwrap();
    let k_n = panel.n_models();
    // Zero noise keeps the latent state at its start, so the weights never move.
    let mut x = vec![0.0; k_n];
    let mut mismatches = 0;
    for row in &out.rows {
        x = x.iter().map(|v| v + 0.0).collect();
        let w = softmax_link(&x).unwrap();
        let point = (0..k_n).fold(0.0, |acc, k| acc + w[k] * panel.mean(row.t, k, 0, 1));
        let same_w = (0..k_n).all(|k| row.mean_weights.get(k, 0).to_bits() == w[k].to_bits());
        if !same_w || row.forecasts[0].point[0].to_bits() != point.to_bits() {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0 && out.rows.len() == n_steps,
        format!("{mismatches} of {} steps differ bitwise", out.rows.len()),
    )
}

fn criterion_5() -> Outcome {
    let w = bma_weights(&[vec![0.0, -(3f64.ln())], vec![0.0, 0.0]], None).unwrap();
    outcome(w[1] == [0.75, 0.25], format!("weights {:?}", w[1]))
}

fn criterion_6() -> Outcome {
    let mut rng = substream(6, "acceptance-resample", 0);
    let uniform = systematic_resample(&[0.25; 4], &mut rng).unwrap();
    let degenerate = systematic_resample(&[0.0, 0.0, 1.0, 0.0], &mut rng).unwrap();
    let mut sorted = uniform.clone();
    sorted.sort_unstable();
    outcome(
        sorted == [0, 1, 2, 3] && degenerate == [2, 2, 2, 2],
        format!("uniform {uniform:?}, degenerate {degenerate:?}"),
    )
}

fn criterion_7() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pseudo_empirical/config.toml");
    let mut bytes = Vec::new();
    for threads in [1, 8, 1, 8] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::from_file(&fixture).unwrap();
        cfg.output = dir.path().to_path_buf();
        with_threads(threads, || run_experiment(&cfg)).unwrap().unwrap();
        bytes.push(std::fs::read(dir.path().join(SCORES_FILE)).unwrap());
    }
    let same = bytes.windows(2).all(|w| w[0] == w[1]);
    outcome(same, format!("4 runs (1, 8, 1, 8 threads), scores.csv {} bytes", bytes[0].len()))
}

fn filter_result(obs: &dtvw::ObservationSeries, panel: &dtvw::PredictorPanel, mode: LatentMode, seed: u64, alpha0: Option<[f64; 3]>) -> CombinerResult {
    let mut config = FilterConfig::with_mode(mode);
    config.seed = seed;
    if let Some(a) = alpha0 {
        config.alpha0 = a;
    }
    FilterCombiner { config }.combine(obs, panel).unwrap()
}

fn points(r: &CombinerResult) -> Vec<f64> {
    r.rows.iter().map(|row| row.forecasts[0].point[0]).collect()
}

struct CompleteRuns {
    m1_weight: Vec<Vec<f64>>,
    alpha0: Vec<Vec<f64>>,
    alpha1: Vec<Vec<f64>>,
    /// `[M1, M2, M3, TVW, DTVW]` per seed.
    rmsfe: Vec<[f64; 5]>,
    secs: f64,
}

fn complete_runs() -> CompleteRuns {
    let start = Instant::now();
    let mut runs = CompleteRuns {
        m1_weight: vec![Vec::new(); T],
        alpha0: vec![Vec::new(); T],
        alpha1: vec![Vec::new(); T],
        rmsfe: Vec::new(),
        secs: 0.0,
    };
    for seed in 0..SEEDS {
        let (obs, panel) = simulate(&SimSpec::new(Design::CompleteAr, T, seed)).unwrap();
        let y = obs.variable(0);
        let score = |r: &CombinerResult| rmsfe(&y, &points(r)).unwrap();
        let models: Vec<f64> = IndividualModel::all(&obs, &panel, 1.0).unwrap().iter().map(score).collect();
        let tvw = filter_result(&obs, &panel, LatentMode::Tvw, seed, None);
        let adaptive = filter_result(&obs, &panel, LatentMode::AdaptiveTvw, seed, None);
        let dtvw = filter_result(&obs, &panel, LatentMode::Dtvw, seed, None);
        runs.rmsfe.push([models[0], models[1], models[2], score(&tvw), score(&dtvw)]);
        let alphas = adaptive.alphas.as_ref().unwrap();
        for t in 0..T {
            runs.m1_weight[t].push(dtvw.rows[t].weights.get(0, 0));
            runs.alpha0[t].push(alphas[t].mean[0]);
            runs.alpha1[t].push(alphas[t].mean[1]);
        }
    }
    runs.secs = start.elapsed().as_secs_f64();
    runs
}

fn criterion_8(r: &CompleteRuns) -> Outcome {
    // Rows are 0-based; row 39 is t = 40.
    let worst = (39..T).map(|t| median(r.m1_weight[t].clone())).fold(f64::INFINITY, f64::min);
    outcome(worst > 0.9, format!("min over t >= 40 of median M1 weight {worst:.4}"))
}

fn criterion_9(r: &CompleteRuns) -> Outcome {
    let ordered = r
        .rmsfe
        .iter()
        .filter(|[m1, m2, m3, tvw, dtvw]| m1 < dtvw && dtvw <= tvw && tvw < m2 && m2 < m3)
        .count();
    let dtvw_le_tvw = r.rmsfe.iter().filter(|s| s[4] <= s[3]).count();
    let med: Vec<f64> = (0..5).map(|i| median(r.rmsfe.iter().map(|s| s[i]).collect())).collect();
    let pass = ordered >= 16 && (0.05..=0.08).contains(&med[4]);
    outcome(
        pass,
        format!(
            "ordering holds in {ordered}/20 (DTVW <= TVW in {dtvw_le_tvw}/20); median RMSFE M1 {:.4} DTVW {:.4} TVW {:.4} M2 {:.4} M3 {:.4}",
            med[0], med[4], med[3], med[1], med[2]
        ),
    )
}

fn criterion_10(r: &CompleteRuns) -> Outcome {
    let a1: Vec<f64> = (0..T).map(|t| median(r.alpha1[t].clone())).collect();
    let a0: Vec<f64> = (0..T).map(|t| median(r.alpha0[t].clone())).collect();
    let (lo, hi) = a1.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let a0_max = a0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    outcome(
        lo >= 7.0 && hi <= 11.0 && a0_max < 1.0,
        format!("median alpha1 in [{lo:.3}, {hi:.3}], max |median alpha0| {a0_max:.3}"),
    )
}

struct IncompleteRuns {
    /// `(LS, CRPS)` of TVW and DTVW per seed.
    tvw: Vec<(f64, f64)>,
    dtvw: Vec<(f64, f64)>,
    model_crps: Vec<Vec<f64>>,
    alpha2_positive: Vec<f64>,
    secs: f64,
}

fn incomplete_runs() -> IncompleteRuns {
    let start = Instant::now();
    let mut runs = IncompleteRuns {
        tvw: Vec::new(),
        dtvw: Vec::new(),
        model_crps: Vec::new(),
        alpha2_positive: Vec::new(),
        secs: 0.0,
    };
    for seed in 0..SEEDS {
        let (obs, panel) = simulate(&SimSpec::new(Design::NonlinearIncomplete, T, seed)).unwrap();
        let y = obs.variable(0);
        let crps = |r: &CombinerResult| r.rows.iter().map(|row| crps_or_abs(&row.forecasts[0].draws[0], y[row.t])).sum::<f64>() / T as f64;
        let ls = |r: &CombinerResult| -r.rows.iter().map(|row| row.forecasts[0].log_predictive.unwrap()).sum::<f64>() / T as f64;
        let models = IndividualModel::all(&obs, &panel, 1.0).unwrap();
        runs.model_crps.push(models.iter().map(crps).collect());
        let tvw = filter_result(&obs, &panel, LatentMode::Tvw, seed, None);
        let dtvw = filter_result(&obs, &panel, LatentMode::Dtvw, seed, Some([0.0, 7.0, 7.0]));
        runs.tvw.push((ls(&tvw), crps(&tvw)));
        runs.dtvw.push((ls(&dtvw), crps(&dtvw)));
        let alphas = dtvw.alphas.as_ref().unwrap();
        runs.alpha2_positive.push(alphas.iter().filter(|a| a.mean[2] > 0.0).count() as f64 / alphas.len() as f64);
    }
    runs.secs = start.elapsed().as_secs_f64();
    runs
}

/// One-sided sign test: `P(X >= wins)` for `X ~ Bin(n, 1/2)`.
fn sign_test(wins: usize, n: usize) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0f64;
    for k in 0..=n {
        if k >= wins {
            total += c;
        }
        c = c * (n - k) as f64 / (k + 1) as f64;
    }
    total / 2f64.powi(n as i32)
}

fn criterion_11(r: &IncompleteRuns) -> Outcome {
    let improvement = |get: fn(&(f64, f64)) -> f64| {
        let diffs: Vec<f64> = r.tvw.iter().zip(&r.dtvw).map(|(a, b)| get(a) - get(b)).collect();
        let wins = diffs.iter().filter(|d| **d > 0.0).count();
        let nonzero = diffs.iter().filter(|d| **d != 0.0).count();
        (median(diffs), wins, sign_test(wins, nonzero))
    };
    let (ls_med, ls_wins, ls_p) = improvement(|s| s.0);
    let (cr_med, cr_wins, cr_p) = improvement(|s| s.1);
    let tvw_crps = median(r.tvw.iter().map(|s| s.1).collect());
    let dtvw_crps = median(r.dtvw.iter().map(|s| s.1).collect());
    let k_n = r.model_crps[0].len();
    let best_model = (0..k_n).map(|k| median(r.model_crps.iter().map(|m| m[k]).collect())).fold(f64::INFINITY, f64::min);
    let pass = ls_med > 0.0 && ls_p < 0.05 && cr_med > 0.0 && cr_p < 0.05 && tvw_crps < best_model && dtvw_crps < best_model;
    outcome(
        pass,
        format!(
            "DTVW vs TVW: LS gain {ls_med:.4} ({ls_wins}/20, p {ls_p:.3}), CRPS gain {cr_med:.4} ({cr_wins}/20, p {cr_p:.3}); \
             median CRPS TVW {tvw_crps:.4} DTVW {dtvw_crps:.4} best model {best_model:.4}"
        ),
    )
}

fn criterion_12() -> Outcome {
    let start = Instant::now();
    let spec = GridSpec::two_stage(-10.0, 10.0, 2.0, 0.5);
    let objective = ObjectiveSpec::default();
    let mut hits = 0;
    let mut bests = Vec::new();
    for seed in 0..SEEDS {
        let (obs, panel) = simulate(&SimSpec::new(Design::CompleteAr, T, seed)).unwrap();
        let base = FilterConfig {
            seed,
            ..FilterConfig::with_mode(LatentMode::Dtvw)
        };
        let res = grid_search(&spec, filter_crps_objective(&obs, &panel, &base, &objective)).unwrap();
        if res.best[1] >= 0.0 && res.best[0] >= 3.0 {
            hits += 1;
        }
        bests.push(format!("({},{})", res.best[0], res.best[1]));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        hits >= 15 && secs < 600.0,
        format!("{hits}/20 incumbents in alpha1 >= 3, alpha2 >= 0, {secs:.1}s; incumbents {}", bests.join(" ")),
    )
}

fn criterion_13(r: &IncompleteRuns) -> Outcome {
    let med = median(r.alpha2_positive.clone());
    outcome(med >= 0.9, format!("median share of t with alpha2 > 0: {med:.3}"))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: u32, o: Outcome| {
        println!("{} criterion {n:>2}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    let complete = complete_runs();
    report(8, criterion_8(&complete));
    report(9, criterion_9(&complete));
    report(10, criterion_10(&complete));
    let incomplete = incomplete_runs();
    report(11, criterion_11(&incomplete));
    report(12, criterion_12());
    report(13, criterion_13(&incomplete));
    println!(
        "simulation runs: complete design {:.1}s, incomplete design {:.1}s",
        complete.secs, incomplete.secs
    );
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

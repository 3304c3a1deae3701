use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dtvw::combine::{bma_weights, Combiner, EqualCombiner};
use dtvw::dgp::{simulate, Design, SimSpec};
use dtvw::filter::{self, normalized_ess, systematic_resample, FilterConfig};
use dtvw::io;
use dtvw::metrics::{evaluate, rmsfe, EvalWindow, MethodForecasts, AVERAGE_LABEL};
use dtvw::tune::{grid_search, GridSpec};
use dtvw::{LatentMode, ObservationSeries, PredictorPanel};

fn small_panel(seed: u64) -> (ObservationSeries, PredictorPanel) {
    let mut spec = SimSpec::new(Design::NonlinearIncomplete, 40, seed);
    spec.horizons = 2;
    simulate(&spec).unwrap()
}

#[test]
fn recorded_forecasts_ignore_the_current_observation() {
    let (obs, panel) = small_panel(5);
    let cfg = FilterConfig {
        particles: 300,
        seed: 9,
        ..FilterConfig::with_mode(LatentMode::Dtvw)
    };
    let t = 25;
    let mut rows: Vec<Vec<f64>> = (0..obs.len()).map(|s| obs.get(s).to_vec()).collect();
    rows[t][0] += 3.0;
    let moved = ObservationSeries::new(rows, obs.variable_names().to_vec()).unwrap();
    let a = filter::run(&obs, &panel, &cfg).unwrap();
    let b = filter::run(&moved, &panel, &cfg).unwrap();
    for s in 0..=t {
        let (ra, rb) = (&a.rows[s], &b.rows[s]);
        assert_eq!(ra.prior_weights, rb.prior_weights, "row {s}");
        for (fa, fb) in ra.forecasts.iter().zip(&rb.forecasts) {
            assert_eq!(fa.point, fb.point, "row {s}");
            assert_eq!(fa.draws, fb.draws, "row {s}");
            if fa.target != t {
                assert_eq!(fa.log_predictive, fb.log_predictive, "row {s}");
            }
        }
    }
    assert_ne!(a.rows[t].mean_weights, b.rows[t].mean_weights);
}

#[test]
fn resampling_preserves_weighted_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 50;
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0f64).powi(3)).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let stat: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let target: f64 = w.iter().zip(&stat).map(|(a, b)| a * b).sum();
    let reps = 1000;
    let means: Vec<f64> = (0..reps)
        .map(|_| {
            let idx = systematic_resample(&w, &mut rng).unwrap();
            idx.iter().map(|&i| stat[i]).sum::<f64>() / n as f64
        })
        .collect();
    let m = means.iter().sum::<f64>() / reps as f64;
    let sd = (means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    assert!((m - target).abs() <= 3.0 * sd / (reps as f64).sqrt() + 1e-12, "{m} vs {target}, sd {sd}");
}

#[test]
fn equal_combiner_rmsfe_matches_mean_of_means() {
    let (obs, panel) = small_panel(2);
    let r = EqualCombiner { fallback_sd: 1.0 }.combine(&obs, &panel).unwrap();
    let y = obs.variable(0);
    let got = rmsfe(&y, &r.rows.iter().map(|row| row.forecasts[0].point[0]).collect::<Vec<_>>()).unwrap();
    let direct: Vec<f64> = (0..obs.len())
        .map(|t| {
            let k_n = panel.n_models();
            let mut s = 0.0;
            for k in 0..k_n {
                let d = panel.draws(t, k, 0, 1);
                s += d.iter().sum::<f64>() / d.len() as f64;
            }
            s / k_n as f64
        })
        .collect();
    assert!((got - rmsfe(&y, &direct).unwrap()).abs() < 1e-12);
}

#[test]
fn multivariate_average_row_is_mean_of_variables() {
    let spec = SimSpec {
        n_steps: 60,
        ..SimSpec::new(Design::PseudoEmpirical, 60, 1)
    };
    let (obs, panel) = simulate(&spec).unwrap();
    let r = EqualCombiner { fallback_sd: 1.0 }.combine(&obs, &panel).unwrap();
    let report = evaluate(&[MethodForecasts::from(&r)], &obs, &[1], EvalWindow { start: 0, end: 59 }, None).unwrap();
    let avg = report.find("equal", 1, AVERAGE_LABEL).unwrap();
    let per: Vec<_> = obs.variable_names().iter().map(|v| report.find("equal", 1, v).unwrap()).collect();
    let crps = per.iter().map(|r| r.crps).sum::<f64>() / per.len() as f64;
    assert!((avg.crps - crps).abs() < 1e-12);
    assert!(avg.crps >= 0.0 && avg.rmsfe >= 0.0);
    assert!(avg.ls_joint.is_some());
}

#[test]
fn grid_result_independent_of_evaluation_order() {
    let objective = |a: [f64; 2]| Ok(((a[0] - 2.5).powi(2) + (a[1] + 1.0).powi(2)).sqrt().round());
    let spec = GridSpec::two_stage(-6.0, 6.0, 2.0, 0.5);
    let reference = grid_search(&spec, objective).unwrap();
    for threads in [1, 3, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let again = pool.install(|| grid_search(&spec, objective)).unwrap();
        assert_eq!(again, reference);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bma_rows_on_simplex_and_shift_invariant(
        scores in prop::collection::vec(prop::collection::vec(-30.0f64..5.0, 3), 1..30),
        shift in -50.0f64..50.0,
    ) {
        let w = bma_weights(&scores, None).unwrap();
        let shifted: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let ws = bma_weights(&shifted, None).unwrap();
        for (a, b) in w.iter().zip(&ws) {
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(a.iter().all(|v| *v >= 0.0));
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
        let n = scores.len();
        prop_assert_eq!(bma_weights(&scores, Some(n)).unwrap(), w);
    }

    #[test]
    fn ess_is_one_only_for_uniform(raw in prop::collection::vec(0.01f64..1.0, 2..40)) {
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let ess = normalized_ess(&w);
        prop_assert!(ess > 1.0 / w.len() as f64 - 1e-12 && ess <= 1.0 + 1e-12);
        let uniform = w.iter().all(|v| (v - w[0]).abs() < 1e-15);
        if !uniform {
            prop_assert!(ess < 1.0);
        }
    }

    #[test]
    fn csv_round_trip_is_lossless(
        values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 6..=6),
        obs_values in prop::collection::vec(-1e6f64..1e6, 3),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let panel = PredictorPanel::from_fn(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["y".into()],
            1,
            2,
            1,
            |_, k, _, h, _| values[k * 2 + h - 1],
        ).unwrap();
        io::write_panel(dir.path().join("p.csv"), &panel).unwrap();
        prop_assert_eq!(io::load_panel(dir.path().join("p.csv")).unwrap(), panel);
        let obs = ObservationSeries::univariate(obs_values, "y").unwrap();
        io::write_observations(dir.path().join("o.csv"), &obs).unwrap();
        prop_assert_eq!(io::load_observations(dir.path().join("o.csv")).unwrap(), obs);
    }
}

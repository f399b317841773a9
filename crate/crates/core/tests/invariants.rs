use braess_core::dc::{nodal_outflow, solve_dc, DcSystem};
use braess_core::evaluation::{evaluate_ensemble, EvaluationOptions};
use braess_core::extension::{n_plus_one_sweep, SweepOptions};
use braess_core::grid::{GridNetwork, LineId};
use braess_core::predictor::{predict_alignment, Alignment, PredictorOptions};
use braess_core::solvers::DcSolver;
use braess_core::susceptibility::{finite_difference_susceptibility, SusceptibilityEngine};
use braess_core::topology::{EnsembleSpec, GeneratorRegistry};
use proptest::prelude::*;

/// Random connected network: a random tree plus extra chords, random
/// susceptances and balanced injections.
fn network() -> impl Strategy<Value = GridNetwork> {
    (4usize..12).prop_flat_map(|n| {
        (
            proptest::collection::vec(any::<prop::sample::Index>(), n - 1),
            proptest::collection::vec((0..n, 0..n), 1..n),
            proptest::collection::vec(0.5f64..2.0, 2 * n),
            proptest::collection::vec(-1.0f64..1.0, n),
        )
            .prop_map(move |(parents, chords, b, p)| {
                let mut lines: Vec<(usize, usize, f64)> =
                    (1..n).map(|i| (parents[i - 1].index(i), i, b[i - 1])).collect();
                for (k, &(u, v)) in chords.iter().enumerate() {
                    if u != v {
                        lines.push((u, v, b[n - 1 + k]));
                    }
                }
                let mean = p.iter().sum::<f64>() / n as f64;
                let p: Vec<f64> = p.iter().map(|x| x - mean).collect();
                GridNetwork::dc(&p, &lines).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dc_flows_conserve_power(net in network()) {
        let sol = solve_dc(&net).unwrap();
        for (out, p) in nodal_outflow(&net, &sol.flows).iter().zip(net.injections()) {
            prop_assert!((out - p).abs() < 1e-9);
        }
        prop_assert_eq!(sol.theta[0], 0.0);
    }

    #[test]
    fn transfer_is_symmetric(net in network(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let sys = DcSystem::new(&net).unwrap();
        let (e, f) = (&net.lines()[a.index(net.line_count())], &net.lines()[b.index(net.line_count())]);
        let x = sys.transfer(e.from.0, e.to.0, f.from.0, f.to.0);
        let y = sys.transfer(f.from.0, f.to.0, e.from.0, e.to.0);
        prop_assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()));
    }

    #[test]
    fn analytic_susceptibility_matches_central_difference(
        net in network(),
        a in any::<prop::sample::Index>(),
        b in any::<prop::sample::Index>(),
    ) {
        let (up, obs) = (LineId(a.index(net.line_count())), LineId(b.index(net.line_count())));
        let engine = SusceptibilityEngine::new(&net).unwrap();
        let analytic = if up == obs { engine.self_term(up).unwrap() } else { engine.pair(up, obs).unwrap().value };
        let delta = 1e-6 * net.line(up).unwrap().susceptance();
        let fd = finite_difference_susceptibility(&net, up, obs, delta).unwrap();
        prop_assert!((analytic - fd).abs() <= 1e-5 * fd.abs() + 1e-10, "{analytic} vs {fd}");
    }

    #[test]
    fn column_agrees_with_pairs(net in network(), b in any::<prop::sample::Index>()) {
        let obs = LineId(b.index(net.line_count()));
        let engine = SusceptibilityEngine::new(&net).unwrap();
        let col = engine.column(obs).unwrap();
        for up in (0..net.line_count()).map(LineId) {
            let v = if up == obs { engine.self_term(up).unwrap() } else { engine.pair(up, obs).unwrap().value };
            prop_assert!((col[up.0] - v).abs() < 1e-10 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn orientation_conventions(net in network(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let m = net.line_count();
        let (up, obs) = (LineId(a.index(m)), LineId(b.index(m)));
        prop_assume!(up != obs);
        let base = SusceptibilityEngine::new(&net).unwrap().pair(up, obs).unwrap().value;
        // the observed flow is signed, the upgraded line's orientation is irrelevant
        let flip_obs = net.with_line_flipped(obs).unwrap();
        let flip_up = net.with_line_flipped(up).unwrap();
        let v_obs = SusceptibilityEngine::new(&flip_obs).unwrap().pair(up, obs).unwrap().value;
        let v_up = SusceptibilityEngine::new(&flip_up).unwrap().pair(up, obs).unwrap().value;
        prop_assert!((v_obs + base).abs() < 1e-12 * (1.0 + base.abs()));
        prop_assert!((v_up - base).abs() < 1e-12 * (1.0 + base.abs()));

        let opts = PredictorOptions::default();
        let p0 = predict_alignment(&net, up, obs, &opts).unwrap();
        let p1 = predict_alignment(&flip_obs, up, obs, &opts).unwrap();
        prop_assert_eq!(p0.implied_forward.map(|f| !f), p1.implied_forward);
        if p0.alignment != Alignment::Undefined
            && net.lines().iter().zip(solve_dc(&net).unwrap().flows).all(|(_, f)| f != 0.0)
        {
            prop_assert_eq!(p0.alignment, p1.alignment);
        }
    }

    #[test]
    fn small_upgrade_follows_susceptibility(net in network(), a in any::<prop::sample::Index>()) {
        let up = LineId(a.index(net.line_count()));
        let eps = 1e-6;
        let sweep = n_plus_one_sweep(&net, &DcSolver, &SweepOptions { factor: 1.0 + eps, headroom: 1.5 }).unwrap();
        let engine = SusceptibilityEngine::new(&net).unwrap();
        let flows = &engine.solution().flows;
        let b = net.line(up).unwrap().susceptance();
        for case in sweep.cases.iter().filter(|c| c.upgraded == up) {
            let s = engine.pair(up, case.observed).unwrap().value;
            prop_assume!(flows[case.observed.0].abs() > 1e-6);
            if s.abs() < 1e-3 {
                continue;
            }
            let expected = flows[case.observed.0].signum() * s;
            let measured = case.absolute_change / (eps * b);
            prop_assert!((measured - expected).abs() <= 1e-4 * expected.abs(), "{measured} vs {expected}");
        }
    }
}

#[test]
fn evaluation_does_not_depend_on_thread_count() {
    let spec = EnsembleSpec {
        name: None,
        topology: "voronoi".into(),
        params: toml::toml! { seeds = 15 },
        networks: 3,
        samples: 4,
        seed: 17,
    };
    let registry = GeneratorRegistry::default();
    let opts = EvaluationOptions::default();
    let parallel = evaluate_ensemble(&spec, &registry, &opts).unwrap();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| evaluate_ensemble(&spec, &registry, &opts).unwrap());
    assert_eq!(parallel, serial);
    assert!(parallel.counts.evaluated() > 0);
}

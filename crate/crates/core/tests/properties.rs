use std::path::Path;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use tpa::baselines::{cellfree_greedy_assign, semi_random_assign};
use tpa::eval::{downlink_rate, power_allocation, power_constraint_value, EvalConfig, Estimator, PowerRule};
use tpa::greedy::{greedy_assign, solve_gmap_exact, GreedyConfig};
use tpa::io::{network_from_json, network_to_json, AssignmentFile};
use tpa::lrmc::{check_completion, complete, CompletionOptions, CompletionProblem};
use tpa::netgen::{generate_network, path_loss_db, torus_distance, NetworkRealization, SimConfig};
use tpa::rng::{rng_from_seed, SimRng};
use tpa::smwim::{sequential_assign, BendersOptions};
use tpa::topo::{
    build_conflict_graph, coded_multicast_assignment, color_assignment, default_estimation_pattern, sparsify_threshold, sparsify_top_fraction,
    verify_assignment, EstimationPattern, PilotAssignment, Topology,
};

fn topology(rng: &mut SimRng, k_n: usize, m_n: usize) -> Topology {
    let p = rng.random_range(0.2..0.8);
    let mut edges = Vec::new();
    for k in 0..k_n {
        for m in 0..m_n {
            if rng.random_bool(p) {
                edges.push((k, m, rng.random_range(1..=32) as f64 / 32.0));
            }
        }
    }
    Topology::from_edges(k_n, m_n, &edges).unwrap()
}

fn pattern(rng: &mut SimRng, topo: &Topology) -> EstimationPattern {
    let edges: Vec<(usize, usize)> = topo.edges().filter(|_| rng.random_bool(0.7)).collect();
    EstimationPattern::new(topo, edges).unwrap()
}

fn small_net(rng: &mut SimRng, k_n: usize, m_n: usize) -> NetworkRealization {
    NetworkRealization::from_beta(DMatrix::from_fn(k_n, m_n, |_, _| rng.random_range(0.01..1.0)), 0.0).unwrap()
}

fn with_serving(x: DMatrix<f64>, serving: Vec<Vec<usize>>) -> PilotAssignment {
    PilotAssignment {
        scheme: "prop".into(),
        x,
        y: None,
        serving,
        seed: None,
        flagged_ues: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_loss_non_increasing(a in 1e-4f64..3.0, b in 1e-4f64..3.0) {
        let cfg = SimConfig::default();
        let (near, far) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(path_loss_db(far, &cfg).unwrap() <= path_loss_db(near, &cfg).unwrap());
    }

    #[test]
    fn torus_distance_bounded(p in prop::array::uniform4(0.0f64..1.0), side in 0.1f64..5.0) {
        let d = torus_distance([p[0] * side, p[1] * side], [p[2] * side, p[3] * side], side);
        prop_assert!(d >= 0.0 && d <= side * 2f64.sqrt() / 2.0 + 1e-12);
    }

    #[test]
    fn network_is_pure_and_positive(seed in any::<u64>(), k_n in 1usize..8, m_n in 1usize..8) {
        let cfg = SimConfig { seed, num_ue: k_n, num_rrh: m_n, ..SimConfig::default() };
        let net = generate_network(&cfg).unwrap();
        prop_assert!(net.beta.iter().all(|&b| b > 0.0 && b.is_finite()));
        prop_assert_eq!(&net, &generate_network(&cfg).unwrap());
    }

    #[test]
    fn zero_shadowing_is_distance_only(seed in any::<u64>()) {
        let cfg = SimConfig { seed, num_ue: 4, num_rrh: 5, sigma_sh_db: 0.0, ..SimConfig::default() };
        let net = generate_network(&cfg).unwrap();
        for k in 0..4 {
            for m in 0..5 {
                let d = torus_distance(net.ue_xy[k], net.rrh_xy[m], cfg.area_side_km);
                let want = 10f64.powf(path_loss_db(d, &cfg).unwrap() / 10.0);
                prop_assert!((net.beta[(k, m)] - want).abs() <= 1e-12 * want);
            }
        }
    }

    #[test]
    fn network_json_round_trip(seed in any::<u64>()) {
        let cfg = SimConfig { seed, num_ue: 3, num_rrh: 4, ..SimConfig::default() };
        let net = generate_network(&cfg).unwrap();
        let (back, back_cfg) = network_from_json(&network_to_json(&net, &cfg).unwrap(), Path::new("n.json")).unwrap();
        prop_assert_eq!(back, net);
        prop_assert_eq!(back_cfg, cfg);
    }

    #[test]
    fn full_fraction_equals_minimum_threshold(seed in any::<u64>(), k_n in 1usize..6, m_n in 1usize..6) {
        let net = small_net(&mut rng_from_seed(seed), k_n, m_n);
        let min = net.beta.min();
        prop_assert_eq!(sparsify_top_fraction(&net, 1.0).unwrap(), sparsify_threshold(&net, min).unwrap());
    }

    #[test]
    fn conflict_graph_symmetric_irreflexive(seed in any::<u64>(), k_n in 1usize..=8, m_n in 1usize..=12) {
        let mut rng = rng_from_seed(seed);
        let topo = topology(&mut rng, k_n, m_n);
        let pat = pattern(&mut rng, &topo);
        let cg = build_conflict_graph(&topo, &pat);
        for a in 0..cg.vertices.len() {
            prop_assert!(!cg.is_adjacent(a, a));
            for b in 0..cg.vertices.len() {
                prop_assert_eq!(cg.is_adjacent(a, b), cg.is_adjacent(b, a));
            }
        }
    }

    #[test]
    fn coloring_and_coded_multicast_verify(seed in any::<u64>(), k_n in 1usize..=8, m_n in 1usize..=12) {
        let mut rng = rng_from_seed(seed);
        let topo = topology(&mut rng, k_n, m_n);
        let pat = pattern(&mut rng, &topo);
        prop_assume!(!pat.is_empty());
        let col = color_assignment(&build_conflict_graph(&topo, &pat)).unwrap();
        prop_assert!(verify_assignment(&col.x, &topo, &pat).unwrap().feasible);
        let coded = coded_multicast_assignment(&topo).unwrap();
        prop_assert!(verify_assignment(&coded.x, &topo, &default_estimation_pattern(&topo)).unwrap().feasible);
    }

    #[test]
    fn verification_ignores_pilot_basis(seed in any::<u64>(), k_n in 1usize..=6, m_n in 1usize..=8, t in 1usize..=4) {
        let mut rng = rng_from_seed(seed);
        let topo = topology(&mut rng, k_n, m_n);
        let pat = pattern(&mut rng, &topo);
        let x = DMatrix::from_fn(k_n, t, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        let q: DMatrix<f64> = DMatrix::from_fn(t, t, |i, j| if i == j { 2.0 } else { 0.0 } + rng.random_range(-0.5..0.5));
        prop_assume!(q.determinant().abs() > 0.1);
        let mut perm: Vec<usize> = (0..t).collect();
        perm.reverse();
        let permuted = DMatrix::from_fn(k_n, t, |k, j| x[(k, perm[j])]);
        let base = verify_assignment(&x, &topo, &pat).unwrap();
        for other in [&x * &q, permuted] {
            let v = verify_assignment(&other, &topo, &pat).unwrap();
            prop_assert_eq!(v.feasible, base.feasible);
            for (a, b) in v.per_rrh.iter().zip(&base.per_rrh) {
                prop_assert_eq!((a.rank_interference, a.rank_joint), (b.rank_interference, b.rank_joint));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn completion_rank_bounds(seed in any::<u64>(), k_n in 1usize..=6, m_n in 1usize..=8) {
        let mut rng = rng_from_seed(seed);
        let topo = topology(&mut rng, k_n, m_n);
        let pat = pattern(&mut rng, &topo);
        let prob = CompletionProblem::new(&topo, &pat).unwrap();
        let res = complete(&prob, &CompletionOptions::default(), seed);
        prop_assert!(res.t >= prob.rank_lower_bound() && res.t <= k_n);
        if res.converged {
            prop_assert!(check_completion(&prob, &res.a, res.t).passes(1e-6, 1e-4));
        }
    }

    #[test]
    fn shared_rrh_forces_full_rank(seed in any::<u64>(), k_n in 1usize..=5, m_n in 1usize..=4) {
        let mut rng = rng_from_seed(seed);
        let hub = rng.random_range(0..m_n);
        let edges: Vec<(usize, usize, f64)> = (0..k_n)
            .flat_map(|k| (0..m_n).map(move |m| (k, m)))
            .filter(|&(_, m)| m == hub || rng.random_bool(0.5))
            .map(|(k, m)| (k, m, 1.0))
            .collect();
        let topo = Topology::from_edges(k_n, m_n, &edges).unwrap();
        let prob = CompletionProblem::new(&topo, &default_estimation_pattern(&topo)).unwrap();
        prop_assert_eq!(complete(&prob, &CompletionOptions::default(), seed).t, k_n);
    }

    #[test]
    fn smwim_rounds_respect_structure(seed in any::<u64>(), k_n in 1usize..=6, m_n in 1usize..=6, kappa in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let topo = topology(&mut rng, k_n, m_n);
        let t_max = k_n + 1;
        let res = sequential_assign(&topo, t_max, kappa, &BendersOptions::default()).unwrap();
        prop_assert!(res.rounds.len() <= t_max);
        let mut current = DMatrix::from_fn(k_n, m_n, |k, m| topo.has_edge(k, m));
        for r in &res.rounds {
            for k in 0..k_n {
                for m in 0..m_n {
                    let want = current[(k, m)] && r.x[k] && r.y[m];
                    prop_assert_eq!(r.z[(k, m)], if want { 1.0 } else { 0.0 });
                }
            }
            for m in (0..m_n).filter(|&m| r.y[m]) {
                prop_assert!((0..k_n).filter(|&k| topo.has_edge(k, m) && r.x[k]).count() <= kappa);
            }
            for (k, m) in r.matched() {
                current[(k, m)] = false;
            }
        }
        if res.rounds.len() < t_max {
            prop_assert!(current.iter().all(|&e| !e));
        }
    }

    #[test]
    fn greedy_rounds_disjoint_and_bounded(seed in any::<u64>(), k_n in 1usize..=5, m_n in 2usize..=5, kappa in 1usize..=3) {
        let mut rng = rng_from_seed(seed);
        let topo = topology(&mut rng, k_n, m_n);
        let cfg = GreedyConfig::new(k_n, kappa, 2);
        let res = greedy_assign(&topo, &cfg).unwrap();
        prop_assert!(res.rounds.len() <= k_n);
        let mut used = DMatrix::from_element(k_n, m_n, false);
        for r in &res.rounds {
            for (k, m) in r.matched() {
                prop_assert!(topo.has_edge(k, m) && !used[(k, m)]);
                used[(k, m)] = true;
            }
        }
        // The first round can do no better than the exact matching on the full topology.
        if let Some(first) = res.rounds.first() {
            let t = DMatrix::from_fn(k_n, m_n, |k, m| topo.has_edge(k, m));
            let best = solve_gmap_exact(&t, topo.weights(), kappa, 2, 25).unwrap();
            prop_assert!(first.weight <= best + 1e-12);
        }
    }

    #[test]
    fn baselines_give_one_pilot_per_ue(seed in any::<u64>(), k_n in 1usize..=8, m_n in 1usize..=6, t_frac in 0.0f64..1.0) {
        let mut rng = rng_from_seed(seed);
        let net = small_net(&mut rng, k_n, m_n);
        let topo = sparsify_top_fraction(&net, 0.5).unwrap();
        let t = 1 + (t_frac * k_n as f64) as usize % k_n;
        let a = semi_random_assign(k_n, t, seed).unwrap();
        let b = cellfree_greedy_assign(&net, &topo, t, k_n, seed).unwrap();
        for x in [&a.x, &b.x] {
            prop_assert!((0..k_n).all(|k| x.row(k).iter().filter(|&&v| v != 0.0).count() == 1));
        }
        prop_assert_eq!(a, semi_random_assign(k_n, t, seed).unwrap());
        prop_assert_eq!(b, cellfree_greedy_assign(&net, &topo, t, k_n, seed).unwrap());
    }

    #[test]
    fn estimate_quality_identities(seed in any::<u64>(), k_n in 1usize..=5, m_n in 1usize..=4, t in 1usize..=3, rho in 0.1f64..100.0) {
        let mut rng = rng_from_seed(seed);
        let net = small_net(&mut rng, k_n, m_n);
        let mut x = DMatrix::from_fn(k_n, t, |_, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        x[(0, 0)] = 1.0;
        let serving: Vec<Vec<usize>> = (0..m_n).map(|_| (0..k_n).filter(|_| rng.random_bool(0.6)).collect()).collect();
        let a = with_serving(x, serving.clone());
        let est = Estimator::new(&a, &net, rho).unwrap();
        for (m, s) in serving.iter().enumerate() {
            // A UE without any pilot is never estimated.
            for &k in s.iter().filter(|&&k| a.x.row(k).iter().any(|&v| v != 0.0)) {
                let (g, b) = (est.gamma[(m, k)], net.beta[(k, m)]);
                prop_assert!(g >= 0.0 && g <= b);
                prop_assert!((g + est.mse[(m, k)] - b).abs() <= 1e-12 * b);
            }
        }
        for rule in [PowerRule::GainProportional, PowerRule::EqualShare] {
            let eta = power_allocation(&est.gamma, &serving, rule);
            if eta.iter().any(|&e| e > 0.0) {
                prop_assert!((power_constraint_value(&eta, &est.gamma) - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dedicated_pilot_gain_grows_with_power(seed in any::<u64>(), k_n in 1usize..=5, m_n in 1usize..=4, rho in 0.01f64..10.0, step in 1.0f64..10.0) {
        let net = small_net(&mut rng_from_seed(seed), k_n, m_n);
        let a = with_serving(DMatrix::identity(k_n, k_n), vec![(0..k_n).collect(); m_n]);
        let low = Estimator::new(&a, &net, rho).unwrap();
        let high = Estimator::new(&a, &net, rho * step).unwrap();
        prop_assert!(low.gamma.iter().zip(high.gamma.iter()).all(|(l, h)| h >= l));
    }

    #[test]
    fn rates_non_negative_and_repeatable(seed in any::<u64>(), k_n in 1usize..=4, m_n in 1usize..=4) {
        let net = small_net(&mut rng_from_seed(seed), k_n, m_n);
        let a = with_serving(DMatrix::identity(k_n, k_n), vec![(0..k_n).collect(); m_n]);
        let cfg = EvalConfig { rho_p: 10.0, rho_d: 10.0, n_c: 200, n_trials: 20, power_rule: PowerRule::default() };
        let r = downlink_rate(&a, &net, &cfg, seed).unwrap();
        prop_assert!(r.per_user_rate.iter().all(|&v| v >= 0.0));
        prop_assert_eq!(r, downlink_rate(&a, &net, &cfg, seed).unwrap());
    }

    #[test]
    fn assignment_file_round_trip(seed in any::<u64>(), k_n in 1usize..=6, m_n in 1usize..=6) {
        let mut rng = rng_from_seed(seed);
        let topo = topology(&mut rng, k_n, m_n);
        prop_assume!(topo.max_rrh_degree() > 0);
        let file = AssignmentFile {
            assignment: coded_multicast_assignment(&topo).unwrap(),
            topology: topo,
            g_fraction: Some(0.75),
            kappa: None,
        };
        prop_assert_eq!(AssignmentFile::from_text(&file.to_text(), Path::new("a")).unwrap(), file);
    }
}

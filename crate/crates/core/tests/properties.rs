mod common;

use common::plain_hk_step;
use mhk::diagnostics::{beta, energy, nl8_decrement_bound, ConvergenceTracker, INEQUALITY_SLACK};
use mhk::dynamics::{compute_neighborhoods, distance, step, step_matrix, transition_matrix};
use mhk::hull::hull_distance;
use mhk::profile::{build_profile, check_delta_equilibrium, component_diameter, is_delta_trivial};
use mhk::schedule::{OpenAlphaPolicy, RngStream, ScheduleSpec, SupportElement, SupportModel};
use mhk::stopping::{analyze_stopping, detect_freeze, detect_tau_delta};
use mhk::trajectory::{simulate, RunOptions};
use mhk::{OpinionState, StubbornnessAssignment};
use proptest::prelude::*;

fn alpha_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..1.0f64]
}

/// (state, alpha) with n in 1..=8 and d in 1..=3.
fn instance() -> impl Strategy<Value = (OpinionState, StubbornnessAssignment)> {
    (1usize..=8, 1usize..=3, 0.05..0.6f64).prop_flat_map(|(n, d, eps)| {
        (
            prop::collection::vec(prop::collection::vec(0.0..1.0f64, d), n),
            prop::collection::vec(alpha_value(), n),
        )
            .prop_map(move |(rows, alphas)| {
                (
                    OpinionState::new(&rows, eps).unwrap(),
                    StubbornnessAssignment::new(alphas).unwrap(),
                )
            })
    })
}

fn line_instance() -> impl Strategy<Value = OpinionState> {
    (1usize..=10, 0.05..0.5f64).prop_flat_map(|(n, eps)| {
        prop::collection::vec(0.0..2.0f64, n).prop_map(move |xs| {
            let rows: Vec<Vec<f64>> = xs.into_iter().map(|x| vec![x]).collect();
            OpinionState::new(&rows, eps).unwrap()
        })
    })
}

fn opts(horizon: u64, seed: u64) -> RunOptions {
    RunOptions {
        horizon,
        seed,
        stop_on_termination: false,
    }
}

proptest! {
    #[test]
    fn next_state_stays_in_coordinate_box((x, a) in instance()) {
        let next = step(&x, &a).unwrap();
        for k in 0..x.dim() {
            let lo = x.opinions().map(|p| p[k]).fold(f64::INFINITY, f64::min);
            let hi = x.opinions().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            for p in next.opinions() {
                prop_assert!(p[k] >= lo - 1e-12 && p[k] <= hi + 1e-12);
            }
        }
        if x.dim() == 1 {
            let lo = x.coords().iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = x.coords().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(next.coords().iter().all(|&c| c >= lo && c <= hi));
        }
    }

    #[test]
    fn neighborhoods_are_reflexive_and_symmetric((x, _a) in instance()) {
        let hoods = compute_neighborhoods(&x);
        for h in &hoods {
            prop_assert!(h.contains(h.agent));
            for &j in &h.members {
                prop_assert!(hoods[j].contains(h.agent));
            }
        }
        let g = build_profile(&x);
        for (i, h) in hoods.iter().enumerate() {
            for j in 0..x.n() {
                if i != j {
                    prop_assert_eq!(g.has_edge(i, j), h.contains(j));
                }
            }
        }
    }

    #[test]
    fn full_stubbornness_and_isolation_are_exact((x, a) in instance()) {
        let all_stubborn = StubbornnessAssignment::constant(x.n(), 1.0).unwrap();
        prop_assert!(step(&x, &all_stubborn).unwrap().same_opinions(&x));
        let next = step(&x, &a).unwrap();
        for h in compute_neighborhoods(&x) {
            if h.size() == 1 {
                prop_assert_eq!(next.opinion(h.agent), x.opinion(h.agent));
            }
        }
    }

    #[test]
    fn matrix_form_agrees((x, a) in instance()) {
        let direct = step(&x, &a).unwrap();
        let matrix = step_matrix(&x, &a).unwrap();
        for (p, q) in direct.coords().iter().zip(matrix.coords()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
        for row in transition_matrix(&x, &a).unwrap() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&w| w >= 0.0));
        }
    }

    #[test]
    fn relabeling_commutes_with_step((x, a) in instance(), seed in any::<u64>()) {
        let n = x.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let rows = x.to_rows();
        let px = OpinionState::new(&perm.iter().map(|&k| rows[k].clone()).collect::<Vec<_>>(), x.epsilon()).unwrap();
        let pa = StubbornnessAssignment::new(perm.iter().map(|&k| a.alphas()[k]).collect()).unwrap();
        let base = step(&x, &a).unwrap();
        let moved = step(&px, &pa).unwrap();
        for (slot, &k) in perm.iter().enumerate() {
            for (p, q) in moved.opinion(slot).iter().zip(base.opinion(k)) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn translation_and_scaling_commute_with_step((x, a) in instance(), shift in -5.0..5.0f64, scale in 0.25..4.0f64) {
        let base = step(&x, &a).unwrap();
        let rows = x.to_rows();
        let shifted: Vec<Vec<f64>> = rows.iter().map(|p| p.iter().map(|c| c + shift).collect()).collect();
        let ts = step(&OpinionState::new(&shifted, x.epsilon()).unwrap(), &a).unwrap();
        for (p, q) in ts.coords().iter().zip(base.coords()) {
            prop_assert!((p - (q + shift)).abs() <= 1e-12);
        }
        let scaled: Vec<Vec<f64>> = rows.iter().map(|p| p.iter().map(|c| c * scale).collect()).collect();
        let ss = step(&OpinionState::new(&scaled, x.epsilon() * scale).unwrap(), &a).unwrap();
        for (p, q) in ss.coords().iter().zip(base.coords()) {
            prop_assert!((p - q * scale).abs() <= 1e-12);
        }
    }

    #[test]
    fn energy_descends_and_dominates_bound((x, a) in instance()) {
        let next = step(&x, &a).unwrap();
        let (z0, z1) = (energy(&x), energy(&next));
        let n = x.n() as f64;
        let cap = n * n * x.epsilon() * x.epsilon();
        prop_assert!((0.0..=cap).contains(&z0));
        prop_assert!(z1 <= z0 + INEQUALITY_SLACK);
        prop_assert!(z0 - z1 >= nl8_decrement_bound(&x, &next, &a) - INEQUALITY_SLACK);
    }

    #[test]
    fn literal_beta_is_max_alpha(alphas in prop::collection::vec(alpha_value(), 1..8)) {
        let a = StubbornnessAssignment::new(alphas.clone()).unwrap();
        prop_assert_eq!(beta(&a), alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }

    #[test]
    fn alpha_zero_matches_plain_hk((x, _a) in instance()) {
        let engine = step(&x, &StubbornnessAssignment::synchronous(x.n())).unwrap();
        let oracle = plain_hk_step(&x.to_rows(), x.epsilon());
        prop_assert_eq!(engine.to_rows(), oracle);
    }

    #[test]
    fn line_components_are_sorted_runs(x in line_instance()) {
        let g = build_profile(&x);
        let mut order: Vec<usize> = (0..x.n()).collect();
        order.sort_by(|&i, &j| x.coords()[i].total_cmp(&x.coords()[j]));
        let mut runs: Vec<Vec<usize>> = vec![vec![order[0]]];
        for w in order.windows(2) {
            if x.coords()[w[1]] - x.coords()[w[0]] <= x.epsilon() {
                runs.last_mut().unwrap().push(w[1]);
            } else {
                runs.push(vec![w[1]]);
            }
        }
        let mut expected: Vec<Vec<usize>> = runs.iter().map(|r| { let mut r = r.clone(); r.sort(); r }).collect();
        expected.sort();
        let mut got: Vec<Vec<usize>> = g.components().to_vec();
        got.iter_mut().for_each(|c| c.sort());
        got.sort();
        prop_assert_eq!(got, expected);
        for pair in runs.windows(2) {
            let a: Vec<&[f64]> = pair[0].iter().map(|&i| x.opinion(i)).collect();
            let b: Vec<&[f64]> = pair[1].iter().map(|&i| x.opinion(i)).collect();
            let gap = x.coords()[pair[1][0]] - x.coords()[*pair[0].last().unwrap()];
            prop_assert_eq!(hull_distance(&a, &b).unwrap(), gap);
        }
        for c in g.components() {
            let brute = c.iter().flat_map(|&i| c.iter().map(move |&j| (i, j)))
                .map(|(i, j)| x.distance(i, j)).fold(0.0, f64::max);
            prop_assert_eq!(component_diameter(&x, c), brute);
        }
    }

    #[test]
    fn consensus_is_an_equilibrium(p in prop::collection::vec(-1.0..1.0f64, 1..=3), n in 1usize..6, eps in 0.05..1.0f64, frac in 0.01..1.0f64) {
        let x = OpinionState::new(&vec![p; n], eps).unwrap();
        let verdict = check_delta_equilibrium(&x, eps * frac).unwrap();
        prop_assert!(verdict.holds);
        prop_assert!(is_delta_trivial(&build_profile(&x), &x, 1e-300).whole_set);
    }

    #[test]
    fn hull_distance_matches_dense_sampling(
        d in 2usize..=3,
        pts in prop::collection::vec(-1.0..1.0f64, 12),
        offset in prop::collection::vec(-2.0..2.0f64, 3),
    ) {
        // segment a = [p0, p1], triangle b = [q0, q1, q2] shifted by `offset`
        let a: Vec<Vec<f64>> = (0..2).map(|k| pts[k * 3..k * 3 + d].to_vec()).collect();
        let b: Vec<Vec<f64>> = (2..4).chain(std::iter::once(0))
            .map(|k| pts[k * 3..k * 3 + d].iter().zip(&offset).map(|(c, o)| c + o + if k == 0 { 0.3 } else { 0.0 }).collect())
            .collect();
        let ar: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
        let br: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
        let exact = hull_distance(&ar, &br).unwrap();

        let steps = 60;
        let mut sampled = f64::INFINITY;
        let mut sa = Vec::new();
        for i in 0..=steps {
            let s = i as f64 / steps as f64;
            sa.push((0..d).map(|k| a[0][k] * (1.0 - s) + a[1][k] * s).collect::<Vec<f64>>());
        }
        for i in 0..=steps {
            for j in 0..=steps - i {
                let (u, v) = (i as f64 / steps as f64, j as f64 / steps as f64);
                let q: Vec<f64> = (0..d).map(|k| b[0][k] * (1.0 - u - v) + b[1][k] * u + b[2][k] * v).collect();
                for p in &sa {
                    sampled = sampled.min(distance(p, &q));
                }
            }
        }
        let extent = |s: &Vec<Vec<f64>>| s.iter().flat_map(|p| s.iter().map(move |q| distance(p, q))).fold(0.0, f64::max);
        let resolution = (extent(&a) + extent(&b)) / steps as f64;
        prop_assert!(exact <= sampled + 1e-9, "exact {} sampled {}", exact, sampled);
        prop_assert!(sampled <= exact + resolution + 1e-9, "exact {} sampled {} res {}", exact, sampled, resolution);
    }

    #[test]
    fn assignments_respect_open_set_and_gamma(seed in any::<u64>(), t in 0u64..1000, hi in 0.0..0.99f64) {
        let model = SupportModel {
            support: vec![
                SupportElement { agents: vec![0, 1], probability: 0.3 },
                SupportElement { agents: vec![2, 3, 4], probability: 0.3 },
                SupportElement { agents: vec![1, 3], probability: 0.4 },
            ],
            partition_indices: vec![0, 1],
            open_alpha: OpenAlphaPolicy::Interval { lo: 0.0, hi },
        };
        let spec = ScheduleSpec::stochastic(model, seed);
        let gamma = spec.gamma_bound().value().unwrap();
        let stream = RngStream::new(seed, t);
        let a = spec.next_assignment(5, stream).unwrap();
        prop_assert_eq!(&a, &spec.next_assignment(5, stream).unwrap());
        for i in 0..5 {
            prop_assert_eq!(a.open_set().contains(&i), a.alphas()[i] < 1.0);
            if a.is_open(i) {
                prop_assert!(a.alphas()[i] <= gamma);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stopping_times_are_ordered(x in line_instance(), seed in any::<u64>()) {
        let traj = simulate(x, &ScheduleSpec::asynchronous(seed), opts(150, seed)).unwrap();
        let eps = traj.epsilon;
        let report = analyze_stopping(&traj, eps / 8.0, 16);
        let mut last = 0;
        for (_, t) in &report.tau_hat {
            match t {
                Some(t) => { prop_assert!(*t >= last); last = *t; }
                None => last = u64::MAX,
            }
        }
        let mut prev_tau = Some(0);
        for delta in [eps, eps / 2.0, eps / 4.0, eps / 16.0, eps / 256.0] {
            let tau = detect_tau_delta(&traj, delta);
            match (prev_tau, tau) {
                (Some(p), Some(t)) => prop_assert!(t >= p),
                (None, Some(_)) => prop_assert!(false, "smaller delta reached earlier"),
                _ => {}
            }
            if let Some(t) = tau {
                let at = &traj.steps[t as usize].state;
                prop_assert!(is_delta_trivial(&build_profile(at), at, delta).all_components);
                if t > 0 {
                    let before = &traj.steps[t as usize - 1].state;
                    prop_assert!(!is_delta_trivial(&build_profile(before), before, delta).all_components);
                }
            }
            prev_tau = tau;
        }
        if let Some(f) = detect_freeze(&traj, 16) {
            let edges = build_profile(&traj.steps[f.tau_hat as usize].state).edges().to_vec();
            for rec in &traj.steps[f.tau_hat as usize..] {
                let g = build_profile(&rec.state);
                prop_assert_eq!(g.edges(), &edges[..]);
            }
        }
        prop_assert!(report.equivalence_violations.is_empty(), "{:?}", report.equivalence_violations);
    }

    #[test]
    fn runs_are_reproducible_and_trackers_monotone(x in line_instance(), seed in any::<u64>()) {
        let schedule = ScheduleSpec::asynchronous(seed);
        let a = simulate(x.clone(), &schedule, opts(80, seed)).unwrap();
        let b = simulate(x, &schedule, opts(80, seed)).unwrap();
        prop_assert_eq!(&a, &b);
        let mut tr = ConvergenceTracker::new(0, 4);
        let mut prev = 0.0;
        for rec in &a.steps {
            if let Some(alpha) = &rec.alpha {
                tr.track(&rec.state, alpha, &compute_neighborhoods(&rec.state));
                prop_assert!(tr.partial_sum >= prev);
                prev = tr.partial_sum;
            }
        }
    }
}

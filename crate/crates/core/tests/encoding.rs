use proptest::prelude::*;
use stratq_core::bounds::{fidelity_bound_exact, DEFAULT_ENUMERATION_CAP};
use stratq_core::encoding::{encode, solve_overlaps, states_from_gram, GramMatrix, Variant};
use stratq_core::fixtures;
use stratq_core::linalg::{dot, Matrix};
use stratq_core::random::{random_strategy, RandomShape};
use stratq_core::stationary::{classical_memory_cost, joint_stationary_distribution};
use stratq_core::{InputStrategy, Strategy};

/// Product expansion of the overlap recursion cut at `depth`, evaluated
/// by plain recursion with the all-ones table at the leaves.
fn expansion(s: &Strategy, x: usize, a: usize, b: usize, depth: usize, memo: &mut Vec<Option<f64>>) -> f64 {
    if depth == 0 || a == b {
        return 1.0;
    }
    let (ns, nx) = (s.num_states(), s.num_stimuli());
    let key = ((depth * nx + x) * ns + a) * ns + b;
    if let Some(v) = memo[key] {
        return v;
    }
    let mut total = 0.0;
    for y in 0..s.num_actions() {
        let (p, q) = (s.prob(a, x, y), s.prob(b, x, y));
        if p > 0.0 && q > 0.0 {
            let (na, nb) = (s.next(a, x, y).unwrap(), s.next(b, x, y).unwrap());
            let mut prod = 1.0;
            for xp in 0..nx {
                prod *= expansion(s, xp, na, nb, depth - 1, memo);
            }
            total += (p * q).sqrt() * prod;
        }
    }
    memo[key] = Some(total);
    total
}

fn expanded_overlap(s: &Strategy, a: usize, b: usize, depth: usize) -> f64 {
    let (ns, nx) = (s.num_states(), s.num_stimuli());
    let mut memo = vec![None; (depth + 1) * nx * ns * ns];
    (0..nx).map(|x| expansion(s, x, a, b, depth, &mut memo)).product()
}

#[test]
fn three_state_overlaps_match_expansion() {
    let s = fixtures::three_state();
    let t = solve_overlaps(&s, Variant::QInf).unwrap();
    let bound = fidelity_bound_exact(&s, DEFAULT_ENUMERATION_CAP).unwrap();
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        let mut prev = 1.0;
        for d in 1..=30 {
            let v = expanded_overlap(&s, a, b, d);
            assert!(v <= prev + 1e-15, "expansion grew at depth {d}");
            prev = v;
        }
        assert!((t.get(a, b) - prev).abs() < 1e-9, "pair ({a},{b}): {} vs {prev}", t.get(a, b));
        assert!(t.get(a, b) >= 0.0 && t.get(a, b) <= bound.get(a, b) + 1e-12);
    }
}

#[test]
fn two_by_two_cholesky() {
    let c = 3f64.sqrt() / 2.0;
    let g = GramMatrix::new(Matrix::from_rows(2, 2, vec![1.0, c, c, 1.0])).unwrap();
    let v = states_from_gram(&g).unwrap();
    assert!((dot(&v.vectors[0], &v.vectors[1]) - c).abs() < 1e-12);
    // Lower-triangular factor: first vector along e0.
    assert!((v.vectors[0][0].abs() - 1.0).abs() < 1e-12);
    assert!((v.vectors[1][1].abs() - 0.5).abs() < 1e-12);
}

#[test]
fn baseline_junk_carries_next_state() {
    let s = fixtures::junk_pair();
    let t = solve_overlaps(&s, Variant::Q1).unwrap();
    // Under z = (0, 0) both states move to A, so the delta is 1 and the
    // junk overlap reduces to the x = 1 substate overlap.
    assert_eq!(s.next(0, 0, 0), s.next(1, 0, 0));
    let c1 = t.per_stimulus[1][(0, 1)];
    assert!((t.junk_overlap(&s, 0, 0, 0, 1) - c1).abs() < 1e-15);
    // Oracle: on x = 1, A emits 0 and B emits 1, so nothing overlaps.
    assert_eq!(c1, 0.0);
    let e = encode(&s, Variant::Q1).unwrap();
    assert!(e.consistency.max_residual < 1e-10);
}

fn check_structure(s: &Strategy) -> Result<(), TestCaseError> {
    let input = InputStrategy::uniform_for(s);
    let js = joint_stationary_distribution(s, &input).unwrap();
    let classical = classical_memory_cost(&js);
    let bound = fidelity_bound_exact(s, DEFAULT_ENUMERATION_CAP).unwrap();
    for variant in [Variant::QInf, Variant::Q1] {
        let e = encode(s, variant).unwrap();
        prop_assert!(e.unitary.unitarity_residual < 1e-10);
        prop_assert!(e.unitary.action_residual < 1e-9);
        prop_assert!(e.consistency.max_residual < 1e-10);
        prop_assert!(e.consistency.vector_residual < 1e-10);
        prop_assert!(e.consistency.state_residual < 1e-10);
        let ns = s.num_states();
        for a in 0..ns {
            for b in 0..ns {
                let c = e.overlaps.get(a, b);
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&c));
                prop_assert!(c <= bound.get(a, b) + 1e-9);
            }
        }
        let cost = stratq_core::encoding::quantum_memory_cost(&e.states, &js.marginal).unwrap();
        prop_assert!(cost >= -1e-12 && cost <= classical + 1e-9);
        // Input preservation: no amplitude moves between stimulus sectors.
        let l = e.unitary.layout;
        let u = &e.unitary.matrix;
        for x in 0..l.num_stimuli {
            for xp in 0..l.num_stimuli {
                if x == xp {
                    continue;
                }
                for k in 0..l.sector_dim() {
                    for kp in 0..l.sector_dim() {
                        prop_assert!(u[(l.sector_index(x, k), l.sector_index(xp, kp))].abs() < 1e-12);
                    }
                }
            }
        }
    }
    Ok(())
}

#[test]
fn fixtures_structure() {
    check_structure(&fixtures::junk_pair()).unwrap();
    check_structure(&fixtures::three_state()).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_strategy_structure(seed in any::<u64>()) {
        check_structure(&random_strategy(seed, RandomShape::default()))?;
    }

    #[test]
    fn baseline_overlaps_never_exceed_infinite(seed in any::<u64>()) {
        let s = random_strategy(seed, RandomShape::default());
        let q1 = solve_overlaps(&s, Variant::Q1).unwrap();
        let qi = solve_overlaps(&s, Variant::QInf).unwrap();
        for a in 0..s.num_states() {
            for b in 0..s.num_states() {
                prop_assert!(q1.get(a, b) <= qi.get(a, b) + 1e-12);
                prop_assert!((qi.get(a, b) - qi.get(b, a)).abs() < 1e-15);
            }
            prop_assert_eq!(qi.get(a, a), 1.0);
        }
    }

    #[test]
    fn overlaps_match_expansion(seed in any::<u64>()) {
        let s = random_strategy(seed, RandomShape { max_states: 3, max_stimuli: 2, max_actions: 2 });
        let t = solve_overlaps(&s, Variant::QInf).unwrap();
        let depth = 5000;
        for a in 0..s.num_states() {
            for b in (a + 1)..s.num_states() {
                let v = expanded_overlap(&s, a, b, depth);
                let half = expanded_overlap(&s, a, b, depth / 2);
                let c = t.get(a, b);
                // The truncated expansion decreases towards the fixed point.
                prop_assert!(c <= v + 1e-9, "({a},{b}) solver {c} above expansion {v}");
                if (half - v).abs() < 1e-12 {
                    prop_assert!((c - v).abs() < 1e-9, "({a},{b}) solver {c} after {} iterations, expansion {v}", t.iterations);
                }
            }
        }
    }
}

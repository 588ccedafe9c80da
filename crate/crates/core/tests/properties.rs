use proptest::prelude::*;
use tempotree::backend::{derive_seed, softmax_probabilities};
use tempotree::controller::{
    update_global_best, update_personal_best, update_temperature, PsoParams, SwarmState, TemperatureState,
};
use tempotree::game24::{
    canonicalize, classify_value, parse_expression, parse_proposal, verify_expression, Expr, Game24State, Op,
};
use tempotree::record::ThoughtNode;
use tempotree::search::select_beam;
use tempotree::writing::{parse_judge, parse_vote, validate_passage, WritingInstance};

fn params() -> impl Strategy<Value = PsoParams> {
    (-1.0..2.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..0.5f64, 0.5..2.0f64).prop_map(|(w0, a1, a2, lo, hi)| PsoParams {
        inertial_weight: w0,
        accel_personal: a1,
        accel_global: a2,
        temp_min: lo,
        temp_max: hi,
        temp_init: (lo + hi) / 2.0,
        initial_best: None,
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = (1i64..14).prop_map(Expr::Num);
    leaf.prop_recursive(3, 8, 2, |inner| {
        (inner.clone(), prop::sample::select(Op::ALL.to_vec()), inner).prop_map(|(a, op, b)| Expr::bin(op, a, b))
    })
}

fn swap_commutative(e: &Expr) -> Expr {
    match e {
        Expr::Num(n) => Expr::Num(*n),
        Expr::Bin(op, a, b) => {
            let (a, b) = (swap_commutative(a), swap_commutative(b));
            if op.is_commutative() {
                Expr::bin(*op, b, a)
            } else {
                Expr::bin(*op, a, b)
            }
        }
    }
}

fn node(id: u64, value: f64) -> ThoughtNode {
    ThoughtNode {
        id,
        parent_id: Some(0),
        depth: 1,
        content: String::new(),
        value: Some(value),
        temperature_used: 0.7,
        value_labels: Vec::new(),
    }
}

proptest! {
    #[test]
    fn update_matches_formula_and_stays_in_bounds(
        p in params(),
        t in 0.0..2.0f64,
        pb in -100.0..100.0f64,
        x in -100.0..100.0f64,
        gb in -100.0..100.0f64,
    ) {
        let mut state = TemperatureState { current_temp: t, personal_best: Some(pb), step_index: 0, history: Vec::new() };
        let got = update_temperature(&p, &mut state, x, gb).unwrap();
        let raw = p.inertial_weight * t + p.accel_personal * (pb - x) + p.accel_global * (gb - x);
        prop_assert_eq!(got, raw.max(p.temp_min).min(p.temp_max));
        prop_assert!(p.temp_min <= got && got <= p.temp_max);
        prop_assert_eq!(state.history.len(), 1);
    }

    #[test]
    fn bests_are_running_maxima(xs in prop::collection::vec(prop::collection::vec(-50.0..50.0f64, 1..6), 1..5)) {
        let mut swarm = SwarmState::new(xs.len()).unwrap();
        let mut states: Vec<TemperatureState> = xs.iter().map(|_| TemperatureState::new(&PsoParams::game24())).collect();
        let mut last_gb = f64::NEG_INFINITY;
        let steps = xs.iter().map(Vec::len).max().unwrap();
        for step in 0..steps {
            for (i, seq) in xs.iter().enumerate() {
                if let Some(&x) = seq.get(step) {
                    update_personal_best(&mut states[i], x);
                    swarm.personal_bests[i] = states[i].personal_best;
                }
            }
            let gb = update_global_best(&mut swarm).unwrap();
            prop_assert!(gb >= last_gb);
            last_gb = gb;
        }
        for (i, seq) in xs.iter().enumerate() {
            let max = seq.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(states[i].personal_best, Some(max));
        }
        let all = xs.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(swarm.global_best, Some(all));
    }

    #[test]
    fn display_round_trips(e in expr()) {
        let parsed = parse_expression(&e.to_string()).unwrap();
        prop_assert_eq!(&parsed, &e);
    }

    #[test]
    fn canonical_form_ignores_commutation(e in expr()) {
        let c = canonicalize(&e);
        prop_assert_eq!(&canonicalize(&swap_commutative(&e)), &c);
        let reparsed = parse_expression(&c.0).unwrap();
        prop_assert_eq!(&canonicalize(&reparsed), &c);
        prop_assert_eq!(reparsed.eval(), e.eval());
    }

    #[test]
    fn verifier_needs_the_exact_leaves(e in expr()) {
        let leaves = e.leaves();
        let is24 = e.eval() == Some(tempotree::game24::int(24));
        prop_assert_eq!(verify_expression(&e, &leaves), is24);
        let mut wrong = leaves.clone();
        wrong[0] += 1;
        prop_assert!(!verify_expression(&e, &wrong));
    }

    #[test]
    fn parsers_are_total(s in ".{0,80}") {
        let _ = parse_expression(&s);
        let _ = classify_value(&s);
        let _ = parse_proposal(&Game24State::new([4, 6, 8, 1]), &s);
        let j = parse_judge(&s);
        prop_assert!((0..=100).contains(&j.value));
        if let Some(v) = parse_vote(&s, 5) {
            prop_assert!(v < 5);
        }
        let inst = WritingInstance::new("p", ["a.", "b.", "c.", "d."]);
        let check = validate_passage(&s, &inst);
        prop_assert!(!check.valid || check.paragraphs == 4);
    }

    #[test]
    fn judge_clamps_any_integer(n in any::<i64>()) {
        let v = parse_judge(&format!("Thus, the coherency score is {n}")).value;
        prop_assert_eq!(v, n.clamp(0, 100));
    }

    #[test]
    fn softmax_is_a_distribution(ws in prop::collection::vec(-5.0..5.0f64, 1..8), t in 0.0..2.0f64) {
        let p = softmax_probabilities(&ws, t);
        prop_assert_eq!(p.len(), ws.len());
        prop_assert!(p.iter().all(|&q| (0.0..=1.0).contains(&q)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beam_is_sorted_prefix(values in prop::collection::vec(0.0..1.0f64, 0..20), b in 1usize..8) {
        let nodes: Vec<ThoughtNode> = values.iter().enumerate().map(|(i, &v)| node(i as u64, v)).collect();
        let beam = select_beam(&nodes, b);
        prop_assert_eq!(beam.len(), b.min(nodes.len()));
        for w in beam.windows(2) {
            prop_assert!(w[0].value >= w[1].value);
        }
        let cutoff = beam.last().and_then(|n| n.value).unwrap_or(f64::NEG_INFINITY);
        let above = nodes.iter().filter(|n| n.value.unwrap() > cutoff).count();
        prop_assert!(above <= beam.len());
    }

    #[test]
    fn seed_derivation_is_order_sensitive(a in any::<u64>(), b in any::<u64>()) {
        prop_assert_eq!(derive_seed(&[a, b]), derive_seed(&[a, b]));
        if a != b {
            prop_assert_ne!(derive_seed(&[a, b]), derive_seed(&[b, a]));
        }
    }
}

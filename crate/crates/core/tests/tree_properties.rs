use interview_core::testing::{seed_defect, walk, walk_violations, SEEDABLE};
use interview_core::tree::{
    bundled_tree, entry_node, next_node, parse_tree, validate_tree, Target, TreeError, ViolationKind,
};
use interview_core::{NodeId, Verdict};
use proptest::prelude::*;

const MINIMAL: &str = include_str!("fixtures/minimal_tree.json");
const GAD_ONLY: &str = include_str!("fixtures/gad_only_tree.json");

#[test]
fn bundled_tree_validates_clean() {
    let report = validate_tree(&bundled_tree());
    assert!(report.is_valid(), "{:?}", report.violations);
}

#[test]
fn each_seeded_defect_yields_only_its_kind() {
    for kind in SEEDABLE {
        let tree = parse_tree(&seed_defect(kind).unwrap()).unwrap();
        let kinds = validate_tree(&tree).kinds();
        assert_eq!(kinds.into_iter().collect::<Vec<_>>(), vec![kind], "seeded {kind:?}");
    }
}

#[test]
fn met_chain_runs_from_duration_to_appetite_and_sleep() {
    let tree = bundled_tree();
    let a3a = next_node(&tree, &NodeId::new("A2b"), Verdict::Met).unwrap();
    assert_eq!(a3a, Target::Node(NodeId::new("A3a")));
    let a3b = next_node(&tree, &NodeId::new("A3a"), Verdict::Met).unwrap();
    assert_eq!(a3b, Target::Node(NodeId::new("A3b")));
    let gate = tree.suicide_gate.clone().unwrap();
    assert_eq!(
        next_node(&tree, &gate, Verdict::Met).unwrap(),
        Target::Node(NodeId::new("b17a"))
    );
    assert_eq!(
        next_node(&tree, &gate, Verdict::Ambiguous),
        Err(TreeError::AmbiguousOutcomeRejected)
    );
    assert_eq!(
        next_node(&tree, &NodeId::new("zz"), Verdict::Met),
        Err(TreeError::UnknownNode(NodeId::new("zz")))
    );
}

#[test]
fn fixtures_parse_and_validate() {
    let minimal = parse_tree(MINIMAL).unwrap();
    assert_eq!(minimal.len(), 2);
    assert_eq!(entry_node(&minimal).id, NodeId::new("s1"));
    assert!(validate_tree(&minimal).is_valid());
    assert_eq!(
        next_node(&minimal, &NodeId::new("end"), Verdict::Met),
        Err(TreeError::TerminalHasNoBranches(NodeId::new("end")))
    );

    let gad = parse_tree(GAD_ONLY).unwrap();
    assert_eq!(entry_node(&gad).id, NodeId::new("N1a"));
    assert!(gad.suicide_gate.is_none());
    assert!(validate_tree(&gad).is_valid(), "{:?}", validate_tree(&gad).violations);
}

#[test]
fn dangling_target_is_unknown_reference() {
    let doc = MINIMAL.replace("\"not_met\": \"end\"", "\"not_met\": \"zz9\"");
    assert_eq!(parse_tree(&doc), Err(TreeError::UnknownReference("zz9".into())));
}

#[test]
fn suicide_gate_misroute_alone_is_reported() {
    let tree = parse_tree(&seed_defect(ViolationKind::SuicideRouteBroken).unwrap()).unwrap();
    let report = validate_tree(&tree);
    assert_eq!(report.violations.len(), 1);
    assert_eq!(report.violations[0].nodes, vec![NodeId::new("N1a")]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn conclusive_walks_keep_navigation_guarantees(bits in proptest::collection::vec(any::<bool>(), 64)) {
        let tree = bundled_tree();
        let mut i = 0;
        let w = walk(&tree, |_| {
            i += 1;
            if bits[(i - 1) % bits.len()] { Verdict::Met } else { Verdict::NotMet }
        });
        prop_assert!(w.visited.len() <= tree.len());
        let broken = walk_violations(&tree, &w);
        prop_assert!(broken.is_empty(), "{:?}", broken);
    }
}

/// Random forward-only trees: node i branches only to later nodes or TERMINAL.
fn random_dag() -> impl Strategy<Value = String> {
    (2usize..12).prop_flat_map(|n| {
        proptest::collection::vec((0usize..64, 0usize..64, 0usize..4, any::<bool>()), n).prop_map(move |spec| {
            let modules = ["depression", "suicide", "generalized_anxiety", "social_anxiety"];
            let nodes: Vec<serde_json::Value> = spec
                .iter()
                .enumerate()
                .map(|(i, &(a, b, m, symptom))| {
                    let target = |x: usize| {
                        let span = n - i;
                        let k = x % span;
                        if k == 0 { "TERMINAL".to_string() } else { format!("n{}", i + k) }
                    };
                    let mut node = serde_json::json!({
                        "id": format!("n{i}"),
                        "module": modules[m],
                        "kind": if symptom { "symptom" } else { "screening" },
                        "canonical": format!("item {i} \"quoted\""),
                        "hint": "Ask, é?",
                        "branches": {"met": target(a), "not_met": target(b)}
                    });
                    if symptom {
                        node["criterion"] = (i + 1).into();
                        node["mandatory"] = (a % 2 == 0).into();
                    }
                    node
                })
                .collect();
            serde_json::json!({"entry": "n0", "nodes": nodes}).to_string()
        })
    })
}

proptest! {
    #[test]
    fn parse_serialize_parse_round_trips(doc in random_dag()) {
        let tree = parse_tree(&doc).unwrap();
        let again = parse_tree(&tree.to_document()).unwrap();
        prop_assert_eq!(&again, &tree);
        prop_assert_eq!(again.to_document(), tree.to_document());
    }

    #[test]
    fn forward_trees_never_cycle_and_walks_terminate(doc in random_dag(), bits in proptest::collection::vec(any::<bool>(), 16)) {
        let tree = parse_tree(&doc).unwrap();
        prop_assert!(!validate_tree(&tree).kinds().contains(&ViolationKind::Cycle));
        let mut i = 0;
        let w = walk(&tree, |_| { i += 1; if bits[(i - 1) % 16] { Verdict::Met } else { Verdict::NotMet } });
        prop_assert!(w.terminated && w.visited.len() <= tree.len());
    }
}

//! Judges a few replies against one interview node with the mock backend.

use interview_core::backend::{ContextTurn, Speaker};
use interview_core::judgment::Judge;
use interview_core::tree::bundled_tree;
use interview_core::{Catalog, MockBackend, NodeId};

fn main() {
    let tree = bundled_tree();
    let catalog = Catalog::bundled();
    let backend = MockBackend::bundled();
    let node = tree.node(&NodeId::new("N1a")).expect("bundled node");
    let judge = Judge::new(&catalog);
    for reply in [
        "I worry about everything, honestly.",
        "Honestly, constant worrying",
        "No, I don't worry much",
        "Hard to say really",
    ] {
        let history = [ContextTurn {
            speaker: Speaker::Participant,
            text: reply.into(),
        }];
        let out = judge.judge_response(node, reply, 0, &history, &backend).expect("judged");
        let quote = out.evidence.as_ref().map(|e| &reply[e.range()]).unwrap_or("-");
        println!("{reply:?} -> {:?} via {:?} [{quote}] {}", out.tag, out.route, out.rationale);
    }
}

//! Shows which questioning strategy follows different participant replies.

use chrono::DateTime;
use interview_core::backend::Speaker;
use interview_core::strategy::{detect_confusion, detect_distress, render_question, select_strategy, CueReport, DistressLexicon};
use interview_core::transcript::Turn;
use interview_core::tree::bundled_tree;
use interview_core::{Catalog, MockBackend, NodeId};

fn main() {
    let tree = bundled_tree();
    let catalog = Catalog::bundled();
    let lexicon = DistressLexicon::bundled();
    let backend = MockBackend::bundled();
    let node = tree.node(&NodeId::new("ra3d")).expect("bundled node");

    let scripts: [&[&str]; 3] = [
        &["My energy varies, maybe"],
        &["I feel so overwhelmed lately", "Everything is overwhelming, I am overwhelmed"],
        &["What do you mean by energy?"],
    ];
    for replies in scripts {
        let history: Vec<Turn> = replies
            .iter()
            .map(|r| Turn {
                speaker: Speaker::Participant,
                text: r.to_string(),
                timestamp: DateTime::UNIX_EPOCH,
                node: node.id.clone(),
                strategy: None,
                verdict: None,
            })
            .collect();
        let cues = CueReport::merge(
            detect_distress(&history, &lexicon, &node.hint),
            detect_confusion(&history, node, &catalog.negation_cues),
        );
        let strategy = select_strategy(&cues, false);
        let question = render_question(node, strategy, &history, &backend).expect("rendered");
        println!("{:?}\n  -> {} : {question}", replies.last().unwrap(), strategy.as_str());
    }
}

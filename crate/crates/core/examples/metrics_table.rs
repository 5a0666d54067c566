//! Prints the metrics table for a JSON-lines cohort file, or for a small
//! built-in cohort.

use interview_core::metrics::{cohort_metrics, parse_cohort, Label, LabeledPair};

fn main() {
    let pairs = match std::env::args().nth(1) {
        Some(path) => parse_cohort(&std::fs::read_to_string(path).expect("cohort file")).expect("valid cohort"),
        None => {
            let mut out = Vec::new();
            for (n, r, p) in [
                (40, Label::Case, Label::Case),
                (10, Label::Case, Label::Control),
                (5, Label::Control, Label::Case),
                (45, Label::Control, Label::Control),
            ] {
                for _ in 0..n {
                    out.push(LabeledPair {
                        id: format!("s{}", out.len()),
                        reference: r,
                        predicted: p,
                    });
                }
            }
            out
        }
    };
    print!("{}", cohort_metrics(&pairs).expect("non-empty cohort").table());
}

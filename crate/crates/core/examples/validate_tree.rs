//! Validates an interview tree file (or the bundled tree) and prints any violations.
//!
//! cargo run --example validate_tree -- [tree.json]

use interview_core::tree::{bundled_tree, parse_tree, validate_tree};

fn main() {
    let tree = match std::env::args().nth(1) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).expect("readable tree file");
            match parse_tree(&text) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{path}: {e}");
                    std::process::exit(1);
                }
            }
        }
        None => bundled_tree(),
    };
    let report = validate_tree(&tree);
    println!("{} nodes, modules {:?}", tree.len(), tree.modules());
    for v in &report.violations {
        println!("{v}");
    }
    println!("{}", if report.is_valid() { "valid" } else { "invalid" });
}

//! Writes persona scripts as JSON files.
//!
//! cargo run --example export_personas -- <dir> [canonical|cohort]

use std::path::PathBuf;

use interview_core::persona::cohort::{canonical_personas, rule_faithful_cohort};

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "personas".into()));
    let set = match args.next().as_deref() {
        Some("cohort") => rule_faithful_cohort(),
        _ => canonical_personas(),
    };
    std::fs::create_dir_all(&dir)?;
    for p in &set {
        std::fs::write(dir.join(format!("{}.json", p.name)), p.to_json() + "\n")?;
    }
    println!("wrote {} personas to {}", set.len(), dir.display());
    Ok(())
}

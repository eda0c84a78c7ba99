//! Writes a small synthetic dataset tree for trying the CLI without any
//! external data:
//!
//! ```text
//! cargo run -p vlmad --example demo_dataset -- /tmp/vlmad-demo
//! ```

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("demo_dataset"));
    vlmad::synth::write_mock_benchmark_tree(&out)?;
    println!("wrote demo tree to {}", out.display());
    println!("category: {} (6 test/good + 6 test/dent images)", vlmad::synth::MOCK_CATEGORY);
    Ok(())
}

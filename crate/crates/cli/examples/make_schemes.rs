//! Regenerates the bundled scheme files:
//! `cargo run -p urb-cli --example make_schemes -- crates/cli/schemes`

use std::path::PathBuf;

use urb_core::gates::{clifford_group, pauli_group};
use urb_core::io::scheme_document;
use urb_core::schemes::NoiseSpec;

fn main() -> anyhow::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/cli/schemes".into()));
    std::fs::create_dir_all(&dir)?;
    let cliffords = clifford_group(1)?;
    let paulis = pauli_group(1)?;
    let uniform = |n: usize| vec![1.0 / n as f64; n];
    let docs = [
        (
            "clifford_rb_d2",
            scheme_document(
                "single-qubit Clifford RB, noiseless",
                &cliffords,
                &uniform(24),
                &NoiseSpec::none(),
                "factored",
            )?,
        ),
        (
            "clifford_dep09_d2",
            scheme_document(
                "single-qubit Clifford RB, depolarizing gate noise q = 0.9",
                &cliffords,
                &uniform(24),
                &NoiseSpec::depolarizing(0.9),
                "factored",
            )?,
        ),
        (
            "pauli_d2",
            scheme_document(
                "single-qubit Pauli group, noiseless",
                &paulis,
                &uniform(4),
                &NoiseSpec::none(),
                "factored",
            )?,
        ),
    ];
    for (name, doc) in docs {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

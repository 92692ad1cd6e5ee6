//! Regenerates the bundled energy-model assets.
//!
//! Fits the polynomial fuel model to each built-in vehicle-class
//! surrogate and writes `assets/models/<class>.json` plus the portfolio
//! manifest `assets/portfolio.json` that ties classes to model files and
//! road shares. The CLI's `--portfolio` option consumes these files.
//!
//! Run with: `cargo run --example gen_energy_assets`

use std::path::Path;

use serde_json::json;
use wavebench::energy::placeholder::SURROGATES;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets");
    let models = root.join("models");
    std::fs::create_dir_all(&models).expect("mkdir assets/models");

    let mut manifest = Vec::new();
    for (spec, share) in &SURROGATES {
        let model = spec.fitted_model();
        let file = format!("models/{}.json", spec.name);
        std::fs::write(root.join(&file), model.to_json()).expect("write model");
        println!("wrote {} (beta {:.2} g/s, share {share:.4})", file, model.beta);
        manifest.push(json!({
            "class_name": spec.name,
            "model_file": file,
            "share": share,
        }));
    }

    let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest json");
    std::fs::write(root.join("portfolio.json"), manifest_text).expect("write portfolio");
    println!("wrote portfolio.json ({} classes)", SURROGATES.len());
}

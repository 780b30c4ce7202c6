#![allow(dead_code)]

use std::path::PathBuf;

use moranlab::cli::model_file::load_model;
use moranlab::ifs::IFSModel;

/// Root of `0.5^s Σ_j j^{-2s} = 1`, produced by the oracle in
/// `powerlaw_oracle.rs` (partial sums to 10⁶ with integral tail bounds).
pub const POWERLAW_S: f64 = 0.903_792_760_898_768;

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(format!("{name}.toy"))
}

pub fn load(name: &str) -> IFSModel {
    load_model(&model_path(name))
        .expect("shipped model loads")
        .1
}

pub const SHIPPED: [&str; 7] = [
    "cantor",
    "geometric2",
    "geometric4",
    "powerlaw",
    "gapped",
    "lebesgue",
    "mixed23",
];

/// Neumaier compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

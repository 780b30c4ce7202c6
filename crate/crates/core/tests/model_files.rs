//! The shipped `.toy` files describe the same families as the built-in
//! constructors.

mod common;

use common::{load, SHIPPED};
use moranlab::families;

#[test]
fn files_match_builtin_families() {
    let builtin = families::shipped().unwrap();
    assert_eq!(builtin.len(), SHIPPED.len());
    for (name, b) in builtin {
        let f = load(name);
        assert_eq!(f.dim(), b.dim(), "{name}");
        assert_eq!(f.num_maps(), b.num_maps(), "{name}");
        let head = f.num_maps().unwrap_or(50);
        for j in 1..=head {
            let (rf, rb) = (f.ratios().ratio(j).unwrap(), b.ratios().ratio(j).unwrap());
            assert!((rf - rb).abs() <= 1e-15 * rb, "{name} ratio {j}");
            let (pf, pb) = (f.weights().weight(j), b.weights().weight(j));
            assert!(
                (pf - pb).abs() <= 1e-12 * pb,
                "{name} weight {j}: {pf} vs {pb}"
            );
            let (mf, mb) = (f.map(j).unwrap(), b.map(j).unwrap());
            for (x, y) in mf.translation().iter().zip(mb.translation()) {
                assert!((x - y).abs() <= 1e-14, "{name} map {j}");
            }
            assert_eq!(mf.orthogonal(), mb.orthogonal(), "{name} map {j}");
        }
    }
}

#[test]
fn every_file_declares_a_seed() {
    for name in SHIPPED {
        let (file, _) = moranlab::cli::model_file::load_model(&common::model_path(name)).unwrap();
        assert!(file.run.seed.is_some(), "{name}");
    }
}

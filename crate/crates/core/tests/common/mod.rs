#![allow(dead_code)]

use tiledcsl::{encode, gen_random_sparse, DenseMatrix, HalfBits, TcslMatrix, TileConfig};

/// Inputs for the checked-in TCSL files.
pub fn golden_cases() -> Vec<(&'static str, TcslMatrix)> {
    let mut two = DenseMatrix::zeros(128, 64);
    two.set(0, 0, HalfBits(0x3C00));
    two.set(1, 2, HalfBits(0x4000));
    let cfg = TileConfig::default();
    vec![
        ("two_nonzeros", encode(&two, &cfg, true).unwrap()),
        (
            "random_256x128_b80_reordered",
            encode(&gen_random_sparse(256, 128, 0.8, 42).unwrap(), &cfg, true).unwrap(),
        ),
        (
            "random_200x100_b70_natural_m256",
            encode(
                &gen_random_sparse(200, 100, 0.7, 7).unwrap(),
                &cfg.with_tile(256, 64),
                false,
            )
            .unwrap(),
        ),
    ]
}

pub fn golden_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.tcsl"))
}

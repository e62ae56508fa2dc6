//! Exit criteria. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use tiledcsl::analyzer::{ci_dense, ci_sparse, decoder_shapes, roofline_utilization};
use tiledcsl::extract::{ldmatrix_wavefronts, matrix_extract_stats};
use tiledcsl::pipeline::{build_schedule, estimate_time, validate_schedule, HardwareParams, Resource, Rule};
use tiledcsl::tcsl::{bank_of, NUM_BANKS};
use tiledcsl::{
    decode, dense_gemm_ref, deserialize, encode, gen_random_sparse, serialize, spmm, DenseMatrix, HalfBits,
    TileConfig,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

struct Case {
    m: usize,
    k: usize,
    n: usize,
    beta: f64,
    seed: u64,
}

const CASES: usize = 200;
const BETAS: [f64; 5] = [0.0, 0.5, 0.7, 0.8, 0.9];
const NS: [usize; 4] = [8, 16, 32, 64];

fn cases() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE97);
    (0..CASES)
        .map(|i| Case {
            m: 128 * rng.gen_range(1..=16),
            k: 128 * rng.gen_range(1..=16),
            // cycle N and beta so every value is covered many times
            n: NS[i % NS.len()],
            beta: BETAS[(i / NS.len()) % BETAS.len()],
            seed: rng.gen(),
        })
        .collect()
}

fn c1_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut checks = 0;
    for (i, c) in cases().iter().enumerate() {
        let cfg = TileConfig::for_n(c.n);
        let a = gen_random_sparse(c.m, c.k, c.beta, c.seed).unwrap();
        let b = gen_random_sparse(c.k, c.n, 0.0, c.seed ^ 0xB).unwrap();
        let want = dense_gemm_ref::<f32>(&a.normalize_zeros(), &b, &cfg).unwrap();
        for reorder in [false, true] {
            let t = encode(&a, &cfg, reorder).unwrap();
            let got = spmm::<f32>(&t, &b, &cfg).unwrap();
            if let Some((r, col)) = got.first_mismatch(&want) {
                return Err(format!(
                    "case {i} ({}x{}x{}, beta={}, reorder={reorder}) differs at ({r}, {col})",
                    c.m, c.k, c.n, c.beta
                ));
            }
            checks += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 300.0 {
        return Err(format!("{checks} checks bit-exact but took {secs:.1}s (budget 300s)"));
    }
    Ok(format!("{CASES} cases x 2 orders = {checks} bit-exact products in {secs:.1}s"))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

const GOLDEN_HASHES: [(&str, &str); 3] = [
    (
        "two_nonzeros",
        "832885c40daf17db28d50a53d02e8ced87f8955d5b3a02aff48350d554cd204a",
    ),
    (
        "random_256x128_b80_reordered",
        "45eb465a733ad01a2a5b03ab510d4b9842d6e59c8b62310342a2906116910f97",
    ),
    (
        "random_200x100_b70_natural_m256",
        "63bd761a3ba0aa960fcc49eac8149a23053a5a4da681b8df1c2974d1a70337c1",
    ),
];

fn c2_codec_round_trip() -> Outcome {
    let mut round_trips = 0;
    for (i, c) in cases().iter().enumerate() {
        let cfg = TileConfig::for_n(c.n);
        let a = gen_random_sparse(c.m, c.k, c.beta, c.seed).unwrap();
        let want = a.normalize_zeros();
        for reorder in [false, true] {
            let t = encode(&a, &cfg, reorder).unwrap();
            if decode(&t).unwrap() != want {
                return Err(format!("case {i} reorder={reorder}: decode(encode(A)) != A"));
            }
            let bytes = serialize(&t);
            let back = deserialize(&bytes).map_err(|e| format!("case {i}: {e}"))?;
            if back != t || serialize(&back) != bytes {
                return Err(format!("case {i} reorder={reorder}: serialized form does not round-trip"));
            }
            round_trips += 1;
        }
    }

    if std::env::var_os("TILEDCSL_BLESS").is_some() {
        for (name, t) in common::golden_cases() {
            let bytes = serialize(&t);
            std::fs::write(common::golden_path(name), &bytes).unwrap();
            println!("    blessed {name}: {}", sha256_hex(&bytes));
        }
    }
    for ((name, t), (hname, hash)) in common::golden_cases().into_iter().zip(GOLDEN_HASHES) {
        assert_eq!(name, hname);
        let file = std::fs::read(common::golden_path(name)).map_err(|e| format!("{name}: {e}"))?;
        let got = sha256_hex(&file);
        if got != hash {
            return Err(format!("{name}: sha256 {got} != {hash}"));
        }
        if serialize(&t) != file {
            return Err(format!("{name}: encoder output differs from golden file"));
        }
        let back = deserialize(&file).map_err(|e| format!("{name}: {e}"))?;
        if serialize(&back) != file {
            return Err(format!("{name}: golden file does not round-trip"));
        }
    }
    Ok(format!("{round_trips} lossless encodes with byte-identical reserialization; 3 golden hashes match"))
}

fn c3_roofline() -> Outcome {
    let hw = HardwareParams::default();
    let (m, _k) = (49152u64, 12288u64);
    let published_dense = [5.1, 10.3, 20.5, 40.1];
    let published_sparse = [8.5, 17.1, 34.2, 68.2];
    let mut within_tight = 0;
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (i, &n) in NS.iter().enumerate() {
        let dense = 100.0 * roofline_utilization(ci_dense::<f64>(m, n as u64), &hw).utilization;
        let sparse = 100.0 * roofline_utilization(ci_sparse::<f64>(m, n as u64, 0.4).unwrap(), &hw).utilization;
        for (got, want) in [(dense, published_dense[i]), (sparse, published_sparse[i])] {
            let err = (got - want).abs();
            worst = worst.max(err);
            if err <= 0.3 {
                within_tight += 1;
            }
            lines.push(format!("{got:.2}/{want}"));
        }
    }
    let detail = format!("[{}], worst {worst:.2}pp, {within_tight}/8 within 0.3pp", lines.join(", "));
    if worst <= 1.0 && within_tight >= 7 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c4_footprint() -> Outcome {
    let cfg = TileConfig::default();
    let (m, k) = (36864, 9216);
    let mut parts = Vec::new();
    for (i, beta) in [0.7, 0.8, 0.9].into_iter().enumerate() {
        let a = gen_random_sparse(m, k, beta, 400 + i as u64).unwrap();
        let t = encode(&a, &cfg, true).unwrap();
        drop(a);
        let ratio = t.footprint_bytes() as f64 / (2 * m * k) as f64;
        let lo = 2.0 * (1.0 - beta);
        parts.push(format!("beta={beta}: {ratio:.4} in [{lo:.2}, {:.2}]", lo + 0.05));
        if !(ratio >= lo && ratio <= lo + 0.05) {
            return Err(parts.join("; "));
        }
    }
    Ok(parts.join("; "))
}

/// A tile where every bank holds exactly `per_bank` nonzeros.
fn equal_bank_tile(per_bank: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut by_bank: Vec<Vec<(usize, usize)>> = vec![Vec::new(); NUM_BANKS];
    for x in 0..128 {
        for y in 0..64 {
            by_bank[bank_of(x, y).0 as usize].push((x, y));
        }
    }
    let mut a = DenseMatrix::zeros(128, 64);
    for cells in &mut by_bank {
        for i in 0..per_bank {
            let j = rng.gen_range(i..cells.len());
            cells.swap(i, j);
            let (x, y) = cells[i];
            a.set(x, y, HalfBits::from_f32(rng.gen_range(0.5f32..2.0)));
        }
    }
    a
}

fn c5_bank_conflicts() -> Outcome {
    let cfg = TileConfig::default();
    let mut parts = Vec::new();
    for beta in [0.7, 0.8, 0.9] {
        let (mut nat_total, mut re_total) = (0u64, 0u64);
        for seed in 0..100u64 {
            let a = gen_random_sparse(128, 64, beta, 5000 + seed).unwrap();
            let nat = matrix_extract_stats(&encode(&a, &cfg, false).unwrap());
            let re = matrix_extract_stats(&encode(&a, &cfg, true).unwrap());
            if re.total_wavefronts > nat.total_wavefronts {
                return Err(format!(
                    "beta={beta} seed={seed}: reordered {} > natural {}",
                    re.total_wavefronts, nat.total_wavefronts
                ));
            }
            nat_total += nat.total_wavefronts;
            re_total += re.total_wavefronts;
        }
        parts.push(format!("beta={beta}: natural {nat_total} vs reordered {re_total} wavefronts"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for per_bank in [1, 2, 7, 51, 128, 200, 256] {
        let t = encode(&equal_bank_tile(per_bank, &mut rng), &cfg, true).unwrap();
        let s = matrix_extract_stats(&t);
        if s.mean_per_group != 1.0 {
            return Err(format!("equal banks ({per_bank} each): mean {} != 1.0", s.mean_per_group));
        }
    }
    parts.push("equal-bank tiles: mean 1.0".into());
    Ok(parts.join("; "))
}

fn c6_ldmatrix() -> Outcome {
    let cfg = TileConfig::default();
    let mut blocks = 0;
    for x0 in (0..128).step_by(8) {
        for y0 in (0..64).step_by(8) {
            let w = ldmatrix_wavefronts(x0, y0, &cfg).unwrap();
            if w != 1 {
                return Err(format!("block ({x0}, {y0}) needs {w} wavefronts"));
            }
            blocks += 1;
        }
    }
    Ok(format!("{blocks} aligned 8x8 blocks, 1 wavefront each"))
}

fn c7_pipeline() -> Outcome {
    let mut timelines = 0;
    for &(m, k, n) in &[(128, 64, 8), (128, 256, 16), (1024, 1024, 32), (4096, 2048, 64), (36864, 9216, 16)] {
        for beta in [0.0, 0.5, 0.9] {
            let t = build_schedule(m, k, n, beta, &TileConfig::for_n(n));
            let v = validate_schedule(&t);
            if !v.is_empty() {
                return Err(format!("{m}x{k}x{n} beta={beta}: {}", v[0]));
            }
            timelines += 1;
        }
    }
    let base = build_schedule(128, 256, 16, 0.8, &TileConfig::for_n(16));
    let mut deletions = 0;
    let mut rules = std::collections::BTreeSet::new();
    for &(a, b) in &base.edges {
        let mut t = base.clone();
        t.remove_edge(a, b);
        let v = validate_schedule(&t);
        if v.is_empty() {
            return Err(format!("deleting {} -> {} went undetected", t.events[a], t.events[b]));
        }
        rules.extend(v.iter().map(|x| format!("{:?}", x.rule)));
        deletions += 1;
    }
    let expected: std::collections::BTreeSet<String> =
        [Rule::R1, Rule::R2, Rule::R3, Rule::R4].iter().map(|r| format!("{r:?}")).collect();
    if deletions < 20 || rules != expected {
        return Err(format!("{deletions} deletions covering {rules:?}"));
    }
    Ok(format!("{timelines} timelines valid; {deletions}/{deletions} single-edge deletions detected across R1-R4"))
}

fn c8_bottleneck_shift() -> Outcome {
    let hw = HardwareParams::default();
    let mut dense_ok = 0;
    let mut shifted = 0;
    let mut total = 0;
    let mut example = String::new();
    for shape in decoder_shapes() {
        for n in NS {
            let cfg = TileConfig::for_n(n);
            let dense = estimate_time(&build_schedule(shape.m, shape.k, n, 0.0, &cfg), &hw);
            let sparse = estimate_time(&build_schedule(shape.m, shape.k, n, 0.9, &cfg), &hw);
            total += 1;
            if dense.binding == Resource::Gmem {
                dense_ok += 1;
            }
            if sparse.binding == Resource::Smem {
                shifted += 1;
            }
            if shape.m == 36864 && shape.k == 9216 && n == 16 {
                example = format!(
                    "36864x9216x16 beta=0.9: gmem {:.1}us smem {:.1}us tc {:.1}us",
                    sparse.gmem_s * 1e6,
                    sparse.smem_s * 1e6,
                    sparse.tc_s * 1e6
                );
            }
        }
    }
    let detail = format!("dense Gmem-bound {dense_ok}/{total}; beta=0.9 Smem-bound {shifted}/{total}; {example}");
    if dense_ok == total && shifted == total {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("C1 oracle equivalence", c1_oracle_equivalence),
        ("C2 codec round-trip", c2_codec_round_trip),
        ("C3 roofline reproduction", c3_roofline),
        ("C4 footprint", c4_footprint),
        ("C5 bank-conflict reduction", c5_bank_conflicts),
        ("C6 ldmatrix conflict-freedom", c6_ldmatrix),
        ("C7 pipeline validity", c7_pipeline),
        ("C8 bottleneck shift", c8_bottleneck_shift),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

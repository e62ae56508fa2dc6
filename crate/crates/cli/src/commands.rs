use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use tiledcsl::analyzer::{
    decoder_shapes, report_row, throughput_tflops, MemoryFlag, ReportRow, BENCH_BATCH_SIZES, BENCH_SPARSITIES,
};
use tiledcsl::fldm::{self, Fldm};
use tiledcsl::pipeline::{build_schedule, estimate_time, validate_schedule, HardwareParams, Resource};
use tiledcsl::{
    decode as tcsl_decode, dense_gemm_ref, deserialize, encode as tcsl_encode, gen_random_sparse,
    prune_magnitude, serialize, DenseMatrix, TcslMatrix, TileConfig,
};

use crate::error::CliError;
use crate::{AnalyzeArgs, BenchArgs, DecodeArgs, EncodeArgs, GenArgs, HwArgs, PipelineArgs, PruneArgs, SpmmArgs};

type CliResult = Result<(), CliError>;

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn read_half(path: &Path) -> Result<DenseMatrix, CliError> {
    match fldm::read(&read_bytes(path)?).map_err(|e| CliError::io(path, e))? {
        Fldm::Half(m) => Ok(m),
        Fldm::Single(_) => Err(CliError::io(path, "expected a binary16 matrix, found binary32")),
    }
}

fn read_tcsl(path: &Path) -> Result<TcslMatrix, CliError> {
    deserialize(&read_bytes(path)?).map_err(|e| CliError::io(path, e))
}

fn check_sparsity(beta: f64) -> CliResult {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--sparsity {beta} outside [0, 1]")))
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{flag}: cannot parse {p:?}")))
        })
        .collect()
}

fn parse_shape(s: &str) -> Result<(usize, usize, usize), CliError> {
    let v: Vec<usize> = parse_list("--shape", s)?;
    match v[..] {
        [m, k, n] if m > 0 && k > 0 && n > 0 => Ok((m, k, n)),
        _ => Err(CliError::Usage(format!("--shape expects three positive integers M,K,N, got {s:?}"))),
    }
}

fn parse_hw(args: &HwArgs) -> Result<HardwareParams, CliError> {
    let mut hw = HardwareParams::default();
    if let Some(spec) = &args.hw {
        for item in spec.split(',') {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--hw: expected key=value, got {item:?}")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--hw: cannot parse {value:?}")))?;
            match key.trim() {
                "peak" => hw.peak_tc = value,
                "bw" => hw.bw_gmem = value,
                "smem" => hw.bw_smem = value,
                other => return Err(CliError::Usage(format!("--hw: unknown key {other:?} (peak, bw, smem)"))),
            }
        }
    }
    if !hw.is_valid() {
        return Err(CliError::Usage("--hw: values must be positive".into()));
    }
    Ok(hw)
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let s = serde_json::to_string_pretty(value).expect("serializable");
    println!("{s}");
    Ok(())
}

pub fn gen(a: &GenArgs) -> CliResult {
    check_sparsity(a.sparsity)?;
    let m = gen_random_sparse(a.rows, a.cols, a.sparsity, a.seed)?;
    write_bytes(&a.output, &fldm::write_half(&m))
}

pub fn prune(a: &PruneArgs) -> CliResult {
    check_sparsity(a.sparsity)?;
    let m = prune_magnitude(&read_half(&a.input)?, a.sparsity)?;
    write_bytes(&a.output, &fldm::write_half(&m))
}

pub fn encode(a: &EncodeArgs) -> CliResult {
    let cfg = TileConfig::default().with_tile(a.tile_m, a.tile_k);
    cfg.validate()?;
    let m = read_half(&a.input)?;
    let t = tcsl_encode(&m, &cfg, !a.no_reorder)?;
    write_bytes(&a.output, &serialize(&t))
}

pub fn decode(a: &DecodeArgs) -> CliResult {
    let t = read_tcsl(&a.input)?;
    let m = tcsl_decode(&t).map_err(|e| CliError::io(&a.input, e))?;
    write_bytes(&a.output, &fldm::write_half(&m))
}

pub fn spmm(a: &SpmmArgs) -> CliResult {
    let t = read_tcsl(&a.a)?;
    let b = read_half(&a.b)?;
    let cfg = t.tile_config(b.cols());
    let c = tiledcsl::spmm::<f32>(&t, &b, &cfg)?;
    if let Some(out) = &a.output {
        let bytes = if a.out_f16 {
            fldm::write_half(&c.to_half())
        } else {
            fldm::write_single(&c)
        };
        write_bytes(out, &bytes)?;
    }
    if a.check {
        let dense = tcsl_decode(&t).map_err(|e| CliError::io(&a.a, e))?;
        let want = dense_gemm_ref::<f32>(&dense, &b, &cfg)?;
        match c.first_mismatch(&want) {
            None => println!("bit-exact: true"),
            Some((r, col)) => {
                println!("bit-exact: false");
                return Err(CliError::Check(format!(
                    "output ({r}, {col}) is {:e}, reference {:e}",
                    c.get(r, col),
                    want.get(r, col)
                )));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    #[serde(flatten)]
    row: ReportRow,
    ridge: f64,
    flag: Option<&'static str>,
}

pub fn analyze(a: &AnalyzeArgs) -> CliResult {
    let (m, k, n) = parse_shape(&a.shape)?;
    let hw = parse_hw(&a.hw)?;
    let cfg = TileConfig::for_n(n);
    let measured = match &a.a {
        Some(path) => {
            let t = read_tcsl(path)?;
            if (t.m(), t.k()) != (m, k) {
                return Err(CliError::Usage(format!(
                    "dimension mismatch: {} is {}x{}, --shape says {m}x{k}",
                    path.display(),
                    t.m(),
                    t.k()
                )));
            }
            Some(t.footprint_bytes())
        }
        None => None,
    };
    let row = report_row(m as u64, k as u64, n as u64, a.sparsity, &hw, &cfg, measured)?;
    let flag = MemoryFlag::for_ratio(row.ratio).map(MemoryFlag::message);
    if a.json {
        return print_json(&AnalyzeReport { row, ridge: hw.ridge(), flag });
    }
    println!("shape        {m}x{k}x{n}, beta {}", row.beta);
    println!("ci_dense     {:.4} FLOP/B", row.ci_dense);
    println!("ci_sparse    {:.4} FLOP/B", row.ci_sparse);
    println!("ridge        {:.2} FLOP/B", hw.ridge());
    println!("util_dense   {:.2}%", 100.0 * row.util_dense);
    println!("util_sparse  {:.2}%", 100.0 * row.util_sparse);
    println!("dense_bytes  {}", row.dense_bytes);
    println!(
        "tcsl_bytes   {} ({})",
        row.tcsl_bytes,
        if measured.is_some() { "measured" } else { "estimated" }
    );
    println!("ratio        {:.4}", row.ratio);
    if let Some(msg) = flag {
        println!("note         {msg}");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchRow {
    name: String,
    #[serde(rename = "M")]
    m: u64,
    #[serde(rename = "K")]
    k: u64,
    #[serde(rename = "N")]
    n: u64,
    beta: f64,
    ci_dense: f64,
    ci_sparse: f64,
    util_dense: f64,
    util_sparse: f64,
    dense_bytes: usize,
    tcsl_bytes: usize,
    ratio: f64,
    dense_est_us: f64,
    sparse_est_us: f64,
    dense_binding: Resource,
    sparse_binding: Resource,
    sparse_est_tflops: f64,
    est_speedup: f64,
}

fn bench_shapes(a: &BenchArgs) -> Result<Vec<(String, usize, usize)>, CliError> {
    let Some(spec) = &a.shapes else {
        return Ok(decoder_shapes().into_iter().map(|s| (s.name, s.m, s.k)).collect());
    };
    spec.split(',')
        .map(|item| {
            let bad = || CliError::Usage(format!("--shapes: expected MxK, got {item:?}"));
            let (m, k) = item.trim().split_once('x').ok_or_else(bad)?;
            let m: usize = m.parse().map_err(|_| bad())?;
            let k: usize = k.parse().map_err(|_| bad())?;
            if m == 0 || k == 0 {
                return Err(bad());
            }
            Ok((format!("{m}x{k}"), m, k))
        })
        .collect()
}

pub fn bench(a: &BenchArgs) -> CliResult {
    let hw = parse_hw(&a.hw)?;
    let shapes = bench_shapes(a)?;
    let batches: Vec<usize> = match &a.batch {
        Some(s) => parse_list("--batch", s)?,
        None => BENCH_BATCH_SIZES.to_vec(),
    };
    if batches.contains(&0) {
        return Err(CliError::Usage("--batch: sizes must be positive".into()));
    }
    let betas: Vec<f64> = match &a.sparsities {
        Some(s) => parse_list("--sparsities", s)?,
        None => BENCH_SPARSITIES.to_vec(),
    };
    for &b in &betas {
        if !(0.0..1.0).contains(&b) {
            return Err(CliError::Usage(format!("--sparsities: {b} outside [0, 1)")));
        }
    }

    let mut rows = Vec::new();
    for (name, m, k) in &shapes {
        for &n in &batches {
            let cfg = TileConfig::for_n(n);
            let dense = estimate_time(&build_schedule(*m, *k, n, 0.0, &cfg), &hw);
            for &beta in &betas {
                let sparse = estimate_time(&build_schedule(*m, *k, n, beta, &cfg), &hw);
                let r = report_row(*m as u64, *k as u64, n as u64, beta, &hw, &cfg, None)?;
                rows.push(BenchRow {
                    name: name.clone(),
                    m: r.m,
                    k: r.k,
                    n: r.n,
                    beta,
                    ci_dense: r.ci_dense,
                    ci_sparse: r.ci_sparse,
                    util_dense: r.util_dense,
                    util_sparse: r.util_sparse,
                    dense_bytes: r.dense_bytes,
                    tcsl_bytes: r.tcsl_bytes,
                    ratio: r.ratio,
                    dense_est_us: dense.kernel_s * 1e6,
                    sparse_est_us: sparse.kernel_s * 1e6,
                    dense_binding: dense.binding,
                    sparse_binding: sparse.binding,
                    sparse_est_tflops: throughput_tflops(*m as u64, *k as u64, n as u64, sparse.kernel_s)?,
                    est_speedup: dense.kernel_s / sparse.kernel_s,
                });
            }
        }
    }

    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
        for row in &rows {
            w.serialize(row).map_err(|e| CliError::io(path, e))?;
        }
        return w.flush().map_err(|e| CliError::io(path, e));
    }
    if a.json {
        return print_json(&rows);
    }
    let mut out = std::io::stdout().lock();
    let line = |out: &mut std::io::StdoutLock, s: String| writeln!(out, "{s}").map_err(|e| CliError::Io(e.to_string()));
    line(
        &mut out,
        format!(
            "{:<20} {:>6} {:>6} {:>3} {:>5} {:>8} {:>8} {:>10} {:>10} {:>6} {:>6} {:>7}",
            "shape", "M", "K", "N", "beta", "util_d%", "util_s%", "dense_us", "sparse_us", "d_bind", "s_bind", "speedup"
        ),
    )?;
    for r in &rows {
        line(
            &mut out,
            format!(
                "{:<20} {:>6} {:>6} {:>3} {:>5.2} {:>8.2} {:>8.2} {:>10.2} {:>10.2} {:>6} {:>6} {:>7.3}",
                r.name,
                r.m,
                r.k,
                r.n,
                r.beta,
                100.0 * r.util_dense,
                100.0 * r.util_sparse,
                r.dense_est_us,
                r.sparse_est_us,
                resource_name(r.dense_binding),
                resource_name(r.sparse_binding),
                r.est_speedup
            ),
        )?;
    }
    Ok(())
}

fn resource_name(r: Resource) -> &'static str {
    match r {
        Resource::Gmem => "gmem",
        Resource::Smem => "smem",
        Resource::Tc => "tc",
        Resource::None => "none",
    }
}

#[derive(Serialize)]
struct PipelineReport<'a> {
    timeline: &'a tiledcsl::EventTimeline,
    estimate: &'a tiledcsl::pipeline::TimeEstimate,
    violations: Vec<String>,
}

pub fn pipeline(a: &PipelineArgs) -> CliResult {
    let (m, k, n) = parse_shape(&a.shape)?;
    if !(0.0..1.0).contains(&a.sparsity) {
        return Err(CliError::Usage(format!("--sparsity {} outside [0, 1)", a.sparsity)));
    }
    let hw = parse_hw(&a.hw)?;
    let cfg = TileConfig::for_n(n);
    let timeline = build_schedule(m, k, n, a.sparsity, &cfg);
    let estimate = estimate_time(&timeline, &hw);
    let violations: Vec<String> = validate_schedule(&timeline).iter().map(|v| v.to_string()).collect();
    if a.json {
        print_json(&PipelineReport { timeline: &timeline, estimate: &estimate, violations: violations.clone() })?;
    } else {
        println!("shape       {m}x{k}x{n}, beta {}", a.sparsity);
        println!("iterations  {}", timeline.iterations);
        println!("events      {}", timeline.events.len());
        println!("edges       {}", timeline.edges.len());
        println!("gmem        {:.3} us", estimate.gmem_s * 1e6);
        println!("smem        {:.3} us", estimate.smem_s * 1e6);
        println!("tc          {:.3} us", estimate.tc_s * 1e6);
        println!("kernel      {:.3} us ({}-bound)", estimate.kernel_s * 1e6, resource_name(estimate.binding));
        println!("valid       {}", violations.is_empty());
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(violations.join("; ")))
    }
}

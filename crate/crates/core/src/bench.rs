//! Code-length measurements over a parameter grid.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::lower_bound;
use crate::builder::{build, BuildMode, BuildOptions, Mode};
use crate::decoder::decode_with_stats;
use crate::error::{Error, Result};
use crate::model::{feedback_vector, HiddenMultiset, Params};

pub const CSV_COLUMNS: [&str; 10] = [
    "n",
    "k",
    "alpha",
    "mode",
    "m",
    "occurrence_max",
    "lb_total",
    "ratio",
    "build_ms",
    "decode_ops",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridPoint {
    pub n: usize,
    pub k: usize,
    pub alpha: u64,
    pub mode: BuildMode,
}

/// One point per line: `n k alpha [mode]`. The alpha column also accepts
/// `k` and `sqrtk` (floor of the square root). Blank lines and `#`
/// comments are skipped.
pub fn parse_grid(text: &str) -> Result<Vec<GridPoint>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let no = i + 1;
        let t: Vec<&str> = line.split_ascii_whitespace().collect();
        if !(3..=4).contains(&t.len()) {
            return Err(Error::parse(no, "expected `n k alpha [mode]`"));
        }
        let int = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(no, format!("bad {what} `{s}`")))
        };
        let n = int(t[0], "n")?;
        let k = int(t[1], "k")?;
        let alpha = match t[2] {
            "k" => k as u64,
            "sqrtk" => k.isqrt().max(1) as u64,
            s => int(s, "alpha")? as u64,
        };
        let mode = match t.get(3) {
            Some(m) => m.parse().map_err(|e: Error| Error::parse(no, e.to_string()))?,
            None => BuildMode::Auto,
        };
        out.push(GridPoint { n, k, alpha, mode });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub k: usize,
    pub alpha: u64,
    pub mode: Mode,
    pub m: usize,
    pub occurrence_max: usize,
    pub lb_total: f64,
    pub ratio: f64,
    pub build_ms: f64,
    pub decode_ops: usize,
}

/// Builds the code, then decodes one seeded random `k`-set to count
/// decoder operations.
pub fn bench_point(p: &GridPoint) -> Result<BenchRow> {
    let params = Params::new(p.n, p.k, p.alpha)?;
    let start = Instant::now();
    let code = build(params, &BuildOptions::with_mode(p.mode))?;
    let build_ms = start.elapsed().as_secs_f64() * 1e3;

    let seed = (p.n as u64) << 32 ^ (p.k as u64) << 16 ^ p.alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = HiddenMultiset::from_set(sample(&mut rng, p.n, p.k).iter().map(|i| i + 1));
    let fv = feedback_vector(code.queries(), &hidden, code.alpha());
    let (decoded, stats) = decode_with_stats(&code, &fv)?;
    if decoded != hidden {
        return Err(Error::InconsistentFeedback(format!(
            "bench decode mismatch at n = {}, k = {}, alpha = {}",
            p.n, p.k, p.alpha
        )));
    }

    let bound = lower_bound(p.n, p.k, p.alpha)?.with_measured(code.len());
    Ok(BenchRow {
        n: p.n,
        k: p.k,
        alpha: p.alpha,
        mode: code.mode(),
        m: code.len(),
        occurrence_max: code.occurrence_max(),
        lb_total: bound.lb_total,
        ratio: bound.ratio.unwrap_or(f64::NAN),
        build_ms,
        decode_ops: stats.ops(),
    })
}

pub fn run_grid(points: &[GridPoint]) -> Result<Vec<BenchRow>> {
    points.iter().map(bench_point).collect()
}

/// CSV with a header row. Without `timing` the `build_ms` column reads
/// `NA`, which makes the output reproducible byte for byte.
pub fn to_csv(rows: &[BenchRow], timing: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in rows {
        let build_ms = if timing {
            format!("{:.3}", r.build_ms)
        } else {
            "NA".to_string()
        };
        w.write_record([
            r.n.to_string(),
            r.k.to_string(),
            r.alpha.to_string(),
            r.mode.to_string(),
            r.m.to_string(),
            r.occurrence_max.to_string(),
            format!("{:.3}", r.lb_total),
            format!("{:.3}", r.ratio),
            build_ms,
            r.decode_ops.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

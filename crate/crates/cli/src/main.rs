use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};

use qgt_core::bench::{parse_grid, run_grid, to_csv};
use qgt_core::bounds::{counting_check, find_collision, find_unjammed_violation};
use qgt_core::builder::{build, BuildMode, BuildOptions, GroupTestingCode, Mode};
use qgt_core::codefile;
use qgt_core::decoder::decode;
use qgt_core::disperser::{build_disperser, verify_dispersion, BipartiteGraph, CheckMode, DisperserParams};
use qgt_core::error::Error;
use qgt_core::exhaustive::DEFAULT_BUDGET;
use qgt_core::model::{feedback_vector, FeedbackVector, HiddenMultiset, Params};
use qgt_core::random_code::{build_random_code, draw_random_code, retry_claims, ClaimMode};
use qgt_core::sketch::{parse_edge_ops, parse_ops, GraphSketch, StreamSketch};
use qgt_core::strong_selector::verify_ssui;
use qgt_core::sui::verify_sui;

#[derive(Parser)]
#[command(name = "qgt", version, about = "Non-adaptive quantitative group testing with capped feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code and write it in the text code format.
    Build(BuildArgs),
    /// Print the feedback vector of a hidden multiset.
    Encode {
        #[arg(long)]
        code: PathBuf,
        /// `v[:mult],v[:mult],...`
        #[arg(long, allow_hyphen_values = true)]
        set: String,
    },
    /// Recover the hidden multiset from a feedback vector file.
    Decode {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        fv: PathBuf,
    },
    /// Run exhaustive checks on a code; exits 1 when one fails.
    Verify(VerifyArgs),
    /// Build a random capped code; the claim report goes to stderr.
    Random(RandomArgs),
    /// Measure code lengths over a grid of `n k alpha [mode]` lines.
    Bench {
        #[arg(long)]
        grid: PathBuf,
        /// Write `NA` in the build_ms column.
        #[arg(long)]
        no_timing: bool,
    },
    /// Apply `I v` / `D v` ops to a sketch built from a multiset code.
    Stream {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        ops: PathBuf,
        /// Print the stored multiset instead of the feedback vector.
        #[arg(long)]
        reconstruct: bool,
    },
    /// Apply `I u v` / `D u v` edge ops to a graph sketch.
    Graph {
        #[arg(long)]
        nodes: usize,
        /// Maximum degree.
        #[arg(long)]
        k: usize,
        #[arg(long)]
        ops: PathBuf,
        /// Print the edge list instead of the feedback vector.
        #[arg(long)]
        reconstruct: bool,
    },
    /// Build a seeded random disperser and print its adjacency dump.
    Disperser(DisperserArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    alpha: u64,
    #[arg(long, default_value = "plain", value_parser = parse_build_mode)]
    mode: BuildMode,
    /// Disperser seed for composed selector levels.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep building levels after one degenerates to Round-Robin.
    #[arg(long)]
    no_rr_shortcut: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("check").required(true).multiple(true)
    .args(["uniqueness", "claim_a", "sui", "ssui", "dispersion"])))]
struct VerifyArgs {
    #[arg(long)]
    code: Option<PathBuf>,
    /// Distinct feedback for all sets of size at most k.
    #[arg(long)]
    uniqueness: bool,
    /// No element of a k-set is jammed in all its queries.
    #[arg(long)]
    claim_a: bool,
    /// Selector under interference with the given ell, epsilon, kappa.
    #[arg(long)]
    sui: bool,
    /// Strong selector under interference (epsilon = 0).
    #[arg(long)]
    ssui: bool,
    /// Dispersion of `--graph`, or of the code's element/query incidence.
    #[arg(long)]
    dispersion: bool,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    /// Selection bound; defaults to k.
    #[arg(long)]
    ell: Option<usize>,
    /// Interference bound; defaults to k.
    #[arg(long)]
    kappa: Option<usize>,
    /// Cap for the selector checks; defaults to the code's alpha.
    #[arg(long)]
    alpha: Option<u64>,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    /// Left set size for the dispersion check; defaults to ell.
    #[arg(long)]
    ell_star: Option<usize>,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    alpha: u64,
    #[arg(long)]
    seed: u64,
    /// `exhaustive` or `sampled:T`; retries successive seeds until the
    /// claims hold.
    #[arg(long, value_parser = parse_claim_mode)]
    verify: Option<ClaimMode>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    #[arg(long, default_value_t = 32)]
    max_attempts: u32,
    /// Draw random queries even where Round-Robin would be shorter.
    #[arg(long)]
    no_fallback: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DisperserArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    ell_star: usize,
    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    delta: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_build_mode(s: &str) -> std::result::Result<BuildMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// `exhaustive` uses the default budget; `--budget` replaces it later.
fn parse_claim_mode(s: &str) -> std::result::Result<ClaimMode, String> {
    if s == "exhaustive" {
        return Ok(ClaimMode::Exhaustive { budget: DEFAULT_BUDGET });
    }
    let trials = s
        .strip_prefix("sampled:")
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| format!("expected `exhaustive` or `sampled:T`, got `{s}`"))?;
    Ok(ClaimMode::Sampled { trials, seed: 0 })
}

/// A check ran and the property does not hold.
#[derive(Debug)]
struct Failed(String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<Failed>()) {
        return 1;
    }
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(
            Error::InconsistentFeedback(_)
            | Error::CapacityExceeded(_)
            | Error::AbsentElement(_)
            | Error::DispersionFailed { .. }
            | Error::ClaimsFailed { .. }
            | Error::IdenticalSets,
        ) => 1,
        _ => 2,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_code(path: &Path) -> Result<GroupTestingCode> {
    codefile::parse(&read(path)?).with_context(|| format!("in code file {}", path.display()))
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn format_set(set: &[usize]) -> String {
    let items: Vec<String> = set.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(","))
}

fn cmd_build(a: BuildArgs) -> Result<()> {
    let mut options = BuildOptions::with_mode(a.mode);
    options.sui.seed = a.seed;
    options.round_robin_shortcut = !a.no_rr_shortcut;
    let code = build(Params::new(a.n, a.k, a.alpha)?, &options)?;
    emit(&codefile::serialize(&code), a.output.as_deref())
}

fn cmd_encode(code: &Path, set: &str) -> Result<()> {
    let code = read_code(code)?;
    let hidden: HiddenMultiset = set.parse().context("in --set")?;
    hidden.check_range(code.n())?;
    let fv = feedback_vector(code.queries(), &hidden, code.alpha());
    println!("{fv}");
    Ok(())
}

fn cmd_decode(code: &Path, fv: &Path) -> Result<()> {
    let code = read_code(code)?;
    let fv: FeedbackVector = read(fv)?
        .parse()
        .with_context(|| format!("in feedback file {}", fv.display()))?;
    // at decode time a cap that is too small means the input cannot be
    // recovered, not that the invocation was wrong
    let hidden = decode(&code, &fv).map_err(|e| match e {
        Error::CapTooSmall(_) => anyhow::Error::new(Failed(e.to_string())),
        e => e.into(),
    })?;
    print!("{}", hidden.to_lines());
    Ok(())
}

fn code_graph(code: &GroupTestingCode) -> Result<BipartiteGraph> {
    let index = code.occurrence_index();
    let adjacency = (1..=code.n())
        .map(|v| index.queries_of(v).iter().map(|&q| q + 1).collect())
        .collect();
    Ok(BipartiteGraph::new(code.len(), adjacency)?)
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let code = a.code.as_deref().map(read_code).transpose()?;
    let need_code = || {
        code.as_ref()
            .ok_or_else(|| anyhow!("--code is required for this check"))
    };
    let mut failures = Vec::new();

    if a.uniqueness {
        let c = need_code()?;
        match find_collision(c.queries(), c.n(), c.k(), c.alpha(), a.budget)? {
            None => println!("uniqueness: pass"),
            Some((x, y)) => {
                let msg = format!(
                    "uniqueness violated: {} and {} have equal feedback",
                    format_set(&x),
                    format_set(&y)
                );
                println!("{msg}");
                failures.push(msg);
            }
        }
        let counting = counting_check(c.len(), c.n(), c.k(), c.alpha());
        println!("counting: {}", if counting { "pass" } else { "FAIL" });
        if !counting {
            failures.push("counting bound violated: (alpha + 1)^m is below the number of sets".into());
        }
    }
    if a.claim_a {
        let c = need_code()?;
        match find_unjammed_violation(c.queries(), c.n(), c.k(), c.alpha(), a.budget)? {
            None => println!("claim-a: pass"),
            Some((set, x)) => {
                let msg = format!(
                    "claim-a violated: element {x} is jammed in every query by {}",
                    format_set(&set)
                );
                println!("{msg}");
                failures.push(msg);
            }
        }
    }
    if a.sui || a.ssui {
        let c = need_code()?;
        let ell = a.ell.unwrap_or(c.k());
        let kappa = a.kappa.unwrap_or(c.k());
        let alpha = a.alpha.unwrap_or(c.alpha());
        if a.sui {
            let r = verify_sui(c.queries(), c.n(), ell, a.epsilon, kappa, alpha, a.budget)?;
            println!(
                "sui: max unselected {} (threshold {}), {} sets checked",
                r.max_unselected, r.threshold, r.checked_sets
            );
            if !r.pass() {
                let msg = match &r.witness {
                    Some(w) => format!("sui violated: too many unselected elements in K1 = {}", format_set(w)),
                    None => "sui violated".to_string(),
                };
                println!("{msg}");
                failures.push(msg);
            }
        }
        if a.ssui {
            let ok = verify_ssui(c.queries(), c.n(), ell, kappa, alpha, a.budget)?;
            println!("ssui: {}", if ok { "pass" } else { "FAIL" });
            if !ok {
                failures.push("ssui violated: some element of some K1 is never selected".into());
            }
        }
    }
    if a.dispersion {
        let g = match (&a.graph, &code) {
            (Some(p), _) => BipartiteGraph::from_dump(&read(p)?, None)
                .with_context(|| format!("in graph file {}", p.display()))?,
            (None, Some(c)) => code_graph(c)?,
            (None, None) => bail!("--dispersion needs --graph or --code"),
        };
        let ell_star = a
            .ell_star
            .or(a.ell)
            .or(code.as_ref().map(GroupTestingCode::k))
            .ok_or_else(|| anyhow!("--dispersion on a graph needs --ell-star"))?;
        let ok = verify_dispersion(&g, ell_star, a.epsilon, CheckMode::Exhaustive { budget: a.budget })?;
        println!("dispersion: {}", if ok { "pass" } else { "FAIL" });
        if !ok {
            failures.push(format!(
                "dispersion violated: some {ell_star}-set sees fewer than {} of {} right nodes",
                (1.0 - a.epsilon) * g.right() as f64,
                g.right()
            ));
        }
    }

    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failed(failures.join("; ")).into())
    }
}

fn cmd_random(a: RandomArgs) -> Result<()> {
    let params = Params::new(a.n, a.k, a.alpha)?;
    let make = |seed| {
        if a.no_fallback {
            draw_random_code(a.n, a.k, a.alpha, seed)
        } else {
            build_random_code(a.n, a.k, a.alpha, seed)
        }
    };
    let code = match a.verify {
        None => make(a.seed)?,
        Some(mode) => {
            let mode = match mode {
                ClaimMode::Exhaustive { .. } => ClaimMode::Exhaustive { budget: a.budget },
                ClaimMode::Sampled { trials, .. } => ClaimMode::Sampled { trials, seed: a.seed },
            };
            let v = retry_claims(a.seed, mode, a.max_attempts, make)?;
            eprint!("{}", v.report);
            eprintln!("attempts: {} (seed {})", v.attempts, v.code.params.seed);
            v.code
        }
    };
    let code = GroupTestingCode::new(params, Mode::Random, code.queries, Vec::new())?;
    emit(&codefile::serialize(&code), a.output.as_deref())
}

fn cmd_bench(grid: &Path, no_timing: bool) -> Result<()> {
    let points = parse_grid(&read(grid)?).with_context(|| format!("in grid file {}", grid.display()))?;
    let rows = run_grid(&points)?;
    print!("{}", to_csv(&rows, !no_timing));
    Ok(())
}

fn cmd_stream(code: &Path, ops: &Path, reconstruct: bool) -> Result<()> {
    let mut sketch = StreamSketch::new(read_code(code)?)?;
    let ops = parse_ops(&read(ops)?).with_context(|| format!("in ops file {}", ops.display()))?;
    let mut max_cost = 0;
    for (i, &op) in ops.iter().enumerate() {
        let cost = sketch.apply(op).with_context(|| format!("op {}", i + 1))?;
        max_cost = max_cost.max(cost);
    }
    eprintln!(
        "ops {}, max counters touched {max_cost}, occurrence bound {}",
        ops.len(),
        sketch.occurrence_bound()
    );
    if reconstruct {
        print!("{}", sketch.reconstruct()?.to_lines());
    } else {
        println!("{}", sketch.feedback());
    }
    Ok(())
}

fn cmd_graph(nodes: usize, k: usize, ops: &Path, reconstruct: bool) -> Result<()> {
    let mut sketch = GraphSketch::new(nodes, k)?;
    let ops = parse_edge_ops(&read(ops)?).with_context(|| format!("in ops file {}", ops.display()))?;
    for (i, &op) in ops.iter().enumerate() {
        sketch.apply(op).with_context(|| format!("op {}", i + 1))?;
    }
    if reconstruct {
        for (u, v) in sketch.reconstruct()? {
            println!("{u} {v}");
        }
    } else {
        println!("{}", sketch.sketch().feedback());
    }
    Ok(())
}

fn cmd_disperser(a: DisperserArgs) -> Result<()> {
    let mut params = DisperserParams::new(a.ell_star, a.epsilon, a.seed)?;
    params.degree = a.degree;
    params.delta = a.delta;
    let g = build_disperser(a.n, &params)?;
    eprintln!("left {}, right {}, degree {}", g.left(), g.right(), g.degree());
    emit(&g.to_dump(), a.output.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Encode { code, set } => cmd_encode(&code, &set),
        Command::Decode { code, fv } => cmd_decode(&code, &fv),
        Command::Verify(a) => cmd_verify(a),
        Command::Random(a) => cmd_random(a),
        Command::Bench { grid, no_timing } => cmd_bench(&grid, no_timing),
        Command::Stream { code, ops, reconstruct } => cmd_stream(&code, &ops, reconstruct),
        Command::Graph { nodes, k, ops, reconstruct } => cmd_graph(nodes, k, &ops, reconstruct),
        Command::Disperser(a) => cmd_disperser(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

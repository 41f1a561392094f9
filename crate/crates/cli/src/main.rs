use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use pigeonring::analysis::{self, AnalysisParams, DiscretePdf, Exact, Probability};
use pigeonring::registry::{parse_thresholds, EngineConfig, EngineRegistry, PreparedSearch, StrategyRegistry};
use pigeonring::ring::verify_theorems_exhaustive;
use pigeonring::setsim::parse_jaccard;
use pigeonring::stats::{QueryOutput, QueryStats};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_VIOLATION: u8 = 1;

/// Threshold similarity search with chain filtering.
#[derive(Parser)]
#[command(name = "pigeonring", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hamming distance search over binary vectors.
    Hamming(SearchArgs),
    /// Jaccard or overlap search over token sets.
    Set(SearchArgs),
    /// Edit distance search over strings.
    String(SearchArgs),
    /// Candidate and result probabilities for i.i.d. boxes.
    Analyze(AnalyzeArgs),
    /// Runs every chain length on one engine and tabulates totals.
    Sweep(SweepArgs),
    /// Exhaustive check of the chain existence theorems.
    VerifyTheorems(VerifyArgs),
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Hamming or edit distance threshold, or overlap threshold for sets.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<i64>,
    /// Jaccard threshold for sets, decimal or a/b.
    #[arg(long)]
    jaccard: Option<String>,
    /// Number of boxes m.
    #[arg(long)]
    parts: Option<usize>,
    /// Chain length l. Defaults to the engine's recommendation.
    #[arg(long)]
    chain: Option<usize>,
    /// fixed, variable or intred.
    #[arg(long)]
    mode: Option<String>,
    /// Per-box thresholds t0,t1,... for variable or intred.
    #[arg(long, allow_hyphen_values = true)]
    thresholds: Option<String>,
    /// Seed of the dimension permutation (Hamming).
    #[arg(long)]
    seed: Option<u64>,
    /// Gram length (strings).
    #[arg(long)]
    kappa: Option<usize>,
    /// Results file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-query stats file, one JSON object per line.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write zero for all timings so stats files are reproducible.
    #[arg(long)]
    no_timings: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// hamming, set or string.
    engine: String,
    #[command(flatten)]
    search: SearchArgs,
    /// Chain lengths to run; 1..=m when absent.
    #[arg(long, value_delimiter = ',')]
    chains: Option<Vec<usize>>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// uniform:W, binomial:W, point:V or a comma-separated mass list.
    #[arg(long)]
    pdf: String,
    #[arg(long)]
    m: usize,
    /// One or more thresholds, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    tau: Vec<i64>,
    /// Largest chain length reported; m when absent.
    #[arg(long)]
    l_max: Option<usize>,
    /// Use exact rational arithmetic.
    #[arg(long)]
    exact: bool,
    /// Monte Carlo samples per row; 0 disables sampling.
    #[arg(long, default_value_t = 0)]
    mc: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    partitions: usize,
    /// TSV table; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON record of the whole run.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    m: usize,
    /// Bound on the box total.
    #[arg(long, allow_hyphen_values = true)]
    n: i64,
    /// Largest box value.
    #[arg(long)]
    omega: i64,
    #[arg(long)]
    json: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Data(String),
}

impl From<pigeonring::Error> for Failure {
    fn from(e: pigeonring::Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path, what: &str) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::Config(format!("cannot read {what} {}: {e}", path.display())))
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => fs::File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Config(format!("cannot create {}: {e}", p.display()))),
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_err(e: io::Error) -> Failure {
    Failure::Config(format!("write failed: {e}"))
}

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("PIGEONRING_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Config(format!("PIGEONRING_THREADS must be a positive integer, got {v:?}")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Failure::Config(e.to_string()))
}

fn engine_config(a: &SearchArgs) -> CliResult<EngineConfig> {
    Ok(EngineConfig {
        tau: a.tau,
        jaccard: a.jaccard.as_deref().map(parse_jaccard).transpose()?,
        parts: a.parts,
        mode: a.mode.clone(),
        thresholds: a.thresholds.as_deref().map(parse_thresholds).transpose()?,
        seed: a.seed,
        kappa: a.kappa,
    })
}

fn prepare(engine: &str, a: &SearchArgs) -> CliResult<Box<dyn PreparedSearch>> {
    let cfg = engine_config(a)?;
    let data = read(&a.data, "data file")?;
    let queries = read(&a.queries, "query file")?;
    let engines = EngineRegistry::builtin();
    let strategies = StrategyRegistry::builtin();
    Ok(engines.get(engine)?.prepare(&data, &queries, &cfg, &strategies)?)
}

fn run_queries(p: &dyn PreparedSearch, chain: usize) -> CliResult<Vec<QueryOutput>> {
    let pool = thread_pool()?;
    let outs: Vec<_> = pool.install(|| (0..p.query_count()).into_par_iter().map(|qi| p.query(qi, chain)).collect());
    Ok(outs.into_iter().collect::<pigeonring::Result<Vec<_>>>()?)
}

#[derive(Serialize)]
struct StatsRecord<'a> {
    query: usize,
    chain: usize,
    #[serde(flatten)]
    stats: &'a QueryStats,
}

fn search(engine: &str, a: &SearchArgs) -> CliResult<()> {
    let p = prepare(engine, a)?;
    let chain = a.chain.unwrap_or_else(|| p.default_chain());
    let outs = run_queries(p.as_ref(), chain)?;

    let mut w = open_out(a.out.as_deref())?;
    for (qi, o) in outs.iter().enumerate() {
        let ids: Vec<String> = o.results.iter().map(u32::to_string).collect();
        writeln!(w, "{qi}\t{}", ids.join(" ")).map_err(write_err)?;
    }
    w.flush().map_err(write_err)?;

    if let Some(path) = &a.stats {
        let mut s = open_out(Some(path))?;
        for (qi, o) in outs.iter().enumerate() {
            let stats = if a.no_timings { o.stats.without_timings() } else { o.stats.clone() };
            let rec = StatsRecord {
                query: qi,
                chain,
                stats: &stats,
            };
            let line = serde_json::to_string(&rec).map_err(|e| Failure::Config(e.to_string()))?;
            writeln!(s, "{line}").map_err(write_err)?;
        }
        s.flush().map_err(write_err)?;
    }

    let cand: u64 = outs.iter().map(|o| o.stats.candidates).sum();
    let res: u64 = outs.iter().map(|o| o.stats.results).sum();
    eprintln!(
        "objects={} queries={} m={} chain={} build_ms={:.3} candidates={cand} results={res}",
        p.len(),
        p.query_count(),
        p.m(),
        chain,
        p.build_time().as_secs_f64() * 1e3
    );
    Ok(())
}

fn sweep(a: &SweepArgs) -> CliResult<()> {
    let p = prepare(&a.engine, &a.search)?;
    let chains = a.chains.clone().unwrap_or_else(|| (1..=p.m()).collect());
    let mut w = open_out(a.search.out.as_deref())?;
    writeln!(
        w,
        "chain\tcandidates\tpigeonhole_candidates\tresults\tviable_boxes\tbox_checks\tprobe_ms\tcheck_ms\tverify_ms"
    )
    .map_err(write_err)?;
    for &l in &chains {
        let outs = run_queries(p.as_ref(), l)?;
        let mut t = QueryStats::default();
        for o in &outs {
            let s = &o.stats;
            t.candidates += s.candidates;
            t.pigeonhole_candidates += s.pigeonhole_candidates;
            t.results += s.results;
            t.viable_boxes += s.viable_boxes;
            t.box_checks += s.box_checks;
            t.probe_ns += s.probe_ns;
            t.check_ns += s.check_ns;
            t.verify_ns += s.verify_ns;
        }
        if a.search.no_timings {
            t = t.without_timings();
        }
        let ms = |ns: u64| ns as f64 / 1e6;
        writeln!(
            w,
            "{l}\t{}\t{}\t{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}",
            t.candidates,
            t.pigeonhole_candidates,
            t.results,
            t.viable_boxes,
            t.box_checks,
            ms(t.probe_ns),
            ms(t.check_ns),
            ms(t.verify_ns)
        )
        .map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

#[derive(Serialize)]
struct AnalysisRow {
    tau: i64,
    l: usize,
    candidate: f64,
    result: f64,
    ratio: Option<f64>,
    false_positive_ratio: Option<f64>,
    mc_candidate: Option<f64>,
    mc_candidate_se: Option<f64>,
    mc_result: Option<f64>,
    mc_result_se: Option<f64>,
}

#[derive(Serialize)]
struct AnalysisRun<'a> {
    pdf: &'a str,
    m: usize,
    exact: bool,
    mc_samples: u64,
    seed: u64,
    rows: Vec<AnalysisRow>,
}

fn curve<T: Probability>(pdf: &DiscretePdf, m: usize, tau: i64, l_max: usize) -> CliResult<Vec<(f64, f64, Option<f64>, Option<f64>)>> {
    let cand = analysis::candidate_curve::<T>(pdf, m, tau)?;
    let res: T = analysis::result_prob(pdf, m, tau);
    Ok(cand[..l_max]
        .iter()
        .map(|c| {
            let (ratio, fp) = if res.is_zero() {
                (None, None)
            } else {
                (Some(c.div(&res).to_f64()), Some((c.clone() - res.clone()).div(&res).to_f64()))
            };
            (c.to_f64(), res.to_f64(), ratio, fp)
        })
        .collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn analyze(a: &AnalyzeArgs) -> CliResult<()> {
    let pdf: DiscretePdf = a.pdf.parse()?;
    let l_max = a.l_max.unwrap_or(a.m);
    AnalysisParams::new(a.m, 0, l_max)?;
    let mut rows = Vec::new();
    for &tau in &a.tau {
        let vals = if a.exact {
            curve::<Exact>(&pdf, a.m, tau, l_max)?
        } else {
            curve::<f64>(&pdf, a.m, tau, l_max)?
        };
        for (i, (c, r, ratio, fp)) in vals.into_iter().enumerate() {
            let l = i + 1;
            let mc = if a.mc > 0 {
                let params = AnalysisParams::new(a.m, tau, l)?;
                Some(analysis::monte_carlo(&pdf, &params, a.mc, a.seed, a.partitions)?)
            } else {
                None
            };
            rows.push(AnalysisRow {
                tau,
                l,
                candidate: c,
                result: r,
                ratio,
                false_positive_ratio: fp,
                mc_candidate: mc.as_ref().map(|e| e.candidate),
                mc_candidate_se: mc.as_ref().map(|e| e.candidate_se),
                mc_result: mc.as_ref().map(|e| e.result),
                mc_result_se: mc.as_ref().map(|e| e.result_se),
            });
        }
    }

    let mut w = open_out(a.out.as_deref())?;
    let mut header = "tau\tl\tpr_cand\tpr_res\tratio\tfp_ratio".to_string();
    if a.mc > 0 {
        header.push_str("\tmc_cand\tmc_cand_se\tmc_res\tmc_res_se");
    }
    writeln!(w, "{header}").map_err(write_err)?;
    for r in &rows {
        write!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.tau,
            r.l,
            r.candidate,
            r.result,
            fmt_opt(r.ratio),
            fmt_opt(r.false_positive_ratio)
        )
        .map_err(write_err)?;
        if a.mc > 0 {
            write!(
                w,
                "\t{}\t{}\t{}\t{}",
                fmt_opt(r.mc_candidate),
                fmt_opt(r.mc_candidate_se),
                fmt_opt(r.mc_result),
                fmt_opt(r.mc_result_se)
            )
            .map_err(write_err)?;
        }
        writeln!(w).map_err(write_err)?;
    }
    w.flush().map_err(write_err)?;

    if let Some(path) = &a.json {
        let run = AnalysisRun {
            pdf: &a.pdf,
            m: a.m,
            exact: a.exact,
            mc_samples: a.mc,
            seed: a.seed,
            rows,
        };
        let text = serde_json::to_string(&run).map_err(|e| Failure::Config(e.to_string()))?;
        fs::write(path, text + "\n").map_err(write_err)?;
    }
    Ok(())
}

fn verify(a: &VerifyArgs) -> CliResult<bool> {
    let report = verify_theorems_exhaustive(a.m, a.n, a.omega)?;
    println!(
        "m={} n={} omega={} sequences={} within_bound={} over_bound={} chain_checks={}",
        report.m, report.n, report.omega, report.sequences, report.within_bound, report.over_bound, report.chain_checks
    );
    for v in report.violations.iter().take(20) {
        println!("violation\t{:?}\tlength={}\tboxes={:?}", v.kind, v.length, v.boxes);
    }
    println!("{} violations", report.violations.len());
    if let Some(path) = &a.json {
        let text = serde_json::to_string(&report).map_err(|e| Failure::Config(e.to_string()))?;
        fs::write(path, text + "\n").map_err(write_err)?;
    }
    Ok(report.holds())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Hamming(a) => search("hamming", a).map(|_| true),
        Command::Set(a) => search("set", a).map(|_| true),
        Command::String(a) => search("string", a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::Analyze(a) => analyze(a).map(|_| true),
        Command::VerifyTheorems(a) => verify(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATION),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("data error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

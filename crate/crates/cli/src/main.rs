use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use smoothrun::arith::{is_squarefree, sieve_primes, PrimeTable};
use smoothrun::contfrac::CfRegulator;
use smoothrun::pell::{smooth_solutions, CertStatus};
use smoothrun::search::{
    assemble_f, brute_force_windows, brute_witnesses, derive_params, known_f, read_store, run_campaign,
    small_campaigns, Campaign, CampaignOptions, Checkpoint, FValue, SmoothWindowRecord, DEFAULT_CHECKPOINT_EVERY,
    DESK_CAMPAIGNS,
};

const TABLE_LIMIT: u64 = 10_000;

#[derive(Parser)]
#[command(name = "smoothrun", version, about = "Runs of consecutive smooth integers via Pell equations")]
struct Cli {
    /// Directory for campaign stores and checkpoints.
    #[arg(long, global = true, env = "SMOOTHRUN_STORE_DIR", default_value = ".")]
    store_dir: PathBuf,

    /// Worker threads (0: all available cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Smooth solutions of x^2 - d*y^2 = 1 with y (and optionally x) p_t-smooth.
    Solve {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        require_x_smooth: bool,
    },
    /// Number of Pell equations of the windowed search for (m, t).
    Count {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        t: usize,
    },
    /// Runs or resumes the windowed search for (m, t).
    Campaign {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = DEFAULT_CHECKPOINT_EVERY)]
        checkpoint_every: u64,
        /// Record store (default: <store-dir>/campaign-m<M>-t<T>.records).
        #[arg(long)]
        store: Option<PathBuf>,
        /// Checkpoint file (default: <store-dir>/campaign-m<M>-t<T>.checkpoint).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Stop after this many equations in this run.
        #[arg(long)]
        stop_after: Option<u128>,
    },
    /// Exhaustive scan for windows of `len` k-smooth integers starting in (k, max_n].
    Brute {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        len: u32,
        #[arg(long)]
        max_n: u64,
        /// Also write the records to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// f(k) for a single k or a range, from campaigns and witnesses.
    F {
        #[arg(long, conflicts_with_all = ["from", "to"])]
        k: Option<u64>,
        #[arg(long, requires = "to")]
        from: Option<u64>,
        #[arg(long, requires = "from")]
        to: Option<u64>,
        /// Stored campaign to use as evidence, as `m,t`; repeatable.
        #[arg(long, value_parser = parse_pair)]
        campaign: Vec<(u32, usize)>,
        /// Record file of witness windows; repeatable.
        #[arg(long)]
        witness: Vec<PathBuf>,
        /// Sieve bound for brute-force witnesses.
        #[arg(long, default_value_t = 1_000_000)]
        brute_max_n: u64,
    },
    /// Recomputes f(k) for small k and compares with the known values.
    VerifyTable {
        #[arg(long, default_value_t = 40)]
        k_max: u64,
        #[arg(long, default_value_t = 10_000_000)]
        max_n: u64,
    },
}

fn parse_pair(s: &str) -> Result<(u32, usize), String> {
    let (m, t) = s.split_once(',').ok_or("expected m,t")?;
    Ok((m.trim().parse().map_err(|_| "bad m")?, t.trim().parse().map_err(|_| "bad t")?))
}

/// Success with and without findings.
enum Outcome {
    Found,
    Nothing,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Found) => ExitCode::SUCCESS,
        Ok(Outcome::Nothing) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn table() -> Result<PrimeTable> {
    Ok(sieve_primes(TABLE_LIMIT)?)
}

fn campaign_paths(dir: &Path, m: u32, t: usize) -> (PathBuf, PathBuf) {
    let stem = format!("campaign-m{m}-t{t}");
    (dir.join(format!("{stem}.records")), dir.join(format!("{stem}.checkpoint")))
}

fn run(cli: &Cli) -> Result<Outcome> {
    let provider = CfRegulator::default();
    match &cli.cmd {
        Cmd::Solve { d, t, require_x_smooth } => {
            let d = *d;
            if d < 2 || !is_squarefree(d) {
                bail!("d = {d} must be a squarefree integer greater than 1");
            }
            let tb = table()?;
            let report = smooth_solutions(d, *t, *require_x_smooth, &provider, &tb)?;
            for s in &report.solutions {
                let xf = s.x_factorization.as_ref().map_or("-".to_string(), |f| f.to_string());
                println!("SOLUTION {} {} {} y={} x={}", s.index, s.x, s.y, s.y_factorization, xf);
            }
            let status = match report.certification.status {
                CertStatus::Unconditional => "Unconditional",
                CertStatus::RecomputedFromSmaller => "RecomputedFromSmaller",
            };
            println!(
                "CERTIFICATION {status} z={} scanned={}",
                report.certification.z_used, report.certification.convergents_scanned
            );
            Ok(if report.solutions.is_empty() { Outcome::Nothing } else { Outcome::Found })
        }
        Cmd::Count { m, t } => {
            let p = derive_params(*m, *t, &table()?)?;
            eprintln!("m={} t={} t0={} pair_starts={:?} N={}", p.m, p.t, p.t0, p.pair_starts, p.n_upper);
            println!("{}", p.count);
            Ok(Outcome::Found)
        }
        Cmd::Campaign { m, t, checkpoint_every, store, checkpoint, stop_after } => {
            let tb = table()?;
            let params = derive_params(*m, *t, &tb)?;
            std::fs::create_dir_all(&cli.store_dir)
                .with_context(|| format!("creating {}", cli.store_dir.display()))?;
            let (default_store, default_cp) = campaign_paths(&cli.store_dir, *m, *t);
            let store = store.clone().unwrap_or(default_store);
            let checkpoint = checkpoint.clone().unwrap_or(default_cp);
            let stop = Arc::new(AtomicBool::new(false));
            let flag = stop.clone();
            ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)).context("installing signal handler")?;
            let opts = CampaignOptions {
                checkpoint_every: *checkpoint_every,
                stop_after: *stop_after,
                stop: Some(stop),
                abort_after: None,
            };
            if cli.verbose {
                eprintln!("campaign (m, t) = ({m}, {t}): {} equations, store {}", params.count, store.display());
            }
            let s = run_campaign(&params, &provider, &tb, &store, &checkpoint, &opts).with_context(|| {
                match Checkpoint::load(&checkpoint) {
                    Ok(Some(c)) => format!("campaign stopped; last valid position {}", c.position),
                    _ => "campaign stopped".to_string(),
                }
            })?;
            println!(
                "CAMPAIGN {} {} position={} total={} records={} new={} status={} seconds={:.3}",
                m,
                t,
                s.position,
                s.total,
                s.records,
                s.new_records,
                if s.complete { "complete" } else { "incomplete" },
                s.elapsed.as_secs_f64()
            );
            Ok(Outcome::Found)
        }
        Cmd::Brute { k, len, max_n, out } => {
            let recs = brute_force_windows(*k, *max_n, *len)?;
            for r in &recs {
                println!("{r}");
            }
            if let Some(path) = out {
                let text: String = recs.iter().map(|r| format!("{r}\n")).collect();
                std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(if recs.is_empty() { Outcome::Nothing } else { Outcome::Found })
        }
        Cmd::F { k, from, to, campaign, witness, brute_max_n } => {
            let (lo, hi) = match (k, from, to) {
                (Some(k), _, _) => (*k, *k),
                (None, Some(a), Some(b)) if a <= b => (*a, *b),
                _ => bail!("give --k or a range --from A --to B with A <= B"),
            };
            if lo == 0 {
                bail!("k must be positive");
            }
            let tb = table()?;
            let mut campaigns = small_campaigns(DESK_CAMPAIGNS, &provider, &tb)?;
            for &(m, t) in campaign {
                campaigns.push(load_campaign(&cli.store_dir, m, t, &tb)?);
            }
            let mut witnesses = brute_witnesses(*brute_max_n, hi)?;
            for path in witness {
                witnesses.extend(read_store(path)?);
            }
            for k in lo..=hi {
                println!("{k} {}", assemble_f(k, &campaigns, &witnesses)?);
            }
            Ok(Outcome::Found)
        }
        Cmd::VerifyTable { k_max, max_n } => {
            let tb = table()?;
            let campaigns = small_campaigns(DESK_CAMPAIGNS, &provider, &tb)?;
            let witnesses = brute_witnesses(*max_n, *k_max)?;
            let mut bad = 0;
            for k in 1..=*k_max {
                let got = assemble_f(k, &campaigns, &witnesses)?;
                let expected = known_f(k);
                let ok = matches!((got, expected), (FValue::Exact(a), Some(b)) if a == b);
                if !ok {
                    bad += 1;
                }
                let exp = expected.map_or("-".to_string(), |v| v.to_string());
                println!("{k} {got} {exp} {}", if ok { "OK" } else { "MISMATCH" });
            }
            if bad > 0 {
                bail!("{bad} of {k_max} values differ from the known values");
            }
            Ok(Outcome::Found)
        }
    }
}

fn load_campaign(dir: &Path, m: u32, t: usize, tb: &PrimeTable) -> Result<Campaign> {
    let params = derive_params(m, t, tb)?;
    let (store, cp) = campaign_paths(dir, m, t);
    let records: Vec<SmoothWindowRecord> =
        read_store(&store).with_context(|| format!("reading {}", store.display()))?;
    for r in &records {
        r.verify(tb)?;
    }
    let complete = matches!(Checkpoint::load(&cp)?, Some(c) if c.position == params.count);
    Ok(Campaign::new(m, t, tb, records, complete)?)
}

//! Append-only record stores and checkpoints.
//!
//! Both files hold one record per line. A torn final line, as left by a
//! killed process, is cut off when the file is reopened; any other malformed
//! line is corruption.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use super::drivers::{process_batch, Collector, BATCH};
use super::params::SearchParams;
use super::SmoothWindowRecord;
use crate::arith::PrimeTable;
use crate::contfrac::RegulatorProvider;
use crate::error::{Error, Result};

pub const DEFAULT_CHECKPOINT_EVERY: u64 = 10_000;

/// Splits file contents into complete lines, returning them with the byte
/// length they cover. A trailing fragment without a newline is dropped.
fn complete_lines(text: &str) -> (Vec<&str>, usize) {
    match text.rfind('\n') {
        None => (Vec::new(), 0),
        Some(end) => (text[..end].split('\n').collect(), end + 1),
    }
}

fn read_text(path: &Path) -> Result<String> {
    match std::fs::read(path) {
        Ok(bytes) => String::from_utf8(bytes)
            .map_err(|_| Error::Resume(format!("{} is not valid UTF-8", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(String::new()),
        Err(e) => Err(e.into()),
    }
}

fn truncate_to(path: &Path, len: usize, current: usize) -> Result<()> {
    if len < current {
        OpenOptions::new().write(true).open(path)?.set_len(len as u64)?;
    }
    Ok(())
}

/// Reads every record line of a store. The last line may be torn; it is
/// ignored here and cut off by [`RecordStore::open`].
pub fn read_store(path: &Path) -> Result<Vec<SmoothWindowRecord>> {
    let text = read_text(path)?;
    let (lines, _) = complete_lines(&text);
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.parse()
                .map_err(|e| Error::Resume(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub struct RecordStore {
    path: PathBuf,
    records: Vec<SmoothWindowRecord>,
    out: BufWriter<File>,
}

impl RecordStore {
    pub fn open(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let records = read_store(path)?;
        let (_, covered) = complete_lines(&text);
        if path.exists() {
            truncate_to(path, covered, text.len())?;
        }
        let out = BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?);
        Ok(RecordStore { path: path.to_path_buf(), records, out })
    }

    pub fn records(&self) -> &[SmoothWindowRecord] {
        &self.records
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, recs: &[SmoothWindowRecord]) -> Result<()> {
        for r in recs {
            writeln!(self.out, "{r}")?;
        }
        self.out.flush()?;
        self.out.get_ref().sync_data()?;
        self.records.extend_from_slice(recs);
        Ok(())
    }
}

/// `CURSOR m t position completed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checkpoint {
    pub m: u32,
    pub t: usize,
    pub position: u128,
    pub completed: u128,
}

impl Checkpoint {
    fn parse(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.split(' ').collect();
        let ["CURSOR", m, t, position, completed] = f.as_slice() else { return None };
        Some(Checkpoint {
            m: m.parse().ok()?,
            t: t.parse().ok()?,
            position: position.parse().ok()?,
            completed: completed.parse().ok()?,
        })
    }

    /// Last checkpoint in the file, if any.
    pub fn load(path: &Path) -> Result<Option<Self>> {
        let text = read_text(path)?;
        let (lines, covered) = complete_lines(&text);
        let mut last = None;
        for (i, l) in lines.iter().enumerate() {
            last = Some(Checkpoint::parse(l).ok_or_else(|| {
                Error::Resume(format!("{} line {}: malformed checkpoint {l:?}", path.display(), i + 1))
            })?);
        }
        if path.exists() {
            truncate_to(path, covered, text.len())?;
        }
        Ok(last)
    }

    fn append(&self, path: &Path) -> Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "CURSOR {} {} {} {}", self.m, self.t, self.position, self.completed)?;
        f.sync_data()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct CampaignOptions {
    pub checkpoint_every: u64,
    /// Stop (with a checkpoint) once this many equations ran in this call.
    pub stop_after: Option<u128>,
    /// Stop at the next batch boundary once set; a checkpoint is written.
    pub stop: Option<std::sync::Arc<AtomicBool>>,
    /// Test hook: stop after this many equations without the final
    /// checkpoint, leaving the files as a killed process would.
    pub abort_after: Option<u128>,
}

impl CampaignOptions {
    pub fn new() -> Self {
        CampaignOptions { checkpoint_every: DEFAULT_CHECKPOINT_EVERY, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignSummary {
    pub position: u128,
    pub total: u128,
    pub processed_now: u128,
    pub new_records: usize,
    pub records: usize,
    pub complete: bool,
    pub elapsed: Duration,
}

/// Runs (or resumes) the windowed search for `params`, appending verified
/// records to `store_path` and progress to `checkpoint_path`.
pub fn run_campaign(
    params: &SearchParams,
    provider: &dyn RegulatorProvider,
    table: &PrimeTable,
    store_path: &Path,
    checkpoint_path: &Path,
    opts: &CampaignOptions,
) -> Result<CampaignSummary> {
    let started = Instant::now();
    if opts.checkpoint_every == 0 {
        return Err(Error::Parameter("checkpoint interval must be positive".into()));
    }
    let start = match Checkpoint::load(checkpoint_path)? {
        Some(c) if (c.m, c.t) != (params.m, params.t) => {
            return Err(Error::Resume(format!(
                "checkpoint belongs to (m, t) = ({}, {}), not ({}, {})",
                c.m, c.t, params.m, params.t
            )))
        }
        Some(c) if c.completed != c.position => {
            return Err(Error::Resume(format!("checkpoint at {} claims {} completed", c.position, c.completed)))
        }
        Some(c) => c.position,
        None => 0,
    };
    let cursor = params.cursor_at(start)?;
    let mut store = RecordStore::open(store_path)?;
    let mut collector = Collector::new(table);
    for r in store.records() {
        if r.length != params.m {
            return Err(Error::Resume(format!("store record {r} has the wrong window length")));
        }
        r.verify(table)?;
        collector.mark_seen(r.key());
    }

    let mut iter = params.enumerate(Some(&cursor))?;
    let mut position = start;
    let mut last_checkpoint = start;
    let mut new_records = 0;
    let checkpoint = |position: u128| {
        Checkpoint { m: params.m, t: params.t, position, completed: position }.append(checkpoint_path)
    };
    let limit = |cap: Option<u128>| cap.map(|c| start + c).unwrap_or(u128::MAX);
    let (stop_at, abort_at) = (limit(opts.stop_after), limit(opts.abort_after));

    loop {
        let stop_requested = opts.stop.as_ref().is_some_and(|s| s.load(Ordering::SeqCst));
        if position >= params.count || position >= stop_at || stop_requested {
            break;
        }
        if position >= abort_at {
            return Ok(summary(params, start, position, new_records, store.records().len(), false, started));
        }
        let next_cp = last_checkpoint + u128::from(opts.checkpoint_every);
        let take = [BATCH as u128, next_cp - position, stop_at - position, abort_at - position]
            .into_iter()
            .min()
            .expect("non-empty");
        let ds: Vec<u128> = iter.by_ref().take(take as usize).map(|(d, _)| d).collect();
        let results = process_batch(&ds, params, provider, table);
        let mut failure = None;
        for (d, r) in ds.iter().zip(results) {
            match r.and_then(|recs| recs.into_iter().try_for_each(|rec| collector.insert(rec).map(|_| ()))) {
                Ok(()) => position += 1,
                Err(e) => {
                    failure = Some(Error::Integrity(format!("equation D = {d} at position {position} failed: {e}")));
                    break;
                }
            }
        }
        let fresh = collector.drain();
        new_records += fresh.len();
        store.append(&fresh)?;
        if let Some(e) = failure {
            checkpoint(position)?;
            return Err(e);
        }
        if position >= next_cp {
            checkpoint(position)?;
            last_checkpoint = position;
        }
    }
    if position != last_checkpoint || position == 0 {
        checkpoint(position)?;
    }
    Ok(summary(params, start, position, new_records, store.records().len(), position >= params.count, started))
}

fn summary(
    params: &SearchParams,
    start: u128,
    position: u128,
    new_records: usize,
    records: usize,
    complete: bool,
    started: Instant,
) -> CampaignSummary {
    CampaignSummary {
        position,
        total: params.count,
        processed_now: position - start,
        new_records,
        records,
        complete,
        elapsed: started.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::sieve_primes;
    use crate::contfrac::CfRegulator;
    use crate::search::{bb_search, derive_params, Source};

    fn sorted_store(path: &Path) -> String {
        let mut lines: Vec<String> = read_store(path).unwrap().iter().map(|r| r.to_string()).collect();
        lines.sort();
        lines.join("\n")
    }

    #[test]
    fn torn_lines_are_cut() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s");
        std::fs::write(&p, "WINDOW 2 4 5 brute_force 0 0\nWINDOW 3 4").unwrap();
        let store = RecordStore::open(&p).unwrap();
        assert_eq!(store.records().len(), 1);
        drop(store);
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "WINDOW 2 4 5 brute_force 0 0\n");

        std::fs::write(&p, "garbage\nWINDOW 2 4 5 brute_force 0 0\n").unwrap();
        assert!(matches!(RecordStore::open(&p), Err(Error::Resume(_))));

        let c = dir.path().join("c");
        std::fs::write(&c, "CURSOR 4 6 10 10\nCURSOR 4 6 20 20\nCURS").unwrap();
        assert_eq!(Checkpoint::load(&c).unwrap().unwrap().position, 20);
        assert_eq!(std::fs::read_to_string(&c).unwrap(), "CURSOR 4 6 10 10\nCURSOR 4 6 20 20\n");
    }

    #[test]
    fn campaign_matches_in_memory_search_and_resumes() {
        let tb = sieve_primes(1000).unwrap();
        let cf = CfRegulator::default();
        let params = derive_params(5, 9, &tb).unwrap();
        let expected = bb_search(&params, &cf, &tb, None).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let (s, c) = (dir.path().join("s"), dir.path().join("c"));
        let opts = CampaignOptions { checkpoint_every: 7, ..CampaignOptions::new() };
        let aborted = run_campaign(&params, &cf, &tb, &s, &c, &CampaignOptions { abort_after: Some(40), ..opts.clone() })
            .unwrap();
        assert!(!aborted.complete);
        assert_eq!(Checkpoint::load(&c).unwrap().unwrap().position, 35);
        let stopped =
            run_campaign(&params, &cf, &tb, &s, &c, &CampaignOptions { stop_after: Some(10), ..opts.clone() }).unwrap();
        assert_eq!(stopped.position, 45);
        let done = run_campaign(&params, &cf, &tb, &s, &c, &opts).unwrap();
        assert!(done.complete);
        assert_eq!(done.position, params.count);

        let got = read_store(&s).unwrap();
        assert!(!got.is_empty());
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(sorted, expected);
        assert!(got.iter().all(|r| r.source == Source::BauerBennett));

        let fresh = dir.path().join("fresh");
        run_campaign(&params, &cf, &tb, &fresh, &dir.path().join("fc"), &opts).unwrap();
        assert_eq!(sorted_store(&s), sorted_store(&fresh));

        let again = run_campaign(&params, &cf, &tb, &s, &c, &opts).unwrap();
        assert_eq!((again.processed_now, again.new_records), (0, 0));
    }

    #[test]
    fn mismatched_checkpoint_is_rejected() {
        let tb = sieve_primes(1000).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let c = dir.path().join("c");
        std::fs::write(&c, "CURSOR 5 9 0 0\n").unwrap();
        let params = derive_params(4, 6, &tb).unwrap();
        let r = run_campaign(&params, &CfRegulator::default(), &tb, &dir.path().join("s"), &c, &CampaignOptions::new());
        assert!(matches!(r, Err(Error::Resume(_))));
    }
}

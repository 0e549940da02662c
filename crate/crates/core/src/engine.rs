//! Master-worker parallel engine running bulk-synchronous supersteps.
//!
//! The constraint list is split into `K` contiguous partitions, one per
//! worker thread. Each worker owns a replica of its rows. Per iteration the
//! master broadcasts `x`, every worker evaluates the Map and a local Reduce
//! over its rows, the master gathers the reports, reduces them, takes the
//! step, updates its data and checks the stopping criterion, then broadcasts
//! the elapsed time and the exit flag so that every replica applies the same
//! update before the next superstep.
//!
//! With `ordered_reduce` each worker reports the canonical blocks of the
//! fixed pairwise tree covering its rows, and the master assembles them in
//! row order; the result is bit-identical to the sequential engine for every
//! `K`. Without it each worker sends one partial sum and the master adds
//! them in arrival order.

use std::collections::BTreeMap;
use std::ops::Range;
use std::panic::{self, AssertUnwindSafe};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread::{self, JoinHandle};

use crate::dynamics::DynamicSystemSource;
use crate::error::{Error, Result};
use crate::geometry::slice_kernel;
use crate::solver::tree::{cover, node_sum, NodeId, Partial};
use crate::solver::{drive, SolveOutcome, SolverConfig, StageRunner};

/// Rows assigned to one worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub worker_index: usize,
    pub rows: Range<usize>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Balanced contiguous split of `m` rows over `k` workers: the first
/// `m mod k` partitions get one extra row.
pub fn partition_list(m: usize, k: usize) -> Result<Vec<Partition>> {
    if k == 0 {
        return Err(Error::invalid("workers", "need at least one worker"));
    }
    if k > m {
        return Err(Error::invalid("workers", format!("{k} workers for {m} rows")));
    }
    let (base, extra) = (m / k, m % k);
    let mut start = 0;
    Ok((0..k)
        .map(|worker_index| {
            let len = base + usize::from(worker_index < extra);
            let rows = start..start + len;
            start += len;
            Partition { worker_index, rows }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    pub workers: usize,
    pub ordered_reduce: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            ordered_reduce: true,
        }
    }
}

/// What a worker sends back after a superstep.
#[derive(Debug, Clone, PartialEq)]
pub enum ReportPayload {
    /// Canonical tree blocks covering the worker's rows, in row order.
    Blocks(Vec<(NodeId, Partial)>),
    /// One partial sum over all of the worker's rows.
    Sum(Partial),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerReport {
    pub worker_index: usize,
    pub partial_h: usize,
    pub payload: ReportPayload,
}

impl WorkerReport {
    /// The worker's partial sum `y^(j)` as a dense vector.
    pub fn partial_y(&self, n: usize) -> Vec<f64> {
        match &self.payload {
            ReportPayload::Sum(p) => p.clone().into_vec(n),
            ReportPayload::Blocks(blocks) => blocks
                .iter()
                .fold(Partial::default(), |acc, (_, p)| acc.combine(p.clone()))
                .into_vec(n),
        }
    }
}

/// Final state of a worker thread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerSummary {
    pub worker_index: usize,
    pub supersteps: usize,
    pub rows_processed: usize,
    pub saw_exit: bool,
}

enum Command {
    Compute(Vec<f64>),
    Advance { elapsed: f64, exit: bool },
    Exit,
}

enum Reply {
    Report(WorkerReport),
    Failed { worker: usize, reason: String },
}

struct Worker {
    index: usize,
    rows: Range<usize>,
    m: usize,
    ordered: bool,
    source: DynamicSystemSource,
    blocks: Vec<NodeId>,
    summary: WorkerSummary,
    fail_at: Option<usize>,
}

impl Worker {
    fn compute(&mut self, x: &[f64]) -> Result<WorkerReport> {
        if self.fail_at == Some(self.summary.supersteps) {
            panic!("injected failure");
        }
        let sys = self.source.system();
        sys.check_dim(x.len())?;
        let offset = self.rows.start;
        let n = sys.dim();
        let mut leaf = |i: usize, out: &mut [f64]| {
            let local = i - offset;
            slice_kernel(sys.row(local), sys.rhs()[local], x, out)
        };
        let payload = if self.ordered {
            ReportPayload::Blocks(
                self.blocks
                    .iter()
                    .map(|&node| (node, node_sum(node, self.m, n, &mut leaf)))
                    .collect(),
            )
        } else {
            let mut acc = Partial::default();
            for &node in &self.blocks {
                acc = acc.combine(node_sum(node, self.m, n, &mut leaf));
            }
            ReportPayload::Sum(acc)
        };
        self.summary.rows_processed += self.rows.len();
        let partial_h = match &payload {
            ReportPayload::Blocks(b) => b.iter().map(|(_, p)| p.h).sum(),
            ReportPayload::Sum(p) => p.h,
        };
        Ok(WorkerReport {
            worker_index: self.index,
            partial_h,
            payload,
        })
    }

    fn run(mut self, commands: Receiver<Command>, replies: Sender<Reply>) -> WorkerSummary {
        while let Ok(cmd) = commands.recv() {
            match cmd {
                Command::Compute(x) => {
                    let outcome = panic::catch_unwind(AssertUnwindSafe(|| self.compute(&x)));
                    let reply = match outcome {
                        Ok(Ok(report)) => Reply::Report(report),
                        Ok(Err(e)) => Reply::Failed { worker: self.index, reason: e.to_string() },
                        Err(p) => Reply::Failed { worker: self.index, reason: panic_message(&p) },
                    };
                    let failed = matches!(reply, Reply::Failed { .. });
                    if replies.send(reply).is_err() || failed {
                        break;
                    }
                }
                Command::Advance { elapsed, exit } => {
                    if self.source.advance(elapsed).is_err() {
                        break;
                    }
                    self.summary.supersteps += 1;
                    if exit {
                        self.summary.saw_exit = true;
                        break;
                    }
                }
                Command::Exit => {
                    self.summary.saw_exit = true;
                    break;
                }
            }
        }
        self.summary
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "worker panicked".to_string())
}

/// `K` worker threads, each holding a replica of its partition.
pub struct WorkerPool {
    commands: Vec<Sender<Command>>,
    replies: Receiver<Reply>,
    handles: Vec<JoinHandle<WorkerSummary>>,
    m: usize,
    n: usize,
    ordered: bool,
}

impl WorkerPool {
    pub fn spawn(source: &DynamicSystemSource, config: &EngineConfig) -> Result<Self> {
        Self::spawn_with_fault(source, config, None)
    }

    fn spawn_with_fault(
        source: &DynamicSystemSource,
        config: &EngineConfig,
        fault: Option<(usize, usize)>,
    ) -> Result<Self> {
        let m = source.system().len();
        let parts = partition_list(m, config.workers)?;
        let (reply_tx, replies) = channel();
        let mut commands = Vec::with_capacity(parts.len());
        let mut handles = Vec::with_capacity(parts.len());
        for part in parts {
            let worker = Worker {
                index: part.worker_index,
                blocks: cover(m, part.rows.start, part.rows.end),
                source: source.restrict(part.rows.clone())?,
                rows: part.rows,
                m,
                ordered: config.ordered_reduce,
                summary: WorkerSummary {
                    worker_index: part.worker_index,
                    supersteps: 0,
                    rows_processed: 0,
                    saw_exit: false,
                },
                fail_at: fault.and_then(|(w, step)| (w == part.worker_index).then_some(step)),
            };
            let (tx, rx) = channel();
            let replies = reply_tx.clone();
            let handle = thread::Builder::new()
                .name(format!("modap-worker-{}", part.worker_index))
                .spawn(move || worker.run(rx, replies))
                .map_err(|e| Error::Engine(format!("spawning worker: {e}")))?;
            commands.push(tx);
            handles.push(handle);
        }
        Ok(Self {
            commands,
            replies,
            handles,
            m,
            n: source.system().dim(),
            ordered: config.ordered_reduce,
        })
    }

    pub fn workers(&self) -> usize {
        self.commands.len()
    }

    /// Broadcasts `x`, gathers one report per worker and reduces them.
    pub fn superstep(&mut self, x: &[f64]) -> Result<(Vec<f64>, usize)> {
        let p = self.gather_reduce(x)?;
        let h = p.h;
        Ok((p.into_vec(self.n), h))
    }

    /// Broadcasts `x` and collects every worker's report, sorted by worker.
    pub fn gather(&mut self, x: &[f64]) -> Result<Vec<WorkerReport>> {
        for (worker, tx) in self.commands.iter().enumerate() {
            tx.send(Command::Compute(x.to_vec()))
                .map_err(|_| Error::Worker { worker, reason: "worker is gone".into() })?;
        }
        let mut reports = Vec::with_capacity(self.commands.len());
        for _ in 0..self.commands.len() {
            match self.replies.recv() {
                Ok(Reply::Report(r)) => reports.push(r),
                Ok(Reply::Failed { worker, reason }) => return Err(Error::Worker { worker, reason }),
                Err(_) => return Err(Error::Engine("all workers disconnected".into())),
            }
        }
        if self.ordered {
            reports.sort_by_key(|r| r.worker_index);
        }
        Ok(reports)
    }

    fn gather_reduce(&mut self, x: &[f64]) -> Result<Partial> {
        let reports = self.gather(x)?;
        if self.ordered {
            let mut nodes = BTreeMap::new();
            for report in reports {
                match report.payload {
                    ReportPayload::Blocks(blocks) => nodes.extend(blocks),
                    ReportPayload::Sum(_) => return Err(Error::Engine("unexpected partial sum".into())),
                }
            }
            crate::solver::tree::assemble(self.m, nodes)
        } else {
            let mut acc = Partial::default();
            for report in reports {
                match report.payload {
                    ReportPayload::Sum(p) => acc = acc.combine(p),
                    ReportPayload::Blocks(_) => return Err(Error::Engine("unexpected block list".into())),
                }
            }
            Ok(acc)
        }
    }

    /// Tells every worker to apply the data update and whether to stop.
    pub fn end_superstep(&mut self, elapsed: f64, exit: bool) -> Result<()> {
        for (worker, tx) in self.commands.iter().enumerate() {
            tx.send(Command::Advance { elapsed, exit })
                .map_err(|_| Error::Worker { worker, reason: "worker is gone".into() })?;
        }
        Ok(())
    }

    /// Stops the workers (if still running) and joins them.
    pub fn shutdown(self) -> Result<Vec<WorkerSummary>> {
        for tx in &self.commands {
            let _ = tx.send(Command::Exit);
        }
        drop(self.commands);
        self.handles
            .into_iter()
            .enumerate()
            .map(|(worker, h)| {
                h.join().map_err(|_| Error::Worker { worker, reason: "thread panicked".into() })
            })
            .collect()
    }
}

impl StageRunner for WorkerPool {
    fn map_reduce(&mut self, sys: &crate::geometry::InequalitySystem, x: &[f64]) -> Result<Partial> {
        sys.check_dim(x.len())?;
        self.gather_reduce(x)
    }

    fn end_iteration(&mut self, elapsed: f64, exit: bool) -> Result<()> {
        self.end_superstep(elapsed, exit)
    }
}

/// Runs the iteration on `K` workers; same semantics as [`crate::solver::solve`].
pub fn run_parallel(
    source: &mut DynamicSystemSource,
    solver_config: &SolverConfig,
    engine_config: &EngineConfig,
) -> Result<SolveOutcome> {
    run_parallel_detailed(source, solver_config, engine_config).map(|(o, _)| o)
}

/// As [`run_parallel`], also returning each worker's final summary.
pub fn run_parallel_detailed(
    source: &mut DynamicSystemSource,
    solver_config: &SolverConfig,
    engine_config: &EngineConfig,
) -> Result<(SolveOutcome, Vec<WorkerSummary>)> {
    let pool = WorkerPool::spawn(source, engine_config)?;
    finish_run(pool, source, solver_config)
}

fn finish_run(
    mut pool: WorkerPool,
    source: &mut DynamicSystemSource,
    solver_config: &SolverConfig,
) -> Result<(SolveOutcome, Vec<WorkerSummary>)> {
    let result = drive(source, solver_config, &mut pool);
    let summaries = pool.shutdown();
    let outcome = result?;
    Ok((outcome, summaries?))
}

//! Instrumentation: kernel calls, rule applications, allocation and flop counters.
//!
//! A [`Collector`] is passed explicitly into every evaluation. The default one
//! only keeps counters; [`with_trace`] runs a closure with a recording collector.

use std::fmt;

use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Kernel,
    Rule,
    Alloc,
    Free,
    Detect,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Kernel => "kernel",
            EventKind::Rule => "rule",
            EventKind::Alloc => "alloc",
            EventKind::Free => "free",
            EventKind::Detect => "detect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub name: String,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Multiply-add-equivalent operations, as reported by kernels.
    pub flops: u64,
    /// Matrix buffer acquisitions.
    pub allocations: u64,
    pub kernel_calls: u64,
}

impl Counters {
    pub fn reset(&mut self) {
        *self = Counters::default();
    }
}

#[derive(Debug, Default)]
pub struct Collector {
    recording: bool,
    seq: u64,
    events: Vec<TraceEvent>,
    counters: Counters,
}

impl Collector {
    /// Counters only; no event list is kept.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn recording() -> Self {
        Collector {
            recording: true,
            ..Self::default()
        }
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn reset(&mut self) {
        self.seq = 0;
        self.events.clear();
        self.counters.reset();
    }

    pub fn into_parts(self) -> (Vec<TraceEvent>, Counters) {
        (self.events, self.counters)
    }

    fn push(&mut self, kind: EventKind, name: &str, detail: impl FnOnce() -> String) {
        if self.recording {
            self.seq += 1;
            self.events.push(TraceEvent {
                seq: self.seq,
                kind,
                name: name.to_string(),
                detail: detail(),
            });
        }
    }

    pub fn kernel(&mut self, name: &str, flops: u64, detail: impl FnOnce() -> String) {
        self.counters.kernel_calls += 1;
        self.counters.flops += flops;
        self.push(EventKind::Kernel, name, detail);
    }

    pub fn rule(&mut self, name: &str, detail: impl FnOnce() -> String) {
        self.push(EventKind::Rule, name, detail);
    }

    pub fn detect(&mut self, name: &str, detail: impl FnOnce() -> String) {
        self.push(EventKind::Detect, name, detail);
    }

    /// Acquire a zeroed matrix buffer and count it.
    pub fn acquire(&mut self, n_rows: usize, n_cols: usize) -> DenseMatrix {
        self.note_alloc(n_rows, n_cols);
        DenseMatrix::zeros(n_rows, n_cols)
    }

    pub(crate) fn note_alloc(&mut self, n_rows: usize, n_cols: usize) {
        self.counters.allocations += 1;
        self.push(EventKind::Alloc, "matrix", || format!("{n_rows}x{n_cols}"));
    }

    pub(crate) fn note_free(&mut self, n_rows: usize, n_cols: usize) {
        self.push(EventKind::Free, "matrix", || format!("{n_rows}x{n_cols}"));
    }

    /// Drop a temporary, recording the release.
    pub fn release(&mut self, m: DenseMatrix) {
        self.note_free(m.n_rows(), m.n_cols());
    }
}

/// Outcome of [`with_trace`]. `result` may itself be an error; the partial trace is kept.
#[derive(Debug)]
pub struct Traced<T> {
    pub result: T,
    pub events: Vec<TraceEvent>,
    pub counters: Counters,
}

pub fn with_trace<T>(thunk: impl FnOnce(&mut Collector) -> T) -> Traced<T> {
    let mut collector = Collector::recording();
    let result = thunk(&mut collector);
    let (events, counters) = collector.into_parts();
    Traced {
        result,
        events,
        counters,
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:04}: {}: {} [{}]",
            self.seq, self.kind, self.name, self.detail
        )
    }
}

/// One line per event: `{seq:04}: {kind}: {name} [{detail}]`.
pub fn render_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_single_kernel() {
        let traced = with_trace(|c| c.kernel("fused_axpby_n", 16, || "2x2, terms=2".into()));
        assert_eq!(
            render_trace(&traced.events),
            "0001: kernel: fused_axpby_n [2x2, terms=2]\n"
        );
        assert_eq!(traced.counters.kernel_calls, 1);
        assert_eq!(traced.counters.flops, 16);
    }

    #[test]
    fn render_empty() {
        assert_eq!(render_trace(&[]), "");
    }

    #[test]
    fn non_recording_keeps_counters() {
        let mut c = Collector::new();
        let m = c.acquire(3, 2);
        c.kernel("gemm", 10, || unreachable!("detail is lazy"));
        c.release(m);
        assert!(c.events().is_empty());
        assert_eq!(
            c.counters(),
            Counters {
                flops: 10,
                allocations: 1,
                kernel_calls: 1
            }
        );
        c.reset();
        assert_eq!(c.counters(), Counters::default());
    }

    #[test]
    fn seq_strictly_increases() {
        let traced = with_trace(|c| {
            c.rule("R1", String::new);
            let m = c.acquire(1, 1);
            c.detect("BAND", || "kl=0, ku=0".into());
            c.release(m);
        });
        let seqs: Vec<u64> = traced.events.iter().map(|e| e.seq).collect();
        assert_eq!(seqs, vec![1, 2, 3, 4]);
    }
}

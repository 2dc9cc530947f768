/// A hole in a sequence stream: `expected` was next, `received` arrived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gap {
    pub expected: u32,
    pub received: u32,
    pub lost: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GapReport {
    pub gaps: Vec<Gap>,
    pub total_lost: u64,
    /// Numbers at or behind the last accepted one (duplicates, reorders).
    pub regressions: u64,
}

/// Incremental gap tracker for one sender's stream. Sequence numbers are
/// compared modulo 2³², so `0xFFFF_FFFF → 0` is contiguous.
#[derive(Debug, Clone, Default)]
pub struct GapDetector {
    next: Option<u32>,
    report: GapReport,
}

impl GapDetector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, seq: u32) -> Option<Gap> {
        let Some(expected) = self.next else {
            self.next = Some(seq.wrapping_add(1));
            return None;
        };
        let ahead = seq.wrapping_sub(expected);
        if ahead >= 1 << 31 {
            self.report.regressions += 1;
            return None;
        }
        self.next = Some(seq.wrapping_add(1));
        if ahead == 0 {
            return None;
        }
        let gap = Gap {
            expected,
            received: seq,
            lost: ahead,
        };
        self.report.gaps.push(gap);
        self.report.total_lost += ahead as u64;
        Some(gap)
    }

    pub fn report(&self) -> &GapReport {
        &self.report
    }
}

pub fn detect_sequence_gaps(seqs: impl IntoIterator<Item = u32>) -> GapReport {
    let mut d = GapDetector::new();
    for s in seqs {
        d.observe(s);
    }
    d.report
}

/// Monotone per-stream sequence source.
#[derive(Debug, Clone, Default)]
pub struct SequenceCounter {
    next: u32,
}

impl SequenceCounter {
    pub fn starting_at(next: u32) -> Self {
        Self { next }
    }

    pub fn next_seq(&mut self) -> u32 {
        let s = self.next;
        self.next = self.next.wrapping_add(1);
        s
    }
}

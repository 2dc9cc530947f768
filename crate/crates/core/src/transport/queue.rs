//! Two-plane outbound queue: a bounded media plane that drops the oldest
//! frame when full, and an unbounded control plane that never drops but
//! raises a backpressure fault past its watermark.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueueStats {
    pub media_enqueued: u64,
    pub media_dropped: u64,
    pub media_delivered: u64,
    pub control_enqueued: u64,
    pub control_delivered: u64,
    /// Enqueues that found the control plane above its watermark.
    pub backpressure_faults: u64,
    pub control_high_water: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plane<T> {
    Media(T),
    Control(T),
}

impl<T> Plane<T> {
    pub fn into_inner(self) -> T {
        match self {
            Plane::Media(t) | Plane::Control(t) => t,
        }
    }
}

#[derive(Debug)]
struct Inner<T> {
    media: VecDeque<T>,
    control: VecDeque<T>,
    stats: QueueStats,
    closed: bool,
}

/// Single-producer/single-consumer safe (and more); the drop decision is
/// taken under the same lock as the enqueue.
#[derive(Debug)]
pub struct PlaneQueue<T> {
    media_capacity: usize,
    control_watermark: usize,
    inner: Mutex<Inner<T>>,
    ready: Condvar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("control queue above watermark ({depth} > {watermark})")]
pub struct Backpressure {
    pub depth: usize,
    pub watermark: usize,
}

impl<T> PlaneQueue<T> {
    /// `media_capacity` is clamped to at least 1.
    pub fn new(media_capacity: usize, control_watermark: usize) -> Self {
        Self {
            media_capacity: media_capacity.max(1),
            control_watermark,
            inner: Mutex::new(Inner {
                media: VecDeque::with_capacity(media_capacity.max(1)),
                control: VecDeque::new(),
                stats: QueueStats::default(),
                closed: false,
            }),
            ready: Condvar::new(),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner<T>> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Enqueues a media item, evicting the oldest one when full. Returns the
    /// evicted item, if any.
    pub fn push_media(&self, item: T) -> Option<T> {
        let mut g = self.lock();
        g.stats.media_enqueued += 1;
        let evicted = if g.media.len() >= self.media_capacity {
            g.stats.media_dropped += 1;
            g.media.pop_front()
        } else {
            None
        };
        g.media.push_back(item);
        drop(g);
        self.ready.notify_one();
        evicted
    }

    /// Enqueues a control item. It is always accepted; the error reports a
    /// backpressure fault for the caller's metrics.
    pub fn push_control(&self, item: T) -> Result<(), Backpressure> {
        let mut g = self.lock();
        g.stats.control_enqueued += 1;
        g.control.push_back(item);
        let depth = g.control.len();
        g.stats.control_high_water = g.stats.control_high_water.max(depth);
        let fault = depth > self.control_watermark;
        if fault {
            g.stats.backpressure_faults += 1;
        }
        drop(g);
        self.ready.notify_one();
        if fault {
            Err(Backpressure {
                depth,
                watermark: self.control_watermark,
            })
        } else {
            Ok(())
        }
    }

    pub fn push(&self, item: Plane<T>) -> Result<(), Backpressure> {
        match item {
            Plane::Media(t) => {
                self.push_media(t);
                Ok(())
            }
            Plane::Control(t) => self.push_control(t),
        }
    }

    fn take(g: &mut Inner<T>) -> Option<Plane<T>> {
        if let Some(c) = g.control.pop_front() {
            g.stats.control_delivered += 1;
            return Some(Plane::Control(c));
        }
        if let Some(m) = g.media.pop_front() {
            g.stats.media_delivered += 1;
            return Some(Plane::Media(m));
        }
        None
    }

    /// Non-blocking pop; control items first.
    pub fn try_pop(&self) -> Option<Plane<T>> {
        Self::take(&mut self.lock())
    }

    /// Waits up to `timeout` for an item. Returns `None` on timeout or when
    /// the queue is closed and drained.
    pub fn pop_timeout(&self, timeout: Duration) -> Option<Plane<T>> {
        let mut g = self.lock();
        let deadline = std::time::Instant::now() + timeout;
        loop {
            if let Some(item) = Self::take(&mut g) {
                return Some(item);
            }
            if g.closed {
                return None;
            }
            let now = std::time::Instant::now();
            if now >= deadline {
                return None;
            }
            g = self
                .ready
                .wait_timeout(g, deadline - now)
                .unwrap_or_else(|p| p.into_inner())
                .0;
        }
    }

    pub fn close(&self) {
        self.lock().closed = true;
        self.ready.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }

    pub fn stats(&self) -> QueueStats {
        self.lock().stats
    }

    pub fn len(&self) -> (usize, usize) {
        let g = self.lock();
        (g.media.len(), g.control.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == (0, 0)
    }
}

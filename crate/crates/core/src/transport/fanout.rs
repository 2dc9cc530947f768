//! One producer feeding many per-subscriber plane queues.

use std::sync::{Arc, Mutex};

use super::queue::PlaneQueue;

/// What one publish did across all live subscribers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PublishOutcome {
    pub subscribers: usize,
    /// Media items evicted to make room.
    pub dropped: usize,
    /// Control enqueues that crossed a watermark.
    pub backpressure: usize,
}

#[derive(Debug)]
pub struct Fanout<T> {
    media_capacity: usize,
    control_watermark: usize,
    subs: Mutex<Vec<Arc<PlaneQueue<T>>>>,
}

impl<T: Clone> Fanout<T> {
    pub fn new(media_capacity: usize, control_watermark: usize) -> Self {
        Self {
            media_capacity,
            control_watermark,
            subs: Mutex::new(Vec::new()),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Vec<Arc<PlaneQueue<T>>>> {
        self.subs.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// A new queue that receives everything published from now on. Closing
    /// it unsubscribes.
    pub fn subscribe(&self) -> Arc<PlaneQueue<T>> {
        let q = Arc::new(PlaneQueue::new(self.media_capacity, self.control_watermark));
        self.lock().push(q.clone());
        q
    }

    pub fn len(&self) -> usize {
        let mut g = self.lock();
        g.retain(|q| !q.is_closed());
        g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn publish_media(&self, item: T) -> PublishOutcome {
        self.publish(|q| (q.push_media(item.clone()).is_some(), false))
    }

    pub fn publish_control(&self, item: T) -> PublishOutcome {
        self.publish(|q| (false, q.push_control(item.clone()).is_err()))
    }

    fn publish(&self, mut f: impl FnMut(&PlaneQueue<T>) -> (bool, bool)) -> PublishOutcome {
        let mut g = self.lock();
        g.retain(|q| !q.is_closed());
        let mut out = PublishOutcome {
            subscribers: g.len(),
            ..PublishOutcome::default()
        };
        for q in g.iter() {
            let (dropped, fault) = f(q);
            out.dropped += dropped as usize;
            out.backpressure += fault as usize;
        }
        out
    }

    /// Closes every subscriber queue.
    pub fn close_all(&self) {
        for q in self.lock().drain(..) {
            q.close();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::Plane;

    #[test]
    fn closed_subscribers_are_pruned() {
        let f = Fanout::new(1, 8);
        let a = f.subscribe();
        let b = f.subscribe();
        assert_eq!(f.publish_media(1).subscribers, 2);
        b.close();
        let o = f.publish_media(2);
        assert_eq!((o.subscribers, o.dropped), (1, 1));
        assert_eq!(a.try_pop(), Some(Plane::Media(2)));
    }

    #[test]
    fn control_reaches_everyone_in_order() {
        let f = Fanout::new(1, 8);
        let a = f.subscribe();
        let b = f.subscribe();
        for i in 0..5 {
            f.publish_control(i);
        }
        for q in [a, b] {
            let got: Vec<i32> = std::iter::from_fn(|| q.try_pop().map(Plane::into_inner)).collect();
            assert_eq!(got, vec![0, 1, 2, 3, 4]);
        }
    }
}

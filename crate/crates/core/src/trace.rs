//! Per-agent message trace with bounded, drop-oldest subscriber buffers.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use crate::messaging::{AclMessage, Content, ProtocolTiming};

pub const DEFAULT_TRACE_CAPACITY: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Out => "OUT",
            Direction::In => "IN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub seq: u64,
    /// Microseconds since the bus was created.
    pub timestamp_us: u64,
    pub direction: Direction,
    pub agent: String,
    pub peer: String,
    pub performative: String,
    pub ontology: String,
    pub conversation_id: String,
    pub excerpt: String,
    /// Present on terminal engine results.
    pub timing: Option<ProtocolTiming>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceItem {
    Event(TraceEvent),
    /// `n` older events were discarded because the subscriber fell behind.
    Dropped(u64),
}

#[derive(Debug)]
struct SubscriberState {
    buffer: VecDeque<TraceEvent>,
    dropped: u64,
    closed: bool,
}

#[derive(Debug)]
struct SubscriberInner {
    capacity: usize,
    state: Mutex<SubscriberState>,
    ready: Condvar,
}

/// Receiving end of a trace subscription.
#[derive(Debug)]
pub struct TraceSubscription {
    inner: Arc<SubscriberInner>,
}

impl TraceSubscription {
    pub fn try_next(&self) -> Option<TraceItem> {
        let mut st = self.inner.state.lock().unwrap();
        Self::pop(&mut st)
    }

    /// Waits up to `timeout` for the next item.
    pub fn next_timeout(&self, timeout: Duration) -> Option<TraceItem> {
        let deadline = Instant::now() + timeout;
        let mut st = self.inner.state.lock().unwrap();
        loop {
            if let Some(item) = Self::pop(&mut st) {
                return Some(item);
            }
            if st.closed {
                return None;
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            st = self.inner.ready.wait_timeout(st, deadline - now).unwrap().0;
        }
    }

    fn pop(st: &mut SubscriberState) -> Option<TraceItem> {
        if st.dropped > 0 {
            let n = std::mem::take(&mut st.dropped);
            return Some(TraceItem::Dropped(n));
        }
        st.buffer.pop_front().map(TraceItem::Event)
    }

    pub fn close(&self) {
        let mut st = self.inner.state.lock().unwrap();
        st.closed = true;
        self.inner.ready.notify_all();
    }
}

impl Drop for TraceSubscription {
    fn drop(&mut self) {
        self.close();
    }
}

#[derive(Debug)]
pub struct TraceBus {
    agent: String,
    epoch: Instant,
    seq: AtomicU64,
    subscribers: Mutex<Vec<Arc<SubscriberInner>>>,
}

impl TraceBus {
    pub fn new(agent: impl Into<String>) -> Self {
        TraceBus {
            agent: agent.into(),
            epoch: Instant::now(),
            seq: AtomicU64::new(0),
            subscribers: Mutex::new(Vec::new()),
        }
    }

    pub fn subscribe(&self, capacity: usize) -> TraceSubscription {
        let inner = Arc::new(SubscriberInner {
            capacity: capacity.max(1),
            state: Mutex::new(SubscriberState {
                buffer: VecDeque::new(),
                dropped: 0,
                closed: false,
            }),
            ready: Condvar::new(),
        });
        self.subscribers.lock().unwrap().push(inner.clone());
        TraceSubscription { inner }
    }

    pub fn has_subscribers(&self) -> bool {
        !self.subscribers.lock().unwrap().is_empty()
    }

    pub fn record(&self, direction: Direction, msg: &AclMessage) {
        let mut subs = self.subscribers.lock().unwrap();
        subs.retain(|s| !s.state.lock().unwrap().closed);
        if subs.is_empty() {
            return;
        }
        let peer = match direction {
            Direction::Out => msg
                .receivers
                .iter()
                .map(|r| r.name.as_str())
                .collect::<Vec<_>>()
                .join(","),
            Direction::In => msg.sender.name.clone(),
        };
        let timing = match &msg.content {
            Content::Result(r) => r.timing,
            _ => None,
        };
        let event = TraceEvent {
            seq: self.seq.fetch_add(1, Ordering::Relaxed),
            timestamp_us: self.epoch.elapsed().as_micros() as u64,
            direction,
            agent: self.agent.clone(),
            peer,
            performative: msg.performative.as_str().to_string(),
            ontology: msg.ontology.clone(),
            conversation_id: msg.conversation_id.clone(),
            excerpt: msg.content.excerpt(120),
            timing,
        };
        for sub in subs.iter() {
            let mut st = sub.state.lock().unwrap();
            if st.buffer.len() >= sub.capacity {
                st.buffer.pop_front();
                st.dropped += 1;
            }
            st.buffer.push_back(event.clone());
            sub.ready.notify_all();
        }
    }
}

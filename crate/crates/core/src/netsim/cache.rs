//! Edge content caches with least-recently-used eviction.

use std::collections::VecDeque;

use crate::economics::{quote_order, CapabilityQuote};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContentCache {
    capacity: u64,
    used: u64,
    /// Most recently used at the back.
    entries: VecDeque<(u64, u64)>,
}

impl ContentCache {
    pub fn new(capacity: u64) -> Self {
        ContentCache { capacity, used: 0, entries: VecDeque::new() }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn contains(&self, content: u64) -> bool {
        self.entries.iter().any(|&(c, _)| c == content)
    }

    /// Marks `content` as just used. Returns false on a miss.
    pub fn touch(&mut self, content: u64) -> bool {
        match self.entries.iter().position(|&(c, _)| c == content) {
            Some(i) => {
                let e = self.entries.remove(i).expect("index in range");
                self.entries.push_back(e);
                true
            }
            None => false,
        }
    }

    /// Stores `content`, evicting least recently used entries as needed.
    /// Content larger than the whole cache is never stored.
    pub fn insert(&mut self, content: u64, size: u64) -> bool {
        if size > self.capacity {
            return false;
        }
        if self.touch(content) {
            return true;
        }
        while self.used + size > self.capacity {
            let (_, s) = self.entries.pop_front().expect("used > 0 implies entries");
            self.used -= s;
        }
        self.entries.push_back((content, size));
        self.used += size;
        true
    }
}

/// The negotiation rule applied to delivery offers: cheapest, then fastest,
/// then lowest node id.
pub fn choose_offer(offers: &[CapabilityQuote]) -> Option<&CapabilityQuote> {
    offers.iter().min_by(|a, b| quote_order(a, b))
}

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Magic-state buffer with in-transit states.
///
/// `count` includes states deposited but not yet consumable; they occupy
/// capacity from the cycle they are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Buffer {
    capacity: Option<u64>,
    count: u64,
    produced_total: u64,
    consumed_total: u64,
    /// `(available_at, n)` in non-decreasing `available_at` order.
    arrivals: VecDeque<(u64, u64)>,
    ready: u64,
}

impl Buffer {
    pub fn new(capacity: Option<u64>) -> Self {
        Buffer {
            capacity,
            count: 0,
            produced_total: 0,
            consumed_total: 0,
            arrivals: VecDeque::new(),
            ready: 0,
        }
    }

    pub fn capacity(&self) -> Option<u64> {
        self.capacity
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn produced_total(&self) -> u64 {
        self.produced_total
    }

    pub fn consumed_total(&self) -> u64 {
        self.consumed_total
    }

    pub fn free_slots(&self) -> u64 {
        self.capacity.map_or(u64::MAX, |c| c - self.count)
    }

    /// Adds a state consumable from `available_at`. Returns false, and adds
    /// nothing, when the buffer is full.
    pub fn deposit(&mut self, available_at: u64) -> bool {
        if self.free_slots() == 0 {
            return false;
        }
        self.count += 1;
        self.produced_total += 1;
        match self.arrivals.back_mut() {
            Some((at, n)) if *at == available_at => *n += 1,
            _ => {
                debug_assert!(self
                    .arrivals
                    .back()
                    .is_none_or(|&(at, _)| at < available_at));
                self.arrivals.push_back((available_at, 1));
            }
        }
        true
    }

    /// States consumable at `cycle`.
    pub fn available(&mut self, cycle: u64) -> u64 {
        while let Some(&(at, n)) = self.arrivals.front() {
            if at > cycle {
                break;
            }
            self.ready += n;
            self.arrivals.pop_front();
        }
        self.ready
    }

    /// Grants up to `n` states consumable at `cycle`.
    pub fn take(&mut self, cycle: u64, n: u64) -> u64 {
        let granted = n.min(self.available(cycle));
        self.ready -= granted;
        self.count -= granted;
        self.consumed_total += granted;
        granted
    }

    pub fn check(&self) -> Result<(), String> {
        if self.capacity.is_some_and(|c| self.count > c) {
            return Err(format!(
                "buffer holds {} states over capacity {:?}",
                self.count, self.capacity
            ));
        }
        if self.consumed_total > self.produced_total
            || self.count != self.produced_total - self.consumed_total
        {
            return Err(format!(
                "buffer accounting broken: count {} produced {} consumed {}",
                self.count, self.produced_total, self.consumed_total
            ));
        }
        Ok(())
    }
}

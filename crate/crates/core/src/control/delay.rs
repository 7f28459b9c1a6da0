//! Fixed-latency transport lines between controller and plant.

use std::collections::VecDeque;

/// FIFO that returns each item exactly `depth` exchanges after it went in.
/// Starts filled with `depth` copies of an initial value.
#[derive(Debug, Clone)]
pub struct DelayLine<T> {
    queue: VecDeque<T>,
    depth: usize,
}

impl<T: Clone> DelayLine<T> {
    pub fn new(depth: usize, initial: T) -> Self {
        DelayLine { queue: std::iter::repeat_n(initial, depth).collect(), depth }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Insert `item` and take the one inserted `depth` calls ago. With depth 0
    /// the item comes straight back.
    pub fn exchange(&mut self, item: T) -> T {
        self.queue.push_back(item);
        self.queue.pop_front().expect("queue holds depth + 1 items")
    }

    /// Take the oldest item; pair with [`push`](Self::push) in the same step.
    pub fn pop(&mut self) -> Option<T> {
        self.queue.pop_front()
    }

    pub fn push(&mut self, item: T) {
        self.queue.push_back(item);
    }

    /// Replace every queued item, e.g. after repositioning the plant.
    pub fn fill(&mut self, item: T) {
        self.queue.iter_mut().for_each(|x| *x = item.clone());
    }
}

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex, MutexGuard};

use super::{Item, Output};

/// Item and result buffers of one in-flight batch.
#[derive(Debug)]
pub struct Slot {
    pub inputs: Vec<Item>,
    pub outputs: Vec<Output>,
}

/// Fixed set of batch buffers, allocated once and reused.
#[derive(Debug)]
pub struct BufferRing {
    slots: Vec<Mutex<Slot>>,
    capacity: usize,
    free: Mutex<RingState>,
    available: Condvar,
}

#[derive(Debug)]
struct RingState {
    free: VecDeque<usize>,
    in_use: usize,
    peak_in_use: usize,
}

impl BufferRing {
    pub fn new(slot_count: usize, capacity: usize) -> Self {
        let slots = (0..slot_count)
            .map(|_| {
                Mutex::new(Slot {
                    inputs: Vec::with_capacity(capacity),
                    outputs: Vec::with_capacity(capacity),
                })
            })
            .collect();
        BufferRing {
            slots,
            capacity,
            free: Mutex::new(RingState { free: (0..slot_count).collect(), in_use: 0, peak_in_use: 0 }),
            available: Condvar::new(),
        }
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Blocks until a slot is free.
    pub fn acquire(&self) -> usize {
        let mut st = self.free.lock().unwrap();
        loop {
            if let Some(i) = st.free.pop_front() {
                st.in_use += 1;
                st.peak_in_use = st.peak_in_use.max(st.in_use);
                return i;
            }
            st = self.available.wait(st).unwrap();
        }
    }

    pub fn release(&self, index: usize) {
        let mut st = self.free.lock().unwrap();
        debug_assert!(!st.free.contains(&index), "slot released twice");
        st.free.push_back(index);
        st.in_use -= 1;
        drop(st);
        self.available.notify_one();
    }

    pub fn slot(&self, index: usize) -> MutexGuard<'_, Slot> {
        self.slots[index].lock().unwrap()
    }

    pub fn in_use(&self) -> usize {
        self.free.lock().unwrap().in_use
    }

    pub fn peak_in_use(&self) -> usize {
        self.free.lock().unwrap().peak_in_use
    }

    /// Peak since the last call; the peak restarts from the current use.
    pub fn take_peak(&self) -> usize {
        let mut st = self.free.lock().unwrap();
        let peak = st.peak_in_use;
        st.peak_in_use = st.in_use;
        peak
    }

    /// Total item capacity currently reserved by the buffers.
    pub fn reserved_items(&self) -> usize {
        self.slots
            .iter()
            .map(|s| {
                let s = s.lock().unwrap();
                s.inputs.capacity().max(s.outputs.capacity())
            })
            .sum()
    }
}

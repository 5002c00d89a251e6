use std::time::Instant;

use serde::Serialize;

use super::{BatchRecordInput, OpKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRecord {
    pub request_id: u64,
    pub kind: OpKind,
    pub items: usize,
    pub slot: usize,
    pub worker: usize,
    /// Microseconds since the stats window opened.
    pub enqueue_us: f64,
    pub start_us: f64,
    pub finish_us: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthSample {
    pub t_us: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueStats {
    pub batches: Vec<BatchRecord>,
    pub total_items: usize,
    /// First enqueue to last finish.
    pub wall_span_us: f64,
    pub items_per_second: f64,
    pub peak_slots_in_use: usize,
    pub peak_buffered_items: usize,
    /// Batches waiting for a worker, sampled at every enqueue and start.
    pub queue_depth: Vec<DepthSample>,
}

impl QueueStats {
    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

pub(super) struct Recorder {
    epoch: Instant,
    records: Vec<BatchRecord>,
    depth: Vec<DepthSample>,
    queued: usize,
}

impl Recorder {
    pub fn new() -> Self {
        Recorder { epoch: Instant::now(), records: Vec::new(), depth: Vec::new(), queued: 0 }
    }

    fn us(&self, t: Instant) -> f64 {
        t.saturating_duration_since(self.epoch).as_secs_f64() * 1e6
    }

    pub fn enqueued(&mut self, t: Instant) {
        self.queued += 1;
        self.depth.push(DepthSample { t_us: self.us(t), depth: self.queued });
    }

    pub fn started(&mut self, t: Instant) {
        self.queued -= 1;
        self.depth.push(DepthSample { t_us: self.us(t), depth: self.queued });
    }

    pub fn record(&mut self, r: BatchRecordInput) {
        let rec = BatchRecord {
            request_id: r.request_id,
            kind: r.kind,
            items: r.items,
            slot: r.slot,
            worker: r.worker,
            enqueue_us: self.us(r.enqueued),
            start_us: self.us(r.started),
            finish_us: self.us(r.finished),
        };
        self.records.push(rec);
    }

    pub fn take(&mut self, peak_slots: usize, batch_size: usize) -> QueueStats {
        let mut batches = std::mem::take(&mut self.records);
        batches.sort_by(|a, b| a.enqueue_us.total_cmp(&b.enqueue_us));
        let queue_depth = std::mem::take(&mut self.depth);
        self.epoch = Instant::now();
        let total_items = batches.iter().map(|b| b.items).sum();
        let first = batches.iter().map(|b| b.enqueue_us).fold(f64::INFINITY, f64::min);
        let last = batches.iter().map(|b| b.finish_us).fold(f64::NEG_INFINITY, f64::max);
        let wall_span_us = if batches.is_empty() { 0.0 } else { last - first };
        let items_per_second = if wall_span_us > 0.0 { total_items as f64 / (wall_span_us * 1e-6) } else { 0.0 };
        QueueStats {
            batches,
            total_items,
            wall_span_us,
            items_per_second,
            peak_slots_in_use: peak_slots,
            peak_buffered_items: peak_slots * batch_size,
            queue_depth,
        }
    }
}

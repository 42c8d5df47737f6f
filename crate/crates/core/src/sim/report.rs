use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Accumulated outcome of one batch of renewals.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct BatchTally {
    pub slots: u64,
    pub reward: f64,
    pub state_counts: [u64; 4],
    pub single_tx: u64,
    pub pair_tx: u64,
    pub truncated: bool,
}

impl BatchTally {
    pub fn transmissions(&self) -> u64 {
        self.single_tx + self.pair_tx
    }

    pub fn time(&self, slot_cost: f64) -> f64 {
        self.slots as f64 * slot_cost + self.transmissions() as f64
    }

    pub fn throughput(&self, slot_cost: f64) -> f64 {
        let t = self.time(slot_cost);
        if t > 0.0 {
            self.reward / t
        } else {
            0.0
        }
    }
}

/// Throughput estimate of one simulated run.
///
/// Time is normalized to a data transmission of length 1, so a contention slot
/// costs `slot_cost` (`2δ` per meta-slot, `δ` per mini-slot) and
/// `total_time = rounds·slot_cost + transmissions` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub total_reward_time: f64,
    pub total_time: f64,
    pub throughput: f64,
    /// Contention slots simulated.
    pub rounds: u64,
    /// Slot outcomes indexed by `{c1, c2}` as `0b c1 c2`: `{0,0}`, `{0,1}`, `{1,0}`, `{1,1}`.
    pub state_counts: [u64; 4],
    pub single_link_transmissions: u64,
    pub two_link_transmissions: u64,
    /// 95% half-width from batch means; NaN with fewer than two batches.
    pub ci_halfwidth: f64,
    pub batches: usize,
    /// Set when some renewal hit the slot cap and its batch was cut short.
    pub truncated: bool,
}

impl SimReport {
    /// Merges batch tallies in the given order.
    pub(crate) fn from_batches(batches: &[BatchTally], slot_cost: f64) -> Self {
        let mut total = BatchTally::default();
        for b in batches {
            total.slots += b.slots;
            total.reward += b.reward;
            for (t, c) in total.state_counts.iter_mut().zip(b.state_counts) {
                *t += c;
            }
            total.single_tx += b.single_tx;
            total.pair_tx += b.pair_tx;
            total.truncated |= b.truncated;
        }
        let means: Vec<f64> = batches.iter().map(|b| b.throughput(slot_cost)).collect();
        SimReport {
            total_reward_time: total.reward,
            total_time: total.time(slot_cost),
            throughput: total.throughput(slot_cost),
            rounds: total.slots,
            state_counts: total.state_counts,
            single_link_transmissions: total.single_tx,
            two_link_transmissions: total.pair_tx,
            ci_halfwidth: batch_means_halfwidth(&means),
            batches: batches.len(),
            truncated: total.truncated,
        }
    }

    pub fn transmissions(&self) -> u64 {
        self.single_link_transmissions + self.two_link_transmissions
    }
}

/// Student-t 95% half-width of the mean of `values`.
pub fn batch_means_halfwidth(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    t * (var / n as f64).sqrt()
}

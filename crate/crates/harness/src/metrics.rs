//! Learning-curve metrics over a run's episode records.

use hyperttt_agent::{EpisodeRecord, Outcome};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub episodes: u64,
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
    /// Sum of episode rewards.
    pub undiscounted_return: f64,
    /// Sum of `reward * gamma^(steps - 1)`.
    pub discounted_return: f64,
    /// 1-based episode at which the trailing window mean first reaches the
    /// threshold; `None` if it never does.
    pub episodes_to_threshold: Option<u64>,
    pub total_wall_ms: u64,
}

impl MetricsSummary {
    pub fn non_loss_rate(&self) -> f64 {
        if self.episodes == 0 {
            return 0.0;
        }
        (self.wins + self.draws) as f64 / self.episodes as f64
    }
}

pub fn compute_metrics(records: &[EpisodeRecord], window: usize, threshold: f64, gamma: f64) -> MetricsSummary {
    let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count() as u64;
    MetricsSummary {
        episodes: records.len() as u64,
        wins: count(Outcome::Win),
        draws: count(Outcome::Draw),
        losses: count(Outcome::Loss),
        undiscounted_return: records.iter().map(|r| r.reward).sum(),
        discounted_return: records
            .iter()
            .map(|r| r.reward * gamma.powi(r.steps.saturating_sub(1) as i32))
            .sum(),
        episodes_to_threshold: episodes_to_threshold(records, window, threshold),
        total_wall_ms: records.iter().map(|r| r.wall_ms).sum(),
    }
}

pub fn episodes_to_threshold(records: &[EpisodeRecord], window: usize, threshold: f64) -> Option<u64> {
    if window == 0 || records.len() < window {
        return None;
    }
    let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
    let mut sum: f64 = rewards[..window].iter().sum();
    if sum / window as f64 >= threshold {
        return Some(window as u64);
    }
    for end in window..rewards.len() {
        sum += rewards[end] - rewards[end - window];
        // Recompute now and then so rounding drift cannot cross the threshold.
        if end % 1024 == 0 {
            sum = rewards[end + 1 - window..=end].iter().sum();
        }
        if sum / window as f64 >= threshold {
            return Some(end as u64 + 1);
        }
    }
    None
}

/// Non-loss rate over the last `n` records.
pub fn tail_non_loss_rate(records: &[EpisodeRecord], n: usize) -> f64 {
    let tail = &records[records.len().saturating_sub(n)..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().filter(|r| r.outcome != Outcome::Loss).count() as f64 / tail.len() as f64
}

/// Mean and sample standard deviation.
pub fn mean_stddev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(reward: f64, steps: u32) -> EpisodeRecord {
        let outcome = if reward > 0.0 {
            Outcome::Win
        } else if reward < 0.0 {
            Outcome::Loss
        } else {
            Outcome::Draw
        };
        EpisodeRecord {
            index: 0,
            outcome,
            reward,
            steps,
            advice_asked: 0,
            advice_followed: 0,
            wall_ms: 0,
        }
    }

    #[test]
    fn threshold_examples() {
        let ones = vec![rec(1.0, 3); 3];
        assert_eq!(episodes_to_threshold(&ones, 1, 1.0), Some(1));
        let wins = vec![rec(1.0, 3); 300];
        assert_eq!(episodes_to_threshold(&wins, 100, 0.7), Some(100));
        let mut late: Vec<_> = vec![rec(-1.0, 4); 50];
        late.extend(vec![rec(1.0, 3); 200]);
        // Window ending at e holds (e - 50) wins and (100 - (e - 50)) losses.
        assert_eq!(episodes_to_threshold(&late, 100, 0.6), Some(130));
        assert_eq!(episodes_to_threshold(&late[..60], 100, 0.0), None);
    }

    #[test]
    fn returns() {
        let draws = vec![rec(0.0, 5); 10];
        let m = compute_metrics(&draws, 5, 0.6, 0.9);
        assert_eq!(m.undiscounted_return, 0.0);
        assert_eq!(m.episodes_to_threshold, None);
        let mixed = vec![rec(1.0, 3), rec(-1.0, 4), rec(1.0, 5)];
        let m = compute_metrics(&mixed, 1, 1.0, 1.0);
        assert_eq!(m.discounted_return, m.undiscounted_return);
        let m = compute_metrics(&mixed, 1, 1.0, 0.9);
        let expected = 0.9f64.powi(2) - 0.9f64.powi(3) + 0.9f64.powi(4);
        assert!((m.discounted_return - expected).abs() < 1e-12);
        assert_eq!((m.wins, m.losses, m.draws), (2, 1, 0));
    }

    #[test]
    fn mean_and_stddev() {
        let (m, s) = mean_stddev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert!((s - 2.138089935299395).abs() < 1e-12);
    }
}

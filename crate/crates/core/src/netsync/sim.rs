//! Seeded one-way link with latency, jitter and loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::wire::ChannelClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetSimConfig {
    pub latency_ms: f64,
    /// Unreliable messages get a uniform offset in `[-jitter, +jitter]`.
    pub jitter_ms: f64,
    /// Drop probability for unreliable messages.
    pub loss: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid network config: {0}")]
pub struct NetConfigError(String);

impl NetSimConfig {
    pub fn new(latency_ms: f64, jitter_ms: f64, loss: f64, seed: u64) -> Result<Self, NetConfigError> {
        if !(latency_ms >= 0.0 && latency_ms.is_finite()) {
            return Err(NetConfigError(format!("latency {latency_ms} must be >= 0")));
        }
        if !(jitter_ms >= 0.0 && jitter_ms.is_finite()) {
            return Err(NetConfigError(format!("jitter {jitter_ms} must be >= 0")));
        }
        if !(0.0..1.0).contains(&loss) {
            return Err(NetConfigError(format!("loss {loss} must be in [0, 1)")));
        }
        Ok(Self {
            latency_ms,
            jitter_ms,
            loss,
            seed,
        })
    }

    pub fn ideal() -> Self {
        Self {
            latency_ms: 0.0,
            jitter_ms: 0.0,
            loss: 0.0,
            seed: 0,
        }
    }

    /// Parses `latency,jitter,loss` (milliseconds, milliseconds, fraction).
    pub fn parse(spec: &str, seed: u64) -> Result<Self, NetConfigError> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        let [l, j, p] = parts.as_slice() else {
            return Err(NetConfigError(format!(
                "expected latency,jitter,loss, got '{spec}'"
            )));
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| NetConfigError(format!("'{s}' is not a number")))
        };
        Self::new(num(l)?, num(j)?, num(p)?, seed)
    }
}

#[derive(Debug, Clone)]
struct InFlight<T> {
    at_ms: f64,
    seq: u64,
    msg: T,
}

#[derive(Debug, Clone)]
pub struct NetSim<T> {
    cfg: NetSimConfig,
    rng: ChaCha8Rng,
    queue: Vec<InFlight<T>>,
    seq: u64,
    last_reliable_ms: f64,
    sent: u64,
    dropped: u64,
}

impl<T> NetSim<T> {
    pub fn new(cfg: NetSimConfig) -> Self {
        Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            queue: Vec::new(),
            seq: 0,
            last_reliable_ms: f64::NEG_INFINITY,
            sent: 0,
            dropped: 0,
        }
    }

    pub fn config(&self) -> &NetSimConfig {
        &self.cfg
    }

    /// Messages accepted for sending, including dropped ones.
    pub fn sent(&self) -> u64 {
        self.sent
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    pub fn send(&mut self, now_ms: f64, class: ChannelClass, msg: T) {
        self.sent += 1;
        let at_ms = match class {
            ChannelClass::ReliableOrdered => {
                // Never earlier than the previous reliable message.
                let at = (now_ms + self.cfg.latency_ms).max(self.last_reliable_ms);
                self.last_reliable_ms = at;
                at
            }
            ChannelClass::Unreliable => {
                // Both draws happen for every message so the schedule does
                // not depend on which messages were dropped.
                let lost = self.rng.gen::<f64>() < self.cfg.loss;
                let offset = if self.cfg.jitter_ms > 0.0 {
                    self.rng.gen_range(-self.cfg.jitter_ms..=self.cfg.jitter_ms)
                } else {
                    0.0
                };
                if lost {
                    self.dropped += 1;
                    return;
                }
                (now_ms + self.cfg.latency_ms + offset).max(now_ms)
            }
        };
        self.queue.push(InFlight {
            at_ms,
            seq: self.seq,
            msg,
        });
        self.seq += 1;
    }

    /// Removes and returns every message due at or before `now_ms`, in
    /// delivery-time order (send order among equal times).
    pub fn poll(&mut self, now_ms: f64) -> Vec<T> {
        let (mut due, rest): (Vec<_>, Vec<_>) =
            self.queue.drain(..).partition(|m| m.at_ms <= now_ms);
        self.queue = rest;
        due.sort_by(|a, b| a.at_ms.total_cmp(&b.at_ms).then(a.seq.cmp(&b.seq)));
        due.into_iter().map(|m| m.msg).collect()
    }

    /// Delivery times of queued messages, in send order.
    pub fn schedule(&self) -> Vec<f64> {
        self.queue.iter().map(|m| m.at_ms).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_latency_delivery() {
        let mut n = NetSim::new(NetSimConfig::new(100.0, 0.0, 0.0, 1).unwrap());
        n.send(0.0, ChannelClass::Unreliable, 1);
        assert!(n.poll(99.999).is_empty());
        assert_eq!(n.poll(100.0), vec![1]);
    }

    #[test]
    fn reliable_survives_heavy_loss() {
        let mut n = NetSim::new(NetSimConfig::new(50.0, 20.0, 0.999, 3).unwrap());
        for i in 0..100 {
            n.send(f64::from(i), ChannelClass::ReliableOrdered, i);
            n.send(f64::from(i), ChannelClass::Unreliable, 1000 + i);
        }
        let got = n.poll(1e9);
        let reliable: Vec<i32> = got.iter().copied().filter(|v| *v < 1000).collect();
        assert_eq!(reliable, (0..100).collect::<Vec<_>>());
        assert!(got.len() < 110);
    }

    #[test]
    fn seeded_schedule_repeats() {
        let run = || {
            let mut n = NetSim::new(NetSimConfig::new(120.0, 30.0, 0.05, 42).unwrap());
            for i in 0..50 {
                n.send(f64::from(i) * 20.0, ChannelClass::Unreliable, i);
            }
            n.schedule()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn parse_config() {
        let c = NetSimConfig::parse("120, 30,0.05", 9).unwrap();
        assert_eq!((c.latency_ms, c.jitter_ms, c.loss, c.seed), (120.0, 30.0, 0.05, 9));
        assert!(NetSimConfig::parse("1,2", 0).is_err());
        assert!(NetSimConfig::parse("1,2,1.0", 0).is_err());
    }
}

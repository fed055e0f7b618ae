//! In-process session with simulated clients, each behind its own pair of
//! [`NetSim`] links. The clock advances one server tick per [`Cluster::step`].

use std::collections::BTreeMap;

use crate::input::{DeviceProfile, RawEvent, RawKind};
use crate::math::Pose;
use crate::scene::{ClientId, ObjectId, TICK_MS};

use super::replica::ClientReplica;
use super::session::{Outbound, Session};
use super::sim::{NetSim, NetSimConfig};
use super::wire::{ChannelClass, WireMessage};

#[derive(Debug, Clone)]
pub struct SimClient {
    pub id: Option<ClientId>,
    pub profile: DeviceProfile,
    pub replica: ClientReplica,
    up: NetSim<WireMessage>,
    down: NetSim<WireMessage>,
    /// Raw inputs keyed by the cluster tick at which the client sends them.
    script: BTreeMap<u64, Vec<RawKind>>,
    pub received: BTreeMap<&'static str, u64>,
    pub sent: u64,
    /// Rendered poses after each step.
    pub history: Vec<BTreeMap<ObjectId, Pose>>,
    pub keep_history: bool,
}

impl SimClient {
    pub fn received_total(&self) -> u64 {
        self.received.values().sum()
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub session: Session,
    pub clients: Vec<SimClient>,
    tick: u64,
}

impl Cluster {
    pub fn new(session: Session) -> Self {
        Self {
            session,
            clients: Vec::new(),
            tick: 0,
        }
    }

    /// Cluster clock in ticks (equals the server tick).
    pub fn tick(&self) -> u64 {
        self.tick
    }

    fn now_ms(&self) -> f64 {
        (self.tick * TICK_MS) as f64
    }

    /// Starts a client; its Hello leaves immediately. Uplink and downlink
    /// use seeds derived from `net.seed` and the client index.
    pub fn connect(&mut self, profile: DeviceProfile, net: NetSimConfig) -> usize {
        let idx = self.clients.len();
        let seeded = |k: u64| NetSimConfig {
            seed: net.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(2 * idx as u64 + k),
            ..net
        };
        let mut up = NetSim::new(seeded(0));
        up.send(
            self.now_ms(),
            ChannelClass::ReliableOrdered,
            WireMessage::Hello {
                session: self.session.name().to_string(),
                device_profile: profile.clone(),
            },
        );
        self.clients.push(SimClient {
            id: None,
            profile,
            replica: ClientReplica::default(),
            up,
            down: NetSim::new(seeded(1)),
            script: BTreeMap::new(),
            received: BTreeMap::new(),
            sent: 1,
            history: Vec::new(),
            keep_history: false,
        });
        idx
    }

    /// Queues raw events for client `idx`; each is sent at its `tick`.
    pub fn schedule(&mut self, idx: usize, events: impl IntoIterator<Item = RawEvent>) {
        let c = &mut self.clients[idx];
        for e in events {
            c.script.entry(e.tick).or_default().push(e.raw);
        }
    }

    pub fn disconnect(&mut self, idx: usize) {
        let now = self.now_ms();
        let c = &mut self.clients[idx];
        c.up.send(now, ChannelClass::ReliableOrdered, WireMessage::Bye);
        c.sent += 1;
    }

    /// True when no scripted input is left and every uplink is drained.
    /// Downlinks are never idle while keyframes keep flowing.
    pub fn idle(&self) -> bool {
        self.clients
            .iter()
            .all(|c| c.script.is_empty() && c.up.in_flight() == 0)
    }

    pub fn step(&mut self) {
        let now = self.now_ms();
        let tick = self.tick;

        for c in self.clients.iter_mut() {
            if let Some(raws) = c.script.remove(&tick) {
                for raw in raws {
                    let ev = RawEvent {
                        tick,
                        client: c.id.unwrap_or(0),
                        raw,
                    };
                    c.up.send(now, ChannelClass::ReliableOrdered, WireMessage::Input(ev));
                    c.sent += 1;
                }
            }
        }

        let mut outbound: Vec<(Option<usize>, Outbound)> = Vec::new();
        for i in 0..self.clients.len() {
            for msg in self.clients[i].up.poll(now) {
                let from = self.clients[i].id;
                let (id, out) = self.session.receive(from, msg);
                self.clients[i].id = id;
                outbound.extend(out.into_iter().map(|o| (Some(i), o)));
            }
        }
        outbound.extend(self.session.step().into_iter().map(|o| (None, o)));

        for (sender, o) in outbound {
            match o {
                Outbound::Reply(m) => {
                    if let Some(i) = sender {
                        let c = &mut self.clients[i];
                        c.down.send(now, m.channel(), m);
                    }
                }
                Outbound::To(id, m) => {
                    if let Some(c) = self.clients.iter_mut().find(|c| c.id == Some(id)) {
                        c.down.send(now, m.channel(), m);
                    }
                }
                Outbound::Broadcast(m) => {
                    for c in self.clients.iter_mut().filter(|c| c.id.is_some()) {
                        c.down.send(now, m.channel(), m.clone());
                    }
                }
            }
        }

        self.tick += 1;
        let now = self.now_ms();
        for c in self.clients.iter_mut() {
            for m in c.down.poll(now) {
                *c.received.entry(m.tag()).or_default() += 1;
                c.replica.apply(&m);
            }
            let rendered = c.replica.render(now);
            if c.keep_history {
                c.history.push(rendered.clone());
            }
        }
    }

    pub fn run(&mut self, ticks: u64) {
        for _ in 0..ticks {
            self.step();
        }
    }
}

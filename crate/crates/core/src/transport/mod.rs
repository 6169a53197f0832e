//! Message schema and delivery between the coordinator and the MAV agents.
//!
//! Two interchangeable transports implement [`Transport`]: an in-process
//! channel bus and line-delimited JSON over TCP. Both give FIFO, loss-free
//! per-link delivery; simulated time never crosses the wire.

mod inproc;
mod message;
mod tcp;

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::sync::OnceLock;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

pub use inproc::InProcess;
pub use message::{decode, encode, Kind, Message, Payload};
pub use tcp::{serve_agent, Tcp};

use crate::registry::{Registry, UnknownName};
use crate::MavId;

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("malformed line at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("unknown message kind `{0}`")]
    UnknownKind(String),
    #[error("field `{field}`: {reason}")]
    Schema { field: &'static str, reason: String },
    #[error("connection failure: {0}")]
    Connection(#[from] std::io::Error),
    #[error("no route to MAV {0}")]
    NoRoute(MavId),
    #[error("peer disconnected")]
    Disconnected,
    #[error("timed out waiting for reports of seq {seq} from MAVs {missing:?}")]
    Timeout { seq: u64, missing: Vec<MavId> },
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error(transparent)]
    Unknown(#[from] UnknownName),
}

/// A MAV-side message handler: everything a slave (or the master's own
/// flight stack) does in response to the coordinator.
pub trait Endpoint: Send + 'static {
    fn mav_id(&self) -> MavId;
    fn handle(&mut self, msg: Message) -> Vec<Message>;
}

pub trait Publisher: Send {
    /// Delivers `msg` to the MAV named by `msg.mav_id`.
    fn publish(&mut self, msg: Message) -> Result<(), TransportError>;
    /// Closes every outgoing link; agents exit once drained.
    fn close(&mut self);
}

pub trait Collector: Send {
    fn recv_timeout(&mut self, timeout: Duration) -> Result<Message, TransportError>;

    /// Blocks until every MAV in `expected` has reported a cost for `seq`.
    ///
    /// Returns every message received meanwhile, in arrival order.
    fn wait_for_all(
        &mut self,
        seq: u64,
        expected: &BTreeSet<MavId>,
        timeout: Duration,
    ) -> Result<Vec<Message>, TransportError> {
        let deadline = Instant::now() + timeout;
        let mut pending = expected.clone();
        let mut out = Vec::new();
        while !pending.is_empty() {
            let left = deadline.saturating_duration_since(Instant::now());
            let msg = match self.recv_timeout(left) {
                Ok(m) => m,
                Err(TransportError::Timeout { .. }) => {
                    return Err(TransportError::Timeout {
                        seq,
                        missing: pending.into_iter().collect(),
                    })
                }
                Err(e) => return Err(e),
            };
            if matches!(msg.payload, Payload::CostReport { .. }) && msg.seq == seq {
                pending.remove(&msg.mav_id);
            }
            out.push(msg);
        }
        Ok(out)
    }
}

/// An open publisher/collector pair plus the threads serving it.
pub struct Link {
    pub publisher: Box<dyn Publisher>,
    pub collector: Box<dyn Collector>,
    workers: Vec<JoinHandle<()>>,
}

impl Link {
    pub(crate) fn new(
        publisher: Box<dyn Publisher>,
        collector: Box<dyn Collector>,
        workers: Vec<JoinHandle<()>>,
    ) -> Self {
        Self {
            publisher,
            collector,
            workers,
        }
    }

    /// Closes outgoing links and joins the serving threads.
    pub fn shutdown(mut self) {
        self.publisher.close();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportConfig {
    /// Address the TCP master listens on; port 0 picks a free port.
    pub listen: SocketAddr,
    /// When set, TCP mode waits for this many external agents instead of
    /// spawning local ones.
    pub external_agents: Option<usize>,
    pub accept_timeout: Duration,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 0)),
            external_agents: None,
            accept_timeout: Duration::from_secs(30),
        }
    }
}

pub trait Transport: Send + Sync {
    fn name(&self) -> &'static str;
    /// Connects the coordinator to `endpoints` (ignored for external agents).
    fn open(&self, endpoints: Vec<Box<dyn Endpoint>>) -> Result<Link, TransportError>;
}

pub fn transport_registry() -> &'static Registry<TransportConfig, dyn Transport> {
    static REG: OnceLock<Registry<TransportConfig, dyn Transport>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<TransportConfig, dyn Transport> = Registry::new("transport");
        reg.register("inproc", |_| Box::new(InProcess))
            .register("tcp", |cfg| Box::new(Tcp::new(cfg)));
        reg
    })
}

/// Opens a link over the transport registered as `mode`.
pub fn channel_pair(
    mode: &str,
    config: TransportConfig,
    endpoints: Vec<Box<dyn Endpoint>>,
) -> Result<Link, TransportError> {
    transport_registry().build(mode, config)?.open(endpoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::swarm::MavState;

    /// Replies to START_FLIGHT with a report whose cost is `mav_id * seq`,
    /// echoing any other message back.
    struct Echo(MavId);

    impl Endpoint for Echo {
        fn mav_id(&self) -> MavId {
            self.0
        }
        fn handle(&mut self, msg: Message) -> Vec<Message> {
            match msg.payload {
                Payload::StartFlight { .. } => vec![
                    Message::state_notify(msg.seq, self.0, MavState::Flying),
                    Message::cost_report(msg.seq, self.0, f64::from(self.0) * msg.seq as f64),
                    Message::state_notify(msg.seq, self.0, MavState::Idle),
                ],
                _ => vec![msg],
            }
        }
    }

    fn endpoints(n: MavId) -> Vec<Box<dyn Endpoint>> {
        (1..=n)
            .map(|i| Box::new(Echo(i)) as Box<dyn Endpoint>)
            .collect()
    }

    fn fifo(mode: &str) {
        let mut link = channel_pair(mode, TransportConfig::default(), endpoints(1)).unwrap();
        let sent: Vec<Message> = (0..3)
            .map(|i| Message::gain_update(i, 1, 0.1 * i as f64, 0.5))
            .collect();
        for m in &sent {
            link.publisher.publish(*m).unwrap();
        }
        let got: Vec<Message> = (0..3)
            .map(|_| link.collector.recv_timeout(Duration::from_secs(5)).unwrap())
            .collect();
        assert_eq!(got, sent);
        link.shutdown();
    }

    fn barrier(mode: &str) {
        let mut link = channel_pair(mode, TransportConfig::default(), endpoints(2)).unwrap();
        // Start MAV 2 first so its report tends to arrive first.
        link.publisher
            .publish(Message::start_flight(5, 2, 0))
            .unwrap();
        link.publisher
            .publish(Message::start_flight(5, 1, 0))
            .unwrap();
        let expected: BTreeSet<MavId> = [1, 2].into();
        let msgs = link
            .collector
            .wait_for_all(5, &expected, Duration::from_secs(5))
            .unwrap();
        let reports: BTreeSet<MavId> = msgs
            .iter()
            .filter(|m| m.kind() == Kind::CostReport)
            .map(|m| m.mav_id)
            .collect();
        assert_eq!(reports, expected);
        link.shutdown();
    }

    #[test]
    fn inproc_fifo() {
        fifo("inproc");
    }

    #[test]
    fn tcp_fifo() {
        fifo("tcp");
    }

    #[test]
    fn inproc_barrier() {
        barrier("inproc");
    }

    #[test]
    fn tcp_barrier() {
        barrier("tcp");
    }

    #[test]
    fn wait_times_out_naming_missing() {
        let mut link = channel_pair("inproc", TransportConfig::default(), endpoints(2)).unwrap();
        link.publisher
            .publish(Message::start_flight(1, 1, 0))
            .unwrap();
        let err = link
            .collector
            .wait_for_all(1, &[1, 2].into(), Duration::from_millis(200))
            .unwrap_err();
        assert!(
            matches!(err, TransportError::Timeout { seq: 1, ref missing } if missing == &vec![2])
        );
        link.shutdown();
    }

    #[test]
    fn unknown_mode() {
        assert!(matches!(
            channel_pair("carrier-pigeon", TransportConfig::default(), endpoints(1)),
            Err(TransportError::Unknown(_))
        ));
    }

    #[test]
    fn publish_to_missing_mav_fails() {
        let mut link = channel_pair("inproc", TransportConfig::default(), endpoints(1)).unwrap();
        assert!(matches!(
            link.publisher.publish(Message::start_flight(1, 7, 0)),
            Err(TransportError::NoRoute(7))
        ));
        link.shutdown();
    }
}

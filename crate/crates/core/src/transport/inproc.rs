use std::collections::BTreeMap;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::Duration;

use super::{Collector, Endpoint, Link, Message, Publisher, Transport, TransportError};
use crate::MavId;

/// Channel bus: one worker thread per endpoint, messages passed by value.
pub struct InProcess;

struct ChannelPublisher {
    routes: BTreeMap<MavId, Sender<Message>>,
}

impl Publisher for ChannelPublisher {
    fn publish(&mut self, msg: Message) -> Result<(), TransportError> {
        self.routes
            .get(&msg.mav_id)
            .ok_or(TransportError::NoRoute(msg.mav_id))?
            .send(msg)
            .map_err(|_| TransportError::Disconnected)
    }

    fn close(&mut self) {
        self.routes.clear();
    }
}

struct ChannelCollector {
    rx: Receiver<Message>,
}

impl Collector for ChannelCollector {
    fn recv_timeout(&mut self, timeout: Duration) -> Result<Message, TransportError> {
        self.rx.recv_timeout(timeout).map_err(|e| match e {
            RecvTimeoutError::Timeout => TransportError::Timeout {
                seq: 0,
                missing: Vec::new(),
            },
            RecvTimeoutError::Disconnected => TransportError::Disconnected,
        })
    }
}

impl Transport for InProcess {
    fn name(&self) -> &'static str {
        "inproc"
    }

    fn open(&self, endpoints: Vec<Box<dyn Endpoint>>) -> Result<Link, TransportError> {
        let (up_tx, up_rx) = mpsc::channel();
        let mut routes = BTreeMap::new();
        let mut workers = Vec::new();
        for mut ep in endpoints {
            let (tx, rx) = mpsc::channel::<Message>();
            routes.insert(ep.mav_id(), tx);
            let up = up_tx.clone();
            workers.push(thread::spawn(move || {
                for msg in rx {
                    for reply in ep.handle(msg) {
                        if up.send(reply).is_err() {
                            return;
                        }
                    }
                }
            }));
        }
        Ok(Link::new(
            Box::new(ChannelPublisher { routes }),
            Box::new(ChannelCollector { rx: up_rx }),
            workers,
        ))
    }
}

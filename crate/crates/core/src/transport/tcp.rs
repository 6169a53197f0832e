use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::{
    decode, encode, Collector, Endpoint, Link, Message, Payload, Publisher, Transport,
    TransportConfig, TransportError,
};
use crate::swarm::MavState;
use crate::MavId;

/// Line-delimited JSON over TCP; the coordinator listens, one connection
/// per MAV. Each agent introduces itself with `STATE_NOTIFY IDLE, seq 0`.
pub struct Tcp {
    config: TransportConfig,
}

impl Tcp {
    pub fn new(config: TransportConfig) -> Self {
        Self { config }
    }
}

fn read_message(reader: &mut impl BufRead) -> Result<Option<Message>, TransportError> {
    let mut line = Vec::new();
    if reader.read_until(b'\n', &mut line)? == 0 {
        return Ok(None);
    }
    decode(&line).map(Some)
}

fn write_message(stream: &mut TcpStream, msg: &Message) -> Result<(), TransportError> {
    stream.write_all(&encode(msg))?;
    Ok(())
}

/// Runs `endpoint` against the coordinator at `addr` until it hangs up.
pub fn serve_agent(
    addr: SocketAddr,
    mut endpoint: Box<dyn Endpoint>,
) -> Result<(), TransportError> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_nodelay(true)?;
    let id = endpoint.mav_id();
    write_message(&mut stream, &Message::state_notify(0, id, MavState::Idle))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    while let Some(msg) = read_message(&mut reader)? {
        for reply in endpoint.handle(msg) {
            write_message(&mut stream, &reply)?;
        }
    }
    Ok(())
}

struct TcpPublisher {
    routes: BTreeMap<MavId, TcpStream>,
}

impl Publisher for TcpPublisher {
    fn publish(&mut self, msg: Message) -> Result<(), TransportError> {
        let stream = self
            .routes
            .get_mut(&msg.mav_id)
            .ok_or(TransportError::NoRoute(msg.mav_id))?;
        write_message(stream, &msg)
    }

    fn close(&mut self) {
        for (_, s) in std::mem::take(&mut self.routes) {
            let _ = s.shutdown(Shutdown::Write);
        }
    }
}

struct TcpCollector {
    rx: Receiver<Result<Message, TransportError>>,
}

impl Collector for TcpCollector {
    fn recv_timeout(&mut self, timeout: Duration) -> Result<Message, TransportError> {
        match self.rx.recv_timeout(timeout) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => Err(TransportError::Timeout {
                seq: 0,
                missing: Vec::new(),
            }),
            Err(RecvTimeoutError::Disconnected) => Err(TransportError::Disconnected),
        }
    }
}

fn accept_with_deadline(
    listener: &TcpListener,
    deadline: Instant,
) -> Result<TcpStream, TransportError> {
    listener.set_nonblocking(true)?;
    loop {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false)?;
                return Ok(stream);
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(TransportError::Handshake(
                        "timed out waiting for agents".into(),
                    ));
                }
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

fn spawn_reader(
    mut reader: BufReader<TcpStream>,
    up: Sender<Result<Message, TransportError>>,
) -> JoinHandle<()> {
    thread::spawn(move || loop {
        match read_message(&mut reader) {
            Ok(Some(m)) => {
                if up.send(Ok(m)).is_err() {
                    return;
                }
            }
            Ok(None) => return,
            Err(e) => {
                let _ = up.send(Err(e));
                return;
            }
        }
    })
}

impl Transport for Tcp {
    fn name(&self) -> &'static str {
        "tcp"
    }

    fn open(&self, endpoints: Vec<Box<dyn Endpoint>>) -> Result<Link, TransportError> {
        let listener = TcpListener::bind(self.config.listen)?;
        let addr = listener.local_addr()?;
        let expected = self.config.external_agents.unwrap_or(endpoints.len());

        let mut workers = Vec::new();
        if self.config.external_agents.is_none() {
            for ep in endpoints {
                workers.push(thread::spawn(move || {
                    if let Err(e) = serve_agent(addr, ep) {
                        log::error!("agent stopped: {e}");
                    }
                }));
            }
        } else {
            log::info!("waiting for {expected} agents on {addr}");
        }

        let deadline = Instant::now() + self.config.accept_timeout;
        let (up_tx, up_rx) = mpsc::channel();
        let mut routes = BTreeMap::new();
        for _ in 0..expected {
            let stream = accept_with_deadline(&listener, deadline)?;
            stream.set_nodelay(true)?;
            let mut reader = BufReader::new(stream.try_clone()?);
            let hello = read_message(&mut reader)?
                .ok_or_else(|| TransportError::Handshake("agent closed before hello".into()))?;
            let Payload::StateNotify {
                state: MavState::Idle,
            } = hello.payload
            else {
                return Err(TransportError::Handshake(format!(
                    "expected STATE_NOTIFY IDLE, got {}",
                    hello.kind().as_str()
                )));
            };
            if routes.insert(hello.mav_id, stream).is_some() {
                return Err(TransportError::Handshake(format!(
                    "duplicate MAV id {}",
                    hello.mav_id
                )));
            }
            workers.push(spawn_reader(reader, up_tx.clone()));
        }
        Ok(Link::new(
            Box::new(TcpPublisher { routes }),
            Box::new(TcpCollector { rx: up_rx }),
            workers,
        ))
    }
}

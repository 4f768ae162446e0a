//! Networked front end for the board engine.
//!
//! A single engine thread owns the [`Session`] and scans it at 20 Hz.
//! Connection threads only read lines and forward them; all writes to
//! clients happen on the engine thread, so every client sees the same
//! totally ordered notification stream.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use gridboard::session::{
    Session, SessionConfig, TraceHeader, TraceRecord, TraceWriter, WireEvent, WireNotification,
    SCAN_PERIOD_MS,
};

enum Msg {
    Join(u64, TcpStream),
    Line(u64, String),
    Leave(u64),
    Stop,
}

/// A running server. Dropping it without [`ServerHandle::shutdown`] leaves
/// the threads running until the process exits.
pub struct ServerHandle {
    addr: SocketAddr,
    tx: Sender<Msg>,
    stopping: Arc<AtomicBool>,
    engine: JoinHandle<io::Result<()>>,
    acceptor: JoinHandle<()>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the engine stops, which only happens on error.
    pub fn wait(self) -> io::Result<()> {
        let result = self.engine.join().expect("engine thread panicked");
        self.stopping.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        let _ = self.acceptor.join();
        result
    }

    pub fn shutdown(self) -> io::Result<()> {
        let _ = self.tx.send(Msg::Stop);
        self.wait()
    }
}

/// Binds, writes the trace header and starts serving. `trace` receives one
/// line per accepted event, flushed immediately.
pub fn start(
    addr: impl ToSocketAddrs,
    config: SessionConfig,
    trace: Option<&Path>,
) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let session =
        Session::new(config).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let header = TraceHeader::new(config.seed, config.diode_mode);
    let writer = match trace {
        Some(path) => Some(TraceWriter::new(File::create(path)?, &header)?),
        None => None,
    };

    let (tx, rx) = mpsc::channel();
    let stopping = Arc::new(AtomicBool::new(false));
    let engine = thread::Builder::new()
        .name("engine".into())
        .spawn(move || Engine::new(session, writer).run(rx))?;
    let acceptor = {
        let tx = tx.clone();
        let stopping = Arc::clone(&stopping);
        thread::Builder::new()
            .name("accept".into())
            .spawn(move || accept_loop(listener, tx, stopping))?
    };
    log::info!("listening on {addr}");
    Ok(ServerHandle {
        addr,
        tx,
        stopping,
        engine,
        acceptor,
    })
}

fn accept_loop(listener: TcpListener, tx: Sender<Msg>, stopping: Arc<AtomicBool>) {
    let mut next_id = 0;
    for stream in listener.incoming() {
        if stopping.load(Ordering::SeqCst) {
            break;
        }
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        next_id += 1;
        let id = next_id;
        let reader = match stream.try_clone() {
            Ok(r) => r,
            Err(e) => {
                log::warn!("client {id}: {e}");
                continue;
            }
        };
        if tx.send(Msg::Join(id, stream)).is_err() {
            break;
        }
        let tx = tx.clone();
        let spawned = thread::Builder::new()
            .name(format!("client-{id}"))
            .spawn(move || {
                for line in BufReader::new(reader).lines() {
                    let Ok(line) = line else { break };
                    if line.trim().is_empty() {
                        continue;
                    }
                    if tx.send(Msg::Line(id, line)).is_err() {
                        return;
                    }
                }
                let _ = tx.send(Msg::Leave(id));
            });
        if let Err(e) = spawned {
            log::warn!("client {id}: {e}");
        }
    }
}

struct Engine {
    session: Session,
    trace: Option<TraceWriter<File>>,
    clients: BTreeMap<u64, TcpStream>,
}

impl Engine {
    fn new(session: Session, trace: Option<TraceWriter<File>>) -> Self {
        Engine {
            session,
            trace,
            clients: BTreeMap::new(),
        }
    }

    fn run(mut self, rx: Receiver<Msg>) -> io::Result<()> {
        let period = Duration::from_millis(SCAN_PERIOD_MS);
        let mut deadline = Instant::now() + period;
        loop {
            let wait = deadline.saturating_duration_since(Instant::now());
            match rx.recv_timeout(wait) {
                Ok(Msg::Join(id, stream)) => {
                    log::info!("client {id} joined");
                    self.clients.insert(id, stream);
                    let n = self.session.join_notification();
                    self.send_to(id, &n);
                }
                Ok(Msg::Line(id, line)) => self.handle_line(id, &line)?,
                Ok(Msg::Leave(id)) => {
                    log::info!("client {id} left");
                    self.drop_client(id);
                }
                Ok(Msg::Stop) | Err(RecvTimeoutError::Disconnected) => break,
                Err(RecvTimeoutError::Timeout) => {
                    let out = self.session.scan();
                    self.broadcast(&out);
                    deadline += period;
                    // after a long stall, resume the cadence instead of bursting
                    if deadline < Instant::now() {
                        deadline = Instant::now() + period;
                    }
                }
            }
        }
        for stream in self.clients.values() {
            let _ = stream.shutdown(Shutdown::Both);
        }
        Ok(())
    }

    fn handle_line(&mut self, id: u64, line: &str) -> io::Result<()> {
        let tick = self.session.tick();
        let event = match WireEvent::parse(line) {
            Ok(e) => e,
            Err(e) => {
                let n = WireNotification::Error {
                    tick,
                    message: format!("invalid event: {e}"),
                };
                self.send_to(id, &n);
                return Ok(());
            }
        };
        match self.session.apply_event(&event) {
            Ok(out) => {
                if let Some(trace) = &mut self.trace {
                    trace.append(&TraceRecord { tick, event })?;
                }
                self.broadcast(&out);
            }
            Err(rejection) => {
                let n = rejection.to_notification(tick);
                self.send_to(id, &n);
            }
        }
        Ok(())
    }

    fn send_to(&mut self, id: u64, n: &WireNotification) {
        let Some(stream) = self.clients.get_mut(&id) else {
            return;
        };
        if write_line(stream, n).is_err() {
            self.drop_client(id);
        }
    }

    fn broadcast(&mut self, out: &[WireNotification]) {
        if out.is_empty() {
            return;
        }
        let mut text = String::new();
        for n in out {
            text.push_str(&n.to_line());
            text.push('\n');
        }
        let failed: Vec<u64> = self
            .clients
            .iter_mut()
            .filter_map(|(&id, stream)| stream.write_all(text.as_bytes()).err().map(|_| id))
            .collect();
        for id in failed {
            self.drop_client(id);
        }
    }

    fn drop_client(&mut self, id: u64) {
        if let Some(stream) = self.clients.remove(&id) {
            let _ = stream.shutdown(Shutdown::Both);
        }
    }
}

fn write_line(stream: &mut TcpStream, n: &WireNotification) -> io::Result<()> {
    let mut line = n.to_line();
    line.push('\n');
    stream.write_all(line.as_bytes())
}

//! HTTP front end: `GET /session` upgrades to the length-prefixed session
//! protocol, anything else is served from the static directory.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Component, Path, PathBuf};
use std::sync::mpsc::{self, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use elastica_core::session::{
    new_session_id, read_message, write_message, ErrorFrame, Message, Session,
    SessionConfig, SessionStatus,
};

pub const UPGRADE_PROTOCOL: &str = "elastica-session";
const MAX_HEAD_BYTES: usize = 16 * 1024;
const POLL: Duration = Duration::from_millis(20);
const WRITE_BATCH: usize = 16;

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    /// Root of the UI bundle; `/` maps to `index.html`.
    pub static_dir: Option<PathBuf>,
    pub session: SessionConfig,
}

/// Live sessions by id.
#[derive(Debug, Default)]
pub struct Registry {
    sessions: Mutex<HashMap<String, SessionStatus>>,
}

impl Registry {
    pub fn len(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn status(&self, id: &str) -> Option<SessionStatus> {
        self.sessions.lock().unwrap().get(id).copied()
    }

    fn set(&self, id: &str, status: SessionStatus) {
        self.sessions.lock().unwrap().insert(id.to_string(), status);
    }

    fn remove(&self, id: &str) {
        self.sessions.lock().unwrap().remove(id);
    }
}

pub struct Server {
    listener: TcpListener,
    config: Arc<ServerConfig>,
    registry: Arc<Registry>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, config: ServerConfig) -> io::Result<Self> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            config: Arc::new(config),
            registry: Arc::new(Registry::default()),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn registry(&self) -> Arc<Registry> {
        Arc::clone(&self.registry)
    }

    /// Accepts connections forever, one thread each.
    pub fn serve(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            let config = Arc::clone(&self.config);
            let registry = Arc::clone(&self.registry);
            thread::spawn(move || {
                let peer = stream.peer_addr().ok();
                if let Err(e) = handle_connection(stream, &config, &registry) {
                    log::debug!("connection {peer:?} ended: {e}");
                }
            });
        }
        Ok(())
    }

    pub fn spawn(self) -> JoinHandle<io::Result<()>> {
        thread::spawn(move || self.serve())
    }
}

struct Request {
    method: String,
    path: String,
    headers: Vec<(String, String)>,
}

impl Request {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    fn wants_upgrade(&self) -> bool {
        let connection = self.header("connection").unwrap_or("");
        let upgrade = self.header("upgrade").unwrap_or("");
        connection
            .split(',')
            .any(|t| t.trim().eq_ignore_ascii_case("upgrade"))
            && upgrade.eq_ignore_ascii_case(UPGRADE_PROTOCOL)
    }
}

fn read_head<R: BufRead>(r: &mut R) -> io::Result<Option<Request>> {
    let mut head = Vec::new();
    loop {
        let n = r.read_until(b'\n', &mut head)?;
        if n == 0 {
            return if head.is_empty() {
                Ok(None)
            } else {
                Err(io::ErrorKind::UnexpectedEof.into())
            };
        }
        if head.ends_with(b"\r\n\r\n") || head.ends_with(b"\n\n") {
            break;
        }
        if head.len() > MAX_HEAD_BYTES {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "request head too large"));
        }
    }
    let mut headers = [httparse::EMPTY_HEADER; 64];
    let mut req = httparse::Request::new(&mut headers);
    match req.parse(&head) {
        Ok(httparse::Status::Complete(_)) => {}
        _ => return Err(io::Error::new(io::ErrorKind::InvalidData, "malformed request")),
    }
    Ok(Some(Request {
        method: req.method.unwrap_or("").to_string(),
        path: req.path.unwrap_or("/").to_string(),
        headers: req
            .headers
            .iter()
            .map(|h| (h.name.to_string(), String::from_utf8_lossy(h.value).into_owned()))
            .collect(),
    }))
}

fn respond(stream: &mut TcpStream, status: &str, content_type: &str, body: &[u8], head_only: bool) -> io::Result<()> {
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    if !head_only {
        stream.write_all(body)?;
    }
    stream.flush()
}

/// Maps a URL path inside `root`, refusing anything that climbs out of it.
fn static_path(root: &Path, url: &str) -> Option<PathBuf> {
    let path = url.split(['?', '#']).next().unwrap_or("/");
    let mut out = root.to_path_buf();
    for comp in Path::new(path.trim_start_matches('/')).components() {
        match comp {
            Component::Normal(c) => out.push(c),
            Component::CurDir => {}
            _ => return None,
        }
    }
    if path.ends_with('/') || out == root {
        out.push("index.html");
    }
    Some(out)
}

fn serve_static(stream: &mut TcpStream, req: &Request, config: &ServerConfig) -> io::Result<()> {
    let head_only = req.method == "HEAD";
    if req.method != "GET" && !head_only {
        return respond(stream, "405 Method Not Allowed", "text/plain", b"method not allowed\n", false);
    }
    let file = config
        .static_dir
        .as_deref()
        .and_then(|root| static_path(root, &req.path))
        .filter(|p| p.is_file());
    match file.map(|p| (fs::read(&p), p)) {
        Some((Ok(body), p)) => {
            let mime = mime_guess::from_path(&p).first_or_octet_stream();
            respond(stream, "200 OK", mime.essence_str(), &body, head_only)
        }
        _ => respond(stream, "404 Not Found", "text/plain", b"not found\n", head_only),
    }
}

fn handle_connection(mut stream: TcpStream, config: &ServerConfig, registry: &Registry) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let Some(req) = read_head(&mut reader)? else {
        return Ok(());
    };
    let path = req.path.split('?').next().unwrap_or("");
    if path != "/session" {
        return serve_static(&mut stream, &req, config);
    }
    if !req.wants_upgrade() {
        let body = format!("/session requires Connection: Upgrade and Upgrade: {UPGRADE_PROTOCOL}\n");
        return respond(&mut stream, "426 Upgrade Required", "text/plain", body.as_bytes(), false);
    }
    let id = new_session_id();
    write!(
        stream,
        "HTTP/1.1 101 Switching Protocols\r\nConnection: Upgrade\r\nUpgrade: {UPGRADE_PROTOCOL}\r\nX-Session-Id: {id}\r\n\r\n"
    )?;
    stream.flush()?;
    registry.set(&id, SessionStatus::Drawing);
    log::info!("session {id} opened");
    let closer = stream.try_clone()?;
    let result = session_loop(stream, reader, &id, config, registry);
    // The reader thread holds a clone; shut the socket so the peer sees EOF.
    let _ = closer.shutdown(Shutdown::Both);
    registry.remove(&id);
    log::info!("session {id} closed");
    result
}

enum Incoming {
    Message(Message),
    Malformed(String),
}

fn session_loop<R: Read + Send + 'static>(
    mut stream: TcpStream,
    mut reader: R,
    id: &str,
    config: &ServerConfig,
    registry: &Registry,
) -> io::Result<()> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || loop {
        match read_message(&mut reader) {
            Ok(Some(m)) => {
                if tx.send(Incoming::Message(m)).is_err() {
                    return;
                }
            }
            Ok(None) => return,
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                let _ = tx.send(Incoming::Malformed(e.to_string()));
                return;
            }
            Err(_) => return,
        }
    });
    let mut session = Session::new(id, config.session);
    let mut last_activity = Instant::now();
    let mut client_gone = false;
    let reply_error = |stream: &mut TcpStream, code: &str, message: String| {
        write_message(
            stream,
            &Message::Error(ErrorFrame {
                session_id: id.to_string(),
                code: code.into(),
                message,
                iteration: None,
            }),
        )
    };
    loop {
        loop {
            match rx.try_recv() {
                Ok(Incoming::Message(Message::Control(c))) => {
                    last_activity = Instant::now();
                    session.handle(c);
                }
                Ok(Incoming::Message(other)) => {
                    let kind = match other {
                        Message::Frame(_) => "frame",
                        Message::Error(_) => "error",
                        Message::Done(_) => "done",
                        Message::Control(_) => unreachable!(),
                    };
                    reply_error(&mut stream, "InvalidControl", format!("clients may only send control messages, got {kind}"))?;
                }
                Ok(Incoming::Malformed(e)) => {
                    reply_error(&mut stream, "BadMessage", e)?;
                    client_gone = true;
                    break;
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    client_gone = true;
                    break;
                }
            }
        }
        if client_gone {
            session.shutdown();
            return Ok(());
        }
        registry.set(id, session.status());
        if session.status() == SessionStatus::Drawing && last_activity.elapsed() > config.session.idle_timeout {
            reply_error(&mut stream, "IdleTimeout", "no curve submitted".into())?;
            return Ok(());
        }
        // Bounded batch so incoming controls are looked at regularly.
        for _ in 0..WRITE_BATCH {
            let Some(msg) = session.next_message(POLL) else {
                break;
            };
            let done = matches!(msg, Message::Done(_));
            write_message(&mut stream, &msg)?;
            if done {
                registry.set(id, session.status());
                session.shutdown();
                return Ok(());
            }
        }
    }
}

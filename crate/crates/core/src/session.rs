//! Live descent sessions, independent of the transport. A session owns one
//! engine thread; controls are applied between steps and messages leave
//! through a bounded outbox that drops stale frames when the reader lags.

use std::collections::VecDeque;
use std::io::{self, Read, Write};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::descent::{
    classify, initial_step, perturb, step_from, ClassTag, DescentParams, DescentStep,
    FitDiagnostics, NormalFormClass,
};
use crate::error::ElasticaError;
use crate::geometry::{ingest, turning_profile, PolyCurve, Vec2};

pub const HISTORY_CAPACITY: usize = 10_000;
pub const OUTBOX_CAPACITY: usize = 64;
pub const MAX_MESSAGE_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionStatus {
    Drawing,
    Running,
    Paused,
    Quiescent,
    Failed,
}

impl SessionStatus {
    pub fn can_become(self, next: SessionStatus) -> bool {
        use SessionStatus::*;
        matches!(
            (self, next),
            (Drawing, Running)
                | (Drawing, Failed)
                | (Running, Paused)
                | (Paused, Running)
                | (Running | Paused, Quiescent | Failed)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, SessionStatus::Quiescent | SessionStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Control {
    /// Submits the drawn trail. Missing params take their defaults.
    Start {
        points: Vec<Vec2>,
        #[serde(default)]
        params: DescentParams,
    },
    Pause,
    Resume,
    SetSnapshotRate {
        every: u64,
    },
    Perturb {
        seed: u64,
    },
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Frame {
    pub session_id: String,
    pub iteration: u64,
    pub vertices: Vec<Vec2>,
    pub energy_discrete: f64,
    pub whitney_index: i64,
    pub max_displacement: f64,
    /// What the curve would classify as if it stopped here.
    pub classification: ClassTag,
    pub status: SessionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorFrame {
    pub session_id: String,
    /// `CuspDetected`, `IndexBroken`, `Unconverged`, `IdleTimeout`,
    /// `InvalidControl`, `InvalidParams`, `DegenerateInput`, ...
    pub code: String,
    pub message: String,
    pub iteration: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DoneFrame {
    pub session_id: String,
    pub status: SessionStatus,
    pub class: NormalFormClass,
    pub iterations: u64,
    pub energy_discrete: f64,
    pub whitney_index: i64,
    pub quiescent: bool,
    pub stopped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Frame(Frame),
    Control(Control),
    Error(ErrorFrame),
    Done(DoneFrame),
}

/// 4-byte big-endian length, then the JSON text.
pub fn encode_message(msg: &Message) -> Vec<u8> {
    let body = serde_json::to_vec(msg).expect("messages serialize");
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> io::Result<()> {
    w.write_all(&encode_message(msg))?;
    w.flush()
}

/// `Ok(None)` on a clean end of stream between messages.
pub fn read_message<R: Read>(r: &mut R) -> io::Result<Option<Message>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(io::ErrorKind::UnexpectedEof.into()),
            k => got += k,
        }
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_MESSAGE_BYTES {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("message of {len} bytes exceeds the limit"),
        ));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    serde_json::from_slice(&body)
        .map(Some)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

fn error_code(e: &ElasticaError) -> &'static str {
    match e {
        ElasticaError::DegenerateInput(_) => "DegenerateInput",
        ElasticaError::CuspDetected { .. } => "CuspDetected",
        ElasticaError::NonIntegralTurning { .. } => "NonIntegralTurning",
        ElasticaError::IndexBroken { .. } => "IndexBroken",
        ElasticaError::InvalidCurve(_) => "InvalidCurve",
        ElasticaError::InvalidParams(_) => "InvalidParams",
        ElasticaError::ContradictoryFit => "ContradictoryFit",
        _ => "EngineError",
    }
}

enum Pop {
    Message(Message),
    Timeout,
    Closed,
}

#[derive(Default)]
struct OutboxInner {
    queue: VecDeque<Message>,
    closed: bool,
    dropped: u64,
}

/// Ordered outgoing messages. Frames beyond the capacity replace the
/// undelivered ones; errors and `done` are always kept, and nothing is
/// accepted after `done`.
struct Outbox {
    inner: Mutex<OutboxInner>,
    ready: Condvar,
    capacity: usize,
}

impl Outbox {
    fn new(capacity: usize) -> Self {
        Outbox {
            inner: Mutex::new(OutboxInner::default()),
            ready: Condvar::new(),
            capacity: capacity.max(1),
        }
    }

    fn push(&self, msg: Message) {
        let mut inner = self.inner.lock().unwrap();
        if inner.closed {
            return;
        }
        match msg {
            Message::Frame(_) => {
                let pending = inner.queue.iter().filter(|m| matches!(m, Message::Frame(_))).count();
                if pending >= self.capacity {
                    inner.queue.retain(|m| !matches!(m, Message::Frame(_)));
                    inner.dropped += pending as u64;
                }
            }
            Message::Done(_) => inner.closed = true,
            _ => {}
        }
        inner.queue.push_back(msg);
        self.ready.notify_all();
    }

    fn pop(&self, timeout: Duration) -> Pop {
        let guard = self.inner.lock().unwrap();
        let (mut inner, _) = self
            .ready
            .wait_timeout_while(guard, timeout, |i| i.queue.is_empty() && !i.closed)
            .unwrap();
        match inner.queue.pop_front() {
            Some(m) => Pop::Message(m),
            None if inner.closed => Pop::Closed,
            None => Pop::Timeout,
        }
    }
}

/// Inspectable view of a session.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub session_id: String,
    pub params: DescentParams,
    pub status: SessionStatus,
    /// Last snapshot taken by the engine.
    pub latest: Option<DescentStep>,
    /// Emitted frames, oldest first, bounded by the history capacity.
    pub history: VecDeque<Frame>,
    /// Frames the reader never saw because newer ones replaced them.
    pub dropped_frames: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SessionConfig {
    /// How long a paused or unstarted session waits for a control message.
    pub idle_timeout: Duration,
    pub history_capacity: usize,
    pub outbox_capacity: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            idle_timeout: Duration::from_secs(600),
            history_capacity: HISTORY_CAPACITY,
            outbox_capacity: OUTBOX_CAPACITY,
        }
    }
}

/// Receives control messages and yields outgoing ones.
pub struct Session {
    id: String,
    config: SessionConfig,
    state: Arc<Mutex<SessionState>>,
    outbox: Arc<Outbox>,
    controls: Option<Sender<Control>>,
    engine: Option<JoinHandle<()>>,
}

/// A random opaque session id.
pub fn new_session_id() -> String {
    format!("{:016x}", rand::random::<u64>())
}

impl Session {
    pub fn new(id: impl Into<String>, config: SessionConfig) -> Self {
        let id = id.into();
        Session {
            state: Arc::new(Mutex::new(SessionState {
                session_id: id.clone(),
                params: DescentParams::default(),
                status: SessionStatus::Drawing,
                latest: None,
                history: VecDeque::new(),
                dropped_frames: 0,
            })),
            outbox: Arc::new(Outbox::new(config.outbox_capacity)),
            id,
            config,
            controls: None,
            engine: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn state(&self) -> SessionState {
        let mut s = self.state.lock().unwrap().clone();
        s.dropped_frames = self.outbox.inner.lock().unwrap().dropped;
        s
    }

    pub fn status(&self) -> SessionStatus {
        self.state.lock().unwrap().status
    }

    fn reject(&self, code: &str, message: String) {
        self.outbox.push(Message::Error(ErrorFrame {
            session_id: self.id.clone(),
            code: code.into(),
            message,
            iteration: None,
        }));
    }

    /// Applies a control message. Problems are reported as error messages in
    /// the stream, never as a panic.
    pub fn handle(&mut self, control: Control) {
        if let Some(tx) = &self.controls {
            if let Control::Start { .. } = control {
                self.reject("InvalidControl", "session already started".into());
            } else if tx.send(control).is_err() {
                self.reject("InvalidControl", "session has finished".into());
            }
            return;
        }
        match control {
            Control::Start { points, params } => self.start(points, params),
            Control::Stop => {
                let class = NormalFormClass {
                    tag: ClassTag::Unconverged,
                    diagnostics: FitDiagnostics {
                        curvature_cv: f64::INFINITY,
                        template_correlation: None,
                        radius_estimate: None,
                    },
                };
                self.state.lock().unwrap().status = SessionStatus::Failed;
                self.outbox.push(Message::Done(DoneFrame {
                    session_id: self.id.clone(),
                    status: SessionStatus::Failed,
                    class,
                    iterations: 0,
                    energy_discrete: 0.0,
                    whitney_index: 0,
                    quiescent: false,
                    stopped: true,
                }));
            }
            other => self.reject(
                "InvalidControl",
                format!("{other:?} before the curve was submitted"),
            ),
        }
    }

    fn start(&mut self, points: Vec<Vec2>, params: DescentParams) {
        if let Err(e) = params.validate() {
            return self.reject(error_code(&e), e.to_string());
        }
        let curve = match ingest(&points, params.n).and_then(|c| {
            turning_profile(&c)?.whitney_index()?;
            Ok(c)
        }) {
            Ok(c) => c,
            Err(e) => return self.reject(error_code(&e), e.to_string()),
        };
        let (tx, rx) = mpsc::channel();
        {
            let mut st = self.state.lock().unwrap();
            st.params = params.clone();
            st.status = SessionStatus::Running;
        }
        let engine = Engine {
            id: self.id.clone(),
            params,
            config: self.config,
            state: Arc::clone(&self.state),
            outbox: Arc::clone(&self.outbox),
            controls: rx,
        };
        self.controls = Some(tx);
        self.engine = Some(
            std::thread::Builder::new()
                .name(format!("session-{}", self.id))
                .spawn(move || engine.run(curve))
                .expect("spawn session engine"),
        );
    }

    /// Next outgoing message, waiting up to `timeout`. `None` once `done`
    /// has been delivered, or on timeout.
    pub fn next_message(&self, timeout: Duration) -> Option<Message> {
        match self.outbox.pop(timeout) {
            Pop::Message(m) => Some(m),
            Pop::Timeout | Pop::Closed => None,
        }
    }

    /// True once `done` has been queued and everything has been read.
    pub fn is_finished(&self) -> bool {
        let inner = self.outbox.inner.lock().unwrap();
        inner.closed && inner.queue.is_empty()
    }

    /// Stops the engine and waits for it.
    pub fn shutdown(&mut self) {
        if let Some(tx) = self.controls.take() {
            let _ = tx.send(Control::Stop);
        }
        if let Some(h) = self.engine.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.shutdown();
    }
}

struct Engine {
    id: String,
    params: DescentParams,
    config: SessionConfig,
    state: Arc<Mutex<SessionState>>,
    outbox: Arc<Outbox>,
    controls: Receiver<Control>,
}

enum Next {
    Continue,
    /// Stop requested or the client went away.
    Stop,
    Idle,
}

impl Engine {
    fn set_status(&self, next: SessionStatus) {
        let mut st = self.state.lock().unwrap();
        if st.status != next {
            debug_assert!(st.status.can_become(next), "{:?} -> {next:?}", st.status);
            st.status = next;
        }
    }

    fn status(&self) -> SessionStatus {
        self.state.lock().unwrap().status
    }

    fn error(&self, code: &str, message: String, iteration: Option<u64>) {
        self.outbox.push(Message::Error(ErrorFrame {
            session_id: self.id.clone(),
            code: code.into(),
            message,
            iteration,
        }));
    }

    fn frame(&self, s: &DescentStep) {
        let classification = classify(&s.curve, &self.params.tolerances())
            .map(|c| c.tag)
            .unwrap_or(ClassTag::Unconverged);
        let mut st = self.state.lock().unwrap();
        let frame = Frame {
            session_id: self.id.clone(),
            iteration: s.iteration,
            vertices: s.curve.vertices().to_vec(),
            energy_discrete: s.energy.discrete,
            whitney_index: s.index,
            max_displacement: s.max_displacement,
            classification,
            status: st.status,
        };
        if st.history.len() >= self.config.history_capacity {
            st.history.pop_front();
        }
        st.history.push_back(frame.clone());
        st.latest = Some(s.clone());
        drop(st);
        self.outbox.push(Message::Frame(frame));
    }

    fn done(&self, s: &DescentStep, status: SessionStatus, class: NormalFormClass, quiescent: bool, stopped: bool) {
        self.set_status(status);
        self.state.lock().unwrap().latest = Some(s.clone());
        self.outbox.push(Message::Done(DoneFrame {
            session_id: self.id.clone(),
            status,
            class,
            iterations: s.iteration,
            energy_discrete: s.energy.discrete,
            whitney_index: s.index,
            quiescent,
            stopped,
        }));
    }

    fn unconverged(s: &DescentStep) -> NormalFormClass {
        let cv = turning_profile(&s.curve)
            .map(|p| {
                let n = p.angles.len() as f64;
                let mean = p.angles.iter().sum::<f64>() / n;
                let var = p.angles.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
                if mean == 0.0 { f64::INFINITY } else { var.sqrt() / mean.abs() }
            })
            .unwrap_or(f64::INFINITY);
        NormalFormClass {
            tag: ClassTag::Unconverged,
            diagnostics: FitDiagnostics {
                curvature_cv: cv,
                template_correlation: None,
                radius_estimate: None,
            },
        }
    }

    /// Drains pending controls; blocks while paused.
    fn apply_controls(&mut self, current: &mut DescentStep, quiet: &mut u32) -> Next {
        loop {
            let paused = self.status() == SessionStatus::Paused;
            let control = if paused {
                match self.controls.recv_timeout(self.config.idle_timeout) {
                    Ok(c) => c,
                    Err(RecvTimeoutError::Timeout) => return Next::Idle,
                    Err(RecvTimeoutError::Disconnected) => return Next::Stop,
                }
            } else {
                match self.controls.try_recv() {
                    Ok(c) => c,
                    Err(TryRecvError::Empty) => return Next::Continue,
                    Err(TryRecvError::Disconnected) => return Next::Stop,
                }
            };
            match control {
                Control::Pause if !paused => self.set_status(SessionStatus::Paused),
                Control::Resume if paused => self.set_status(SessionStatus::Running),
                Control::Pause | Control::Resume => {}
                Control::SetSnapshotRate { every } if every > 0 => {
                    self.params.snapshot_every = every;
                    self.state.lock().unwrap().params.snapshot_every = every;
                }
                Control::SetSnapshotRate { .. } => self.error(
                    "InvalidControl",
                    "snapshot rate must be at least 1".into(),
                    Some(current.iteration),
                ),
                Control::Perturb { seed } => {
                    match perturb(&current.curve, seed).and_then(|c| initial_step(&c)) {
                        Ok(s) if s.index == current.index => {
                            current.curve = s.curve;
                            current.energy = s.energy;
                            *quiet = 0;
                        }
                        Ok(_) => self.error(
                            "InvalidControl",
                            "perturbation would change the index; ignored".into(),
                            Some(current.iteration),
                        ),
                        Err(e) => self.error(error_code(&e), e.to_string(), Some(current.iteration)),
                    }
                }
                Control::Stop => return Next::Stop,
                Control::Start { .. } => self.error(
                    "InvalidControl",
                    "session already started".into(),
                    Some(current.iteration),
                ),
            }
        }
    }

    fn run(mut self, curve: PolyCurve) {
        let mut current = match initial_step(&curve) {
            Ok(s) => s,
            Err(e) => {
                self.error(error_code(&e), e.to_string(), Some(0));
                let s = DescentStep {
                    iteration: 0,
                    curve,
                    energy: Default::default(),
                    index: 0,
                    max_displacement: 0.0,
                };
                let class = Self::unconverged(&s);
                return self.done(&s, SessionStatus::Failed, class, false, false);
            }
        };
        self.frame(&current);
        let mut quiet = 0u32;
        loop {
            match self.apply_controls(&mut current, &mut quiet) {
                Next::Continue => {}
                Next::Stop => {
                    let class = Self::unconverged(&current);
                    return self.done(&current, SessionStatus::Failed, class, false, true);
                }
                Next::Idle => {
                    self.error(
                        "IdleTimeout",
                        format!("no control message for {:?} while paused", self.config.idle_timeout),
                        Some(current.iteration),
                    );
                    let class = Self::unconverged(&current);
                    return self.done(&current, SessionStatus::Failed, class, false, false);
                }
            }
            let next = match step_from(&current, &self.params) {
                Ok(s) => s,
                Err(e) => {
                    self.error(error_code(&e), e.to_string(), Some(current.iteration + 1));
                    let class = Self::unconverged(&current);
                    return self.done(&current, SessionStatus::Failed, class, false, false);
                }
            };
            current = next;
            if current.max_displacement < self.params.quiescence_tol {
                quiet += 1;
            } else {
                quiet = 0;
            }
            let quiescent = quiet >= self.params.quiescence_runs;
            let exhausted = current.iteration >= self.params.max_iters;
            if quiescent || exhausted || current.iteration % self.params.snapshot_every == 0 {
                self.frame(&current);
            }
            if quiescent {
                return match classify(&current.curve, &self.params.tolerances()) {
                    Ok(class) => {
                        if class.tag == ClassTag::Unconverged {
                            self.error(
                                "Unconverged",
                                "curve stopped moving away from every normal form".into(),
                                Some(current.iteration),
                            );
                        }
                        self.done(&current, SessionStatus::Quiescent, class, true, false)
                    }
                    Err(e) => {
                        self.error(error_code(&e), e.to_string(), Some(current.iteration));
                        let class = Self::unconverged(&current);
                        self.done(&current, SessionStatus::Failed, class, true, false)
                    }
                };
            }
            if exhausted {
                self.error(
                    "Unconverged",
                    format!("not quiescent after {} iterations", current.iteration),
                    Some(current.iteration),
                );
                let class = Self::unconverged(&current);
                return self.done(&current, SessionStatus::Failed, class, false, false);
            }
        }
    }
}

//! Scripted HTTP/1.1 server for exercising the fetcher without the network.
//!
//! Each path has a script of responses that are served in order; the last
//! one repeats. Every request is logged with its arrival time and `Cookie`
//! header.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

/// Environment variable naming the address the fixture server binds to.
pub const FIXTURE_ADDR_ENV: &str = "STATUTE_FIXTURE_ADDR";

#[derive(Debug, Clone)]
pub struct FixtureResponse {
    pub status: u16,
    pub body: String,
    pub set_cookie: Option<String>,
    /// Sleep before answering, to provoke client timeouts.
    pub delay: Duration,
}

impl FixtureResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        Self::status(200, body)
    }

    pub fn status(status: u16, body: impl Into<String>) -> Self {
        FixtureResponse {
            status,
            body: body.into(),
            set_cookie: None,
            delay: Duration::ZERO,
        }
    }

    pub fn with_cookie(mut self, cookie: impl Into<String>) -> Self {
        self.set_cookie = Some(cookie.into());
        self
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

#[derive(Debug, Clone)]
pub struct LoggedRequest {
    pub path: String,
    pub at: Instant,
    pub cookie: Option<String>,
}

#[derive(Default)]
struct Shared {
    routes: HashMap<String, (Vec<FixtureResponse>, usize)>,
    log: Vec<LoggedRequest>,
}

pub struct FixtureServer {
    addr: SocketAddr,
    shared: Arc<Mutex<Shared>>,
    stop: Arc<AtomicBool>,
}

impl FixtureServer {
    /// Binds to `$STATUTE_FIXTURE_ADDR`, or an ephemeral localhost port.
    pub fn start() -> std::io::Result<Self> {
        let addr = std::env::var(FIXTURE_ADDR_ENV).unwrap_or_else(|_| "127.0.0.1:0".to_string());
        Self::start_on(&addr)
    }

    pub fn start_on(addr: &str) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Mutex::new(Shared::default()));
        let stop = Arc::new(AtomicBool::new(false));
        {
            let shared = Arc::clone(&shared);
            let stop = Arc::clone(&stop);
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    if let Ok(stream) = stream {
                        let shared = Arc::clone(&shared);
                        thread::spawn(move || {
                            let _ = handle(stream, &shared);
                        });
                    }
                }
            });
        }
        Ok(FixtureServer { addr, shared, stop })
    }

    pub fn route(&self, path: &str, script: Vec<FixtureResponse>) {
        let mut s = self.shared.lock().unwrap_or_else(|e| e.into_inner());
        s.routes.insert(path.to_string(), (script, 0));
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn log(&self) -> Vec<LoggedRequest> {
        self.shared.lock().unwrap_or_else(|e| e.into_inner()).log.clone()
    }

    pub fn requests_to(&self, path: &str) -> Vec<LoggedRequest> {
        self.log().into_iter().filter(|r| r.path == path).collect()
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
    }
}

fn handle(stream: TcpStream, shared: &Mutex<Shared>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut cookie = None;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.trim().eq_ignore_ascii_case("cookie") {
                cookie = Some(v.trim().to_string());
            }
        }
    }

    let response = {
        let mut s = shared.lock().unwrap_or_else(|e| e.into_inner());
        s.log.push(LoggedRequest {
            path: path.clone(),
            at: Instant::now(),
            cookie,
        });
        match s.routes.get_mut(&path) {
            Some((script, next)) if !script.is_empty() => {
                let r = script[(*next).min(script.len() - 1)].clone();
                *next += 1;
                r
            }
            _ => FixtureResponse::status(404, "not found"),
        }
    };

    if !response.delay.is_zero() {
        thread::sleep(response.delay);
    }
    let mut out = stream;
    let mut head = format!(
        "HTTP/1.1 {} FIXTURE\r\nContent-Type: text/plain; charset=utf-8\r\nContent-Length: {}\r\nConnection: close\r\n",
        response.status,
        response.body.len()
    );
    if let Some(c) = &response.set_cookie {
        head.push_str(&format!("Set-Cookie: {c}\r\n"));
    }
    head.push_str("\r\n");
    out.write_all(head.as_bytes())?;
    out.write_all(response.body.as_bytes())?;
    out.flush()
}

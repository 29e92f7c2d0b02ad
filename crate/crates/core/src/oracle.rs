//! Line-delimited JSON protocol for sampling a Bochner matrix from an
//! external process, plus a reference server.
//!
//! The client writes one request line to the child's stdin and reads one
//! response line from its stdout, strictly alternating. Indices are 0-based
//! on the wire and 1-based everywhere else; the conversion happens in
//! [`MatrixAccessor`] and [`serve`] only.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, ExitStatus, Stdio};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::cross::BochnerView;
use crate::densela::DenseMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{InnerKind, InnerProductSpec};
use crate::matrix::BochnerMatrix;

pub const GRAM_LAYOUT: &str = "float64-little-endian-row-major";

const SHUTDOWN_GRACE: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("failed to start oracle: {0}")]
    SpawnFailure(String),
    #[error("oracle protocol error: {0}")]
    ProtocolError(String),
    #[error("bad Gram file: {0}")]
    BadGramFile(String),
    /// The oracle answered `ok: false`.
    #[error("oracle reported an error: {0}")]
    Remote(String),
    #[error("oracle sent {found} coefficients, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Request {
    Hello,
    Entry { i: usize, j: usize },
    Row { i: usize },
    Col { j: usize },
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InnerWire {
    #[serde(rename = "diag")]
    Diag { weights: Vec<f64> },
    #[serde(rename = "gram_file")]
    GramFile { path: String, layout: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleHello {
    pub m: usize,
    pub n: usize,
    pub dim: usize,
    pub inner: InnerWire,
}

/// Reads a `dim x dim` Gram matrix stored as little-endian row-major f64.
pub fn read_gram_file(path: &Path, dim: usize) -> std::result::Result<DenseMatrix, OracleError> {
    let bytes = fs::read(path).map_err(|e| OracleError::BadGramFile(format!("{}: {e}", path.display())))?;
    let expected = 8 * dim * dim;
    if bytes.len() != expected {
        return Err(OracleError::BadGramFile(format!(
            "{} has {} bytes, expected {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(DenseMatrix::from_row_major(dim, dim, data))
}

pub fn write_gram_file(path: &Path, gram: &DenseMatrix) -> io::Result<()> {
    let mut bytes = Vec::with_capacity(8 * gram.as_slice().len());
    for v in gram.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)
}

/// Builds the inner-product spec announced in a hello response.
pub fn spec_from_hello(hello: &OracleHello) -> std::result::Result<Arc<InnerProductSpec>, OracleError> {
    match &hello.inner {
        InnerWire::Diag { weights } => {
            if weights.len() != hello.dim {
                return Err(OracleError::ProtocolError(format!(
                    "{} weights for dim {}",
                    weights.len(),
                    hello.dim
                )));
            }
            InnerProductSpec::diagonal(weights.clone()).map_err(|e| OracleError::ProtocolError(e.to_string()))
        }
        InnerWire::GramFile { path, layout } => {
            if layout != GRAM_LAYOUT {
                return Err(OracleError::ProtocolError(format!("unsupported Gram layout {layout:?}")));
            }
            let g = read_gram_file(Path::new(path), hello.dim)?;
            InnerProductSpec::gram(g).map_err(|e| OracleError::BadGramFile(e.to_string()))
        }
    }
}

/// One running oracle process.
pub struct OracleClient {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    hello: Option<OracleHello>,
    messages: usize,
    closed: bool,
}

impl OracleClient {
    /// Starts `cmdline[0]` with the remaining arguments.
    pub fn spawn(cmdline: &[String]) -> std::result::Result<Self, OracleError> {
        let (program, args) = cmdline
            .split_first()
            .ok_or_else(|| OracleError::SpawnFailure("empty command line".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| OracleError::SpawnFailure(format!("{program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            child,
            stdin: Some(stdin),
            stdout,
            hello: None,
            messages: 0,
            closed: false,
        })
    }

    /// Number of requests written so far.
    pub fn messages_sent(&self) -> usize {
        self.messages
    }

    pub fn hello_info(&self) -> Option<&OracleHello> {
        self.hello.as_ref()
    }

    fn send(&mut self, req: &Request) -> std::result::Result<Value, OracleError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| OracleError::ProtocolError("session already closed".into()))?;
        let mut line = serde_json::to_string(req).expect("requests serialize");
        line.push('\n');
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| OracleError::ProtocolError(format!("write failed: {e}")))?;
        self.messages += 1;

        let mut buf = String::new();
        let read = self
            .stdout
            .read_line(&mut buf)
            .map_err(|e| OracleError::ProtocolError(format!("read failed: {e}")))?;
        if read == 0 {
            return Err(OracleError::ProtocolError("oracle closed its output".into()));
        }
        let value: Value = serde_json::from_str(buf.trim_end())
            .map_err(|e| OracleError::ProtocolError(format!("malformed response: {e}")))?;
        match value.get("ok").and_then(Value::as_bool) {
            Some(true) => Ok(value),
            Some(false) => {
                let msg = value
                    .get("error")
                    .and_then(Value::as_str)
                    .unwrap_or("unspecified error")
                    .to_string();
                Err(OracleError::Remote(msg))
            }
            None => Err(OracleError::ProtocolError("response lacks boolean \"ok\"".into())),
        }
    }

    /// Performs the handshake. A session has exactly one.
    pub fn hello(&mut self) -> std::result::Result<OracleHello, OracleError> {
        if self.hello.is_some() {
            return Err(OracleError::ProtocolError("handshake already performed".into()));
        }
        let value = self.send(&Request::Hello)?;
        let hello: OracleHello = serde_json::from_value(value)
            .map_err(|e| OracleError::ProtocolError(format!("bad hello response: {e}")))?;
        if hello.m == 0 || hello.n == 0 || hello.dim == 0 {
            return Err(OracleError::ProtocolError("hello reports an empty shape".into()));
        }
        self.hello = Some(hello.clone());
        Ok(hello)
    }

    fn dim(&self) -> std::result::Result<usize, OracleError> {
        self.hello
            .as_ref()
            .map(|h| h.dim)
            .ok_or_else(|| OracleError::ProtocolError("no handshake yet".into()))
    }

    fn vector(value: &Value, dim: usize) -> std::result::Result<Vec<f64>, OracleError> {
        let arr = value
            .as_array()
            .ok_or_else(|| OracleError::ProtocolError("coefficients are not an array".into()))?;
        if arr.len() != dim {
            return Err(OracleError::LengthMismatch {
                expected: dim,
                found: arr.len(),
            });
        }
        arr.iter()
            .map(|v| {
                v.as_f64()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| OracleError::ProtocolError("coefficient is not a finite number".into()))
            })
            .collect()
    }

    /// Entry at 0-based `(i, j)`.
    pub fn fetch_entry(&mut self, i: usize, j: usize) -> std::result::Result<Vec<f64>, OracleError> {
        let dim = self.dim()?;
        let v = self.send(&Request::Entry { i, j })?;
        Self::vector(&v["coeffs"], dim)
    }

    fn fetch_slice(&mut self, req: Request, count: usize) -> std::result::Result<Vec<f64>, OracleError> {
        let dim = self.dim()?;
        let v = self.send(&req)?;
        let arr = v["coeffs"]
            .as_array()
            .ok_or_else(|| OracleError::ProtocolError("coefficients are not an array".into()))?;
        if arr.len() != count {
            return Err(OracleError::LengthMismatch {
                expected: count,
                found: arr.len(),
            });
        }
        let mut out = Vec::with_capacity(count * dim);
        for e in arr {
            out.extend(Self::vector(e, dim)?);
        }
        Ok(out)
    }

    /// Row at 0-based `i`, as `n * dim` coefficients.
    pub fn fetch_row(&mut self, i: usize) -> std::result::Result<Vec<f64>, OracleError> {
        let n = self.hello.as_ref().map_or(0, |h| h.n);
        self.fetch_slice(Request::Row { i }, n)
    }

    /// Column at 0-based `j`, as `m * dim` coefficients.
    pub fn fetch_col(&mut self, j: usize) -> std::result::Result<Vec<f64>, OracleError> {
        let m = self.hello.as_ref().map_or(0, |h| h.m);
        self.fetch_slice(Request::Col { j }, m)
    }

    /// Sends `shutdown` and waits for the child to exit, killing it after
    /// a grace period.
    pub fn close(&mut self) -> Option<ExitStatus> {
        if self.closed {
            return None;
        }
        self.closed = true;
        if let Some(mut stdin) = self.stdin.take() {
            let line = serde_json::to_string(&Request::Shutdown).expect("requests serialize");
            let _ = stdin.write_all(line.as_bytes()).and_then(|_| stdin.write_all(b"\n"));
            let _ = stdin.flush();
            // dropping stdin closes the pipe, so servers that ignore shutdown still see EOF
        }
        match self.child.wait_timeout(SHUTDOWN_GRACE) {
            Ok(Some(status)) => Some(status),
            _ => {
                let _ = self.child.kill();
                self.child.wait().ok()
            }
        }
    }
}

impl Drop for OracleClient {
    fn drop(&mut self) {
        self.close();
    }
}

#[derive(Default)]
struct SliceCache {
    rows: HashMap<usize, Vec<f64>>,
    cols: HashMap<usize, Vec<f64>>,
    entries: HashMap<(usize, usize), Vec<f64>>,
}

struct OracleBacking {
    client: OracleClient,
    cache: SliceCache,
}

enum Backing {
    Dense(Arc<BochnerMatrix>),
    Oracle(Mutex<OracleBacking>),
}

/// Uniform read access to an in-memory matrix or an oracle process.
/// Oracle rows, columns and entries are cached, so each is fetched once.
pub struct MatrixAccessor {
    shape: (usize, usize),
    spec: Arc<InnerProductSpec>,
    backing: Backing,
}

impl MatrixAccessor {
    pub fn dense(a: BochnerMatrix) -> Self {
        Self::shared(Arc::new(a))
    }

    pub fn shared(a: Arc<BochnerMatrix>) -> Self {
        Self {
            shape: a.shape(),
            spec: a.spec().clone(),
            backing: Backing::Dense(a),
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self.backing, Backing::Oracle(_))
    }

    /// Requests written to the oracle so far; zero for dense backing.
    pub fn wire_messages(&self) -> usize {
        match &self.backing {
            Backing::Dense(_) => 0,
            Backing::Oracle(o) => o.lock().expect("oracle lock").client.messages_sent(),
        }
    }

    /// Ends the oracle session and reports the child's exit status.
    pub fn close(self) -> Option<ExitStatus> {
        match self.backing {
            Backing::Dense(_) => None,
            Backing::Oracle(o) => o.into_inner().ok().and_then(|mut b| b.client.close()),
        }
    }

    fn check(&self, i: Option<usize>, j: Option<usize>) -> Result<()> {
        if let Some(i) = i {
            if i == 0 || i > self.shape.0 {
                return Err(Error::OutOfBounds { index: i, bound: self.shape.0 });
            }
        }
        if let Some(j) = j {
            if j == 0 || j > self.shape.1 {
                return Err(Error::OutOfBounds { index: j, bound: self.shape.1 });
            }
        }
        Ok(())
    }
}

impl BochnerView for MatrixAccessor {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn spec(&self) -> &Arc<InnerProductSpec> {
        &self.spec
    }

    fn entry(&self, i: usize, j: usize) -> Result<Vec<f64>> {
        self.check(Some(i), Some(j))?;
        let dim = self.spec.dim();
        match &self.backing {
            Backing::Dense(a) => BochnerView::entry(a.as_ref(), i, j),
            Backing::Oracle(o) => {
                let mut o = o.lock().expect("oracle lock");
                let c = &o.cache;
                if let Some(r) = c.rows.get(&i) {
                    return Ok(r[(j - 1) * dim..j * dim].to_vec());
                }
                if let Some(col) = c.cols.get(&j) {
                    return Ok(col[(i - 1) * dim..i * dim].to_vec());
                }
                if let Some(e) = c.entries.get(&(i, j)) {
                    return Ok(e.clone());
                }
                let e = o.client.fetch_entry(i - 1, j - 1)?;
                o.cache.entries.insert((i, j), e.clone());
                Ok(e)
            }
        }
    }

    fn row(&self, i: usize) -> Result<Vec<f64>> {
        self.check(Some(i), None)?;
        match &self.backing {
            Backing::Dense(a) => BochnerView::row(a.as_ref(), i),
            Backing::Oracle(o) => {
                let mut o = o.lock().expect("oracle lock");
                if let Some(r) = o.cache.rows.get(&i) {
                    return Ok(r.clone());
                }
                let r = o.client.fetch_row(i - 1)?;
                o.cache.rows.insert(i, r.clone());
                Ok(r)
            }
        }
    }

    fn col(&self, j: usize) -> Result<Vec<f64>> {
        self.check(None, Some(j))?;
        match &self.backing {
            Backing::Dense(a) => BochnerView::col(a.as_ref(), j),
            Backing::Oracle(o) => {
                let mut o = o.lock().expect("oracle lock");
                if let Some(c) = o.cache.cols.get(&j) {
                    return Ok(c.clone());
                }
                let c = o.client.fetch_col(j - 1)?;
                o.cache.cols.insert(j, c.clone());
                Ok(c)
            }
        }
    }
}

/// Spawns an oracle, performs the handshake and wraps it in an accessor.
pub fn oracle_handshake(cmdline: &[String]) -> Result<(MatrixAccessor, OracleHello)> {
    let mut client = OracleClient::spawn(cmdline)?;
    let hello = client.hello()?;
    let spec = spec_from_hello(&hello)?;
    let accessor = MatrixAccessor {
        shape: (hello.m, hello.n),
        spec,
        backing: Backing::Oracle(Mutex::new(OracleBacking {
            client,
            cache: SliceCache::default(),
        })),
    };
    Ok((accessor, hello))
}

/// Deliberate misbehaviour for exercising client error paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServerFault {
    #[default]
    None,
    /// Drop the last coefficient of every entry.
    WrongLength,
    /// Answer every entry request with `ok: false`.
    ErrorOnEntry,
    /// Answer the handshake with a line that is not JSON.
    GarbageHello,
}

/// The hello `inner` field describing `spec`; Gram specs need a file path.
pub fn inner_wire_for(spec: &InnerProductSpec, gram_path: Option<&Path>) -> io::Result<InnerWire> {
    match spec.kind() {
        InnerKind::Diagonal { weights } => Ok(InnerWire::Diag {
            weights: weights.clone(),
        }),
        InnerKind::Gram { gram } => {
            let path = gram_path.ok_or_else(|| {
                io::Error::new(io::ErrorKind::InvalidInput, "Gram spec needs a file path")
            })?;
            write_gram_file(path, gram)?;
            Ok(InnerWire::GramFile {
                path: path.to_string_lossy().into_owned(),
                layout: GRAM_LAYOUT.to_string(),
            })
        }
    }
}

fn error_response(msg: impl Into<String>) -> Value {
    json!({"ok": false, "error": msg.into()})
}

fn entry_json(coeffs: &[f64], fault: ServerFault) -> Value {
    match fault {
        ServerFault::WrongLength => json!(coeffs[..coeffs.len() - 1]),
        _ => json!(coeffs),
    }
}

/// Serves `a` over the protocol until `shutdown` or end of input.
pub fn serve<R: BufRead, W: Write>(
    a: &BochnerMatrix,
    inner: &InnerWire,
    fault: ServerFault,
    input: R,
    mut output: W,
) -> io::Result<()> {
    let (m, n) = a.shape();
    let mut greeted = false;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut stop = false;
        let response = match serde_json::from_str::<Request>(&line) {
            Err(e) => error_response(format!("bad request: {e}")),
            Ok(Request::Hello) if greeted => error_response("handshake already performed"),
            Ok(Request::Hello) => {
                greeted = true;
                if fault == ServerFault::GarbageHello {
                    writeln!(output, "this is not json")?;
                    output.flush()?;
                    continue;
                }
                json!({"ok": true, "m": m, "n": n, "dim": a.dim(), "inner": inner})
            }
            Ok(Request::Shutdown) => {
                stop = true;
                json!({"ok": true})
            }
            Ok(_) if !greeted => error_response("handshake required"),
            Ok(Request::Entry { i, j }) => {
                if fault == ServerFault::ErrorOnEntry {
                    error_response("entry evaluation failed")
                } else if i >= m || j >= n {
                    error_response(format!("entry ({i}, {j}) out of range"))
                } else {
                    json!({"ok": true, "coeffs": entry_json(a.entry0(i, j), fault)})
                }
            }
            Ok(Request::Row { i }) => {
                if i >= m {
                    error_response(format!("row {i} out of range"))
                } else {
                    let row: Vec<Value> = (0..n).map(|j| entry_json(a.entry0(i, j), fault)).collect();
                    json!({"ok": true, "coeffs": row})
                }
            }
            Ok(Request::Col { j }) => {
                if j >= n {
                    error_response(format!("column {j} out of range"))
                } else {
                    let col: Vec<Value> = (0..m).map(|i| entry_json(a.entry0(i, j), fault)).collect();
                    json!({"ok": true, "coeffs": col})
                }
            }
        };
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
        if stop {
            break;
        }
    }
    Ok(())
}

/// Deterministic random matrix served by the loopback oracle binary.
/// With `gram = true` the spec is a random SPD Gram matrix.
pub fn loopback_fixture(m: usize, n: usize, dim: usize, seed: u64, gram: bool) -> Result<BochnerMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = if gram {
        let b = DenseMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
        let g = b.t_matmul(&b).add(&DenseMatrix::identity(dim).scaled(dim as f64));
        // symmetrise exactly so the served file passes the symmetry check bit for bit
        let g = DenseMatrix::from_fn(dim, dim, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]));
        InnerProductSpec::gram(g)?
    } else {
        let w = (0..dim).map(|_| rng.random_range(0.5..2.0)).collect();
        InnerProductSpec::diagonal(w)?
    };
    BochnerMatrix::random(m, n, spec, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_match_wire_format() {
        let s = |r: Request| serde_json::to_string(&r).unwrap();
        assert_eq!(s(Request::Hello), r#"{"op":"hello"}"#);
        assert_eq!(s(Request::Entry { i: 0, j: 2 }), r#"{"op":"entry","i":0,"j":2}"#);
        assert_eq!(s(Request::Row { i: 1 }), r#"{"op":"row","i":1}"#);
        assert_eq!(s(Request::Col { j: 3 }), r#"{"op":"col","j":3}"#);
        assert_eq!(s(Request::Shutdown), r#"{"op":"shutdown"}"#);
    }

    #[test]
    fn inner_wire_format() {
        let d = InnerWire::Diag { weights: vec![1.0, 2.5] };
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"kind":"diag","weights":[1.0,2.5]}"#
        );
        let g: InnerWire =
            serde_json::from_str(r#"{"kind":"gram_file","path":"/tmp/g.bin","layout":"float64-little-endian-row-major"}"#)
                .unwrap();
        assert!(matches!(g, InnerWire::GramFile { .. }));
    }

    fn run_server(a: &BochnerMatrix, requests: &str) -> Vec<Value> {
        let inner = inner_wire_for(a.spec(), None).unwrap();
        let mut out = Vec::new();
        serve(a, &inner, ServerFault::None, requests.as_bytes(), &mut out).unwrap();
        String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }

    #[test]
    fn server_answers_protocol() {
        let a = loopback_fixture(2, 3, 2, 1, false).unwrap();
        let replies = run_server(
            &a,
            "{\"op\":\"entry\",\"i\":0,\"j\":0}\n{\"op\":\"hello\"}\n{\"op\":\"hello\"}\n{\"op\":\"frobnicate\"}\n{\"op\":\"col\",\"j\":2}\n{\"op\":\"row\",\"i\":5}\n{\"op\":\"shutdown\"}\n{\"op\":\"hello\"}\n",
        );
        assert_eq!(replies.len(), 7);
        assert_eq!(replies[0]["ok"], false);
        assert_eq!(replies[1]["ok"], true);
        assert_eq!(replies[1]["m"], 2);
        assert_eq!(replies[1]["inner"]["kind"], "diag");
        assert_eq!(replies[2]["ok"], false);
        assert_eq!(replies[3]["ok"], false);
        assert_eq!(replies[4]["coeffs"].as_array().unwrap().len(), 2);
        assert_eq!(replies[5]["ok"], false);
        assert_eq!(replies[6]["ok"], true);
    }

    #[test]
    fn gram_file_roundtrip_and_size_check() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.bin");
        let g = DenseMatrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]);
        write_gram_file(&p, &g).unwrap();
        assert_eq!(read_gram_file(&p, 2).unwrap(), g);
        assert!(matches!(read_gram_file(&p, 3), Err(OracleError::BadGramFile(_))));
    }
}

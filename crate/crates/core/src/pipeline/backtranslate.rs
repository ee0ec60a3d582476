//! Backtranslation clients: turning sampled MRs back into sentences.
//!
//! The toolkit is model-agnostic: a backtranslator is an external service
//! reached over HTTP or a child process speaking JSONL, plus two stubs for
//! tests and dry runs. A failed batch always fails the whole call — dropping
//! MRs silently would break the sample-count contract of the pipeline.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

/// Which backtranslation mechanism to use.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BacktranslatorKind {
    /// Returns each MR unchanged. Useful for pipeline dry runs.
    EchoStub,
    /// Looks sentences up in a TSV file of `mr<TAB>sentence` lines and
    /// errors on misses.
    TableStub(PathBuf),
    /// POSTs `{"mrs": [...]}` to the given URL and expects
    /// `{"sentences": [...]}` of equal length.
    Http(String),
    /// Streams JSONL over stdin/stdout of a child process: one
    /// `{"mr": ...}` request line per MR, one `{"sentence": ...}` reply each.
    Command(Vec<String>),
}

/// A backtranslator plus its batching and timeout policy.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BacktranslatorSpec {
    pub kind: BacktranslatorKind,
    /// MRs per HTTP request; must be at least 1.
    pub batch_size: usize,
    /// Per-request (HTTP) or whole-run (command) time limit.
    pub timeout: Duration,
}

pub const DEFAULT_BATCH_SIZE: usize = 64;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

impl BacktranslatorSpec {
    pub fn new(kind: BacktranslatorKind) -> Self {
        BacktranslatorSpec {
            kind,
            batch_size: DEFAULT_BATCH_SIZE,
            timeout: DEFAULT_TIMEOUT,
        }
    }

    /// Parses a command-line spec string: `echo`, `table:PATH`,
    /// `command:PROGRAM ARGS...` (whitespace-split), or an `http(s)://` URL.
    pub fn parse(spec: &str) -> Result<Self, BacktranslateError> {
        let kind = if spec == "echo" {
            BacktranslatorKind::EchoStub
        } else if let Some(path) = spec.strip_prefix("table:") {
            BacktranslatorKind::TableStub(PathBuf::from(path))
        } else if let Some(cmdline) = spec.strip_prefix("command:") {
            let argv: Vec<String> = cmdline.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err(BacktranslateError::InvalidSpec {
                    spec: spec.to_string(),
                    reason: "empty command line".to_string(),
                });
            }
            BacktranslatorKind::Command(argv)
        } else if spec.starts_with("http://") || spec.starts_with("https://") {
            BacktranslatorKind::Http(spec.to_string())
        } else {
            return Err(BacktranslateError::InvalidSpec {
                spec: spec.to_string(),
                reason: "expected 'echo', 'table:PATH', 'command:CMDLINE', or an http(s) URL"
                    .to_string(),
            });
        };
        Ok(BacktranslatorSpec::new(kind))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BacktranslateError {
    #[error("invalid backtranslator spec '{spec}': {reason}")]
    InvalidSpec { spec: String, reason: String },
    #[error("failed to read mapping table {path}: {source}")]
    TableRead {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("mapping table {path}:{line}: expected 'mr<TAB>sentence'")]
    TableMalformed { path: PathBuf, line: usize },
    #[error("mapping table has no entry for MR '{mr}'")]
    TableMiss { mr: String },
    #[error("backtranslation request failed: {source}")]
    Http {
        #[source]
        source: Box<ureq::Error>,
    },
    #[error("backtranslator returned {got} sentences for {expected} MRs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("failed to start backtranslation command '{program}': {source}")]
    Spawn {
        program: String,
        #[source]
        source: io::Error,
    },
    #[error("backtranslation command I/O failed: {0}")]
    CommandIo(#[source] io::Error),
    #[error("backtranslation command exited unsuccessfully ({status})")]
    CommandFailed { status: ExitStatus },
    #[error("backtranslation command produced invalid JSONL: {0}")]
    CommandProtocol(String),
    #[error("backtranslation timed out after {timeout:?}")]
    Timeout { timeout: Duration },
}

#[derive(Serialize)]
struct HttpRequest<'a> {
    mrs: &'a [String],
}

#[derive(Deserialize)]
struct HttpResponse {
    sentences: Vec<String>,
}

#[derive(Serialize)]
struct CommandRequest<'a> {
    mr: &'a str,
}

#[derive(Deserialize)]
struct CommandResponse {
    sentence: String,
}

/// Backtranslates MRs into sentences, one per MR, order preserved. Any
/// failure (unreachable endpoint, length mismatch, table miss, timeout)
/// aborts the whole call.
pub fn backtranslate(
    mrs: &[String],
    spec: &BacktranslatorSpec,
) -> Result<Vec<String>, BacktranslateError> {
    if spec.batch_size == 0 {
        return Err(BacktranslateError::InvalidSpec {
            spec: format!("{:?}", spec.kind),
            reason: "batch size must be at least 1".to_string(),
        });
    }
    if mrs.is_empty() {
        return Ok(Vec::new());
    }
    match &spec.kind {
        BacktranslatorKind::EchoStub => Ok(mrs.to_vec()),
        BacktranslatorKind::TableStub(path) => table_lookup(path, mrs),
        BacktranslatorKind::Http(url) => http_batches(url, mrs, spec),
        BacktranslatorKind::Command(argv) => run_command(argv, mrs, spec.timeout),
    }
}

fn table_lookup(path: &Path, mrs: &[String]) -> Result<Vec<String>, BacktranslateError> {
    let content = fs::read_to_string(path).map_err(|source| BacktranslateError::TableRead {
        path: path.to_path_buf(),
        source,
    })?;
    let mut table = BTreeMap::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (mr, sentence) =
            line.split_once('\t')
                .ok_or_else(|| BacktranslateError::TableMalformed {
                    path: path.to_path_buf(),
                    line: idx + 1,
                })?;
        table.insert(mr.to_string(), sentence.to_string());
    }
    mrs.iter()
        .map(|mr| {
            table
                .get(mr)
                .cloned()
                .ok_or_else(|| BacktranslateError::TableMiss { mr: mr.clone() })
        })
        .collect()
}

fn http_batches(
    url: &str,
    mrs: &[String],
    spec: &BacktranslatorSpec,
) -> Result<Vec<String>, BacktranslateError> {
    let http_err = |e: ureq::Error| BacktranslateError::Http { source: Box::new(e) };
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(spec.timeout))
        .build()
        .into();
    let mut sentences = Vec::with_capacity(mrs.len());
    for batch in mrs.chunks(spec.batch_size) {
        let mut response = agent
            .post(url)
            .send_json(HttpRequest { mrs: batch })
            .map_err(http_err)?;
        let body: HttpResponse = response.body_mut().read_json().map_err(http_err)?;
        if body.sentences.len() != batch.len() {
            return Err(BacktranslateError::LengthMismatch {
                expected: batch.len(),
                got: body.sentences.len(),
            });
        }
        sentences.extend(body.sentences);
    }
    Ok(sentences)
}

fn kill_and_reap(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

fn run_command(
    argv: &[String],
    mrs: &[String],
    timeout: Duration,
) -> Result<Vec<String>, BacktranslateError> {
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|source| BacktranslateError::Spawn {
            program: argv[0].clone(),
            source,
        })?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let stdout = child.stdout.take().expect("piped stdout");

    let mut payload = String::new();
    for mr in mrs {
        payload.push_str(&serde_json::to_string(&CommandRequest { mr }).expect("serialize"));
        payload.push('\n');
    }
    // Writer and reader run on their own threads so neither side of the
    // child's pipe pair can deadlock on a full buffer.
    let writer = thread::spawn(move || stdin.write_all(payload.as_bytes()));
    let reader = thread::spawn(move || -> io::Result<Vec<String>> {
        BufReader::new(stdout)
            .lines()
            .filter(|l| l.as_ref().map(|l| !l.trim().is_empty()).unwrap_or(true))
            .collect()
    });

    let deadline = Instant::now() + timeout;
    while !reader.is_finished() {
        if Instant::now() >= deadline {
            kill_and_reap(&mut child);
            let _ = writer.join();
            let _ = reader.join();
            return Err(BacktranslateError::Timeout { timeout });
        }
        thread::sleep(Duration::from_millis(5));
    }

    let lines = reader
        .join()
        .expect("reader thread")
        .map_err(BacktranslateError::CommandIo)?;
    let status = child.wait().map_err(BacktranslateError::CommandIo)?;
    // A write error (e.g. broken pipe) only matters if the child otherwise
    // looked healthy; a failed child is reported as such either way.
    let write_result = writer.join().expect("writer thread");
    if !status.success() {
        return Err(BacktranslateError::CommandFailed { status });
    }
    write_result.map_err(BacktranslateError::CommandIo)?;

    let mut sentences = Vec::with_capacity(lines.len());
    for line in &lines {
        let reply: CommandResponse = serde_json::from_str(line)
            .map_err(|e| BacktranslateError::CommandProtocol(format!("{e} in line '{line}'")))?;
        sentences.push(reply.sentence);
    }
    if sentences.len() != mrs.len() {
        return Err(BacktranslateError::LengthMismatch {
            expected: mrs.len(),
            got: sentences.len(),
        });
    }
    Ok(sentences)
}

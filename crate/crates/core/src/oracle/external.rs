//! Line protocol for oracles living in another process.
//!
//! ```text
//! engine -> oracle   HELLO m=<m>\n
//! oracle -> engine   OK\n
//! engine -> oracle   <m floats, space separated, 17 significant digits>\n
//! oracle -> engine   +1\n  |  -1\n
//! ```
//!
//! [`ExternalOracle`] is the engine side, [`serve`] the oracle side.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::{check_dim, Decision, DecisionOracle, OracleError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// One request line without the trailing newline.
pub fn format_request(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

/// Parses a request line; `dim` additionally checks the value count.
pub fn parse_request(line: &str, dim: Option<usize>) -> Result<Vec<f64>, OracleError> {
    let values = line
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| OracleError::Protocol(format!("`{t}` is not a finite number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(d) = dim {
        check_dim(d, values.len())?;
    }
    Ok(values)
}

struct Channel {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<io::Result<String>>,
    broken: bool,
}

impl Channel {
    fn send(&mut self, line: &str) -> Result<(), OracleError> {
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()?;
        Ok(())
    }

    fn receive(&mut self, timeout: Duration) -> Result<String, OracleError> {
        match self.replies.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(e.into()),
            Err(RecvTimeoutError::Timeout) => Err(OracleError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(OracleError::Protocol("oracle process closed its output".into()))
            }
        }
    }
}

/// Engine side of the line protocol. Requests are serialized over the
/// single pipe; a timeout or malformed reply leaves the oracle unusable.
pub struct ExternalOracle {
    dim: usize,
    timeout: Duration,
    channel: Mutex<Channel>,
}

impl ExternalOracle {
    /// Starts `program args...` and performs the handshake.
    pub fn spawn(program: &str, args: &[String], dim: usize, timeout: Duration) -> Result<Self, OracleError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut channel = Channel {
            child,
            stdin,
            replies: rx,
            broken: false,
        };
        channel.send(&format!("HELLO m={dim}"))?;
        let reply = channel.receive(timeout)?;
        if reply.trim_end() != "OK" {
            return Err(OracleError::Protocol(format!("expected `OK` handshake, got `{reply}`")));
        }
        Ok(Self {
            dim,
            timeout,
            channel: Mutex::new(channel),
        })
    }

    /// Splits `command` on whitespace into program and arguments.
    pub fn from_command_line(command: &str, dim: usize, timeout: Duration) -> Result<Self, OracleError> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| OracleError::Domain("external oracle command is empty".into()))?;
        let args: Vec<String> = parts.collect();
        Self::spawn(&program, &args, dim, timeout)
    }
}

impl DecisionOracle for ExternalOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn answer(&self, x: &[f64]) -> Result<Decision, OracleError> {
        check_dim(self.dim, x.len())?;
        let mut channel = self.channel.lock().unwrap_or_else(|p| p.into_inner());
        if channel.broken {
            return Err(OracleError::Protocol("oracle stream is out of sync after an earlier failure".into()));
        }
        let result = channel.send(&format_request(x)).and_then(|()| {
            let reply = channel.receive(self.timeout)?;
            match reply.trim_end() {
                "+1" => Ok(Decision::Adversarial),
                "-1" => Ok(Decision::Benign),
                other => Err(OracleError::Protocol(format!("unexpected reply `{other}`"))),
            }
        });
        if result.is_err() {
            channel.broken = true;
        }
        result
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        let channel = self.channel.get_mut().unwrap_or_else(|p| p.into_inner());
        let _ = channel.child.kill();
        let _ = channel.child.wait();
    }
}

/// Oracle side: answers requests from `input` with `oracle` until EOF.
/// Returns the number of answered queries.
pub fn serve(
    oracle: &(impl DecisionOracle + ?Sized),
    input: impl BufRead,
    mut output: impl Write,
) -> Result<u64, OracleError> {
    let mut lines = input.lines();
    let hello = match lines.next() {
        Some(line) => line?,
        None => return Ok(0),
    };
    let m: usize = hello
        .trim_end()
        .strip_prefix("HELLO m=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| OracleError::Protocol(format!("expected `HELLO m=<m>`, got `{hello}`")))?;
    if m != oracle.dim() {
        writeln!(output, "ERR dimension {m} does not match oracle dimension {}", oracle.dim())?;
        output.flush()?;
        return Err(OracleError::DimensionMismatch {
            expected: oracle.dim(),
            got: m,
        });
    }
    writeln!(output, "OK")?;
    output.flush()?;

    let mut served = 0;
    for line in lines {
        let x = parse_request(&line?, Some(m))?;
        writeln!(output, "{}", oracle.answer(&x)?)?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}

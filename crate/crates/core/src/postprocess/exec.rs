//! Running a test binary under a wall-clock limit.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::PostprocessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Pass,
    AssertionFailure,
    Crash,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecResult {
    pub status: ExecStatus,
    pub stdout: String,
    pub stderr: String,
    /// At least the limit when `status` is `Timeout`.
    pub duration: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecLimits {
    pub timeout: Duration,
    /// Working directory; created if missing.
    pub workdir: PathBuf,
    pub env: Vec<(String, String)>,
}

const ASSERTION_MARKERS: [&str; 5] = ["[  FAILED  ]", "Failure", "Assertion", "assert", "Expected"];

/// Exit 0 is a pass, a signal is a crash, a nonzero exit with assertion text
/// is an assertion failure, any other nonzero exit is a crash.
pub fn execute_test(binary: &Path, limits: &ExecLimits) -> Result<ExecResult, PostprocessError> {
    std::fs::create_dir_all(&limits.workdir)
        .map_err(|e| PostprocessError::io(&limits.workdir, e))?;
    let start = Instant::now();
    let mut child = Command::new(binary)
        .current_dir(&limits.workdir)
        .envs(limits.env.iter().map(|(k, v)| (k, v)))
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| PostprocessError::io(binary, e))?;
    let drain = |r: Option<Box<dyn Read + Send>>| {
        thread::spawn(move || {
            let mut buf = Vec::new();
            if let Some(mut r) = r {
                let _ = r.read_to_end(&mut buf);
            }
            String::from_utf8_lossy(&buf).into_owned()
        })
    };
    let out = drain(
        child
            .stdout
            .take()
            .map(|s| Box::new(s) as Box<dyn Read + Send>),
    );
    let err = drain(
        child
            .stderr
            .take()
            .map(|s| Box::new(s) as Box<dyn Read + Send>),
    );

    let mut timed_out = false;
    let status = loop {
        if let Some(s) = child
            .try_wait()
            .map_err(|e| PostprocessError::io(binary, e))?
        {
            break Some(s);
        }
        if start.elapsed() >= limits.timeout {
            let _ = child.kill();
            let _ = child.wait();
            timed_out = true;
            break None;
        }
        thread::sleep(Duration::from_millis(5));
    };
    let duration = start.elapsed();
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    let status = match status {
        _ if timed_out => ExecStatus::Timeout,
        Some(s) if s.success() => ExecStatus::Pass,
        Some(s) if s.code().is_none() => ExecStatus::Crash,
        _ => {
            if ASSERTION_MARKERS
                .iter()
                .any(|m| stdout.contains(m) || stderr.contains(m))
            {
                ExecStatus::AssertionFailure
            } else {
                ExecStatus::Crash
            }
        }
    };
    Ok(ExecResult {
        status,
        stdout,
        stderr,
        duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits(secs: f64) -> ExecLimits {
        ExecLimits {
            timeout: Duration::from_secs_f64(secs),
            workdir: std::env::temp_dir(),
            env: vec![],
        }
    }

    fn script(body: &str) -> (tempfile::TempDir, PathBuf) {
        use std::os::unix::fs::PermissionsExt;
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("t.sh");
        std::fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
        (d, p)
    }

    #[test]
    fn status_taxonomy() {
        let cases = [
            ("exit 0", ExecStatus::Pass),
            (
                "echo '[  FAILED  ] A.B'; exit 1",
                ExecStatus::AssertionFailure,
            ),
            ("exit 3", ExecStatus::Crash),
            ("kill -SEGV $$", ExecStatus::Crash),
        ];
        for (body, want) in cases {
            let (_d, p) = script(body);
            assert_eq!(
                execute_test(&p, &limits(5.0)).unwrap().status,
                want,
                "{body}"
            );
        }
    }

    #[test]
    fn timeout_respects_limit() {
        let (_d, p) = script("exec sleep 30");
        let r = execute_test(&p, &limits(0.3)).unwrap();
        assert_eq!(r.status, ExecStatus::Timeout);
        assert!(r.duration >= Duration::from_secs_f64(0.3));
        assert!(r.duration < Duration::from_secs(10));
    }

    #[test]
    fn streams_captured() {
        let (_d, p) = script("echo out; echo err >&2");
        let r = execute_test(&p, &limits(5.0)).unwrap();
        assert_eq!((r.stdout.as_str(), r.stderr.as_str()), ("out\n", "err\n"));
    }
}

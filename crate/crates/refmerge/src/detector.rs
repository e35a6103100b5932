//! Runs an external refactoring detector once per commit under a time
//! budget.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use log::{info, warn};
use refmerge_core::refactoring::{parse_refactoring_records, DetectorRunLog, DetectorStatus, ParsedRecords};
use refmerge_core::Sha;
use wait_timeout::ChildExt;

use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT_SECS: u64 = 300;

#[derive(Debug, Clone)]
pub struct Detector {
    template: String,
    program: PathBuf,
    args: Vec<String>,
    timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorOutput {
    pub parsed: ParsedRecords,
    pub log: DetectorRunLog,
}

impl Detector {
    /// Parses a command template such as `"<exe> -c {repo} {commit} -json"`.
    /// Fails when the executable cannot be found.
    pub fn from_template(template: &str, timeout: Duration) -> Result<Detector> {
        let mut parts = template.split_whitespace().map(str::to_string);
        let exe = parts.next().ok_or_else(|| Error::Config("detector command is empty".into()))?;
        let program =
            resolve_executable(&exe).ok_or_else(|| Error::Config(format!("detector executable {exe:?} not found")))?;
        Ok(Detector { template: template.to_string(), program, args: parts.collect(), timeout })
    }

    /// The template as configured, used as the detector's identity.
    pub fn identity(&self) -> &str {
        &self.template
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn command(&self, repo: &Path, commit: &Sha) -> Command {
        let repo = repo.to_string_lossy();
        let commit = commit.to_hex();
        let mut cmd = Command::new(&self.program);
        cmd.args(self.args.iter().map(|a| a.replace("{repo}", &repo).replace("{commit}", &commit)))
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        #[cfg(unix)]
        {
            use std::os::unix::process::CommandExt;
            cmd.process_group(0);
        }
        cmd
    }

    /// Runs the detector on one commit. Timeouts and detector failures are
    /// reported in the log, not as errors.
    pub fn run(&self, repo: &Path, commit: Sha) -> Result<DetectorOutput> {
        let start = Instant::now();
        let mut child = self.command(repo, &commit).spawn().map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied => {
                Error::Config(format!("cannot run detector {}: {e}", self.program.display()))
            }
            _ => Error::io(&self.program, e),
        })?;
        let stdout = drain(child.stdout.take());
        let stderr = drain(child.stderr.take());

        let status = child.wait_timeout(self.timeout).map_err(|e| Error::io(&self.program, e))?;
        let Some(status) = status else {
            kill_tree(&mut child);
            let elapsed_ms = (start.elapsed().as_millis() as u64).max(self.timeout.as_millis() as u64);
            warn!("detector timed out on {commit} after {elapsed_ms} ms");
            return Ok(DetectorOutput {
                parsed: ParsedRecords::default(),
                log: DetectorRunLog { commit, status: DetectorStatus::Timeout, elapsed_ms, stderr: None },
            });
        };
        let out = stdout.join().unwrap_or_default();
        let err = String::from_utf8_lossy(&stderr.join().unwrap_or_default()).into_owned();
        let elapsed_ms = start.elapsed().as_millis() as u64;
        let failed = |stderr: String| DetectorOutput {
            parsed: ParsedRecords::default(),
            log: DetectorRunLog { commit, status: DetectorStatus::DetectorError, elapsed_ms, stderr: Some(stderr) },
        };
        if !status.success() {
            warn!("detector failed on {commit}: {status}");
            return Ok(failed(err));
        }
        match parse_refactoring_records(&out) {
            Ok(parsed) => Ok(DetectorOutput {
                parsed,
                log: DetectorRunLog { commit, status: DetectorStatus::Ok, elapsed_ms, stderr: None },
            }),
            Err(e) => Ok(failed(format!("unreadable detector output: {e}"))),
        }
    }

    /// Runs `commits` on up to `workers` threads. Results come back in input
    /// order regardless of scheduling.
    pub fn run_many(&self, repo: &Path, commits: &[Sha], workers: usize) -> Result<Vec<DetectorOutput>> {
        let next = AtomicUsize::new(0);
        let workers = workers.clamp(1, commits.len().max(1));
        let mut slots: Vec<Option<Result<DetectorOutput>>> = (0..commits.len()).map(|_| None).collect();
        thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut done = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            let Some(&commit) = commits.get(i) else { break };
                            done.push((i, self.run(repo, commit)));
                        }
                        done
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("detector worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        let out: Vec<DetectorOutput> =
            slots.into_iter().map(|s| s.expect("every commit was run")).collect::<Result<_>>()?;
        info!(
            "detector ran on {} commits: {} timed out",
            out.len(),
            out.iter().filter(|o| o.log.status == DetectorStatus::Timeout).count()
        );
        Ok(out)
    }
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        buf
    })
}

/// Kills the child and anything it spawned in its process group.
fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
    let _ = child.wait();
}

fn resolve_executable(exe: &str) -> Option<PathBuf> {
    let path = Path::new(exe);
    if path.components().count() > 1 {
        return path.is_file().then(|| path.to_path_buf());
    }
    std::env::split_paths(&std::env::var_os("PATH")?).map(|dir| dir.join(exe)).find(|candidate| candidate.is_file())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_executable_is_a_config_error() {
        let err = Detector::from_template("/definitely/not/here -c {repo}", Duration::from_secs(1)).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(Detector::from_template("   ", Duration::from_secs(1)).is_err());
    }

    #[test]
    fn resolves_through_path() {
        assert!(resolve_executable("sh").is_some());
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Executor that drives a real container runtime (`docker` or a compatible
//! CLI), locally or over ssh, with memory and CPU limits from the
//! [`ContainerSpec`].
//!
//! Target addresses are either `local` or `ssh://[user@]host[:port]`.

use std::io::Read;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use benchlite_core::{ContainerSpec, TargetDescriptor};

use crate::orchestrator::{ContainerHandle, ExecError, ExecOutput, Executor};

const CONTROL_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone)]
pub struct ContainerExecutor {
    pub runtime: String,
    pub image: String,
}

impl ContainerExecutor {
    pub fn new(runtime: impl Into<String>, image: impl Into<String>) -> Self {
        Self {
            runtime: runtime.into(),
            image: image.into(),
        }
    }

    /// argv running `args` on the machine behind `address`.
    pub fn command_for(address: &str, args: &[String]) -> Result<Vec<String>, ExecError> {
        if address.is_empty() || address == "local" {
            return Ok(args.to_vec());
        }
        let rest = address
            .strip_prefix("ssh://")
            .ok_or_else(|| ExecError::Unreachable(format!("unsupported address `{address}`")))?;
        let (host, port) = match rest.rsplit_once(':') {
            Some((h, p)) if p.chars().all(|c| c.is_ascii_digit()) && !p.is_empty() => (h, Some(p)),
            _ => (rest, None),
        };
        let mut argv = vec!["ssh".to_string(), "-o".to_string(), "BatchMode=yes".to_string()];
        if let Some(p) = port {
            argv.push("-p".to_string());
            argv.push(p.to_string());
        }
        argv.push(host.to_string());
        let remote = shlex::try_join(args.iter().map(String::as_str))
            .map_err(|e| ExecError::Failed(format!("cannot quote remote command: {e}")))?;
        argv.push(remote);
        Ok(argv)
    }

    pub fn provision_args(&self, spec: &ContainerSpec) -> Vec<String> {
        let mem = format!("{}m", spec.memory_mb());
        vec![
            self.runtime.clone(),
            "run".into(),
            "-d".into(),
            "--memory".into(),
            mem.clone(),
            "--memory-swap".into(),
            mem,
            "--cpus".into(),
            spec.cpu_cores().to_string(),
            self.image.clone(),
            "sleep".into(),
            "infinity".into(),
        ]
    }

    pub fn exec_args(&self, container_id: &str, command: &str) -> Vec<String> {
        vec![
            self.runtime.clone(),
            "exec".into(),
            container_id.into(),
            "sh".into(),
            "-c".into(),
            command.into(),
        ]
    }

    pub fn teardown_args(&self, container_id: &str) -> Vec<String> {
        vec![self.runtime.clone(), "rm".into(), "-f".into(), container_id.into()]
    }
}

/// Runs argv, killing it once `timeout` elapses.
fn run_with_timeout(argv: &[String], timeout: Duration) -> Result<ExecOutput, ExecError> {
    let (program, args) = argv.split_first().ok_or_else(|| ExecError::Failed("empty command".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| ExecError::Unreachable(format!("{program}: {e}")))?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });
    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(ExecError::TimedOut);
            }
            Ok(None) => thread::sleep(Duration::from_millis(50)),
            Err(e) => return Err(ExecError::Failed(e.to_string())),
        }
    };
    let stdout = reader.join().unwrap_or_default();
    Ok(ExecOutput {
        stdout,
        exit_code: status.code().unwrap_or(-1),
    })
}

fn address_of(handle: &ContainerHandle) -> (&str, &str) {
    // Handle ids are `<address>#<container id>`.
    handle.id.rsplit_once('#').unwrap_or(("local", handle.id.as_str()))
}

impl Executor for ContainerExecutor {
    fn provision(
        &self,
        target: &TargetDescriptor,
        container: &ContainerSpec,
        run_id: &str,
    ) -> Result<ContainerHandle, ExecError> {
        let argv = Self::command_for(&target.address, &self.provision_args(container))?;
        let out = run_with_timeout(&argv, CONTROL_TIMEOUT)?;
        let id = out.stdout.trim();
        if out.exit_code != 0 || id.is_empty() {
            return Err(ExecError::Failed(format!("container start exited with {}", out.exit_code)));
        }
        Ok(ContainerHandle {
            id: format!("{}#{id}", target.address),
            target: target.name.clone(),
            run_id: run_id.to_string(),
        })
    }

    fn exec(&self, handle: &ContainerHandle, command: &str, timeout: Duration) -> Result<ExecOutput, ExecError> {
        let (address, id) = address_of(handle);
        run_with_timeout(&Self::command_for(address, &self.exec_args(id, command))?, timeout)
    }

    fn teardown(&self, handle: ContainerHandle) -> Result<(), ExecError> {
        let (address, id) = address_of(&handle);
        let out = run_with_timeout(&Self::command_for(address, &self.teardown_args(id))?, CONTROL_TIMEOUT)?;
        if out.exit_code != 0 {
            return Err(ExecError::Failed(format!("container removal exited with {}", out.exit_code)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_map_to_runtime_flags() {
        let exec = ContainerExecutor::new("docker", "benchlite/lmbench:latest");
        let args = exec.provision_args(&ContainerSpec::new(100, 1).unwrap());
        let joined = args.join(" ");
        assert!(joined.contains("--memory 100m --memory-swap 100m --cpus 1"));
        assert!(joined.starts_with("docker run -d"));
    }

    #[test]
    fn local_and_ssh_addresses() {
        let args = vec!["docker".to_string(), "rm".into(), "-f".into(), "abc".into()];
        assert_eq!(ContainerExecutor::command_for("local", &args).unwrap(), args);
        let ssh = ContainerExecutor::command_for("ssh://ec2-user@10.0.0.5:2222", &args).unwrap();
        assert_eq!(ssh[..5], ["ssh", "-o", "BatchMode=yes", "-p", "2222"]);
        assert_eq!(ssh[5], "ec2-user@10.0.0.5");
        assert_eq!(ssh[6], "docker rm -f abc");
        assert!(ContainerExecutor::command_for("ftp://x", &args).is_err());
    }

    #[test]
    fn remote_command_is_quoted() {
        let exec = ContainerExecutor::new("docker", "img");
        let argv = ContainerExecutor::command_for("ssh://h", &exec.exec_args("c1", "run suite; echo done")).unwrap();
        assert_eq!(argv.last().unwrap(), "docker exec c1 sh -c 'run suite; echo done'");
    }

    #[test]
    fn timeout_kills_process() {
        let argv = vec!["sleep".to_string(), "5".to_string()];
        let start = Instant::now();
        assert_eq!(run_with_timeout(&argv, Duration::from_millis(200)), Err(ExecError::TimedOut));
        assert!(start.elapsed() < Duration::from_secs(3));
    }

    #[test]
    fn captures_stdout_and_status() {
        let argv = vec!["sh".to_string(), "-c".to_string(), "echo hi; exit 3".to_string()];
        let out = run_with_timeout(&argv, Duration::from_secs(5)).unwrap();
        assert_eq!(out.stdout, "hi\n");
        assert_eq!(out.exit_code, 3);
    }
}

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::bits::pack_bytes;
use crate::error::{AgarError, Result};

/// User-supplied compressor: reads packed bytes on stdin, writes the
/// compressed form on stdout. Codelength is 8 bits per output byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExternalCompressor {
    pub command: String,
    pub version: String,
}

impl ExternalCompressor {
    pub fn codelength_bits(&self, x: &[u8]) -> Result<u64> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| AgarError::External(format!("{}: {e}", self.command)))?;
        let input = pack_bytes(x);
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            stdin
                .write_all(&input)
                .map_err(|e| AgarError::External(e.to_string()))?;
        }
        let out = child
            .wait_with_output()
            .map_err(|e| AgarError::External(e.to_string()))?;
        if !out.status.success() {
            return Err(AgarError::External(format!(
                "{} exited with {}",
                self.command, out.status
            )));
        }
        Ok(8 * out.stdout.len() as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_is_identity_length() {
        let c = ExternalCompressor { command: "cat".into(), version: "coreutils".into() };
        assert_eq!(c.codelength_bits(&[1; 20]).unwrap(), 24);
    }

    #[test]
    fn failing_command_is_reported() {
        let c = ExternalCompressor { command: "exit 3".into(), version: String::new() };
        assert!(matches!(c.codelength_bits(&[0]), Err(AgarError::External(_))));
    }
}

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};
use utxo_lab::codec::sha256_hex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Clean,
    Violation,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    pub status: Status,
    pub witness: Value,
}

impl Verdict {
    pub fn new(check: &str, subject: Option<&str>, clean: bool, witness: Value) -> Self {
        Verdict {
            check: check.to_string(),
            subject: subject.map(str::to_string),
            status: if clean {
                Status::Clean
            } else {
                Status::Violation
            },
            witness,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub verdicts: Vec<Verdict>,
    pub inputs_digest: String,
}

impl Report {
    pub fn new(command: &str, digest: Digest) -> Self {
        Report {
            command: command.to_string(),
            verdicts: Vec::new(),
            inputs_digest: digest.finish(),
        }
    }

    pub fn push(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn is_clean(&self) -> bool {
        self.verdicts.iter().all(|v| v.status == Status::Clean)
    }

    pub fn render_text(&self) -> String {
        let mut s = format!("{}\n", self.command);
        for v in &self.verdicts {
            let status = match v.status {
                Status::Clean => "clean",
                Status::Violation => "VIOLATION",
            };
            let subject = v
                .subject
                .as_deref()
                .map(|x| format!(" [{x}]"))
                .unwrap_or_default();
            let _ = write!(s, "  {}{}: {}", v.check, subject, status);
            if !v.witness.is_null() {
                let _ = write!(s, "  {}", v.witness);
            }
            s.push('\n');
        }
        let _ = writeln!(s, "inputs-digest: {}", self.inputs_digest);
        s
    }

    pub fn render_json(&self) -> String {
        utxo_lab::codec::to_json(self)
    }
}

/// Collects the parameters and file contents a report depends on.
///
/// File paths are not part of the digest, only their contents in argument order
/// after sorting by path.
#[derive(Default)]
pub struct Digest {
    params: Vec<(String, Value)>,
    files: Vec<String>,
}

impl Digest {
    pub fn param(mut self, name: &str, value: impl Serialize) -> Self {
        self.params.push((
            name.to_string(),
            serde_json::to_value(value).expect("serializable"),
        ));
        self
    }

    pub fn file(&mut self, bytes: &[u8]) {
        self.files.push(sha256_hex(bytes));
    }

    fn finish(self) -> String {
        let params: serde_json::Map<String, Value> = self.params.into_iter().collect();
        let doc = json!({ "params": params, "files": self.files });
        sha256_hex(doc.to_string().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_covers_params_and_contents() {
        let mut a = Digest::default().param("seed", 1);
        a.file(b"x");
        let mut b = Digest::default().param("seed", 1);
        b.file(b"x");
        assert_eq!(a.finish(), b.finish());
        let mut c = Digest::default().param("seed", 2);
        c.file(b"x");
        let mut d = Digest::default().param("seed", 1);
        d.file(b"y");
        assert_ne!(c.finish(), d.finish());
    }

    #[test]
    fn text_and_status() {
        let mut r = Report::new("t", Digest::default());
        r.push(Verdict::new("a", Some("f"), true, Value::Null));
        assert!(r.is_clean());
        r.push(Verdict::new("b", None, false, json!({ "i": 0 })));
        assert!(!r.is_clean());
        let text = r.render_text();
        assert!(text.contains("  a [f]: clean\n"));
        assert!(text.contains("  b: VIOLATION  {\"i\":0}\n"));
    }
}

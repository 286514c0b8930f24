use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// JSON formatter writing every float with seventeen significant digits.
struct SigFigs;

impl serde_json::ser::Formatter for SigFigs {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(num(value).as_bytes())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigs);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// CSV text with the resolved configuration echoed in leading comment lines.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<T: Serialize>(command: &str, config: &T, header: &[&str]) -> Self {
        let mut text = format!("# loopdyn {command}\n# config {}", to_json(config));
        text.push_str(&header.join(","));
        text.push('\n');
        Csv { text }
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Files produced by a command, written only after every computation succeeded.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, String)>,
}

impl Artifacts {
    pub fn add(&mut self, path: PathBuf, contents: String) {
        self.files.push((path, contents));
    }

    pub fn paths(&self) -> Vec<&Path> {
        self.files.iter().map(|(p, _)| p.as_path()).collect()
    }

    pub fn write(&self) -> Result<()> {
        for (path, contents) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
            }
            std::fs::write(path, contents).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        }
        Ok(())
    }
}

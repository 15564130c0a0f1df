use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rmab_core::fmt::sig17;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::CliError;

/// Pretty JSON with every float at 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident),* $(,)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
                self.0.$name(w)
            }
        )*
    };
}

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    forward!(begin_array, end_array, end_array_value, begin_object, end_object, begin_object_value, end_object_value);
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Io(format!("serializing JSON: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

/// Where a command's main output goes.
#[derive(Debug, Clone)]
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    /// `--out` wins; otherwise `$RMAB_OUT_DIR/<default_name>`; otherwise stdout.
    pub fn resolve(out: Option<&Path>, out_dir: Option<&Path>, default_name: &str) -> Self {
        match (out, out_dir) {
            (Some(p), _) => Sink::File(p.to_path_buf()),
            (None, Some(d)) => Sink::File(d.join(default_name)),
            (None, None) => Sink::Stdout,
        }
    }

    pub fn write(&self, bytes: &[u8]) -> Result<(), CliError> {
        match self {
            Sink::Stdout => {
                let mut out = io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::Io(format!("writing stdout: {e}")))
            }
            Sink::File(p) => write_file(p, bytes),
        }
    }

    pub fn dir(&self) -> Option<PathBuf> {
        match self {
            Sink::Stdout => None,
            Sink::File(p) => p.parent().map(Path::to_path_buf),
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
            c: Option<f64>,
            n: u64,
        }
        let s = to_json(&S {
            a: 0.1,
            b: vec![1.0, 1.0 / 3.0],
            c: Some(f64::NAN),
            n: 3,
        })
        .unwrap();
        assert!(s.contains("\"a\": 0.10000000000000001"), "{s}");
        assert!(s.contains("0.33333333333333331"), "{s}");
        assert!(s.contains("\"c\": null"), "{s}");
        assert!(s.contains("\"n\": 3"), "{s}");
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64().unwrap(), 0.1);
    }
}

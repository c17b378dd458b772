//! JSON emission with 17 significant digits, the run manifest and the
//! CLI error type with its exit-code mapping.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use xsect_core::XsectError;

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NONEXISTENCE: i32 = 2;
pub const EXIT_FAIL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Core(XsectError),
    Usage(String),
    Io(String),
    Parse(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Parse(_) => "parse",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_nonexistence() => EXIT_NONEXISTENCE,
            _ => EXIT_ERROR,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Io(m) | CliError::Parse(m) => m.clone(),
        }
    }
}

impl From<XsectError> for CliError {
    fn from(e: XsectError) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments as given, minus output destinations.
    pub arguments: Vec<String>,
    /// Input flag → SHA-256 of the file contents.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: String, argv: &[String]) -> Self {
        let mut arguments = Vec::new();
        let mut skip = false;
        for a in argv {
            if skip {
                skip = false;
                continue;
            }
            if a == "--out" || a == "--dump" {
                skip = true;
                continue;
            }
            if a.starts_with("--out=") || a.starts_with("--dump=") {
                continue;
            }
            arguments.push(a.clone());
        }
        RunManifest {
            command,
            arguments,
            inputs: BTreeMap::new(),
            seed: None,
            tolerances: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
    nonexistence: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<&'a RunManifest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBody<'a>>,
}

/// Renders `{"manifest": …, "result": …}`.
pub fn render_result<T: Serialize>(manifest: &RunManifest, result: &T) -> CliResult<String> {
    to_json(&Envelope { manifest: Some(manifest), result: Some(result), error: None })
}

/// Renders `{"manifest": …, "error": {code, message, nonexistence}}`.
pub fn render_error(manifest: Option<&RunManifest>, err: &CliError) -> String {
    let body = ErrorBody {
        code: err.code(),
        message: err.message(),
        nonexistence: err.exit_code() == EXIT_NONEXISTENCE,
    };
    let env: Envelope<'_, ()> = Envelope { manifest, result: None, error: Some(body) };
    to_json(&env).unwrap_or_else(|e| format!("{{\"error\":{{\"code\":\"internal\",\"message\":{:?}}}}}\n", e.message()))
}

/// Pretty JSON with every float printed to 17 significant digits.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> CliResult<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter::default());
    value.serialize(&mut ser).map_err(|e| CliError::Parse(format!("serialisation failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Parse(e.to_string()))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// `%.17g` without the C quirks: trailing zeros trimmed, a decimal point
/// always present, exponent form outside `[1e−5, 1e17)`.
pub fn format_sig17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if mant.starts_with('-') { "-" } else { "" };
    let all: String = mant.chars().filter(char::is_ascii_digit).collect();
    let digits = all.trim_end_matches('0');
    if (-5..17).contains(&exp) {
        let (int, frac) = if exp >= 0 {
            let e = exp as usize + 1;
            if digits.len() <= e {
                (format!("{digits}{}", "0".repeat(e - digits.len())), String::new())
            } else {
                (digits[..e].to_string(), digits[e..].to_string())
            }
        } else {
            ("0".to_string(), format!("{}{digits}", "0".repeat((-exp - 1) as usize)))
        };
        let frac = if frac.is_empty() { "0".to_string() } else { frac };
        format!("{sign}{int}.{frac}")
    } else {
        let (head, tail) = digits.split_at(1);
        let tail = if tail.is_empty() { "0" } else { tail };
        format!("{sign}{head}.{tail}e{exp}")
    }
}

#[derive(Default)]
struct SigFormatter {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for SigFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_sig17(value).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_sig17(0.1), "0.10000000000000001");
        assert_eq!(format_sig17(2.0), "2.0");
        assert_eq!(format_sig17(-0.5), "-0.5");
        assert_eq!(format_sig17(1e20), "1.0e20");
        assert_eq!(format_sig17(1.5e-7), "1.4999999999999999e-7");
        assert_eq!(format_sig17(123456.75), "123456.75");
        assert_eq!(format_sig17(0.0), "0.0");
        for v in [0.1, 1.0 / 3.0, -7.25e-300, 6.02e23, 1e16, 12345678901234567.0] {
            assert_eq!(format_sig17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn envelope_shape() {
        let m = RunManifest::new("classify".into(), &["--out".into(), "x.json".into(), "--mode".into()]);
        assert_eq!(m.arguments, vec!["--mode".to_string()]);
        let s = render_result(&m, &vec![0.25f64]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["result"][0], 0.25);
        assert_eq!(v["manifest"]["command"], "classify");
    }
}

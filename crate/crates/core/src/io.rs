//! Result files: CSV tables and JSON records with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::domain::{GridDomain, GridFunction};
use crate::error::{Error, Result};

/// A float with 17 significant digits (`-inf`, `inf`, `nan` spelled out).
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON output whose floats carry 17 significant digits; non-finite
/// floats become `null`.
struct SigDigits(PrettyFormatter<'static>);

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, SigDigits(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(format!("cannot serialize: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    fs::write(path, contents).map_err(io_err)
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `node_index,x,y,interior,distance` for every grid node.
pub fn domain_csv(dom: &GridDomain) -> String {
    let mut out = String::from("node_index,x,y,interior,distance\n");
    for k in 0..dom.node_count() {
        let [x, y] = dom.position(k);
        let _ = writeln!(
            out,
            "{k},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(y),
            u8::from(dom.is_interior(k)),
            fmt_f64(dom.distance[k])
        );
    }
    out
}

/// `node_index,x,y,value` for every interior node.
pub fn function_csv(u: &GridFunction) -> String {
    let dom = u.domain();
    let mut out = String::from("node_index,x,y,value\n");
    for (&k, &v) in dom.interior_nodes().iter().zip(u.values()) {
        let [x, y] = dom.position(k);
        let _ = writeln!(out, "{k},{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(v));
    }
    out
}

/// Reads a [`function_csv`] file back onto `dom`. The file must list exactly
/// the interior nodes of `dom`, in order.
pub fn read_function_csv(dom: &Arc<GridDomain>, path: &Path) -> Result<GridFunction> {
    let text = read_file(path)?;
    let bad = |msg: String| Error::Parse(format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    match lines.next() {
        Some("node_index,x,y,value") => {}
        other => return Err(bad(format!("unexpected header {other:?}"))),
    }
    let mut values = Vec::with_capacity(dom.interior_count());
    for (row, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("row {} has {} fields", row + 1, fields.len())));
        }
        let node: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| bad(format!("row {}: bad node index {:?}", row + 1, fields[0])))?;
        if dom.interior_nodes().get(values.len()) != Some(&node) {
            return Err(Error::DomainMismatch);
        }
        let v: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| bad(format!("row {}: bad value {:?}", row + 1, fields[3])))?;
        values.push(v);
    }
    if values.len() != dom.interior_count() {
        return Err(Error::DomainMismatch);
    }
    GridFunction::new(dom.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_domain, Shape};

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        for x in [0.1, 1.0 / 3.0, 6.02e23, -1e-300] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_floats() {
        #[derive(Serialize)]
        struct R {
            a: f64,
            b: Vec<f64>,
            n: usize,
        }
        let s = to_json(&R {
            a: 0.5,
            b: vec![f64::NAN, 1.0 / 3.0],
            n: 3,
        })
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.5));
        assert!(v["b"][0].is_null());
        assert_eq!(v["b"][1].as_f64(), Some(1.0 / 3.0));
        assert!(s.contains("5.0000000000000000e-1"));
        assert_eq!(v["n"].as_u64(), Some(3));
    }

    #[test]
    fn function_csv_round_trip() {
        let d = Arc::new(build_domain(Shape::Disk { radius: 0.5 }, 1.0 / 8.0, None).unwrap());
        let u = GridFunction::from_fn(d.clone(), |x, y| (x + 0.3).exp() * y.cos() / 3.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/u.csv");
        write_file(&path, &function_csv(&u)).unwrap();
        let back = read_function_csv(&d, &path).unwrap();
        assert_eq!(back.values(), u.values());
        let other = Arc::new(build_domain(Shape::Disk { radius: 0.5 }, 1.0 / 4.0, None).unwrap());
        assert!(matches!(
            read_function_csv(&other, &path),
            Err(Error::DomainMismatch)
        ));
        assert!(matches!(
            read_function_csv(&d, &dir.path().join("missing.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn domain_csv_shape() {
        let d = build_domain(
            Shape::Rectangle {
                width: 1.0,
                height: 0.5,
            },
            0.25,
            Some(1),
        )
        .unwrap();
        let csv = domain_csv(&d);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "node_index,x,y,interior,distance");
        assert_eq!(lines.len(), d.node_count() + 1);
        let interior = lines[1..]
            .iter()
            .filter(|l| l.split(',').nth(3) == Some("1"))
            .count();
        assert_eq!(interior, d.interior_count());
    }
}

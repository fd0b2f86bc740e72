//! Report serialization: JSON with every float written to 17 significant
//! digits, and trajectory CSV (`t,x1,...,xn`, LF line endings).

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::sde::Trajectory;

/// `d.dddddddddddddddde±x`: 17 significant digits, round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Fixed17<F>(F);

impl<F: Formatter> Formatter for Fixed17<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty-printed JSON with fixed 17-digit floats and a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        Fixed17(PrettyFormatter::with_indent(b"  ")),
    );
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Single-line JSON with fixed 17-digit floats.
pub fn to_json_compact<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(CompactFormatter));
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Writes `t,x1,...,xn` rows for every recorded sample.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=traj.n).map(|i| format!("x{i}")))
        .collect();
    w.write_all(header.join(",").as_bytes())?;
    w.write_all(b"\n")?;
    let mut line = String::new();
    for s in 0..traj.len() {
        line.clear();
        line.push_str(&fmt_f64(traj.times[s]));
        for x in traj.state(s) {
            line.push(',');
            line.push_str(&fmt_f64(*x));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        let s = to_json_compact(&serde_json::json!({"a": [0.1, 2.0], "b": 3, "c": null})).unwrap();
        assert_eq!(
            s,
            r#"{"a":[1.0000000000000001e-1,2.0000000000000000e0],"b":3,"c":null}"#
        );
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"][0].as_f64(), Some(0.1));
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(to_json_compact(&vec![f64::NAN]).unwrap(), "[null]");
    }

    #[test]
    fn csv_layout() {
        let traj = Trajectory {
            n: 2,
            times: vec![0.0, 0.5],
            states: vec![1.0, 2.0, 3.0, 4.0],
            log_states: vec![0.0; 4],
            drift_average: vec![0.0; 2],
            noise_average: vec![0.0; 2],
        };
        let mut out = Vec::new();
        write_trajectory_csv(&mut out, &traj).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1,x2");
        assert_eq!(lines.len(), 3);
        assert!(text.ends_with('\n') && !text.contains('\r'));
        assert_eq!(
            lines[2].split(',').nth(2).unwrap().parse::<f64>().unwrap(),
            4.0
        );
    }
}

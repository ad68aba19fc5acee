//! TSV and JSON renderings of a sweep.

use std::io;

use hyperk::{MetricsRow, SweepResult};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

pub const TSV_HEADER: &str = "k\tmean_density\tsilhouette\twss\tgap\tgap_se\titerations\tconverged";

/// One row per `k`; undefined cells are `NA`.
pub fn render_tsv(sr: &SweepResult) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for row in &sr.rows {
        out.push_str(&tsv_line(row));
        out.push('\n');
    }
    out
}

fn tsv_line(r: &MetricsRow) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), float);
    [
        r.k.to_string(),
        float(r.mean_density),
        opt(r.silhouette),
        float(r.wss),
        opt(r.gap),
        opt(r.gap_se),
        r.iterations.to_string(),
        r.converged.to_string(),
    ]
    .join("\t")
}

// shortest representation that parses back to the same f64
fn float(v: f64) -> String {
    format!("{v:e}")
}

/// Pretty JSON whose floats always carry 17 significant digits, so a value
/// parsed back and re-serialized gives identical bytes. Keys come out
/// sorted because `serde_json::Map` is ordered.
pub fn to_json_string(value: &Value) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedPrecision::default());
    serde::Serialize::serialize(value, &mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Default)]
struct FixedPrecision {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for FixedPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
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

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

use anyhow::{Context, Result};
use gw_minimax::OffspringDistribution;
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Provenance block written into every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub args: Vec<String>,
    pub dist: Option<String>,
    pub seed: Option<u64>,
    pub precision: String,
}

impl Meta {
    pub fn new(command: &'static str, dist: Option<&OffspringDistribution>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            args: std::env::args().skip(1).collect(),
            dist: dist.map(|d| d.spec().to_string()),
            seed: None,
            precision: "double".into(),
        }
    }

    fn comment_lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("# tool: {} {}", self.tool, self.version),
            format!("# command: {}", self.command),
            format!("# args: {}", self.args.join(" ")),
        ];
        if let Some(d) = &self.dist {
            v.push(format!("# dist: {d}"));
        }
        if let Some(s) = self.seed {
            v.push(format!("# seed: {s}"));
        }
        v.push(format!("# precision: {}", self.precision));
        v
    }
}

pub fn open(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Header comments, a header row, then the rows; LF line endings throughout.
pub fn write_csv(
    out: &mut dyn Write,
    meta: &Meta,
    extra_comments: &[String],
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    for line in meta.comment_lines().iter().chain(extra_comments) {
        writeln!(out, "{line}")?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct WithMeta<'a, T: Serialize> {
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(out: &mut dyn Write, meta: &Meta, body: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, &WithMeta { meta, body })?;
    writeln!(out)?;
    Ok(())
}

//! Artifact writers. One writer per file, records in replica order.

use fkgas::statistics::{Histogram, StatRecord};
use serde::Serialize;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Serialize)]
pub struct Record<'a> {
    pub config_hash: &'a str,
    pub command: &'a str,
    pub replica: Option<usize>,
    #[serde(flatten)]
    pub stat: StatRecord,
}

#[derive(Serialize)]
pub struct CheckRecord<'a> {
    pub config_hash: &'a str,
    pub seed: u64,
    pub command: &'a str,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Serialize)]
pub struct ErrorRecord<'a> {
    pub error: &'a str,
    pub exit_code: i32,
    pub message: String,
}

pub struct Sink {
    dir: PathBuf,
    records: BufWriter<File>,
    pub hash: String,
    pub seed: u64,
    pub command: &'static str,
}

impl Sink {
    pub fn create(dir: &Path, hash: String, seed: u64, command: &'static str) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let records = BufWriter::new(File::create(dir.join("records.jsonl"))?);
        Ok(Self { dir: dir.to_path_buf(), records, hash, seed, command })
    }

    pub fn stat(&mut self, replica: Option<usize>, stat: StatRecord) -> io::Result<()> {
        let r = Record { config_hash: &self.hash, command: self.command, replica, stat };
        writeln!(self.records, "{}", serde_json::to_string(&r).map_err(io::Error::other)?)
    }

    pub fn check(&mut self, check: &str, passed: bool, detail: String) -> io::Result<()> {
        println!("{} [{}] {detail}", check, if passed { "PASS" } else { "FAIL" });
        let r = CheckRecord {
            config_hash: &self.hash,
            seed: self.seed,
            command: self.command,
            check: check.into(),
            passed,
            detail,
        };
        writeln!(self.records, "{}", serde_json::to_string(&r).map_err(io::Error::other)?)
    }

    pub fn lines<I: IntoIterator<Item = String>>(&self, name: &str, lines: I) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        for l in lines {
            writeln!(w, "{l}")?;
        }
        w.flush()
    }

    pub fn histogram(&self, stem: &str, h: &Histogram, title: &str) -> io::Result<()> {
        fs::write(self.dir.join(format!("{stem}.csv")), h.to_csv())?;
        fs::write(self.dir.join(format!("{stem}.svg")), histogram_svg(h, title))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.records.flush()
    }
}

/// Static bar chart of a histogram.
pub fn histogram_svg(h: &Histogram, title: &str) -> String {
    let (w, ht, pad) = (480.0, 300.0, 40.0);
    let max = h.counts.iter().cloned().fold(0.0f64, f64::max);
    let n = h.counts.len().max(1) as f64;
    let bw = (w - 2.0 * pad) / n;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{ht}\" viewBox=\"0 0 {w} {ht}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        w / 2.0,
        escape(title)
    );
    for (i, c) in h.counts.iter().enumerate() {
        let bh = if max > 0.0 { c / max * (ht - 2.0 * pad) } else { 0.0 };
        let x = pad + i as f64 * bw;
        s.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{bh:.2}\" fill=\"steelblue\"/>\n",
            ht - pad - bh,
            (bw - 2.0).max(1.0)
        ));
        let mid = 0.5 * (h.edges[i] + h.edges[i + 1]);
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{mid}</text>\n",
            x + bw / 2.0,
            ht - pad + 14.0
        ));
    }
    s.push_str(&format!(
        "<line x1=\"{pad}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n</svg>\n",
        ht - pad,
        w - pad
    ));
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

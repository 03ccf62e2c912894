//! Measure, plan, trace and certificate files.
//!
//! Measures are CSV (`x,w`, `#` lines are comments) or JSON
//! (`{"points":[...],"weights":[...]}`), chosen by the `.json` extension.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use uot_core::barycenter::MultiPlan;
use uot_core::certify::Certificate;
use uot_core::fw::FwTraceRecord;
use uot_core::sinkhorn::TraceRecord;
use uot_core::{DiscreteMeasure, DualPair, SparsePlan};

#[derive(Debug, Serialize, Deserialize)]
struct MeasureJson {
    points: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct MeasureRow {
    x: f64,
    w: f64,
}

/// Reads a measure from CSV or JSON; the support is sorted and validated.
pub fn read_measure(path: &Path) -> Result<DiscreteMeasure> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let m = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_measure_json(BufReader::new(file))
    } else {
        parse_measure_csv(BufReader::new(file))
    };
    m.with_context(|| format!("reading measure {}", path.display()))
}

pub fn parse_measure_csv(r: impl Read) -> Result<DiscreteMeasure> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "w" {
        bail!("expected header `x,w`, found `{}`", headers.iter().collect::<Vec<_>>().join(","));
    }
    let (mut pts, mut ws) = (Vec::new(), Vec::new());
    for row in rdr.deserialize() {
        let row: MeasureRow = row?;
        pts.push(row.x);
        ws.push(row.w);
    }
    Ok(DiscreteMeasure::new(pts, ws)?)
}

pub fn parse_measure_json(r: impl Read) -> Result<DiscreteMeasure> {
    let m: MeasureJson = serde_json::from_reader(r)?;
    Ok(DiscreteMeasure::new(m.points, m.weights)?)
}

/// Writes `# key=value` lines, then `x,w` rows.
pub fn write_measure(mut w: impl Write, m: &DiscreteMeasure, meta: &[(String, String)]) -> Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "w"])?;
    for (x, p) in m.points().iter().zip(m.weights()) {
        wr.write_record([fmt_f(*x), fmt_f(*p)])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_measure_json(w: impl Write, m: &DiscreteMeasure) -> Result<()> {
    let j = MeasureJson {
        points: m.points().to_vec(),
        weights: m.weights().to_vec(),
    };
    serde_json::to_writer(w, &j)?;
    Ok(())
}

pub fn write_plan(w: impl Write, plan: &SparsePlan) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["i", "j", "mass"])?;
    for e in plan.entries() {
        wr.write_record([e.i.to_string(), e.j.to_string(), fmt_f(e.mass)])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_multiplan(w: impl Write, plan: &MultiPlan) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=plan.dims().len()).map(|k| format!("i{k}")).collect();
    header.push("mass".into());
    wr.write_record(&header)?;
    for e in plan.entries() {
        let mut row: Vec<String> = e.idx.iter().map(|i| i.to_string()).collect();
        row.push(fmt_f(e.mass));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

/// `iter,delta_f,err_f,err_g,wall_ns`; reference columns are empty without a reference.
pub fn write_trace(w: impl Write, trace: &[TraceRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["iter", "delta_f", "err_f", "err_g", "wall_ns"])?;
    for t in trace {
        wr.write_record([
            t.iter.to_string(),
            fmt_f(t.delta_f),
            opt(t.err_f),
            opt(t.err_g),
            t.wall_ns.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// `iter,h0,fw_gap,pd_gap,wall_ns`.
pub fn write_fw_trace(w: impl Write, trace: &[FwTraceRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["iter", "h0", "fw_gap", "pd_gap", "wall_ns"])?;
    for t in trace {
        wr.write_record([
            t.iter.to_string(),
            fmt_f(t.h0),
            fmt_f(t.fw_gap),
            fmt_f(t.pd_gap),
            t.wall_ns.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CertificateJson {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub feasibility_violation: f64,
    pub passed: bool,
}

impl From<&Certificate> for CertificateJson {
    fn from(c: &Certificate) -> Self {
        Self {
            primal: c.primal,
            dual: c.dual,
            gap: c.gap,
            feasibility_violation: c.feasibility_violation,
            passed: c.passed,
        }
    }
}

pub fn write_certificate(mut w: impl Write, c: &Certificate) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &CertificateJson::from(c))?;
    writeln!(w)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct DualsJson {
    f: Vec<f64>,
    g: Vec<f64>,
}

/// Dual pair as `{"f":[...],"g":[...]}`.
pub fn read_duals(path: &Path) -> Result<DualPair> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let d: DualsJson = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("reading duals {}", path.display()))?;
    if d.f.iter().chain(&d.g).any(|x| !x.is_finite()) {
        bail!("non-finite potential in {}", path.display());
    }
    Ok(DualPair::new(d.f, d.g))
}

pub fn write_duals(mut w: impl Write, d: &DualPair) -> Result<()> {
    let j = DualsJson {
        f: d.f.clone(),
        g: d.g.clone(),
    };
    serde_json::to_writer(&mut w, &j)?;
    writeln!(w)?;
    Ok(())
}

/// Buffered writer on `path`, or stdout.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

/// Shortest representation that round-trips.
pub fn fmt_f(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_csv_round_trip() {
        let m = DiscreteMeasure::new(vec![0.3, -1.0, 2.5e-7], vec![0.1, 0.2, 0.7]).unwrap();
        let mut buf = Vec::new();
        write_measure(&mut buf, &m, &[("sigma".into(), "0.03".into())]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# sigma=0.03\nx,w\n-1.0,0.2\n"));
        assert_eq!(parse_measure_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn measure_json_round_trip() {
        let m = DiscreteMeasure::new(vec![1.0, 0.0], vec![0.5, 0.25]).unwrap();
        let mut buf = Vec::new();
        write_measure_json(&mut buf, &m).unwrap();
        assert_eq!(parse_measure_json(&buf[..]).unwrap(), m);
    }

    #[test]
    fn measure_csv_rejects_bad_input() {
        assert!(parse_measure_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(parse_measure_csv("x,w\n1,-2\n".as_bytes()).is_err());
        assert!(parse_measure_csv("x,w\n1,abc\n".as_bytes()).is_err());
        assert!(parse_measure_csv("x,w\n".as_bytes()).is_err());
    }

    #[test]
    fn trace_leaves_missing_reference_empty() {
        let t = [TraceRecord {
            iter: 1,
            delta_f: 0.5,
            err_f: None,
            err_g: Some(0.25),
            wall_ns: 7,
        }];
        let mut buf = Vec::new();
        write_trace(&mut buf, &t).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "iter,delta_f,err_f,err_g,wall_ns\n1,0.5,,0.25,7\n");
    }

    #[test]
    fn certificate_fields() {
        let c = uot_core::certify::assemble_certificate(1.0, 1.0, 0.0, 1e-9);
        let mut buf = Vec::new();
        write_certificate(&mut buf, &c).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
        assert_eq!(v["passed"], true);
    }
}

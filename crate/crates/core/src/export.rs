//! CSV and binary writers. Floats in CSV carry 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gci::GciSolution;
use crate::hydro::{coupling_fields, HydroState};
use crate::kinetic::{KineticMoments, KineticState};
use crate::model::{sample_gaussian, FrequencyQuadrature, KineticField, PhaseGrid, VelocityGrid, KERNEL_NORM};
use crate::particles::OrderRecord;

#[inline]
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Generic table: header line then one line per row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| num(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_order_csv(path: &Path, records: &[OrderRecord]) -> Result<()> {
    let rows: Vec<Vec<f64>> = records.iter().map(|r| vec![r.t, r.r, r.psi, r.mean_w, r.var_w]).collect();
    write_table(path, &["t", "R", "psi", "mean_w", "var_w"], &rows)
}

pub const KINETIC_MOMENTS_HEADER: &str = "t,nu_index,theta_index,P_eps,flux_eps";

/// Appends one snapshot of kinetic moments.
pub fn write_kinetic_moments<W: Write>(w: &mut W, t: f64, m: &KineticMoments, n_theta: usize) -> Result<()> {
    for (c, (p, f)) in m.p_eps.iter().zip(&m.flux_eps).enumerate() {
        writeln!(w, "{},{},{},{},{}", num(t), c / n_theta, c % n_theta, num(*p), num(*f))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub axes: Vec<String>,
    pub shape: Vec<usize>,
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    pub t: f64,
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub kernel_norm: f64,
    pub phase: PhaseGrid,
    pub velocity: VelocityGrid,
    pub frequency: FrequencyQuadrature,
}

/// Raw little-endian f64 values (`<stem>.bin`) plus a JSON header (`<stem>.json`).
pub fn write_kinetic_dump(dir: &Path, stem: &str, s: &KineticState) -> Result<()> {
    let f = &s.field;
    let header = DumpHeader {
        axes: vec!["nu".into(), "theta".into(), "w".into()],
        shape: vec![f.n_nu(), f.n_theta(), f.n_w()],
        dtype: "f64".into(),
        byte_order: "little".into(),
        layout: "row-major".into(),
        t: s.t,
        epsilon: s.scaled.epsilon,
        alpha: s.scaled.alpha,
        k: s.k,
        kernel_norm: KERNEL_NORM,
        phase: f.phase,
        velocity: f.velocity,
        frequency: f.freq.clone(),
    };
    write_json(&dir.join(format!("{stem}.json")), &header)?;
    let mut w = BufWriter::new(File::create(dir.join(format!("{stem}.bin")))?);
    for v in &f.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_kinetic_dump(dir: &Path, stem: &str) -> Result<(DumpHeader, KineticField)> {
    let header: DumpHeader = serde_json::from_reader(File::open(dir.join(format!("{stem}.json")))?)?;
    let mut bytes = Vec::new();
    File::open(dir.join(format!("{stem}.bin")))?.read_to_end(&mut bytes)?;
    let n: usize = header.shape.iter().product();
    if bytes.len() != 8 * n {
        return Err(Error::Io(format!("dump holds {} bytes, header implies {}", bytes.len(), 8 * n)));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let field = KineticField { phase: header.phase, velocity: header.velocity, freq: header.frequency.clone(), data };
    Ok((header, field))
}

pub fn hydro_csv_header(n_nu: usize) -> String {
    let mut h = String::from("t,theta_index,P,Y");
    for q in 0..n_nu {
        h.push_str(&format!(",P_nu_{q}"));
    }
    h
}

/// Appends one hydro snapshot.
pub fn write_hydro_snapshot<W: Write>(w: &mut W, s: &HydroState) -> Result<()> {
    let c = coupling_fields(s);
    let nt = s.phase.n_theta;
    for i in 0..nt {
        let mut line = format!("{},{},{},{}", num(s.t), i, num(c.p[i]), num(c.y[i]));
        for q in 0..s.freq.len() {
            line.push(',');
            line.push_str(&num(s.p_nu[q * nt + i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroManifest {
    #[serde(rename = "K")]
    pub k: f64,
    pub phase: PhaseGrid,
    pub frequency: FrequencyQuadrature,
    pub cfl: f64,
    pub flux: String,
}

pub fn write_gci_csv(path: &Path, s: &GciSolution) -> Result<()> {
    let m = sample_gaussian(s.v, &s.grid);
    let rows: Vec<Vec<f64>> = (0..s.grid.n_w).map(|j| vec![s.grid.node(j), s.chi[j], m[j]]).collect();
    write_table(path, &["w", "chi", "M_V"], &rows)
}

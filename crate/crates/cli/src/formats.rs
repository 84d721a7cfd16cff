//! On-disk formats: series documents, paired CSV/whitespace tables and the
//! artifact log behind the manifest.

use std::path::{Path, PathBuf};

use hypermin_core::series::{LogSeries, PolyJet, Rational, SeriesError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::exact::{num_den, Exact};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialDoc {
    pub exp: Vec<u32>,
    pub num: String,
    pub den: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub i: u32,
    pub j: u32,
    pub monomials: Vec<MonomialDoc>,
}

/// A `t`/`log t` series with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SeriesDoc {
    pub num_vars: usize,
    pub max_degree: u32,
    pub t_order: u32,
    pub terms: Vec<TermDoc>,
}

pub fn jet_doc<S: Exact>(jet: &PolyJet<S>) -> Vec<MonomialDoc> {
    jet.terms()
        .filter(|(_, c)| !c.is_zero())
        .map(|(m, c)| {
            let (num, den) = num_den(c);
            MonomialDoc { exp: m.exponents(jet.num_vars()), num, den }
        })
        .collect()
}

impl SeriesDoc {
    pub fn new<S: Exact>(s: &LogSeries<S>) -> Self {
        let terms = s
            .terms()
            .filter(|(_, jet)| !jet.is_zero())
            .map(|((i, j), jet)| TermDoc { i, j, monomials: jet_doc(jet) })
            .collect();
        SeriesDoc { num_vars: s.num_vars(), max_degree: s.max_degree(), t_order: s.t_order(), terms }
    }

    /// Rebuilds the series; the log cap is the highest log power present.
    pub fn to_series<S: Exact>(&self) -> Result<LogSeries<S>, SeriesError> {
        let cap = self.terms.iter().map(|t| t.j).max().unwrap_or(0);
        let mut out = LogSeries::zero(self.num_vars, self.max_degree, self.t_order, cap);
        for t in &self.terms {
            let mut terms = Vec::with_capacity(t.monomials.len());
            for m in &t.monomials {
                let r: Rational = format!("{}/{}", m.num, m.den)
                    .parse()
                    .map_err(|_| SeriesError::BadExponent { len: m.exp.len(), num_vars: self.num_vars })?;
                terms.push((m.exp.clone(), S::from_rational(&r)));
            }
            out.set(t.i, t.j, PolyJet::from_terms(self.num_vars, self.max_degree, terms)?)?;
        }
        Ok(out)
    }
}

/// Shortest round-trip float in exponent form.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Output directory that records every file it writes.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Output { path: root.display().to_string(), source })?;
        Ok(OutDir { root: root.to_path_buf(), artifacts: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Output { path: path.display().to_string(), source })?;
        self.artifacts.retain(|a| a.name != name);
        self.artifacts.push(Artifact { name: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    /// Pretty JSON with a trailing newline.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("output types serialize");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut put = |rec: &[String]| w.write_record(rec).expect("in-memory write");
        put(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
        for r in rows {
            put(r);
        }
        let bytes = w.into_inner().expect("in-memory flush");
        self.write(name, &bytes)
    }

    /// `#`-commented header and space-separated columns.
    pub fn dat(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut s = format!("# {}\n", header.join(" "));
        for r in rows {
            s.push_str(&r.join(" "));
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    /// The same table as `<stem>.csv` and `<stem>.dat`.
    pub fn table(&mut self, stem: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        self.csv(&format!("{stem}.csv"), header, rows)?;
        self.dat(&format!("{stem}.dat"), header, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hypermin_core::series::Scalar;

    #[test]
    fn series_round_trip() {
        let q = |a, b| <Rational as Scalar>::from_frac(a, b);
        let jet = PolyJet::from_terms(2, 3, vec![(vec![1, 0], q(1, 3)), (vec![0, 2], q(-5, 7))]).unwrap();
        let mut s = LogSeries::zero(2, 3, 6, 2);
        s.set(2, 0, jet.clone()).unwrap();
        s.set(4, 1, jet.scale(&q(2, 1))).unwrap();
        let doc = SeriesDoc::new(&s);
        assert_eq!(doc.terms.len(), 2);
        assert!(doc.terms[0].monomials.iter().any(|m| m.num == "-5" && m.den == "7"));
        let text = serde_json::to_string(&doc).unwrap();
        let back: SeriesDoc = serde_json::from_str(&text).unwrap();
        let rebuilt = back.to_series::<Rational>().unwrap();
        assert_eq!(SeriesDoc::new(&rebuilt), doc);
        assert_eq!(rebuilt.coeff(4, 1), s.coeff(4, 1));
    }

    #[test]
    fn floats_are_written_exactly() {
        let mut s = LogSeries::<f64>::zero(1, 2, 3, 0);
        s.set(1, 0, PolyJet::from_terms(1, 2, vec![(vec![0], 0.1)]).unwrap()).unwrap();
        let doc = SeriesDoc::new(&s);
        let m = &doc.terms[0].monomials[0];
        assert_eq!(m.den, (1u64 << 55).to_string());
        assert_eq!(doc.to_series::<f64>().unwrap(), s);
    }
}

//! Experiment descriptions in a plain key=value format with section headers:
//!
//! ```text
//! [experiment]
//! kind = qilu
//! seeds = 0..30
//!
//! [matrix]
//! family = uniform
//! n = 100, 200, 500
//!
//! [params]
//! r = 2, 6, 10
//! ```
//!
//! A comma-separated value under `[params]` (or `n` under `[matrix]`) is a
//! sweep axis. `#` and `;` start comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mplab_core::Format;
use thiserror::Error;

use crate::gen::{Family, MatrixGenerator};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct SpecError {
    pub line: Option<usize>,
    pub msg: String,
}

impl SpecError {
    fn at(line: Option<usize>, msg: impl Into<String>) -> SpecError {
        SpecError { line, msg: msg.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Ir,
    GmresIr,
    Lsq,
    Qilu,
    Eig,
    SpmvCompress,
    BlockJacobi,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::Ir,
        Kind::GmresIr,
        Kind::Lsq,
        Kind::Qilu,
        Kind::Eig,
        Kind::SpmvCompress,
        Kind::BlockJacobi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Ir => "ir",
            Kind::GmresIr => "gmres-ir",
            Kind::Lsq => "lsq",
            Kind::Qilu => "qilu",
            Kind::Eig => "eig",
            Kind::SpmvCompress => "spmv-compress",
            Kind::BlockJacobi => "block-jacobi",
        }
    }

    /// Accepted `[params]` keys; the first `required` of them must be given.
    fn params(self) -> (&'static [&'static str], usize) {
        match self {
            Kind::Ir => (&["tol", "max_iters", "theta", "scaling"], 0),
            Kind::GmresIr => (&["tol", "max_iters", "theta", "scaling", "inner_tol", "inner_maxit", "restart"], 0),
            Kind::Lsq => (&["tol", "max_iters", "theta", "c0"], 0),
            Kind::Qilu => (&["r", "baseline"], 1),
            Kind::Eig => (&["jacobi_tol", "max_iters", "target", "omega"], 0),
            Kind::SpmvCompress => (&["k", "tau", "residual", "baseline"], 2),
            Kind::BlockJacobi => (&["block_size", "digit_tau", "tol", "maxit"], 1),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Kind, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    /// One matrix per (size, seed).
    Generator { gen: MatrixGenerator, sizes: Vec<usize> },
    /// A Matrix Market file; seeds only vary right-hand sides and sampling.
    File(PathBuf),
}

impl MatrixSource {
    pub fn describe(&self) -> String {
        match self {
            MatrixSource::Generator { gen, .. } => gen.family.name().to_string(),
            MatrixSource::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precisions {
    pub fact: Format,
    pub work: Format,
    pub resid: Format,
}

impl Default for Precisions {
    fn default() -> Precisions {
        Precisions {
            fact: Format::FP16,
            work: Format::FP64,
            resid: Format::FP64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: Kind,
    pub source: MatrixSource,
    pub precisions: Precisions,
    pub seeds: Vec<u64>,
    /// Parameter name to the list of values swept over.
    pub params: BTreeMap<String, Vec<String>>,
}

impl ExperimentSpec {
    /// Cartesian product of the parameter lists, in key order then value
    /// order.
    pub fn configs(&self) -> Vec<BTreeMap<String, String>> {
        let mut out = vec![BTreeMap::new()];
        for (key, values) in &self.params {
            out = out
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.insert(key.clone(), v.clone());
                        c
                    })
                })
                .collect();
        }
        out
    }
}

/// Raw `section.key -> (value, line)` entries before interpretation.
#[derive(Debug, Clone, Default)]
pub struct RawSpec {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl RawSpec {
    pub fn parse(text: &str) -> Result<RawSpec, SpecError> {
        let mut raw = RawSpec::default();
        let mut section: Option<String> = None;
        for (idx, line) in text.lines().enumerate() {
            let lno = Some(idx + 1);
            let line = line.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| SpecError::at(lno, "unterminated section header"))?
                    .trim();
                if !["experiment", "matrix", "precisions", "params"].contains(&name) {
                    return Err(SpecError::at(lno, format!("unknown section `{name}`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SpecError::at(lno, "expected `key = value`"))?;
            let sec = section
                .as_ref()
                .ok_or_else(|| SpecError::at(lno, "key outside of any section"))?;
            let full = format!("{sec}.{}", key.trim());
            if raw.entries.insert(full.clone(), (value.trim().to_string(), lno)).is_some() {
                return Err(SpecError::at(lno, format!("duplicate key `{full}`")));
            }
        }
        Ok(raw)
    }

    /// Replace or add `section.key`; used for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SpecError> {
        let (sec, k) = key
            .split_once('.')
            .ok_or_else(|| SpecError::at(None, format!("override `{key}` must have the form section.key")))?;
        if sec.is_empty() || k.is_empty() {
            return Err(SpecError::at(None, format!("override `{key}` must have the form section.key")));
        }
        self.entries.insert(key.to_string(), (value.to_string(), None));
        Ok(())
    }

    fn take(&mut self, key: &str) -> Option<(String, Option<usize>)> {
        self.entries.remove(key)
    }

    pub fn build(mut self) -> Result<ExperimentSpec, SpecError> {
        let (kind_s, kline) = self
            .take("experiment.kind")
            .ok_or_else(|| SpecError::at(None, "missing `kind` in [experiment]"))?;
        let kind: Kind = kind_s.parse().map_err(|e| SpecError::at(kline, e))?;
        let (seeds_s, sline) = self
            .take("experiment.seeds")
            .ok_or_else(|| SpecError::at(None, "missing `seeds` in [experiment]"))?;
        let seeds = parse_seeds(&seeds_s).map_err(|e| SpecError::at(sline, e))?;

        let source = self.build_source(kind)?;

        let mut precisions = Precisions::default();
        for (name, slot) in [
            ("fact", &mut precisions.fact),
            ("work", &mut precisions.work),
            ("resid", &mut precisions.resid),
        ] {
            if let Some((v, line)) = self.take(&format!("precisions.{name}")) {
                *slot = v
                    .parse::<Format>()
                    .map_err(|e| SpecError::at(line, format!("{name}: {e}")))?;
            }
        }

        let (allowed, required) = kind.params();
        let mut params = BTreeMap::new();
        let keys: Vec<String> = self.entries.keys().filter(|k| k.starts_with("params.")).cloned().collect();
        for key in keys {
            let (v, line) = self.take(&key).expect("key listed above");
            let name = &key["params.".len()..];
            if !allowed.contains(&name) {
                return Err(SpecError::at(
                    line,
                    format!("parameter `{name}` does not apply to kind {kind}; expected one of {allowed:?}"),
                ));
            }
            let values: Vec<String> = v.split(',').map(|s| s.trim().to_string()).collect();
            if values.iter().any(String::is_empty) {
                return Err(SpecError::at(line, format!("empty value in `{name}`")));
            }
            params.insert(name.to_string(), values);
        }
        for name in &allowed[..required] {
            if !params.contains_key(*name) {
                return Err(SpecError::at(None, format!("kind {kind} requires parameter `{name}`")));
            }
        }
        if let Some((key, (_, line))) = self.entries.into_iter().next() {
            return Err(SpecError::at(line, format!("unknown key `{key}`")));
        }
        Ok(ExperimentSpec {
            kind,
            source,
            precisions,
            seeds,
            params,
        })
    }

    fn build_source(&mut self, kind: Kind) -> Result<MatrixSource, SpecError> {
        let file = self.take("matrix.file");
        let family = self.take("matrix.family");
        match (file, family) {
            (Some(_), Some((_, line))) => Err(SpecError::at(line, "give either `file` or `family`, not both")),
            (None, None) => Err(SpecError::at(None, "missing `family` or `file` in [matrix]")),
            (Some((path, _)), None) => Ok(MatrixSource::File(PathBuf::from(path))),
            (None, Some((fam, fline))) => {
                let family: Family = fam.parse().map_err(|e| SpecError::at(fline, e))?;
                let (n_s, nline) = self
                    .take("matrix.n")
                    .ok_or_else(|| SpecError::at(None, "missing `n` in [matrix]"))?;
                let sizes = n_s
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|_| SpecError::at(nline, format!("invalid size `{t}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                let mut gen = MatrixGenerator::new(family, sizes[0]);
                if let Some((v, line)) = self.take("matrix.m") {
                    gen.m = Some(v.parse().map_err(|_| SpecError::at(line, format!("invalid m `{v}`")))?);
                }
                if let Some((v, line)) = self.take("matrix.kappa") {
                    gen.kappa = v.parse().map_err(|_| SpecError::at(line, format!("invalid kappa `{v}`")))?;
                }
                if let Some((v, line)) = self.take("matrix.density") {
                    gen.density = v.parse().map_err(|_| SpecError::at(line, format!("invalid density `{v}`")))?;
                }
                for &n in &sizes {
                    let g = MatrixGenerator { n, ..gen.clone() };
                    g.validate().map_err(|e| SpecError::at(fline, e))?;
                }
                if kind == Kind::Lsq && gen.family != Family::Randsvd && gen.family != Family::Uniform {
                    return Err(SpecError::at(fline, "lsq needs a dense rectangular family (uniform or randsvd)"));
                }
                Ok(MatrixSource::Generator { gen, sizes })
            }
        }
    }
}

pub fn parse_spec(text: &str) -> Result<ExperimentSpec, SpecError> {
    RawSpec::parse(text)?.build()
}

/// `a..b` (exclusive), `a..=b`, or a comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("invalid seed list `{s}`");
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..=") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..=b).collect()
    } else if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..b).collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(format!("seed list `{s}` is empty"));
    }
    Ok(seeds)
}

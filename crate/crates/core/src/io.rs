//! Text file formats.
//!
//! * Degree sequences: one node per line, `d_minus d_plus`.
//! * Graphs: a header line `n m`, then `m` lines `tail head`.
//! * Distribution specs and experiment configs: `key = value` lines; a
//!   distribution file may instead (or also) list mass rows `k l probability`.
//!
//! In every format blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::degree_model::{BiDegreeSequence, DistributionSpec, DEFAULT_TRUNCATION_TAIL};
use crate::error::{Error, Result};
use crate::experiment::ExperimentConfig;
use crate::generator::Digraph;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {what} from {tok:?}"),
    })
}

pub fn parse_degree_sequence(text: &str) -> Result<BiDegreeSequence> {
    let mut pairs = Vec::new();
    for (line, l) in content_lines(text) {
        let mut toks = l.split_whitespace();
        let d_minus = field(toks.next(), line, "in-degree")?;
        let d_plus = field(toks.next(), line, "out-degree")?;
        if toks.next().is_some() {
            return Err(Error::Parse {
                line,
                message: "expected two fields".into(),
            });
        }
        pairs.push((d_minus, d_plus));
    }
    BiDegreeSequence::new(pairs)
}

pub fn write_degree_sequence<W: Write>(seq: &BiDegreeSequence, mut out: W) -> Result<()> {
    for &(k, l) in seq.pairs() {
        writeln!(out, "{k} {l}")?;
    }
    Ok(())
}

pub fn read_graph<R: BufRead>(input: R) -> Result<Digraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut arcs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut toks = l.split_whitespace();
        let a: usize = field(toks.next(), line_no, "first field")?;
        let b: usize = field(toks.next(), line_no, "second field")?;
        if toks.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "expected two fields".into(),
            });
        }
        match header {
            None => {
                header = Some((a, b));
                arcs.reserve(b);
            }
            Some(_) => arcs.push((a, b)),
        }
    }
    let (n, m) = header.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing 'n m' header".into(),
    })?;
    if arcs.len() != m {
        return Err(Error::InvalidGraph(format!(
            "header announces {m} arcs, found {}",
            arcs.len()
        )));
    }
    Digraph::from_arcs(n, arcs)
}

pub fn write_graph<W: Write>(g: &Digraph, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", g.n(), g.arc_count())?;
    for &(u, v) in g.arcs() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

/// `key = value` entries plus any whitespace-separated rows without `=`.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct KeyValueDoc {
    pub entries: BTreeMap<String, (usize, String)>,
    pub rows: Vec<(usize, Vec<String>)>,
}

impl KeyValueDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Self::default();
        for (line, l) in content_lines(text) {
            if let Some((k, v)) = l.split_once('=') {
                let key = k.trim().to_ascii_lowercase();
                if doc.entries.contains_key(&key) {
                    return Err(Error::Parse {
                        line,
                        message: format!("duplicate key {key:?}"),
                    });
                }
                doc.entries.insert(key, (line, v.trim().to_string()));
            } else {
                doc.rows
                    .push((line, l.split_whitespace().map(str::to_string).collect()));
            }
        }
        Ok(doc)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Parse {
                line: *line,
                message: format!("bad value {v:?} for {key}"),
            }),
        }
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::InvalidConfig(format!("missing key {key:?}")))
    }
}

/// A distribution file: either `family = ...` with its parameters, a compact
/// `spec = poisson-pair:2`, or bare `k l probability` rows. Returns the spec
/// and the truncation tail (`tail = ...`, default 1e-12).
pub fn parse_distribution_spec(text: &str) -> Result<(DistributionSpec, f64)> {
    let doc = KeyValueDoc::parse(text)?;
    let tail = doc.parsed("tail")?.unwrap_or(DEFAULT_TRUNCATION_TAIL);
    let spec = if let Some(compact) = doc.get("spec") {
        compact.parse()?
    } else {
        match doc.get("family") {
            Some("poisson-pair") | Some("poisson_pair") => DistributionSpec::PoissonPair {
                nu: doc
                    .parsed("nu")?
                    .ok_or_else(|| Error::InvalidConfig("missing nu".into()))?,
            },
            Some("regular") => DistributionSpec::Regular {
                d: doc
                    .parsed("d")?
                    .ok_or_else(|| Error::InvalidConfig("missing d".into()))?,
            },
            Some("product") => DistributionSpec::Product {
                minus: doc.require("in")?.parse()?,
                plus: doc.require("out")?.parse()?,
            },
            Some("table") | None => {
                let mut mass = Vec::new();
                for (line, row) in &doc.rows {
                    if row.len() != 3 {
                        return Err(Error::Parse {
                            line: *line,
                            message: "expected 'k l probability'".into(),
                        });
                    }
                    let k = field(Some(&row[0]), *line, "in-degree")?;
                    let l = field(Some(&row[1]), *line, "out-degree")?;
                    let p = field(Some(&row[2]), *line, "probability")?;
                    mass.push(((k, l), p));
                }
                DistributionSpec::Table { mass }
            }
            Some(other) => {
                return Err(Error::InvalidConfig(format!("unknown family {other:?}")));
            }
        }
    };
    Ok((spec, tail))
}

/// Experiment config file keys: `family` (compact spec string), `n` (comma
/// list), `trials`, `seed`, `mode`, `omega`, `criterion`, `census` (cutoff
/// length), `work_cap`, `max_attempts`, `schedule`, `workers`, `tail`.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let doc = KeyValueDoc::parse(text)?;
    let family: DistributionSpec = doc.require("family")?.parse()?;
    let n_list = doc
        .require("n")?
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad n value {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut config = ExperimentConfig::new(
        family,
        n_list,
        doc.parsed("trials")?.unwrap_or(1),
        doc.parsed("seed")?.unwrap_or(0),
    );
    apply_overrides(&mut config, &doc)?;
    Ok(config)
}

fn apply_overrides(config: &mut ExperimentConfig, doc: &KeyValueDoc) -> Result<()> {
    if let Some(tail) = doc.parsed("tail")? {
        config.truncation_tail = tail;
    }
    if let Some(mode) = doc.parsed("mode")? {
        config.mode = mode;
    }
    match doc.get("omega") {
        None | Some("none") | Some("off") => {}
        Some(v) => config.omega = Some(v.parse()?),
    }
    if let Some(c) = doc.parsed("criterion")? {
        config.core_criterion = c;
    }
    match doc.get("census") {
        None | Some("none") | Some("off") => {}
        Some(_) => config.census_max_length = doc.parsed("census")?,
    }
    if let Some(cap) = doc.parsed("work_cap")? {
        config.census_work_cap = cap;
    }
    if let Some(a) = doc.parsed("max_attempts")? {
        config.max_attempts = a;
    }
    if let Some(s) = doc.parsed("schedule")? {
        config.schedule = s;
    }
    if let Some(w) = doc.parsed("workers")? {
        config.workers = Some(w);
    }
    Ok(())
}

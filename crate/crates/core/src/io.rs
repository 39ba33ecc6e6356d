//! Plain-text codecs: edge lists, feature/label CSVs, split files, spectral
//! and distance caches, training outputs, and SHA-256 digests.
//!
//! Every float is written with [`fmt17`], 17 significant digits, which
//! round-trips any `f64` exactly through `str::parse`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::distances::{DistanceKind, EdgeDistances, KappaUsed};
use crate::graph::{build_graph, Graph};
use crate::matrix::FeatureMatrix;
use crate::pipeline::{EpochRecord, SoftmaxModel, SplitSpec};
use crate::spectral::{OperatorKind, Selection, SpectralBasis};
use crate::{Error, Result};

/// 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: {tok:?}")))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("not a non-negative integer: {tok:?}")))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read_all(mut r: impl Read) -> Result<String> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeListFile {
    pub edges: Vec<(usize, usize, f64)>,
    pub n: usize,
}

/// `u<TAB>v[<TAB>w]` per line (any whitespace separates), `#` comments,
/// 0-based ids. `n` is `max id + 1` unless `nodes` is given.
pub fn parse_edge_list(r: impl Read, nodes: Option<usize>) -> Result<EdgeListFile> {
    let text = read_all(r)?;
    let mut edges = Vec::new();
    let mut max_id = None::<usize>;
    for (ln, line) in data_lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&toks.len()) {
            return Err(parse_err(
                ln,
                format!("expected `u v [w]`, got {} fields", toks.len()),
            ));
        }
        let u = parse_usize(toks[0], ln)?;
        let v = parse_usize(toks[1], ln)?;
        let w = match toks.get(2) {
            Some(t) => parse_f64(t, ln)?,
            None => 1.0,
        };
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v, w));
    }
    let inferred = max_id.map_or(0, |m| m + 1);
    let n = match nodes {
        Some(n) if n < inferred => {
            return Err(Error::InvalidParameter(format!(
                "--nodes {n} is smaller than max id + 1 = {inferred}"
            )))
        }
        Some(n) => n,
        None => inferred,
    };
    Ok(EdgeListFile { edges, n })
}

pub fn load_graph(path: &Path, nodes: Option<usize>, self_loops: bool) -> Result<Graph> {
    let f = parse_edge_list(fs::File::open(path)?, nodes)?;
    build_graph(&f.edges, f.n, self_loops)
}

/// Canonical edges; the weight column is omitted when every weight is 1.
pub fn write_edge_list(g: &Graph, mut w: impl Write) -> Result<()> {
    let unit = g.is_unweighted();
    writeln!(w, "# n={} m={}", g.node_count(), g.edge_count())?;
    for e in g.edges() {
        if unit {
            writeln!(w, "{}\t{}", e.u, e.v)?;
        } else {
            writeln!(w, "{}\t{}\t{}", e.u, e.v, fmt17(e.w))?;
        }
    }
    Ok(())
}

/// One row per node, comma-separated; `header` skips the first line.
pub fn parse_features_csv(r: impl Read, header: bool) -> Result<FeatureMatrix> {
    let text = read_all(r)?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(usize::from(header)) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| parse_f64(t, idx + 1))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(parse_err(
                    idx + 1,
                    format!("expected {first} columns, got {}", row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let m = FeatureMatrix::from_rows(&rows)?;
    m.ensure_finite()?;
    Ok(m)
}

pub fn write_features_csv(h: &FeatureMatrix, mut w: impl Write) -> Result<()> {
    for i in 0..h.rows() {
        let line: Vec<String> = h.row(i).iter().map(|&v| fmt17(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// One class index per line, in node order.
pub fn parse_labels(r: impl Read) -> Result<Vec<usize>> {
    let text = read_all(r)?;
    data_lines(&text)
        .map(|(ln, l)| parse_usize(l, ln))
        .collect()
}

pub fn write_labels(labels: &[usize], mut w: impl Write) -> Result<()> {
    for l in labels {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

/// `#splits v1 seed=<s>` header, then `node<TAB>train|val|test` lines.
pub fn parse_splits(r: impl Read) -> Result<SplitSpec> {
    let text = read_all(r)?;
    let mut seed = 0;
    let mut split = SplitSpec {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
        seed: 0,
    };
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("#splits") {
            for tok in rest.split_whitespace() {
                if let Some(s) = tok.strip_prefix("seed=") {
                    seed = s.parse().map_err(|_| parse_err(idx + 1, "bad seed"))?;
                }
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (node, which) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| parse_err(idx + 1, "expected `node split`"))?;
        let node = parse_usize(node, idx + 1)?;
        match which.trim() {
            "train" => split.train.push(node),
            "val" => split.val.push(node),
            "test" => split.test.push(node),
            other => return Err(parse_err(idx + 1, format!("unknown split {other:?}"))),
        }
    }
    split.seed = seed;
    Ok(split)
}

pub fn write_splits(s: &SplitSpec, mut w: impl Write) -> Result<()> {
    writeln!(w, "#splits v1 seed={}", s.seed)?;
    let mut all: Vec<(usize, &str)> = s
        .train
        .iter()
        .map(|&i| (i, "train"))
        .chain(s.val.iter().map(|&i| (i, "val")))
        .chain(s.test.iter().map(|&i| (i, "test")))
        .collect();
    all.sort_unstable();
    for (i, name) in all {
        writeln!(w, "{i}\t{name}")?;
    }
    Ok(())
}

fn header_fields<'a>(line: &'a str, magic: &str, ln: usize) -> Result<Vec<(&'a str, &'a str)>> {
    let rest = line
        .strip_prefix(magic)
        .ok_or_else(|| parse_err(ln, format!("missing `{magic}` header")))?;
    let mut toks = rest.split_whitespace();
    if toks.next() != Some("v1") {
        return Err(parse_err(ln, "unsupported cache version"));
    }
    toks.map(|t| {
        t.split_once('=')
            .ok_or_else(|| parse_err(ln, format!("bad header field {t:?}")))
    })
    .collect()
}

fn field<'a>(fields: &[(&'a str, &'a str)], key: &str, ln: usize) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| parse_err(ln, format!("header lacks `{key}=`")))
}

/// `#spectral v1 kind=<k> sel=<s> kappa=<κ> seed=<s>`, a line of κ
/// eigenvalues, then the `n x κ` eigenvectors row by row.
pub fn write_basis(b: &SpectralBasis, mut w: impl Write) -> Result<()> {
    let seed = b.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    writeln!(
        w,
        "#spectral v1 kind={} sel={} kappa={} seed={}",
        b.operator,
        b.selection,
        b.kappa(),
        seed
    )?;
    let vals: Vec<String> = b.eigenvalues.iter().map(|&v| fmt17(v)).collect();
    writeln!(w, "{}", vals.join(" "))?;
    for i in 0..b.node_count() {
        let row: Vec<String> = b.eigenvectors.row(i).iter().map(|&v| fmt17(v)).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Inverse of [`write_basis`]. The requested κ is not stored and is set to
/// the stored κ.
pub fn read_basis(r: impl Read) -> Result<SpectralBasis> {
    let text = read_all(r)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, head) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty spectral cache"))?;
    let f = header_fields(head, "#spectral", ln)?;
    let operator: OperatorKind = field(&f, "kind", ln)?.parse()?;
    let selection: Selection = field(&f, "sel", ln)?.parse()?;
    let kappa = parse_usize(field(&f, "kappa", ln)?, ln)?;
    let seed = match field(&f, "seed", ln)? {
        "none" => None,
        s => Some(s.parse().map_err(|_| parse_err(ln, "bad seed"))?),
    };
    let (ln, vals) = lines
        .next()
        .ok_or_else(|| parse_err(ln + 1, "missing eigenvalue line"))?;
    let eigenvalues = vals
        .split_whitespace()
        .map(|t| parse_f64(t, ln))
        .collect::<Result<Vec<f64>>>()?;
    if eigenvalues.len() != kappa {
        return Err(parse_err(
            ln,
            format!("expected {kappa} eigenvalues, got {}", eigenvalues.len()),
        ));
    }
    let mut rows = Vec::new();
    for (ln, l) in lines {
        let row = l
            .split_whitespace()
            .map(|t| parse_f64(t, ln))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != kappa {
            return Err(parse_err(
                ln,
                format!("expected {kappa} values, got {}", row.len()),
            ));
        }
        rows.push(row);
    }
    let eigenvectors = if rows.is_empty() {
        FeatureMatrix::zeros(0, kappa)
    } else {
        FeatureMatrix::from_rows(&rows)?
    };
    Ok(SpectralBasis {
        operator,
        selection,
        requested_kappa: kappa,
        eigenvalues,
        eigenvectors,
        seed,
    })
}

/// `#dist v1 kind=<k> params=<p> kappa=<κ|exact>`, then `u<TAB>v<TAB>value`
/// per canonical edge.
pub fn write_distances(g: &Graph, d: &EdgeDistances, mut w: impl Write) -> Result<()> {
    d.check_aligned(g)?;
    writeln!(
        w,
        "#dist v1 kind={} params={} kappa={}",
        d.kind.name(),
        d.kind.params(),
        d.kappa
    )?;
    for (e, v) in g.edges().iter().zip(&d.values) {
        writeln!(w, "{}\t{}\t{}", e.u, e.v, fmt17(*v))?;
    }
    Ok(())
}

/// Inverse of [`write_distances`]; every line must name the canonical edge
/// at its position in `g`.
pub fn read_distances(g: &Graph, r: impl Read) -> Result<EdgeDistances> {
    let text = read_all(r)?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, head) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty distance cache"))?;
    let f = header_fields(head, "#dist", ln)?;
    let kind = DistanceKind::from_name_params(field(&f, "kind", ln)?, field(&f, "params", ln)?)?;
    let kappa: KappaUsed = field(&f, "kappa", ln)?.parse()?;
    let edges = g.edges();
    let mut values = Vec::with_capacity(edges.len());
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(ln, "expected `u v value`"));
        }
        let (u, v) = (parse_usize(toks[0], ln)?, parse_usize(toks[1], ln)?);
        let idx = values.len();
        match edges.get(idx) {
            Some(e) if (e.u, e.v) == (u, v) => {}
            Some(e) => {
                return Err(parse_err(
                    ln,
                    format!(
                        "edge ({u},{v}) where the graph's edge #{idx} is ({},{})",
                        e.u, e.v
                    ),
                ))
            }
            None => return Err(parse_err(ln, "more distances than graph edges")),
        }
        values.push(parse_f64(toks[2], ln)?);
    }
    if values.len() != edges.len() {
        return Err(Error::DimensionMismatch {
            what: "distance cache edges",
            expected: edges.len(),
            got: values.len(),
        });
    }
    Ok(EdgeDistances {
        kind,
        kappa,
        values,
    })
}

pub fn write_history(history: &[EpochRecord], mut w: impl Write) -> Result<()> {
    writeln!(w, "epoch,loss,train_acc,val_acc")?;
    for r in history {
        writeln!(
            w,
            "{},{},{},{}",
            r.epoch,
            fmt17(r.loss),
            fmt17(r.train_acc),
            fmt17(r.val_acc)
        )?;
    }
    Ok(())
}

/// Tab-separated model: `mean`, `scale` and `bias` rows, then one `w<a>`
/// row per input dimension.
pub fn write_model(m: &SoftmaxModel, mut w: impl Write) -> Result<()> {
    let join = |v: &[f64]| v.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join("\t");
    writeln!(
        w,
        "#model v1 dim={} classes={}",
        m.weights.rows(),
        m.num_classes()
    )?;
    writeln!(w, "mean\t{}", join(&m.mean))?;
    writeln!(w, "scale\t{}", join(&m.scale))?;
    writeln!(w, "bias\t{}", join(&m.bias))?;
    for a in 0..m.weights.rows() {
        writeln!(w, "w{a}\t{}", join(m.weights.row(a)))?;
    }
    Ok(())
}

pub fn read_model(r: impl Read) -> Result<SoftmaxModel> {
    let text = read_all(r)?;
    let mut mean = None;
    let mut scale = None;
    let mut bias = None;
    let mut rows = Vec::new();
    for (ln, l) in data_lines(&text) {
        let mut toks = l.split('\t');
        let tag = toks.next().unwrap_or_default();
        let vals = toks
            .map(|t| parse_f64(t, ln))
            .collect::<Result<Vec<f64>>>()?;
        match tag {
            "mean" => mean = Some(vals),
            "scale" => scale = Some(vals),
            "bias" => bias = Some(vals),
            t if t.starts_with('w') => rows.push(vals),
            t => return Err(parse_err(ln, format!("unknown model row {t:?}"))),
        }
    }
    let missing = |what: &str| parse_err(0, format!("model lacks a `{what}` row"));
    let bias = bias.ok_or_else(|| missing("bias"))?;
    let weights = if rows.is_empty() {
        FeatureMatrix::zeros(0, bias.len())
    } else {
        FeatureMatrix::from_rows(&rows)?
    };
    Ok(SoftmaxModel {
        mean: mean.ok_or_else(|| missing("mean"))?,
        scale: scale.ok_or_else(|| missing("scale"))?,
        weights,
        bias,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut h = Sha256::new();
    loop {
        let buf = r.fill_buf()?;
        if buf.is_empty() {
            break;
        }
        h.update(buf);
        let len = buf.len();
        r.consume(len);
    }
    Ok(hex::encode(h.finalize()))
}

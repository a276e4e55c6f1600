//! Plain-text model format.
//!
//! ```text
//! MRF M=<int> nodes=<int> edges=<int>
//! g <node> v0 v1 ... v(M-1)
//! e <i> <j> <potential-id>
//! pot <id> fbar=<real>
//! col <xj> <xi>:<value> <xi>:<value> ...
//! ```
//!
//! Tokens are whitespace separated. Blank lines and lines starting with `#`
//! are ignored. Potentials are given in the probability domain and an edge
//! line `e i j p` binds `f(x_i, x_j)` from potential `p`. Columns that are not
//! listed have empty neighborhoods.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{MrfBuilder, MrfError, MrfModel, Potential, SparseTruncatedPotential, TermId};
use crate::mrf::PairwiseTerm;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Model { line: usize, source: MrfError },
}

fn syntax(line: usize, message: impl Into<String>) -> TextError {
    TextError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T, TextError> {
    token
        .parse()
        .map_err(|_| syntax(line, format!("invalid {what} `{token}`")))
}

fn keyed<'a>(line: usize, token: Option<&'a str>, key: &str) -> Result<&'a str, TextError> {
    token
        .and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| syntax(line, format!("expected `{key}=<value>`")))
}

struct PotBlock {
    line: usize,
    fbar: f64,
    columns: Vec<Vec<(usize, f64)>>,
}

pub fn parse_model(input: &str) -> Result<MrfModel, TextError> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| syntax(1, "missing MRF header"))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("MRF") {
        return Err(syntax(hline, "header must start with `MRF`"));
    }
    let m: usize = parse_num(hline, keyed(hline, tok.next(), "M")?, "label count")?;
    let n: usize = parse_num(hline, keyed(hline, tok.next(), "nodes")?, "node count")?;
    let n_edges: usize = parse_num(hline, keyed(hline, tok.next(), "edges")?, "edge count")?;
    if m == 0 {
        return Err(TextError::Model {
            line: hline,
            source: MrfError::EmptyLabelSpace,
        });
    }

    let mut unaries: Vec<Option<(usize, Vec<f64>)>> = vec![None; n];
    let mut edges: Vec<(usize, usize, usize, String)> = Vec::with_capacity(n_edges);
    let mut pots: HashMap<String, PotBlock> = HashMap::new();
    let mut current: Option<String> = None;

    for (ln, line) in lines {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("g") => {
                let node: usize = parse_num(ln, tok.next().unwrap_or(""), "node index")?;
                if node >= n {
                    return Err(syntax(ln, format!("node {node} out of range")));
                }
                if unaries[node].is_some() {
                    return Err(syntax(ln, format!("duplicate unary for node {node}")));
                }
                let vals = tok
                    .map(|t| parse_num::<f64>(ln, t, "unary value"))
                    .collect::<Result<Vec<_>, _>>()?;
                if vals.len() != m {
                    return Err(syntax(
                        ln,
                        format!("expected {m} unary values, found {}", vals.len()),
                    ));
                }
                unaries[node] = Some((ln, vals));
            }
            Some("e") => {
                let i: usize = parse_num(ln, tok.next().unwrap_or(""), "node index")?;
                let j: usize = parse_num(ln, tok.next().unwrap_or(""), "node index")?;
                let p = tok
                    .next()
                    .ok_or_else(|| syntax(ln, "edge line needs a potential id"))?;
                edges.push((ln, i, j, p.to_string()));
            }
            Some("pot") => {
                let id = tok
                    .next()
                    .ok_or_else(|| syntax(ln, "pot line needs an id"))?;
                let fbar: f64 = parse_num(ln, keyed(ln, tok.next(), "fbar")?, "fbar")?;
                if pots.contains_key(id) {
                    return Err(syntax(ln, format!("duplicate potential `{id}`")));
                }
                pots.insert(
                    id.to_string(),
                    PotBlock {
                        line: ln,
                        fbar,
                        columns: vec![Vec::new(); m],
                    },
                );
                current = Some(id.to_string());
            }
            Some("col") => {
                let id = current
                    .as_ref()
                    .ok_or_else(|| syntax(ln, "col line outside a pot block"))?;
                let block = pots.get_mut(id).expect("current block exists");
                let xj: usize = parse_num(ln, tok.next().unwrap_or(""), "column state")?;
                if xj >= m {
                    return Err(syntax(ln, format!("column {xj} out of range")));
                }
                for t in tok {
                    let (xi, v) = t
                        .split_once(':')
                        .ok_or_else(|| syntax(ln, format!("expected `xi:value`, found `{t}`")))?;
                    let xi: usize = parse_num(ln, xi, "state")?;
                    let v: f64 = parse_num(ln, v, "potential value")?;
                    block.columns[xj].push((xi, v));
                }
            }
            Some(other) => return Err(syntax(ln, format!("unknown record `{other}`"))),
            None => unreachable!(),
        }
    }

    if edges.len() != n_edges {
        return Err(syntax(
            hline,
            format!("header declares {n_edges} edges, found {}", edges.len()),
        ));
    }

    let mut builder = MrfBuilder::new(m).map_err(|source| TextError::Model {
        line: hline,
        source,
    })?;
    for (node, u) in unaries.into_iter().enumerate() {
        let (ln, vals) =
            u.ok_or_else(|| syntax(hline, format!("missing unary for node {node}")))?;
        builder
            .add_node(&vals)
            .map_err(|source| TextError::Model { line: ln, source })?;
    }

    // terms are added in order of first use so ids stay deterministic
    let mut term_ids: HashMap<String, TermId> = HashMap::new();
    for (ln, i, j, pid) in edges {
        let term = match term_ids.get(&pid) {
            Some(&t) => t,
            None => {
                let block = pots
                    .get(&pid)
                    .ok_or_else(|| syntax(ln, format!("unknown potential `{pid}`")))?;
                let model_err = |source| TextError::Model {
                    line: block.line,
                    source,
                };
                let sparse = SparseTruncatedPotential::new(m, block.fbar, &block.columns)
                    .map_err(model_err)?;
                let term = PairwiseTerm::from_sparse(sparse).map_err(model_err)?;
                let id = builder.add_term(term).map_err(model_err)?;
                term_ids.insert(pid, id);
                id
            }
        };
        builder
            .add_edge(i, j, term)
            .map_err(|source| TextError::Model { line: ln, source })?;
    }
    builder.build().map_err(|source| TextError::Model {
        line: hline,
        source,
    })
}

/// Serializes the probability domain of a model. Dense terms are written with
/// `fbar=0` and every nonzero entry listed.
pub fn write_model(model: &MrfModel) -> String {
    let m = model.num_labels();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "MRF M={} nodes={} edges={}",
        m,
        model.num_nodes(),
        model.num_edges()
    );
    for node in 0..model.num_nodes() {
        let _ = write!(out, "g {node}");
        for v in model.unary(node) {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    for e in model.edges() {
        let _ = writeln!(out, "e {} {} {}", e.a, e.b, e.term.0);
    }
    for (id, term) in model.terms().iter().enumerate() {
        let sparse = match term.product() {
            Potential::Sparse(s) => s.clone(),
            Potential::Dense(d) => {
                SparseTruncatedPotential::from_dense(d, 0.0, 0.0).expect("dense table is valid")
            }
        };
        let _ = writeln!(out, "pot {id} fbar={}", sparse.fbar());
        for xj in 0..m {
            let col = sparse.column(xj);
            if col.is_empty() {
                continue;
            }
            let _ = write!(out, "col {xj}");
            for (xi, v) in col.rows.iter().zip(col.values) {
                let _ = write!(out, " {xi}:{v}");
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrf::build_grid_mrf;

    const CHAIN: &str = "MRF M=2 nodes=2 edges=1
g 0 1 1
g 1 2 1
e 0 1 p
pot p fbar=0.5
col 0 0:1
col 1 1:1
";

    #[test]
    fn parses_chain() {
        let m = parse_model(CHAIN).unwrap();
        assert_eq!(m.num_nodes(), 2);
        assert_eq!(m.num_edges(), 1);
        assert_eq!(m.unary(1), &[2.0, 1.0]);
        let f = m.term(m.edges()[0].term).product();
        assert_eq!(f.get(0, 0), 1.0);
        assert_eq!(f.get(1, 0), 0.5);
        assert_eq!(f.get(0, 1), 0.5);
    }

    #[test]
    fn round_trip_grid() {
        let term = PairwiseTerm::truncated_linear(4, 0.9, 2.0).unwrap();
        let g = build_grid_mrf(2, 3, term, |r, c| {
            vec![1.0 + r as f64, 0.5, 0.25 * c as f64 + 0.1, 2.0]
        })
        .unwrap();
        let text = write_model(&g);
        let back = parse_model(&text).unwrap();
        assert_eq!(back.num_edges(), g.num_edges());
        for n in 0..g.num_nodes() {
            assert_eq!(back.unary(n), g.unary(n));
        }
        assert_eq!(back.terms()[0].product(), g.terms()[0].product());
        assert_eq!(write_model(&back), text);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = "MRF M=2 nodes=1 edges=0\ng 0 1\n";
        match parse_model(bad) {
            Err(TextError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let bad = "MRF M=2 nodes=2 edges=1\ng 0 1 1\ng 1 1 1\ne 0 1 q\n";
        assert!(matches!(
            parse_model(bad),
            Err(TextError::Syntax { line: 4, .. })
        ));
        assert!(parse_model("MRX M=2 nodes=1 edges=0").is_err());
        assert!(parse_model("MRF M=2 nodes=1 edges=1\ng 0 1 1\n").is_err());
    }
}

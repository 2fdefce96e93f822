//! Line-delimited JSON serialization of usage graphs.
//!
//! ```text
//! {"kind":"header","word":"ledning","version":1}
//! {"kind":"use","id":"u1","corpus":"C1","word":"ledning","tokens":[..],"target_index":3}
//! {"kind":"sense","id":"s1","word":"ledning","gloss":"..."}
//! {"kind":"judgment","pair":["u1","u2"],"annotator":"a1","value":3,"round":1}
//! ```
//!
//! Nodes are written in id order, judgments grouped by pair in pair order and
//! in arrival order within a pair, so writing a parsed canonical file
//! reproduces it byte for byte.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Epoch, Judgment, Node, NodeId, Pair, SenseDefNode, UsageGraph, UseNode};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Record {
    Header { word: String, version: u32 },
    Use { id: NodeId, corpus: Epoch, word: String, tokens: Vec<String>, target_index: usize },
    Sense { id: NodeId, word: String, gloss: String },
    Judgment { pair: Pair, annotator: String, value: u8, round: u32 },
}

impl From<&Node> for Record {
    fn from(n: &Node) -> Self {
        match n {
            Node::Use(u) => Record::Use {
                id: u.id.clone(),
                corpus: u.corpus,
                word: u.word.clone(),
                tokens: u.tokens.clone(),
                target_index: u.target_index,
            },
            Node::Sense(s) => Record::Sense { id: s.id.clone(), word: s.word.clone(), gloss: s.gloss.clone() },
        }
    }
}

impl From<&Judgment> for Record {
    fn from(j: &Judgment) -> Self {
        Record::Judgment { pair: j.pair.clone(), annotator: j.annotator.clone(), value: j.value, round: j.round }
    }
}

pub fn write_graph<W: Write>(graph: &UsageGraph, mut out: W) -> Result<()> {
    let mut line = |r: &Record| -> Result<()> {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Io(e.to_string()))?;
        out.write_all(b"\n")?;
        Ok(())
    };
    line(&Record::Header { word: graph.word().to_owned(), version: FORMAT_VERSION })?;
    for n in graph.nodes() {
        line(&n.into())?;
    }
    for j in graph.judgments() {
        line(&j.into())?;
    }
    Ok(())
}

pub fn graph_to_string(graph: &UsageGraph) -> String {
    let mut buf = Vec::new();
    write_graph(graph, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

pub fn read_graph<R: BufRead>(input: R) -> Result<UsageGraph> {
    let mut graph: Option<UsageGraph> = None;
    let mut judgments = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
        let parse_err = |msg: String| Error::Parse { line: lineno, msg };
        match (record, graph.as_mut()) {
            (Record::Header { word, version }, None) => {
                if version != FORMAT_VERSION {
                    return Err(parse_err(format!("unsupported format version {version}")));
                }
                graph = Some(UsageGraph::new(word));
            }
            (Record::Header { .. }, Some(_)) => return Err(parse_err("duplicate header".into())),
            (_, None) => return Err(parse_err("first record must be the header".into())),
            (Record::Use { id, corpus, word, tokens, target_index }, Some(g)) => {
                let node = UseNode::new(id, corpus, word, tokens, target_index).map_err(|e| parse_err(e.to_string()))?;
                g.add_node(node).map_err(|e| parse_err(e.to_string()))?;
            }
            (Record::Sense { id, word, gloss }, Some(g)) => {
                let node = SenseDefNode::new(id, word, gloss).map_err(|e| parse_err(e.to_string()))?;
                g.add_node(node).map_err(|e| parse_err(e.to_string()))?;
            }
            (Record::Judgment { pair, annotator, value, round }, Some(_)) => {
                judgments.push((lineno, Judgment { pair, annotator, value, round }));
            }
        }
    }
    let mut graph = graph.ok_or(Error::Parse { line: 0, msg: "missing header".into() })?;
    for (lineno, j) in judgments {
        graph.add_judgment(j).map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
    }
    Ok(graph)
}

pub fn graph_from_str(s: &str) -> Result<UsageGraph> {
    read_graph(s.as_bytes())
}

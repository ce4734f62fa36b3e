//! Tab-separated and CSV file formats.
//!
//! Every per-node file names nodes by their external label (the strings in
//! the edge list). Blank lines and lines starting with `#` are ignored on
//! input. Floats are written with shortest round-trip formatting, so a
//! write/read cycle is lossless.

use std::borrow::Cow;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use spreader_core::community::{ChaPartition, Role};
use spreader_core::features::{
    ActivityRecord, ActivityTable, FeatureMatrix, FeatureStrategy, RetweetPair, SamplingWeights, FEATURE_DIM,
};
use spreader_core::sage::Prediction;
use spreader_core::sampler::SampledNeighborhood;
use spreader_core::synth::{CascadeTrace, NodeStatus};
use spreader_core::tsm::{BelievabilityScores, TrustScores};
use spreader_core::{DirectedGraph, GraphBuilder, NodeId};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    /// Edge rows read (including skipped ones).
    pub rows: usize,
    pub self_loops: usize,
    pub duplicates: usize,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Calls `row` with the 1-based line number and tab-separated fields of
/// every data line.
fn for_each_row(path: &Path, mut row: impl FnMut(usize, &[&str]) -> Result<()>) -> Result<()> {
    let reader = open(path)?;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        row(i + 1, &fields)?;
    }
    Ok(())
}

fn expect_fields(path: &Path, line: usize, fields: &[&str], min: usize, max: usize) -> Result<()> {
    if fields.len() < min || fields.len() > max {
        let expected = if min == max {
            format!("{min}")
        } else {
            format!("{min} to {max}")
        };
        return Err(Error::parse(
            path,
            line,
            format!("expected {expected} tab-separated fields, found {}", fields.len()),
        ));
    }
    Ok(())
}

fn parse_f64(path: &Path, line: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("{what} {field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("{what} {field:?} is not finite")));
    }
    Ok(v)
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

macro_rules! out {
    ($w:expr, $path:expr, $($arg:tt)*) => {
        writeln!($w, $($arg)*).map_err(|e| Error::io($path, e))?
    };
}

/// Reads `src<TAB>dst[<TAB>weight]` rows. Node ids are assigned in order of
/// first appearance; self-loops are skipped and repeated pairs keep the
/// first weight.
pub fn load_edge_list(path: &Path, default_weight: f64) -> Result<(DirectedGraph, LoadStats)> {
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(u32, u32, f64)> = Vec::new();
    let mut intern = |s: &str| -> Result<u32> {
        if let Some(&id) = ids.get(s) {
            return Ok(id);
        }
        let id = u32::try_from(labels.len()).map_err(|_| spreader_core::GraphError::TooManyNodes(labels.len()))?;
        ids.insert(s.to_owned(), id);
        labels.push(s.to_owned());
        Ok(id)
    };
    let mut rows = 0;
    for_each_row(path, |line, fields| {
        expect_fields(path, line, fields, 2, 3)?;
        let (src, dst) = (fields[0].trim(), fields[1].trim());
        if src.is_empty() || dst.is_empty() {
            return Err(Error::parse(path, line, "empty node label"));
        }
        let weight = match fields.get(2) {
            Some(w) => parse_f64(path, line, w, "weight")?,
            None => default_weight,
        };
        if weight < 0.0 {
            return Err(Error::parse(path, line, format!("negative weight {weight}")));
        }
        rows += 1;
        let s = intern(src)?;
        let d = intern(dst)?;
        edges.push((s, d, weight));
        Ok(())
    })?;
    let mut builder = GraphBuilder::new(labels.len()).with_labels(labels);
    for (s, d, w) in edges {
        builder.add_edge(NodeId(s), NodeId(d), w)?;
    }
    let (g, stats) = builder.build()?;
    Ok((
        g,
        LoadStats {
            rows,
            self_loops: stats.self_loops,
            duplicates: stats.duplicates,
        },
    ))
}

/// External label of `v`, or its dense id when the graph is unlabeled.
pub fn node_name(g: &DirectedGraph, v: NodeId) -> Cow<'_, str> {
    match g.label(v) {
        Some(s) => Cow::Borrowed(s),
        None => Cow::Owned(v.0.to_string()),
    }
}

/// Resolves external labels (or dense ids for unlabeled graphs).
pub struct NodeLookup<'g> {
    graph: &'g DirectedGraph,
    by_label: Option<HashMap<&'g str, NodeId>>,
}

impl<'g> NodeLookup<'g> {
    pub fn new(graph: &'g DirectedGraph) -> Self {
        let by_label = graph.labels().map(|ls| {
            ls.iter()
                .enumerate()
                .map(|(i, s)| (s.as_str(), NodeId::new(i)))
                .collect()
        });
        NodeLookup { graph, by_label }
    }

    pub fn get(&self, name: &str) -> Option<NodeId> {
        match &self.by_label {
            Some(map) => map.get(name).copied(),
            None => name.parse::<u32>().ok().map(NodeId).filter(|&v| self.graph.contains(v)),
        }
    }

    fn resolve(&self, path: &Path, name: &str) -> Result<NodeId> {
        self.get(name.trim()).ok_or_else(|| Error::UnknownNode {
            path: path.to_owned(),
            label: name.trim().to_owned(),
        })
    }
}

pub fn save_edge_list(g: &DirectedGraph, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for e in g.edges() {
        out!(
            w,
            path,
            "{}\t{}\t{}",
            node_name(g, e.src),
            node_name(g, e.dst),
            e.weight
        );
    }
    finish(path, w)
}

/// `dense_id<TAB>external_label`.
pub fn save_labels(g: &DirectedGraph, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for v in g.nodes() {
        out!(w, path, "{}\t{}", v.0, node_name(g, v));
    }
    finish(path, w)
}

/// Reads one value per node; every node must appear exactly once.
fn read_per_node<T: Clone>(
    g: &DirectedGraph,
    path: &Path,
    fields: usize,
    mut parse: impl FnMut(usize, &[&str]) -> Result<T>,
) -> Result<Vec<T>> {
    let lookup = NodeLookup::new(g);
    let mut values: Vec<Option<T>> = vec![None; g.node_count()];
    for_each_row(path, |line, f| {
        expect_fields(path, line, f, fields, fields)?;
        let v = lookup.resolve(path, f[0])?;
        if values[v.index()].is_some() {
            return Err(Error::parse(path, line, format!("node {:?} listed twice", f[0].trim())));
        }
        values[v.index()] = Some(parse(line, &f[1..])?);
        Ok(())
    })?;
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| Error::Csv {
                path: path.to_owned(),
                message: format!("no row for node {:?}", node_name(g, NodeId::new(i))),
            })
        })
        .collect()
}

/// `node<TAB>ti<TAB>tw`.
pub fn write_trust_scores(g: &DirectedGraph, scores: &TrustScores, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for v in g.nodes() {
        out!(
            w,
            path,
            "{}\t{}\t{}",
            node_name(g, v),
            scores.ti[v.index()],
            scores.tw[v.index()]
        );
    }
    finish(path, w)
}

pub fn read_trust_scores(g: &DirectedGraph, path: &Path) -> Result<TrustScores> {
    let rows = read_per_node(g, path, 3, |line, f| {
        Ok((parse_f64(path, line, f[0], "ti")?, parse_f64(path, line, f[1], "tw")?))
    })?;
    Ok(TrustScores {
        ti: rows.iter().map(|r| r.0).collect(),
        tw: rows.iter().map(|r| r.1).collect(),
        iterations_run: 0,
        converged: true,
    })
}

/// `src<TAB>dst<TAB>bel`, one row per edge.
pub fn write_believability(g: &DirectedGraph, bel: &BelievabilityScores, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for (e, edge) in g.edges().enumerate() {
        out!(
            w,
            path,
            "{}\t{}\t{}",
            node_name(g, edge.src),
            node_name(g, edge.dst),
            bel.by_edge(e)
        );
    }
    finish(path, w)
}

pub fn read_believability(g: &DirectedGraph, path: &Path) -> Result<BelievabilityScores> {
    let lookup = NodeLookup::new(g);
    let mut values: Vec<Option<f64>> = vec![None; g.edge_count()];
    for_each_row(path, |line, f| {
        expect_fields(path, line, f, 3, 3)?;
        let (s, d) = (lookup.resolve(path, f[0])?, lookup.resolve(path, f[1])?);
        let e = g
            .find_edge(s, d)
            .ok_or_else(|| Error::parse(path, line, "believability for an edge not in the graph"))?;
        values[e] = Some(parse_f64(path, line, f[2], "believability")?);
        Ok(())
    })?;
    let missing = values.iter().filter(|v| v.is_none()).count();
    if missing > 0 {
        return Err(Error::Csv {
            path: path.to_owned(),
            message: format!("{missing} edges have no believability row"),
        });
    }
    Ok(BelievabilityScores::from_values(
        g,
        values.into_iter().flatten().collect(),
    )?)
}

/// `node<TAB>community`; also used for planted partitions.
pub fn write_communities(g: &DirectedGraph, assignment: &[u32], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for v in g.nodes() {
        out!(w, path, "{}\t{}", node_name(g, v), assignment[v.index()]);
    }
    finish(path, w)
}

pub fn read_communities(g: &DirectedGraph, path: &Path) -> Result<Vec<u32>> {
    read_per_node(g, path, 2, |line, f| {
        f[0].trim()
            .parse::<u32>()
            .map_err(|_| Error::parse(path, line, format!("community {:?} is not an integer", f[0])))
    })
}

/// `node<TAB>community<TAB>role`, role one of `boundary`, `core` or
/// `neighbor` (one neighbor row per community the node borders).
pub fn write_cha(g: &DirectedGraph, cha: &ChaPartition, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for (c, roles) in cha.communities.iter().enumerate() {
        for &v in &roles.members {
            let role = cha.role(v);
            out!(w, path, "{}\t{}\t{}", node_name(g, v), c, role.as_str());
        }
        for &v in &roles.neighbors {
            out!(w, path, "{}\t{}\tneighbor", node_name(g, v), c);
        }
    }
    finish(path, w)
}

/// Role per node read back from a `cha.tsv` file (neighbor rows skipped).
pub fn read_cha_roles(g: &DirectedGraph, path: &Path) -> Result<Vec<(u32, Role)>> {
    let lookup = NodeLookup::new(g);
    let mut out: Vec<Option<(u32, Role)>> = vec![None; g.node_count()];
    for_each_row(path, |line, f| {
        expect_fields(path, line, f, 3, 3)?;
        let v = lookup.resolve(path, f[0])?;
        let c: u32 = f[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, "community is not an integer"))?;
        let role = match f[2].trim() {
            "boundary" => Role::Boundary,
            "core" => Role::Core,
            "neighbor" => return Ok(()),
            other => return Err(Error::parse(path, line, format!("unknown role {other:?}"))),
        };
        out[v.index()] = Some((c, role));
        Ok(())
    })?;
    out.into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.ok_or_else(|| Error::Csv {
                path: path.to_owned(),
                message: format!("no role for node {:?}", node_name(g, NodeId::new(i))),
            })
        })
        .collect()
}

/// `node<TAB>feature_0<TAB>feature_1`.
pub fn write_features(g: &DirectedGraph, x: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for v in g.nodes() {
        let r = x.row(v);
        out!(w, path, "{}\t{}\t{}", node_name(g, v), r[0], r[1]);
    }
    finish(path, w)
}

pub fn read_features(g: &DirectedGraph, strategy: FeatureStrategy, path: &Path) -> Result<FeatureMatrix> {
    let rows = read_per_node(g, path, 1 + FEATURE_DIM, |line, f| {
        Ok([
            parse_f64(path, line, f[0], "feature")?,
            parse_f64(path, line, f[1], "feature")?,
        ])
    })?;
    Ok(FeatureMatrix::from_rows(strategy, &rows))
}

/// `src<TAB>dst<TAB>probability` for every node with sampling mass.
pub fn write_sampling_weights(g: &DirectedGraph, weights: &SamplingWeights, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for v in g.nodes() {
        let (targets, probs) = weights.distribution(v);
        for (&t, &p) in targets.iter().zip(probs) {
            out!(w, path, "{}\t{}\t{}", node_name(g, v), node_name(g, t), p);
        }
    }
    finish(path, w)
}

/// Raw per-edge weights from a `src<TAB>dst<TAB>value` file; edges without
/// a row get zero.
pub fn read_edge_values(g: &DirectedGraph, path: &Path) -> Result<Vec<f64>> {
    let lookup = NodeLookup::new(g);
    let mut values = vec![0.0; g.edge_count()];
    for_each_row(path, |line, f| {
        expect_fields(path, line, f, 3, 3)?;
        let (s, d) = (lookup.resolve(path, f[0])?, lookup.resolve(path, f[1])?);
        let e = g
            .find_edge(s, d)
            .ok_or_else(|| Error::parse(path, line, "value for an edge not in the graph"))?;
        values[e] = parse_f64(path, line, f[2], "value")?;
        Ok(())
    })?;
    Ok(values)
}

fn parse_status(path: &Path, line: usize, s: &str) -> Result<NodeStatus> {
    NodeStatus::parse(s.trim()).ok_or_else(|| Error::parse(path, line, format!("unknown status {s:?}")))
}

/// `node<TAB>status<TAB>round`, round `-` for unexposed nodes.
pub fn write_trace(g: &DirectedGraph, trace: &CascadeTrace, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for v in g.nodes() {
        let round = trace.round[v.index()].map_or_else(|| "-".to_owned(), |r| r.to_string());
        out!(
            w,
            path,
            "{}\t{}\t{}",
            node_name(g, v),
            trace.status[v.index()].as_str(),
            round
        );
    }
    finish(path, w)
}

pub fn read_trace(g: &DirectedGraph, path: &Path) -> Result<CascadeTrace> {
    let rows = read_per_node(g, path, 3, |line, f| {
        let status = parse_status(path, line, f[0])?;
        let round = match f[1].trim() {
            "-" | "" => None,
            r => Some(
                r.parse::<u32>()
                    .map_err(|_| Error::parse(path, line, format!("round {r:?} is not an integer")))?,
            ),
        };
        Ok((status, round))
    })?;
    let (status, round) = rows.into_iter().unzip();
    Ok(CascadeTrace::from_status(status, round)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct ActivityRow {
    node: String,
    n_t: u32,
    retweet_count: u32,
    times_retweeted_total: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PairRow {
    /// Retweeted node.
    x: String,
    /// Retweeter.
    v: String,
    rt_count: u32,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

/// `node,n_t,retweet_count,times_retweeted_total` and optionally
/// `x,v,rt_count` ("x retweeted by v").
pub fn write_activity(g: &DirectedGraph, table: &ActivityTable, path: &Path, pairs_path: Option<&Path>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in table.records() {
        w.serialize(ActivityRow {
            node: node_name(g, r.node).into_owned(),
            n_t: r.timeline_size,
            retweet_count: r.retweet_count,
            times_retweeted_total: r.times_retweeted_total,
        })
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    if let Some(pp) = pairs_path {
        let mut w = csv::Writer::from_writer(create(pp)?);
        for p in &table.pairs {
            w.serialize(PairRow {
                x: node_name(g, p.retweeted).into_owned(),
                v: node_name(g, p.retweeter).into_owned(),
                rt_count: p.count,
            })
            .map_err(|e| csv_error(pp, e))?;
        }
        w.flush().map_err(|e| Error::io(pp, e))?;
    }
    Ok(())
}

pub fn read_activity(g: &DirectedGraph, path: &Path, pairs_path: Option<&Path>) -> Result<ActivityTable> {
    let lookup = NodeLookup::new(g);
    let mut table = ActivityTable::new(g.node_count());
    let mut reader = csv::Reader::from_reader(open(path)?);
    for row in reader.deserialize::<ActivityRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let node = lookup.resolve(path, &row.node)?;
        table.insert(ActivityRecord {
            node,
            timeline_size: row.n_t,
            retweet_count: row.retweet_count,
            times_retweeted_total: row.times_retweeted_total,
        })?;
    }
    if let Some(pp) = pairs_path {
        let mut reader = csv::Reader::from_reader(open(pp)?);
        for row in reader.deserialize::<PairRow>() {
            let row = row.map_err(|e| csv_error(pp, e))?;
            table.pairs.push(RetweetPair {
                retweeted: lookup.resolve(pp, &row.x)?,
                retweeter: lookup.resolve(pp, &row.v)?,
                count: row.rt_count,
            });
        }
    }
    Ok(table)
}

/// `node<TAB>p_spreader<TAB>label`.
pub fn write_predictions(g: &DirectedGraph, predictions: &[Prediction], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    for p in predictions {
        out!(
            w,
            path,
            "{}\t{}\t{}",
            node_name(g, p.node),
            p.spreader_probability,
            p.label.as_str()
        );
    }
    finish(path, w)
}

/// Node and predicted label per row, in file order.
pub fn read_predictions(g: &DirectedGraph, path: &Path) -> Result<Vec<(NodeId, spreader_core::labels::Label)>> {
    use spreader_core::labels::Label;
    let lookup = NodeLookup::new(g);
    let mut out = Vec::new();
    for_each_row(path, |line, f| {
        expect_fields(path, line, f, 2, 3)?;
        let v = lookup.resolve(path, f[0])?;
        let label = match f[f.len() - 1].trim() {
            "spreader" => Label::Spreader,
            "non-spreader" => Label::NonSpreader,
            other => return Err(Error::parse(path, line, format!("unknown label {other:?}"))),
        };
        out.push((v, label));
        Ok(())
    })?;
    Ok(out)
}

/// Node names listed one per line.
pub fn read_node_list(g: &DirectedGraph, path: &Path) -> Result<Vec<NodeId>> {
    let lookup = NodeLookup::new(g);
    let mut out = Vec::new();
    for_each_row(path, |_, f| {
        out.push(lookup.resolve(path, f[0])?);
        Ok(())
    })?;
    Ok(out)
}

/// `expanded_node<TAB>drawn_node` rows of a sampled neighborhood.
pub fn write_neighborhood(g: &DirectedGraph, nbh: &SampledNeighborhood, w: &mut impl Write) -> std::io::Result<()> {
    for (u, drawn) in nbh.draws() {
        for &v in drawn {
            writeln!(w, "{}\t{}", node_name(g, *u), node_name(g, v))?;
        }
    }
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    out!(w, path, "");
    finish(path, w)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

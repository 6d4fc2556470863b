//! JSON formats for instance, graph and channel files.
//!
//! Complex numbers are `[re, im]`; matrices are row-major lists of rows.
//!
//! ```json
//! {"n": 2, "t": 2, "pairs": [[1, 2]],
//!  "matrices": {"1,2": [[[0.5,0],[0,0],[0,0],[0.5,0]], ...]},
//!  "witness": [[0.7071067811865476,0],[0,0],[0,0],[0.7071067811865476,0]],
//!  "promise": "yes"}
//! ```
//!
//! `witness` and `promise` are optional.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::compiler::coloring::Graph;
use crate::lcdm::LCDMInstance;
use crate::qmath::{DensityMatrix, Matrix, StateVector, C64};
use crate::{Error, Result};

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Promise {
    Yes,
    No,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub t: u32,
    pub pairs: Vec<[usize; 2]>,
    pub matrices: BTreeMap<String, JsonMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<JsonComplex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub promise: Option<Promise>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub n: usize,
    pub kraus: Vec<JsonMatrix>,
}

/// A parsed instance with its optional witness and promise.
#[derive(Clone, Debug)]
pub struct LoadedInstance {
    pub instance: LCDMInstance,
    pub witness: Option<StateVector>,
    pub promise: Option<Promise>,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn matrix_from_json(m: &JsonMatrix) -> Result<Matrix> {
    let d = m.len();
    if d == 0 || m.iter().any(|row| row.len() != d) {
        return Err(Error::DimensionMismatch("matrix must be square and non-empty".into()));
    }
    Ok(Matrix::from_fn(d, d, |i, j| C64::new(m[i][j][0], m[i][j][1])))
}

pub fn matrix_to_json(m: &Matrix) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn pair_key(x: usize, y: usize) -> String {
    format!("{x},{y}")
}

pub fn parse_instance(text: &str) -> Result<LoadedInstance> {
    let file: InstanceFile = parse(text)?;
    instance_from_file(&file)
}

pub fn instance_from_file(file: &InstanceFile) -> Result<LoadedInstance> {
    let pairs: Vec<(usize, usize)> = file.pairs.iter().map(|p| (p[0], p[1])).collect();
    let mut matrices = Vec::with_capacity(pairs.len());
    for &(x, y) in &pairs {
        let m = file
            .matrices
            .get(&pair_key(x, y))
            .ok_or_else(|| Error::InvalidInstance(format!("no matrix for pair \"{x},{y}\"")))?;
        let m = DensityMatrix::new(matrix_from_json(m)?)
            .map_err(|e| Error::InvalidInstance(format!("matrix \"{x},{y}\": {e}")))?;
        matrices.push(m);
    }
    if let Some(extra) = file.matrices.keys().find(|k| !pairs.iter().any(|&(x, y)| pair_key(x, y) == **k)) {
        return Err(Error::InvalidInstance(format!("matrix \"{extra}\" has no pair")));
    }
    let instance = LCDMInstance::new(file.n, file.t, pairs, matrices)?;
    let witness = match &file.witness {
        Some(amps) => {
            let w = StateVector::new(amps.iter().map(|a| C64::new(a[0], a[1])).collect())?;
            if w.n() != instance.n {
                return Err(Error::InvalidInstance(format!("{}-qubit witness for n = {}", w.n(), instance.n)));
            }
            Some(w)
        }
        None => None,
    };
    Ok(LoadedInstance { instance, witness, promise: file.promise })
}

pub fn instance_to_file(inst: &LCDMInstance, witness: Option<&StateVector>, promise: Option<Promise>) -> InstanceFile {
    InstanceFile {
        n: inst.n,
        t: inst.t,
        pairs: inst.pairs.iter().map(|&(x, y)| [x, y]).collect(),
        matrices: inst
            .pairs
            .iter()
            .zip(&inst.matrices)
            .map(|(&(x, y), m)| (pair_key(x, y), matrix_to_json(m.matrix())))
            .collect(),
        witness: witness.map(|w| w.amplitudes().iter().map(|a| [a.re, a.im]).collect()),
        promise,
    }
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let file: GraphFile = parse(text)?;
    Graph::new(file.vertices, file.edges.iter().map(|e| (e[0], e[1])).collect())
}

pub fn graph_to_file(g: &Graph) -> GraphFile {
    GraphFile { vertices: g.vertices, edges: g.edges.iter().map(|&(u, v)| [u, v]).collect() }
}

/// Kraus operators of a channel file, checked against the declared qubit
/// count.
pub fn parse_channel(text: &str) -> Result<Vec<Matrix>> {
    let file: ChannelFile = parse(text)?;
    if file.kraus.is_empty() {
        return Err(Error::InvalidInstance("channel has no Kraus operators".into()));
    }
    let d = 1usize << file.n.min(16);
    file.kraus
        .iter()
        .map(|k| {
            let m = matrix_from_json(k)?;
            if m.nrows() != d {
                return Err(Error::DimensionMismatch(format!("{}x{} Kraus operator for n = {}", m.nrows(), m.ncols(), file.n)));
            }
            Ok(m)
        })
        .collect()
}

pub fn channel_to_file(kraus: &[Matrix]) -> ChannelFile {
    let n = kraus.first().map_or(0, |k| k.nrows().trailing_zeros() as usize);
    ChannelFile { n, kraus: kraus.iter().map(matrix_to_json).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::purify::channel_suite;

    #[test]
    fn instance_round_trip() {
        let inst = LCDMInstance::zero3_yes();
        let file = instance_to_file(&inst, Some(&StateVector::zero(3)), Some(Promise::Yes));
        let text = serde_json::to_string(&file).unwrap();
        let loaded = parse_instance(&text).unwrap();
        assert_eq!(loaded.instance, inst);
        assert_eq!(loaded.witness, Some(StateVector::zero(3)));
        assert_eq!(loaded.promise, Some(Promise::Yes));
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(matches!(parse_instance("{not json"), Err(Error::Parse(_))));
        let mut file = instance_to_file(&LCDMInstance::bell_yes(), None, None);
        // negative eigenvalue
        file.matrices.insert("1,2".into(), vec![
            vec![[1.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            vec![[0.0, 0.0], [-0.5, 0.0], [0.0, 0.0], [0.0, 0.0]],
            vec![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
            vec![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        ]);
        let text = serde_json::to_string(&file).unwrap();
        assert!(matches!(parse_instance(&text), Err(Error::InvalidInstance(_))));
        let mut file = instance_to_file(&LCDMInstance::bell_yes(), None, None);
        file.matrices.clear();
        assert!(instance_from_file(&file).is_err());
    }

    #[test]
    fn graph_and_channel_round_trip() {
        let g = Graph::complete(4);
        let text = serde_json::to_string(&graph_to_file(&g)).unwrap();
        assert_eq!(parse_graph(&text).unwrap(), g);
        assert!(parse_graph(r#"{"vertices": 2, "edges": [[0, 2]]}"#).is_err());
        for (_, kraus) in channel_suite() {
            let text = serde_json::to_string(&channel_to_file(&kraus)).unwrap();
            assert_eq!(parse_channel(&text).unwrap(), kraus);
        }
        assert!(parse_channel(r#"{"n": 1, "kraus": [[[[1,0]]]]}"#).is_err());
    }
}

//! JSON file schema for kernels and envelopes.
//!
//! `{ "nodes": [labels in id order], "edges": [[from_id, to_id, mu], ...] }`
//! with an optional leading `meta` object recording provenance.  Envelope
//! files use the same schema with `mu` fixed at 1.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{CrispEnvelope, FuzzyKernel, NodeId, NodeTable};
use crate::scalar::Scalar;

/// Reproducibility header embedded in JSON outputs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileMeta {
    #[serde(default)]
    pub tool: String,
    #[serde(default)]
    pub version: String,
    #[serde(default)]
    pub config: String,
    #[serde(default)]
    pub config_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct KernelFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<FileMeta>,
    nodes: Vec<String>,
    edges: Vec<(u32, u32, f64)>,
}

fn kernel_from_file<S: Scalar>(file: KernelFile) -> Result<FuzzyKernel<S>> {
    let table = NodeTable::from_labels(&file.nodes)?;
    let mut builder = FuzzyKernel::<S>::builder(table);
    for (f, g, mu) in file.edges {
        let mu = S::from_f64(mu).ok_or_else(|| {
            Error::Schema(format!("edge weight {mu} does not fit the scalar type"))
        })?;
        builder.insert(NodeId(f), NodeId(g), mu)?;
    }
    Ok(builder.finish())
}

pub fn read_kernel_json<S: Scalar, R: BufRead>(reader: R) -> Result<FuzzyKernel<S>> {
    let file: KernelFile = serde_json::from_reader(reader)?;
    kernel_from_file(file)
}

/// Read an envelope file, insisting that every stored weight is exactly 1.
pub fn read_envelope_json<R: BufRead>(reader: R) -> Result<CrispEnvelope> {
    let file: KernelFile = serde_json::from_reader(reader)?;
    if let Some(&(f, g, mu)) = file.edges.iter().find(|&&(_, _, mu)| mu != 1.0) {
        return Err(Error::Schema(format!(
            "envelope edge ({f} -> {g}) has weight {mu}, expected exactly 1"
        )));
    }
    Ok(kernel_from_file::<f64>(file)?.support())
}

pub fn write_kernel_json<S: Scalar, W: Write>(
    writer: &mut W,
    kernel: &FuzzyKernel<S>,
    meta: Option<FileMeta>,
) -> Result<()> {
    let file = KernelFile {
        meta,
        nodes: kernel.nodes().labels().to_vec(),
        edges: kernel
            .edges()
            .map(|(f, g, mu)| (f.0, g.0, mu.to_f64().unwrap_or(f64::NAN)))
            .collect(),
    };
    serde_json::to_writer_pretty(&mut *writer, &file)?;
    writeln!(writer)?;
    Ok(())
}

pub fn write_envelope_json<W: Write>(
    writer: &mut W,
    envelope: &CrispEnvelope,
    meta: Option<FileMeta>,
) -> Result<()> {
    write_kernel_json(writer, &envelope.to_kernel::<f64>(), meta)
}

//! DOT and CSV exports.  Layout is left to the consumers; edge transparency
//! encodes the membership weight.

use std::fmt::Write as _;

use crate::coverage::CoverageReport;
use crate::geometry::{ComponentKind, CondensedGraph, EtaPoint};
use crate::relation::{FuzzyKernel, NodeTable};
use crate::scalar::Scalar;

const EDGE_COLOR: &str = "#d62728"; // red, alpha channel appended per edge
const ORDINARY_FILL: &str = "#fbb4ae";
const SUPERNODE_FILL: &str = "#74c476";

fn dot_escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

fn push_header(out: &mut String, header: Option<&str>) {
    if let Some(h) = header {
        for line in h.lines() {
            let _ = writeln!(out, "// {line}");
        }
    }
}

/// DOT rendering of a kernel; edge alpha is proportional to `mu`, so an
/// envelope (all weights 1) renders fully opaque.
pub fn kernel_dot<S: Scalar>(kernel: &FuzzyKernel<S>, header: Option<&str>) -> String {
    let mut out = String::new();
    push_header(&mut out, header);
    out.push_str("digraph kernel {\n");
    out.push_str("  rankdir=LR;\n  node [shape=circle, style=filled, fillcolor=\"");
    out.push_str(ORDINARY_FILL);
    out.push_str("\"];\n");
    for (id, label) in kernel.nodes().iter() {
        let _ = writeln!(out, "  n{} [label=\"{}\"];", id.0, dot_escape(label));
    }
    for (f, g, mu) in kernel.edges() {
        let alpha = (mu.to_f64().unwrap_or(1.0).clamp(0.0, 1.0) * 255.0).round() as u8;
        let _ = writeln!(
            out,
            "  n{} -> n{} [color=\"{EDGE_COLOR}{alpha:02x}\"];",
            f.0, g.0
        );
    }
    out.push_str("}\n");
    out
}

/// DOT rendering of a condensation: supernodes are green boxes labelled with
/// their sizes, ordinary components show their single node label.
pub fn condensed_dot(
    condensed: &CondensedGraph,
    nodes: &NodeTable,
    header: Option<&str>,
) -> String {
    let mut out = String::new();
    push_header(&mut out, header);
    out.push_str("digraph condensation {\n  rankdir=LR;\n");
    for (ci, comp) in condensed.components.iter().enumerate() {
        match condensed.kinds[ci] {
            ComponentKind::Supernode => {
                let _ = writeln!(
                    out,
                    "  c{ci} [label=\"scc{ci} ({} nodes)\", shape=box, style=filled, fillcolor=\"{SUPERNODE_FILL}\", kind=supernode];",
                    comp.len()
                );
            }
            ComponentKind::Ordinary => {
                let _ = writeln!(
                    out,
                    "  c{ci} [label=\"{}\", shape=circle, style=filled, fillcolor=\"{ORDINARY_FILL}\", kind=ordinary];",
                    dot_escape(nodes.label(comp[0]))
                );
            }
        }
    }
    for &(from, to) in &condensed.dag_edges {
        let _ = writeln!(out, "  c{from} -> c{to};");
    }
    out.push_str("}\n");
    out
}

/// Quote a CSV field when it contains a delimiter, quote, or newline.
pub fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_owned()
    }
}

fn push_csv_header(out: &mut String, header: Option<&str>) {
    if let Some(h) = header {
        for line in h.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
}

/// CSV of a threshold sweep: `p0,eta,supernode_count,nodes_in_supernodes,total_nodes`.
pub fn eta_csv(points: &[EtaPoint], header: Option<&str>) -> String {
    let mut out = String::new();
    push_csv_header(&mut out, header);
    out.push_str("p0,eta,supernode_count,nodes_in_supernodes,total_nodes\n");
    for pt in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            pt.p0, pt.eta, pt.supernode_count, pt.nodes_in_supernodes, pt.total_nodes
        );
    }
    out
}

/// CSV of coverage reports:
/// `f_label,g_label,d0,n_shortest,p_c,r_c,method` plus optional clipped
/// coverage columns when an evaluation parameter was requested.
pub fn coverage_csv<S: Scalar>(
    reports: &[CoverageReport<S>],
    nodes: &NodeTable,
    at_p: Option<&[(S, S)]>,
    header: Option<&str>,
) -> String {
    let mut out = String::new();
    push_csv_header(&mut out, header);
    out.push_str("f_label,g_label,d0,n_shortest,p_c,r_c,method");
    if at_p.is_some() {
        out.push_str(",p,coverage_clipped");
    }
    out.push('\n');
    for (i, r) in reports.iter().enumerate() {
        let d0 = r
            .d0
            .map(|d| d.to_string())
            .unwrap_or_else(|| "inf".to_owned());
        let n_shortest = r
            .n_shortest
            .as_ref()
            .map(|n| n.to_string())
            .unwrap_or_default();
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(nodes.label(r.source)),
            csv_field(nodes.label(r.target)),
            d0,
            n_shortest,
            r.p_c,
            r.r_c,
            r.method
        );
        if let Some(values) = at_p {
            let (p, clipped) = values[i];
            let _ = write!(out, ",{p},{clipped}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::condense;
    use crate::relation::{CrispEnvelope, NodeId};

    #[test]
    fn kernel_dot_encodes_membership_in_the_alpha_channel() {
        let table = NodeTable::from_labels(["(0,0)", "(0,1)"]).unwrap();
        let kernel = crate::relation::FuzzyKernel::from_edges(
            table,
            [(NodeId(0), NodeId(1), 0.5_f64)],
        )
        .unwrap();
        let dot = kernel_dot(&kernel, Some("demo"));
        assert!(dot.starts_with("// demo\n"));
        assert!(dot.contains("n0 -> n1 [color=\"#d6272880\"];"), "{dot}");
    }

    #[test]
    fn condensed_dot_marks_supernodes() {
        let table = NodeTable::from_labels(["a", "b", "c"]).unwrap();
        let env = CrispEnvelope::from_edges(
            table,
            [
                (NodeId(0), NodeId(1)),
                (NodeId(1), NodeId(0)),
                (NodeId(1), NodeId(2)),
            ],
        )
        .unwrap();
        let cond = condense(&env);
        let dot = condensed_dot(&cond, env.nodes(), None);
        assert!(dot.contains("kind=supernode"));
        assert!(dot.contains("kind=ordinary"));
    }

    #[test]
    fn csv_quotes_labels_with_commas() {
        assert_eq!(csv_field("(0,0)"), "\"(0,0)\"");
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}

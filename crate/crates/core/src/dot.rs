//! Graphviz dump of a hypothesis tree, for eyeballing only.

use std::fmt::Write;

use crate::model::Cluster;

pub fn cluster_to_dot<E, F>(cluster: &Cluster<E, F>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", cluster.id);
    let _ = writeln!(out, "  node [shape=box];");
    for g in cluster.groups.values() {
        let events: Vec<String> = g.events.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{}\\n{}\"];",
            g.id,
            g.id,
            events.join(" ")
        );
        for c in &g.children {
            let _ = writeln!(out, "  \"{}\" -> \"{}\";", g.id, c);
        }
    }
    for leaf in cluster.leaves.values() {
        let facts: Vec<String> = leaf.facts.iter().map(|f| f.to_string()).collect();
        let _ = writeln!(
            out,
            "  \"{}\" [shape=ellipse, label=\"{}\\np={:.4}\\n{}\"];",
            leaf.id,
            leaf.id,
            leaf.probability,
            facts.join(" ")
        );
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [style=dotted];",
            leaf.group, leaf.id
        );
    }
    for c in cluster.constraints.values() {
        let _ = writeln!(out, "  subgraph \"cluster_{}\" {{", c.id);
        let _ = writeln!(out, "    style=dashed; label=\"{}\";", c.id);
        for g in &c.groups {
            let _ = writeln!(out, "    \"{g}\";");
        }
        let _ = writeln!(out, "  }}");
    }
    out.push_str("}\n");
    out
}

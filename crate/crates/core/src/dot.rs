//! Graphviz rendering of Greechie orthogonality diagrams.
//!
//! Every atom becomes a node and every context becomes a subgraph holding a
//! clique of edges in one color. Output depends only on declaration order.

use std::fmt::Write;

use crate::logic::{validate_logic, Logic, LogicError};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

/// Evenly spaced hues in Graphviz HSV notation.
fn context_color(i: usize, n: usize) -> String {
    let hue = i as f64 / n.max(1) as f64;
    format!("{hue:.3} 0.850 0.750")
}

/// Renders the logic as an undirected DOT graph. Invalid logics are rejected.
pub fn export_greechie_dot(logic: &Logic) -> Result<String, LogicError> {
    let issues = validate_logic(logic);
    if !issues.is_empty() {
        return Err(LogicError::Invalid(issues));
    }
    let mut out = String::new();
    let n = logic.contexts().len();
    // writes into a String cannot fail
    let _ = writeln!(out, "graph greechie {{");
    let _ = writeln!(out, "  graph [layout=neato, overlap=false];");
    let _ = writeln!(out, "  node [shape=circle, style=filled, fillcolor=white];");
    for atom in logic.atoms() {
        let _ = writeln!(out, "  {};", quote(atom.as_str()));
    }
    for (i, ctx) in logic.contexts().iter().enumerate() {
        let _ = writeln!(out, "  subgraph {} {{", quote(&format!("context_{i}")));
        let _ = writeln!(
            out,
            "    edge [color={}, penwidth=2];",
            quote(&context_color(i, n))
        );
        let members = ctx.members();
        for (j, u) in members.iter().enumerate() {
            for v in &members[j + 1..] {
                let _ = writeln!(out, "    {} -- {};", quote(u.as_str()), quote(v.as_str()));
            }
        }
        let _ = writeln!(out, "  }}");
    }
    let _ = writeln!(out, "}}");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_logic, AtomId};

    fn count(dot: &str, prefix: &str) -> usize {
        dot.lines()
            .filter(|l| l.trim_start().starts_with(prefix))
            .count()
    }

    #[test]
    fn single_context() {
        let l = parse_logic(r#"{"atoms":["1","2","3"],"contexts":[["1","2","3"]]}"#).unwrap();
        let dot = export_greechie_dot(&l).unwrap();
        assert_eq!(count(&dot, "subgraph"), 1);
        let nodes = dot
            .lines()
            .filter(|l| l.trim_end().ends_with(';') && !l.contains("--") && !l.contains('['))
            .count();
        assert_eq!(nodes, 3);
        assert_eq!(dot.matches("--").count(), 3);
    }

    #[test]
    fn figure1_counts_and_determinism() {
        let l = Logic::figure1();
        let dot = export_greechie_dot(&l).unwrap();
        assert_eq!(count(&dot, "subgraph"), 26);
        assert_eq!(dot.matches("--").count(), 26 * 3);
        let nodes = dot
            .lines()
            .filter(|l| l.trim_end().ends_with(';') && !l.contains("--") && !l.contains('['))
            .count();
        assert_eq!(nodes, 37);
        assert_eq!(dot, export_greechie_dot(&l).unwrap());
    }

    #[test]
    fn empty_logic_rejected() {
        let l = Logic::new_unvalidated(Some(3), Vec::<AtomId>::new(), vec![]).unwrap();
        assert!(matches!(
            export_greechie_dot(&l),
            Err(LogicError::Invalid(_))
        ));
    }

    #[test]
    fn quoting_escapes() {
        assert_eq!(quote(r#"a"b"#), r#""a\"b""#);
    }
}

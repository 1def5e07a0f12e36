use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::message::{MsgId, Payload, TraceMessage};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForestError {
    #[error("message {id} points at parent {parent}, which is not in the trace")]
    DanglingParent { id: MsgId, parent: MsgId },
    #[error("message {id} appears more than once")]
    DuplicateId { id: MsgId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceNode {
    pub message: TraceMessage,
    /// Set when an `ignore` message targets this node or one of its ancestors.
    pub obsolete: bool,
    pub children: Vec<TraceNode>,
}

impl TraceNode {
    pub fn len(&self) -> usize {
        1 + self.children.iter().map(TraceNode::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Assembles messages into a forest: roots are the messages without a parent
/// and children are ordered by id.
pub fn build_forest(msgs: &[TraceMessage]) -> Result<Vec<TraceNode>, ForestError> {
    let mut sorted: Vec<&TraceMessage> = msgs.iter().collect();
    sorted.sort_by_key(|m| m.id);
    let mut index = HashMap::with_capacity(sorted.len());
    for (i, m) in sorted.iter().enumerate() {
        if index.insert(m.id, i).is_some() {
            return Err(ForestError::DuplicateId { id: m.id });
        }
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); sorted.len()];
    let mut roots = Vec::new();
    for (i, m) in sorted.iter().enumerate() {
        match m.parent {
            None => roots.push(i),
            Some(p) => match index.get(&p) {
                Some(&pi) => children[pi].push(i),
                None => return Err(ForestError::DanglingParent { id: m.id, parent: p }),
            },
        }
    }
    let targets: HashSet<MsgId> = sorted
        .iter()
        .filter_map(|m| match m.payload {
            Payload::Ignore { target } => Some(target),
            _ => None,
        })
        .collect();

    fn build(
        i: usize,
        obsolete: bool,
        sorted: &[&TraceMessage],
        children: &[Vec<usize>],
        targets: &HashSet<MsgId>,
    ) -> TraceNode {
        let msg = sorted[i];
        let obsolete = obsolete || targets.contains(&msg.id);
        TraceNode {
            message: msg.clone(),
            obsolete,
            children: children[i]
                .iter()
                .map(|&c| build(c, obsolete, sorted, children, targets))
                .collect(),
        }
    }

    Ok(roots
        .into_iter()
        .map(|r| build(r, false, &sorted, &children, &targets))
        .collect())
}

/// All messages of a forest, ordered by id.
pub fn flatten(forest: &[TraceNode]) -> Vec<TraceMessage> {
    fn walk(n: &TraceNode, out: &mut Vec<TraceMessage>) {
        out.push(n.message.clone());
        for c in &n.children {
            walk(c, out);
        }
    }
    let mut out = Vec::new();
    for n in forest {
        walk(n, &mut out);
    }
    out.sort_by_key(|m| m.id);
    out
}

/// Keeps the nodes whose text contains `keyword` (case-insensitive), together
/// with their ancestors. An empty keyword keeps everything.
pub fn filter_forest(forest: &[TraceNode], keyword: &str) -> Vec<TraceNode> {
    let needle = keyword.to_lowercase();
    fn keep(n: &TraceNode, needle: &str) -> Option<TraceNode> {
        let children: Vec<TraceNode> = n.children.iter().filter_map(|c| keep(c, needle)).collect();
        if !children.is_empty() || n.message.text().to_lowercase().contains(needle) {
            Some(TraceNode {
                message: n.message.clone(),
                obsolete: n.obsolete,
                children,
            })
        } else {
            None
        }
    }
    forest.iter().filter_map(|n| keep(n, &needle)).collect()
}

/// Indented text rendering, one line per message, obsolete lines marked `~`.
pub fn dump(forest: &[TraceNode]) -> String {
    fn walk(n: &TraceNode, level: usize, out: &mut String) {
        let _ = writeln!(
            out,
            "{:indent$}{}[{}] {}",
            "",
            if n.obsolete { "~" } else { "" },
            n.message.kind(),
            n.message.text(),
            indent = level * 2
        );
        for c in &n.children {
            walk(c, level + 1, out);
        }
    }
    let mut out = String::new();
    for n in forest {
        walk(n, 0, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(id: u64, parent: Option<u64>, text: &str) -> TraceMessage {
        TraceMessage {
            id: MsgId(id),
            parent: parent.map(MsgId),
            depth: 0,
            payload: Payload::Log {
                text: text.to_string(),
            },
        }
    }

    #[test]
    fn builds_and_flattens() {
        let msgs = vec![
            log(3, Some(1), "c"),
            log(1, None, "a"),
            log(2, Some(1), "b"),
            log(4, Some(2), "d"),
            log(5, None, "e"),
        ];
        let f = build_forest(&msgs).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].children.len(), 2);
        assert_eq!(f[0].children[0].message.id, MsgId(2));
        let ids: Vec<u64> = flatten(&f).iter().map(|m| m.id.0).collect();
        assert_eq!(ids, [1, 2, 3, 4, 5]);
        assert_eq!(dump(&f), "[log] a\n  [log] b\n    [log] d\n  [log] c\n[log] e\n");
    }

    #[test]
    fn dangling_parent_is_rejected() {
        let err = build_forest(&[log(2, Some(1), "x")]).unwrap_err();
        assert_eq!(
            err,
            ForestError::DanglingParent {
                id: MsgId(2),
                parent: MsgId(1)
            }
        );
    }

    #[test]
    fn ignore_marks_subtree_obsolete() {
        let msgs = vec![
            log(1, None, "root"),
            log(2, Some(1), "step"),
            log(3, Some(2), "inner"),
            TraceMessage {
                id: MsgId(4),
                parent: Some(MsgId(1)),
                depth: 0,
                payload: Payload::Ignore { target: MsgId(2) },
            },
        ];
        let f = build_forest(&msgs).unwrap();
        assert!(!f[0].obsolete);
        assert!(f[0].children[0].obsolete);
        assert!(f[0].children[0].children[0].obsolete);
        assert!(!f[0].children[1].obsolete);
        assert!(dump(&f).contains("  ~[log] step\n"));
    }

    #[test]
    fn filtering_keeps_ancestors() {
        let msgs = vec![
            log(1, None, "root"),
            log(2, Some(1), "alpha"),
            log(3, Some(2), "Needle here"),
            log(4, Some(1), "beta"),
            log(5, None, "other"),
        ];
        let f = build_forest(&msgs).unwrap();
        let kept = filter_forest(&f, "needle");
        let ids: Vec<u64> = flatten(&kept).iter().map(|m| m.id.0).collect();
        assert_eq!(ids, [1, 2, 3]);
        assert_eq!(flatten(&filter_forest(&f, "")).len(), 5);
        assert!(filter_forest(&f, "absent").is_empty());
    }
}

use std::collections::BTreeMap;

use super::{BlockId, CanvasDocument, Sink};

/// Edges `a -> b` meaning "b's content or output depends on a":
/// attachment source -> host, text slot -> pipeline, and pipeline -> the
/// text block whose prong its output feeds.
pub(crate) fn dependency_edges(doc: &CanvasDocument) -> Vec<(BlockId, BlockId)> {
    let mut edges: Vec<(BlockId, BlockId)> = doc
        .attachments
        .iter()
        .map(|a| (a.source.clone(), a.host.clone()))
        .collect();
    for pipeline in doc.pipelines() {
        for text in &pipeline.text_slots {
            edges.push((text.clone(), pipeline.id.clone()));
        }
        if let Sink::InputProng { target, .. } = &pipeline.output.sink {
            edges.push((pipeline.id.clone(), target.clone()));
        }
    }
    edges
}

/// Returns the nodes of some cycle, in edge order, if the graph has one.
pub(crate) fn find_cycle(edges: &[(BlockId, BlockId)]) -> Option<Vec<BlockId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }

    let mut adjacency: BTreeMap<&BlockId, Vec<&BlockId>> = BTreeMap::new();
    for (from, to) in edges {
        adjacency.entry(from).or_default().push(to);
        adjacency.entry(to).or_default();
    }
    let mut marks: BTreeMap<&BlockId, Mark> = BTreeMap::new();
    for &start in adjacency.keys() {
        if marks.contains_key(start) {
            continue;
        }
        let mut stack: Vec<(&BlockId, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Open);
        while let Some(top) = stack.last_mut() {
            let (node, next_child) = (top.0, top.1);
            let children = &adjacency[node];
            if next_child == children.len() {
                marks.insert(node, Mark::Done);
                stack.pop();
                continue;
            }
            top.1 += 1;
            let child = children[next_child];
            match marks.get(child) {
                Some(Mark::Open) => {
                    let from = stack.iter().position(|(n, _)| *n == child).unwrap_or(0);
                    return Some(stack[from..].iter().map(|(n, _)| (*n).clone()).collect());
                }
                Some(Mark::Done) => {}
                None => {
                    marks.insert(child, Mark::Open);
                    stack.push((child, 0));
                }
            }
        }
    }
    None
}

//! Reference implementations written independently of the core crate.

use std::collections::{BTreeMap, BTreeSet};

pub const INPUT: &str = "[[input]]";
pub const SELECT: &str = "[[select]]";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NaiveSegment {
    Literal(String),
    Input(usize),
    Select(usize),
}

/// Character-at-a-time scan: at each position, try the two tokens; otherwise
/// the character joins the current literal.
pub fn naive_segments(s: &str) -> Vec<NaiveSegment> {
    let chars: Vec<char> = s.chars().collect();
    let input: Vec<char> = INPUT.chars().collect();
    let select: Vec<char> = SELECT.chars().collect();
    let mut out = Vec::new();
    let mut literal = String::new();
    let (mut inputs, mut selects) = (0, 0);
    let mut i = 0;
    while i < chars.len() {
        if chars[i..].starts_with(&input) {
            if !literal.is_empty() {
                out.push(NaiveSegment::Literal(std::mem::take(&mut literal)));
            }
            out.push(NaiveSegment::Input(inputs));
            inputs += 1;
            i += input.len();
        } else if chars[i..].starts_with(&select) {
            if !literal.is_empty() {
                out.push(NaiveSegment::Literal(std::mem::take(&mut literal)));
            }
            out.push(NaiveSegment::Select(selects));
            selects += 1;
            i += select.len();
        } else {
            literal.push(chars[i]);
            i += 1;
        }
    }
    if !literal.is_empty() {
        out.push(NaiveSegment::Literal(literal));
    }
    out
}

/// `(prongs, select holes)` by naive scan.
pub fn naive_counts(s: &str) -> (usize, usize) {
    naive_segments(s).iter().fold((0, 0), |(p, h), seg| match seg {
        NaiveSegment::Input(_) => (p + 1, h),
        NaiveSegment::Select(_) => (p, h + 1),
        NaiveSegment::Literal(_) => (p, h),
    })
}

/// Recursive three-colour DFS. Returns whether the directed graph has a cycle.
pub fn has_cycle<N: Ord + Clone>(edges: &[(N, N)]) -> bool {
    let mut adjacency: BTreeMap<N, Vec<N>> = BTreeMap::new();
    for (a, b) in edges {
        adjacency.entry(a.clone()).or_default().push(b.clone());
        adjacency.entry(b.clone()).or_default();
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Colour {
        White,
        Grey,
        Black,
    }
    fn visit<N: Ord + Clone>(node: &N, adjacency: &BTreeMap<N, Vec<N>>, colour: &mut BTreeMap<N, Colour>) -> bool {
        colour.insert(node.clone(), Colour::Grey);
        for next in &adjacency[node] {
            let state = colour[next];
            match state {
                Colour::Grey => return true,
                Colour::White if visit(next, adjacency, colour) => return true,
                _ => {}
            }
        }
        colour.insert(node.clone(), Colour::Black);
        false
    }
    let mut colour: BTreeMap<N, Colour> = adjacency.keys().map(|k| (k.clone(), Colour::White)).collect();
    let nodes: Vec<N> = adjacency.keys().cloned().collect();
    nodes
        .iter()
        .any(|n| colour[n] == Colour::White && visit(n, &adjacency, &mut colour))
}

/// Whether `cycle` (a node list, closing back on its first element) is a
/// cycle of `edges`.
pub fn is_cycle_of<N: Ord + Clone>(cycle: &[N], edges: &[(N, N)]) -> bool {
    if cycle.is_empty() {
        return false;
    }
    let set: BTreeSet<(N, N)> = edges.iter().cloned().collect();
    (0..cycle.len()).all(|i| set.contains(&(cycle[i].clone(), cycle[(i + 1) % cycle.len()].clone())))
}

/// The mock completion, worked by hand: `(text, truncated)`.
pub fn mock_complete(prompt: &str, temperature: f64, max_tokens: u32) -> (String, bool) {
    // A trailing newline ends the last line rather than starting an empty one.
    let body = prompt.strip_suffix('\n').unwrap_or(prompt);
    let last = match body.rfind('\n') {
        Some(i) => &body[i + 1..],
        None => body,
    };
    let mut words: Vec<String> = vec![format!("MOCK[t={temperature:.1}]")];
    let mut reversed: Vec<&str> = last.split_whitespace().collect();
    reversed.reverse();
    words.extend(reversed.into_iter().map(String::from));
    let truncated = words.len() > max_tokens as usize;
    words.truncate(max_tokens as usize);
    (words.join(" "), truncated)
}

/// Replaces characters `start..end` of `content` with `replacement`.
pub fn splice(content: &str, start: usize, end: usize, replacement: &str) -> String {
    let chars: Vec<char> = content.chars().collect();
    let mut out: String = chars[..start].iter().collect();
    out.push_str(replacement);
    out.extend(&chars[end..]);
    out
}

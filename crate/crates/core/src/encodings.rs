//! Ordered rooted trees and their lattice-path encodings.
//!
//! Vertices are always labelled `0..n` in depth-first (preorder) order, so the
//! `i`-th entry of a degree sequence, a Lukasiewicz path or a height process
//! refers to vertex `i` directly.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Deref;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("not a tree degree sequence: partial sum leaves the excursion at step {step}")]
    NotATreeSequence { step: usize },
    #[error("allocation of length {len} sums to {sum}, expected {expected}")]
    BadSum { len: usize, sum: usize, expected: usize },
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("expected a {expected:?} path, got {got:?}")]
    WrongRole { expected: PathRole, got: PathRole },
}

/// Rooted ordered (planar) tree. Vertex `0` is the root and labels follow the
/// depth-first visiting order; children of a vertex are stored left to right.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OrderedTree {
    /// `children[offsets[v]..offsets[v + 1]]` are the children of `v`.
    offsets: Vec<usize>,
    children: Vec<usize>,
    parent: Vec<usize>,
}

const NO_PARENT: usize = usize::MAX;

impl OrderedTree {
    pub fn single_vertex() -> Self {
        OrderedTree { offsets: vec![0, 0], children: Vec::new(), parent: vec![NO_PARENT] }
    }

    /// Inverse of [`OrderedTree::degree_sequence`]: rebuild the tree whose
    /// preorder child counts are `degrees`.
    pub fn from_degree_sequence(degrees: &[usize]) -> Result<Self, EncodingError> {
        check_lukasiewicz(degrees)?;
        let n = degrees.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for &d in degrees {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut parent = vec![NO_PARENT; n];
        let mut children = vec![0; n - 1];
        let mut fill = offsets.clone();
        // stack of vertices that still expect children
        let mut open: Vec<usize> = Vec::new();
        for (v, &d) in degrees.iter().enumerate() {
            if let Some(&p) = open.last() {
                parent[v] = p;
                children[fill[p]] = v;
                fill[p] += 1;
                if fill[p] == offsets[p + 1] {
                    open.pop();
                }
            }
            if d > 0 {
                open.push(v);
            }
        }
        Ok(OrderedTree { offsets, children, parent })
    }

    /// Build from arbitrary labelled child lists; the result is relabelled in
    /// depth-first order.
    pub fn from_child_lists(lists: &[Vec<usize>], root: usize) -> Result<Self, EncodingError> {
        let n = lists.len();
        if root >= n {
            return Err(EncodingError::InvalidTree(format!("root {root} out of range 0..{n}")));
        }
        let edges: usize = lists.iter().map(Vec::len).sum();
        if edges + 1 != n {
            return Err(EncodingError::InvalidTree(format!("{n} vertices but {edges} edges")));
        }
        let mut seen = vec![false; n];
        let mut degrees = Vec::with_capacity(n);
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(EncodingError::InvalidTree(format!("vertex {v} reached twice")));
            }
            seen[v] = true;
            degrees.push(lists[v].len());
            for &c in lists[v].iter().rev() {
                if c >= n {
                    return Err(EncodingError::InvalidTree(format!("child {c} out of range")));
                }
                stack.push(c);
            }
        }
        if degrees.len() != n {
            return Err(EncodingError::InvalidTree("tree is not connected".into()));
        }
        OrderedTree::from_degree_sequence(&degrees)
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        match self.parent[v] {
            NO_PARENT => None,
            p => Some(p),
        }
    }

    pub fn leaf_count(&self) -> usize {
        (0..self.len()).filter(|&v| self.degree(v) == 0).count()
    }

    /// Preorder child counts `(xi_1, ..., xi_n)`.
    pub fn degree_sequence(&self) -> Allocation {
        Allocation((0..self.len()).map(|v| self.degree(v)).collect())
    }

    /// Number of vertices with exactly `j` children, indexed by `j`.
    pub fn degree_counts(&self) -> Vec<usize> {
        let mut counts = Vec::new();
        for v in 0..self.len() {
            let d = self.degree(v);
            if counts.len() <= d {
                counts.resize(d + 1, 0);
            }
            counts[d] += 1;
        }
        counts
    }

    /// `S(0) = 0`, `S(j) = sum_{i <= j} (xi_i - 1)`; length `n + 1`, ends at -1.
    pub fn lukasiewicz(&self) -> LatticePath {
        let mut values = Vec::with_capacity(self.len() + 1);
        let mut s = 0i64;
        values.push(0);
        for v in 0..self.len() {
            s += self.degree(v) as i64 - 1;
            values.push(s);
        }
        LatticePath { role: PathRole::Lukasiewicz, values }
    }

    /// Depth of vertex `i`, for `i = 0..n`.
    pub fn height(&self) -> LatticePath {
        let mut values = vec![0i64; self.len()];
        // parents precede their children in preorder
        for v in 1..self.len() {
            values[v] = values[self.parent[v]] + 1;
        }
        LatticePath { role: PathRole::Height, values }
    }

    /// Maximum depth of any vertex.
    pub fn tree_height(&self) -> usize {
        self.height().values.iter().copied().max().unwrap_or(0) as usize
    }

    /// Depth of the `i`-th vertex of the depth-first walk, `i = 0..2n-1`.
    pub fn contour(&self) -> LatticePath {
        let mut values = Vec::with_capacity(2 * self.len() - 1);
        self.walk(|_, depth| values.push(depth as i64));
        LatticePath { role: PathRole::Contour, values }
    }

    /// `m(l)`: the first time the depth-first walk reaches vertex `l`.
    pub fn m_times(&self) -> Vec<usize> {
        let mut first = vec![usize::MAX; self.len()];
        let mut time = 0;
        self.walk(|v, _| {
            if first[v] == usize::MAX {
                first[v] = time;
            }
            time += 1;
        });
        first
    }

    /// Depth-first walk `f_0, ..., f_{2n-2}`: each step moves to the leftmost
    /// unvisited child or back to the parent. Iterative, so depth is not bounded
    /// by the call stack.
    fn walk(&self, mut visit: impl FnMut(usize, usize)) {
        // (vertex, index of the next child to explore)
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        visit(0, 0);
        while let Some(top) = stack.last_mut() {
            let (v, next) = *top;
            if next < self.degree(v) {
                top.1 += 1;
                let child = self.children(v)[next];
                stack.push((child, 0));
                visit(child, stack.len() - 1);
            } else {
                stack.pop();
                if let Some(&(p, _)) = stack.last() {
                    visit(p, stack.len() - 1);
                }
            }
        }
    }

    /// Balanced-parenthesis string: `(` at the first visit of a vertex, `)` at
    /// the last.
    pub fn to_parens(&self) -> String {
        let mut out = String::with_capacity(2 * self.len());
        let mut remaining: Vec<usize> = Vec::new();
        for v in 0..self.len() {
            out.push('(');
            let d = self.degree(v);
            if d > 0 {
                remaining.push(d);
                continue;
            }
            out.push(')');
            // close every ancestor whose last child just finished
            while let Some(r) = remaining.last_mut() {
                *r -= 1;
                if *r > 0 {
                    break;
                }
                remaining.pop();
                out.push(')');
            }
        }
        out
    }

    pub fn from_parens(text: &str) -> Result<Self, EncodingError> {
        let text = text.trim();
        let mut degrees: Vec<usize> = Vec::new();
        let mut open: Vec<usize> = Vec::new();
        let mut closed_root = false;
        for (pos, ch) in text.chars().enumerate() {
            if closed_root {
                return Err(EncodingError::Parse(format!("trailing input at {pos}")));
            }
            match ch {
                '(' => {
                    if let Some(&p) = open.last() {
                        degrees[p] += 1;
                    }
                    open.push(degrees.len());
                    degrees.push(0);
                }
                ')' => {
                    open.pop().ok_or_else(|| {
                        EncodingError::Parse(format!("unbalanced ')' at {pos}"))
                    })?;
                    closed_root = open.is_empty();
                }
                c => return Err(EncodingError::Parse(format!("unexpected {c:?} at {pos}"))),
            }
        }
        if !closed_root {
            return Err(EncodingError::Parse("unbalanced or empty parenthesis string".into()));
        }
        OrderedTree::from_degree_sequence(&degrees)
    }

    /// Child-count line, e.g. `3 0 1 0 2 1 0 0`.
    pub fn to_counts_line(&self) -> String {
        let parts: Vec<String> = (0..self.len()).map(|v| self.degree(v).to_string()).collect();
        parts.join(" ")
    }

    pub fn from_counts_line(text: &str) -> Result<Self, EncodingError> {
        let degrees = text
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| EncodingError::Parse(format!("{t:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        OrderedTree::from_degree_sequence(&degrees)
    }

    /// Parse either text format, detected from the first character.
    pub fn parse(text: &str) -> Result<Self, EncodingError> {
        if text.trim_start().starts_with('(') {
            OrderedTree::from_parens(text)
        } else {
            OrderedTree::from_counts_line(text)
        }
    }
}

impl fmt::Debug for OrderedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OrderedTree({})", self.to_counts_line())
    }
}

impl fmt::Display for OrderedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_parens())
    }
}

/// Returns the first step at which the Lukasiewicz walk of `degrees` leaves
/// the excursion shape, if any.
fn check_lukasiewicz(degrees: &[usize]) -> Result<(), EncodingError> {
    let n = degrees.len();
    if n == 0 {
        return Err(EncodingError::InvalidTree("empty degree sequence".into()));
    }
    let mut s = 0i64;
    for (j, &d) in degrees.iter().enumerate() {
        s += d as i64 - 1;
        let last = j + 1 == n;
        if (!last && s < 0) || (last && s != -1) {
            return Err(EncodingError::NotATreeSequence { step: j + 1 });
        }
    }
    Ok(())
}

/// `n` non-negative box occupancies summing to `n - 1` (balls in boxes).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation(Vec<usize>);

impl Allocation {
    pub fn new(values: Vec<usize>) -> Result<Self, EncodingError> {
        let sum: usize = values.iter().sum();
        if values.is_empty() || sum + 1 != values.len() {
            return Err(EncodingError::BadSum {
                len: values.len(),
                sum,
                expected: values.len().saturating_sub(1),
            });
        }
        Ok(Allocation(values))
    }

    /// Number of empty boxes (leaves, when this is a degree sequence).
    pub fn zeros(&self) -> usize {
        self.0.iter().filter(|&&y| y == 0).count()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for Allocation {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Rotate an allocation to the unique cyclic shift that is a tree degree
/// sequence.
///
/// With `W_j = sum_{i <= j} (y_i - 1)`, the rotation starts right after the
/// first index attaining `min W`. Returns the rotated sequence and the start
/// index in `0..n`; an input that is already a degree sequence has its first
/// minimum at `n` and is returned with index `0`.
pub fn cyclic_shift(values: &[usize]) -> Result<(Allocation, usize), EncodingError> {
    let n = values.len();
    let sum: usize = values.iter().sum();
    if n == 0 || sum + 1 != n {
        return Err(EncodingError::BadSum { len: n, sum, expected: n.saturating_sub(1) });
    }
    let start = first_minimum(values) % n;
    let mut rotated = Vec::with_capacity(n);
    rotated.extend_from_slice(&values[start..]);
    rotated.extend_from_slice(&values[..start]);
    Ok((Allocation(rotated), start))
}

/// In-place version of [`cyclic_shift`] for the sampler's hot path.
pub(crate) fn cyclic_shift_in_place(values: &mut [usize]) -> usize {
    let n = values.len();
    let start = first_minimum(values) % n;
    values.rotate_left(start);
    start
}

/// First `j` in `0..=n` where the bridge `W` attains its minimum.
fn first_minimum(values: &[usize]) -> usize {
    let (mut w, mut best, mut at) = (0i64, 0i64, 0usize);
    for (j, &y) in values.iter().enumerate() {
        w += y as i64 - 1;
        if w < best {
            best = w;
            at = j + 1;
        }
    }
    at
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathRole {
    Lukasiewicz,
    Contour,
    Height,
    Bridge,
}

/// Integer-valued path; linear interpolation between integer times is left
/// to consumers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath {
    pub role: PathRole,
    pub values: Vec<i64>,
}

impl LatticePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> i64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// CSV with columns `index,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{v}\n"));
        }
        out
    }

    /// Height process recovered from a Lukasiewicz path:
    /// `H(l) = #{ 0 <= i < l : S(i) = min_{i <= k <= l} S(k) }`,
    /// the number of weak right minima of `S` on `[0, l]` other than `l`.
    pub fn height_from_lukasiewicz(&self) -> Result<LatticePath, EncodingError> {
        if self.role != PathRole::Lukasiewicz {
            return Err(EncodingError::WrongRole {
                expected: PathRole::Lukasiewicz,
                got: self.role,
            });
        }
        let n = self.values.len().saturating_sub(1);
        let mut heights = Vec::with_capacity(n);
        // indices whose value is <= every later value seen so far
        let mut minima: Vec<i64> = Vec::new();
        for &s in &self.values[..n] {
            while minima.last().is_some_and(|&m| m > s) {
                minima.pop();
            }
            heights.push(minima.len() as i64);
            minima.push(s);
        }
        Ok(LatticePath { role: PathRole::Height, values: heights })
    }
}

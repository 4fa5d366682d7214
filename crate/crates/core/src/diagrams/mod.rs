//! k-diagrams: multigraphs recording how an even tuple of non-backtracking
//! paths covers its edges, together with the polytope integrals built on them.

mod polytope;
mod transforms;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use polytope::{integral_i, IntegralEstimate, IntegrationMethod, PolytopeProblem};
pub use transforms::{phi_sharp, psi_from_sharp, psi_sharp, sharp_from_psi, SubsetTable};

/// One edge of a diagram.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramEdge {
    /// Traversal count by each path, `cp[p - 1]` for path `p`.
    pub cp: Vec<u8>,
    /// Indices (1-based) of the two paths traversing the edge, `p_minus <= p_plus`.
    pub p_minus: usize,
    pub p_plus: usize,
    /// The two traversals run in opposite directions.
    pub orientable: bool,
    /// Endpoints as vertex indices in `0..2s`, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ends: Option<[usize; 2]>,
    /// Length of the chain in a representative tuple, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<u32>,
}

/// A k-diagram with `2s` vertices and `3s - k` edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramSpec {
    #[serde(default)]
    pub name: String,
    pub k: usize,
    pub s: usize,
    pub edges: Vec<DiagramEdge>,
    pub orientable: bool,
}

impl DiagramSpec {
    pub fn vertex_count(&self) -> usize {
        2 * self.s
    }

    /// Checks every structural invariant and names the first violation.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidDiagram {
                name: self.name.clone(),
                reason,
            })
        };
        if self.k == 0 {
            return fail("k must be at least 1".into());
        }
        if self.s < self.k {
            return fail(format!("s = {} must be at least k = {}", self.s, self.k));
        }
        if self.edges.len() != 3 * self.s - self.k {
            return fail(format!(
                "edge count {} differs from 3s - k = {}",
                self.edges.len(),
                3 * self.s - self.k
            ));
        }
        let mut used = vec![false; self.k];
        for (i, e) in self.edges.iter().enumerate() {
            if e.cp.len() != self.k {
                return fail(format!("edge {i}: cp has {} entries, expected {}", e.cp.len(), self.k));
            }
            let total: u32 = e.cp.iter().map(|&c| c as u32).sum();
            if total != 2 {
                return fail(format!("edge {i}: traversal counts sum to {total}, expected 2"));
            }
            if e.p_minus == 0 || e.p_plus > self.k || e.p_minus > e.p_plus {
                return fail(format!(
                    "edge {i}: path indices p- = {}, p+ = {} out of order or range",
                    e.p_minus, e.p_plus
                ));
            }
            for (p, &c) in e.cp.iter().enumerate() {
                let q = p + 1;
                if c > 0 && q != e.p_minus && q != e.p_plus {
                    return fail(format!("edge {i}: c_{q} = {c} but path {q} is neither p- nor p+"));
                }
                if c > 0 {
                    used[p] = true;
                }
            }
            let expected = if e.p_minus == e.p_plus { (2, 2) } else { (1, 1) };
            if (e.cp[e.p_minus - 1], e.cp[e.p_plus - 1]) != expected {
                return fail(format!("edge {i}: counts disagree with p- = {}, p+ = {}", e.p_minus, e.p_plus));
            }
            if let Some([a, b]) = e.ends {
                if a >= 2 * self.s || b >= 2 * self.s {
                    return fail(format!("edge {i}: endpoint outside 0..{}", 2 * self.s));
                }
            }
            if e.length == Some(0) {
                return fail(format!("edge {i}: length must be positive"));
            }
        }
        if let Some(p) = used.iter().position(|u| !u) {
            return fail(format!("path {} traverses no edge", p + 1));
        }
        let all = self.edges.iter().all(|e| e.orientable);
        if all != self.orientable {
            return fail(format!(
                "diagram orientable flag {} disagrees with its edges ({})",
                self.orientable, all
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: DiagramSpec = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut d = Self::from_json(&std::fs::read_to_string(path)?)?;
        if d.name.is_empty() {
            d.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(d)
    }

    /// Reduces an even tuple of closed paths to its diagram. Vertices of the
    /// diagram are the vertices of degree other than two together with the
    /// starting points; edges are the chains between them, numbered in order
    /// of first traversal.
    pub fn from_paths(name: &str, paths: &[Vec<usize>]) -> Result<Self> {
        let fail = |reason: String| Error::InvalidDiagram {
            name: name.to_string(),
            reason,
        };
        if paths.is_empty() {
            return Err(fail("no paths".into()));
        }
        let mut nbrs: HashMap<usize, Vec<usize>> = HashMap::new();
        for (p, path) in paths.iter().enumerate() {
            if path.len() < 3 || path.first() != path.last() {
                return Err(fail(format!("path {} is not a closed path of positive length", p + 1)));
            }
            for w in path.windows(2) {
                if w[0] == w[1] {
                    return Err(fail(format!("path {} contains a loop at vertex {}", p + 1, w[0])));
                }
                for (a, b) in [(w[0], w[1]), (w[1], w[0])] {
                    let v = nbrs.entry(a).or_default();
                    if !v.contains(&b) {
                        v.push(b);
                    }
                }
            }
        }
        let is_key = |v: usize| nbrs[&v].len() != 2 || paths.iter().any(|p| p[0] == v);
        let mut key_index: HashMap<usize, usize> = HashMap::new();
        let mut chains: Vec<Vec<usize>> = Vec::new();
        let mut chain_of: HashMap<Vec<usize>, usize> = HashMap::new();
        // traversals[chain] = list of (path, forward)
        let mut traversals: Vec<Vec<(usize, bool)>> = Vec::new();
        for (p, path) in paths.iter().enumerate() {
            let mut start = 0;
            for i in 1..path.len() {
                if !is_key(path[i]) {
                    continue;
                }
                let seg: Vec<usize> = path[start..=i].to_vec();
                for &v in [seg[0], seg[seg.len() - 1]].iter() {
                    let n = key_index.len();
                    key_index.entry(v).or_insert(n);
                }
                let rev: Vec<usize> = seg.iter().rev().copied().collect();
                let (canon, forward) = if seg <= rev { (seg, true) } else { (rev, false) };
                let id = match chain_of.get(&canon) {
                    Some(&id) => id,
                    None => {
                        let id = chains.len();
                        chain_of.insert(canon.clone(), id);
                        chains.push(canon);
                        traversals.push(Vec::new());
                        id
                    }
                };
                traversals[id].push((p, forward));
                start = i;
            }
        }
        let k = paths.len();
        if key_index.len() % 2 == 1 {
            return Err(fail(format!("odd number {} of diagram vertices", key_index.len())));
        }
        let s = key_index.len() / 2;
        let mut edges = Vec::with_capacity(chains.len());
        for (chain, tr) in chains.iter().zip(&traversals) {
            if tr.len() != 2 {
                return Err(fail(format!(
                    "chain {:?} is traversed {} times; every edge of a diagram is traversed twice",
                    chain,
                    tr.len()
                )));
            }
            let mut cp = vec![0u8; k];
            for &(p, _) in tr {
                cp[p] += 1;
            }
            let (p1, p2) = (tr[0].0.min(tr[1].0) + 1, tr[0].0.max(tr[1].0) + 1);
            edges.push(DiagramEdge {
                cp,
                p_minus: p1,
                p_plus: p2,
                orientable: tr[0].1 != tr[1].1,
                ends: Some([key_index[&chain[0]], key_index[&chain[chain.len() - 1]]]),
                length: Some((chain.len() - 1) as u32),
            });
        }
        let orientable = edges.iter().all(|e| e.orientable);
        let d = DiagramSpec {
            name: name.to_string(),
            k,
            s,
            edges,
            orientable,
        };
        d.validate()?;
        Ok(d)
    }

    /// Edge data without endpoint labels or lengths, sorted, for comparing
    /// diagrams up to relabelling of edges.
    pub fn edge_profile(&self) -> Vec<(Vec<u8>, usize, usize, bool)> {
        let mut v: Vec<_> = self
            .edges
            .iter()
            .map(|e| (e.cp.clone(), e.p_minus, e.p_plus, e.orientable))
            .collect();
        v.sort();
        v
    }
}

/// The diagrams shipped with the crate, keyed by file stem.
pub fn builtin_diagrams() -> Vec<DiagramSpec> {
    const FILES: [(&str, &str); 6] = [
        ("fig1-left", include_str!("../../data/diagrams/fig1-left.json")),
        ("fig1-centre", include_str!("../../data/diagrams/fig1-centre.json")),
        ("fig1-right", include_str!("../../data/diagrams/fig1-right.json")),
        ("fig2-left", include_str!("../../data/diagrams/fig2-left.json")),
        ("fig2-centre", include_str!("../../data/diagrams/fig2-centre.json")),
        ("fig2-right", include_str!("../../data/diagrams/fig2-right.json")),
    ];
    FILES
        .iter()
        .map(|(name, text)| {
            let mut d = DiagramSpec::from_json(text).expect("shipped diagram is valid");
            if d.name.is_empty() {
                d.name = name.to_string();
            }
            d
        })
        .collect()
}

pub fn builtin_diagram(name: &str) -> Option<DiagramSpec> {
    builtin_diagrams().into_iter().find(|d| d.name == name)
}

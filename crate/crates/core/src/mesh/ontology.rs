//! Molecular-function ontology DAG, annotation up-propagation and trimming
//! to a set of higher-level terms.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::MeshError;

/// Conventional root of the molecular-function aspect.
pub const MF_ROOT: &str = "GO:0003674";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyGraph {
    root: String,
    parents: BTreeMap<String, BTreeSet<String>>,
    /// Shortest-path distance from the root, reachable terms only.
    depth: BTreeMap<String, usize>,
    /// Reflexive ancestor closure, reachable terms only.
    ancestors: BTreeMap<String, BTreeSet<String>>,
}

impl OntologyGraph {
    /// Builds the graph from `(child, parent)` edges.
    ///
    /// Without an explicit root the unique parentless term is used. Terms
    /// that cannot reach the root are kept out of depth and ancestor tables
    /// with a warning.
    pub fn from_edges(edges: &[(String, String)], root: Option<&str>) -> Result<Self, MeshError> {
        let mut parents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut children: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (child, parent) in edges {
            if child == parent {
                return Err(MeshError::Cycle(child.clone()));
            }
            parents.entry(child.clone()).or_default().insert(parent.clone());
            parents.entry(parent.clone()).or_default();
            children.entry(parent.clone()).or_default().insert(child.clone());
        }
        let root = match root {
            Some(r) => r.to_string(),
            None => {
                let roots: Vec<&String> = parents.iter().filter(|(_, p)| p.is_empty()).map(|(t, _)| t).collect();
                match roots.as_slice() {
                    [only] => (*only).clone(),
                    [] => return Err(MeshError::NoRoot),
                    many => return Err(MeshError::AmbiguousRoot(many.iter().map(|s| s.to_string()).collect())),
                }
            }
        };
        if !parents.contains_key(&root) {
            parents.insert(root.clone(), BTreeSet::new());
        }

        // topological order, parents before children
        let mut pending: BTreeMap<&String, usize> = parents.iter().map(|(t, p)| (t, p.len())).collect();
        let mut queue: VecDeque<&String> = pending.iter().filter(|(_, &n)| n == 0).map(|(t, _)| *t).collect();
        let mut order = Vec::with_capacity(parents.len());
        while let Some(t) = queue.pop_front() {
            order.push(t.clone());
            for c in children.get(t).into_iter().flatten() {
                let n = pending.get_mut(c).expect("child registered");
                *n -= 1;
                if *n == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() != parents.len() {
            let stuck = pending.iter().find(|(_, &n)| n > 0).map(|(t, _)| (*t).clone()).unwrap_or_default();
            return Err(MeshError::Cycle(stuck));
        }

        let mut depth = BTreeMap::new();
        depth.insert(root.clone(), 0usize);
        let mut bfs = VecDeque::from([root.clone()]);
        while let Some(t) = bfs.pop_front() {
            let d = depth[&t];
            for c in children.get(&t).into_iter().flatten() {
                if !depth.contains_key(c) {
                    depth.insert(c.clone(), d + 1);
                    bfs.push_back(c.clone());
                }
            }
        }
        let unreachable = parents.len() - depth.len();
        if unreachable > 0 {
            log::warn!("{unreachable} ontology terms do not reach root {root} and are ignored");
        }

        let mut ancestors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for t in &order {
            if !depth.contains_key(t) {
                continue;
            }
            let mut set = BTreeSet::from([t.clone()]);
            for p in &parents[t] {
                if let Some(up) = ancestors.get(p) {
                    set.extend(up.iter().cloned());
                }
            }
            ancestors.insert(t.clone(), set);
        }
        Ok(OntologyGraph { root, parents, depth, ancestors })
    }

    /// Reads `child_id\tparent_id` rows; a `child_id` header line is skipped.
    pub fn read_edges_tsv<R: BufRead>(reader: R) -> Result<Vec<(String, String)>, MeshError> {
        let mut edges = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("child_id")) {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 2 || cols.iter().any(|c| c.is_empty()) {
                return Err(MeshError::Parse { what: "ontology edges", line: i + 1 });
            }
            edges.push((cols[0].to_string(), cols[1].to_string()));
        }
        Ok(edges)
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn contains(&self, term: &str) -> bool {
        self.parents.contains_key(term)
    }

    pub fn depth(&self, term: &str) -> Option<usize> {
        self.depth.get(term).copied()
    }

    /// The term and everything above it; `None` for unknown or unreachable terms.
    pub fn ancestors(&self, term: &str) -> Option<&BTreeSet<String>> {
        self.ancestors.get(term)
    }

    pub fn terms(&self) -> impl Iterator<Item = &String> {
        self.parents.keys()
    }
}

/// Trimmed higher-level terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSelection {
    pub selected_terms: BTreeSet<String>,
    pub max_depth: usize,
    pub min_proteins: usize,
    /// Proteins annotated with each selected term after propagation.
    pub protein_counts: BTreeMap<String, usize>,
}

/// Propagates every protein's terms to their ancestors and keeps the
/// non-root terms no deeper than `max_depth` that cover at least
/// `min_proteins` proteins.
pub fn trim_ontology(
    graph: &OntologyGraph,
    annotations: &BTreeMap<String, BTreeSet<String>>,
    max_depth: usize,
    min_proteins: usize,
) -> TermSelection {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut unknown = BTreeSet::new();
    for terms in annotations.values() {
        let mut covered: BTreeSet<&str> = BTreeSet::new();
        for t in terms {
            match graph.ancestors(t) {
                Some(up) => covered.extend(up.iter().map(String::as_str)),
                None => {
                    unknown.insert(t.as_str());
                }
            }
        }
        for t in covered {
            *counts.entry(t).or_default() += 1;
        }
    }
    if !unknown.is_empty() {
        log::warn!("{} annotation terms are not in the ontology and were skipped", unknown.len());
    }
    let mut selected_terms = BTreeSet::new();
    let mut protein_counts = BTreeMap::new();
    for (term, &count) in &counts {
        let depth = graph.depth(term).expect("counted terms are reachable");
        if depth >= 1 && depth <= max_depth && count >= min_proteins {
            selected_terms.insert(term.to_string());
            protein_counts.insert(term.to_string(), count);
        }
    }
    if selected_terms.is_empty() {
        log::warn!("ontology trimming selected no terms (max_depth={max_depth}, min_proteins={min_proteins})");
    }
    TermSelection { selected_terms, max_depth, min_proteins, protein_counts }
}

/// Maps raw annotation terms to the selected terms above them. Stored with
/// a trained mesh so prediction does not need the ontology.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermMapper {
    map: BTreeMap<String, BTreeSet<String>>,
}

impl TermMapper {
    pub fn new(graph: &OntologyGraph, selection: &TermSelection) -> Self {
        let map = graph
            .ancestors
            .iter()
            .filter_map(|(t, up)| {
                let hit: BTreeSet<String> = up.intersection(&selection.selected_terms).cloned().collect();
                (!hit.is_empty()).then(|| (t.clone(), hit))
            })
            .collect();
        TermMapper { map }
    }

    /// Selected terms implied by `terms`.
    pub fn map_terms<'a>(&self, terms: impl IntoIterator<Item = &'a String>) -> BTreeSet<String> {
        terms.into_iter().filter_map(|t| self.map.get(t)).flatten().cloned().collect()
    }

    pub fn selected(&self) -> BTreeSet<String> {
        self.map.values().flatten().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn ann(rows: &[(&str, &[&str])]) -> BTreeMap<String, BTreeSet<String>> {
        rows.iter().map(|(p, ts)| (p.to_string(), ts.iter().map(|t| t.to_string()).collect())).collect()
    }

    #[test]
    fn single_chain_propagation() {
        let g = OntologyGraph::from_edges(&e(&[("A", "root"), ("B", "A")]), None).unwrap();
        assert_eq!(g.root(), "root");
        let proteins: Vec<(String, Vec<&str>)> = (0..10).map(|i| (format!("p{i}"), vec!["B"])).collect();
        let a: BTreeMap<String, BTreeSet<String>> =
            proteins.iter().map(|(p, t)| (p.clone(), t.iter().map(|s| s.to_string()).collect())).collect();
        let sel = trim_ontology(&g, &a, 1, 5);
        assert_eq!(sel.selected_terms, BTreeSet::from(["A".to_string()]));
        assert_eq!(sel.protein_counts["A"], 10);
    }

    #[test]
    fn threshold_above_corpus_selects_nothing() {
        let g = OntologyGraph::from_edges(&e(&[("A", "root")]), None).unwrap();
        let sel = trim_ontology(&g, &ann(&[("p", &["A"])]), 3, 2);
        assert!(sel.selected_terms.is_empty());
    }

    #[test]
    fn depth_is_shortest_path() {
        // D reachable via root->A->B->D and root->D
        let g = OntologyGraph::from_edges(&e(&[("A", "root"), ("B", "A"), ("D", "B"), ("D", "root")]), None).unwrap();
        assert_eq!(g.depth("D"), Some(1));
        assert_eq!(g.depth("B"), Some(2));
        let up = g.ancestors("D").unwrap();
        assert_eq!(up.len(), 4);
    }

    #[test]
    fn rejects_cycles_and_root_ambiguity() {
        assert!(matches!(
            OntologyGraph::from_edges(&e(&[("A", "root"), ("B", "A"), ("A", "B")]), None),
            Err(MeshError::Cycle(_))
        ));
        assert!(matches!(
            OntologyGraph::from_edges(&e(&[("A", "r1"), ("B", "r2")]), None),
            Err(MeshError::AmbiguousRoot(_))
        ));
        let g = OntologyGraph::from_edges(&e(&[("A", "r1"), ("B", "r2")]), Some("r1")).unwrap();
        assert_eq!(g.depth("B"), None);
        assert!(g.ancestors("B").is_none());
    }

    #[test]
    fn mapper_lifts_to_selected_ancestors() {
        let g = OntologyGraph::from_edges(&e(&[("A", "root"), ("B", "A"), ("C", "root"), ("D", "C")]), None).unwrap();
        let a = ann(&[("p1", &["B"]), ("p2", &["B"]), ("p3", &["D"])]);
        let sel = trim_ontology(&g, &a, 1, 2);
        assert_eq!(sel.selected_terms, BTreeSet::from(["A".to_string()]));
        let m = TermMapper::new(&g, &sel);
        assert_eq!(m.map_terms(&a["p1"]), BTreeSet::from(["A".to_string()]));
        assert!(m.map_terms(&a["p3"]).is_empty());
        assert!(m.map_terms(&BTreeSet::from(["unknown".to_string()])).is_empty());
    }

    #[test]
    fn edge_tsv() {
        let edges = OntologyGraph::read_edges_tsv("child_id\tparent_id\nA\troot\n".as_bytes()).unwrap();
        assert_eq!(edges, e(&[("A", "root")]));
        assert!(OntologyGraph::read_edges_tsv("A\n".as_bytes()).is_err());
    }
}

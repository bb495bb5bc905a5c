//! Direct GO annotations plus UniRef-style cluster maps used to borrow
//! annotations for proteins that have none.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::seq::IdentityLevel;

use super::ontology::TermMapper;
use super::MeshError;

#[derive(Debug, Default)]
pub struct AnnotationStore {
    pub direct: BTreeMap<String, BTreeSet<String>>,
    /// Per identity level: cluster id to member proteins.
    pub cluster_members: BTreeMap<IdentityLevel, BTreeMap<String, BTreeSet<String>>>,
    /// Per protein: identity level to cluster id.
    pub protein_clusters: BTreeMap<String, BTreeMap<IdentityLevel, String>>,
    homology_lookups: AtomicUsize,
}

impl AnnotationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn annotate(&mut self, protein: &str, term: &str) {
        self.direct.entry(protein.to_string()).or_default().insert(term.to_string());
    }

    pub fn add_cluster_member(&mut self, level: IdentityLevel, cluster: &str, protein: &str) {
        self.cluster_members
            .entry(level)
            .or_default()
            .entry(cluster.to_string())
            .or_default()
            .insert(protein.to_string());
        self.protein_clusters.entry(protein.to_string()).or_default().insert(level, cluster.to_string());
    }

    /// `protein_id\tgo_id` rows; a `protein_id` header is skipped.
    pub fn load_annotations<R: BufRead>(&mut self, reader: R) -> Result<usize, MeshError> {
        let mut n = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("protein_id")) {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 2 || cols.iter().any(|c| c.is_empty()) {
                return Err(MeshError::Parse { what: "annotations", line: i + 1 });
            }
            self.annotate(cols[0], cols[1]);
            n += 1;
        }
        Ok(n)
    }

    /// `level\tcluster_id\tprotein_id` rows, level in {100, 90, 50}.
    pub fn load_clusters<R: BufRead>(&mut self, reader: R) -> Result<usize, MeshError> {
        let mut n = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("level")) {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                return Err(MeshError::Parse { what: "cluster map", line: i + 1 });
            }
            let level = cols[0]
                .trim_start_matches("UniRef")
                .parse()
                .ok()
                .and_then(IdentityLevel::from_percent)
                .ok_or(MeshError::Parse { what: "cluster level", line: i + 1 })?;
            self.add_cluster_member(level, cols[1], cols[2]);
            n += 1;
        }
        Ok(n)
    }

    /// Times the cluster chain has been consulted.
    pub fn homology_lookups(&self) -> usize {
        self.homology_lookups.load(Ordering::Relaxed)
    }

    /// Selected terms for `protein`: its own annotations when they map into
    /// the selection, otherwise the first non-empty union over its cluster
    /// siblings at 100%, 90% and then 50% identity. Empty means the generic
    /// classifier applies.
    pub fn resolve(&self, protein: &str, mapper: &TermMapper) -> BTreeSet<String> {
        if let Some(own) = self.direct.get(protein) {
            let mapped = mapper.map_terms(own);
            if !mapped.is_empty() {
                return mapped;
            }
        }
        let Some(clusters) = self.protein_clusters.get(protein) else {
            return BTreeSet::new();
        };
        for level in IdentityLevel::CHAIN {
            self.homology_lookups.fetch_add(1, Ordering::Relaxed);
            let Some(cluster) = clusters.get(&level) else { continue };
            let members = &self.cluster_members[&level][cluster];
            let borrowed: BTreeSet<String> = members
                .iter()
                .filter(|m| m.as_str() != protein)
                .filter_map(|m| self.direct.get(m))
                .flat_map(|terms| mapper.map_terms(terms))
                .collect();
            if !borrowed.is_empty() {
                return borrowed;
            }
        }
        BTreeSet::new()
    }
}

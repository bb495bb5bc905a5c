//! File plumbing shared by the commands: input readers, an output guard
//! that removes partial results on failure, and run manifests.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use ppimesh::dataset::{load_pairs, read_dataset_tsv, InteractionPair, PairSource};
use ppimesh::features::{read_feature_tsv, FeatureRow};
use ppimesh::mesh::{AnnotationStore, OntologyGraph};
use ppimesh::seq::{parse_fasta, ProteinRecord};

use crate::config::RunConfig;
use crate::UsageError;

pub fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

pub fn read_fasta(path: &Path) -> anyhow::Result<Vec<ProteinRecord>> {
    parse_fasta(open(path)?).with_context(|| format!("reading {}", path.display()))
}

/// Reads either a labelled dataset (`id_a id_b label source`) or a bare
/// two-column pair list, which gets `default_label`.
pub fn read_pairs(path: &Path, default_label: u8) -> anyhow::Result<Vec<InteractionPair>> {
    let mut reader = open(path)?;
    let mut text = String::new();
    std::io::Read::read_to_string(&mut reader, &mut text).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().find(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let columns = first.map_or(2, |l| l.split('\t').count());
    let pairs = if columns >= 4 {
        read_dataset_tsv(text.as_bytes())
    } else {
        let source = if default_label == 1 { PairSource::Curated } else { PairSource::KnownNegative };
        load_pairs(text.as_bytes(), default_label, source, false).map(|l| l.pairs)
    };
    pairs.with_context(|| format!("reading {}", path.display()))
}

pub fn read_features(path: &Path) -> anyhow::Result<Vec<FeatureRow>> {
    read_feature_tsv(open(path)?).with_context(|| format!("reading {}", path.display()))
}

pub fn read_ontology(path: &Path, root: Option<&str>) -> anyhow::Result<OntologyGraph> {
    let edges = OntologyGraph::read_edges_tsv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    OntologyGraph::from_edges(&edges, root).with_context(|| format!("building ontology from {}", path.display()))
}

pub fn read_annotations(annotations: Option<&Path>, clusters: Option<&Path>) -> anyhow::Result<AnnotationStore> {
    let mut store = AnnotationStore::new();
    if let Some(p) = annotations {
        store.load_annotations(open(p)?).with_context(|| format!("reading {}", p.display()))?;
    }
    if let Some(p) = clusters {
        store.load_clusters(open(p)?).with_context(|| format!("reading {}", p.display()))?;
    }
    Ok(store)
}

/// Fails, naming every id, when `pairs` mention proteins not in `records`.
pub fn check_ids(pairs: &[InteractionPair], records: &[ProteinRecord]) -> anyhow::Result<()> {
    let known: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let missing: BTreeSet<&str> =
        pairs.iter().flat_map(|p| [p.key.a.as_str(), p.key.b.as_str()]).filter(|id| !known.contains(id)).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        let list: Vec<&str> = missing.into_iter().collect();
        Err(ppimesh::dataset::DatasetError::MissingProteins(list.iter().map(|s| s.to_string()).collect()))
            .with_context(|| format!("{} protein ids have no sequence: {}", list.len(), list.join(", ")))
    }
}

/// Records (only) the proteins referenced by `pairs`, in id order.
pub fn referenced(records: &[ProteinRecord], pairs: &[InteractionPair]) -> Vec<ProteinRecord> {
    let wanted: HashSet<&str> = pairs.iter().flat_map(|p| [p.key.a.as_str(), p.key.b.as_str()]).collect();
    let mut out: Vec<ProteinRecord> = records.iter().filter(|r| wanted.contains(r.id.as_str())).cloned().collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// Tracks everything a command creates and deletes it again unless the
/// command commits.
#[derive(Debug, Default)]
pub struct Outputs {
    created: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, path: &Path) -> anyhow::Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            if !parent.exists() {
                fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
                self.created.push(parent.to_path_buf());
            }
        }
        Ok(())
    }

    pub fn write_file<F>(&mut self, path: &Path, body: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> anyhow::Result<()>,
    {
        self.prepare(path)?;
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.created.push(path.to_path_buf());
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    /// Claims an output directory, which must be absent or empty.
    pub fn claim_dir(&mut self, path: &Path) -> anyhow::Result<()> {
        if path.exists() {
            let mut entries = fs::read_dir(path).with_context(|| format!("reading {}", path.display()))?;
            if entries.next().is_some() {
                return Err(UsageError(format!("output directory {} is not empty", path.display())).into());
            }
        } else {
            self.prepare(path)?;
            fs::create_dir(path).with_context(|| format!("creating {}", path.display()))?;
        }
        self.created.push(path.to_path_buf());
        Ok(())
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in self.created.iter().rev() {
            let removed = if path.is_dir() { fs::remove_dir_all(path) } else { fs::remove_file(path) };
            if removed.is_ok() {
                log::info!("removed partial output {}", path.display());
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn describe_input(path: &Path) -> anyhow::Result<InputRecord> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = Sha256::digest(&data);
    Ok(InputRecord {
        path: path.display().to_string(),
        bytes: data.len() as u64,
        sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
    })
}

/// Everything needed to rerun a command: inputs with digests, the
/// effective parameters and the files written.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: BTreeMap<String, InputRecord>,
    pub config: RunConfig,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, config: RunConfig) -> Self {
        Manifest {
            tool: "ppimesh",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            inputs: BTreeMap::new(),
            config,
            outputs: Vec::new(),
            summary: None,
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> anyhow::Result<()> {
        self.inputs.insert(name.to_string(), describe_input(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, outputs: &mut Outputs, path: &Path) -> anyhow::Result<()> {
        outputs.write_file(path, |w| {
            serde_json::to_writer_pretty(&mut *w, self)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

/// `<path>.manifest.json` unless overridden.
pub fn manifest_path(explicit: Option<&Path>, main_output: &Path) -> PathBuf {
    explicit.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut name = main_output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        main_output.with_file_name(name)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncommitted_outputs_are_removed() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("sub/a.tsv");
        {
            let mut out = Outputs::new();
            out.write_file(&a, |w| Ok(writeln!(w, "x")?)).unwrap();
            assert!(a.exists());
        }
        assert!(!a.exists());
        assert!(!dir.path().join("sub").exists());

        let mut out = Outputs::new();
        out.write_file(&a, |w| Ok(writeln!(w, "x")?)).unwrap();
        out.commit();
        assert!(a.exists());
    }

    #[test]
    fn claimed_dir_must_be_empty() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("f"), "x").unwrap();
        let mut out = Outputs::new();
        assert!(out.claim_dir(dir.path()).is_err());
        drop(out);
        assert!(dir.path().join("f").exists());
    }

    #[test]
    fn pair_files_of_both_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let two = dir.path().join("two.tsv");
        fs::write(&two, "P1\tP2\n").unwrap();
        let p = read_pairs(&two, 1).unwrap();
        assert_eq!((p.len(), p[0].label), (1, 1));
        let four = dir.path().join("four.tsv");
        fs::write(&four, "id_a\tid_b\tlabel\tsource\nP1\tP2\t0\trandom\n").unwrap();
        let p = read_pairs(&four, 1).unwrap();
        assert_eq!((p.len(), p[0].label), (1, 0));
    }

    #[test]
    fn manifest_next_to_output() {
        assert_eq!(manifest_path(None, Path::new("out/cv.tsv")), PathBuf::from("out/cv.tsv.manifest.json"));
        assert_eq!(manifest_path(Some(Path::new("m.json")), Path::new("x")), PathBuf::from("m.json"));
    }
}

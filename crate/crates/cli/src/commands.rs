use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use ppimesh::classifier::ClassifierConfig;
use ppimesh::dataset::{assemble_dataset, write_dataset_tsv, AssembleOptions, InteractionPair, PairKey};
use ppimesh::features::{featurize_corpus, pair_from_map, write_feature_tsv, FeatureRow, FeaturizerConfig};
use ppimesh::mesh::{
    cluster_pairs, train_mesh, trim_ontology, write_predictions_tsv, MeshModel, TermMapper, TermSelection,
};
use ppimesh::seq::{write_fasta, ProteinRecord};
use ppimesh::synthetic::{generate, SyntheticConfig, SYNTHETIC_ROOT};
use ppimesh::validation::{
    cross_validate, default_c_grid, default_gamma_grid, grid_search, sweep_feature_count, sweep_k,
};

use crate::config::{Family, RunConfig};
use crate::io::{self, manifest_path, Manifest, Outputs};
use crate::{
    BuildDatasetArgs, Cli, Command, CvArgs, FeaturizeArgs, GridSearchArgs, MeshPredictArgs, MeshTrainArgs, RowInput,
    SweepArgs, SweepParameter, SynthArgs, UsageError,
};

pub const DEFAULT_SWEEP_F: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 300];
pub const DEFAULT_SWEEP_K: [usize; 6] = [1, 3, 5, 7, 9, 11];

pub fn execute(cli: &Cli) -> anyhow::Result<()> {
    let file_cfg = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let manifest = cli.global.manifest.as_deref();
    match &cli.command {
        Command::Featurize(a) => featurize(a, file_cfg, manifest),
        Command::BuildDataset(a) => build_dataset(a, file_cfg, manifest),
        Command::Cv(a) => cv(a, file_cfg, manifest),
        Command::GridSearch(a) => grid(a, file_cfg, manifest),
        Command::Sweep(a) => sweep(a, file_cfg, manifest),
        Command::MeshTrain(a) => mesh_train(a, file_cfg, manifest),
        Command::MeshPredict(a) => mesh_predict(a, file_cfg, manifest),
        Command::Synth(a) => synth(a, manifest),
    }
}

/// Featurizes the proteins used by `pairs` and returns their canonical pair rows.
fn pair_rows(
    records: &[ProteinRecord],
    pairs: &[InteractionPair],
    feat: &FeaturizerConfig,
) -> anyhow::Result<Vec<Vec<f64>>> {
    io::check_ids(pairs, records)?;
    let features = featurize_corpus(&io::referenced(records, pairs), feat)?;
    pairs.iter().map(|p| Ok(pair_from_map(&features, &p.key.a, &p.key.b)?.values)).collect()
}

struct Rows {
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

fn load_rows(input: &RowInput, cfg: &RunConfig, manifest: &mut Manifest) -> anyhow::Result<Rows> {
    match (&input.features, &input.fasta, &input.dataset) {
        (Some(path), _, _) => {
            manifest.input("features", path)?;
            let table = io::read_features(path)?;
            if table.is_empty() {
                anyhow::bail!(UsageError(format!("{} holds no feature rows", path.display())));
            }
            let labels = table.iter().map(|r| r.label).collect();
            Ok(Rows { rows: table.into_iter().map(|r| r.values).collect(), labels })
        }
        (None, Some(fasta), Some(dataset)) => {
            manifest.input("fasta", fasta)?;
            manifest.input("dataset", dataset)?;
            let records = io::read_fasta(fasta)?;
            let pairs = io::read_pairs(dataset, 1)?;
            let rows = pair_rows(&records, &pairs, &cfg.featurizer()?)?;
            Ok(Rows { rows, labels: pairs.iter().map(|p| p.label).collect() })
        }
        _ => Err(UsageError("give --features, or --fasta together with --dataset".into()).into()),
    }
}

/// Writes one TSV output plus the manifest, deleting both on failure.
fn finish<F>(out: &Path, manifest: &mut Manifest, explicit: Option<&Path>, body: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    let mut outputs = Outputs::new();
    outputs.write_file(out, |w| body(w))?;
    manifest.output(out);
    manifest.write(&mut outputs, &manifest_path(explicit, out))?;
    outputs.commit();
    Ok(())
}

fn featurize(a: &FeaturizeArgs, file_cfg: RunConfig, explicit: Option<&Path>) -> anyhow::Result<()> {
    let mut flags = RunConfig::default();
    a.feat.apply(&mut flags);
    let cfg = flags.over(file_cfg);
    let feat = cfg.featurizer()?;
    let recorded = RunConfig {
        f: Some(feat.f),
        normalization: Some(feat.normalization),
        alphabet: Some(feat.alphabet),
        ..Default::default()
    };
    let mut manifest = Manifest::new("featurize", recorded);
    manifest.input("fasta", &a.fasta)?;
    manifest.input("pairs", &a.pairs)?;
    let records = io::read_fasta(&a.fasta)?;
    let pairs = io::read_pairs(&a.pairs, a.label)?;
    let rows = pair_rows(&records, &pairs, &feat)?;
    let table: Vec<FeatureRow> = pairs
        .iter()
        .zip(rows)
        .map(|(p, values)| FeatureRow { id_a: p.key.a.clone(), id_b: p.key.b.clone(), label: p.label, values })
        .collect();
    log::info!("{} pairs featurized with F = {}", table.len(), feat.f);
    finish(&a.out, &mut manifest, explicit, |w| Ok(write_feature_tsv(w, &table)?))
}

fn build_dataset(a: &BuildDatasetArgs, file_cfg: RunConfig, explicit: Option<&Path>) -> anyhow::Result<()> {
    let flags = RunConfig {
        seed: a.seed,
        random_negatives: a.random_negatives,
        allow_imbalance: a.allow_imbalance.then_some(true),
        allow_self: a.allow_self.then_some(true),
        ..Default::default()
    };
    let cfg = flags.over(file_cfg);
    let allow_self = cfg.allow_self.unwrap_or(false);
    let mut manifest = Manifest::new("build-dataset", RunConfig::default());
    manifest.input("positives", &a.positives)?;
    let positives =
        ppimesh::dataset::load_pairs(io::open(&a.positives)?, 1, ppimesh::dataset::PairSource::Curated, allow_self)
            .with_context(|| format!("reading {}", a.positives.display()))?;
    let negatives = match &a.negatives {
        Some(path) => {
            manifest.input("negatives", path)?;
            ppimesh::dataset::load_pairs(io::open(path)?, 0, ppimesh::dataset::PairSource::KnownNegative, allow_self)
                .with_context(|| format!("reading {}", path.display()))?
                .pairs
        }
        None => Vec::new(),
    };
    let known_ids: Option<HashSet<String>> = match &a.fasta {
        Some(path) => {
            manifest.input("fasta", path)?;
            Some(io::read_fasta(path)?.into_iter().map(|r| r.id).collect())
        }
        None => None,
    };
    let veto = ppimesh::dataset::VetoList::from_pairs(&positives.pairs);
    let usable_known = negatives.iter().filter(|p| !veto.contains(&p.key)).count();
    let random_negatives = cfg.random_negatives.unwrap_or(positives.pairs.len().saturating_sub(usable_known));
    let opts =
        AssembleOptions { random_negatives, seed: cfg.seed(), allow_imbalance: cfg.allow_imbalance.unwrap_or(false) };
    let dataset = assemble_dataset(&positives.pairs, &negatives, &opts, known_ids.as_ref())?;
    log::info!(
        "dataset: {} positives, {} known negatives, {} random negatives",
        dataset.counts.positives,
        dataset.counts.known_negatives,
        dataset.counts.random_negatives
    );
    manifest.config = RunConfig {
        seed: Some(opts.seed),
        random_negatives: Some(random_negatives),
        allow_imbalance: Some(opts.allow_imbalance),
        allow_self: Some(allow_self),
        ..Default::default()
    };
    manifest.summary = Some(serde_json::to_value(&dataset.counts)?);
    finish(&a.out, &mut manifest, explicit, |w| Ok(write_dataset_tsv(w, &dataset.pairs)?))
}

/// Parameters that shape a classifier run, as recorded in manifests.
fn recorded_training(cfg: &RunConfig, uses_features: bool) -> anyhow::Result<RunConfig> {
    let mut r = RunConfig {
        classifier: Some(cfg.family()),
        normalization: Some(cfg.normalization.unwrap_or_default()),
        folds: Some(cfg.folds()?),
        seed: Some(cfg.seed()),
        ..Default::default()
    };
    match cfg.classifier_config()? {
        ClassifierConfig::Svm(s) => {
            r.c = Some(s.c);
            r.gamma = Some(s.gamma);
            r.tol = Some(s.tol);
            r.max_iterations = Some(s.max_iterations);
        }
        ClassifierConfig::Knn(k) => r.k = Some(k.k),
    }
    if uses_features {
        let feat = cfg.featurizer()?;
        r.f = Some(feat.f);
        r.alphabet = Some(feat.alphabet);
    }
    Ok(r)
}

fn training_cfg(
    feat: &crate::FeatFlags,
    clf: &crate::ClfFlags,
    cvf: &crate::CvFlags,
    file_cfg: RunConfig,
) -> RunConfig {
    let mut flags = RunConfig::default();
    feat.apply(&mut flags);
    clf.apply(&mut flags);
    cvf.apply(&mut flags);
    flags.over(file_cfg)
}

fn cv(a: &CvArgs, file_cfg: RunConfig, explicit: Option<&Path>) -> anyhow::Result<()> {
    let cfg = training_cfg(&a.feat, &a.clf, &a.cv, file_cfg);
    let mut recorded = recorded_training(&cfg, a.input.features.is_none())?;
    recorded.threshold = Some(cfg.cv_threshold()?);
    let mut manifest = Manifest::new("cv", recorded);
    let data = load_rows(&a.input, &cfg, &mut manifest)?;
    let report =
        cross_validate(&data.rows, &data.labels, &cfg.trainer()?, cfg.folds()?, cfg.seed(), cfg.cv_threshold()?)?;
    log::info!("mean AUC {:.4}", report.mean.auc);
    manifest.summary = Some(serde_json::to_value(report.mean)?);
    finish(&a.out, &mut manifest, explicit, |w| Ok(report.write_tsv(w)?))
}

fn grid(a: &GridSearchArgs, file_cfg: RunConfig, explicit: Option<&Path>) -> anyhow::Result<()> {
    let mut cfg = training_cfg(&a.feat, &a.clf, &a.cv, file_cfg);
    cfg.c_grid = a.c_grid.clone().or(cfg.c_grid);
    cfg.gamma_grid = a.gamma_grid.clone().or(cfg.gamma_grid);
    if cfg.family() != Family::Svm {
        anyhow::bail!(UsageError("grid-search tunes the SVM; use `sweep --parameter k` for kNN".into()));
    }
    let c_grid = cfg.c_grid.clone().unwrap_or_else(default_c_grid);
    let gamma_grid = cfg.gamma_grid.clone().unwrap_or_else(default_gamma_grid);
    if c_grid.iter().chain(&gamma_grid).any(|v| !(*v > 0.0 && v.is_finite())) {
        anyhow::bail!(UsageError("grid values must be positive".into()));
    }
    let mut recorded = recorded_training(&cfg, a.input.features.is_none())?;
    recorded.c = None;
    recorded.gamma = None;
    recorded.c_grid = Some(c_grid.clone());
    recorded.gamma_grid = Some(gamma_grid.clone());
    let mut manifest = Manifest::new("grid-search", recorded);
    let data = load_rows(&a.input, &cfg, &mut manifest)?;
    let base = cfg.svm()?;
    let normalization = cfg.normalization.unwrap_or_default();
    let report =
        grid_search(&data.rows, &data.labels, &c_grid, &gamma_grid, &base, normalization, cfg.folds()?, cfg.seed())?;
    let best = report.best_cell();
    log::info!("best C = {}, gamma = {}, mean AUC {:.4}", best.c, best.gamma, best.mean_auc);
    manifest.summary = Some(serde_json::json!({ "c": best.c, "gamma": best.gamma, "mean_auc": best.mean_auc }));
    finish(&a.out, &mut manifest, explicit, |w| Ok(report.write_tsv(w)?))
}

fn sweep(a: &SweepArgs, file_cfg: RunConfig, explicit: Option<&Path>) -> anyhow::Result<()> {
    let mut cfg = training_cfg(&a.feat, &a.clf, &a.cv, file_cfg);
    cfg.sweep_values = a.values.clone().or(cfg.sweep_values);
    let folds = cfg.folds()?;
    let seed = cfg.seed();
    match a.parameter {
        SweepParameter::F => {
            let values = cfg.sweep_values.clone().unwrap_or_else(|| DEFAULT_SWEEP_F.to_vec());
            if values.contains(&0) {
                anyhow::bail!(UsageError("F values must be at least 1".into()));
            }
            let (Some(fasta), Some(dataset)) = (&a.input.fasta, &a.input.dataset) else {
                anyhow::bail!(UsageError("sweeping F needs --fasta and --dataset".into()));
            };
            let mut recorded = recorded_training(&cfg, true)?;
            recorded.f = None;
            recorded.sweep_values = Some(values.clone());
            let mut manifest = Manifest::new("sweep", recorded);
            manifest.input("fasta", fasta)?;
            manifest.input("dataset", dataset)?;
            let records = io::read_fasta(fasta)?;
            let pairs = io::read_pairs(dataset, 1)?;
            io::check_ids(&pairs, &records)?;
            let used = io::referenced(&records, &pairs);
            let labels: Vec<u8> = pairs.iter().map(|p| p.label).collect();
            let base = cfg.featurizer()?;
            let table = sweep_feature_count(&values, &base, &cfg.trainer()?, folds, seed, |fc| {
                let features = featurize_corpus(&used, fc)?;
                let rows = pairs
                    .iter()
                    .map(|p| Ok(pair_from_map(&features, &p.key.a, &p.key.b)?.values))
                    .collect::<Result<Vec<_>, ppimesh::features::FeatureError>>()?;
                Ok((rows, labels.clone()))
            })?;
            finish(&a.out, &mut manifest, explicit, |w| Ok(table.write_tsv(w)?))
        }
        SweepParameter::K => {
            let values = cfg.sweep_values.clone().unwrap_or_else(|| DEFAULT_SWEEP_K.to_vec());
            if values.contains(&0) {
                anyhow::bail!(UsageError("k values must be at least 1".into()));
            }
            cfg.classifier = Some(Family::Knn);
            let mut recorded = recorded_training(&cfg, a.input.features.is_none())?;
            recorded.k = None;
            recorded.sweep_values = Some(values.clone());
            let mut manifest = Manifest::new("sweep", recorded);
            let data = load_rows(&a.input, &cfg, &mut manifest)?;
            let normalization = cfg.normalization.unwrap_or_default();
            let table = sweep_k(&data.rows, &data.labels, &values, normalization, folds, seed)?;
            finish(&a.out, &mut manifest, explicit, |w| Ok(table.write_tsv(w)?))
        }
    }
}

fn write_selection<W: Write + ?Sized>(w: &mut W, sel: &TermSelection) -> std::io::Result<()> {
    writeln!(w, "go_id\tproteins")?;
    for (term, n) in &sel.protein_counts {
        writeln!(w, "{term}\t{n}")?;
    }
    Ok(())
}

fn mesh_train(a: &MeshTrainArgs, file_cfg: RunConfig, explicit: Option<&Path>) -> anyhow::Result<()> {
    let mut cfg = training_cfg(&a.feat, &a.clf, &a.cv, file_cfg);
    let flags = RunConfig {
        root: a.root.clone(),
        max_depth: a.max_depth,
        min_proteins: a.min_proteins,
        min_ppis: a.min_ppis,
        max_ppis: a.max_ppis,
        generic_size: a.generic_size,
        prune: a.no_prune.then_some(false),
        ..Default::default()
    };
    cfg = flags.over(cfg);
    let feat = cfg.featurizer()?;
    let trainer = cfg.trainer()?;
    let mesh_cfg = cfg.mesh()?;

    let mut recorded = recorded_training(&cfg, true)?;
    recorded.root = cfg.root.clone();
    recorded.max_depth = Some(cfg.max_depth());
    recorded.min_proteins = Some(cfg.min_proteins());
    recorded.min_ppis = Some(mesh_cfg.min_ppis);
    recorded.max_ppis = Some(mesh_cfg.max_ppis);
    recorded.generic_size = Some(mesh_cfg.generic_cap());
    recorded.prune = Some(mesh_cfg.prune);
    let mut manifest = Manifest::new("mesh-train", recorded);
    manifest.input("dataset", &a.dataset)?;
    manifest.input("fasta", &a.fasta)?;
    for (name, path) in [("annotations", &a.annotations), ("ontology", &a.ontology), ("clusters", &a.clusters)] {
        if let Some(p) = path {
            manifest.input(name, p)?;
        }
    }

    let mut outputs = Outputs::new();
    outputs.claim_dir(&a.out_dir)?;

    let records = io::read_fasta(&a.fasta)?;
    let pairs = io::read_pairs(&a.dataset, 1)?;
    let labels: Vec<u8> = pairs.iter().map(|p| p.label).collect();
    let rows = pair_rows(&records, &pairs, &feat)?;
    let store = io::read_annotations(a.annotations.as_deref(), a.clusters.as_deref())?;
    let (mapper, selection) = match &a.ontology {
        Some(path) => {
            let graph = io::read_ontology(path, cfg.root.as_deref())?;
            let selection = trim_ontology(&graph, &store.direct, cfg.max_depth(), cfg.min_proteins());
            log::info!("{} GO terms selected", selection.selected_terms.len());
            (TermMapper::new(&graph, &selection), Some(selection))
        }
        None => {
            log::warn!("no ontology given; every pair goes to the generic classifier");
            (TermMapper::default(), None)
        }
    };
    if store.direct.is_empty() {
        log::warn!("no GO annotations loaded; the mesh will hold the generic classifier only");
    }
    let keys: Vec<PairKey> = pairs.iter().map(|p| p.key.clone()).collect();
    let clustering = cluster_pairs(&keys, |id| store.resolve(id, &mapper));
    log::info!(
        "{} candidate cells, {} pairs without an applicable cell",
        clustering.cells.len(),
        clustering.generic_pool.len()
    );
    let mesh = train_mesh(&rows, &labels, &clustering, &feat, &trainer, mapper, &mesh_cfg)?;
    log::info!("{} cells serving", mesh.cells.len());
    mesh.save(&a.out_dir)?;
    manifest.output(&a.out_dir);

    let report = a.report.clone().unwrap_or_else(|| a.out_dir.join("provenance.tsv"));
    outputs.write_file(&report, |w| Ok(mesh.provenance.write_summary_tsv(w)?))?;
    manifest.output(&report);
    let cells = a.out_dir.join("cells.tsv");
    outputs.write_file(&cells, |w| Ok(mesh.provenance.write_cells_tsv(w)?))?;
    manifest.output(&cells);
    if let Some(sel) = &selection {
        let path = a.out_dir.join("selected_terms.tsv");
        outputs.write_file(&path, |w| Ok(write_selection(w, sel)?))?;
        manifest.output(&path);
    }
    manifest.summary = Some(serde_json::json!({
        "cells_serving": mesh.cells.len(),
        "generic_cv_auc": mesh.provenance.generic.cv_auc,
        "homology_lookups": store.homology_lookups(),
    }));
    let mpath = explicit.map(Path::to_path_buf).unwrap_or_else(|| a.out_dir.join("run_manifest.json"));
    manifest.write(&mut outputs, &mpath)?;
    outputs.commit();
    Ok(())
}

fn mesh_predict(a: &MeshPredictArgs, file_cfg: RunConfig, explicit: Option<&Path>) -> anyhow::Result<()> {
    let mut flags = RunConfig { threshold: a.threshold, ..Default::default() };
    a.feat.apply(&mut flags);
    let cfg = flags.over(file_cfg);
    let threshold = cfg.prediction_threshold()?;
    let mesh = MeshModel::load(&a.model).with_context(|| format!("loading mesh from {}", a.model.display()))?;
    let requested = FeaturizerConfig {
        f: cfg.f.unwrap_or(mesh.featurizer.f),
        normalization: cfg.normalization.unwrap_or(mesh.featurizer.normalization),
        alphabet: cfg.alphabet.unwrap_or(mesh.featurizer.alphabet),
    };
    mesh.check_featurizer(&requested)?;

    let recorded = RunConfig {
        threshold: Some(threshold),
        f: Some(mesh.featurizer.f),
        normalization: Some(mesh.featurizer.normalization),
        alphabet: Some(mesh.featurizer.alphabet),
        ..Default::default()
    };
    let mut manifest = Manifest::new("mesh-predict", recorded);
    manifest.input("model", &a.model.join("manifest.json"))?;
    manifest.input("fasta", &a.fasta)?;
    manifest.input("candidates", &a.candidates)?;
    for (name, path) in [("annotations", &a.annotations), ("clusters", &a.clusters)] {
        if let Some(p) = path {
            manifest.input(name, p)?;
        }
    }

    let records = io::read_fasta(&a.fasta)?;
    let candidates = io::read_pairs(&a.candidates, 1)?;
    io::check_ids(&candidates, &records)?;
    let features = featurize_corpus(&io::referenced(&records, &candidates), &mesh.featurizer)?;
    let store = io::read_annotations(a.annotations.as_deref(), a.clusters.as_deref())?;
    if a.annotations.is_none() {
        log::warn!("no annotations given; every candidate is scored by the generic classifier");
    }
    let keys: Vec<PairKey> = candidates.iter().map(|p| p.key.clone()).collect();
    let ranked = mesh.rank_predictions(&keys, &features, |id| store.resolve(id, &mesh.term_mapper), threshold)?;
    let positives = ranked.iter().filter(|p| p.predicted == 1).count();
    log::info!("{} of {} candidates above {threshold}", positives, ranked.len());
    manifest.summary = Some(serde_json::json!({ "candidates": ranked.len(), "predicted_positive": positives }));
    finish(&a.out, &mut manifest, explicit, |w| Ok(write_predictions_tsv(w, &ranked)?))
}

fn synth(a: &SynthArgs, explicit: Option<&Path>) -> anyhow::Result<()> {
    if !(0.0..=1.0).contains(&a.homology_fraction) || !(0.0..=1.0).contains(&a.motif_strength) {
        anyhow::bail!(UsageError("fractions must lie in [0, 1]".into()));
    }
    let cfg = SyntheticConfig {
        pairs_per_cell: a.pairs_per_cell,
        unannotated_pairs: a.unannotated_pairs,
        homology_fraction: a.homology_fraction,
        motif_strength: a.motif_strength,
        seed: a.seed,
        ..Default::default()
    };
    let corpus = generate(&cfg);
    if a.candidates >= corpus.pairs.len() {
        anyhow::bail!(UsageError("--candidates must be smaller than the corpus".into()));
    }
    let (held_out, training) = corpus.pairs.split_at(a.candidates);
    let mut records = corpus.records.clone();
    records.sort_by(|x, y| x.id.cmp(&y.id));

    let mut outputs = Outputs::new();
    outputs.claim_dir(&a.out_dir)?;
    let dir = &a.out_dir;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut put = |name: &str, body: &dyn Fn(&mut dyn Write) -> std::io::Result<()>| -> anyhow::Result<()> {
        let path = dir.join(name);
        outputs.write_file(&path, |w| Ok(body(w)?))?;
        written.push(path);
        Ok(())
    };
    put("proteins.fasta", &|w| write_fasta(w, &records, 60))?;
    put("dataset.tsv", &|w| write_dataset_tsv(w, training))?;
    put("positives.tsv", &|w| write_id_pairs(w, training.iter().filter(|p| p.label == 1)))?;
    put("negatives.tsv", &|w| write_id_pairs(w, training.iter().filter(|p| p.label == 0)))?;
    put("candidates.tsv", &|w| write_id_pairs(w, held_out.iter()))?;
    put("candidates_truth.tsv", &|w| write_dataset_tsv(w, held_out))?;
    put("annotations.tsv", &|w| {
        writeln!(w, "protein_id\tgo_id")?;
        for (p, t) in &corpus.annotations {
            writeln!(w, "{p}\t{t}")?;
        }
        Ok(())
    })?;
    put("ontology.tsv", &|w| {
        writeln!(w, "child_id\tparent_id")?;
        for (c, p) in &corpus.edges {
            writeln!(w, "{c}\t{p}")?;
        }
        Ok(())
    })?;
    put("clusters.tsv", &|w| {
        writeln!(w, "level\tcluster_id\tprotein_id")?;
        for (level, cluster, protein) in &corpus.clusters {
            writeln!(w, "{}\t{cluster}\t{protein}", level.percent())?;
        }
        Ok(())
    })?;

    let mut manifest = Manifest::new("synth", RunConfig { seed: Some(a.seed), ..Default::default() });
    manifest.summary = Some(serde_json::json!({
        "pairs_per_cell": a.pairs_per_cell,
        "unannotated_pairs": a.unannotated_pairs,
        "candidates": a.candidates,
        "homology_fraction": a.homology_fraction,
        "motif_strength": a.motif_strength,
        "root": SYNTHETIC_ROOT,
        "cells": (0..cfg.cells.len()).map(|c| corpus.cell_terms(&cfg, c)).collect::<Vec<_>>(),
    }));
    for p in &written {
        manifest.output(p);
    }
    let mpath = explicit.map(Path::to_path_buf).unwrap_or_else(|| dir.join("synth_manifest.json"));
    manifest.write(&mut outputs, &mpath)?;
    outputs.commit();
    Ok(())
}

fn write_id_pairs<'a, W: Write + ?Sized>(
    w: &mut W,
    pairs: impl Iterator<Item = &'a InteractionPair>,
) -> std::io::Result<()> {
    writeln!(w, "id_a\tid_b")?;
    for p in pairs {
        writeln!(w, "{}\t{}", p.key.a, p.key.b)?;
    }
    Ok(())
}

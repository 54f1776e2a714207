//! End-to-end driver: graph, labels, embeddings, features and the two
//! classification stages. Every stage reads and writes files under the
//! configured work directory so stages can be run one at a time.
//!
//! Stage 1 separates `disengaged` users from everyone else on embedding
//! columns only, after undersampling the disengaged class once. Stage 2
//! assigns the remaining users to one of the four engaged classes using the
//! embedding and, optionally, the profile columns.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::embed::{export_embeddings, import_embeddings, train_line2, TrainConfig, TrainStats};
use crate::error::{self, Error, Result};
use crate::features::{fuse, read_feature_table, write_feature_table, FeatureMatrix};
use crate::graph::{build_graph, load_snapshot, save_snapshot, BuildStats, FollowGraph};
use crate::ingest::{derive_exposures, load_edges, load_events, load_profiles, UserProfile};
use crate::labeler::{label_corpus, read_labels, write_labels, BehaviorLabel, LabelReport};
use crate::ml::{
    evaluate, fit_final, sub_seed, undersample_rows, Dataset, EvalOptions, EvalReport, FittedModel, Imbalance, Matrix,
    ModelKind, ModelSpec,
};
use crate::synth::{generate, read_id_list, SynthConfig, SynthData};

/// File names inside the work directory.
pub mod artifacts {
    pub const GRAPH: &str = "graph.bin";
    pub const GRAPH_REPORT: &str = "graph_report.json";
    pub const LABELS: &str = "labels.csv";
    pub const LABEL_REPORT: &str = "label_report.json";
    pub const EMBEDDINGS: &str = "embeddings.csv";
    pub const EMBED_REPORT: &str = "embed_report.json";
    pub const FEATURES: &str = "features.csv";
    pub const FEATURE_REPORT: &str = "feature_report.json";
    pub const STAGE1_REPORT: &str = "stage1_report.json";
    pub const STAGE1_MODEL: &str = "stage1_model.json";
    pub const ROC: &str = "roc.csv";
    pub const STAGE2_REPORT: &str = "stage2_report.json";
    pub const STAGE2_MODEL: &str = "stage2_model.json";
    pub const PREDICTIONS: &str = "predictions.csv";
    pub const REPORT: &str = "report.csv";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory holding the inputs under their standard names; `simulate`
    /// writes here.
    pub data_dir: PathBuf,
    pub edges: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    /// One user id per line; these users are kept out of training and are
    /// the default targets of `predict`.
    pub holdout: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            data_dir: PathBuf::from("data"),
            edges: None,
            events: None,
            profiles: None,
            holdout: None,
        }
    }
}

impl Paths {
    pub fn edges(&self) -> PathBuf {
        self.edges.clone().unwrap_or_else(|| self.data_dir.join("edges.tsv"))
    }

    pub fn events(&self) -> PathBuf {
        self.events
            .clone()
            .unwrap_or_else(|| self.data_dir.join("events.jsonl"))
    }

    pub fn profiles(&self) -> PathBuf {
        self.profiles
            .clone()
            .unwrap_or_else(|| self.data_dir.join("profiles.csv"))
    }

    /// The explicit holdout file, or `holdout.txt` in the data directory if
    /// that exists.
    pub fn holdout(&self) -> Option<PathBuf> {
        match &self.holdout {
            Some(p) => Some(p.clone()),
            None => Some(self.data_dir.join("holdout.txt")).filter(|p| p.exists()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage1Config {
    pub model: ModelSpec,
    pub k_folds: usize,
    /// Disengaged rows kept; defaults to the number of other rows.
    pub undersample_target: Option<usize>,
    pub standardize: bool,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Stage1Config {
            model: ModelSpec::of(ModelKind::LogisticRegressionOvr),
            k_folds: 5,
            undersample_target: None,
            standardize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage2Config {
    pub model: ModelSpec,
    pub k_folds: usize,
    pub imbalance: Imbalance,
    pub use_profiles: bool,
    pub standardize: bool,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Stage2Config {
            model: ModelSpec::of(ModelKind::BaggedTrees),
            k_folds: 10,
            imbalance: Imbalance::Auto,
            use_profiles: true,
            standardize: true,
        }
    }
}

/// Pipeline settings. `seed` is required; every random stream in the run
/// is derived from it, overriding the seeds of the nested sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default = "default_workdir")]
    pub workdir: PathBuf,
    /// Reference time for account ages; defaults to the latest event.
    #[serde(default)]
    pub reference_unix: Option<u64>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub simulate: SynthConfig,
    #[serde(default)]
    pub embed: TrainConfig,
    #[serde(default)]
    pub stage1: Stage1Config,
    #[serde(default)]
    pub stage2: Stage2Config,
}

fn default_workdir() -> PathBuf {
    PathBuf::from("work")
}

impl PipelineConfig {
    /// Parses TOML and applies `key.path=value` overrides. Override values
    /// are read as TOML values and fall back to plain strings.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("config: {e}")))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: PipelineConfig = table.try_into().map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("stage1", self.stage1.k_folds), ("stage2", self.stage2.k_folds)] {
            if k < 2 {
                return Err(Error::Config(format!("{name}.k_folds must be at least 2, got {k}")));
            }
        }
        self.embed.validate()?;
        self.stage1.model.validate()?;
        self.stage2.model.validate()
    }
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {ov:?} is not key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Simulate,
    BuildGraph,
    Label,
    Embed,
    Features,
    Stage1,
    Stage2,
    Predict,
    Report,
    /// Everything except `simulate`.
    All,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Simulate,
        Stage::BuildGraph,
        Stage::Label,
        Stage::Embed,
        Stage::Features,
        Stage::Stage1,
        Stage::Stage2,
        Stage::Predict,
        Stage::Report,
        Stage::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::BuildGraph => "build-graph",
            Stage::Label => "label",
            Stage::Embed => "embed",
            Stage::Features => "features",
            Stage::Stage1 => "stage1",
            Stage::Stage2 => "stage2",
            Stage::Predict => "predict",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub nodes: usize,
    pub edges: usize,
    #[serde(flatten)]
    pub build: BuildStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSummary {
    #[serde(flatten)]
    pub labels: LabelReport,
    pub unknown_sharers: usize,
    pub unknown_share_events: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub rows: usize,
    pub columns: usize,
    pub holdout_excluded: usize,
    pub missing_embedding: usize,
    pub imputed_profiles: usize,
    pub reference_unix: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage2Report {
    pub model: EvalReport,
    pub baselines: Vec<EvalReport>,
}

/// A fitted model plus the feature columns it expects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageModel {
    pub columns: Vec<String>,
    pub fitted: FittedModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub user: String,
    /// `None` when the user has no embedding.
    pub class: Option<BehaviorLabel>,
    pub stage1_score: Option<f64>,
}

/// Binary stage-1 dataset: embedding columns only, class 1 = not disengaged.
pub fn stage1_dataset(fm: &FeatureMatrix, labels: &[BehaviorLabel]) -> Result<Dataset> {
    let x = fm.leading_columns(fm.embedding_dim()).values;
    let y = labels
        .iter()
        .map(|&l| usize::from(l != BehaviorLabel::Disengaged))
        .collect();
    Dataset::new(x, y, vec!["disengaged".into(), "others".into()])
}

/// Four-class stage-2 dataset over the engaged rows. Returns the dataset and
/// the user of every row.
pub fn stage2_dataset(fm: &FeatureMatrix, labels: &[BehaviorLabel]) -> Result<(Dataset, Vec<String>)> {
    let rows: Vec<usize> = (0..labels.len())
        .filter(|&r| labels[r] != BehaviorLabel::Disengaged)
        .collect();
    let y = rows
        .iter()
        .map(|&r| {
            BehaviorLabel::ENGAGED
                .iter()
                .position(|&l| l == labels[r])
                .ok_or_else(|| Error::Invariant(format!("{} reached stage 2", labels[r])))
        })
        .collect::<Result<Vec<_>>>()?;
    let users = rows.iter().map(|&r| fm.users[r].clone()).collect();
    let names = BehaviorLabel::ENGAGED.iter().map(|l| l.name().to_string()).collect();
    Ok((Dataset::new(fm.values.select_rows(&rows), y, names)?, users))
}

pub struct Pipeline {
    cfg: PipelineConfig,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Pipeline { cfg })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.cfg.workdir.join(name)
    }

    fn prepare_workdir(&self) -> Result<()> {
        fs::create_dir_all(&self.cfg.workdir).map_err(|source| Error::File {
            path: self.cfg.workdir.clone(),
            source,
        })
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut w = BufWriter::new(error::create(&self.artifact(name))?);
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let f = error::open(&self.artifact(name))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }

    fn require(&self, name: &str, producer: Stage) -> Result<PathBuf> {
        let p = self.artifact(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::Config(format!(
                "{} not found; run `{producer}` first",
                p.display()
            )))
        }
    }

    fn graph(&self) -> Result<FollowGraph> {
        load_snapshot(&self.require(artifacts::GRAPH, Stage::BuildGraph)?)
    }

    fn holdout(&self) -> Result<Vec<String>> {
        match self.cfg.paths.holdout() {
            Some(p) => read_id_list(error::open(&p)?),
            None => Ok(Vec::new()),
        }
    }

    fn reference_time(&self) -> Result<u64> {
        if let Some(t) = self.cfg.reference_unix {
            return Ok(t);
        }
        let events = load_events(&self.cfg.paths.events())?;
        events
            .iter()
            .map(|e| e.time)
            .max()
            .ok_or_else(|| Error::EmptyInput("no events to take a reference time from".into()))
    }

    fn profiles(&self) -> Result<(std::collections::HashMap<String, UserProfile>, u64)> {
        let reference = self.reference_time()?;
        let map = load_profiles(&self.cfg.paths.profiles())?
            .into_iter()
            .map(|p| (p.user_id.clone(), p.to_profile(reference)))
            .collect();
        Ok((map, reference))
    }

    pub fn run(&self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Simulate => self.simulate().map(drop),
            Stage::BuildGraph => self.build_graph().map(drop),
            Stage::Label => self.label().map(drop),
            Stage::Embed => self.embed().map(drop),
            Stage::Features => self.features().map(drop),
            Stage::Stage1 => self.stage1().map(drop),
            Stage::Stage2 => self.stage2().map(drop),
            Stage::Predict => self.predict(None).map(drop),
            Stage::Report => self.report(),
            Stage::All => {
                self.build_graph()?;
                self.label()?;
                self.embed()?;
                self.features()?;
                self.stage1()?;
                self.stage2()?;
                if self.cfg.paths.holdout().is_some() {
                    self.predict(None)?;
                }
                self.report()
            }
        }
    }

    /// Generates a synthetic corpus into the data directory.
    pub fn simulate(&self) -> Result<SynthData> {
        let synth = SynthConfig {
            seed: self.cfg.seed,
            ..self.cfg.simulate.clone()
        };
        let data = generate(&synth)?;
        data.write_to_dir(&self.cfg.paths.data_dir)?;
        log::info!(
            "simulated {} users, {} edges, {} share events into {}",
            data.truth.len(),
            data.edges.len(),
            data.events.len(),
            self.cfg.paths.data_dir.display()
        );
        Ok(data)
    }

    pub fn build_graph(&self) -> Result<GraphReport> {
        self.prepare_workdir()?;
        let edges = load_edges(&self.cfg.paths.edges())?;
        let (graph, build) = build_graph(&edges)?;
        save_snapshot(&graph, &self.artifact(artifacts::GRAPH))?;
        let report = GraphReport {
            nodes: graph.n_nodes(),
            edges: graph.n_edges(),
            build,
        };
        self.write_json(artifacts::GRAPH_REPORT, &report)?;
        log::info!("graph: {} nodes, {} edges", report.nodes, report.edges);
        Ok(report)
    }

    pub fn label(&self) -> Result<LabelSummary> {
        self.prepare_workdir()?;
        let graph = self.graph()?;
        let events = load_events(&self.cfg.paths.events())?;
        let exposures = derive_exposures(&events, &graph);
        let corpus = label_corpus(&exposures, &events, None)?;
        let mut w = BufWriter::new(error::create(&self.artifact(artifacts::LABELS))?);
        write_labels(&mut w, &corpus.users)?;
        w.flush()?;
        let summary = LabelSummary {
            labels: corpus.report,
            unknown_sharers: exposures.unknown_sharers,
            unknown_share_events: exposures.unknown_share_events,
        };
        self.write_json(artifacts::LABEL_REPORT, &summary)?;
        log::info!("labeled {} users", summary.labels.labeled_users);
        Ok(summary)
    }

    pub fn embed(&self) -> Result<TrainStats> {
        self.prepare_workdir()?;
        let graph = self.graph()?;
        let train = TrainConfig {
            seed: sub_seed(self.cfg.seed, 10),
            ..self.cfg.embed.clone()
        };
        let (model, stats) = train_line2(&graph, &train)?;
        export_embeddings(&model.vertex, &self.artifact(artifacts::EMBEDDINGS))?;
        self.write_json(artifacts::EMBED_REPORT, &stats)?;
        log::info!(
            "embedded {} nodes in {} dimensions ({} samples)",
            graph.n_nodes(),
            train.dim,
            stats.total_samples
        );
        Ok(stats)
    }

    pub fn features(&self) -> Result<FeatureReport> {
        self.prepare_workdir()?;
        let graph = self.graph()?;
        let emb = import_embeddings(&self.require(artifacts::EMBEDDINGS, Stage::Embed)?)?;
        let labeled = read_labels(error::open(&self.require(artifacts::LABELS, Stage::Label)?)?)?;
        let holdout: HashSet<String> = self.holdout()?.into_iter().collect();

        let mut users = Vec::new();
        let mut labels = Vec::new();
        let (mut held, mut missing) = (0, 0);
        for u in labeled {
            if holdout.contains(&u.user) {
                held += 1;
            } else if graph
                .ids()
                .index_of(&u.user)
                .is_some_and(|i| (i as usize) < emb.n_rows())
            {
                users.push(u.user);
                labels.push(u.final_label);
            } else {
                missing += 1;
            }
        }
        if missing > 0 {
            log::warn!("{missing} labeled user(s) are not in the graph and were dropped");
        }
        let (profiles, reference) = if self.cfg.stage2.use_profiles {
            let (p, t) = self.profiles()?;
            (Some(p), Some(t))
        } else {
            (None, None)
        };
        let fused = fuse(&emb, graph.ids(), profiles.as_ref(), &users)?;
        let mut w = BufWriter::new(error::create(&self.artifact(artifacts::FEATURES))?);
        write_feature_table(&mut w, &fused.features, &labels)?;
        w.flush()?;
        let report = FeatureReport {
            rows: users.len(),
            columns: fused.features.columns.len(),
            holdout_excluded: held,
            missing_embedding: missing,
            imputed_profiles: fused.imputed_profiles.len(),
            reference_unix: reference,
        };
        self.write_json(artifacts::FEATURE_REPORT, &report)?;
        Ok(report)
    }

    fn feature_table(&self) -> Result<(FeatureMatrix, Vec<BehaviorLabel>)> {
        read_feature_table(error::open(&self.require(artifacts::FEATURES, Stage::Features)?)?)
    }

    pub fn stage1(&self) -> Result<EvalReport> {
        self.prepare_workdir()?;
        let (fm, labels) = self.feature_table()?;
        let data = stage1_dataset(&fm, &labels)?;
        let counts = data.class_counts();
        if counts.contains(&0) {
            return Err(Error::Data(format!(
                "stage 1 needs both disengaged and other users, got {} and {}",
                counts[0], counts[1]
            )));
        }
        let target = self.cfg.stage1.undersample_target.unwrap_or(counts[1].min(counts[0]));
        let rows = undersample_rows(&data.y, 0, target, sub_seed(self.cfg.seed, 21))?;
        let data = data.subset(&rows);

        let spec = ModelSpec {
            seed: sub_seed(self.cfg.seed, 20),
            ..self.cfg.stage1.model.clone()
        };
        let opts = EvalOptions {
            k_folds: self.cfg.stage1.k_folds,
            imbalance: Imbalance::None,
            standardize: self.cfg.stage1.standardize,
            seed: sub_seed(self.cfg.seed, 22),
        };
        let report = evaluate(&spec, &data, &opts)?;
        let model = StageModel {
            columns: fm.columns[..fm.embedding_dim()].to_vec(),
            fitted: fit_final(&spec, &data, &opts)?,
        };
        self.write_json(artifacts::STAGE1_REPORT, &report)?;
        self.write_json(artifacts::STAGE1_MODEL, &model)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(error::create(&self.artifact(artifacts::ROC))?));
        w.write_record(["fpr", "tpr", "threshold"])?;
        if let Some(roc) = &report.roc {
            for p in &roc.points {
                w.write_record([p.fpr.to_string(), p.tpr.to_string(), p.threshold.to_string()])?;
            }
        }
        w.flush()?;
        log::info!("stage 1 accuracy {:.4}", report.accuracy);
        Ok(report)
    }

    pub fn stage2(&self) -> Result<Stage2Report> {
        self.prepare_workdir()?;
        self.require(artifacts::STAGE1_MODEL, Stage::Stage1)?;
        let (fm, labels) = self.feature_table()?;
        let (data, _) = stage2_dataset(&fm, &labels)?;
        let opts = EvalOptions {
            k_folds: self.cfg.stage2.k_folds,
            imbalance: self.cfg.stage2.imbalance,
            standardize: self.cfg.stage2.standardize,
            seed: sub_seed(self.cfg.seed, 31),
        };
        let spec = ModelSpec {
            seed: sub_seed(self.cfg.seed, 30),
            ..self.cfg.stage2.model.clone()
        };
        let model = evaluate(&spec, &data, &opts)?;
        let baselines = [ModelKind::MajorityBaseline, ModelKind::RandomBaseline]
            .into_iter()
            .map(|kind| {
                let spec = ModelSpec {
                    seed: sub_seed(self.cfg.seed, 32),
                    ..ModelSpec::of(kind)
                };
                let opts = EvalOptions {
                    imbalance: Imbalance::None,
                    ..opts.clone()
                };
                evaluate(&spec, &data, &opts)
            })
            .collect::<Result<Vec<_>>>()?;
        let fitted = StageModel {
            columns: fm.columns.clone(),
            fitted: fit_final(&spec, &data, &opts)?,
        };
        let report = Stage2Report { model, baselines };
        self.write_json(artifacts::STAGE2_REPORT, &report)?;
        self.write_json(artifacts::STAGE2_MODEL, &fitted)?;
        log::info!(
            "stage 2 weighted F1 {:.4} (baselines {:.4}, {:.4})",
            report.model.weighted_f1,
            report.baselines[0].weighted_f1,
            report.baselines[1].weighted_f1
        );
        Ok(report)
    }

    /// Predicts `users`, or the holdout list when `None`, and writes
    /// predictions.csv.
    pub fn predict(&self, users: Option<&[String]>) -> Result<Vec<Prediction>> {
        self.prepare_workdir()?;
        let users: Vec<String> = match users {
            Some(u) => u.to_vec(),
            None => {
                if self.cfg.paths.holdout().is_none() {
                    return Err(Error::Config("no users given and no holdout list configured".into()));
                }
                self.holdout()?
            }
        };
        self.require(artifacts::STAGE1_MODEL, Stage::Stage1)?;
        let s1: StageModel = self.read_json(artifacts::STAGE1_MODEL)?;
        self.require(artifacts::STAGE2_MODEL, Stage::Stage2)?;
        let s2: StageModel = self.read_json(artifacts::STAGE2_MODEL)?;
        let graph = self.graph()?;
        let emb = import_embeddings(&self.require(artifacts::EMBEDDINGS, Stage::Embed)?)?;
        let dim = emb.dim();
        if s1.columns.len() != dim || s2.columns.len() < dim {
            return Err(Error::Data("stored models do not match the embedding dimension".into()));
        }
        let profiles = if s2.columns.len() > dim {
            Some(self.profiles()?.0)
        } else {
            None
        };

        let known: Vec<String> = users
            .iter()
            .filter(|u| graph.ids().index_of(u).is_some_and(|i| (i as usize) < emb.n_rows()))
            .cloned()
            .collect();
        let fused = fuse(&emb, graph.ids(), profiles.as_ref(), &known)?.features;
        let emb_cols: Vec<usize> = (0..dim).collect();
        let x1 = fused.values.select_columns(&emb_cols);
        let scores = s1.fitted.predict_scores(&x1)?;
        let routed = s1.fitted.predict(&x1)?;
        let x2: Matrix = fused.values.clone();
        let engaged = s2.fitted.predict(&x2)?;

        let mut by_user = std::collections::HashMap::new();
        for (r, u) in known.iter().enumerate() {
            let class = if routed[r] == 0 {
                BehaviorLabel::Disengaged
            } else {
                BehaviorLabel::ENGAGED[engaged[r]]
            };
            by_user.insert(u.as_str(), (class, scores.get(r, 1)));
        }
        let out: Vec<Prediction> = users
            .iter()
            .map(|u| match by_user.get(u.as_str()) {
                Some(&(class, score)) => Prediction {
                    user: u.clone(),
                    class: Some(class),
                    stage1_score: Some(score),
                },
                None => Prediction {
                    user: u.clone(),
                    class: None,
                    stage1_score: None,
                },
            })
            .collect();

        let mut w = csv::Writer::from_writer(BufWriter::new(error::create(&self.artifact(artifacts::PREDICTIONS))?));
        w.write_record(["user_id", "predicted_class", "stage1_score"])?;
        for p in &out {
            let class = p.class.map_or("unpredictable", |c| c.name());
            let score = p.stage1_score.map(|s| s.to_string()).unwrap_or_default();
            w.write_record([p.user.as_str(), class, &score])?;
        }
        w.flush()?;
        let unpredictable = out.iter().filter(|p| p.class.is_none()).count();
        if unpredictable > 0 {
            log::warn!("{unpredictable} user(s) have no embedding and were reported unpredictable");
        }
        Ok(out)
    }

    /// Flattens the stage reports into report.csv.
    pub fn report(&self) -> Result<()> {
        self.require(artifacts::STAGE1_REPORT, Stage::Stage1)?;
        self.require(artifacts::STAGE2_REPORT, Stage::Stage2)?;
        let s1: EvalReport = self.read_json(artifacts::STAGE1_REPORT)?;
        let s2: Stage2Report = self.read_json(artifacts::STAGE2_REPORT)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(error::create(&self.artifact(artifacts::REPORT))?));
        w.write_record(["stage", "model", "class", "metric", "value"])?;
        let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut emit = |stage: &str, r: &EvalReport| -> Result<()> {
            let mut row = |class: &str, metric: &str, value: String| {
                w.write_record([stage, r.model.as_str(), class, metric, &value])
            };
            row("", "accuracy", r.accuracy.to_string())?;
            row("", "weighted_f1", r.weighted_f1.to_string())?;
            if let Some(roc) = &r.roc {
                row("", "auc", roc.auc.to_string())?;
            }
            for c in &r.per_class {
                row(&c.class, "support", c.support.to_string())?;
                row(&c.class, "precision", fmt(c.precision))?;
                row(&c.class, "recall", fmt(c.recall))?;
                row(&c.class, "f1", fmt(c.f1))?;
            }
            Ok(())
        };
        emit("stage1", &s1)?;
        emit("stage2", &s2.model)?;
        for b in &s2.baselines {
            emit("stage2", b)?;
        }
        w.flush()?;
        Ok(())
    }
}

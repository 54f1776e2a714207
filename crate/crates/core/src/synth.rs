//! Synthetic follower graphs and share logs with planted behavior classes.
//!
//! Users are split evenly across the five classes. The follow graph is a
//! directed stochastic block model keyed by class. For every news pair a few
//! seed users share the misinformation and the refutation at the pair's start
//! time; exposures then spread to followers and each user reacts with the
//! script of its class:
//!
//! | class | script |
//! |---|---|
//! | malicious | share m once exposed to both |
//! | maybe_malicious | share f after exposure to f, then m once exposed to both |
//! | naive_self_corrector | share m after exposure to m, then f after exposure to f |
//! | informed_sharer | share f after exposure to f |
//! | disengaged | nothing |
//!
//! Every reaction waits a random delay of `1..=max_delay` seconds. With
//! probability `noise` a non-seed user follows the script of a uniformly
//! chosen other class for that pair.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{self, Error, Result};
use crate::ingest::{write_edges, write_events, write_profiles, Message, NewsId, ProfileRecord, ShareEvent};
use crate::labeler::BehaviorLabel;
use crate::ml::sub_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub users_per_class: usize,
    /// Users per class that never share anything. They are listed in
    /// `holdout.txt` so that a pipeline can predict them from network and
    /// profile features alone.
    pub holdout_per_class: usize,
    pub n_news_pairs: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub noise: f64,
    pub seeds_per_message: usize,
    pub max_delay: u64,
    pub start_time: u64,
    /// Gap between the start times of consecutive news pairs.
    pub pair_spacing: u64,
    /// Per-class offset of the log-normal profile means.
    pub profile_shift: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            users_per_class: 200,
            holdout_per_class: 0,
            n_news_pairs: 3,
            p_in: 0.05,
            p_out: 0.002,
            noise: 0.0,
            seeds_per_message: 10,
            max_delay: 600,
            start_time: 1_600_000_000,
            pair_spacing: 86_400,
            profile_shift: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.p_in > self.p_out && self.p_out >= 0.0 && self.p_in <= 1.0) {
            return fail(format!(
                "need 1 >= p_in > p_out >= 0, got p_in={} p_out={}",
                self.p_in, self.p_out
            ));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return fail(format!("noise must lie in [0, 0.5), got {}", self.noise));
        }
        if self.users_per_class == 0 || self.n_news_pairs == 0 || self.seeds_per_message == 0 {
            return fail(
                "users_per_class, n_news_pairs and seeds_per_message must be positive; \
                 otherwise nobody is ever exposed"
                    .into(),
            );
        }
        if self.holdout_per_class >= self.users_per_class {
            return fail("holdout_per_class must be below users_per_class".into());
        }
        if self.max_delay == 0 {
            return fail("max_delay must be at least 1".into());
        }
        let active = self.users_per_class - self.holdout_per_class;
        if 3 * active < 2 * self.seeds_per_message {
            return fail(format!(
                "{} seeds per message do not fit in the {} active users of the seeding classes",
                self.seeds_per_message,
                3 * active
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthRecord {
    pub user_id: String,
    pub class: BehaviorLabel,
    pub holdout: bool,
    /// News pairs for which the user was exposed to both messages.
    pub exposed_pairs: Vec<NewsId>,
}

/// The class a user actually acted out for one pair it was exposed to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthPair {
    pub user_id: String,
    pub news: NewsId,
    pub acted: BehaviorLabel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub edges: Vec<(String, String)>,
    pub events: Vec<ShareEvent>,
    pub profiles: Vec<ProfileRecord>,
    pub truth: Vec<TruthRecord>,
    pub truth_pairs: Vec<TruthPair>,
}

impl SynthData {
    pub fn holdout_users(&self) -> Vec<&str> {
        self.truth
            .iter()
            .filter(|t| t.holdout)
            .map(|t| t.user_id.as_str())
            .collect()
    }

    /// Writes edges.tsv, events.jsonl, profiles.csv, truth.csv,
    /// truth_pairs.csv and holdout.txt into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::File {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let mut edges = BufWriter::new(error::create(&dir.join("edges.tsv"))?);
        write_edges(&mut edges, &self.edges)?;
        edges.flush()?;
        let mut events = BufWriter::new(error::create(&dir.join("events.jsonl"))?);
        write_events(&mut events, &self.events)?;
        events.flush()?;
        let mut profiles = BufWriter::new(error::create(&dir.join("profiles.csv"))?);
        write_profiles(&mut profiles, &self.profiles)?;
        profiles.flush()?;
        let mut truth = BufWriter::new(error::create(&dir.join("truth.csv"))?);
        write_truth(&mut truth, &self.truth)?;
        truth.flush()?;

        let mut w = csv::Writer::from_writer(BufWriter::new(error::create(&dir.join("truth_pairs.csv"))?));
        w.write_record(["user_id", "news", "acted_class"])?;
        for p in &self.truth_pairs {
            w.write_record([p.user_id.as_str(), &p.news.to_string(), p.acted.name()])?;
        }
        w.flush()?;

        let mut h = BufWriter::new(error::create(&dir.join("holdout.txt"))?);
        for u in self.holdout_users() {
            writeln!(h, "{u}")?;
        }
        h.flush()?;
        Ok(())
    }
}

pub fn write_truth<W: Write>(w: W, truth: &[TruthRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["user_id", "class", "holdout", "exposed_pairs"])?;
    for t in truth {
        let pairs: Vec<String> = t.exposed_pairs.iter().map(|n| n.to_string()).collect();
        w.write_record([
            t.user_id.as_str(),
            t.class.name(),
            if t.holdout { "1" } else { "0" },
            &pairs.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth<R: Read>(r: R) -> Result<Vec<TruthRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 4 {
            return Err(Error::parse(
                "truth.csv",
                line,
                format!("expected 4 fields, got {}", rec.len()),
            ));
        }
        let class = rec[1]
            .parse()
            .map_err(|_| Error::parse("truth.csv", line, format!("unknown class {:?}", &rec[1])))?;
        let exposed_pairs = if rec[3].is_empty() {
            Vec::new()
        } else {
            rec[3]
                .split(';')
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::parse("truth.csv", line, format!("bad news id {s:?}")))
                })
                .collect::<Result<_>>()?
        };
        out.push(TruthRecord {
            user_id: rec[0].to_string(),
            class,
            holdout: &rec[2] == "1",
            exposed_pairs,
        });
    }
    Ok(out)
}

/// Reads one user id per line, skipping blank lines.
pub fn read_id_list<R: Read>(r: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() {
            out.push(id.to_string());
        }
    }
    Ok(out)
}

/// Directed stochastic block model over the given blocks of node indices.
/// Each ordered pair of distinct nodes becomes an edge with probability
/// `p_in` inside a block and `p_out` across blocks; candidates are skipped
/// geometrically so the cost is proportional to the number of edges.
pub fn sbm_edges<R: Rng>(blocks: &[Vec<u32>], p_in: f64, p_out: f64, rng: &mut R) -> Result<Vec<(u32, u32)>> {
    let mut edges = Vec::new();
    for (bi, src) in blocks.iter().enumerate() {
        for (bj, dst) in blocks.iter().enumerate() {
            let p = if bi == bj { p_in } else { p_out };
            if p <= 0.0 || src.is_empty() || dst.is_empty() {
                continue;
            }
            let geo = Geometric::new(p).map_err(|e| Error::Config(format!("edge probability {p}: {e}")))?;
            let total = src.len() as u64 * dst.len() as u64;
            let mut idx = geo.sample(rng);
            while idx < total {
                let a = src[(idx / dst.len() as u64) as usize];
                let b = dst[(idx % dst.len() as u64) as usize];
                if a != b {
                    edges.push((a, b));
                }
                idx = idx.saturating_add(1).saturating_add(geo.sample(rng));
            }
        }
    }
    Ok(edges)
}

/// Planted partition with `n_blocks` consecutive blocks of `block_size`
/// nodes. Returns the edges and the block of every node.
pub fn planted_partition(
    n_blocks: usize,
    block_size: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(Vec<(u32, u32)>, Vec<usize>)> {
    let blocks: Vec<Vec<u32>> = (0..n_blocks)
        .map(|b| ((b * block_size) as u32..((b + 1) * block_size) as u32).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = sbm_edges(&blocks, p_in, p_out, &mut rng)?;
    let membership = (0..n_blocks * block_size).map(|i| i / block_size).collect();
    Ok((edges, membership))
}

#[derive(Clone, Copy, Default)]
struct PairState {
    exp: [Option<u64>; 2],
    first: Option<u64>,
    stage: u8,
}

fn slot(msg: Message) -> usize {
    match msg {
        Message::Misinfo => 0,
        Message::Refutation => 1,
    }
}

struct Cascade<'a> {
    followers: &'a [Vec<u32>],
    acted: &'a [BehaviorLabel],
    state: Vec<PairState>,
    heap: BinaryHeap<Reverse<(u64, u64, u32, u8)>>,
    seq: u64,
    max_delay: u64,
}

impl Cascade<'_> {
    fn push(&mut self, time: u64, user: u32, msg: Message) {
        self.seq += 1;
        self.heap.push(Reverse((time, self.seq, user, slot(msg) as u8)));
    }

    fn react<R: Rng>(&mut self, u: u32, rng: &mut R) {
        let st = self.state[u as usize];
        let [em, ef] = st.exp;
        let mut delay = || rng.random_range(1..=self.max_delay);
        let mut plan: Vec<(u64, Message)> = Vec::new();
        let mut next = st;
        match self.acted[u as usize] {
            BehaviorLabel::Malicious => {
                if let (0, Some(m), Some(f)) = (st.stage, em, ef) {
                    plan.push((m.max(f) + delay(), Message::Misinfo));
                    next.stage = 1;
                }
            }
            BehaviorLabel::InformedSharer => {
                if let (0, Some(f)) = (st.stage, ef) {
                    plan.push((f + delay(), Message::Refutation));
                    next.stage = 1;
                }
            }
            BehaviorLabel::MaybeMalicious => {
                if let (0, Some(f)) = (st.stage, ef) {
                    let t = f + delay();
                    plan.push((t, Message::Refutation));
                    next.first = Some(t);
                    next.stage = 1;
                }
                if let (1, Some(m), Some(t)) = (next.stage, em, next.first) {
                    plan.push((m.max(t) + delay(), Message::Misinfo));
                    next.stage = 2;
                }
            }
            BehaviorLabel::NaiveSelfCorrector => {
                if let (0, Some(m)) = (st.stage, em) {
                    let t = m + delay();
                    plan.push((t, Message::Misinfo));
                    next.first = Some(t);
                    next.stage = 1;
                }
                if let (1, Some(f), Some(t)) = (next.stage, ef, next.first) {
                    plan.push((f.max(t) + delay(), Message::Refutation));
                    next.stage = 2;
                }
            }
            BehaviorLabel::Disengaged => {}
        }
        self.state[u as usize] = next;
        for (t, msg) in plan {
            self.push(t, u, msg);
        }
    }

    fn expose<R: Rng>(&mut self, u: u32, msg: Message, time: u64, rng: &mut R) {
        let e = &mut self.state[u as usize].exp[slot(msg)];
        if e.is_none() {
            *e = Some(time);
            self.react(u, rng);
        }
    }
}

fn draw_profile<R: Rng>(user_id: String, class: usize, cfg: &SynthConfig, rng: &mut R) -> Result<ProfileRecord> {
    let shift = cfg.profile_shift * (class as f64 - 2.0);
    let mut count = |mu: f64| -> Result<u64> {
        let d = LogNormal::new(mu + shift, 1.0).map_err(|e| Error::Config(e.to_string()))?;
        Ok(d.sample(rng).round() as u64)
    };
    let follower_count = count(5.0)?;
    let friend_count = count(5.5)?;
    let statuses_count = count(7.0)?;
    let listed_count = count(1.5)?;
    let verified = rng.random_bool(0.02);
    let protected = rng.random_bool(0.05);
    let age = LogNormal::new(6.5 + 0.5 * shift, 0.5).map_err(|e| Error::Config(e.to_string()))?;
    let age_secs = (age.sample(rng) * 86_400.0) as u64;
    Ok(ProfileRecord {
        user_id,
        follower_count,
        friend_count,
        statuses_count,
        listed_count,
        verified,
        protected,
        account_created_unix: cfg.start_time.saturating_sub(age_secs),
    })
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let n_classes = BehaviorLabel::ALL.len();
    let n = cfg.users_per_class * n_classes;
    let ids: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();

    let mut class_rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 0));
    let mut class_of: Vec<usize> = (0..n).map(|i| i / cfg.users_per_class).collect();
    class_of.shuffle(&mut class_rng);
    let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); n_classes];
    for (u, &c) in class_of.iter().enumerate() {
        blocks[c].push(u as u32);
    }
    let mut holdout = vec![false; n];
    for b in &blocks {
        for &u in &b[..cfg.holdout_per_class] {
            holdout[u as usize] = true;
        }
    }
    let planted: Vec<BehaviorLabel> = class_of.iter().map(|&c| BehaviorLabel::ALL[c]).collect();

    let mut graph_rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 1));
    let mut edge_idx = sbm_edges(&blocks, cfg.p_in, cfg.p_out, &mut graph_rng)?;
    edge_idx.sort_unstable();
    let mut followers: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(a, b) in &edge_idx {
        followers[b as usize].push(a);
    }

    let m_pool: Vec<u32> = (0..n as u32)
        .filter(|&u| {
            !holdout[u as usize]
                && matches!(
                    planted[u as usize],
                    BehaviorLabel::Malicious | BehaviorLabel::MaybeMalicious | BehaviorLabel::NaiveSelfCorrector
                )
        })
        .collect();
    let f_pool: Vec<u32> = (0..n as u32)
        .filter(|&u| {
            !holdout[u as usize]
                && matches!(
                    planted[u as usize],
                    BehaviorLabel::InformedSharer | BehaviorLabel::NaiveSelfCorrector | BehaviorLabel::MaybeMalicious
                )
        })
        .collect();

    let mut ev_rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 2));
    let mut events = Vec::new();
    let mut exposed_pairs: Vec<Vec<NewsId>> = vec![Vec::new(); n];
    let mut truth_pairs = Vec::new();
    for pair in 0..cfg.n_news_pairs {
        let news = pair as NewsId;
        let t0 = cfg.start_time + pair as u64 * cfg.pair_spacing;

        let m_seeds: Vec<u32> = m_pool
            .choose_multiple(&mut ev_rng, cfg.seeds_per_message)
            .copied()
            .collect();
        let f_candidates: Vec<u32> = f_pool.iter().copied().filter(|u| !m_seeds.contains(u)).collect();
        if f_candidates.len() < cfg.seeds_per_message {
            return Err(Error::Config("not enough users left to seed the refutation".into()));
        }
        let f_seeds: Vec<u32> = f_candidates
            .choose_multiple(&mut ev_rng, cfg.seeds_per_message)
            .copied()
            .collect();

        let mut acted = planted.clone();
        for u in 0..n {
            let roll: f64 = ev_rng.random();
            let is_seed = m_seeds.contains(&(u as u32)) || f_seeds.contains(&(u as u32));
            if holdout[u] {
                acted[u] = BehaviorLabel::Disengaged;
            } else if !is_seed && roll < cfg.noise {
                let others: Vec<BehaviorLabel> = BehaviorLabel::ALL.into_iter().filter(|&c| c != planted[u]).collect();
                acted[u] = *others.choose(&mut ev_rng).expect("four other classes");
            }
        }

        let mut sim = Cascade {
            followers: &followers,
            acted: &acted,
            state: vec![PairState::default(); n],
            heap: BinaryHeap::new(),
            seq: 0,
            max_delay: cfg.max_delay,
        };
        for (seeds, msg) in [(&m_seeds, Message::Misinfo), (&f_seeds, Message::Refutation)] {
            for &u in seeds.iter() {
                sim.state[u as usize].exp[slot(msg)] = Some(t0);
                sim.push(t0, u, msg);
            }
        }
        for &u in m_seeds.iter().chain(&f_seeds) {
            sim.react(u, &mut ev_rng);
        }

        let mut sourced = [false; 2];
        while let Some(Reverse((time, _, u, s))) = sim.heap.pop() {
            let msg = if s == 0 { Message::Misinfo } else { Message::Refutation };
            let source = !sourced[s as usize];
            sourced[s as usize] = true;
            events.push(ShareEvent {
                user: ids[u as usize].clone(),
                news,
                msg,
                time,
                source,
            });
            for &v in &sim.followers[u as usize] {
                sim.expose(v, msg, time, &mut ev_rng);
            }
        }

        for u in 0..n {
            if let [Some(_), Some(_)] = sim.state[u].exp {
                exposed_pairs[u].push(news);
                truth_pairs.push(TruthPair {
                    user_id: ids[u].clone(),
                    news,
                    acted: acted[u],
                });
            }
        }
    }

    let mut prof_rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 3));
    let profiles = (0..n)
        .map(|u| draw_profile(ids[u].clone(), class_of[u], cfg, &mut prof_rng))
        .collect::<Result<Vec<_>>>()?;

    let truth = (0..n)
        .map(|u| TruthRecord {
            user_id: ids[u].clone(),
            class: planted[u],
            holdout: holdout[u],
            exposed_pairs: std::mem::take(&mut exposed_pairs[u]),
        })
        .collect();
    let edges = edge_idx
        .iter()
        .map(|&(a, b)| (ids[a as usize].clone(), ids[b as usize].clone()))
        .collect();

    Ok(SynthData {
        edges,
        events,
        profiles,
        truth,
        truth_pairs,
    })
}

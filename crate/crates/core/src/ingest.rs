//! Input parsing and exposure derivation.
//!
//! Three input files feed the pipeline:
//!
//! - `edges.tsv`: `follower<TAB>followee`, one edge per line. A row `a b`
//!   means `a` follows `b`, so shares by `b` expose `a`.
//! - `profiles.csv`: header `user_id,follower_count,friend_count,
//!   statuses_count,listed_count,verified,protected,account_created_unix`.
//! - `events.jsonl`: one object per line with keys `user`, `news`, `msg`
//!   (`"m"` or `"f"`), `time` and `source`.
//!
//! Exposure times follow three rules: every follower of a sharer is exposed
//! at the share time, the earliest such time wins, and a user who shares a
//! message before any followee does is exposed at their own first share.
//! All three collapse to a minimum over candidate times, which makes the
//! result independent of event order.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{self, Error, Result};
use crate::graph::FollowGraph;

pub type NewsId = u32;

/// Which half of a news pair a record refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Message {
    /// The misinformation tweet.
    #[serde(rename = "m")]
    Misinfo,
    /// The refutation tweet.
    #[serde(rename = "f")]
    Refutation,
}

impl Message {
    pub fn as_str(self) -> &'static str {
        match self {
            Message::Misinfo => "m",
            Message::Refutation => "f",
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One tweet or retweet of a message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareEvent {
    #[serde(deserialize_with = "opaque_id")]
    pub user: String,
    pub news: NewsId,
    pub msg: Message,
    pub time: u64,
    #[serde(default)]
    pub source: bool,
}

/// Accepts user ids written either as JSON strings or integers.
fn opaque_id<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Str(String),
        Int(i64),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::Str(s) => s,
        Raw::Int(i) => i.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExposureEvent {
    pub user: String,
    pub news: NewsId,
    pub msg: Message,
    pub time: u64,
}

/// Deduplicated edge list with compact ids in first-seen order.
#[derive(Clone, Debug, Default)]
pub struct EdgeList {
    pub ids: Vec<String>,
    pub edges: Vec<(u32, u32)>,
    pub duplicates: usize,
}

impl EdgeList {
    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    /// Builds an edge list from string pairs, interning ids in first-seen order.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut b = EdgeListBuilder::default();
        for (a, c) in pairs {
            b.push(a.as_ref(), c.as_ref());
        }
        b.finish()
    }
}

#[derive(Default)]
struct EdgeListBuilder {
    ids: Vec<String>,
    index: HashMap<String, u32>,
    seen: std::collections::HashSet<(u32, u32)>,
    edges: Vec<(u32, u32)>,
    duplicates: usize,
}

impl EdgeListBuilder {
    fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len() as u32;
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        i
    }

    fn push(&mut self, follower: &str, followee: &str) {
        let a = self.intern(follower);
        let b = self.intern(followee);
        if self.seen.insert((a, b)) {
            self.edges.push((a, b));
        } else {
            self.duplicates += 1;
        }
    }

    fn finish(self) -> EdgeList {
        EdgeList {
            ids: self.ids,
            edges: self.edges,
            duplicates: self.duplicates,
        }
    }
}

pub fn load_edges(path: &Path) -> Result<EdgeList> {
    let file = error::open(path)?;
    read_edges(file, &path.display().to_string())
}

/// Parses a two-column TAB-separated edge list. Blank lines are skipped.
pub fn read_edges<R: Read>(reader: R, source_name: &str) -> Result<EdgeList> {
    let mut b = EdgeListBuilder::default();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 || cols.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::parse(
                source_name,
                i + 1,
                format!("expected `follower<TAB>followee`, got {} column(s)", cols.len()),
            ));
        }
        b.push(cols[0].trim(), cols[1].trim());
    }
    if b.edges.is_empty() {
        return Err(Error::EmptyInput(format!("{source_name}: no edges")));
    }
    Ok(b.finish())
}

pub fn write_edges<W: Write>(mut w: W, edges: &[(String, String)]) -> Result<()> {
    for (a, b) in edges {
        writeln!(w, "{a}\t{b}")?;
    }
    Ok(())
}

pub fn load_events(path: &Path) -> Result<Vec<ShareEvent>> {
    let file = error::open(path)?;
    read_events(file, &path.display().to_string())
}

pub fn read_events<R: Read>(reader: R, source_name: &str) -> Result<Vec<ShareEvent>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: ShareEvent =
            serde_json::from_str(&line).map_err(|e| Error::parse(source_name, i + 1, e.to_string()))?;
        out.push(ev);
    }
    Ok(out)
}

pub fn write_events<W: Write>(mut w: W, events: &[ShareEvent]) -> Result<()> {
    for ev in events {
        serde_json::to_writer(&mut w, ev)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// One row of `profiles.csv`, as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub user_id: String,
    pub follower_count: u64,
    pub friend_count: u64,
    pub statuses_count: u64,
    pub listed_count: u64,
    #[serde(deserialize_with = "flag", serialize_with = "flag_out")]
    pub verified: bool,
    #[serde(deserialize_with = "flag", serialize_with = "flag_out")]
    pub protected: bool,
    pub account_created_unix: u64,
}

fn flag<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" | "" => Ok(false),
        other => Err(serde::de::Error::custom(format!("not a boolean flag: {other:?}"))),
    }
}

fn flag_out<S: serde::Serializer>(v: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

/// Profile features in model order. Counts stay as reals so they can be
/// fed straight into feature matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct UserProfile {
    pub follower_count: f64,
    pub friend_count: f64,
    pub statuses_count: f64,
    pub listed_count: f64,
    pub verified: f64,
    pub protected: f64,
    pub account_age_days: f64,
}

pub const PROFILE_COLUMNS: [&str; 7] = [
    "follower_count",
    "friend_count",
    "statuses_count",
    "listed_count",
    "verified",
    "protected",
    "account_age_days",
];

impl UserProfile {
    /// Profile used for users missing from the profile table.
    pub fn imputed() -> Self {
        UserProfile {
            follower_count: 0.0,
            friend_count: 0.0,
            statuses_count: 0.0,
            listed_count: 0.0,
            verified: 0.0,
            protected: 0.0,
            account_age_days: 0.0,
        }
    }

    pub fn as_array(&self) -> [f64; 7] {
        [
            self.follower_count,
            self.friend_count,
            self.statuses_count,
            self.listed_count,
            self.verified,
            self.protected,
            self.account_age_days,
        ]
    }
}

impl ProfileRecord {
    /// Account age is measured against `reference_unix` and clamped at zero.
    pub fn to_profile(&self, reference_unix: u64) -> UserProfile {
        let age_secs = reference_unix.saturating_sub(self.account_created_unix);
        UserProfile {
            follower_count: self.follower_count as f64,
            friend_count: self.friend_count as f64,
            statuses_count: self.statuses_count as f64,
            listed_count: self.listed_count as f64,
            verified: f64::from(u8::from(self.verified)),
            protected: f64::from(u8::from(self.protected)),
            account_age_days: age_secs as f64 / 86_400.0,
        }
    }
}

const PROFILE_HEADER: [&str; 8] = [
    "user_id",
    "follower_count",
    "friend_count",
    "statuses_count",
    "listed_count",
    "verified",
    "protected",
    "account_created_unix",
];

pub fn load_profiles(path: &Path) -> Result<Vec<ProfileRecord>> {
    let file = error::open(path)?;
    read_profiles(file, &path.display().to_string())
}

pub fn read_profiles<R: Read>(reader: R, source_name: &str) -> Result<Vec<ProfileRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != PROFILE_HEADER {
        return Err(Error::parse(
            source_name,
            1,
            format!("expected header {}, got {}", PROFILE_HEADER.join(","), header.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        let rec: ProfileRecord = rec.map_err(|e| Error::parse(source_name, i + 2, e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_profiles<W: Write>(w: W, profiles: &[ProfileRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for p in profiles {
        wtr.serialize(p)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Output of [`derive_exposures`].
#[derive(Clone, Debug, Default)]
pub struct ExposureSet {
    /// Sorted by `(user, news, msg)`.
    pub exposures: Vec<ExposureEvent>,
    /// Distinct sharers absent from the graph. They still receive their own
    /// exposure but cannot expose anyone.
    pub unknown_sharers: usize,
    pub unknown_share_events: usize,
}

impl ExposureSet {
    pub fn lookup(&self) -> HashMap<(&str, NewsId, Message), u64> {
        self.exposures
            .iter()
            .map(|e| ((e.user.as_str(), e.news, e.msg), e.time))
            .collect()
    }
}

pub fn derive_exposures(events: &[ShareEvent], graph: &FollowGraph) -> ExposureSet {
    let n = graph.n_nodes();
    // Users outside the graph get ids n.. so one u32 key covers everyone.
    let mut extra: HashMap<&str, u32> = HashMap::new();
    let mut extra_ids: Vec<&str> = Vec::new();
    let mut unknown_share_events = 0usize;

    let mut partitions: HashMap<(NewsId, Message), Vec<(u32, u64)>> = HashMap::new();
    for ev in events {
        let key = match graph.ids().index_of(&ev.user) {
            Some(i) => i,
            None => {
                unknown_share_events += 1;
                *extra.entry(ev.user.as_str()).or_insert_with(|| {
                    extra_ids.push(ev.user.as_str());
                    (n + extra_ids.len() - 1) as u32
                })
            }
        };
        partitions.entry((ev.news, ev.msg)).or_default().push((key, ev.time));
    }
    if !extra_ids.is_empty() {
        log::warn!(
            "{} share events by {} users absent from the follow graph",
            unknown_share_events,
            extra_ids.len()
        );
    }

    let mut parts: Vec<((NewsId, Message), Vec<(u32, u64)>)> = partitions.into_iter().collect();
    parts.sort_by_key(|(k, _)| *k);

    let per_part: Vec<Vec<ExposureEvent>> = parts
        .par_iter()
        .map(|((news, msg), shares)| {
            let mut best: HashMap<u32, u64> = HashMap::new();
            let mut offer = |u: u32, t: u64| {
                best.entry(u).and_modify(|b| *b = (*b).min(t)).or_insert(t);
            };
            for &(sharer, t) in shares {
                offer(sharer, t);
                if (sharer as usize) < n {
                    for &f in graph.followers(sharer as usize) {
                        offer(f, t);
                    }
                }
            }
            best.into_iter()
                .map(|(u, time)| {
                    let u = u as usize;
                    let user = if u < n {
                        graph.ids().id(u).to_string()
                    } else {
                        extra_ids[u - n].to_string()
                    };
                    ExposureEvent {
                        user,
                        news: *news,
                        msg: *msg,
                        time,
                    }
                })
                .collect()
        })
        .collect();

    let mut exposures: Vec<ExposureEvent> = per_part.into_iter().flatten().collect();
    exposures.sort();
    ExposureSet {
        exposures,
        unknown_sharers: extra_ids.len(),
        unknown_share_events,
    }
}

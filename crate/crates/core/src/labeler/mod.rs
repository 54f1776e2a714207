//! Behavior labeling.
//!
//! A user is eligible for a news pair once exposed to both the
//! misinformation and its refutation. Their label for that pair comes from
//! the shares they made, read against the exposure times:
//!
//! 1. no shares: `disengaged`
//! 2. only refutation shares: `informed_sharer`
//! 3. only misinformation shares: `malicious` if any of them came after both
//!    exposures, otherwise `maybe_malicious`
//! 4. both: `naive_self_corrector` when the last share is the refutation,
//!    `maybe_malicious` when it is the misinformation
//!
//! Labels from several pairs are combined by dropping `disengaged` entries
//! and taking the upper median of the remaining Likert codes.

mod timeline;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ExposureSet, NewsId, ShareEvent};

pub use timeline::{build_timelines, EventKind, TimelineEvent, UserTimeline};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorLabel {
    Malicious,
    MaybeMalicious,
    NaiveSelfCorrector,
    InformedSharer,
    Disengaged,
}

impl BehaviorLabel {
    pub const ALL: [BehaviorLabel; 5] = [
        BehaviorLabel::Malicious,
        BehaviorLabel::MaybeMalicious,
        BehaviorLabel::NaiveSelfCorrector,
        BehaviorLabel::InformedSharer,
        BehaviorLabel::Disengaged,
    ];

    /// The four classes that carry a Likert code, in code order.
    pub const ENGAGED: [BehaviorLabel; 4] = [
        BehaviorLabel::Malicious,
        BehaviorLabel::MaybeMalicious,
        BehaviorLabel::NaiveSelfCorrector,
        BehaviorLabel::InformedSharer,
    ];

    /// Likert code 1..=4; `disengaged` has none.
    pub fn code(self) -> Option<u8> {
        match self {
            BehaviorLabel::Malicious => Some(1),
            BehaviorLabel::MaybeMalicious => Some(2),
            BehaviorLabel::NaiveSelfCorrector => Some(3),
            BehaviorLabel::InformedSharer => Some(4),
            BehaviorLabel::Disengaged => None,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(BehaviorLabel::Malicious),
            2 => Some(BehaviorLabel::MaybeMalicious),
            3 => Some(BehaviorLabel::NaiveSelfCorrector),
            4 => Some(BehaviorLabel::InformedSharer),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BehaviorLabel::Malicious => "malicious",
            BehaviorLabel::MaybeMalicious => "maybe_malicious",
            BehaviorLabel::NaiveSelfCorrector => "naive_self_corrector",
            BehaviorLabel::InformedSharer => "informed_sharer",
            BehaviorLabel::Disengaged => "disengaged",
        }
    }
}

impl fmt::Display for BehaviorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BehaviorLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BehaviorLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Data(format!("unknown behavior label {s:?}")))
    }
}

/// Result of labeling one timeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairOutcome {
    Ineligible,
    Labeled(BehaviorLabel),
}

/// Applies the labeling rule to one user's timeline for one news pair.
///
/// Events must already be in timeline order (see [`EventKind`] for the
/// tie-break at equal timestamps).
pub fn label_pair(timeline: &UserTimeline) -> Result<PairOutcome> {
    let mut seen_m = false;
    let mut seen_f = false;
    let mut shared_m = false;
    let mut shared_f = false;
    let mut m_after_both = false;
    let mut last_share = None;

    for ev in &timeline.events {
        match ev.kind {
            EventKind::ExposeM => seen_m = true,
            EventKind::ExposeF => seen_f = true,
            EventKind::ShareM => {
                if !seen_m {
                    return Err(unexposed(timeline, ev));
                }
                shared_m = true;
                m_after_both |= seen_f;
                last_share = Some(EventKind::ShareM);
            }
            EventKind::ShareF => {
                if !seen_f {
                    return Err(unexposed(timeline, ev));
                }
                shared_f = true;
                last_share = Some(EventKind::ShareF);
            }
        }
    }

    if !(seen_m && seen_f) {
        return Ok(PairOutcome::Ineligible);
    }
    let label = match (shared_m, shared_f) {
        (false, false) => BehaviorLabel::Disengaged,
        (false, true) => BehaviorLabel::InformedSharer,
        (true, false) if m_after_both => BehaviorLabel::Malicious,
        (true, false) => BehaviorLabel::MaybeMalicious,
        (true, true) => match last_share {
            Some(EventKind::ShareF) => BehaviorLabel::NaiveSelfCorrector,
            _ => BehaviorLabel::MaybeMalicious,
        },
    };
    Ok(PairOutcome::Labeled(label))
}

fn unexposed(timeline: &UserTimeline, ev: &TimelineEvent) -> Error {
    Error::Invariant(format!(
        "user {} news {}: {:?} at t={} precedes its exposure",
        timeline.user, timeline.news, ev.kind, ev.time
    ))
}

fn engaged_codes(labels: &[BehaviorLabel]) -> Result<Option<Vec<u8>>> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("cannot aggregate an empty label list".into()));
    }
    let mut codes: Vec<u8> = labels.iter().filter_map(|l| l.code()).collect();
    if codes.is_empty() {
        return Ok(None);
    }
    codes.sort_unstable();
    Ok(Some(codes))
}

/// Combines several per-pair labels into one: `disengaged` only if every
/// label is, otherwise the upper median of the remaining codes.
pub fn aggregate_labels(labels: &[BehaviorLabel]) -> Result<BehaviorLabel> {
    Ok(match engaged_codes(labels)? {
        None => BehaviorLabel::Disengaged,
        Some(codes) => BehaviorLabel::from_code(codes[codes.len() / 2]).expect("valid code"),
    })
}

/// Alternative aggregation by the rounded-up mean of the codes. Kept so the
/// median/mean disagreement can be reported on any corpus.
pub fn aggregate_labels_mean(labels: &[BehaviorLabel]) -> Result<BehaviorLabel> {
    Ok(match engaged_codes(labels)? {
        None => BehaviorLabel::Disengaged,
        Some(codes) => {
            let sum: usize = codes.iter().map(|&c| c as usize).sum();
            let mean_up = sum.div_ceil(codes.len());
            BehaviorLabel::from_code(mean_up as u8).expect("valid code")
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledUser {
    pub user: String,
    pub per_pair: Vec<(NewsId, BehaviorLabel)>,
    pub final_label: BehaviorLabel,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelReport {
    pub labeled_users: usize,
    pub class_counts: BTreeMap<String, usize>,
    pub multilabel_users: usize,
    /// Multilabel users whose final class would change under mean aggregation.
    pub mean_median_disagreements: usize,
    /// Timelines where both exposures share a timestamp.
    pub simultaneous_exposures: usize,
    pub ineligible_timelines: usize,
}

#[derive(Clone, Debug, Default)]
pub struct LabelCorpus {
    pub users: Vec<LabeledUser>,
    pub report: LabelReport,
}

/// Labels every user exposed to at least one full pair.
///
/// `pairs` restricts labeling to the given news ids; `None` uses all of them.
pub fn label_corpus(exposures: &ExposureSet, shares: &[ShareEvent], pairs: Option<&[NewsId]>) -> Result<LabelCorpus> {
    let timelines = build_timelines(exposures, shares, pairs)?;
    let mut report = LabelReport::default();
    let mut per_user: BTreeMap<&str, Vec<(NewsId, BehaviorLabel)>> = BTreeMap::new();
    for tl in &timelines {
        match label_pair(tl)? {
            PairOutcome::Ineligible => report.ineligible_timelines += 1,
            PairOutcome::Labeled(l) => {
                if tl.simultaneous_exposure() {
                    report.simultaneous_exposures += 1;
                }
                per_user.entry(tl.user.as_str()).or_default().push((tl.news, l));
            }
        }
    }

    let mut users = Vec::with_capacity(per_user.len());
    for (user, per_pair) in per_user {
        let labels: Vec<BehaviorLabel> = per_pair.iter().map(|(_, l)| *l).collect();
        let final_label = aggregate_labels(&labels)?;
        if labels.len() > 1 {
            report.multilabel_users += 1;
            if aggregate_labels_mean(&labels)? != final_label {
                report.mean_median_disagreements += 1;
            }
        }
        users.push(LabeledUser {
            user: user.to_string(),
            per_pair,
            final_label,
        });
    }

    for l in BehaviorLabel::ALL {
        report.class_counts.insert(l.name().to_string(), 0);
    }
    for u in &users {
        *report.class_counts.get_mut(u.final_label.name()).unwrap() += 1;
    }
    report.labeled_users = users.len();
    if report.simultaneous_exposures > 0 {
        log::warn!(
            "{} labeled timeline(s) had simultaneous m/f exposures (ordered m first)",
            report.simultaneous_exposures
        );
    }
    Ok(LabelCorpus { users, report })
}

#[derive(Serialize, Deserialize)]
struct LabelRow {
    user_id: String,
    final_label: BehaviorLabel,
    n_pairs: usize,
    per_pair_labels: String,
}

/// Writes `labels.csv`: `user_id,final_label,n_pairs,per_pair_labels`, the
/// last column holding `news:label` entries joined by `;`.
pub fn write_labels<W: Write>(w: W, users: &[LabeledUser]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for u in users {
        let per_pair_labels = u
            .per_pair
            .iter()
            .map(|(n, l)| format!("{n}:{l}"))
            .collect::<Vec<_>>()
            .join(";");
        wtr.serialize(LabelRow {
            user_id: u.user.clone(),
            final_label: u.final_label,
            n_pairs: u.per_pair.len(),
            per_pair_labels,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_labels<R: Read>(r: R) -> Result<Vec<LabeledUser>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<LabelRow>().enumerate() {
        let row = row.map_err(|e| Error::parse("labels.csv", i + 2, e.to_string()))?;
        let mut per_pair = Vec::new();
        for part in row.per_pair_labels.split(';').filter(|p| !p.is_empty()) {
            let (n, l) = part
                .split_once(':')
                .ok_or_else(|| Error::parse("labels.csv", i + 2, format!("bad pair entry {part:?}")))?;
            let n: NewsId = n
                .parse()
                .map_err(|_| Error::parse("labels.csv", i + 2, format!("bad news id {n:?}")))?;
            per_pair.push((n, l.parse()?));
        }
        out.push(LabeledUser {
            user: row.user_id,
            per_pair,
            final_label: row.final_label,
        });
    }
    Ok(out)
}

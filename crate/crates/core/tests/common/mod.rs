//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use spreadlab::ingest::{Message, NewsId, ShareEvent};
use spreadlab::labeler::{BehaviorLabel, EventKind, TimelineEvent, UserTimeline};
use spreadlab::synth::TruthPair;

/// Explicit transcription of the behavior state diagram, states `A`..`U`,
/// plus self-loops and onward transitions for the states the diagram leaves
/// open.
pub mod diagram {
    use super::*;
    use EventKind::{ExposeF as XF, ExposeM as XM, ShareF as SF, ShareM as SM};

    pub fn step(state: char, ev: EventKind) -> Option<char> {
        let next = match (state, ev) {
            ('A', XM) => 'B',
            ('A', XF) => 'J',
            ('B', SM) => 'C',
            ('B', XF) => 'G',
            ('C', XF) => 'D',
            ('C', SM) => 'C',
            ('D', SF) => 'E',
            ('D', SM) => 'F',
            ('G', SF) => 'H',
            ('G', SM) => 'I',
            ('H', SM) => 'S',
            ('H', SF) => 'H',
            ('I', SF) => 'T',
            ('I', SM) => 'I',
            ('J', SF) => 'K',
            ('J', XM) => 'O',
            ('K', XM) => 'L',
            ('K', SF) => 'K',
            ('L', SF) => 'N',
            ('L', SM) => 'M',
            ('O', SM) => 'P',
            ('O', SF) => 'Q',
            ('Q', SM) => 'U',
            ('Q', SF) => 'Q',
            ('P', SF) => 'R',
            ('P', SM) => 'P',
            ('E', SF) => 'E',
            ('E', SM) => 'S',
            ('F', SM) => 'F',
            ('F', SF) => 'T',
            ('S', SF) => 'T',
            ('S', SM) => 'S',
            ('T', SM) => 'S',
            ('T', SF) => 'T',
            ('M', SM) => 'M',
            ('M', SF) => 'R',
            ('N', SF) => 'N',
            ('N', SM) => 'M',
            ('R', SF) => 'R',
            ('R', SM) => 'U',
            ('U', SF) => 'R',
            ('U', SM) => 'U',
            _ => return None,
        };
        Some(next)
    }

    /// Class of a state; `None` before both exposures.
    pub fn class_of(state: char) -> Option<BehaviorLabel> {
        use BehaviorLabel::*;
        match state {
            'A' | 'B' | 'C' | 'J' | 'K' => None,
            'G' | 'O' => Some(Disengaged),
            'F' | 'I' | 'P' => Some(Malicious),
            'D' | 'M' | 'S' | 'U' => Some(MaybeMalicious),
            'E' | 'T' | 'R' => Some(NaiveSelfCorrector),
            'H' | 'L' | 'N' | 'Q' => Some(InformedSharer),
            other => panic!("no state {other}"),
        }
    }

    /// Final state after the sequence, or `None` if some event has no
    /// transition.
    pub fn walk(seq: &[EventKind]) -> Option<char> {
        seq.iter().try_fold('A', |s, &e| step(s, e))
    }

    /// Events that realize a path of state letters.
    pub fn events_for_path(path: &str) -> Vec<EventKind> {
        let states: Vec<char> = path.chars().collect();
        states
            .windows(2)
            .map(|w| {
                [XM, XF, SM, SF]
                    .into_iter()
                    .find(|&e| step(w[0], e) == Some(w[1]))
                    .unwrap_or_else(|| panic!("no transition {} -> {}", w[0], w[1]))
            })
            .collect()
    }

    /// Every path spelled out in the class definitions, with its class.
    pub const LISTED_PATHS: [(&str, BehaviorLabel); 16] = [
        ("ABGI", BehaviorLabel::Malicious),
        ("AJOP", BehaviorLabel::Malicious),
        ("ABCDF", BehaviorLabel::Malicious),
        ("ABCD", BehaviorLabel::MaybeMalicious),
        ("ABGHS", BehaviorLabel::MaybeMalicious),
        ("AJKLM", BehaviorLabel::MaybeMalicious),
        ("AJOQU", BehaviorLabel::MaybeMalicious),
        ("ABCDE", BehaviorLabel::NaiveSelfCorrector),
        ("ABGIT", BehaviorLabel::NaiveSelfCorrector),
        ("AJOPR", BehaviorLabel::NaiveSelfCorrector),
        ("ABGH", BehaviorLabel::InformedSharer),
        ("AJOQ", BehaviorLabel::InformedSharer),
        ("AJKL", BehaviorLabel::InformedSharer),
        ("AJKLN", BehaviorLabel::InformedSharer),
        ("ABG", BehaviorLabel::Disengaged),
        ("AJO", BehaviorLabel::Disengaged),
    ];
}

/// All sequences of length `1..=max_len` in which each exposure occurs at
/// most once and every share follows its exposure.
pub fn valid_sequences(max_len: usize) -> Vec<Vec<EventKind>> {
    fn grow(cur: &mut Vec<EventKind>, max_len: usize, out: &mut Vec<Vec<EventKind>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == max_len {
            return;
        }
        let has = |k| cur.contains(&k);
        let options = [
            (EventKind::ExposeM, !has(EventKind::ExposeM)),
            (EventKind::ExposeF, !has(EventKind::ExposeF)),
            (EventKind::ShareM, has(EventKind::ExposeM)),
            (EventKind::ShareF, has(EventKind::ExposeF)),
        ];
        for (k, ok) in options {
            if ok {
                cur.push(k);
                grow(cur, max_len, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), max_len, &mut out);
    out
}

/// Timeline with strictly increasing timestamps.
pub fn timeline(seq: &[EventKind]) -> UserTimeline {
    UserTimeline {
        user: "u".into(),
        news: 0,
        events: seq
            .iter()
            .enumerate()
            .map(|(i, &kind)| TimelineEvent {
                time: 10 * i as u64,
                kind,
            })
            .collect(),
    }
}

/// Upper median by counting: the smallest code `v` with more than half of
/// the codes at or below `v`.
pub fn brute_aggregate(labels: &[BehaviorLabel]) -> BehaviorLabel {
    let codes: Vec<u8> = labels.iter().filter_map(|l| l.code()).collect();
    if codes.is_empty() {
        return BehaviorLabel::Disengaged;
    }
    for v in 1..=4u8 {
        let at_most = codes.iter().filter(|&&c| c <= v).count();
        if 2 * at_most > codes.len() {
            return BehaviorLabel::from_code(v).unwrap();
        }
    }
    unreachable!()
}

/// Exposure times by direct rule application: for every share, the sharer
/// and every follower of the sharer are offered the share time; the minimum
/// offer wins. `edges` are `(follower, followee)` pairs.
pub fn brute_exposures(events: &[ShareEvent], edges: &[(String, String)]) -> BTreeMap<(String, NewsId, Message), u64> {
    let mut out: BTreeMap<(String, NewsId, Message), u64> = BTreeMap::new();
    let mut offer = |u: &str, e: &ShareEvent| {
        let slot = out.entry((u.to_string(), e.news, e.msg)).or_insert(u64::MAX);
        *slot = (*slot).min(e.time);
    };
    for e in events {
        offer(&e.user, e);
        for (a, b) in edges {
            if *b == e.user && a != b {
                offer(a, e);
            }
        }
    }
    out
}

/// Central finite-difference gradient of `f` at `x`.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let up = f(&xp);
            xp[i] = orig - h;
            let down = f(&xp);
            xp[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// AUC as the probability that a random positive outscores a random
/// negative, ties counting one half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Per-class F1 from raw counts; `None` when precision or recall is undefined.
pub fn f1_from_counts(tp: usize, predicted: usize, support: usize) -> Option<f64> {
    if predicted == 0 || support == 0 {
        return None;
    }
    let p = tp as f64 / predicted as f64;
    let r = tp as f64 / support as f64;
    Some(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
}

/// Final labels implied by per-pair ground truth.
pub fn truth_finals(pairs: &[TruthPair]) -> HashMap<String, BehaviorLabel> {
    let mut by_user: HashMap<String, Vec<BehaviorLabel>> = HashMap::new();
    for p in pairs {
        by_user.entry(p.user_id.clone()).or_default().push(p.acted);
    }
    by_user
        .into_iter()
        .map(|(u, ls)| {
            let l = brute_aggregate(&ls);
            (u, l)
        })
        .collect()
}

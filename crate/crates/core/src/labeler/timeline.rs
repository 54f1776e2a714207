use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::ingest::{ExposureSet, Message, NewsId, ShareEvent};

/// Timeline event kinds. The declaration order is the tie-break at equal
/// timestamps: exposures before shares, misinformation before refutation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    ExposeM,
    ExposeF,
    ShareM,
    ShareF,
}

impl EventKind {
    pub fn exposure(msg: Message) -> Self {
        match msg {
            Message::Misinfo => EventKind::ExposeM,
            Message::Refutation => EventKind::ExposeF,
        }
    }

    pub fn share(msg: Message) -> Self {
        match msg {
            Message::Misinfo => EventKind::ShareM,
            Message::Refutation => EventKind::ShareF,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TimelineEvent {
    pub time: u64,
    pub kind: EventKind,
}

/// All exposures and shares of one user for one news pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserTimeline {
    pub user: String,
    pub news: NewsId,
    pub events: Vec<TimelineEvent>,
}

impl UserTimeline {
    pub fn simultaneous_exposure(&self) -> bool {
        let t = |k| self.events.iter().find(|e| e.kind == k).map(|e| e.time);
        matches!((t(EventKind::ExposeM), t(EventKind::ExposeF)), (Some(a), Some(b)) if a == b)
    }
}

/// Merges exposures and shares into per-(user, news) timelines ordered by
/// `(time, kind)`. Exact duplicate share records collapse into one.
pub fn build_timelines(
    exposures: &ExposureSet,
    shares: &[ShareEvent],
    pairs: Option<&[NewsId]>,
) -> Result<Vec<UserTimeline>> {
    let keep: Option<HashSet<NewsId>> = pairs.map(|p| p.iter().copied().collect());
    let wanted = |n: NewsId| keep.as_ref().is_none_or(|k| k.contains(&n));

    let mut map: BTreeMap<(&str, NewsId), Vec<TimelineEvent>> = BTreeMap::new();
    for e in exposures.exposures.iter().filter(|e| wanted(e.news)) {
        let events = map.entry((e.user.as_str(), e.news)).or_default();
        let kind = EventKind::exposure(e.msg);
        if events.iter().any(|x| x.kind == kind) {
            return Err(Error::Invariant(format!(
                "user {} news {} has two {:?} exposures",
                e.user, e.news, kind
            )));
        }
        events.push(TimelineEvent { time: e.time, kind });
    }
    for s in shares.iter().filter(|s| wanted(s.news)) {
        map.entry((s.user.as_str(), s.news)).or_default().push(TimelineEvent {
            time: s.time,
            kind: EventKind::share(s.msg),
        });
    }
    Ok(map
        .into_iter()
        .map(|((user, news), mut events)| {
            events.sort_unstable();
            events.dedup();
            UserTimeline {
                user: user.to_string(),
                news,
                events,
            }
        })
        .collect())
}

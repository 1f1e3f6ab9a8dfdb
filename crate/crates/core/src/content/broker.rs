//! Master-vehicle broker: topics, retained metadata, subscriptions.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::metadata::Metadata;
use crate::economics::SubscriberGroup;
use crate::error::{Result, SpadError};
use crate::model::{CavId, ContentId, TimeSlot, TopicId};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topic {
    pub id: TopicId,
    pub publishers: BTreeSet<CavId>,
    pub subscribers: BTreeSet<CavId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Subscription {
    pub subscriber_id: CavId,
    pub content_id: ContentId,
    pub prefers_raw: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetainedMetadata {
    pub content_id: ContentId,
    pub publisher_id: CavId,
    pub meta: Metadata,
    pub publish_slot: u64,
    pub bytes: u64,
    seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrokerState {
    pub topics: BTreeMap<TopicId, Topic>,
    pub metadata_window: BTreeMap<TopicId, VecDeque<RetainedMetadata>>,
    pub subscriptions: BTreeMap<(CavId, ContentId), Subscription>,
    pub groups: BTreeMap<ContentId, SubscriberGroup>,
    pub retention_window_slots: u64,
    pub buffer_bytes: u64,
    retained_bytes: u64,
    next_seq: u64,
}

impl BrokerState {
    pub fn new(retention_window_slots: u64, buffer_bytes: u64) -> Self {
        Self {
            topics: BTreeMap::new(),
            metadata_window: BTreeMap::new(),
            subscriptions: BTreeMap::new(),
            groups: BTreeMap::new(),
            retention_window_slots: retention_window_slots.max(1),
            buffer_bytes,
            retained_bytes: 0,
            next_seq: 0,
        }
    }

    pub fn register_publisher(&mut self, topic: TopicId, publisher: CavId) {
        self.topics
            .entry(topic)
            .or_insert_with(|| Topic { id: topic, ..Default::default() })
            .publishers
            .insert(publisher);
    }

    pub fn subscribe_topic(&mut self, topic: TopicId, subscriber: CavId) -> Result<()> {
        let t = self.topics.get_mut(&topic).ok_or(SpadError::UnknownTopic(topic))?;
        t.subscribers.insert(subscriber);
        Ok(())
    }

    pub fn retained_bytes(&self) -> u64 {
        self.retained_bytes
    }

    pub fn retained(&self) -> impl Iterator<Item = &RetainedMetadata> {
        self.metadata_window.values().flatten()
    }

    pub fn find(&self, content: ContentId) -> Option<&RetainedMetadata> {
        self.retained().find(|r| r.content_id == content)
    }

    /// Drop records older than the retention window and forget their groups.
    pub fn expire(&mut self, now: u64) {
        let w = self.retention_window_slots;
        let mut dropped = Vec::new();
        for q in self.metadata_window.values_mut() {
            while let Some(front) = q.front() {
                if now.saturating_sub(front.publish_slot) > w {
                    let r = q.pop_front().unwrap();
                    self.retained_bytes -= r.bytes;
                    dropped.push(r.content_id);
                } else {
                    break;
                }
            }
        }
        for c in dropped {
            self.forget(c);
        }
    }

    fn forget(&mut self, content: ContentId) {
        // Only admitted subscriptions are stored, and each one is in the group.
        if let Some(g) = self.groups.remove(&content) {
            for (s, _) in g.members() {
                self.subscriptions.remove(&(s, content));
            }
        }
    }

    fn evict_oldest(&mut self) -> bool {
        let oldest = self
            .metadata_window
            .iter()
            .filter_map(|(t, q)| q.front().map(|r| (r.publish_slot, r.seq, *t)))
            .min();
        let Some((_, _, topic)) = oldest else { return false };
        let r = self.metadata_window.get_mut(&topic).unwrap().pop_front().unwrap();
        self.retained_bytes -= r.bytes;
        self.forget(r.content_id);
        true
    }

    /// Retain `meta` for `content` and return the topic subscribers to notify.
    pub fn publish(
        &mut self,
        topic: TopicId,
        content: ContentId,
        publisher: CavId,
        meta: Metadata,
        slot: TimeSlot,
    ) -> Result<Vec<CavId>> {
        let t = self.topics.get(&topic).ok_or(SpadError::UnknownTopic(topic))?;
        if !t.publishers.contains(&publisher) {
            return Err(SpadError::UnregisteredPublisher { publisher, topic });
        }
        let notify: Vec<CavId> = t.subscribers.iter().copied().filter(|&s| s != publisher).collect();
        self.expire(slot.index);
        let bytes = meta.encoded_len();
        while self.retained_bytes + bytes > self.buffer_bytes && self.evict_oldest() {}
        if self.retained_bytes + bytes > self.buffer_bytes {
            return Err(SpadError::Domain(format!("metadata of {bytes} bytes exceeds the broker buffer")));
        }
        self.retained_bytes += bytes;
        let seq = self.next_seq;
        self.next_seq += 1;
        self.metadata_window.entry(topic).or_default().push_back(RetainedMetadata {
            content_id: content,
            publisher_id: publisher,
            meta,
            publish_slot: slot.index,
            bytes,
            seq,
        });
        Ok(notify)
    }

    /// Admit `sub` into the content's group iff the publisher's reputation
    /// meets the threshold.
    pub fn subscribe(&mut self, sub: Subscription, publisher_reputation: f64, threshold: f64) -> Result<Admission> {
        if self.find(sub.content_id).is_none() {
            return Err(SpadError::UnknownContent(sub.content_id));
        }
        let key = (sub.subscriber_id, sub.content_id);
        if self.subscriptions.contains_key(&key) {
            return Err(SpadError::Domain(format!(
                "vehicle {} already subscribed to content {}",
                sub.subscriber_id, sub.content_id
            )));
        }
        if publisher_reputation < threshold {
            return Ok(Admission::Rejected);
        }
        self.subscriptions.insert(key, sub);
        self.groups
            .entry(sub.content_id)
            .or_insert_with(|| SubscriberGroup::new(sub.content_id, threshold))
            .insert(sub.subscriber_id, sub.prefers_raw);
        Ok(Admission::Accepted)
    }

    pub fn group(&self, content: ContentId) -> Option<&SubscriberGroup> {
        self.groups.get(&content)
    }
}

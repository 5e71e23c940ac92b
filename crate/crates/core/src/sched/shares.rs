use std::collections::{BTreeMap, HashMap};

use super::{weight, Allocation, Delivery, Quantum, ResourceId, SchedError, Transfer};
use crate::priority::Urgency;

#[derive(Debug)]
struct Member {
    transfer: Transfer,
    weight: u64,
    /// Credit in units of `1 / total_weight` bytes, always within one byte of
    /// zero in either direction.
    carry: i128,
}

/// Urgency-weighted deficit round robin over a set of incremental streams.
///
/// Every round splits one quantum across all members in proportion to
/// `weight(urgency)` using exact integer credit. Whole bytes are handed out
/// first; the bytes lost to rounding go to the members with the largest
/// remainders. A round therefore never exceeds the quantum and, while the
/// membership is stable, each member's cumulative bytes stay within one byte
/// of its exact share. Carries restart whenever a member joins or leaves.
#[derive(Debug, Default)]
pub(super) struct WeightedShares {
    members: BTreeMap<u64, Member>,
    by_id: HashMap<ResourceId, u64>,
}

impl WeightedShares {
    pub fn insert(&mut self, id: ResourceId, seq: u64, urgency: Urgency, remaining: u64) {
        self.reset_carries();
        self.by_id.insert(id.clone(), seq);
        self.members.insert(
            seq,
            Member {
                transfer: Transfer { id, remaining },
                weight: weight(urgency),
                carry: 0,
            },
        );
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[cfg(test)]
    pub fn contains(&self, id: &ResourceId) -> bool {
        self.by_id.contains_key(id)
    }

    fn reset_carries(&mut self) {
        self.members.values_mut().for_each(|m| m.carry = 0);
    }

    /// Splits one quantum across all members, in arrival order.
    pub fn allocate(&mut self, quantum: Quantum) -> Vec<Allocation> {
        if self.members.is_empty() {
            return Vec::new();
        }
        let total_weight: i128 = self.members.values().map(|m| i128::from(m.weight)).sum();
        let q = i128::from(quantum.bytes());

        let mut owed: Vec<u64> = Vec::with_capacity(self.members.len());
        let mut handed = 0i128;
        for member in self.members.values_mut() {
            member.carry += q * i128::from(member.weight);
            let whole = member.carry.div_euclid(total_weight);
            member.carry -= whole * total_weight;
            owed.push(whole as u64);
            handed += whole;
        }

        let mut leftover = q - handed;
        if leftover > 0 {
            let mut order: Vec<usize> = (0..owed.len()).collect();
            let members: Vec<&Member> = self.members.values().collect();
            order.sort_by(|&a, &b| members[b].carry.cmp(&members[a].carry).then(a.cmp(&b)));
            let mut bonus = vec![false; owed.len()];
            for &i in &order {
                if leftover == 0 {
                    break;
                }
                if owed[i] < members[i].transfer.remaining {
                    bonus[i] = true;
                    owed[i] += 1;
                    leftover -= 1;
                }
            }
            for (member, got) in self.members.values_mut().zip(bonus) {
                if got {
                    member.carry -= total_weight;
                }
            }
        }

        let mut out = Vec::new();
        for (member, owed) in self.members.values_mut().zip(owed) {
            let remaining = member.transfer.remaining;
            if owed >= remaining {
                // Finishes this round; leftover credit dies with the stream.
                out.push(Allocation {
                    resource_id: member.transfer.id.clone(),
                    bytes: remaining,
                    completes: true,
                });
            } else if owed > 0 {
                out.push(Allocation {
                    resource_id: member.transfer.id.clone(),
                    bytes: owed,
                    completes: false,
                });
            }
        }
        out
    }

    /// `Ok(None)` when `id` is not a member.
    pub fn deliver(&mut self, id: &ResourceId, bytes: u64) -> Result<Option<Delivery>, SchedError> {
        let Some(&seq) = self.by_id.get(id) else {
            return Ok(None);
        };
        let member = self.members.get_mut(&seq).expect("index in sync");
        let delivery = member.transfer.deliver(bytes)?;
        if delivery == Delivery::Complete {
            self.members.remove(&seq);
            self.by_id.remove(id);
            self.reset_carries();
        }
        Ok(Some(delivery))
    }

    #[cfg(test)]
    fn carries(&self) -> Vec<i128> {
        self.members.values().map(|m| m.carry).collect()
    }
}

use crate::model::{PlaneId, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Entry {
    priority: i64,
    arrival: Time,
    plane: PlaneId,
}

/// Per-airport processing queue ordered by (priority, arrival, plane id),
/// all ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcessingQueue {
    entries: Vec<Entry>,
}

impl ProcessingQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `plane`, or moves it if it is already queued.
    pub fn enqueue(&mut self, plane: PlaneId, priority: i64, arrival: Time) {
        self.entries.retain(|e| e.plane != plane);
        let entry = Entry { priority, arrival, plane };
        let at = self.entries.partition_point(|e| *e < entry);
        self.entries.insert(at, entry);
    }

    /// Re-issues a priority for a queued plane, keeping its arrival time.
    pub fn reprioritize(&mut self, plane: PlaneId, priority: i64) -> bool {
        match self.entries.iter().find(|e| e.plane == plane) {
            Some(e) => {
                let arrival = e.arrival;
                self.enqueue(plane, priority, arrival);
                true
            }
            None => false,
        }
    }

    pub fn remove(&mut self, plane: PlaneId) {
        self.entries.retain(|e| e.plane != plane);
    }

    pub fn order(&self) -> impl Iterator<Item = PlaneId> + '_ {
        self.entries.iter().map(|e| e.plane)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Functional form of [`ProcessingQueue::enqueue`].
pub fn enqueue_priority(mut queue: ProcessingQueue, plane: PlaneId, priority: i64, arrival: Time) -> ProcessingQueue {
    queue.enqueue(plane, priority, arrival);
    queue
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(q: &ProcessingQueue) -> Vec<u32> {
        q.order().map(|p| p.0).collect()
    }

    #[test]
    fn priority_dominates_arrival() {
        let q = enqueue_priority(ProcessingQueue::new(), PlaneId(1), 2, 3);
        let q = enqueue_priority(q, PlaneId(2), 1, 5);
        assert_eq!(order(&q), vec![2, 1]);
    }

    #[test]
    fn earlier_arrival_breaks_priority_tie() {
        let q = enqueue_priority(ProcessingQueue::new(), PlaneId(1), 0, 5);
        let q = enqueue_priority(q, PlaneId(2), 0, 3);
        assert_eq!(order(&q), vec![2, 1]);
    }

    #[test]
    fn lower_id_breaks_full_tie() {
        let q = enqueue_priority(ProcessingQueue::new(), PlaneId(7), 0, 3);
        let q = enqueue_priority(q, PlaneId(4), 0, 3);
        assert_eq!(order(&q), vec![4, 7]);
    }

    #[test]
    fn reissued_priority_reorders() {
        let mut q = ProcessingQueue::new();
        q.enqueue(PlaneId(1), 0, 1);
        q.enqueue(PlaneId(2), 0, 2);
        assert!(q.reprioritize(PlaneId(2), -1));
        assert_eq!(order(&q), vec![2, 1]);
        assert_eq!(q.len(), 2);
        assert!(!q.reprioritize(PlaneId(9), 0));
    }
}

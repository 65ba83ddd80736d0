//! Binary min-heap over the elements `0..n` with a position index, so any
//! element's key can be raised or lowered in `O(log n)`.

use std::cmp::Ordering;

#[derive(Debug, Clone)]
pub struct IndexedMinHeap {
    /// Elements in heap order.
    slots: Vec<usize>,
    /// `pos[e]` is the slot holding element `e`.
    pos: Vec<usize>,
    keys: Vec<f64>,
    /// Levels moved by sift-up/sift-down since the last [`take_sifts`].
    ///
    /// [`take_sifts`]: IndexedMinHeap::take_sifts
    sifts: u64,
}

impl IndexedMinHeap {
    /// Heapifies in `O(n)`; element `e` gets `keys[e]`.
    pub fn new(keys: Vec<f64>) -> Self {
        let n = keys.len();
        let mut heap = IndexedMinHeap {
            slots: (0..n).collect(),
            pos: (0..n).collect(),
            keys,
            sifts: 0,
        };
        for s in (0..n / 2).rev() {
            heap.sift_down(s);
        }
        heap.sifts = 0;
        heap
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn key(&self, element: usize) -> f64 {
        self.keys[element]
    }

    /// Smallest `(key, element)`; equal keys go to the smaller element.
    pub fn peek(&self) -> Option<(usize, f64)> {
        self.slots.first().map(|&e| (e, self.keys[e]))
    }

    /// Best element other than the top, read from the root's children.
    pub fn second(&self) -> Option<(usize, f64)> {
        let mut best: Option<usize> = None;
        for s in 1..self.slots.len().min(3) {
            if best.is_none_or(|b| self.less(s, b)) {
                best = Some(s);
            }
        }
        best.map(|s| (self.slots[s], self.keys[self.slots[s]]))
    }

    pub fn change_key(&mut self, element: usize, key: f64) {
        let old = self.keys[element];
        self.keys[element] = key;
        let s = self.pos[element];
        match key.total_cmp(&old) {
            Ordering::Less => self.sift_up(s),
            Ordering::Greater => self.sift_down(s),
            Ordering::Equal => {}
        }
    }

    pub fn take_sifts(&mut self) -> u64 {
        std::mem::take(&mut self.sifts)
    }

    /// Checks heap order and that `pos` inverts `slots`.
    pub fn is_consistent(&self) -> bool {
        let ordered = (1..self.slots.len()).all(|s| !self.less(s, (s - 1) / 2));
        let indexed = self.slots.iter().enumerate().all(|(s, &e)| self.pos[e] == s);
        ordered && indexed
    }

    fn less(&self, a: usize, b: usize) -> bool {
        let (ea, eb) = (self.slots[a], self.slots[b]);
        match self.keys[ea].total_cmp(&self.keys[eb]) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => ea < eb,
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.slots.swap(a, b);
        self.pos[self.slots[a]] = a;
        self.pos[self.slots[b]] = b;
        self.sifts += 1;
    }

    fn sift_up(&mut self, mut s: usize) {
        while s > 0 {
            let p = (s - 1) / 2;
            if !self.less(s, p) {
                break;
            }
            self.swap(s, p);
            s = p;
        }
    }

    fn sift_down(&mut self, mut s: usize) {
        let n = self.slots.len();
        loop {
            let (l, r) = (2 * s + 1, 2 * s + 2);
            let mut m = s;
            if l < n && self.less(l, m) {
                m = l;
            }
            if r < n && self.less(r, m) {
                m = r;
            }
            if m == s {
                break;
            }
            self.swap(s, m);
            s = m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_prefer_smaller_element() {
        let h = IndexedMinHeap::new(vec![3.0, 1.0, 1.0, f64::INFINITY]);
        assert_eq!(h.peek(), Some((1, 1.0)));
        assert_eq!(h.second(), Some((2, 1.0)));
    }

    #[test]
    fn infinite_keys_stay_in_heap() {
        let mut h = IndexedMinHeap::new(vec![f64::INFINITY; 3]);
        assert_eq!(h.peek(), Some((0, f64::INFINITY)));
        h.change_key(2, -1.0);
        assert_eq!(h.peek(), Some((2, -1.0)));
        h.change_key(2, f64::INFINITY);
        assert_eq!(h.peek(), Some((0, f64::INFINITY)));
        assert!(h.is_consistent());
    }

    proptest! {
        #[test]
        fn updates_keep_order_and_index(
            init in prop::collection::vec(-50i32..50, 1..40),
            ops in prop::collection::vec((0usize..40, -60i32..60), 0..80),
        ) {
            let n = init.len();
            let mut h = IndexedMinHeap::new(init.iter().map(|&k| k as f64).collect());
            let mut model: Vec<f64> = init.iter().map(|&k| k as f64).collect();
            prop_assert!(h.is_consistent());
            let height = (n as f64).log2().floor() as u64;
            for (e, k) in ops {
                let e = e % n;
                let k = if k == 59 { f64::INFINITY } else { k as f64 };
                h.change_key(e, k);
                model[e] = k;
                prop_assert!(h.take_sifts() <= height);
                prop_assert!(h.is_consistent());
                let best = (0..n)
                    .min_by(|&a, &b| model[a].total_cmp(&model[b]).then(a.cmp(&b)))
                    .unwrap();
                prop_assert_eq!(h.peek(), Some((best, model[best])));
                if n > 1 {
                    let second = (0..n)
                        .filter(|&a| a != best)
                        .min_by(|&a, &b| model[a].total_cmp(&model[b]).then(a.cmp(&b)))
                        .unwrap();
                    prop_assert_eq!(h.second(), Some((second, model[second])));
                }
            }
        }
    }
}

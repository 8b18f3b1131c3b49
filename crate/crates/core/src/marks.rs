/// Epoch-stamped scratch array: `clear` is O(1), entries from older epochs read as absent.
#[derive(Clone, Debug)]
pub struct Marks<T: Copy> {
    stamp: Vec<u32>,
    value: Vec<T>,
    epoch: u32,
}

impl<T: Copy + Default> Marks<T> {
    pub fn new(n: usize) -> Self {
        Marks { stamp: vec![0; n], value: vec![T::default(); n], epoch: 1 }
    }

    pub fn len(&self) -> usize {
        self.stamp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stamp.is_empty()
    }

    pub fn grow(&mut self, n: usize) {
        if n > self.stamp.len() {
            self.stamp.resize(n, 0);
            self.value.resize(n, T::default());
        }
    }

    pub fn clear(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: T) {
        self.stamp[i] = self.epoch;
        self.value[i] = v;
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<T> {
        (self.stamp[i] == self.epoch).then(|| self.value[i])
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.stamp[i] == self.epoch
    }

    #[inline]
    pub fn unset(&mut self, i: usize) {
        self.stamp[i] = 0;
    }
}

/// Membership-only marks.
pub type Flags = Marks<()>;

impl Flags {
    #[inline]
    pub fn mark(&mut self, i: usize) {
        self.set(i, ());
    }
}

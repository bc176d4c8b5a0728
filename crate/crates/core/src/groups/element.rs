use smallvec::SmallVec;

/// Packed reduced word in a free group.
///
/// Letter codes are `2 * generator + inverse_bit`. Codes never straddle a
/// `u64` boundary, so a rank-2 word keeps 64 letters inline before spilling
/// to the heap.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FreeWord {
    len: u32,
    bits: u8,
    packed: SmallVec<[u64; 2]>,
}

impl FreeWord {
    pub fn empty(rank: usize) -> Self {
        FreeWord {
            len: 0,
            bits: bits_for_rank(rank),
            packed: SmallVec::new(),
        }
    }

    #[inline]
    fn per_word(&self) -> usize {
        64 / self.bits as usize
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> u8 {
        let per = self.per_word();
        let shift = (i % per) * self.bits as usize;
        let mask = (1u64 << self.bits) - 1;
        ((self.packed[i / per] >> shift) & mask) as u8
    }

    pub fn last(&self) -> Option<u8> {
        if self.len == 0 {
            None
        } else {
            Some(self.get(self.len as usize - 1))
        }
    }

    fn push_raw(&mut self, code: u8) {
        let per = self.per_word();
        let i = self.len as usize;
        if i % per == 0 {
            self.packed.push(0);
        }
        let shift = (i % per) * self.bits as usize;
        self.packed[i / per] |= (code as u64) << shift;
        self.len += 1;
    }

    fn pop_raw(&mut self) {
        let per = self.per_word();
        let i = self.len as usize - 1;
        let shift = (i % per) * self.bits as usize;
        let mask = (1u64 << self.bits) - 1;
        self.packed[i / per] &= !(mask << shift);
        if i % per == 0 {
            self.packed.pop();
        }
        self.len -= 1;
    }

    /// Right-multiplies by a single letter, cancelling against the last one.
    pub fn push_reduced(&mut self, code: u8) {
        if self.last() == Some(code ^ 1) {
            self.pop_raw();
        } else {
            self.push_raw(code);
        }
    }

    pub fn codes(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn mul(&self, other: &FreeWord) -> FreeWord {
        let mut out = self.clone();
        for c in other.codes() {
            out.push_reduced(c);
        }
        out
    }

    pub fn inverse(&self) -> FreeWord {
        let mut out = FreeWord {
            len: 0,
            bits: self.bits,
            packed: SmallVec::new(),
        };
        for i in (0..self.len()).rev() {
            out.push_raw(self.get(i) ^ 1);
        }
        out
    }

    pub(crate) fn key_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.len.to_le_bytes());
        for w in &self.packed {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
}

fn bits_for_rank(rank: usize) -> u8 {
    let codes = (2 * rank).max(2);
    (usize::BITS - (codes - 1).leading_zeros()) as u8
}

/// Lamplighter element `(lamps, position)` with lamps sorted ascending.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct LampState {
    pub pos: i32,
    pub lamps: SmallVec<[i32; 8]>,
}

impl LampState {
    /// `(L1, p1)(L2, p2) = (L1 Δ (L2 + p1), p1 + p2)`.
    pub fn mul(&self, other: &LampState) -> LampState {
        let shifted = other.lamps.iter().map(|&l| l + self.pos);
        LampState {
            pos: self.pos + other.pos,
            lamps: symmetric_difference(self.lamps.iter().copied(), shifted),
        }
    }

    pub fn inverse(&self) -> LampState {
        LampState {
            pos: -self.pos,
            lamps: self.lamps.iter().map(|&l| l - self.pos).collect(),
        }
    }

    /// Word length with respect to `{t, a}`: lamp toggles plus the shortest
    /// walk from 0 to `pos` visiting every lit lamp.
    pub fn word_length(&self) -> usize {
        let lo = self.lamps.first().copied().unwrap_or(0).min(0).min(self.pos) as i64;
        let hi = self.lamps.last().copied().unwrap_or(0).max(0).max(self.pos) as i64;
        let p = self.pos as i64;
        let left_first = -lo + (hi - lo) + (hi - p);
        let right_first = hi + (hi - lo) + (p - lo);
        self.lamps.len() + left_first.min(right_first) as usize
    }
}

fn symmetric_difference(
    a: impl Iterator<Item = i32>,
    b: impl Iterator<Item = i32>,
) -> SmallVec<[i32; 8]> {
    let mut out = SmallVec::new();
    let mut a = a.peekable();
    let mut b = b.peekable();
    loop {
        match (a.peek().copied(), b.peek().copied()) {
            (Some(x), Some(y)) if x == y => {
                a.next();
                b.next();
            }
            (Some(x), Some(y)) if x < y => {
                out.push(x);
                a.next();
            }
            (Some(_), Some(y)) => {
                out.push(y);
                b.next();
            }
            (Some(x), None) => {
                out.push(x);
                a.next();
            }
            (None, Some(y)) => {
                out.push(y);
                b.next();
            }
            (None, None) => break,
        }
    }
    out
}

/// A group element in canonical form. Structural equality is group equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Element {
    Finite(u32),
    Abelian(SmallVec<[i32; 4]>),
    Free(FreeWord),
    Lamplighter(LampState),
}

impl Element {
    /// Canonical byte encoding; equal bytes iff equal elements of the same group.
    pub fn key(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Element::Finite(i) => {
                out.push(0);
                out.extend_from_slice(&i.to_le_bytes());
            }
            Element::Abelian(v) => {
                out.push(1);
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Element::Free(w) => {
                out.push(2);
                w.key_bytes(&mut out);
            }
            Element::Lamplighter(s) => {
                out.push(3);
                out.extend_from_slice(&s.pos.to_le_bytes());
                for l in &s.lamps {
                    out.extend_from_slice(&l.to_le_bytes());
                }
            }
        }
        out
    }
}

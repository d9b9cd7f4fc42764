/// The Mersenne prime `2^61 - 1`. Small enough for u128-free addition, large
/// enough that 32-party fixed-point sums at 24 fractional bits cannot wrap.
pub const MODULUS: u64 = (1u64 << 61) - 1;

/// An element of the prime field `Z_q`, `q = 2^61 - 1`. Negative reals map to
/// the upper half of the range under the fixed-point codec.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FieldElement(u64);

impl FieldElement {
    pub const ZERO: Self = Self(0);

    /// Reduces an arbitrary u64 into the field.
    #[inline]
    pub fn from_u64(v: u64) -> Self {
        // One fold brings v below 2^61 + 2; a conditional subtract finishes.
        let folded = (v & MODULUS) + (v >> 61);
        Self(if folded >= MODULUS { folded - MODULUS } else { folded })
    }

    /// Wraps a value already known to be canonical.
    #[inline]
    pub fn from_canonical(v: u64) -> Self {
        debug_assert!(v < MODULUS);
        Self(v)
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn add(self, rhs: Self) -> Self {
        let s = self.0 + rhs.0;
        Self(if s >= MODULUS { s - MODULUS } else { s })
    }

    #[inline]
    pub fn sub(self, rhs: Self) -> Self {
        let s = self.0 + MODULUS - rhs.0;
        Self(if s >= MODULUS { s - MODULUS } else { s })
    }

    #[inline]
    pub fn neg(self) -> Self {
        Self::ZERO.sub(self)
    }
}

impl std::ops::Add for FieldElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        FieldElement::add(self, rhs)
    }
}

impl std::ops::Sub for FieldElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        FieldElement::sub(self, rhs)
    }
}

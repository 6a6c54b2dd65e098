"""SplitMix64, the seeded generator behind every random input.

The state advances by the golden-ratio increment ``0x9E3779B97F4A7C15`` and
each output is the standard SplitMix64 finalizer of the new state.  Floats use
the top 53 bits: ``(z >> 11) * 2**-53``.  The algorithm is tiny and fully
specified, so any implementation reproduces the same stream from a seed.
"""
MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.state = seed

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self):
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.random()

    def randint(self, lo, hi):
        """Integer in ``[lo, hi]``; modulo bias is negligible for small ranges."""
        return lo + self.next_u64() % (hi - lo + 1)

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def complex_vector(self, n):
        return [complex(self.uniform(-1, 1), self.uniform(-1, 1)) for _ in range(n)]

    def spawn(self, label):
        """Independent child stream keyed by a string label."""
        h = 0xCBF29CE484222325
        for b in label.encode():
            h = ((h ^ b) * 0x100000001B3) & MASK64
        return SplitMix64(self.next_u64() ^ h)

import copy
from typing import Any, Dict, Optional

import numpy as np


class SeededRng:
    """A seeded PCG64 stream whose full state can be checkpointed.

    The same seed and the same call sequence always give the same draws.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def choice(self, a, size=None, replace: bool = True):
        return self.generator.choice(a, size=size, replace=replace)

    def permutation(self, n):
        return self.generator.permutation(n)

    def spawn(self, offset: int) -> "SeededRng":
        """Independent stream derived from this seed, not from the current state."""
        return SeededRng(np.random.SeedSequence([self.seed, offset]).generate_state(1)[0])

    def get_state(self) -> Dict[str, Any]:
        return {"seed": self.seed, "bit_generator": copy.deepcopy(self.generator.bit_generator.state)}

    def set_state(self, state: Dict[str, Any]):
        self.seed = int(state["seed"])
        self.generator.bit_generator.state = copy.deepcopy(state["bit_generator"])

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "SeededRng":
        rng = cls(state["seed"])
        rng.set_state(state)
        return rng

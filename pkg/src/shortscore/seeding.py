"""Deterministic RNG derivation.

Every stochastic step in the pipeline draws from a generator derived from
the run seed plus integer tags (fold index, boosting round, role), so that
reruns with the same seed are bit-identical regardless of call order
elsewhere in the program.
"""

import numpy as np

# role tags for derived streams; values are arbitrary but frozen
ROLE_FOLDS = 1
ROLE_SMOTE = 2
ROLE_BASE_MLP = 3
ROLE_BASE_GBDT = 4
ROLE_META = 5
ROLE_SEARCH = 6
ROLE_CV = 7
ROLE_REFIT = 8
ROLE_PIPELINE = 9


def spawn_rng(seed: int, *tags: int) -> np.random.Generator:
    """Return a generator keyed by ``seed`` and an optional tag path."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def child_seed(seed: int, *tags: int) -> int:
    """Stable derived integer seed for APIs that take a seed, not a Generator."""
    ss = np.random.SeedSequence([int(seed), *map(int, tags)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])

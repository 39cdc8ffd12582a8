"""Random instance generators shared by the unit and acceptance tests."""
import numpy as np

from chaining_lab.chaining import AdmissibleSequence, Partition, level_budget
from chaining_lab.metric import from_points


def random_admissible_sequence(rng, ground, alpha=2.0, max_depth=5):
    """Random refinement chain within the level budgets, ending in singletons."""
    ground = tuple(sorted(ground))
    levels = [Partition.single(ground)]
    s = 0
    while not levels[-1].is_singletons:
        s += 1
        budget = level_budget(s)
        if s >= max_depth and budget >= len(ground):
            levels.append(Partition.singletons(ground))
            break
        blocks = []
        current = levels[-1].blocks
        room = budget - len(current)
        for block in current:
            extra = int(rng.integers(0, min(len(block) - 1, room) + 1)) if room > 0 else 0
            room -= extra
            labels = np.concatenate([np.arange(extra + 1), rng.integers(0, extra + 1, len(block) - extra - 1)])
            rng.shuffle(labels)
            for lab in range(extra + 1):
                blocks.append(tuple(np.asarray(block)[labels == lab]))
        nxt = Partition(ground, tuple(blocks))
        if budget >= len(ground) and rng.random() < 0.3:
            nxt = Partition.singletons(ground)
        levels.append(nxt)
    return AdmissibleSequence(ground, tuple(levels), alpha)


def random_space(rng, n, dim=None):
    dim = dim if dim is not None else int(rng.integers(1, 7))
    return from_points(rng.standard_normal((n, dim)))


def random_pair(rng, union_size, overlap=None):
    """Two nonempty subsets of range(union_size) covering it; overlap on request."""
    points = rng.permutation(union_size)
    if overlap is None:
        overlap = bool(rng.integers(0, 2))
    if union_size == 1:
        return (int(points[0]),), (int(points[0]),)
    cut = int(rng.integers(1, union_size))
    t1, t2 = set(points[:cut].tolist()), set(points[cut:].tolist())
    if overlap:
        shared = rng.choice(union_size, size=int(rng.integers(1, union_size + 1)), replace=False)
        t1 |= {int(shared[0])}
        t2 |= {int(shared[0])}
        for v in shared[1:]:
            (t1 if rng.random() < 0.5 else t2).add(int(v))
    return tuple(sorted(t1)), tuple(sorted(t2))

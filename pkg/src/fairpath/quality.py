"""Data-quality diagnostics: the balance check behind the first wizard decision.

"Balanced" has no canonical definition; this module applies a declared
convention (group-count ratio plus minimum (group, label) cell size) and
says so in its notes. Collecting more data cannot be automated, so the only
in-tool remedy is deterministic downsampling to the smallest group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import AuditDataset, partition_by_group


@dataclass(frozen=True)
class BalanceReport:
    group_counts: dict[str, int]
    imbalance_ratio: float
    cell_counts: dict[tuple[str, int], int]
    min_cell: int
    balanced: bool
    notes: tuple[str, ...]
    balance_ratio_floor: float
    min_cell_floor: int

    def to_json_dict(self) -> dict:
        return {
            "group_counts": {g: int(c) for g, c in sorted(self.group_counts.items())},
            "imbalance_ratio": float(self.imbalance_ratio),
            "cell_counts": [
                {"group": g, "label": int(label), "count": int(c)}
                for (g, label), c in sorted(self.cell_counts.items())
            ],
            "min_cell": int(self.min_cell),
            "balanced": bool(self.balanced),
            "notes": list(self.notes),
            "criteria": {
                "balance_ratio_floor": float(self.balance_ratio_floor),
                "min_cell_floor": int(self.min_cell_floor),
                "convention": "declared convention, not a property of the methodology",
            },
        }


def assess_balance(
    d: AuditDataset, balance_ratio: float = 0.8, min_cell: int = 30
) -> BalanceReport:
    """Judge representation balance on group counts and (group, label) cells.

    balanced iff min/max group-count ratio >= balance_ratio and every
    (group, label) cell holds at least min_cell rows. Feature-distribution
    drift is out of scope; the notes say what is under-represented.
    """
    counts = {g: int(np.count_nonzero(d.group_codes == i)) for i, g in enumerate(d.groups)}
    max_count = max(counts.values())
    min_count = min(counts.values())
    ratio = min_count / max_count

    cells: dict[tuple[str, int], int] = {}
    for i, g in enumerate(d.groups):
        mask = d.group_codes == i
        pos = int(np.count_nonzero(d.labels[mask] == 1))
        cells[(g, 1)] = pos
        cells[(g, 0)] = int(mask.sum()) - pos
    smallest_cell = min(cells.values())

    notes = []
    if ratio < balance_ratio:
        lagging = sorted(g for g, c in counts.items() if c < balance_ratio * max_count)
        notes.append(
            f"under-represented groups (count below {balance_ratio:g} of the largest): "
            + ", ".join(f"{g} ({counts[g]} rows)" for g in lagging)
        )
    thin = sorted((g, label) for (g, label), c in cells.items() if c < min_cell)
    if thin:
        notes.append(
            f"cells below the minimum of {min_cell}: "
            + ", ".join(f"{g}/label={label} ({cells[(g, label)]} rows)" for g, label in thin)
        )
    if not notes:
        notes.append("group counts and (group, label) cells meet the configured floors")
    notes.append(
        "collecting more data is preferable to downsampling when feasible; "
        "only downsampling is automated here"
    )

    return BalanceReport(
        group_counts=counts,
        imbalance_ratio=ratio,
        cell_counts=cells,
        min_cell=smallest_cell,
        balanced=ratio >= balance_ratio and smallest_cell >= min_cell,
        notes=tuple(notes),
        balance_ratio_floor=balance_ratio,
        min_cell_floor=min_cell,
    )


def rebalance_by_downsampling(d: AuditDataset, seed: int) -> AuditDataset:
    """Downsample every group, without replacement, to the smallest group size.

    Deterministic under the seed; surviving rows keep their original order.
    Synthetic oversampling is deliberately not offered — fabricated rows are
    a bias source of their own.
    """
    partition = partition_by_group(d)
    target = min(len(idx) for idx in partition.values())
    rng = np.random.Generator(np.random.PCG64(seed))
    keep: list[int] = []
    for g in d.groups:
        idx = np.asarray(partition[g], dtype=np.int64)
        chosen = rng.choice(idx, size=target, replace=False)
        keep.extend(int(i) for i in chosen)
    keep.sort()
    return d.with_rows(keep, fingerprint_note=f"downsample(seed={seed})")

"""Linear-chain CRF: exact log-partition, NLL, Viterbi, BIO constraints.

Scores for a label sequence y over L positions:

    start[y_0] + sum_i emissions[i][y_i] + sum_i transition[y_i][y_{i+1}] + end[y_{L-1}]

Forbidden transitions (boolean masks, True = forbidden) are excluded from
the partition function during training and from decoding, so invalid BIO
paths carry zero probability mass.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

BIO_UNTYPED = "untyped-BIO"
BIO_TYPED = "typed-BIO"
CANDIDATE_ROLES = "candidate-roles"

OUTSIDE = "O"
NONE_ROLE = "NONE"


@dataclass(frozen=True)
class LabelSpace:
    labels: tuple[str, ...]
    kind: str

    def __post_init__(self):
        if self.kind in (BIO_UNTYPED, BIO_TYPED):
            if self.labels.count(OUTSIDE) != 1:
                raise ValueError("BIO label space needs exactly one O label")
            types_b = {l[2:] for l in self.labels if l.startswith("B-")}
            types_i = {l[2:] for l in self.labels if l.startswith("I-")}
            if self.kind == BIO_TYPED and types_b != types_i:
                raise ValueError(f"unmatched B-/I- pairs: {types_b ^ types_i}")
        elif self.kind == CANDIDATE_ROLES:
            if self.labels.count(NONE_ROLE) != 1:
                raise ValueError("candidate-roles space needs exactly one NONE label")
        else:
            raise ValueError(f"unknown label space kind: {self.kind}")

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def __len__(self):
        return len(self.labels)


def untyped_bio() -> LabelSpace:
    return LabelSpace(labels=(OUTSIDE, "B", "I"), kind=BIO_UNTYPED)


def typed_bio(types: list[str] | tuple[str, ...]) -> LabelSpace:
    labels = [OUTSIDE]
    for t in types:
        labels += [f"B-{t}", f"I-{t}"]
    return LabelSpace(labels=tuple(labels), kind=BIO_TYPED)


def candidate_roles(roles: list[str] | tuple[str, ...]) -> LabelSpace:
    return LabelSpace(labels=(NONE_ROLE,) + tuple(roles), kind=CANDIDATE_ROLES)


@dataclass
class TransitionTable:
    """Learned transition scores plus boolean masks of forbidden moves."""

    transition: Tensor  # [T, T]
    start: Tensor  # [T]
    end: Tensor  # [T]
    trans_mask: np.ndarray = field(default=None)  # [T, T] bool, True = forbidden
    start_mask: np.ndarray = field(default=None)  # [T] bool

    def __post_init__(self):
        t = len(self.start.values)
        if self.trans_mask is None:
            self.trans_mask = np.zeros((t, t), dtype=bool)
        if self.start_mask is None:
            self.start_mask = np.zeros(t, dtype=bool)

    @property
    def num_labels(self) -> int:
        return len(self.start.values)

    def masked(self) -> tuple[Tensor, Tensor]:
        trans = ad.masked_fill(self.transition, self.trans_mask)
        start = ad.masked_fill(self.start, self.start_mask)
        return trans, start

    def restrict(self, indices: list[int]) -> "TransitionTable":
        """Sub-table over a label subset; gradients flow to the full table."""
        idx = np.asarray(indices, dtype=np.intp)
        sub = ad.take(ad.take(self.transition, idx, axis=0), idx, axis=1)
        return TransitionTable(
            transition=sub,
            start=ad.take(self.start, idx),
            end=ad.take(self.end, idx),
            trans_mask=self.trans_mask[np.ix_(idx, idx)],
            start_mask=self.start_mask[idx],
        )


def zero_table(num_labels: int) -> TransitionTable:
    return TransitionTable(
        transition=ad.param(np.zeros((num_labels, num_labels))),
        start=ad.param(np.zeros(num_labels)),
        end=ad.param(np.zeros(num_labels)),
    )


def bio_mask(space: LabelSpace) -> tuple[np.ndarray, np.ndarray]:
    """(trans_mask, start_mask) forbidding O->I-x, start->I-x, and B-y/I-y->I-x for x != y."""
    if space.kind not in (BIO_UNTYPED, BIO_TYPED):
        raise ValueError(f"bio_mask needs a BIO label space, got {space.kind}")
    n = len(space)
    trans_mask = np.zeros((n, n), dtype=bool)
    start_mask = np.zeros(n, dtype=bool)

    def tag_type(label):
        return label[2:] if space.kind == BIO_TYPED else ""

    for j, lj in enumerate(space.labels):
        if not lj.startswith("I"):
            continue
        start_mask[j] = True
        for i, li in enumerate(space.labels):
            if li == OUTSIDE:
                trans_mask[i, j] = True
            elif tag_type(li) != tag_type(lj):
                trans_mask[i, j] = True
    return trans_mask, start_mask


def _check_shapes(emissions: Tensor, table: TransitionTable):
    L, T = emissions.shape
    if L < 1 or T < 1:
        raise ValueError(f"emissions must be at least 1x1, got {emissions.shape}")
    if table.num_labels != T:
        raise ValueError(
            f"emissions have {T} labels but transition table has {table.num_labels}"
        )


def log_partition(emissions: Tensor, table: TransitionTable) -> Tensor:
    """log sum over all label sequences of exp(path score), via the forward recursion."""
    _check_shapes(emissions, table)
    L, T = emissions.shape
    trans, start = table.masked()
    alpha = ad.add(start, ad.reshape(ad.narrow(emissions, 0, 0, 1), (T,)))
    for i in range(1, L):
        step = ad.add(ad.reshape(alpha, (T, 1)), trans)
        alpha = ad.add(ad.logsumexp(step, axis=0), ad.reshape(ad.narrow(emissions, 0, i, 1), (T,)))
    return ad.logsumexp(ad.add(alpha, table.end), axis=None)


def sequence_score(emissions: Tensor, table: TransitionTable, labels: list[int]) -> Tensor:
    _check_shapes(emissions, table)
    L, T = emissions.shape
    if len(labels) != L:
        raise ValueError(f"gold length {len(labels)} != sequence length {L}")
    labels = [int(y) for y in labels]
    if table.start_mask[labels[0]]:
        raise ValueError(f"gold sequence starts with masked label {labels[0]}")
    for a, b in zip(labels, labels[1:]):
        if table.trans_mask[a, b]:
            raise ValueError(f"gold sequence uses masked transition {a}->{b}")
    parts = [
        ad.sum_(ad.take_flat(emissions, [i * T + y for i, y in enumerate(labels)])),
        ad.sum_(ad.take_flat(table.start, [labels[0]])),
        ad.sum_(ad.take_flat(table.end, [labels[-1]])),
    ]
    if L > 1:
        flat = [a * T + b for a, b in zip(labels, labels[1:])]
        parts.append(ad.sum_(ad.take_flat(table.transition, flat)))
    total = parts[0]
    for p in parts[1:]:
        total = ad.add(total, p)
    return total


def nll(emissions: Tensor, table: TransitionTable, labels: list[int]) -> Tensor:
    """CRF negative log-likelihood of the gold sequence; >= 0 up to rounding."""
    return ad.sub(log_partition(emissions, table), sequence_score(emissions, table, labels))


def viterbi(emissions: np.ndarray, table: TransitionTable) -> tuple[list[int], float]:
    """Best-scoring label sequence under the mask.

    Ties break toward the lexicographically smallest label sequence, which the
    suffix-maximum recursion delivers by picking the smallest label index
    greedily from the front.
    """
    em = np.asarray(emissions.values if isinstance(emissions, Tensor) else emissions, dtype=np.float64)
    L, T = em.shape
    if table.num_labels != T:
        raise ValueError(f"emissions have {T} labels but transition table has {table.num_labels}")
    trans = np.where(table.trans_mask, -np.inf, table.transition.values.astype(np.float64))
    start = np.where(table.start_mask, -np.inf, table.start.values.astype(np.float64))
    end = table.end.values.astype(np.float64)

    # suffix[t][j]: best score of a path over positions t..L-1 that starts with label j
    suffix = np.empty((L, T))
    suffix[L - 1] = em[L - 1] + end
    for t in range(L - 2, -1, -1):
        best_next = np.max(trans + suffix[t + 1][None, :], axis=1)
        suffix[t] = em[t] + best_next
    totals = start + suffix[0]
    best = float(np.max(totals))
    if not np.isfinite(best):
        raise ValueError("all label paths are masked")
    path = [int(np.argmax(totals))]
    for t in range(1, L):
        scores = trans[path[-1]] + suffix[t]
        path.append(int(np.argmax(scores)))
    return path, best


# ---------------------------------------------------------------------------
# BIO span codecs


def bio_spans(labels: list[str]) -> list[tuple[int, int, str]]:
    """Decode well-formed BIO labels into (start, end, type) spans; stray I is
    treated as a span continuation only when it matches the open type."""
    spans = []
    open_start, open_type = None, None
    for i, lab in enumerate(labels):
        if lab.startswith("B"):
            if open_start is not None:
                spans.append((open_start, i, open_type))
            open_start, open_type = i, lab[2:]
        elif lab.startswith("I") and open_start is not None and lab[2:] == open_type:
            continue
        else:
            if open_start is not None:
                spans.append((open_start, i, open_type))
                open_start, open_type = None, None
    if open_start is not None:
        spans.append((open_start, len(labels), open_type))
    return spans


def repair_bio(labels: list[str]) -> list[str]:
    """Per-token argmax repair: an I-x without a matching open B-x/I-x becomes B-x."""
    fixed = []
    prev = OUTSIDE
    for lab in labels:
        if lab.startswith("I"):
            t = lab[2:]
            if not (prev == f"B-{t}" or prev == f"I-{t}" or (t == "" and prev in ("B", "I"))):
                lab = f"B-{t}" if t else "B"
        fixed.append(lab)
        prev = lab
    return fixed


def spans_to_bio(spans: list[tuple[int, int, str]], length: int, typed: bool) -> list[str]:
    labels = [OUTSIDE] * length
    for s, e, t in spans:
        labels[s] = f"B-{t}" if typed else "B"
        for i in range(s + 1, e):
            labels[i] = f"I-{t}" if typed else "I"
    return labels

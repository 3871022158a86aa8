"""Query likelihood from per-modality similarity scores.

The Dempster-Shafer path turns every normalized score into a mass function
over {relevant, irrelevant, unknown}, folds the masses with Dempster's rule
starting from total ignorance and projects the result to a probability with
the pignistic transform. ``likelihood_linear`` is the weighted-average
baseline used in ablations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple, Union

from .core import (
    FusionConfig,
    InputContractError,
    MassFunction,
    Modality,
    OutOfRange,
)

# 1 - K below this is treated as total conflict even under the threshold
MIN_DENOMINATOR = 1e-12


class EmptyScores(InputContractError):
    pass


class MissingWeight(InputContractError):
    pass


@dataclass(frozen=True)
class ExtremeConflict:
    """Outcome of combining two mass functions that contradict each other."""

    conflict: float


@dataclass(frozen=True)
class LikelihoodResult:
    value: float
    conflict_trace: Tuple[float, ...] = field(default_factory=tuple)
    aborted: bool = False


def _check_score(norm_score: float) -> None:
    if not 0.0 <= norm_score <= 1.0:
        raise OutOfRange(f"normalized score must lie in [0,1], got {norm_score!r}")


def bpa_from_score(norm_score: float, config: FusionConfig) -> MassFunction:
    _check_score(norm_score)
    m_y = config.alpha * norm_score
    m_n = config.beta * (1.0 - norm_score)
    committed = m_y + m_n
    if committed > 1.0:
        # only reachable with alpha + beta > 1; keep the Y:N ratio
        return MassFunction(m_y / committed, m_n / committed, 0.0)
    return MassFunction(m_y, m_n, max(0.0, 1.0 - m_y - m_n))


def conflict(current: MassFunction, incoming: MassFunction) -> float:
    return current.m_y * incoming.m_n + current.m_n * incoming.m_y


def combine_dempster(current: MassFunction, incoming: MassFunction,
                     config: FusionConfig) -> Union[MassFunction, ExtremeConflict]:
    k = conflict(current, incoming)
    d = 1.0 - k
    if k >= config.conflict_threshold or d < MIN_DENOMINATOR:
        return ExtremeConflict(k)
    m_y = (current.m_y * incoming.m_y
           + current.m_y * incoming.m_omega
           + current.m_omega * incoming.m_y) / d
    m_n = (current.m_n * incoming.m_n
           + current.m_n * incoming.m_omega
           + current.m_omega * incoming.m_n) / d
    m_omega = (current.m_omega * incoming.m_omega) / d
    return MassFunction(m_y, m_n, m_omega)


def pignistic(m: MassFunction) -> float:
    """BetP(Y): the ignorance mass is split evenly between Y and N."""
    return m.m_y + m.m_omega / 2.0


def _ordered(scores: Iterable[Tuple[Modality, float]]) -> List[Tuple[Modality, float]]:
    items = [(Modality(mod), float(s)) for mod, s in scores]
    # stable, so repeated modalities keep their input order
    return sorted(items, key=lambda item: item[0].order)


def likelihood_ds(scores: Sequence[Tuple[Modality, float]],
                  config: FusionConfig) -> LikelihoodResult:
    items = _ordered(scores)
    if not items:
        raise EmptyScores("at least one modality score is required")
    current = MassFunction.vacuous()
    trace: List[float] = []
    for _, score in items:
        incoming = bpa_from_score(score, config)
        combined = combine_dempster(current, incoming, config)
        if isinstance(combined, ExtremeConflict):
            trace.append(min(1.0, combined.conflict))
            return LikelihoodResult(0.0, tuple(trace), True)
        trace.append(conflict(current, incoming))
        current = combined
    return LikelihoodResult(pignistic(current), tuple(trace), False)


def likelihood_linear(scores: Sequence[Tuple[Modality, float]],
                      config: FusionConfig) -> float:
    items = _ordered(scores)
    if not items:
        raise EmptyScores("at least one modality score is required")
    num = 0.0
    den = 0.0
    for modality, score in items:
        _check_score(score)
        if modality not in config.linear_weights:
            raise MissingWeight(f"no linear weight configured for {modality.value}")
        w = config.linear_weights[modality]
        num += w * score
        den += w
    if den == 0.0:
        raise MissingWeight("linear weights of the present modalities sum to zero")
    return num / den

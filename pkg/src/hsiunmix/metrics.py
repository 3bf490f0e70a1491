"""Evaluation metrics: reconstruction error, spectral angles, endmember
matching and factor congruence."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .tensor import frobenius

__all__ = [
    "rmse",
    "relative_error",
    "sad",
    "MatchResult",
    "match_endmembers",
    "factor_congruence",
    "EvalReport",
]


def rmse(t: np.ndarray, t_hat: np.ndarray) -> float:
    """Relative squared reconstruction error
    ``||t - t_hat||_F^2 / ||t||_F^2``.

    This is the squared-ratio convention used for reported percentages;
    see :func:`relative_error` for the unsquared variant.
    """
    t = np.asarray(t, dtype=float)
    t_hat = np.asarray(t_hat, dtype=float)
    if t.shape != t_hat.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {t_hat.shape}")
    norm = frobenius(t)
    if norm == 0:
        raise ValueError("reference tensor has zero norm")
    return (frobenius(t - t_hat) / norm) ** 2


def relative_error(t: np.ndarray, t_hat: np.ndarray) -> float:
    """Conventional relative error ``||t - t_hat||_F / ||t||_F``."""
    return float(np.sqrt(rmse(t, t_hat)))


def sad(e: np.ndarray, b: np.ndarray) -> float:
    """Spectral angle distance between two vectors, in degrees."""
    e = np.asarray(e, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    ne, nb = np.linalg.norm(e), np.linalg.norm(b)
    if ne == 0 or nb == 0:
        raise ValueError("spectral angle undefined for a zero vector")
    cosine = np.clip(e @ b / (ne * nb), -1.0, 1.0)
    return float(np.degrees(np.arccos(cosine)))


@dataclass
class MatchResult:
    """Column matching of estimated endmembers against references.

    ``nearest`` labels every estimated column with its closest reference
    (many columns may share one reference, the bundle case).
    ``permutation`` is the total-SAD-optimal one-to-one assignment,
    available only when the column counts agree.
    """

    nearest: list[int]
    nearest_sad: np.ndarray
    permutation: list[int] | None
    permutation_sad: np.ndarray | None


def match_endmembers(b: np.ndarray, reference: np.ndarray) -> MatchResult:
    """Match estimated endmember columns to reference columns by SAD."""
    b = np.atleast_2d(np.asarray(b, dtype=float))
    reference = np.atleast_2d(np.asarray(reference, dtype=float))
    if b.shape[0] != reference.shape[0]:
        raise ValueError(f"band counts differ: {b.shape[0]} vs {reference.shape[0]}")
    r, p = b.shape[1], reference.shape[1]
    table = np.array([[sad(b[:, i], reference[:, j]) for j in range(p)] for i in range(r)])

    nearest = [int(np.argmin(table[i])) for i in range(r)]
    nearest_sad = table[np.arange(r), nearest]

    permutation = permutation_sad = None
    if p == r:
        best = min(itertools.permutations(range(r)), key=lambda pm: table[np.arange(r), pm].sum())
        permutation = list(best)
        permutation_sad = table[np.arange(r), permutation]
    return MatchResult(nearest, nearest_sad, permutation, permutation_sad)


def factor_congruence(x: np.ndarray, y: np.ndarray, assignment) -> np.ndarray:
    """Cosine similarity of column i of ``x`` with column
    ``assignment[i]`` of ``y``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"row counts differ: {x.shape[0]} vs {y.shape[0]}")
    out = np.empty(x.shape[1])
    for i, j in enumerate(assignment):
        xi, yj = x[:, i], y[:, j]
        out[i] = xi @ yj / (np.linalg.norm(xi) * np.linalg.norm(yj))
    return out


@dataclass
class EvalReport:
    """Evaluation summary serialized by the CLI."""

    rmse: float | None = None
    rmse_percent: float | None = None
    relative_error: float | None = None
    columns: list[dict] = field(default_factory=list)
    elapsed_s: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "rmse_percent": self.rmse_percent,
            "relative_error": self.relative_error,
            "columns": self.columns,
            "elapsed_s": self.elapsed_s,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self) -> str:
        lines = []
        if self.rmse is not None:
            lines.append(f"rmse (squared ratio): {self.rmse:.6g} ({self.rmse_percent:.3f} %)")
            lines.append(f"relative error:       {self.relative_error:.6g}")
        if self.columns:
            lines.append(f"{'col':>4} {'label':>14} {'sad_deg':>9} {'congruence':>11}")
            for c in self.columns:
                cong = c.get("congruence")
                lines.append(
                    f"{c['column']:>4} {str(c.get('label', '-')):>14} "
                    f"{c['sad_deg']:>9.3f} {cong if cong is None else round(cong, 5)!s:>11}"
                )
        if self.elapsed_s is not None:
            lines.append(f"elapsed: {self.elapsed_s:.2f} s")
        return "\n".join(lines)

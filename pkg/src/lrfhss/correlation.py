"""Hamming correlation, gap and bound metrics for hopping sequences.

Scalar functions follow the textbook definitions with plain loops.  The family
report computes every pairwise, every-shift correlation at once: for each
channel ``c`` the indicator sequences of X and Y are cross-correlated with an
FFT, and summing over ``c`` gives ``H(X, Y; tau)`` for all tau.  Counts are
rounded back to integers, so the result is exact.  When the period is
shorter than the channel alphabet it is cheaper to compare shifted copies
directly, and :func:`correlation_tensor` does that instead.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, asdict
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from .families import FhSequence, FhsFamily


def _values(x) -> Tuple[int, ...]:
    return x.values if isinstance(x, FhSequence) else tuple(int(v) for v in x)


def hamming_correlation(x, y, tau: int) -> int:
    """Number of i with ``x[i] == y[(i + tau) mod L]``."""
    xv, yv = _values(x), _values(y)
    if len(xv) != len(yv):
        raise ValueError(f"period mismatch: {len(xv)} vs {len(yv)}")
    n = len(xv)
    return sum(xv[i] == yv[(i + tau) % n] for i in range(n))


def autocorrelation_stats(x) -> Tuple[int, Fraction]:
    """Peak and mean of ``H(X, X; tau)`` over the nonzero shifts."""
    xv = _values(x)
    n = len(xv)
    if n < 2:
        raise ValueError("autocorrelation needs period >= 2")
    hs = [hamming_correlation(xv, xv, t) for t in range(1, n)]
    return max(hs), Fraction(sum(hs), n - 1)


def crosscorrelation_stats(x, y) -> Tuple[int, Fraction]:
    """Peak and mean of ``H(X, Y; tau)`` over all shifts including zero."""
    xv, yv = _values(x), _values(y)
    if len(xv) != len(yv):
        raise ValueError(f"period mismatch: {len(xv)} vs {len(yv)}")
    n = len(xv)
    hs = [hamming_correlation(xv, yv, t) for t in range(n)]
    return max(hs), Fraction(sum(hs), n)


def minimum_gap(x) -> int:
    """Smallest |difference| between cyclically consecutive hops."""
    xv = _values(x)
    if len(xv) < 2:
        raise ValueError("gap needs period >= 2")
    return min(abs(xv[(i + 1) % len(xv)] - xv[i]) for i in range(len(xv)))


def channel_clearance(x) -> int:
    """Channels strictly between consecutive hops at the tightest step.

    This is the "minimal gap" figure quoted for Li-Fan constructions, one
    less than :func:`minimum_gap`.
    """
    return minimum_gap(x) - 1


def correlation_bound(period: int, channels: int, wide_gap: bool = False) -> int:
    """Lower bound on the peak autocorrelation of any sequence.

    ``ceil((L - e)(L + e - ell) / (ell (L - 1)))`` with ``e = L mod ell``; the
    wide-gap variant divides by ``ell (L - 3)``.
    """
    if channels < 1:
        raise ValueError("channel count must be positive")
    if period <= (3 if wide_gap else 1):
        raise ValueError(f"period {period} too short for this bound")
    eps = period % channels
    den = channels * (period - (3 if wide_gap else 1))
    num = (period - eps) * (period + eps - channels)
    return -(-num // den)


class NotWideGap(ValueError):
    pass


def is_optimal_wgfhs(x, channels: Optional[int] = None) -> bool:
    """True iff the peak autocorrelation meets the wide-gap bound.

    Raises :class:`NotWideGap` for sequences with a repeated consecutive hop.
    """
    if channels is None:
        if not isinstance(x, FhSequence):
            raise ValueError("channel count required for a bare value list")
        channels = x.channel_count
    if minimum_gap(x) == 0:
        raise NotWideGap("sequence repeats a frequency on consecutive hops")
    hmax, _ = autocorrelation_stats(x)
    return hmax == correlation_bound(len(_values(x)), channels, wide_gap=True)


# --------------------------------------------------------------------------
# vectorised family metrics

def _onehot(matrix: np.ndarray, channels: int) -> np.ndarray:
    m, n = matrix.shape
    onehot = np.zeros((m, channels, n))
    onehot[np.arange(m)[:, None], matrix, np.arange(n)[None, :]] = 1.0
    return onehot


def _onehot_spectrum(matrix: np.ndarray, channels: int) -> np.ndarray:
    return np.fft.fft(_onehot(matrix, channels), axis=2)


def _direct_tensor(a: np.ndarray, b: np.ndarray, block: int) -> np.ndarray:
    n = a.shape[1]
    out = np.empty((a.shape[0], b.shape[0], n), dtype=np.int32)
    for tau in range(n):
        shifted = np.roll(b, -tau, axis=1)  # shifted[:, i] = b[:, i + tau]
        for lo in range(0, a.shape[0], block):
            out[lo:lo + block, :, tau] = (a[lo:lo + block, None, :] == shifted[None]).sum(axis=2)
    return out


def _fft_tensor(a: np.ndarray, b: np.ndarray, channels: int, block: int) -> np.ndarray:
    n = a.shape[1]
    # indicators are real, so the half spectrum suffices
    fb = np.fft.rfft(_onehot(b, channels), axis=2).transpose(2, 1, 0)  # (k, c, b)
    fb = np.ascontiguousarray(fb)
    out = np.empty((a.shape[0], b.shape[0], n), dtype=np.int32)
    for lo in range(0, a.shape[0], block):
        fa = np.fft.rfft(_onehot(a[lo:lo + block], channels), axis=2).transpose(2, 0, 1)
        # sum_c sum_i xa[i] xb[i+tau]  ->  ifft(conj(FA) * FB) summed over c
        spec = np.matmul(np.conj(fa), fb).transpose(1, 2, 0)
        out[lo:lo + block] = np.rint(np.fft.irfft(spec, n=n, axis=2))
    return out


def correlation_tensor(a: np.ndarray, b: np.ndarray, channels: int,
                       block: int = 32, method: str = "auto") -> np.ndarray:
    """``out[i, j, tau] = H(a_i, b_j; tau)`` as int32, all pairs, all shifts.

    ``method="direct"`` compares shifted copies (cost ~ L^2 per pair) and
    ``"fft"`` correlates channel indicators (cost ~ L * channels per pair);
    ``"auto"`` takes the cheaper one.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError("period mismatch")
    if method == "auto":
        method = "direct" if a.shape[1] <= channels else "fft"
    if method == "direct":
        return _direct_tensor(a, b, block)
    if method == "fft":
        return _fft_tensor(a, b, channels, block)
    raise ValueError(f"unknown method {method!r}")


def autocorrelation_profile(matrix: np.ndarray, channels: int) -> np.ndarray:
    """``out[i, tau] = H(x_i, x_i; tau)``."""
    f = _onehot_spectrum(np.asarray(matrix), channels)
    power = (np.conj(f) * f).sum(axis=1)
    return np.rint(np.fft.ifft(power, axis=1).real).astype(np.int32)


@dataclass(frozen=True)
class CorrelationReport:
    family_name: str
    size: int
    length: int
    avg_max_cc: Optional[float]
    avg_avg_cc: Optional[float]
    avg_max_ac: float
    avg_avg_ac: float

    def as_row(self, digits: int = 3) -> dict:
        row = asdict(self)
        for k, v in row.items():
            if isinstance(v, float):
                row[k] = round(v, digits)
        return row


def family_report(family: FhsFamily, prefix_length: Optional[int] = None) -> CorrelationReport:
    """Family averages of peak/mean auto- and cross-correlation.

    Cross metrics average over the M(M-1) ordered pairs of distinct members
    and are ``None`` for single-sequence families.
    """
    if prefix_length is not None:
        family = family.truncated(prefix_length)
    mat = family.as_array()
    m, n = mat.shape
    ell = family.channel_count
    if n >= 2:
        ac = autocorrelation_profile(mat, ell)[:, 1:]
        avg_max_ac = float(ac.max(axis=1).mean())
        avg_avg_ac = float(ac.mean(axis=1).mean())
    else:
        avg_max_ac = avg_avg_ac = float("nan")
    avg_max_cc = avg_avg_cc = None
    if m >= 2:
        h = correlation_tensor(mat, mat, ell)
        off = ~np.eye(m, dtype=bool)
        avg_max_cc = float(h.max(axis=2)[off].mean())
        avg_avg_cc = float(h.mean(axis=2)[off].mean())
    return CorrelationReport(family.name, m, n, avg_max_cc, avg_avg_cc,
                             avg_max_ac, avg_avg_ac)


SUMMARY_FIELDS = ("family", "size", "avg_max_cc", "avg_avg_cc", "avg_max_ac", "avg_avg_ac")
SWEEP_FIELDS = ("family", "length", "avg_max_cc", "avg_avg_cc")


def _fmt(v) -> str:
    return "" if v is None else f"{v:.3f}"


def summary_csv(reports: Sequence[CorrelationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for r in reports:
        w.writerow([r.family_name, r.size, _fmt(r.avg_max_cc), _fmt(r.avg_avg_cc),
                    _fmt(r.avg_max_ac), _fmt(r.avg_avg_ac)])
    return buf.getvalue()


def sweep_csv(reports: Sequence[CorrelationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for r in reports:
        w.writerow([r.family_name, r.length, _fmt(r.avg_max_cc), _fmt(r.avg_avg_cc)])
    return buf.getvalue()

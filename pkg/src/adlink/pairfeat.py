"""Pairwise feature vectors for the match classifier.

The schema is fixed-order and versioned; every feature is symmetric in the
pair, so per-ad scalars enter as (min, max) and per-ad presence flags as
(both, either). ``PairFeaturizer`` caches per-ad derived values (token sets,
codepoint arrays, presence flags) so scoring many candidate pairs does not
re-tokenize.
"""

from __future__ import annotations

from datetime import datetime, timezone

import numpy as np

from .corpus import Ad
from .extract import FieldSet, special_char_count, tokenize
from .surrogate import jaccard_unigram

__all__ = [
    "FEATURE_NAMES",
    "SCHEMA_VERSION",
    "longest_common_substring",
    "compute_pair_features",
    "PairFeaturizer",
]

SCHEMA_VERSION = "pair/1"

FEATURE_NAMES = (
    "same_state",
    "same_city",
    "special_chars_min",
    "special_chars_max",
    "lcs_len",
    "unique_tokens",
    "jaccard_unigram",
    "time_diff_seconds",
    "same_day",
    "shared_images",
    "ethnicity_flag_min",
    "ethnicity_flag_max",
    "cost_flag_min",
    "cost_flag_max",
    "restriction_flag_min",
    "restriction_flag_max",
    "name_flag_min",
    "name_flag_max",
    "shared_name",
    "shared_cost",
)

# Texts are truncated before the LCS scan; quadratic cost needs a lid.
LCS_MAX_CHARS = 2000


def _codepoints(text: str, limit: int = LCS_MAX_CHARS) -> np.ndarray:
    clipped = text[:limit]
    return np.fromiter(map(ord, clipped), dtype=np.int32, count=len(clipped))


def longest_common_substring(a: str, b: str, max_chars: int = LCS_MAX_CHARS) -> int:
    """Length of the longest contiguous shared substring, codepoint-wise."""
    return _lcs_arrays(_codepoints(a, max_chars), _codepoints(b, max_chars))


def _lcs_arrays_numpy(xs: np.ndarray, ys: np.ndarray) -> int:
    """Rolling-row DP; the fallback when the jit kernel is unavailable."""
    if len(xs) == 0 or len(ys) == 0:
        return 0
    if len(xs) < len(ys):
        xs, ys = ys, xs  # iterate over the shorter string
    best = 0
    prev = np.zeros(len(xs) + 1, dtype=np.int32)
    cur = np.zeros(len(xs) + 1, dtype=np.int32)
    for ch in ys:
        np.add(prev[:-1], 1, out=cur[1:])
        cur[1:] *= xs == ch
        m = int(cur.max())
        if m > best:
            best = m
        prev, cur = cur, prev
    return best


try:  # scoring runs LCS on every candidate pair; the jit kernel is ~15x faster
    from numba import njit as _njit

    @_njit(cache=True)
    def _lcs_kernel(xs, ys):  # pragma: no cover - exercised via _lcs_arrays
        n = xs.shape[0]
        m = ys.shape[0]
        prev = np.zeros(m + 1, dtype=np.int32)
        cur = np.zeros(m + 1, dtype=np.int32)
        best = 0
        for i in range(n):
            x = xs[i]
            for j in range(m):
                if ys[j] == x:
                    v = prev[j] + 1
                    cur[j + 1] = v
                    if v > best:
                        best = v
                else:
                    cur[j + 1] = 0
            prev, cur = cur, prev
        return best

    def _lcs_arrays(xs: np.ndarray, ys: np.ndarray) -> int:
        if len(xs) == 0 or len(ys) == 0:
            return 0
        return int(_lcs_kernel(xs, ys))

except ImportError:  # pragma: no cover
    _lcs_arrays = _lcs_arrays_numpy


def _utc_date(epoch: int):
    return datetime.fromtimestamp(epoch, tz=timezone.utc).date()


class _AdView:
    """Per-ad derived values, computed once."""

    __slots__ = (
        "state", "city", "posted_at", "date", "special", "tokens",
        "codepoints", "images", "names", "costs", "has_ethnicity",
        "has_cost", "has_restriction", "has_name",
    )

    def __init__(self, ad: Ad, fs: FieldSet):
        self.state = ad.state
        self.city = ad.city
        self.posted_at = ad.posted_at
        self.date = _utc_date(ad.posted_at)
        self.special = special_char_count(ad.text)
        self.tokens = frozenset(tokenize(ad.text)[0])
        self.codepoints = _codepoints(ad.text)
        self.images = ad.image_hashes
        self.names = frozenset(fs.names)
        self.costs = frozenset(fs.costs)
        self.has_ethnicity = 1.0 if fs.ethnicities else 0.0
        self.has_cost = 1.0 if fs.costs else 0.0
        self.has_restriction = 1.0 if fs.restrictions else 0.0
        self.has_name = 1.0 if fs.names else 0.0


def _pair_vector(vi: _AdView, vj: _AdView) -> np.ndarray:
    out = np.empty(len(FEATURE_NAMES), dtype=np.float64)
    out[0] = 1.0 if (vi.state and vi.state == vj.state) else 0.0
    out[1] = 1.0 if (vi.city and vi.city == vj.city) else 0.0
    out[2] = min(vi.special, vj.special)
    out[3] = max(vi.special, vj.special)
    out[4] = _lcs_arrays(vi.codepoints, vj.codepoints)
    out[5] = len(vi.tokens | vj.tokens)
    out[6] = jaccard_unigram(vi.tokens, vj.tokens)
    out[7] = abs(vi.posted_at - vj.posted_at)
    out[8] = 1.0 if vi.date == vj.date else 0.0
    out[9] = len(vi.images & vj.images)
    out[10] = min(vi.has_ethnicity, vj.has_ethnicity)
    out[11] = max(vi.has_ethnicity, vj.has_ethnicity)
    out[12] = min(vi.has_cost, vj.has_cost)
    out[13] = max(vi.has_cost, vj.has_cost)
    out[14] = min(vi.has_restriction, vj.has_restriction)
    out[15] = max(vi.has_restriction, vj.has_restriction)
    out[16] = min(vi.has_name, vj.has_name)
    out[17] = max(vi.has_name, vj.has_name)
    out[18] = 1.0 if vi.names & vj.names else 0.0
    out[19] = 1.0 if vi.costs & vj.costs else 0.0
    return out


def compute_pair_features(ad_i: Ad, ad_j: Ad, fields_i: FieldSet, fields_j: FieldSet) -> np.ndarray:
    """Feature vector for one pair, ordered per FEATURE_NAMES. Symmetric."""
    return _pair_vector(_AdView(ad_i, fields_i), _AdView(ad_j, fields_j))


class PairFeaturizer:
    """Computes pair features with per-ad caching.

    Build once per corpus slice, then call :meth:`features` for each pair
    or :meth:`matrix` for a batch. Read-only after construction.
    """

    def __init__(self, ads_by_id: dict[str, Ad], fieldsets: dict[str, FieldSet]):
        self._views: dict[str, _AdView] = {}
        for ad_id, ad in ads_by_id.items():
            fs = fieldsets.get(ad_id)
            if fs is None:
                fs = FieldSet()
            self._views[ad_id] = _AdView(ad, fs)

    def features(self, id_i: str, id_j: str) -> np.ndarray:
        return _pair_vector(self._views[id_i], self._views[id_j])

    def matrix(self, pairs) -> np.ndarray:
        rows = [self.features(i, j) for i, j in pairs]
        if not rows:
            return np.empty((0, len(FEATURE_NAMES)), dtype=np.float64)
        return np.vstack(rows)

"""Seeded synthetic campaign-data generator.

Produces a predictor table plus a good/bad column whose missingness
encodes non-response, mirroring the real data's layout: responders are
the top slice of a feature-driven score (so the class fractions land
exactly on the requested values at any n), and delinquency among
responders follows a second feature-driven score.

Informative features come in correlated pairs that share a latent
factor, giving the variable-clustering stage real structure to find: a
pair forms one cluster and either member works as its representative.
The xor nonlinearity mixes a moderate linear latent signal (strong
enough per-variable to clear an IV screen) with sign-product
interactions across every latent pair, which a linear model cannot
represent but boosted trees recover from any surviving subset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cleanse import TABLE_CODES
from .errors import ConfigError
from .table import Column, Table

LINEAR = "linear"
XOR = "xor"

# within-pair correlation of informative features (shared-latent loading)
LATENT_RHO = 0.75
# score mixing: linear latent slope, per-feature sign step, pairwise-sign
# interaction scale (normalized to roughly unit variance), observation noise
LIN_COEF = 0.9
LIN_NOISE_SD = 1.0
XOR_LINEAR_COEF = 0.2
XOR_STEP_COEF = 0.5
XOR_PAIR_COEF = 3.2
XOR_NOISE_SD = 0.35


@dataclass(frozen=True)
class SyntheticSpec:
    n_rows: int
    n_features: int = 30
    n_informative: int = 10
    nonlinearity: str = LINEAR
    coded_rate: float = 0.0
    missing_rate: float = 0.0
    responder_frac: float = 0.248
    bad_frac_among_responders: float = 0.373
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 10:
            raise ConfigError("n_rows must be >= 10")
        if self.n_informative > self.n_features:
            raise ConfigError(
                f"n_informative={self.n_informative} exceeds n_features={self.n_features}"
            )
        if self.n_informative < 2:
            raise ConfigError("n_informative must be >= 2")
        if self.nonlinearity not in (LINEAR, XOR):
            raise ConfigError(f"nonlinearity must be linear|xor, got {self.nonlinearity!r}")
        for name in ("responder_frac", "bad_frac_among_responders"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ConfigError(f"{name} must be in (0, 1), got {v}")
        for name in ("coded_rate", "missing_rate"):
            v = getattr(self, name)
            if not (0.0 <= v < 1.0):
                raise ConfigError(f"{name} must be in [0, 1), got {v}")


def _latent_block(rng, n: int, k: int):
    """k unit-variance features loading pairwise on ceil(k/2) latents."""
    m = (k + 1) // 2
    U = rng.standard_normal((n, m))
    E = rng.standard_normal((n, k))
    a = math.sqrt(LATENT_RHO)
    b = math.sqrt(1.0 - LATENT_RHO)
    X = np.empty((n, k))
    for j in range(k):
        X[:, j] = a * U[:, j // 2] + b * E[:, j]
    return X, U


def _scores(U: np.ndarray, Xi: np.ndarray, nonlinearity: str, rng,
            reverse: bool = False) -> np.ndarray:
    """Latent plus observed-feature score; `reverse` permutes the weights
    so the delinquency outcome relates to, but differs from, the response.

    The xor form adds a per-feature sign step (sharpens every variable's
    marginal relation, which binning captures crisply) and sign-product
    interactions over every observed feature pair, so interactions remain
    visible to trees through any subset the selection stages keep.
    """
    n, m = U.shape
    k = Xi.shape[1]
    Uw = U[:, ::-1] if reverse else U
    Xw = Xi[:, ::-1] if reverse else Xi
    lat_signs = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    if nonlinearity == LINEAR:
        lin = Uw @ (LIN_COEF * lat_signs)
        return lin + LIN_NOISE_SD * rng.standard_normal(n)
    feat_signs = np.array([lat_signs[min(j // 2, m - 1)] for j in range(k)])
    sx = np.sign(Xw)
    lin = Uw @ (XOR_LINEAR_COEF * lat_signs) + XOR_STEP_COEF * (sx @ feat_signs)
    # interactions act on latent sign aggregates (sum of the twins'
    # signs), so either member of a pair recovers them after the other
    # is dropped by clustering, and no single feature has a marginal
    # leak. The +-1 pattern is fixed (non-factorizable: a pattern of the
    # form f(a)g(b) would collapse the sum into one linear combination).
    m_lat = (k + 1) // 2
    S = _interaction_pattern(m_lat)
    agg = np.zeros((n, m_lat))
    for a in range(m_lat):
        agg[:, a] = sx[:, 2 * a]
        if 2 * a + 1 < k:
            agg[:, a] = (agg[:, a] + sx[:, 2 * a + 1]) / math.sqrt(
                2.0 * (1.0 + _SIGN_AGREEMENT)
            )
    inter = np.zeros(n)
    n_pairs = 0
    for a in range(m_lat - 1):
        for b in range(a + 1, m_lat):
            inter += S[a, b] * agg[:, a] * agg[:, b]
            n_pairs += 1
    inter /= math.sqrt(max(n_pairs, 1))
    return lin + XOR_PAIR_COEF * inter + XOR_NOISE_SD * rng.standard_normal(n)


# corr(sign(x_j), sign(x_twin)) for the within-pair loading: used to
# normalize latent sign aggregates to roughly unit variance
_SIGN_AGREEMENT = 2.0 / math.pi * math.asin(LATENT_RHO)


def _interaction_pattern(m: int) -> np.ndarray:
    """Fixed symmetric +-1 pattern over latent pairs."""
    rng = np.random.default_rng(90210)
    S = np.zeros((m, m))
    for a in range(m - 1):
        for b in range(a + 1, m):
            s = -1.0 if rng.random() < 0.5 else 1.0
            S[a, b] = S[b, a] = s
    return S


def _top_slice(scores: np.ndarray, count: int) -> np.ndarray:
    """Boolean mask of the `count` largest scores; ties broken by index."""
    order = np.argsort(-scores, kind="stable")
    mask = np.zeros(scores.size, dtype=bool)
    mask[order[:count]] = True
    return mask


def generate_synthetic(spec: SyntheticSpec) -> Table:
    rng = np.random.default_rng(spec.seed)
    n, p, k = spec.n_rows, spec.n_features, spec.n_informative
    X = rng.standard_normal((n, p))
    X[:, :k], U = _latent_block(rng, n, k)

    Xi = X[:, :k]
    z_resp = _scores(U, Xi, spec.nonlinearity, rng)
    n_resp = int(round(n * spec.responder_frac))
    responder = _top_slice(z_resp, n_resp)

    z_bad = _scores(U, Xi, spec.nonlinearity, rng, reverse=True)
    n_bad = int(round(n_resp * spec.bad_frac_among_responders))
    resp_idx = np.flatnonzero(responder)
    bad_idx = resp_idx[_top_slice(z_bad[resp_idx], n_bad)]

    goodbad = np.full(n, np.nan)
    goodbad[responder] = 0.0
    goodbad[bad_idx] = 1.0

    # sentinel and missing injection into predictors only
    codes = np.array(sorted(TABLE_CODES), dtype=np.float64)
    coded_mask = (
        rng.random((n, p)) < spec.coded_rate
        if spec.coded_rate > 0
        else np.zeros((n, p), dtype=bool)
    )
    if coded_mask.any():
        X[coded_mask] = rng.choice(codes, size=int(coded_mask.sum()))
    missing_mask = (
        rng.random((n, p)) < spec.missing_rate
        if spec.missing_rate > 0
        else np.zeros((n, p), dtype=bool)
    )

    width = len(str(p - 1))
    cols = [
        Column(f"x{j:0{width}d}", X[:, j], missing_mask[:, j]) for j in range(p)
    ]
    cols.append(Column("goodbad", goodbad, np.isnan(goodbad)))
    entry = (
        f"generate_synthetic n={n} features={p} informative={k}"
        f" nonlinearity={spec.nonlinearity} coded_rate={spec.coded_rate}"
        f" missing_rate={spec.missing_rate} responder_frac={spec.responder_frac}"
        f" bad_frac={spec.bad_frac_among_responders} seed={spec.seed}"
    )
    return Table(tuple(cols), n, (entry,))

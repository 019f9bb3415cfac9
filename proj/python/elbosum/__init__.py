"""Exponential-family variational learning.

EM fitting of five generative model families (sigmoid belief networks,
linear-Gaussian models with scalar or diagonal noise, exponential-family
mixtures, Poisson mixtures), numerical verification that the ELBO equals the
three-term entropy sum at stationary points, and a finite-difference prover
for the natural-parameterization criterion that guarantees the equality.

This package is a thin wrapper over the compiled ``_core`` extension: models,
fit reports, verdicts, and certificates are plain dicts matching the CLI's
JSON artifacts, and datasets travel as JSONL strings so artifacts round-trip
byte for byte between Python and the command line.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from elbosum import _core

__all__ = [
    "sample",
    "dataset_rows",
    "fit",
    "verify",
    "verify_fit",
    "decomposition",
    "certify",
    "fit_ppca",
]


def _dump_model(model: dict[str, Any]) -> str:
    return json.dumps(model)


def sample(model: dict[str, Any], n: int, seed: int) -> str:
    """Draw ``n`` i.i.d. rows from the generative model.

    Returns the dataset as a JSONL string (header line, then one ``{"x":
    [...]}`` record per row), identical to the artifact ``elbosum gen``
    writes with the same seed.
    """
    return _core.sample(_dump_model(model), n, seed)


def dataset_rows(data_jsonl: str) -> list[list[float]]:
    """Data rows of a JSONL dataset, header line excluded."""
    lines = [line for line in data_jsonl.splitlines() if line.strip()]
    return [json.loads(line)["x"] for line in lines[1:]]


def fit(
    model: dict[str, Any],
    data_jsonl: str,
    seed: Optional[int] = None,
    max_iters: int = 2000,
    tol_elbo: float = 1e-10,
    tol_grad: float = 1e-8,
    threads: int = 1,
) -> dict[str, Any]:
    """Run EM to a stationary point of the ELBO; returns the fit report.

    With ``seed`` the fit starts from a reproducible data-driven
    initialization; without it, from ``model``'s own parameters.
    """
    return json.loads(
        _core.fit(_dump_model(model), data_jsonl, seed, max_iters, tol_elbo, tol_grad, threads)
    )


def verify(
    model: dict[str, Any],
    data_jsonl: str,
    seed: Optional[int] = None,
    tol_eq: float = 1e-6,
    max_iters: int = 2000,
    tol_elbo: float = 1e-10,
    tol_grad: float = 1e-8,
    threads: int = 1,
) -> dict[str, Any]:
    """Fit, then check elbo == entropy_sum at the stationary point.

    Returns ``{"fit": <fit report>, "verdict": <verdict>}``; the verdict
    passes iff EM converged and the relative gap is at most ``tol_eq``.
    """
    return json.loads(
        _core.verify(
            _dump_model(model), data_jsonl, seed, tol_eq, max_iters, tol_elbo, tol_grad, threads
        )
    )


def verify_fit(fit_report: dict[str, Any], data_jsonl: str, tol_eq: float = 1e-6) -> dict[str, Any]:
    """Verdict for an existing fit report, without refitting."""
    return json.loads(_core.verify_fit(json.dumps(fit_report), data_jsonl, tol_eq))


def decomposition(model: dict[str, Any], data_jsonl: str) -> dict[str, Any]:
    """ELBO and the three-term entropy sum at exact posteriors.

    Returns ``{"elbo", "pseudo_elbo", "entropy_sum"}`` where ``entropy_sum``
    holds the mean variational entropy, prior entropy, expected observable
    entropy, their signed total, and whether pseudo-entropies were used.
    """
    return json.loads(_core.decomposition(_dump_model(model), data_jsonl))


def certify(
    model: dict[str, Any],
    draws: int = 50,
    z_samples: int = 64,
    seed: int = 0,
    tol: float = 1e-8,
) -> dict[str, Any]:
    """Prove the parameterization criterion at sampled parameter points.

    Returns ``{"all_pass": bool, "certificates": [...]}`` with one
    certificate (both Jacobian conditions) per parameter draw.
    """
    return json.loads(_core.certify(_dump_model(model), draws, z_samples, seed, tol))


def fit_ppca(data_jsonl: str, h_dims: int) -> dict[str, Any]:
    """Closed-form probabilistic-PCA fit.

    Returns ``{"model", "clamped", "stationary_elbo"}``; ``stationary_elbo``
    is the closed-form ELBO value the verification equality reproduces.
    """
    return json.loads(_core.fit_ppca(data_jsonl, h_dims))

"""Hot particle kernels with a switchable backend.

``SMCFORECAST_BACKEND=numpy`` forces the pure numpy path; otherwise the
numba path is used whenever numba imports.  The choice is fixed at import
time and reported by :data:`BACKEND`.
"""
import os

from . import _numpy

_requested = os.environ.get("SMCFORECAST_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"SMCFORECAST_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

_impl = _numpy
BACKEND = "numpy"
if _requested == "numba":
    try:
        from . import _numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass
    else:
        _impl = _numba
        BACKEND = "numba"

EXP_CLAMP = _numpy.EXP_CLAMP

logsumexp = _impl.logsumexp
sv_initial = _impl.sv_initial
sv_transition_mean = _impl.sv_transition_mean
sv_propagate = _impl.sv_propagate
sv_obs_logpdf = _impl.sv_obs_logpdf
multinomial_indices = _impl.multinomial_indices
reweight_resample = _impl.reweight_resample
sv_bootstrap_loglik = _impl.sv_bootstrap_loglik

__all__ = [
    "BACKEND",
    "EXP_CLAMP",
    "logsumexp",
    "sv_initial",
    "sv_transition_mean",
    "sv_propagate",
    "sv_obs_logpdf",
    "multinomial_indices",
    "reweight_resample",
    "sv_bootstrap_loglik",
]

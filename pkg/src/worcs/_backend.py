"""Backend selection: compiled kernels if available, numpy otherwise.

Set ``WORCS_BACKEND=python`` to force the fallback (useful for the
backend-parity tests and the benchmark), or ``WORCS_BACKEND=cython`` to
fail loudly when the extension is missing.
"""

import os

from . import _ref

_requested = os.environ.get("WORCS_BACKEND", "").lower()

if _requested == "python":
    _impl = _ref
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _ref

BACKEND_NAME = _impl.BACKEND_NAME

SCHED_CONSTANT = _ref.SCHED_CONSTANT
SCHED_FIXED_OPT = _ref.SCHED_FIXED_OPT
SCHED_HOEFFDING_SPREAD = _ref.SCHED_HOEFFDING_SPREAD
SCHED_EB_T0 = _ref.SCHED_EB_T0
SCHED_EB_SPREAD = _ref.SCHED_EB_SPREAD
SCHED_EB_CI = _ref.SCHED_EB_CI
SCHED_CUSTOM = _ref.SCHED_CUSTOM

lgamma_table = _impl.lgamma_table
log_choose_grid = _impl.log_choose_grid
ppr_log_ratio_grid = _impl.ppr_log_ratio_grid
ppr_point_trace = _impl.ppr_point_trace
betabin_logpmf = _impl.betabin_logpmf
bounded_trace = _impl.bounded_trace

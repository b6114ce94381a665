"""Hot loops for the phase retrieval oracle.

The Cython build is used when importable; otherwise, or when the environment
variable ``PROXGUIDE_PURE_PYTHON`` is set to a non-empty value other than
``0``, the pure-numpy fallback is selected. ``BACKEND`` names the choice.
"""
import os

from . import _pykernels as python

compiled = None
if os.environ.get("PROXGUIDE_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

pssm_phase = _impl.pssm_phase
sgd_phase = _impl.sgd_phase

__all__ = ["BACKEND", "compiled", "pssm_phase", "python", "sgd_phase"]

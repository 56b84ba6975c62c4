"""Quantum proximal policy optimization on a statevector simulator.

The heavy lifting lives in the compiled ``_qppo`` extension; this package
re-exports its surface. When the extension is installed next to this file
(wheel layout) it is imported relative, otherwise from sys.path (in-tree
CMake builds).
"""

try:
    from ._qppo import *  # noqa: F401,F403
    from ._qppo import __doc__ as _doc
except ImportError:  # pragma: no cover - in-tree build layout
    from _qppo import *  # noqa: F401,F403
    from _qppo import __doc__ as _doc

__doc__ = _doc or __doc__

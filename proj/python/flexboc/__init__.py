"""FlexBOC two-way time transfer simulator.

Thin package wrapper around the compiled extension; everything public
lives in the C++ module.
"""

from ._flexboc import *  # noqa: F401,F403
from ._flexboc import __doc__ as _ext_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__doc__ = __doc__ if _ext_doc is None else _ext_doc

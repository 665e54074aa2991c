"""Python access to the twinforge C++ core."""

from ._twinforge import *  # noqa: F401,F403
from ._twinforge import __doc__  # noqa: F401

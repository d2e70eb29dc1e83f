"""Generating functionals of Lévy processes on compact quantum groups.

Functionals are stored as characteristic matrices ``phi^(s) = [phi(u^(s)_jk)]``
on the irreducible corepresentations of O_N^+, SU_q(2) or a discrete group
algebra.  Submodules: ``core`` (blocks, convolution, involutions), ``models``,
``generators``, ``symmetry``, ``spectral`` and ``cli``.
"""

from .core import *  # noqa: F401,F403
from .generators import *  # noqa: F401,F403
from .models import *  # noqa: F401,F403
from .spectral import *  # noqa: F401,F403
from .symmetry import *  # noqa: F401,F403
from . import core, generators, models, spectral, symmetry  # noqa: F401

__version__ = "0.1.0"

"""mmsplab: a verification and simulation lab for linear secret sharing and
symmetric PIR over finite fields, classical and quantum, unified through
multi-target monotone span programs with symplectic structure."""

__version__ = "0.1.0"

from .fields import FieldCtx, field_build, tower_build  # noqa: F401
from .linalg import MatGF, VecGF  # noqa: F401

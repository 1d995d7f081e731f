"""Toolchain for multiparty session types with explicit connection actions.

Parse protocols and actor programs, project global types, model-check safety
and progress over typing environments, typecheck actors and run programs in a
seeded simulator with discovery, replacement and failure propagation.
"""

__version__ = "0.1.0"

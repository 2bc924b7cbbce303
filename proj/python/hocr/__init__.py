"""Symbolic-numeric reduction toolkit for scaling-symmetric higher-order
Lagrangian systems.

The heavy lifting lives in the compiled extension ``_hocr``; this package
re-exports its surface:

- :func:`catalog` -- names of the built-in models.
- :class:`Model` -- load a catalog model or a definition file, inspect the
  reduction artifacts, integrate either side, and run the verification suite.
- :exc:`ModelError`, :exc:`IntegrationError`.
"""

try:  # installed layout: the extension sits inside the package
    from ._hocr import IntegrationError, Model, ModelError, catalog
except ImportError:  # build-tree layout: the extension is on sys.path
    from _hocr import IntegrationError, Model, ModelError, catalog

__all__ = ["Model", "ModelError", "IntegrationError", "catalog"]

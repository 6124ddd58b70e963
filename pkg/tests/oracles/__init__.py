"""Independent reference implementations used only to cross-check the library.

Nothing in src/ may import from this package; each oracle deliberately uses a
different algorithm or a different underlying library than the code under test.
"""

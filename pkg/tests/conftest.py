import os
import sys

try:
    import pdkkit  # noqa: F401
except ImportError:
    # allow running the suite from a fresh checkout without installing;
    # the compiled kernel is then absent and the pure fallback is used
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

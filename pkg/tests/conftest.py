import os
import sys

try:
    import rankzo  # noqa: F401
except ImportError:  # running from a source checkout without installing
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import os
import sys

# make the oracle helpers and gradcheck harness importable from any test
sys.path.insert(0, os.path.dirname(__file__))

"""Run the acceptance suite and print one verdict line per criterion."""

import os
import sys

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))

if __name__ == "__main__":
    sys.exit(pytest.main([os.path.join(HERE, os.pardir, "tests", "test_acceptance.py"), "-q"]))

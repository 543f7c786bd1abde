"""
Unit and regression test for the omega package.
"""

# Import package, test suite, and other packages as needed
import sys

import omega


def test_omega_imported():
    """Sample test, will always pass so long as import statement worked."""
    assert "omega" in sys.modules


def test_version_is_a_string():
    assert isinstance(omega.__version__, str) and omega.__version__

"""Variational excited states of model Hamiltonians with the Omega_n functional."""

try:
    from omega._version import __version__
except ImportError:
    __version__ = "1+unknown"

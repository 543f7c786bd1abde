"""
Unit and regression tests for the omega package.
"""

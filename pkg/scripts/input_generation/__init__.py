"""
Test Input Generation Package.

This package contains the typed value model of test inputs, the similarity
measure between tests, and the type-aware mutation engine that synthesizes
near-miss passing tests from a failing one.
"""

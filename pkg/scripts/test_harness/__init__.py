"""
Test Harness Package.

Runs the target's tests through an external adapter process that speaks JSON
over stdin/stdout, and defines the test-case and verdict types shared by the
rest of the pipeline.
"""

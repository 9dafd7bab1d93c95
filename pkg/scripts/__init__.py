"""
Pairfix: conversational program repair that prompts a language model with
failing tests paired against very similar passing tests.
"""

__version__ = '0.1.0'

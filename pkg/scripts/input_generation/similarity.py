"""
Damerau-Levenshtein distance and the normalized test similarity.
"""

from .values import sim_text


def dl_distance(string_1: str, string_2: str) -> int:
    """
    Optimal-string-alignment Damerau-Levenshtein distance.

    Counts insertions, deletions, substitutions and adjacent transpositions,
    with no substring edited more than once. Works on Unicode scalars.

    Usage::

        >>> dl_distance('kitten', 'sitting')
        3
        >>> dl_distance('ca', 'ac')
        1
        >>> dl_distance('CA', 'ABC')
        3
    """
    if string_1 == string_2:
        return 0

    len_1 = len(string_1)
    len_2 = len(string_2)
    if len_1 == 0:
        return len_2
    if len_2 == 0:
        return len_1

    # rows i-2, i-1 and i of the DP table
    two_back = None
    prev = list(range(len_2 + 1))
    for i in range(1, len_1 + 1):
        row = [i] + [0] * len_2
        c1 = string_1[i - 1]
        for j in range(1, len_2 + 1):
            c2 = string_2[j - 1]
            cost = 0 if c1 == c2 else 1
            best = min(prev[j] + 1,         # deletion
                       row[j - 1] + 1,      # insertion
                       prev[j - 1] + cost)  # substitution
            if (i > 1 and j > 1 and c1 == string_2[j - 2]
                    and string_1[i - 2] == c2):
                best = min(best, two_back[j - 2] + 1)  # transposition
            row[j] = best
        two_back, prev = prev, row
    return prev[len_2]


def text_similarity(text_1: str, text_2: str) -> float:
    """1 - d / max(len) on two texts; two empty texts are identical (1.0)."""
    longest = max(len(text_1), len(text_2))
    if longest == 0:
        return 1.0
    return 1.0 - dl_distance(text_1, text_2) / longest


def delta(fail_case, pass_case) -> float:
    """
    Similarity of two test cases, computed on the sim_text of their parameters.

    Args:
        fail_case: failing TestCase
        pass_case: passing TestCase

    Returns:
        float in [0, 1]; 1.0 for identical parameters
    """
    return text_similarity(sim_text(fail_case.params), sim_text(pass_case.params))

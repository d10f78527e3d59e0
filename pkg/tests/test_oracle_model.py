"""Contract vs. reference-model equivalence on randomized op sequences.

The full 1000-sequence run lives in the acceptance suite; this keeps a
quicker sweep in the regular suite so regressions surface early.
"""

from oracle import run_equivalence_sequence


def test_randomized_sequences_match_reference_model():
    totals = {"applied": 0, "rejected": 0}
    for seed in range(150):
        stats = run_equivalence_sequence(seed, n_ops=200)
        totals["applied"] += stats["applied"]
        totals["rejected"] += stats["rejected"]
    # the generator must exercise both accepted and rejected paths heavily
    assert totals["applied"] > 2000
    assert totals["rejected"] > 2000


def test_sequences_are_reproducible():
    assert run_equivalence_sequence(42) == run_equivalence_sequence(42)
